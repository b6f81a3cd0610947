"""Handshake state machines for the advertised transaction service.

Both sides are pure transition functions: they take a state plus the current
time, and return a new state together with the transmissions and timers the
engine must schedule. Timer staleness is resolved by value: a timer event is
acted on only if its fire time still equals the deadline stored in the state,
so cancelled timers are absorbed without bookkeeping.

Vehicle side (OBU): a SAM must have been stored before the trigger-line SUM
can be sent. A vehicle that crosses the trigger before hearing any SAM defers
its first SUM until the first SAM reception afterwards. Retries repeat every
t_sum until an ACK naming this vehicle arrives. Retries are unbounded;
failure is declared externally at despawn or simulation end.

RSU side: pending requesters accumulate in arrival order. An ACK naming all
of them is sent when the batch reaches b_ack entries or when t_ack elapses
after the first entry of the batch. A retransmitted SUM from an
already-pending vehicle does not duplicate its entry.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .core import Message, MessageKind, RSU_ID, TimeMs


class ProtocolError(RuntimeError):
    """Contract violation in the handshake (e.g. a second trigger crossing)."""


class ObuPhase(Enum):
    IDLE = "idle"
    SAM_STORED = "sam_stored"
    AWAITING_ACK = "awaiting_ack"
    COMPLETE = "complete"
    FAILED = "failed"


class TimerKind(Enum):
    RETRY = "retry"
    ACK_FLUSH = "ack_flush"
    SAM = "sam"


@dataclass(frozen=True)
class ProtocolOutput:
    """Transmissions to enqueue now plus (deadline, kind) timer requests."""

    transmissions: tuple[Message, ...] = ()
    timers: tuple[tuple[TimeMs, TimerKind], ...] = ()


_NO_OUTPUT = ProtocolOutput()


@dataclass(frozen=True)
class ObuState:
    vehicle_id: int
    t_sum: TimeMs
    phase: ObuPhase = ObuPhase.IDLE
    sam_rx_time: TimeMs | None = None
    first_sum_tx_time: TimeMs | None = None
    attempts: int = 0
    retry_deadline: TimeMs | None = None
    ack_rx_time: TimeMs | None = None
    deferred_start: bool = False


def _start_requesting(state: ObuState, now: TimeMs, **extra) -> tuple[ObuState, ProtocolOutput]:
    deadline = now + state.t_sum
    new = replace(
        state,
        phase=ObuPhase.AWAITING_ACK,
        first_sum_tx_time=now,
        attempts=1,
        retry_deadline=deadline,
        deferred_start=False,
        **extra,
    )
    sum_msg = Message(kind=MessageKind.SUM, sender=state.vehicle_id, tx_time=now, seq=1)
    return new, ProtocolOutput(transmissions=(sum_msg,), timers=((deadline, TimerKind.RETRY),))


def obu_on_sam(state: ObuState, now: TimeMs) -> tuple[ObuState, ProtocolOutput]:
    """SAM reception: store the advertisement; refreshes are no-ops.

    If the vehicle already crossed its trigger while idle, the first SAM both
    stores the advertisement and releases the deferred first SUM.
    """
    if state.phase is not ObuPhase.IDLE:
        return state, _NO_OUTPUT
    if state.deferred_start:
        return _start_requesting(state, now, sam_rx_time=now)
    return replace(state, phase=ObuPhase.SAM_STORED, sam_rx_time=now), _NO_OUTPUT


def obu_on_trigger(state: ObuState, now: TimeMs) -> tuple[ObuState, ProtocolOutput]:
    """Trigger-line crossing: send the first SUM (or defer it, if no SAM yet)."""
    if state.phase is ObuPhase.SAM_STORED:
        return _start_requesting(state, now)
    if state.phase is ObuPhase.IDLE:
        # Cannot respond to a service it has not heard of yet.
        return replace(state, deferred_start=True), _NO_OUTPUT
    raise ProtocolError(
        f"vehicle {state.vehicle_id} crossed the trigger in phase "
        f"{state.phase.value}; each vehicle crosses exactly once"
    )


def obu_on_retry_timer(state: ObuState, now: TimeMs) -> tuple[ObuState, ProtocolOutput]:
    """Retry timer expiry: retransmit the SUM unless the timer is stale."""
    if state.phase is not ObuPhase.AWAITING_ACK or state.retry_deadline != now:
        return state, _NO_OUTPUT
    deadline = now + state.t_sum
    new = replace(state, attempts=state.attempts + 1, retry_deadline=deadline)
    sum_msg = Message(kind=MessageKind.SUM, sender=state.vehicle_id, tx_time=now,
                      seq=new.attempts)
    return new, ProtocolOutput(transmissions=(sum_msg,), timers=((deadline, TimerKind.RETRY),))


def obu_on_ack(state: ObuState, now: TimeMs,
               recipients: tuple[int, ...]) -> tuple[ObuState, ProtocolOutput]:
    """ACK reception: complete if this vehicle is named; otherwise ignore."""
    if state.phase is ObuPhase.AWAITING_ACK and state.vehicle_id in recipients:
        new = replace(state, phase=ObuPhase.COMPLETE, ack_rx_time=now, retry_deadline=None)
        return new, _NO_OUTPUT
    return state, _NO_OUTPUT


def obu_mark_failed(state: ObuState) -> ObuState:
    """External failure declaration at despawn or simulation end."""
    if state.phase in (ObuPhase.COMPLETE, ObuPhase.FAILED):
        return state
    return replace(state, phase=ObuPhase.FAILED, retry_deadline=None)


@dataclass(frozen=True)
class RsuState:
    b_ack: int
    t_ack: TimeMs
    sam_period: TimeMs
    pending: tuple[int, ...] = ()
    ack_deadline: TimeMs | None = None
    next_sam_time: TimeMs = 0
    served_total: int = 0
    sam_seq: int = 0
    ack_seq: int = 0


def _flush_ack(state: RsuState, now: TimeMs) -> tuple[RsuState, ProtocolOutput]:
    recipients = state.pending
    if not (1 <= len(recipients) <= state.b_ack):
        raise ProtocolError(f"ACK batch of {len(recipients)} violates b_ack={state.b_ack}")
    new = replace(
        state,
        pending=(),
        ack_deadline=None,
        served_total=state.served_total + len(recipients),
        ack_seq=state.ack_seq + 1,
    )
    ack = Message(kind=MessageKind.ACK, sender=RSU_ID, tx_time=now,
                  recipients=recipients, seq=new.ack_seq)
    return new, ProtocolOutput(transmissions=(ack,))


def rsu_on_sum(state: RsuState, now: TimeMs, sender: int) -> tuple[RsuState, ProtocolOutput]:
    """SUM reception: enqueue the sender; flush immediately on a full batch.

    The RSU does not distinguish first transmissions from retransmissions:
    every received SUM guarantees the sender an entry in the next ACK, with
    set semantics so a retransmission never duplicates a pending entry.
    """
    if sender in state.pending:
        return state, _NO_OUTPUT
    pending = state.pending + (sender,)
    if len(pending) == state.b_ack:
        return _flush_ack(replace(state, pending=pending), now)
    if len(pending) == 1:
        deadline = now + state.t_ack
        new = replace(state, pending=pending, ack_deadline=deadline)
        return new, ProtocolOutput(timers=((deadline, TimerKind.ACK_FLUSH),))
    return replace(state, pending=pending), _NO_OUTPUT


def rsu_on_ack_timer(state: RsuState, now: TimeMs) -> tuple[RsuState, ProtocolOutput]:
    """Batch timer expiry: ACK everything pending; stale timers are no-ops."""
    if state.ack_deadline != now or not state.pending:
        return state, _NO_OUTPUT
    return _flush_ack(state, now)


def rsu_on_sam_timer(state: RsuState, now: TimeMs) -> tuple[RsuState, ProtocolOutput]:
    """Periodic advertisement: broadcast one SAM and rearm the period timer."""
    if now != state.next_sam_time:
        raise ProtocolError(
            f"SAM timer fired at {now} but next_sam_time is {state.next_sam_time}"
        )
    new = replace(state, next_sam_time=now + state.sam_period, sam_seq=state.sam_seq + 1)
    sam = Message(kind=MessageKind.SAM, sender=RSU_ID, tx_time=now, seq=new.sam_seq)
    return new, ProtocolOutput(
        transmissions=(sam,),
        timers=((new.next_sam_time, TimerKind.SAM),),
    )
