"""Deterministic discrete-event core: queue, clock, delivery, orchestration.

Every run is a pure function of (config, seed): events are totally ordered by
(time, insertion sequence), the clock never moves backward, and all
randomness flows through one per-run generator consumed in event order.

Transmission latency: each radio leg takes ceil(tau/2) ms, where tau is one
exchange-delay draw per transmission, so an unbatched request/acknowledgment
round trip spans a single tau. Reception is sampled per candidate receiver at
its Euclidean distance from the transmit position, receiver position taken at
arrival time. Senders never receive their own transmissions.

Background safety broadcasts (BSMs) only feed the reception-rate metric and
have no protocol effect, so they are processed in vectorized per-period
batches: every in-stretch vehicle transmits each period, and reception is
sampled toward a bounded random probe set per transmission (an unbiased
estimate of the same packet error rate at a fraction of the cost of
enumerating every in-stretch receiver).
"""

from __future__ import annotations

import heapq
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Sequence

import numpy as np

from . import channel as chan
from . import mobility as mob
from . import protocol as proto
from .core import (
    ConfigError, Message, MessageKind, RSU_ID, ScenarioConfig, TimeMs,
    ceil_ms, validate_config,
)
from .metrics import (
    CompletionRecord, OUTCOME_COMPLETE, OUTCOME_DESPAWN, OUTCOME_SIMEND,
    RunSummary,
)


class EngineError(RuntimeError):
    """Internal ordering violation; indicates a simulator bug."""


class EventKind(Enum):
    VEHICLE_SPAWN = "vehicle_spawn"
    TRIGGER_CROSS = "trigger_cross"
    RETRY_TIMER = "retry_timer"
    ACK_TIMER = "ack_timer"
    SAM_TIMER = "sam_timer"
    MSG_ARRIVAL = "msg_arrival"
    VEHICLE_DESPAWN = "vehicle_despawn"
    BSM_TICK = "bsm_tick"
    SIM_END = "sim_end"


@dataclass(frozen=True, order=True)
class Event:
    time: TimeMs
    seq: int
    kind: EventKind = field(compare=False)
    payload: Any = field(compare=False, default=None)


class EventQueue:
    """Min-heap of events, popped in strict (time, seq) order."""

    def __init__(self) -> None:
        self._heap: list[Event] = []
        self._next_seq = 0
        self._clock: TimeMs = 0

    def push(self, time: TimeMs, kind: EventKind, payload: Any = None) -> None:
        if time < self._clock:
            raise EngineError(
                f"attempt to schedule {kind.value} at {time} ms behind the "
                f"clock ({self._clock} ms)"
            )
        heapq.heappush(self._heap, Event(time, self._next_seq, kind, payload))
        self._next_seq += 1

    def pop(self) -> Event:
        event = heapq.heappop(self._heap)
        if event.time < self._clock:
            raise EngineError(
                f"event {event.kind.value} at {event.time} ms popped behind "
                f"the clock ({self._clock} ms)"
            )
        self._clock = event.time
        return event

    def __len__(self) -> int:
        return len(self._heap)

    @property
    def clock(self) -> TimeMs:
        return self._clock


def deliver_broadcast(msg: Message,
                      receivers: Sequence[tuple[int, tuple[float, float]]],
                      curve: chan.PerCurve, density: float,
                      rng: np.random.Generator) -> set[int]:
    """Sample which candidate receivers pick up one broadcast transmission.

    Each candidate draws independently at its Euclidean distance from the
    transmit position; the sender is excluded even at distance zero.
    """
    if msg.tx_position is None:
        raise EngineError(f"{msg.kind.value} transmission was never position-stamped")
    tx, ty = msg.tx_position
    received: set[int] = set()
    for entity_id, (rx, ry) in receivers:
        if entity_id == msg.sender:
            continue
        dist = ((rx - tx) ** 2 + (ry - ty) ** 2) ** 0.5
        if chan.sample_reception(rng, curve, dist, density):
            received.add(entity_id)
    return received


TraceFn = Callable[[TimeMs, str, str, str, str], None]


class _Simulation:
    def __init__(self, cfg: ScenarioConfig, trace: TraceFn | None = None):
        violations = validate_config(cfg)
        if violations:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(violations))
        self.cfg = cfg
        self.trace = trace
        self.rng = np.random.default_rng(cfg.rng_seed)
        model = cfg.channel()
        self.curve = model.curve
        self.tau = model.tau
        self.density = cfg.flow_rate
        self.queue = EventQueue()

        self.vehicles: dict[int, mob.VehicleKinematics] = {}
        self.active: dict[int, mob.VehicleKinematics] = {}
        self.awaiting_sam: dict[int, None] = {}
        self.obu: dict[int, proto.ObuState] = {}
        self.sum_tx_count: dict[int, int] = {}
        self.rsu = proto.RsuState(
            b_ack=cfg.b_ack, t_ack=cfg.t_ack, sam_period=cfg.sam_period,
        )
        self.records: list[CompletionRecord] = []
        self.bsm_tx = 0
        self.bsm_rx = 0
        self.bsm_expected = 0

        # Arrivals are generated up front so per-direction spawn arrays can be
        # sliced with searchsorted during vectorized BSM periods.
        east = mob.generate_arrivals(
            mob.ArrivalProcess(cfg.flow_rate / 2.0, cfg.sim_duration, mob.Direction.EAST),
            cfg, self.rng, id_start=0,
        )
        west = mob.generate_arrivals(
            mob.ArrivalProcess(cfg.flow_rate / 2.0, cfg.sim_duration, mob.Direction.WEST),
            cfg, self.rng, id_start=len(east),
        )
        self.by_direction = {mob.Direction.EAST: east, mob.Direction.WEST: west}
        self.spawn_arrays = {
            d: np.array([v.spawn_time for v in arr], dtype=np.int64)
            for d, arr in self.by_direction.items()
        }
        self.y_arrays = {
            d: np.array([v.y for v in arr], dtype=float)
            for d, arr in self.by_direction.items()
        }
        self.transit = mob.transit_ms(cfg.road_length, cfg.mean_speed)

        self.queue.push(0, EventKind.SAM_TIMER)
        if cfg.bsm_period <= cfg.sim_duration:
            self.queue.push(cfg.bsm_period, EventKind.BSM_TICK)
        self.queue.push(cfg.sim_duration, EventKind.SIM_END)
        for arr in self.by_direction.values():
            for v in arr:
                self.queue.push(v.spawn_time, EventKind.VEHICLE_SPAWN, v)

    # -- helpers ---------------------------------------------------------

    def _emit_trace(self, t: TimeMs, entity: str, event: str,
                    before: str, after: str) -> None:
        if self.trace is not None:
            self.trace(t, entity, event, before, after)

    def _flight_ms(self) -> TimeMs:
        return ceil_ms(chan.sample_tau(self.rng, self.tau) / 2.0)

    def _obu_position(self, vid: int, t: TimeMs) -> tuple[float, float]:
        return mob.position_at(self.vehicles[vid], t)

    def _apply_output(self, sender: int, now: TimeMs, out: proto.ProtocolOutput) -> None:
        for msg in out.transmissions:
            if msg.sender == RSU_ID:
                pos = self.cfg.rsu_position
            else:
                pos = self._obu_position(msg.sender, now)
                if msg.kind is MessageKind.SUM:
                    self.sum_tx_count[msg.sender] = self.sum_tx_count.get(msg.sender, 0) + 1
            stamped = Message(kind=msg.kind, sender=msg.sender, tx_time=msg.tx_time,
                              tx_position=pos, recipients=msg.recipients, seq=msg.seq)
            self.queue.push(now + self._flight_ms(), EventKind.MSG_ARRIVAL, stamped)
        for deadline, kind in out.timers:
            if kind is proto.TimerKind.RETRY:
                self.queue.push(deadline, EventKind.RETRY_TIMER, sender)
            elif kind is proto.TimerKind.ACK_FLUSH:
                self.queue.push(deadline, EventKind.ACK_TIMER)
            else:
                self.queue.push(deadline, EventKind.SAM_TIMER)

    def _obu_transition(self, vid: int, now: TimeMs, event: str, fn, *args) -> None:
        state = self.obu[vid]
        new, out = fn(state, now, *args)
        self.obu[vid] = new
        if new.phase is not proto.ObuPhase.IDLE:
            self.awaiting_sam.pop(vid, None)
        self._emit_trace(now, f"veh{vid}", event, state.phase.value, new.phase.value)
        self._apply_output(vid, now, out)

    def _rsu_transition(self, now: TimeMs, event: str, fn, *args) -> None:
        before = f"pending:{len(self.rsu.pending)}"
        self.rsu, out = fn(self.rsu, now, *args)
        self._emit_trace(now, "rsu", event, before, f"pending:{len(self.rsu.pending)}")
        self._apply_output(RSU_ID, now, out)

    def _finalize(self, vid: int, outcome_if_incomplete: str) -> None:
        state = self.obu[vid]
        if state.attempts < 1:
            return
        sent = self.sum_tx_count.get(vid, 0)
        if sent != state.attempts:
            raise EngineError(
                f"vehicle {vid}: {sent} request transmissions but "
                f"{state.attempts} attempts recorded"
            )
        outcome = OUTCOME_COMPLETE if state.phase is proto.ObuPhase.COMPLETE \
            else outcome_if_incomplete
        self.records.append(CompletionRecord(
            vehicle_id=vid,
            direction=self.vehicles[vid].direction,
            sam_rx_time=state.sam_rx_time,
            first_sum_tx_time=state.first_sum_tx_time,
            ack_rx_time=state.ack_rx_time,
            attempts=state.attempts,
            outcome=outcome,
        ))

    # -- event handlers ----------------------------------------------------

    def _on_spawn(self, now: TimeMs, v: mob.VehicleKinematics) -> None:
        self.vehicles[v.vehicle_id] = v
        self.active[v.vehicle_id] = v
        self.awaiting_sam[v.vehicle_id] = None
        self.obu[v.vehicle_id] = proto.ObuState(vehicle_id=v.vehicle_id, t_sum=self.cfg.t_sum)
        self.queue.push(
            mob.trigger_crossing_time(v, self.cfg.d_t, self.cfg.rsu_x),
            EventKind.TRIGGER_CROSS, v.vehicle_id,
        )
        self.queue.push(mob.exit_time(v, self.cfg.road_length),
                        EventKind.VEHICLE_DESPAWN, v.vehicle_id)

    def _on_trigger(self, now: TimeMs, vid: int) -> None:
        self._obu_transition(vid, now, "trigger_cross", proto.obu_on_trigger)

    def _on_retry_timer(self, now: TimeMs, vid: int) -> None:
        state = self.obu[vid]
        if state.phase is not proto.ObuPhase.AWAITING_ACK or state.retry_deadline != now:
            return  # stale timer
        self._obu_transition(vid, now, "retry_timer", proto.obu_on_retry_timer)

    def _on_msg_arrival(self, now: TimeMs, msg: Message) -> None:
        if msg.kind is MessageKind.SUM:
            receivers = [(RSU_ID, self.cfg.rsu_position)]
            if RSU_ID in deliver_broadcast(msg, receivers, self.curve, self.density, self.rng):
                self._rsu_transition(now, "sum_rx", proto.rsu_on_sum, msg.sender)
        elif msg.kind is MessageKind.ACK:
            receivers = [
                (vid, self._obu_position(vid, now))
                for vid in msg.recipients if vid in self.active
            ]
            for vid in sorted(deliver_broadcast(msg, receivers, self.curve,
                                                self.density, self.rng)):
                self._obu_transition(vid, now, "ack_rx", proto.obu_on_ack, msg.recipients)
        elif msg.kind is MessageKind.SAM:
            # Only vehicles still waiting on an advertisement can change state.
            receivers = [
                (vid, self._obu_position(vid, now)) for vid in self.awaiting_sam
            ]
            for vid in sorted(deliver_broadcast(msg, receivers, self.curve,
                                                self.density, self.rng)):
                self._obu_transition(vid, now, "sam_rx", proto.obu_on_sam)
        else:
            raise EngineError(f"unexpected arrival kind {msg.kind}")

    def _on_ack_timer(self, now: TimeMs) -> None:
        self._rsu_transition(now, "ack_timer", proto.rsu_on_ack_timer)

    def _on_sam_timer(self, now: TimeMs) -> None:
        self._rsu_transition(now, "sam_tx", proto.rsu_on_sam_timer)

    def _on_despawn(self, now: TimeMs, vid: int) -> None:
        self._finalize(vid, OUTCOME_DESPAWN)
        self.obu[vid] = proto.obu_mark_failed(self.obu[vid])
        self.active.pop(vid, None)
        self.awaiting_sam.pop(vid, None)

    def _on_bsm_tick(self, now: TimeMs) -> None:
        xs, ys = [], []
        for direction in (mob.Direction.EAST, mob.Direction.WEST):
            spawns = self.spawn_arrays[direction]
            lo, hi = mob.stretch_window(spawns, now, self.transit)
            if hi > lo:
                xs.append(mob.positions_x(spawns[lo:hi], now, direction,
                                          self.cfg.road_length, self.cfg.mean_speed))
                ys.append(self.y_arrays[direction][lo:hi])
        n = sum(len(x) for x in xs)
        self.bsm_tx += n
        if n >= 2:
            x = np.concatenate(xs)
            y = np.concatenate(ys)
            k = min(self.cfg.bsm_probe_count, n - 1)
            probes = self.rng.integers(0, n - 1, size=(n, k))
            probes += probes >= np.arange(n)[:, None]
            dist = np.hypot(x[probes] - x[:, None], y[probes] - y[:, None])
            mask = chan.reception_mask(self.rng, self.curve, dist.ravel(), self.density)
            self.bsm_rx += int(mask.sum())
            self.bsm_expected += n * k
        nxt = now + self.cfg.bsm_period
        if nxt <= self.cfg.sim_duration:
            self.queue.push(nxt, EventKind.BSM_TICK)

    # -- main loop ---------------------------------------------------------

    def run(self) -> RunSummary:
        while self.queue:
            event = self.queue.pop()
            now = event.time
            if event.kind is EventKind.SIM_END:
                break
            if event.kind is EventKind.VEHICLE_SPAWN:
                self._on_spawn(now, event.payload)
            elif event.kind is EventKind.TRIGGER_CROSS:
                self._on_trigger(now, event.payload)
            elif event.kind is EventKind.RETRY_TIMER:
                self._on_retry_timer(now, event.payload)
            elif event.kind is EventKind.ACK_TIMER:
                self._on_ack_timer(now)
            elif event.kind is EventKind.SAM_TIMER:
                self._on_sam_timer(now)
            elif event.kind is EventKind.MSG_ARRIVAL:
                self._on_msg_arrival(now, event.payload)
            elif event.kind is EventKind.VEHICLE_DESPAWN:
                self._on_despawn(now, event.payload)
            elif event.kind is EventKind.BSM_TICK:
                self._on_bsm_tick(now)
            else:
                raise EngineError(f"unhandled event kind {event.kind}")
        for vid in list(self.active):
            self._finalize(vid, OUTCOME_SIMEND)
        return RunSummary(
            cfg=self.cfg,
            records=tuple(self.records),
            bsm_tx_count=self.bsm_tx,
            bsm_rx_count=self.bsm_rx,
            bsm_expected_rx_count=self.bsm_expected,
            seed=self.cfg.rng_seed,
        )


def run(cfg: ScenarioConfig, trace_path: str | None = None) -> RunSummary:
    """Simulate one scenario; identical (cfg, seed) yields an identical summary."""
    if trace_path is None:
        return _Simulation(cfg).run()
    with open(trace_path, "w", encoding="utf-8", newline="\n") as fh:
        def trace(t: TimeMs, entity: str, event: str, before: str, after: str) -> None:
            fh.write(f"{t}\t{entity}\t{event}\t{before}\t{after}\n")
        return _Simulation(cfg, trace=trace).run()


class BatchError(RuntimeError):
    """One or more batch cells failed; carries per-index diagnostics.

    ``results`` holds the sibling summaries in input order, None at the
    failed indices, so callers can still use the cells that succeeded.
    """

    def __init__(self, failures: dict[int, str],
                 results: list[RunSummary | None] | None = None):
        self.failures = failures
        self.results = results if results is not None else []
        detail = "; ".join(f"cell {i}: {msg}" for i, msg in sorted(failures.items()))
        super().__init__(f"{len(failures)} batch cell(s) failed: {detail}")


def run_batch(cfgs: Sequence[ScenarioConfig], parallelism: int = 1) -> list[RunSummary]:
    """Run independent scenarios; results match input order.

    Cells are isolated: a failing cell does not abort its siblings, and all
    failures are reported together in a BatchError. Results are identical
    whether the batch executes serially or in parallel.
    """
    if not cfgs:
        return []
    results: list[RunSummary | None] = [None] * len(cfgs)
    failures: dict[int, str] = {}
    if parallelism > 1 and len(cfgs) > 1:
        try:
            with ProcessPoolExecutor(max_workers=parallelism) as pool:
                futures = [pool.submit(run, cfg) for cfg in cfgs]
                for i, fut in enumerate(futures):
                    try:
                        results[i] = fut.result()
                    except Exception as exc:  # noqa: BLE001 - reported per index
                        failures[i] = str(exc)
        except OSError:
            # Process pools may be unavailable in constrained environments;
            # the serial path produces identical results by construction.
            results = [None] * len(cfgs)
            failures.clear()
            parallelism = 1
    if parallelism <= 1 or len(cfgs) == 1:
        for i, cfg in enumerate(cfgs):
            try:
                results[i] = run(cfg)
            except Exception as exc:  # noqa: BLE001 - reported per index
                failures[i] = str(exc)
    if failures:
        raise BatchError(failures, results)
    return [r for r in results if r is not None]
