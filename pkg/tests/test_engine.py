"""Event core: ordering, delivery, determinism, degenerate channels."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from v2isim.channel import default_calibration, constant_per_curve
from v2isim.core import ConfigError, Message, MessageKind, RSU_ID, ScenarioConfig
from v2isim.engine import (
    BatchError, EngineError, EventKind, EventQueue, deliver_broadcast, run,
    run_batch,
)
from v2isim.metrics import OUTCOME_SIMEND


def short_cfg(**overrides) -> ScenarioConfig:
    base = dict(sim_duration=60_000, warmup=0, flow_rate=4.0, rng_seed=3,
                bsm_period=500)
    base.update(overrides)
    return dataclasses.replace(ScenarioConfig(), **base)


# -- event queue ---------------------------------------------------------


def test_queue_pops_in_time_then_insertion_order():
    q = EventQueue()
    q.push(5, EventKind.SAM_TIMER, "a")
    q.push(3, EventKind.SAM_TIMER, "b")
    q.push(5, EventKind.SAM_TIMER, "c")
    q.push(4, EventKind.SAM_TIMER, "d")
    assert [q.pop().payload for _ in range(4)] == ["b", "d", "a", "c"]


def test_queue_rejects_scheduling_in_the_past():
    q = EventQueue()
    q.push(10, EventKind.SAM_TIMER)
    q.pop()
    with pytest.raises(EngineError, match="behind the clock"):
        q.push(9, EventKind.SAM_TIMER)


# -- deliver_broadcast ---------------------------------------------------


def _msg(sender=0, pos=(0.0, 0.0)) -> Message:
    return Message(kind=MessageKind.SAM, sender=sender, tx_time=0, tx_position=pos)


def test_deliver_all_when_lossless():
    curve = constant_per_curve(0.0)
    receivers = [(i, (float(i), 0.0)) for i in range(1, 50)]
    got = deliver_broadcast(_msg(), receivers, curve, 10.0, np.random.default_rng(0))
    assert got == {i for i, _ in receivers}


def test_sender_excluded_even_at_distance_zero():
    curve = constant_per_curve(0.0)
    receivers = [(0, (0.0, 0.0)), (1, (0.0, 0.0))]
    got = deliver_broadcast(_msg(sender=0), receivers, curve, 10.0,
                            np.random.default_rng(0))
    assert got == {1}


def test_deliver_binomial_3sigma():
    curve = constant_per_curve(0.5)
    receivers = [(i, (10.0, 0.0)) for i in range(1, 1001)]
    got = deliver_broadcast(_msg(), receivers, curve, 10.0,
                            np.random.default_rng(99))
    sigma = math.sqrt(1000 * 0.25)
    assert abs(len(got) - 500) <= 3 * sigma


def test_unstamped_message_is_a_bug():
    msg = Message(kind=MessageKind.SUM, sender=1, tx_time=0, tx_position=None)
    with pytest.raises(EngineError, match="position-stamped"):
        deliver_broadcast(msg, [(RSU_ID, (0.0, 0.0))], default_calibration(),
                          10.0, np.random.default_rng(0))


# -- degenerate channels -------------------------------------------------


def test_lossless_single_vehicle(lossless_curve_file):
    cfg = dataclasses.replace(
        ScenarioConfig(), sim_duration=80_000, warmup=0, flow_rate=0.05,
        per_curve=lossless_curve_file, bsm_period=1000, rng_seed=1,
    )
    summary = run(cfg)
    assert len(summary.records) == 1
    record = summary.records[0]
    assert record.complete and record.attempts == 1
    # Sparse lossless traffic: one half-tau out, a full batch wait, one
    # half-tau back, so the completion time is bounded by tau_max + t_ack.
    assert record.sct <= 200 + cfg.t_ack


def test_lossless_everyone_served_in_one_attempt(lossless_curve_file):
    cfg = short_cfg(per_curve=lossless_curve_file, flow_rate=8.0)
    summary = run(cfg)
    settled = [r for r in summary.records if r.outcome != OUTCOME_SIMEND]
    assert settled
    assert all(r.complete and r.attempts == 1 for r in settled)
    # Round trip: half tau out, batching wait, half tau back.
    tau_max, t_ack = 200, cfg.t_ack
    assert all(r.sct <= tau_max + t_ack for r in settled)


def test_blocked_channel_zero_completions(blocked_curve_file):
    summary = run(short_cfg(per_curve=blocked_curve_file, flow_rate=8.0))
    assert all(not r.complete for r in summary.records)
    # No advertisement is ever received, so no request is ever sent.
    assert summary.records == ()
    assert summary.bsm_rx_count == 0


# -- determinism ---------------------------------------------------------


def test_identical_config_identical_summary():
    cfg = short_cfg()
    assert run(cfg) == run(cfg)


def test_full_event_trace_is_pure_function_of_config(tmp_path):
    cfg = short_cfg(flow_rate=6.0)
    a, b = tmp_path / "a.trace", tmp_path / "b.trace"
    run(cfg, trace_path=str(a))
    run(cfg, trace_path=str(b))
    assert a.read_bytes() == b.read_bytes()


def test_seed_changes_output():
    a = run(short_cfg(rng_seed=3))
    b = run(short_cfg(rng_seed=4))
    assert a != b


def test_run_batch_matches_input_order_and_serial_parallel_agree():
    cfgs = [short_cfg(d_t=d, rng_seed=50 + i) for i, d in enumerate((0.0, 150.0, -80.0))]
    serial = run_batch(cfgs, parallelism=1)
    parallel = run_batch(cfgs, parallelism=3)
    assert [s.cfg.d_t for s in serial] == [0.0, 150.0, -80.0]
    assert serial == parallel


def test_run_batch_empty():
    assert run_batch([]) == []


def test_run_batch_same_cfg_same_seed_identical():
    cfg = short_cfg()
    a, b = run_batch([cfg, cfg])
    assert a == b


def test_run_batch_reports_failures_per_index_without_aborting():
    good = short_cfg()
    bad = dataclasses.replace(good, b_ack=0)
    with pytest.raises(BatchError) as exc_info:
        run_batch([good, bad, good])
    err = exc_info.value
    assert set(err.failures) == {1}
    assert err.results[0] is not None and err.results[2] is not None
    assert err.results[0] == err.results[2]


def test_invalid_config_rejected():
    with pytest.raises(ConfigError, match="b_ack"):
        run(short_cfg(b_ack=0))


# -- behavior ------------------------------------------------------------


def test_liveness_lossless_complete_before_despawn(lossless_curve_file):
    cfg = dataclasses.replace(
        ScenarioConfig(), sim_duration=120_000, warmup=0, flow_rate=6.0,
        per_curve=lossless_curve_file, rng_seed=21, bsm_period=1000,
    )
    summary = run(cfg)
    settled = [r for r in summary.records if r.outcome != OUTCOME_SIMEND]
    assert settled
    assert all(r.complete and r.attempts == 1 for r in settled)
    assert all(r.sam_rx_time is not None for r in summary.records)


def test_attempts_match_request_transmissions_under_loss():
    # The engine traps any attempts/transmission mismatch internally, so a
    # lossy run completing without EngineError is itself the conservation
    # check; records must still show retries happening.
    summary = run(short_cfg(d_t=250.0, flow_rate=10.0, sim_duration=90_000))
    assert any(r.attempts > 1 for r in summary.records)


def test_completion_fraction_regression():
    # Frozen after calibrating the shipped PER table (observed 0.9973).
    cfg = dataclasses.replace(ScenarioConfig(), sim_duration=200_000, warmup=0,
                              flow_rate=10.0, d_t=0.0, rng_seed=7)
    summary = run(cfg)
    complete = sum(1 for r in summary.records if r.complete)
    assert complete / len(summary.records) > 0.99


def test_bsm_counters_consistent():
    summary = run(short_cfg(flow_rate=10.0))
    assert summary.bsm_tx_count > 0
    assert 0 < summary.bsm_rx_count <= summary.bsm_expected_rx_count
    assert summary.bsm_expected_rx_count <= summary.bsm_tx_count * summary.cfg.bsm_probe_count
    assert 0.0 <= summary.bsm_per <= 1.0


def test_trace_file_records_transitions(tmp_path):
    path = tmp_path / "events.trace"
    cfg = short_cfg(flow_rate=2.0)
    run(cfg, trace_path=str(path))
    lines = path.read_text().splitlines()
    assert lines
    rows = [line.split("\t") for line in lines]
    assert all(len(r) == 5 for r in rows)
    times = [int(r[0]) for r in rows]
    assert times == sorted(times)
    assert any(r[1] == "rsu" and r[2] == "sam_tx" for r in rows)
    sum_rows = [r for r in rows if r[2] == "trigger_cross" and r[4] == "awaiting_ack"]
    assert sum_rows, "expected at least one trigger transition into awaiting_ack"


def test_retry_cadence_visible_in_trace(tmp_path):
    # A heavily lossy channel forces retransmissions before completion.
    path = tmp_path / "cadence.trace"
    curve_path = tmp_path / "half.per"
    curve_path.write_text("density 10\n0 0.5\n10000 0.5\n")
    cfg = short_cfg(d_t=0.0, flow_rate=1.0, per_curve=str(curve_path),
                    sim_duration=80_000)
    run(cfg, trace_path=str(path))
    rows = [line.split("\t") for line in path.read_text().splitlines()]
    retries: dict[str, list[int]] = {}
    for r in rows:
        if r[2] == "retry_timer":
            retries.setdefault(r[1], []).append(int(r[0]))
    assert retries, "expected retries in a partially blocked channel"
    for times in retries.values():
        assert all(b - a == cfg.t_sum for a, b in zip(times, times[1:]))
