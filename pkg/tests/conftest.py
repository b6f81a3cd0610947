"""Shared fixtures: degenerate calibration files and the reference sweep."""

from __future__ import annotations

import dataclasses
import time
from typing import NamedTuple

import pytest

from v2isim import RunSummary, ScenarioConfig, run_batch
from v2isim.channel import constant_per_curve, dumps_per_curve
from v2isim.cli import derive_cell_seed

SWEEP_TRIGGERS = (300.0, 0.0, -100.0)
SWEEP_FLOWS = (10.0, 20.0, 30.0)


class ReferenceSweep(NamedTuple):
    cells: dict[tuple[float, float], RunSummary]
    elapsed_s: float


def write_constant_curve(tmp_dir, value: float) -> str:
    path = tmp_dir / f"const_{value}.per"
    path.write_text(dumps_per_curve(constant_per_curve(value)))
    return str(path)


@pytest.fixture(scope="session")
def lossless_curve_file(tmp_path_factory) -> str:
    return write_constant_curve(tmp_path_factory.mktemp("curves"), 0.0)


@pytest.fixture(scope="session")
def blocked_curve_file(tmp_path_factory) -> str:
    return write_constant_curve(tmp_path_factory.mktemp("curves"), 1.0)


@pytest.fixture(scope="session")
def reference_sweep() -> ReferenceSweep:
    """Full 3 triggers x 3 flows sweep at defaults (600 s simulated each)."""
    base = ScenarioConfig()
    cells = [
        dataclasses.replace(base, d_t=d, flow_rate=f,
                            rng_seed=derive_cell_seed(base.rng_seed, d, f))
        for d in SWEEP_TRIGGERS for f in SWEEP_FLOWS
    ]
    start = time.perf_counter()
    summaries = run_batch(cells, parallelism=4)
    elapsed = time.perf_counter() - start
    keys = [(d, f) for d in SWEEP_TRIGGERS for f in SWEEP_FLOWS]
    return ReferenceSweep(cells=dict(zip(keys, summaries)), elapsed_s=elapsed)
