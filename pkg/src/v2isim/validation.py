"""Monte-Carlo consistency check of the closed-form first-success model.

Replays the model's exact assumptions per trial: a single vehicle crossing
the trigger line, a fixed effective exchange delay, and no batching wait.
Each attempt draws the request and acknowledgment receptions independently at
the distances the closed form evaluates, so the empirical first-success
histogram must match the analytic pmf within binomial sampling error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import AnalyticParams, attempt_distances, first_success_pmf
from .channel import per


def mc_first_success_counts(params: AnalyticParams, trials: int,
                            rng: np.random.Generator, n_bins: int) -> np.ndarray:
    """Count first successes at attempts 0..n_bins-1 over independent trials."""
    alive = np.ones(trials, dtype=bool)
    counts = np.zeros(n_bins, dtype=np.int64)
    for n in range(n_bins):
        d_req, d_ack = attempt_distances(params, n)
        p_req = per(params.curve, d_req, params.density)
        p_ack = per(params.curve, d_ack, params.density)
        req_ok = rng.random(trials) >= p_req
        ack_ok = rng.random(trials) >= p_ack
        succeeded = alive & req_ok & ack_ok
        counts[n] = int(succeeded.sum())
        alive &= ~succeeded
    return counts


@dataclass(frozen=True)
class BinCheck:
    n: int
    observed: int
    expected: float
    sigma: float

    @property
    def within_3sigma(self) -> bool:
        if self.sigma == 0.0:
            return self.observed == round(self.expected)
        return abs(self.observed - self.expected) <= 3.0 * self.sigma


def check_against_pmf(params: AnalyticParams, trials: int,
                      rng: np.random.Generator, n_check: int = 6) -> list[BinCheck]:
    """Per-attempt binomial 3-sigma comparison for attempts 0..n_check-1."""
    if trials < 10_000:
        raise ValueError(f"trials must be >= 10000 for a meaningful check (got {trials})")
    pmf = first_success_pmf(params)
    pmf = pmf + [0.0] * max(0, n_check - len(pmf))
    counts = mc_first_success_counts(params, trials, rng, n_check)
    checks = []
    for n in range(n_check):
        p = pmf[n]
        checks.append(BinCheck(
            n=n,
            observed=int(counts[n]),
            expected=trials * p,
            sigma=math.sqrt(trials * p * (1.0 - p)),
        ))
    return checks
