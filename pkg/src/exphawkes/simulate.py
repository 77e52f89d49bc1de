"""Thinning simulation of the process started from an empty history.

Uses the modified-thinning variant that exploits the monotone decay of the
exponential kernel: between events the intensity is non-increasing, so the
intensity just after the last event or candidate dominates and serves as the
rejection bound. Per-term excitation states make each candidate O(P).

Randomness is pinned in this module: ``GENERATOR_ID`` names the bit
generator, and :func:`mix_seed` derives independent per-replication seeds
from a master seed so results never depend on execution order.
"""

from __future__ import annotations

import math

import numpy as np

from .core import EventSequence, HawkesModel

#: Bit generator backing all simulations (numpy's PCG64 via default_rng).
GENERATOR_ID = "numpy-pcg64"

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


class SimulationRunawayError(RuntimeError):
    """Simulation exceeded its configured event or time cap."""


def mix_seed(master_seed: int, index: int) -> int:
    """Derive the seed for replication ``index`` from a master seed.

    SplitMix64 finalizer applied to ``master_seed + (index + 1) * golden``;
    the result is a plain 64-bit integer usable as a generator seed.
    """
    z = (int(master_seed) + (int(index) + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def simulate_horizon(
    model: HawkesModel,
    horizon: float,
    seed: int,
    max_events: int = 10_000_000,
) -> EventSequence:
    """Simulate on (0, horizon]; same (model, horizon, seed) is bit-identical.

    The model must be stationary so runs terminate in expectation. Candidates
    beyond the horizon end the run; a candidate landing exactly on the
    horizon is kept.
    """
    horizon = float(horizon)
    if horizon <= 0.0:
        raise ValueError("horizon must be > 0")
    model.require_stationary()
    times = _thinning(model, seed, horizon=horizon, target=None, max_events=max_events)
    return EventSequence(times, horizon=horizon)


def simulate_count(
    model: HawkesModel,
    n_target: int,
    seed: int,
    max_time: float = 1e15,
) -> EventSequence:
    """Simulate until exactly ``n_target`` events; horizon is the last time."""
    n_target = int(n_target)
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    model.require_stationary()
    times = _thinning(model, seed, horizon=float(max_time), target=n_target, max_events=None)
    if len(times) < n_target:
        raise SimulationRunawayError(
            f"reached simulated time cap {max_time:g} after {len(times)} events"
        )
    return EventSequence(times, horizon=times[-1])


def _thinning(model, seed, horizon, target, max_events):
    rng = np.random.default_rng(int(seed) & _MASK64)
    mu = model.mu
    alpha = [t.alpha for t in model.terms]
    beta = [t.beta for t in model.terms]
    n_terms = len(alpha)
    excite = [0.0] * n_terms
    times: list[float] = []
    t = 0.0
    exp = math.exp
    while True:
        bound = mu + sum(excite)
        wait = rng.standard_exponential() / bound
        if wait == 0.0:
            continue
        t_cand = t + wait
        if t_cand > horizon:
            break
        decayed = [excite[m] * exp(-beta[m] * wait) for m in range(n_terms)]
        lam = mu + sum(decayed)
        if lam > bound * (1.0 + 1e-12):
            raise AssertionError("thinning bound violated; decay bookkeeping is broken")
        accept = rng.random() * bound <= lam
        t = t_cand
        excite = decayed
        if accept:
            times.append(t)
            for m in range(n_terms):
                excite[m] += alpha[m]
            if target is not None and len(times) >= target:
                break
            if max_events is not None and len(times) > max_events:
                raise SimulationRunawayError(
                    f"exceeded {max_events} accepted events before the horizon"
                )
    return np.asarray(times, dtype=float)
