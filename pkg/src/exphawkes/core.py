"""Model and event-sequence types plus the intensity/compensator primitives.

A model is a baseline rate ``mu`` together with an ordered mixture of
exponential excitation terms ``alpha_m * exp(-beta_m * t)``. All types are
immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from ._kernels import compensators_at_events


class NonStationaryModelError(ValueError):
    """Operation requires a branching ratio strictly below one."""


@dataclass(frozen=True)
class KernelTerm:
    """One exponential excitation term: jump size ``alpha``, decay rate ``beta``."""

    alpha: float
    beta: float


@dataclass(frozen=True, init=False)
class HawkesModel:
    """Baseline rate and ordered exponential kernel terms.

    Terms are sorted by decay rate at construction; exact ties are rejected
    (perturb the inputs if two rates must coincide). The standard constructor
    requires strictly positive parameters; :meth:`degenerate` additionally
    admits zero excitation amplitudes and is meant for Poisson-limit tests.

    Parameters
    ----------
    mu : float
        Baseline intensity, > 0.
    terms : iterable of KernelTerm
        Excitation terms; may be empty (homogeneous Poisson process).
    require_stationary : bool
        If true, reject models whose branching ratio is >= 1.
    """

    mu: float
    terms: tuple[KernelTerm, ...]

    def __init__(self, mu, terms=(), *, require_stationary=False, _allow_zero_alpha=False):
        mu = float(mu)
        if not np.isfinite(mu) or mu <= 0.0:
            raise ValueError(f"baseline intensity must be finite and > 0, got {mu}")
        clean = tuple(
            sorted(
                (KernelTerm(float(t.alpha), float(t.beta)) for t in terms),
                key=lambda term: term.beta,
            )
        )
        for term in clean:
            if not np.isfinite(term.alpha) or not np.isfinite(term.beta):
                raise ValueError("kernel parameters must be finite")
            if term.beta <= 0.0:
                raise ValueError(f"decay rate must be > 0, got {term.beta}")
            if term.alpha < 0.0 or (term.alpha == 0.0 and not _allow_zero_alpha):
                raise ValueError(f"excitation amplitude must be > 0, got {term.alpha}")
        for left, right in zip(clean, clean[1:]):
            if left.beta == right.beta:
                raise ValueError(f"decay rates must be distinct, got a tie at {left.beta}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "terms", clean)
        if require_stationary and self.branching_ratio >= 1.0:
            raise NonStationaryModelError(
                f"branching ratio {self.branching_ratio:.6g} >= 1"
            )

    @classmethod
    def from_params(cls, mu, alpha, beta, **kwargs) -> "HawkesModel":
        """Build from ``mu`` and matching alpha/beta scalars or sequences."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        if alpha.shape != beta.shape:
            raise ValueError("alpha and beta must have the same length")
        terms = tuple(KernelTerm(a, b) for a, b in zip(alpha, beta))
        return cls(mu, terms, **kwargs)

    @classmethod
    def degenerate(cls, mu, alpha=(), beta=()) -> "HawkesModel":
        """Test-only constructor admitting zero excitation amplitudes."""
        return cls.from_params(mu, alpha, beta, _allow_zero_alpha=True)

    @property
    def order(self) -> int:
        return len(self.terms)

    @cached_property
    def alpha(self) -> np.ndarray:
        arr = np.array([t.alpha for t in self.terms], dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def beta(self) -> np.ndarray:
        arr = np.array([t.beta for t in self.terms], dtype=float)
        arr.flags.writeable = False
        return arr

    @property
    def theta(self) -> np.ndarray:
        """Parameter vector (mu, alpha_1..P, beta_1..P)."""
        return np.concatenate(([self.mu], self.alpha, self.beta))

    @property
    def parameter_names(self) -> tuple[str, ...]:
        names = ["mu"]
        names += [f"alpha_{m + 1}" for m in range(self.order)]
        names += [f"beta_{m + 1}" for m in range(self.order)]
        return tuple(names)

    @property
    def branching_ratio(self) -> float:
        return float(np.sum(self.alpha / self.beta)) if self.terms else 0.0

    @property
    def is_stationary(self) -> bool:
        return self.branching_ratio < 1.0

    def require_stationary(self) -> None:
        if not self.is_stationary:
            raise NonStationaryModelError(
                f"branching ratio {self.branching_ratio:.6g} >= 1"
            )

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "alpha": [t.alpha for t in self.terms],
            "beta": [t.beta for t in self.terms],
        }

    @classmethod
    def from_dict(cls, data: dict, **kwargs) -> "HawkesModel":
        return cls.from_params(data["mu"], data["alpha"], data["beta"], **kwargs)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path, **kwargs) -> "HawkesModel":
        return cls.from_dict(json.loads(Path(path).read_text()), **kwargs)


@dataclass(frozen=True, eq=False, init=False)
class EventSequence:
    """Strictly increasing event times on [0, horizon]."""

    times: np.ndarray
    horizon: float

    def __init__(self, times, horizon=None):
        arr = np.array(times, dtype=float).reshape(-1)
        if arr.size and (not np.all(np.isfinite(arr)) or arr[0] < 0.0):
            raise ValueError("event times must be finite and non-negative")
        if arr.size > 1 and not np.all(np.diff(arr) > 0.0):
            raise ValueError("event times must be strictly increasing (no duplicates)")
        if horizon is None:
            horizon = float(arr[-1]) if arr.size else 0.0
        horizon = float(horizon)
        if not np.isfinite(horizon) or horizon < 0.0:
            raise ValueError(f"horizon must be finite and >= 0, got {horizon}")
        if arr.size and arr[-1] > horizon:
            raise ValueError("horizon must be >= the last event time")
        arr.flags.writeable = False
        object.__setattr__(self, "times", arr)
        object.__setattr__(self, "horizon", horizon)

    def __len__(self) -> int:
        return int(self.times.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventSequence):
            return NotImplemented
        return self.horizon == other.horizon and np.array_equal(self.times, other.times)

    def count_at(self, t) -> np.ndarray | int:
        """Counting function N(t) = number of events with time <= t."""
        counts = np.searchsorted(self.times, t, side="right")
        return counts

    def save_csv(self, path) -> None:
        """Write one event time per line under a ``t`` header."""
        lines = ["t"] + [format(t, ".17g") for t in self.times]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load_csv(cls, path, horizon=None) -> "EventSequence":
        raw = Path(path).read_text().strip().splitlines()
        if not raw or raw[0].strip() != "t":
            raise ValueError(f"{path}: expected a CSV with header line 't'")
        times = np.array([float(line) for line in raw[1:]], dtype=float)
        return cls(times, horizon=horizon)


def branching_ratio(model: HawkesModel) -> float:
    """Total kernel mass sum(alpha_m / beta_m); < 1 means stationary."""
    return model.branching_ratio


def conditional_intensity(model: HawkesModel, events: EventSequence, t: float) -> float:
    """Event rate at time ``t`` given the history strictly before ``t``.

    Events at exactly ``t`` do not contribute (left-continuous convention).
    """
    t = float(t)
    if t < 0.0:
        raise ValueError("time must be >= 0")
    past = events.times[: np.searchsorted(events.times, t, side="left")]
    lam = model.mu
    if past.size and model.order:
        lags = t - past
        lam += float(np.sum(model.alpha[:, None] * np.exp(-model.beta[:, None] * lags[None, :])))
    return lam


def compensator(model: HawkesModel, events: EventSequence, t: float) -> float:
    """Integrated intensity over [0, t]; non-decreasing, zero at t = 0."""
    t = float(t)
    if t < 0.0:
        raise ValueError("time must be >= 0")
    past = events.times[: np.searchsorted(events.times, t, side="left")]
    value = model.mu * t
    if past.size and model.order:
        lags = t - past
        ratios = model.alpha / model.beta
        value += float(
            np.sum(ratios[:, None] * (1.0 - np.exp(-model.beta[:, None] * lags[None, :])))
        )
    return value


def compensator_at_events(model: HawkesModel, events: EventSequence) -> np.ndarray:
    """Compensator evaluated at every event time, in O(n*P)."""
    return compensators_at_events(events.times, model.mu, model.alpha, model.beta)


def time_change_residuals(model: HawkesModel, events: EventSequence) -> np.ndarray:
    """Compensator increments between consecutive events.

    Under the true model these are i.i.d. unit-rate exponentials (the first
    increment is measured from time zero).
    """
    values = compensator_at_events(model, events)
    return np.diff(values, prepend=0.0)
