"""Average intensity of the process started from an empty history.

Taking expectations of the intensity gives a second-kind Volterra equation
for the mean intensity phi(t). Its Laplace transform is rational, so phi is
a mixture of exponentials: a constant stationary level plus transient modes,
one per root of the transform's denominator polynomial. Closed forms are
provided for orders one and two; the general path finds the roots
numerically. A trapezoidal Volterra solver doubles as an independent oracle.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import volterra_product
from .core import HawkesModel

#: Two denominator roots closer than this (relative) are treated as a
#: multiple root, which the partial-fraction path does not support.
ROOT_SEPARATION_RTOL = 1e-8


class RootMultiplicityError(ArithmeticError):
    """Denominator roots too close for a simple partial-fraction expansion."""


@dataclass(frozen=True)
class PartialFractionExpansion:
    """Poles and coefficients of the mean-intensity Laplace transform.

    The first pole is exactly zero and carries the stationary level; the
    coefficients are normalized so that they sum to one (so the physical
    mode amplitudes are ``mu * coefficients``). Complex entries occur in
    conjugate pairs, keeping the time-domain curve real.
    """

    poles: tuple[complex, ...]
    coefficients: tuple[complex, ...]

    @property
    def order(self) -> int:
        return len(self.poles)


@dataclass(frozen=True)
class MeanIntensityCurve:
    """Evaluable mean-intensity function built from a pole expansion."""

    expansion: PartialFractionExpansion
    mu: float

    @property
    def stationary_level(self) -> float:
        return self.mu * self.expansion.coefficients[0].real

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        poles = np.array(self.expansion.poles)
        coeff = np.array(self.expansion.coefficients)
        values = self.mu * np.sum(coeff[:, None] * np.exp(poles[:, None] * t.ravel()[None, :]), axis=0)
        _assert_real(values)
        out = values.real.reshape(t.shape)
        return float(out) if out.ndim == 0 else out

    def integral(self, t):
        """Expected event count: integral of the curve over [0, t]."""
        t = np.asarray(t, dtype=float)
        poles = np.array(self.expansion.poles)
        coeff = np.array(self.expansion.coefficients)
        flat = t.ravel().astype(complex)
        acc = coeff[0] * flat
        if poles.size > 1:
            acc = acc + np.sum(
                coeff[1:, None] * (np.exp(poles[1:, None] * flat[None, :]) - 1.0) / poles[1:, None],
                axis=0,
            )
        values = self.mu * acc
        _assert_real(values)
        out = values.real.reshape(t.shape)
        return float(out) if out.ndim == 0 else out


def _assert_real(values: np.ndarray) -> None:
    scale = np.maximum(1.0, np.abs(values.real))
    if np.any(np.abs(values.imag) > 1e-10 * scale):
        raise AssertionError("conjugate symmetry broken: imaginary residue too large")


def stationary_mean_intensity(model: HawkesModel) -> float:
    """Long-run mean event rate mu / (1 - branching ratio)."""
    model.require_stationary()
    return model.mu / (1.0 - model.branching_ratio)


def mean_intensity_p1(model: HawkesModel, t):
    """Closed-form mean intensity for a single-term kernel.

    Valid for any positive parameters; when the decay rate and amplitude
    nearly coincide the removable singularity is replaced by its limit
    mu * (1 + alpha * t).
    """
    if model.order != 1:
        raise ValueError(f"order-1 formula applied to an order-{model.order} model")
    t = np.asarray(t, dtype=float)
    alpha = model.alpha[0]
    beta = model.beta[0]
    gap = beta - alpha
    if abs(gap) < 1e-10 * beta:
        out = model.mu * (1.0 + alpha * t)
    else:
        out = model.mu / gap * (beta - alpha * np.exp(-gap * t))
    return float(out) if out.ndim == 0 else out


def mean_intensity_p2(model: HawkesModel, t):
    """Closed-form mean intensity for a two-term kernel.

    Uses the explicit two-root expansion; complex roots are handled with
    conjugate-pair arithmetic so the result stays real. A (numerically)
    double root falls back to the Volterra solver.
    """
    if model.order != 2:
        raise ValueError(f"order-2 formula applied to an order-{model.order} model")
    model.require_stationary()
    t = np.asarray(t, dtype=float)
    a1, a2 = model.alpha
    b1, b2 = model.beta
    gamma = a1 + a2 - b1 - b2
    xi = cmath.sqrt(gamma * gamma - 4.0 * (b1 * b2 - a1 * b2 - a2 * b1))
    if abs(xi) < 1e-8 * max(1.0, abs(gamma)):
        return _volterra_values(model, t)
    s2 = 0.5 * (gamma - xi)
    s3 = 0.5 * (gamma + xi)
    c1 = b1 * b2 / (b1 * b2 - a1 * b2 - a2 * b1)
    c2 = (xi - gamma - 2.0 * b2) * (xi - gamma - 2.0 * b1) / (2.0 * xi * (xi - gamma))
    c3 = (xi + gamma + 2.0 * b1) * (xi + gamma + 2.0 * b2) / (2.0 * xi * (xi + gamma))
    values = model.mu * (
        c1 + c2 * np.exp(s2 * t.astype(complex)) + c3 * np.exp(s3 * t.astype(complex))
    )
    values = np.asarray(values)
    _assert_real(values)
    out = values.real
    return float(out) if out.ndim == 0 else out


def _denominator_coefficients(model: HawkesModel) -> np.ndarray:
    """Monic denominator polynomial of the transform, highest degree first."""
    poly = np.poly(-model.beta)
    for m in range(model.order):
        others = np.delete(model.beta, m)
        sub = model.alpha[m] * np.poly(-others)
        poly[1:] = poly[1:] - sub
    return poly


@lru_cache(maxsize=256)
def partial_fraction_expansion(model: HawkesModel) -> PartialFractionExpansion:
    """Pole/coefficient expansion of the mean-intensity transform.

    Roots come from the companion-matrix eigenvalues of the denominator
    polynomial. Raises :class:`RootMultiplicityError` when two roots are
    closer than ``ROOT_SEPARATION_RTOL`` (relative), and AssertionError if a
    root fails to have a negative real part for a stationary model.
    """
    model.require_stationary()
    if model.order == 0:
        return PartialFractionExpansion(poles=(0j,), coefficients=(1.0 + 0j,))
    denom = _denominator_coefficients(model)
    roots = np.roots(denom)
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            tol = ROOT_SEPARATION_RTOL * max(1.0, abs(roots[i]))
            if abs(roots[i] - roots[j]) < tol:
                raise RootMultiplicityError(
                    f"roots {roots[i]:.6g} and {roots[j]:.6g} are too close"
                )
    if np.any(roots.real >= 0.0):
        raise AssertionError("stationary model produced a non-decaying mode")
    numer = np.poly(-model.beta)
    dprime = np.polyder(denom)
    poles = [0j]
    coeffs = [complex(np.prod(model.beta) / np.polyval(denom, 0.0))]
    for root in roots:
        poles.append(complex(root))
        coeffs.append(complex(np.polyval(numer, root) / (root * np.polyval(dprime, root))))
    total = sum(coeffs)
    if abs(total - 1.0) > 1e-6:
        raise ArithmeticError(f"expansion coefficients sum to {total}, expected 1")
    return PartialFractionExpansion(poles=tuple(poles), coefficients=tuple(coeffs))


def mean_intensity_curve(model: HawkesModel) -> MeanIntensityCurve:
    return MeanIntensityCurve(expansion=partial_fraction_expansion(model), mu=model.mu)


def mean_intensity_general(model: HawkesModel, t):
    """Mean intensity for any order via the numeric pole expansion.

    Falls back to the Volterra solver when the denominator has a (nearly)
    multiple root.
    """
    model.require_stationary()
    try:
        curve = mean_intensity_curve(model)
    except RootMultiplicityError:
        return _volterra_values(model, np.asarray(t, dtype=float))
    return curve(t)


def expected_count(model: HawkesModel, horizon: float) -> float:
    """Expected number of events on [0, horizon] from an empty history."""
    horizon = float(horizon)
    if horizon < 0.0:
        raise ValueError("horizon must be >= 0")
    model.require_stationary()
    if horizon == 0.0:
        return 0.0
    try:
        curve = mean_intensity_curve(model)
    except RootMultiplicityError:
        grid = default_grid(model, horizon)
        values = volterra_mean_intensity(model, grid)
        return float(np.trapz(values, grid))
    return float(curve.integral(horizon))


def volterra_mean_intensity(model: HawkesModel, grid) -> np.ndarray:
    """Solve the mean-intensity Volterra equation on a uniform grid.

    Trapezoidal product integration (the kernel is integrated exactly
    against a piecewise-linear interpolant), O(h^2) accurate; the
    independent oracle for the analytic inversions. The grid must start at
    zero with uniform positive step.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be one-dimensional with at least two nodes")
    if grid[0] != 0.0:
        raise ValueError("grid must start at 0")
    steps = np.diff(grid)
    step = steps[0]
    if step <= 0.0 or not np.allclose(steps, step, rtol=1e-9, atol=0.0):
        raise ValueError("grid must be uniform with positive step")
    left, right, decay = _product_weights(model.beta, step)
    if 1.0 - float(np.sum(model.alpha * right)) <= 0.0:
        raise ValueError("step too large for stable product integration")
    return volterra_product(model.mu, model.alpha, left, right, decay, grid.size)


def _product_weights(beta: np.ndarray, step: float):
    """Exact integrals of the kernel against the linear hat functions.

    Over one step, with x = beta * h: J0 = int_0^h exp(-beta v) dv and
    J1 = int_0^h v exp(-beta v) dv; the trailing-node weight is J0 - J1/h
    and the leading-node weight J1/h. A short series covers small x where
    the closed form cancels.
    """
    x = beta * step
    decay = np.exp(-x)
    with np.errstate(invalid="ignore", divide="ignore"):
        j0 = -np.expm1(-x) / beta
        j1 = (1.0 - decay * (1.0 + x)) / beta**2
    small = x < 1e-4
    if np.any(small):
        xs = x[small]
        j0[small] = step * (1.0 - xs / 2.0 + xs**2 / 6.0 - xs**3 / 24.0)
        j1[small] = step**2 * (0.5 - xs / 3.0 + xs**2 / 8.0 - xs**3 / 30.0)
    left = j1 / step
    right = j0 - left
    return left, right, decay


def default_grid(model: HawkesModel, t_max: float, min_nodes: int = 2000) -> np.ndarray:
    """Uniform grid on [0, t_max] fine enough for the Volterra solver."""
    t_max = float(t_max)
    if t_max <= 0.0:
        raise ValueError("t_max must be > 0")
    step = t_max / min_nodes
    if model.order:
        step = min(step, 0.2 / float(np.max(model.beta)), 1.8 / float(np.sum(model.alpha)))
    n_nodes = int(np.ceil(t_max / step)) + 1
    return np.linspace(0.0, t_max, n_nodes)


def _volterra_values(model: HawkesModel, t: np.ndarray):
    """Evaluate the mean intensity at arbitrary times via the oracle grid."""
    t_max = float(np.max(t)) if t.size else 0.0
    if t_max == 0.0:
        out = np.full(t.shape, model.mu)
        return float(out) if out.ndim == 0 else out
    grid = default_grid(model, t_max)
    values = volterra_mean_intensity(model, grid)
    out = np.interp(t, grid, values)
    return float(out) if out.ndim == 0 else out
