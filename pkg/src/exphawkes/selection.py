"""Information criteria and kernel-order selection.

All criteria share the shape ``-2 * loglik + penalty``; the fitted order
with the smallest value wins, ties going to the most parsimonious order.
``n`` is always the number of events in the fitted sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .core import EventSequence, HawkesModel
from .inference import FitOptions, FitResult, InsufficientDataError, fit

CRITERIA = ("aic", "aicc", "bic", "hq", "aicc_aic")

#: Sample-size threshold below which the combined rule applies the
#: small-sample correction. ``None`` selects the 40 * k_max variant.
DEFAULT_AICC_THRESHOLD = 120


def aic(log_likelihood: float, k: int) -> float:
    """-2L + 2k."""
    return -2.0 * log_likelihood + 2.0 * k


def aicc(log_likelihood: float, k: int, n: int) -> float:
    """Small-sample corrected variant: -2L + 2kn / (n - k - 1)."""
    if n <= k + 1:
        raise ValueError(f"need n > k + 1 for the correction, got n={n}, k={k}")
    return -2.0 * log_likelihood + 2.0 * k * n / (n - k - 1)


def bic(log_likelihood: float, k: int, n: int) -> float:
    """-2L + k ln(n)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got n={n}")
    return -2.0 * log_likelihood + k * math.log(n)


def hq(log_likelihood: float, k: int, n: int) -> float:
    """-2L + 2k ln(ln(n)); requires n >= 3 so the penalty is positive."""
    if n <= 2:
        raise ValueError(f"need n >= 3, got n={n}")
    return -2.0 * log_likelihood + 2.0 * k * math.log(math.log(n))


def criterion_value(
    criterion: str,
    log_likelihood: float,
    k: int,
    n: int,
    aicc_threshold: int | None = DEFAULT_AICC_THRESHOLD,
    k_max: int | None = None,
) -> float:
    """Evaluate a named criterion; ``aicc_aic`` switches on sample size."""
    if criterion == "aic":
        return aic(log_likelihood, k)
    if criterion == "aicc":
        return aicc(log_likelihood, k, n)
    if criterion == "bic":
        return bic(log_likelihood, k, n)
    if criterion == "hq":
        return hq(log_likelihood, k, n)
    if criterion == "aicc_aic":
        threshold = aicc_threshold
        if threshold is None:
            if k_max is None:
                raise ValueError("the 40 * k_max rule needs k_max")
            threshold = 40 * k_max
        return aicc(log_likelihood, k, n) if n < threshold else aic(log_likelihood, k)
    raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")


def choose_order(orders, values) -> int:
    """Order with the smallest criterion value; ties go to the smaller order."""
    pairs = sorted(zip(orders, values))
    if not pairs:
        raise ValueError("no candidate orders")
    best_order, best_value = pairs[0]
    for order, value in pairs[1:]:
        if value < best_value:
            best_order, best_value = order, value
    return best_order


@dataclass(frozen=True)
class SelectionResult:
    criterion: str
    candidate_orders: tuple[int, ...]
    ic_values: tuple[float, ...]
    fits: tuple[FitResult, ...]
    chosen_order: int
    skipped: tuple[tuple[int, str], ...] = ()

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "candidate_orders": list(self.candidate_orders),
            "ic_values": list(self.ic_values),
            "fits": [f.to_dict() for f in self.fits],
            "chosen_order": self.chosen_order,
            "skipped": [list(item) for item in self.skipped],
        }


def _augmented_starts(model: HawkesModel):
    """The model with one extra near-zero term, above and below its rates."""
    alpha, beta = list(model.alpha), list(model.beta)
    for beta_new in (2.0 * beta[-1], 0.5 * beta[0]):
        yield HawkesModel.from_params(
            model.mu, alpha + [1e-3 * beta_new], beta + [beta_new]
        )


def fit_orders(
    events: EventSequence,
    candidate_orders,
    options: FitOptions = FitOptions(),
):
    """Fit every candidate order once; orders with too little data are skipped.

    Orders are fitted smallest first; each order also gets warm starts built
    from the previous order's optimum (one extra near-zero term), so the
    nested maxima are non-decreasing in practice.
    """
    fits: dict[int, FitResult] = {}
    skipped: list[tuple[int, str]] = []
    previous: FitResult | None = None
    for order in sorted(set(int(p) for p in candidate_orders)):
        try:
            best = fit(events, order, options)
        except InsufficientDataError as exc:
            skipped.append((order, str(exc)))
            continue
        if previous is not None and previous.model.order == order - 1:
            warm_options = replace(options, restarts=1)
            for start in _augmented_starts(previous.model):
                warm = fit(events, order, warm_options, initial_model=start)
                if warm.log_likelihood > best.log_likelihood:
                    best = warm
        fits[order] = best
        previous = best
    if not fits:
        raise InsufficientDataError("no candidate order could be fitted")
    return fits, tuple(skipped)


def selection_from_fits(
    fits: dict[int, FitResult],
    criterion: str,
    n: int,
    skipped=(),
    aicc_threshold: int | None = DEFAULT_AICC_THRESHOLD,
    k_max: int | None = None,
) -> SelectionResult:
    """Apply one criterion to already-fitted candidates."""
    orders = tuple(sorted(fits))
    if k_max is None:
        k_max = max(1 + 2 * p for p in orders)
    values = tuple(
        criterion_value(
            criterion,
            fits[p].log_likelihood,
            1 + 2 * p,
            n,
            aicc_threshold=aicc_threshold,
            k_max=k_max,
        )
        for p in orders
    )
    return SelectionResult(
        criterion=criterion,
        candidate_orders=orders,
        ic_values=values,
        fits=tuple(fits[p] for p in orders),
        chosen_order=choose_order(orders, values),
        skipped=tuple(skipped),
    )


def select_order(
    events: EventSequence,
    candidate_orders,
    criterion: str,
    options: FitOptions = FitOptions(),
    aicc_threshold: int | None = DEFAULT_AICC_THRESHOLD,
) -> SelectionResult:
    """Fit all candidate orders and pick the criterion minimizer.

    Orders that cannot be fitted for lack of data are excluded (recorded in
    ``skipped``); the ``aicc_aic`` rule uses the event count against
    ``aicc_threshold`` (or 40 * k_max when the threshold is ``None``).
    """
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    candidates = tuple(sorted(set(int(p) for p in candidate_orders)))
    if not candidates:
        raise ValueError("candidate_orders must be non-empty")
    fits, skipped = fit_orders(events, candidates, options)
    k_max = max(1 + 2 * p for p in candidates)
    return selection_from_fits(
        fits,
        criterion,
        n=len(events),
        skipped=skipped,
        aicc_threshold=aicc_threshold,
        k_max=k_max,
    )
