"""Robustness: the three conditions a serious local model must meet.

A model is robust when it reproduces the perfect correlations wherever all
three detectors fire, produces at least one detectable event at every angle
setting in every announcement sector it realizes, and contains no hidden
variable that never participates in any event. Each check either passes or
returns the lexicographically first witness (angle-major, then hidden
variables) so failures are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angles import sign_table
from .model import (
    SINGLE_SOURCE,
    LhvModel,
    positive_weight_mask,
    product_tensor,
    realized_sectors,
)

__all__ = [
    "CorrelationWitness",
    "CountsWitness",
    "RelevanceWitness",
    "RobustnessReport",
    "required_tensor",
    "check_perfect_correlations",
    "check_counts_nonempty",
    "check_relevance",
    "is_robust",
]


@dataclass(frozen=True)
class CorrelationWitness:
    """One assignment whose outcome product defies the correlation law."""

    phis: tuple[int, int, int, int]
    l1: int
    l4: int | None
    expected: int
    found: int


@dataclass(frozen=True)
class CountsWitness:
    """An angle tuple at which one realized sector records no event at all."""

    phis: tuple[int, int, int, int]
    sector: int


@dataclass(frozen=True)
class RelevanceWitness:
    """A hidden variable that participates in no event anywhere."""

    side: int  # 1 for the first source, 4 for the second
    index: int


@dataclass(frozen=True)
class RobustnessReport:
    correlation_witness: CorrelationWitness | None
    counts_witness: CountsWitness | None
    relevance_witness: RelevanceWitness | None

    @property
    def perfect_correlations_ok(self) -> bool:
        return self.correlation_witness is None

    @property
    def counts_ok(self) -> bool:
        return self.counts_witness is None

    @property
    def relevance_ok(self) -> bool:
        return self.relevance_witness is None

    @property
    def is_robust(self) -> bool:
        return (
            self.perfect_correlations_ok and self.counts_ok and self.relevance_ok
        )


def required_tensor(model: LhvModel) -> np.ndarray:
    """Required outcome product per angle tuple and assignment, int8.

    Every assignment is judged against the correlation angle of its own
    announcement sector. Zero entries mean the law is silent there.
    """
    plus = sign_table(model.n, 1)
    minus = sign_table(model.n, -1)
    choose = model.kappa == 1
    if model.family == SINGLE_SOURCE:
        return np.where(choose, plus[..., None], minus[..., None])
    return np.where(choose, plus[..., None, None], minus[..., None, None])


def _first_index(mask: np.ndarray) -> tuple[int, ...] | None:
    if not mask.any():
        return None
    flat = int(np.argmax(mask))  # first True in row-major order
    return tuple(int(i) for i in np.unravel_index(flat, mask.shape))


def check_perfect_correlations(
    model: LhvModel, minus_row: bool = True
) -> CorrelationWitness | None:
    """First assignment violating the correlation law, or None.

    With ``minus_row=False`` only the anticorrelation-free half of the law is
    enforced: tuples whose correlation angle demands product -1 are skipped.
    That restricted check is the precondition the factorization stage needs.
    """
    products = product_tensor(model)
    required = required_tensor(model)
    bad = (products != 0) & (required != 0) & (products != required)
    if not minus_row:
        bad &= required == 1
    where = _first_index(bad)
    if where is None:
        return None
    phis = tuple(where[:4])
    if model.family == SINGLE_SOURCE:
        l1, l4 = where[4], None
    else:
        l1, l4 = where[4], where[5]
    return CorrelationWitness(
        phis=phis,
        l1=l1,
        l4=l4,
        expected=int(required[where]),
        found=int(products[where]),
    )


def check_counts_nonempty(
    model: LhvModel, require_both_sectors: bool = False
) -> CountsWitness | None:
    """First angle tuple at which a checked sector records no event, or None.

    By default only sectors the weight-carrying kappa map actually realizes
    are checked; ``require_both_sectors=True`` demands events in both.
    """
    products = product_tensor(model)
    weighted = positive_weight_mask(model)
    sectors = (1, -1) if require_both_sectors else realized_sectors(model)
    lam_axes = (-1,) if model.family == SINGLE_SOURCE else (-2, -1)
    for sector in sectors:
        usable = (model.kappa == sector) & weighted
        covered = ((products != 0) & usable).any(axis=lam_axes)
        where = _first_index(~covered)
        if where is not None:
            return CountsWitness(phis=tuple(where), sector=sector)
    return None


def check_relevance(model: LhvModel) -> RelevanceWitness | None:
    """First hidden variable participating in no event, or None."""
    products = product_tensor(model)
    if model.family == SINGLE_SOURCE:
        active = (products != 0).any(axis=(0, 1, 2, 3))
        idle = _first_index(~active)
        return None if idle is None else RelevanceWitness(side=1, index=idle[0])
    active1 = (products != 0).any(axis=(0, 1, 2, 3, 5))
    idle = _first_index(~active1)
    if idle is not None:
        return RelevanceWitness(side=1, index=idle[0])
    active4 = (products != 0).any(axis=(0, 1, 2, 3, 4))
    idle = _first_index(~active4)
    if idle is not None:
        return RelevanceWitness(side=4, index=idle[0])
    return None


def is_robust(
    model: LhvModel,
    minus_row: bool = True,
    require_both_sectors: bool = False,
) -> RobustnessReport:
    """Run all three checks and bundle the verdicts."""
    return RobustnessReport(
        correlation_witness=check_perfect_correlations(model, minus_row=minus_row),
        counts_witness=check_counts_nonempty(
            model, require_both_sectors=require_both_sectors
        ),
        relevance_witness=check_relevance(model),
    )
