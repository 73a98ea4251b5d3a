"""Model-level contradiction derivation for two-source models.

Given a model whose responses factor into per-angle and per-hidden-variable
signs, the derivation proceeds in three recorded stages: the product rule
(the four angle signs of every correlated tuple multiply to +1, witnessed by
a guaranteed event), the midpoint argument (equal-parity angles share one
sign, consecutive angles a fixed ratio), and the clash (an anticorrelated
tuple demands product -1, which the derived sign structure cannot deliver on
grids whose quarter turn is an even number of steps). A replay routine
re-executes every recorded step against the raw tables alone.

The same style of argument closes the single-source family at full detector
efficiency: an exhaustive per-hidden-value enumeration shows every sign
assignment violates some perfect-correlation constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angles import GridError, RationalAngle, sign_table
from .factorizer import (
    CounterexampleAlarm,
    Factorization,
    FamilyError,
    factorize,
)
from .model import (
    SINGLE_SOURCE,
    LhvModel,
    positive_weight_mask,
    product_tensor,
    realized_sectors,
)
from .quantum import expectation_singlet
from .robustness import RobustnessReport

__all__ = [
    "ProductRule",
    "MidpointStep",
    "RatioStep",
    "DoubledGridNote",
    "ConstantSignReport",
    "MinusClash",
    "EClassReport",
    "DerivationTrace",
    "Verdict",
    "derive_product_rule",
    "derive_constant_a",
    "check_minus_clash",
    "predict_E_class",
    "run",
    "replay",
    "SingleSourceCertificate",
    "single_source_contradiction",
]


# ---------------------------------------------------------------------------
# event bookkeeping shared by the derivation stages


def _require_two_source(model: LhvModel) -> None:
    if model.family == SINGLE_SOURCE:
        raise FamilyError("the derivation applies to two-source models only")


def _sector_events(model: LhvModel, sector: int) -> np.ndarray:
    """Boolean tensor over (angles..., lam1, lam4) of weighted live events."""
    products = product_tensor(model)
    # trailing-axis broadcasting aligns both the weight and sector masks
    return (products != 0) & positive_weight_mask(model) & (model.kappa == sector)


def _first_event(events: np.ndarray, phis: tuple[int, ...]) -> tuple[int, int] | None:
    cell = events[phis]
    if not cell.any():
        return None
    l1, l4 = np.unravel_index(int(np.argmax(cell)), cell.shape)
    return int(l1), int(l4)


def _midpoint_tuple(alpha: int, beta: int, gamma: int, sector: int):
    # correlation angle alpha + gamma - 2*beta = 0 in either sector
    if sector == 1:
        return (alpha, beta, gamma, beta)
    return (alpha, beta, beta, gamma)


def _ratio_tuple(k: int, m: int, sector: int):
    # correlation angle (k+1) - k - 1 = 0 in either sector
    if sector == 1:
        return ((k + 1) % m, k, 0, 1)
    return ((k + 1) % m, k, 1, 0)


# ---------------------------------------------------------------------------
# stage one: the product rule


@dataclass(frozen=True)
class ProductRule:
    """Every correlated tuple's four angle signs multiply to +1.

    ``events`` maps (sector, *angle steps) to the first weighted event
    proving the tuple is actually constrained by the model's counts;
    ``verified`` counts the tuples checked per sector.
    """

    sectors: tuple[int, ...]
    verified: dict
    events: dict


def derive_product_rule(fact: Factorization, model: LhvModel) -> ProductRule:
    _require_two_source(model)
    sectors = realized_sectors(model)
    verified: dict = {}
    events_map: dict = {}
    a = fact.a
    for sector in sectors:
        events = _sector_events(model, sector)
        plus = np.argwhere(sign_table(model.n, sector) == 1)
        has_event = events.any(axis=(-2, -1))
        for t in plus:
            phis = tuple(int(x) for x in t)
            if not has_event[phis]:
                raise CounterexampleAlarm(
                    f"correlated tuple {phis} in sector {sector:+d} has no"
                    " weighted event although the counts check passed"
                )
        products = a[plus[:, 0]] * a[plus[:, 1]] * a[plus[:, 2]] * a[plus[:, 3]]
        bad = np.flatnonzero(products != 1)
        if len(bad):
            phis = tuple(int(x) for x in plus[bad[0]])
            raise CounterexampleAlarm(
                f"angle signs at correlated tuple {phis} in sector"
                f" {sector:+d} multiply to -1"
            )
        first = np.argmax(events.reshape(events.shape[:4] + (-1,)), axis=-1)
        width = events.shape[-1]
        for t in plus:
            phis = tuple(int(x) for x in t)
            flat = int(first[phis])
            events_map[(sector,) + phis] = (flat // width, flat % width)
        verified[sector] = len(plus)
    return ProductRule(sectors=sectors, verified=verified, events=events_map)


# ---------------------------------------------------------------------------
# stage two: parity classes and the consecutive-angle ratio


@dataclass(frozen=True)
class MidpointStep:
    """a(alpha)*a(gamma) = +1 via the on-grid midpoint beta."""

    alpha: int
    beta: int
    gamma: int
    sector: int
    phis: tuple[int, int, int, int]
    event: tuple[int, int]


@dataclass(frozen=True)
class RatioStep:
    """a(k+1)*a(k) equals the shared ratio, via a correlated tuple."""

    k: int
    sector: int
    phis: tuple[int, int, int, int]
    event: tuple[int, int]
    value: int


@dataclass(frozen=True)
class DoubledGridNote:
    """The midpoint of a cross-parity pair exists only on the doubled grid.

    Recorded for documentation: the model defines no responses there, so on
    the grid itself the step forces nothing and is never used.
    """

    alpha: int
    gamma: int
    doubled_steps: int
    note: str


@dataclass(frozen=True)
class ConstantSignReport:
    sector: int
    even_value: int
    odd_value: int
    ratio: int
    constant: bool
    value: int | None
    midpoint_steps: tuple[MidpointStep, ...]
    ratio_steps: tuple[RatioStep, ...]
    doubled_notes: tuple[DoubledGridNote, ...]


def derive_constant_a(
    fact: Factorization,
    model: LhvModel,
    rule: ProductRule | None = None,
) -> ConstantSignReport:
    """Pin the per-angle sign structure from verified product-rule instances.

    Same-parity angle pairs share a sign: their on-grid midpoint yields a
    correlated tuple whose product collapses to a(alpha)*a(gamma). Across
    parities, consecutive angles keep a fixed ratio. On the grid itself that
    ratio can be -1 (an alternating assignment; the continuum argument would
    exclude it through off-grid midpoints, recorded here as documentation
    only), so the report states explicitly whether a is a single constant.
    """
    _require_two_source(model)
    if rule is None:
        rule = derive_product_rule(fact, model)
    sector = rule.sectors[0]
    m = model.steps
    a = fact.a

    midpoint_steps = []
    for alpha in range(m):
        for gamma in range(alpha + 2, m, 2):
            beta = (alpha + gamma) // 2
            phis = _midpoint_tuple(alpha, beta, gamma, sector)
            if int(a[alpha]) * int(a[gamma]) != 1:
                raise CounterexampleAlarm(
                    f"equal-parity angles {alpha} and {gamma} carry opposite"
                    " signs despite the verified product rule"
                )
            midpoint_steps.append(MidpointStep(
                alpha=alpha, beta=beta, gamma=gamma, sector=sector,
                phis=phis, event=rule.events[(sector,) + phis],
            ))

    ratio = int(a[1]) * int(a[0]) if m > 1 else 1
    ratio_steps = []
    for k in range(m):
        phis = _ratio_tuple(k, m, sector)
        value = int(a[(k + 1) % m]) * int(a[k])
        if value != ratio:
            raise CounterexampleAlarm(
                f"consecutive-angle sign ratio at {k} differs from the"
                " shared ratio despite the verified product rule"
            )
        ratio_steps.append(RatioStep(
            k=k, sector=sector, phis=phis,
            event=rule.events[(sector,) + phis], value=value,
        ))

    doubled_notes = (DoubledGridNote(
        alpha=0, gamma=1, doubled_steps=1,
        note="the midpoint of angles 0 and 1 sits at half a grid step; only"
             " a doubled grid hosts that tuple and the model assigns no"
             " responses there",
    ),)
    constant = ratio == 1
    return ConstantSignReport(
        sector=sector,
        even_value=int(a[0]),
        odd_value=int(a[1]) if m > 1 else int(a[0]),
        ratio=ratio,
        constant=constant,
        value=int(a[0]) if constant else None,
        midpoint_steps=tuple(midpoint_steps),
        ratio_steps=tuple(ratio_steps),
        doubled_notes=doubled_notes,
    )


# ---------------------------------------------------------------------------
# stage three: the anticorrelation clash


@dataclass(frozen=True)
class MinusClash:
    """An anticorrelated tuple whose guaranteed event cannot deliver -1."""

    phis: tuple[int, int, int, int]
    sector: int
    required: int
    derived: int
    event: tuple[int, int]


def check_minus_clash(
    fact: Factorization,
    model: LhvModel,
    constant: ConstantSignReport | None = None,
) -> MinusClash:
    """First anticorrelated tuple the derived sign structure fails.

    Raises GridError when the grid cannot force a clash: either it hosts no
    anticorrelated tuple at all (odd resolution), or every such tuple is
    satisfied by the alternating sign assignment (resolution 2 mod 4).
    """
    _require_two_source(model)
    sector = constant.sector if constant is not None else realized_sectors(model)[0]
    minus = np.argwhere(sign_table(model.n, sector) == -1)
    if len(minus) == 0:
        raise GridError(
            f"grid resolution {model.n} hosts no anticorrelated tuple;"
            " the contradiction needs one"
        )
    a = fact.a
    products = a[minus[:, 0]] * a[minus[:, 1]] * a[minus[:, 2]] * a[minus[:, 3]]
    bad = np.flatnonzero(products != -1)
    if len(bad) == 0:
        raise GridError(
            f"grid resolution {model.n} is too coarse to force the"
            " contradiction: every anticorrelated tuple is satisfied by the"
            " alternating sign assignment"
        )
    phis = tuple(int(x) for x in minus[bad[0]])
    event = _first_event(_sector_events(model, sector), phis)
    if event is None:
        raise CounterexampleAlarm(
            f"anticorrelated tuple {phis} in sector {sector:+d} has no"
            " weighted event although the counts check passed"
        )
    return MinusClash(
        phis=phis,
        sector=sector,
        required=-1,
        derived=int(products[bad[0]]),
        event=event,
    )


# ---------------------------------------------------------------------------
# the classical prediction against the quantum curve


@dataclass(frozen=True)
class EClassReport:
    """Classical expectation per tuple (+1 wherever defined) vs quantum."""

    sectors: tuple[int, ...]
    defined: dict
    e_class: dict
    e_quantum: dict
    all_plus_one: bool
    max_discrepancy: float


def predict_E_class(fact: Factorization, model: LhvModel) -> EClassReport:
    """Conditional expectation of the outcome product at every angle tuple.

    For a factorized model the hidden-variable signs square away and every
    tuple with at least one weighted event predicts +1, regardless of the
    correlation angle; the quantum curve instead swings with it. The report
    carries both tables per realized sector and their largest gap.
    """
    _require_two_source(model)
    m = model.steps
    n = model.n
    sectors = realized_sectors(model)
    products = product_tensor(model)
    idx = np.arange(m)
    by_index = np.array([
        expectation_singlet(RationalAngle(c, n)) for c in range(m)
    ])

    defined: dict = {}
    e_class: dict = {}
    e_quantum: dict = {}
    all_plus = True
    max_gap = 0.0
    for sector in sectors:
        c = (idx[:, None, None, None] - idx[None, :, None, None]
             + sector * (idx[None, None, :, None] - idx[None, None, None, :])) % m
        events = _sector_events(model, sector)
        has_pos = ((products == 1) & events).any(axis=(-2, -1))
        has_neg = ((products == -1) & events).any(axis=(-2, -1))
        if (has_pos & has_neg).any():
            raise CounterexampleAlarm(
                "a tuple mixes event products +1 and -1, impossible for a"
                " factorized model"
            )
        table = np.zeros((m,) * 4, dtype=np.int8)
        table[has_pos] = 1
        table[has_neg] = -1
        mask = has_pos | has_neg
        defined[sector] = mask
        e_class[sector] = table
        e_quantum[sector] = by_index[c]
        if has_neg.any():
            all_plus = False
        if mask.any():
            gap = float(np.abs(table[mask] - by_index[c][mask]).max())
            max_gap = max(max_gap, gap)
    return EClassReport(
        sectors=sectors,
        defined=defined,
        e_class=e_class,
        e_quantum=e_quantum,
        all_plus_one=all_plus,
        max_discrepancy=max_gap,
    )


# ---------------------------------------------------------------------------
# the verdict


@dataclass(frozen=True)
class DerivationTrace:
    sector: int
    rule: ProductRule
    constant: ConstantSignReport
    clash: MinusClash
    expectation: EClassReport


@dataclass(frozen=True)
class Verdict:
    """Outcome of running the full derivation on one model.

    kind is one of:
      inconsistent -- the model factorizes and the recorded derivation ends
        in an anticorrelated tuple its sign structure cannot satisfy;
      not_robust -- a robustness condition failed (report carries the
        witness);
      alarm -- the model escapes the dichotomy the derivation is built on:
        either a consistency relation failed on a model that already passed
        the robustness gate (such models exist; the relation proofs need
        paired events that sparse detection legally withholds, and the
        witness carries the violated relation), or a recorded step hit a
        contradiction mid-derivation (the witness text carries the chain).
    """

    kind: str
    trace: DerivationTrace | None = None
    report: RobustnessReport | None = None
    witness: object | None = None


def run(model: LhvModel) -> Verdict:
    """Factorize, derive, and clash; the full pipeline on one model."""
    try:
        result = factorize(model)
        if result.status == "not_robust":
            return Verdict(kind="not_robust", report=result.robustness)
        if result.status == "consistency_violated":
            # The factorizer's robustness gate has already passed here, so
            # the model earns its events honestly yet cannot carry the
            # factorized sign form.
            return Verdict(kind="alarm", witness=result.witness)
        fact = result.factorization
        rule = derive_product_rule(fact, model)
        constant = derive_constant_a(fact, model, rule)
        clash = check_minus_clash(fact, model, constant)
        expectation = predict_E_class(fact, model)
    except CounterexampleAlarm as exc:
        return Verdict(kind="alarm", witness=str(exc))
    trace = DerivationTrace(
        sector=constant.sector,
        rule=rule,
        constant=constant,
        clash=clash,
        expectation=expectation,
    )
    return Verdict(kind="inconsistent", trace=trace)


def replay(trace: DerivationTrace, model: LhvModel) -> bool:
    """Re-execute every recorded step against the raw tables alone.

    Checks that each cited event carries weight, announces the step's
    sector, and yields the claimed outcome product, and that the
    expectation tables recompute; no factorization is consulted. Raises
    ValueError on the first mismatch.
    """
    _require_two_source(model)
    products = product_tensor(model)
    weight_ok = positive_weight_mask(model)

    def event_product(phis, sector, event):
        l1, l4 = event
        if model.kappa[l1, l4] != sector:
            raise ValueError(f"cited event {event} is not in sector {sector:+d}")
        if not weight_ok[l1, l4]:
            raise ValueError(f"cited event {event} carries no weight")
        value = int(products[phis + (l1, l4)])
        if value == 0:
            raise ValueError(f"cited event {event} at {phis} is silent")
        return value

    for step in trace.constant.midpoint_steps + trace.constant.ratio_steps:
        if sign_table(model.n, step.sector)[step.phis] != 1:
            raise ValueError(f"{step.phis} is not a correlated tuple")
        if event_product(step.phis, step.sector, step.event) != 1:
            raise ValueError(f"event product at {step.phis} is not +1")

    clash = trace.clash
    if sign_table(model.n, clash.sector)[clash.phis] != -1:
        raise ValueError(f"{clash.phis} is not an anticorrelated tuple")
    if event_product(clash.phis, clash.sector, clash.event) != clash.derived:
        raise ValueError("the clash event's product differs from the trace")
    if clash.derived == clash.required:
        raise ValueError("the recorded clash does not actually clash")

    for sector in trace.expectation.sectors:
        events = _sector_events(model, sector)
        has_pos = ((products == 1) & events).any(axis=(-2, -1))
        has_neg = ((products == -1) & events).any(axis=(-2, -1))
        want = np.zeros_like(trace.expectation.e_class[sector])
        want[has_pos] = 1
        want[has_neg] = -1
        if not np.array_equal(want, trace.expectation.e_class[sector]):
            raise ValueError("an expectation table does not replay")
    return True


# ---------------------------------------------------------------------------
# single-source closure at full efficiency


@dataclass(frozen=True)
class SingleSourceCertificate:
    """Exhaustive refutation of fully-efficient single-source assignments.

    A single-source model mixes per-hidden-value assignments, and at full
    efficiency each assignment must satisfy every perfect-correlation
    constraint of its own announcement sector; refuting every assignment in
    both sectors therefore refutes every model. ``survivors`` maps each
    sector to None or to one surviving (first station, last station) pair of
    sign vectors; ``contradicted`` counts the refuted pairs.
    """

    n: int
    assignments_checked: int
    contradicted: dict
    survivors: dict
    all_contradicted: bool
    narrative: tuple[str, ...]


def single_source_contradiction(n: int) -> SingleSourceCertificate:
    """Close the single-source family at full efficiency on the pi/n grid.

    The analyzer table is not enumerated: at full efficiency every response
    is +-1 and the diagonal correlated tuples (b, b, g, g) force the
    analyzer sign at (b, g) to the product of the two station signs, the
    only candidate any assignment could use. What remains is an exhaustive
    scan over pairs of per-station sign vectors.
    """
    m = 2 * n
    combos = 1 << m
    bits = (np.arange(combos)[:, None] >> np.arange(m)[None, :]) & 1
    signs = (1 - 2 * bits).astype(np.int8)  # row i = one station assignment

    contradicted: dict = {}
    survivors: dict = {}
    for sector in (1, -1):
        table = sign_table(n, sector)
        plus = np.argwhere(table == 1)
        minus = np.argwhere(table == -1)
        if len(minus) == 0:
            raise GridError(
                f"grid resolution {n} hosts no anticorrelated tuple;"
                " the contradiction needs one"
            )
        # with the forced analyzer, the product at (t0,t1,t2,t3) splits into
        # A(t0)A(t1) from the first station times D(t2)D(t3) from the last;
        # correlated tuples need the two factors equal, anticorrelated
        # tuples opposite, so a pair (i, j) survives exactly when the
        # combined signatures below coincide
        first_sig = np.concatenate([
            signs[:, plus[:, 0]] * signs[:, plus[:, 1]],
            signs[:, minus[:, 0]] * signs[:, minus[:, 1]],
        ], axis=1)
        last_sig = np.concatenate([
            signs[:, plus[:, 2]] * signs[:, plus[:, 3]],
            -(signs[:, minus[:, 2]] * signs[:, minus[:, 3]]),
        ], axis=1)
        first_index: dict[bytes, list[int]] = {}
        for i in range(combos):
            first_index.setdefault(first_sig[i].tobytes(), []).append(i)
        surviving = 0
        witness = None
        for j in range(combos):
            mates = first_index.get(last_sig[j].tobytes())
            if not mates:
                continue
            surviving += len(mates)
            if witness is None:
                witness = (signs[mates[0]].copy(), signs[j].copy())
        contradicted[sector] = combos * combos - surviving
        survivors[sector] = witness

    all_contradicted = all(s is None for s in survivors.values())
    half = n // 2
    if half % 2 == 0:
        closing = (
            f"the anticorrelated tuple at a quarter turn demands r**{half}"
            " = -1, impossible for either sign of r because the exponent"
            " is even, so every assignment fails some constraint"
        )
    else:
        closing = (
            f"r = -1 satisfies r**{half} = -1, so alternating assignments"
            " survive; this grid is too coarse for the contradiction"
        )
    narrative = (
        "at full efficiency every station response is +1 or -1 and every"
        " hidden value produces an event at every tuple",
        "diagonal correlated tuples (b, b, g, g) force the analyzer sign at"
        " (b, g) to the product of the first station sign at b and the last"
        " station sign at g",
        "correlated tuples stepping both angles by one force a shared ratio"
        " r between consecutive signs at both stations, so every station"
        " sign vector is a constant times r**k",
        closing,
    )
    return SingleSourceCertificate(
        n=n,
        assignments_checked=2 * combos * combos,
        contradicted=contradicted,
        survivors=survivors,
        all_contradicted=all_contradicted,
        narrative=narrative,
    )
