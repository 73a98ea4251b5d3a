"""Constructive sign factorization of two-source models.

The target form writes every response as a product of one sign per angle and
one sign per hidden variable: first station a(angle)*u(lam1), last station
a(angle)*v(lam4), analyzer a(angle2)*a(angle3)*u(lam1)*v(lam4), with the
detection pattern carried separately by the zeros of the tables.

``check_consistency`` scans the product relations any factorizable model must
satisfy. ``build_components`` splits the support into blocks that share no
nonzero cell. ``seed_component`` anchors one sign per block and propagates
the rest through the nonzero cells, recording every forced assignment.
``merge_components`` aligns the blocks' leftover global signs against the
correlated angle tuples. The whole pipeline is deterministic: the same model
always yields the same factorization and the same trace.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .angles import sign_table
from .model import (
    SINGLE_SOURCE,
    LhvModel,
    realized_sectors,
    selected_analyzer,
)
from .robustness import RobustnessReport, is_robust

__all__ = [
    "FamilyError",
    "CounterexampleAlarm",
    "ConsistencyWitness",
    "Component",
    "ComponentAssignment",
    "Factorization",
    "FactorizeResult",
    "TraceStep",
    "check_consistency",
    "build_components",
    "seed_component",
    "merge_components",
    "factorize",
    "find_dangling_support",
]


class FamilyError(TypeError):
    """Operation defined only for models with two independent sources."""


class CounterexampleAlarm(RuntimeError):
    """A contradiction the theorem rules out for robust consistent models.

    If this ever fires on such a model, either the implementation or the
    theorem's premises are falsified; the message carries the conflicting
    chain so the case can be replayed.
    """


@dataclass(frozen=True)
class ConsistencyWitness:
    """First instantiation of a product relation that evaluates to -1."""

    relation: str
    indices: dict
    product: int


@dataclass(frozen=True)
class Component:
    """One block of the support graph, listed by member indices."""

    angles: tuple[int, ...]
    first_hidden: tuple[int, ...]
    last_hidden: tuple[int, ...]
    anchor: tuple[str, int]


@dataclass(frozen=True)
class TraceStep:
    kind: str  # seed | unit | elimination | flip
    target: tuple[str, int]
    value: int
    reason: str


@dataclass(frozen=True)
class ComponentAssignment:
    component: Component
    a: dict
    u: dict
    v: dict
    trace: tuple[TraceStep, ...]
    eliminated: int


@dataclass(frozen=True)
class Factorization:
    """Total sign tables reproducing every nonzero response exactly."""

    a: np.ndarray
    u: np.ndarray
    v: np.ndarray
    components: tuple[Component, ...]
    merged: tuple[bool, ...]
    trace: tuple[TraceStep, ...]


@dataclass(frozen=True)
class FactorizeResult:
    status: str  # ok | not_robust | consistency_violated
    factorization: Factorization | None = None
    robustness: RobustnessReport | None = None
    witness: ConsistencyWitness | None = None


def _reject_single_source(model: LhvModel) -> None:
    if model.family == SINGLE_SOURCE:
        raise FamilyError(
            "factorization into per-source signs applies to two independent"
            " sources only"
        )


def _first_violation(bad: np.ndarray) -> tuple[int, ...] | None:
    if not bad.any():
        return None
    return tuple(int(i) for i in np.unravel_index(int(np.argmax(bad)), bad.shape))


# ---------------------------------------------------------------------------
# consistency relations


def check_consistency(model: LhvModel, variants: bool = False) -> ConsistencyWitness | None:
    """Exhaustively scan the product relations; None means all hold.

    Every relation multiplies table entries whose hidden-variable and angle
    indices each appear an even number of times, so the product must be +1
    unless some factor is 0 (which makes the instance vacuous). The scan
    simply looks for product -1. ``variants`` additionally checks the three
    alternative placements of the primed hidden variables in the triple
    relation.
    """
    _reject_single_source(model)
    a, d = model.a, model.d
    f = selected_analyzer(model)
    fdiag = np.einsum("iikl->ikl", f)

    # two angles, one hidden value per side, across both stations
    cross = (
        a[:, None, :, None] * a[None, :, :, None]
        * d[:, None, None, :] * d[None, :, None, :]
    )
    where = _first_violation(cross == -1)
    if where is not None:
        keys = ("alpha", "beta", "lam1", "lam4")
        return ConsistencyWitness("cross_station_rectangle",
                                  dict(zip(keys, where)), -1)

    # rectangle within one station's table
    for name, table, lam_key in (
        ("first_station_rectangle", a, "lam1"),
        ("last_station_rectangle", d, "lam4"),
    ):
        rect = (
            table[:, None, :, None] * table[:, None, None, :]
            * table[None, :, :, None] * table[None, :, None, :]
        )
        where = _first_violation(rect == -1)
        if where is not None:
            keys = ("alpha", "beta", lam_key, lam_key + "_alt")
            return ConsistencyWitness(name, dict(zip(keys, where)), -1)

    # analyzer table: symmetric in its two angle slots
    sym = f * f.transpose(1, 0, 2, 3)
    where = _first_violation(sym == -1)
    if where is not None:
        keys = ("alpha", "beta", "lam1", "lam4")
        return ConsistencyWitness("analyzer_symmetry", dict(zip(keys, where)), -1)

    eight_keys = ("alpha", "beta", "gamma", "delta",
                  "lam1", "lam1_alt", "lam4", "lam4_alt")
    ft = f.transpose(1, 0, 2, 3)

    def quad(name, t1, t2, t3, t4):
        where = _first_violation((t1 * t2 * t3 * t4) == -1)
        if where is None:
            return None
        return ConsistencyWitness(name, dict(zip(eight_keys, where)), -1)

    # one cell expressed through three others
    witness = quad(
        "analyzer_triple",
        f[:, :, None, None, :, None, :, None],
        f[:, None, :, None, :, None, None, :],
        f[None, :, :, None, None, :, :, None],
        fdiag[None, None, None, :, None, :, None, :],
    )
    if witness is not None:
        return witness

    # two pairs sharing a shifted angle
    witness = quad(
        "analyzer_pair_shift",
        f[:, :, None, None, :, None, :, None],
        f[:, None, :, None, :, None, None, :],
        ft[None, :, None, :, None, :, :, None],
        ft[None, None, :, :, None, :, None, :],
    )
    if witness is not None:
        return witness

    # equal-angle diagonal cells against one repeated off-diagonal cell
    witness = quad(
        "analyzer_diagonal",
        fdiag[None, None, :, None, :, None, :, None],
        fdiag[None, None, None, :, None, :, None, :],
        f[:, :, None, None, :, None, :, None],
        f[:, :, None, None, None, :, None, :],
    )
    if witness is not None:
        return witness

    if variants:
        for tag, t2, t3, t4 in (
            (
                "analyzer_triple_alt1",
                f[:, None, :, None, None, :, :, None],
                f[None, :, :, None, :, None, None, :],
                fdiag[None, None, None, :, None, :, None, :],
            ),
            (
                "analyzer_triple_alt2",
                f[:, None, :, None, :, None, None, :],
                f[None, :, :, None, None, :, None, :],
                fdiag[None, None, None, :, None, :, :, None],
            ),
            (
                "analyzer_triple_alt3",
                f[:, None, :, None, None, :, None, :],
                f[None, :, :, None, :, None, :, None],
                fdiag[None, None, None, :, None, :, None, :],
            ),
        ):
            witness = quad(tag, f[:, :, None, None, :, None, :, None], t2, t3, t4)
            if witness is not None:
                return witness
    return None


def find_dangling_support(model: LhvModel) -> dict | None:
    """First station response that no analyzer/partner pair can complete.

    Returns None when every nonzero first-station (or last-station) entry has
    at least one completing event partner; robust models never fail this.
    """
    _reject_single_source(model)
    f = selected_analyzer(model)
    # lam1 -> exists lam4 with analyzer and last-station support
    f_any = (f != 0).any(axis=(0, 1))  # (L1, L4)
    d_any = (model.d != 0).any(axis=0)  # (L4,)
    lam1_ok = (f_any & d_any[None, :]).any(axis=1)  # (L1,)
    bad = np.argwhere((model.a != 0) & ~lam1_ok[None, :])
    if len(bad):
        k, l1 = bad[0]
        return {"side": 1, "angle": int(k), "hidden": int(l1)}
    a_any = (model.a != 0).any(axis=0)  # (L1,)
    lam4_ok = (f_any & a_any[:, None]).any(axis=0)  # (L4,)
    bad = np.argwhere((model.d != 0) & ~lam4_ok[None, :])
    if len(bad):
        k, l4 = bad[0]
        return {"side": 4, "angle": int(k), "hidden": int(l4)}
    return None


# ---------------------------------------------------------------------------
# sign variables and parity constraints

_A_VAR, _U_VAR, _V_VAR = "a", "u", "v"


@dataclass
class _Constraint:
    vars: tuple[int, ...]  # parity-reduced variable ids
    bit: int  # 0 for +1, 1 for -1
    kind: str
    where: str


def _var_layout(model: LhvModel):
    m = model.steps
    return m, m + model.size1, m + model.size1 + model.size4


def _var_name(model: LhvModel, var: int) -> tuple[str, int]:
    m, u_end, v_end = _var_layout(model)
    if var < m:
        return (_A_VAR, var)
    if var < u_end:
        return (_U_VAR, var - m)
    return (_V_VAR, var - u_end)


def _parity_reduce(vars_with_repeats) -> tuple[int, ...]:
    seen: dict[int, int] = {}
    for v in vars_with_repeats:
        seen[v] = seen.get(v, 0) ^ 1
    return tuple(sorted(v for v, parity in seen.items() if parity))


def _build_constraints(model: LhvModel) -> list[_Constraint]:
    m, u_base, v_base = model.steps, model.steps, model.steps + model.size1
    f = selected_analyzer(model)
    out: list[_Constraint] = []

    for k, l1 in np.argwhere(model.a != 0):
        out.append(_Constraint(
            vars=_parity_reduce((k, u_base + l1)),
            bit=int(model.a[k, l1] < 0),
            kind="first_station_cell",
            where=f"first station angle {k}, hidden {l1}",
        ))
    for k, l4 in np.argwhere(model.d != 0):
        out.append(_Constraint(
            vars=_parity_reduce((k, v_base + l4)),
            bit=int(model.d[k, l4] < 0),
            kind="last_station_cell",
            where=f"last station angle {k}, hidden {l4}",
        ))
    for k2, k3, l1, l4 in np.argwhere(f != 0):
        out.append(_Constraint(
            vars=_parity_reduce((k2, k3, u_base + l1, v_base + l4)),
            bit=int(f[k2, k3, l1, l4] < 0),
            kind="analyzer_cell",
            where=f"analyzer angles ({k2},{k3}), hidden ({l1},{l4})",
        ))

    # bridges: a silent station entry whose sign is still pinned by an
    # analyzer cell together with the other station
    for k, l1 in np.argwhere(model.a == 0):
        partner = f[k, :, l1, :] * model.d  # (angle, lam4) products
        hit = np.argwhere(partner != 0)
        if len(hit):
            beta, l4 = hit[0]
            out.append(_Constraint(
                vars=_parity_reduce((k, u_base + l1)),
                bit=int(partner[beta, l4] < 0),
                kind="first_station_bridge",
                where=(f"analyzer ({k},{beta}) with last station {beta}"
                       f" over hidden ({l1},{l4})"),
            ))
    for k, l4 in np.argwhere(model.d == 0):
        partner = f[:, k, :, l4] * model.a  # (angle, lam1) products
        hit = np.argwhere(partner != 0)
        if len(hit):
            beta, l1 = hit[0]
            out.append(_Constraint(
                vars=_parity_reduce((k, v_base + l4)),
                bit=int(partner[beta, l1] < 0),
                kind="last_station_bridge",
                where=(f"analyzer ({beta},{k}) with first station {beta}"
                       f" over hidden ({l1},{l4})"),
            ))

    # rectangle fills: three live cells of a station rectangle pin the fourth
    for table, base, kind in (
        (model.a, u_base, "first_station_fill"),
        (model.d, v_base, "last_station_fill"),
    ):
        silent = np.argwhere(table == 0)
        for beta, lam_alt in silent:
            live = (table[:, :] != 0)
            cand = live & live[beta, :][None, :] & live[:, lam_alt][:, None]
            # cand[alpha, lam]: alpha row live at both columns, beta live at lam
            hit = np.argwhere(cand)
            picked = None
            for alpha, lam in hit:
                if alpha != beta and lam != lam_alt:
                    picked = (alpha, lam)
                    break
            if picked is None:
                continue
            alpha, lam = picked
            prod = int(table[alpha, lam]) * int(table[beta, lam]) * int(
                table[alpha, lam_alt]
            )
            out.append(_Constraint(
                vars=_parity_reduce((beta, base + lam_alt)),
                bit=int(prod < 0),
                kind=kind,
                where=(f"rectangle through angles ({alpha},{beta})"
                       f" and hidden ({lam},{lam_alt})"),
            ))
    return out


# ---------------------------------------------------------------------------
# components


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[max(rx, ry)] = min(rx, ry)


def build_components(model: LhvModel) -> tuple[Component, ...]:
    """Partition angles and hidden values into non-interacting blocks.

    Every nonzero cell links all the indices it touches; blocks are returned
    ordered by their smallest member, angles counted first.
    """
    _reject_single_source(model)
    m, u_end, v_end = _var_layout(model)
    uf = _UnionFind(v_end)
    for constraint in _build_constraints(model):
        first = constraint.vars[0] if constraint.vars else None
        for var in constraint.vars[1:]:
            uf.union(first, var)
    groups: dict[int, list[int]] = {}
    for var in range(v_end):
        groups.setdefault(uf.find(var), []).append(var)
    components = []
    for root in sorted(groups):
        members = groups[root]
        angles = tuple(v for v in members if v < m)
        first_hidden = tuple(v - m for v in members if m <= v < u_end)
        last_hidden = tuple(v - u_end for v in members if v >= u_end)
        components.append(Component(
            angles=angles,
            first_hidden=first_hidden,
            last_hidden=last_hidden,
            anchor=_var_name(model, min(members)),
        ))
    return tuple(components)


def _component_vars(model: LhvModel, component: Component) -> set[int]:
    m, u_base, v_base = model.steps, model.steps, model.steps + model.size1
    out = set(component.angles)
    out.update(u_base + i for i in component.first_hidden)
    out.update(v_base + i for i in component.last_hidden)
    return out


def seed_component(model: LhvModel, component: Component) -> ComponentAssignment:
    """Assign every sign in one block, anchored at its smallest member.

    Unit propagation over the block's cells comes first and is recorded step
    by step; if the support is too thin to finish that way, the leftover
    subsystem is solved by elimination (free signs default to +1).
    A contradiction raises CounterexampleAlarm.
    """
    _reject_single_source(model)
    members = _component_vars(model, component)
    constraints = [c for c in _build_constraints(model)
                   if c.vars and set(c.vars) <= members]
    assignment: dict[int, int] = {}
    trace: list[TraceStep] = []

    kind, index = component.anchor
    m, u_base, v_base = model.steps, model.steps, model.steps + model.size1
    anchor_var = {_A_VAR: index, _U_VAR: u_base + index, _V_VAR: v_base + index}[kind]
    assignment[anchor_var] = 0
    trace.append(TraceStep(
        kind="seed",
        target=component.anchor,
        value=1,
        reason="block anchor fixed to +1; all other signs are forced"
               " relative to it",
    ))

    by_var: dict[int, list[int]] = {}
    for i, c in enumerate(constraints):
        for var in c.vars:
            by_var.setdefault(var, []).append(i)
    unknown = [sum(1 for var in c.vars if var not in assignment)
               for c in constraints]
    queue = deque(i for i, count in enumerate(unknown) if count <= 1)
    seen_zero: set[int] = set()

    def settle(var: int, value: int, source: _Constraint) -> None:
        assignment[var] = value
        trace.append(TraceStep(
            kind="unit",
            target=_var_name(model, var),
            value=1 if value == 0 else -1,
            reason=f"{source.kind}: {source.where}",
        ))
        for j in by_var.get(var, ()):
            unknown[j] -= 1
            if unknown[j] <= 1:
                queue.append(j)

    while queue:
        i = queue.popleft()
        c = constraints[i]
        missing = [var for var in c.vars if var not in assignment]
        if not missing:
            if i in seen_zero:
                continue
            seen_zero.add(i)
            parity = c.bit
            for var in c.vars:
                parity ^= assignment[var]
            if parity:
                raise CounterexampleAlarm(
                    f"conflicting sign chain at {c.kind} ({c.where}):"
                    " the cell disagrees with the values already forced"
                )
            continue
        if len(missing) == 1:
            value = c.bit
            for var in c.vars:
                if var != missing[0]:
                    value ^= assignment[var]
            settle(missing[0], value, c)

    eliminated = 0
    leftovers = sorted(members - set(assignment))
    if leftovers:
        eliminated = _eliminate(model, constraints, assignment, leftovers, trace)

    a = {var: 1 - 2 * assignment[var] for var in members if var < m}
    u = {var - u_base: 1 - 2 * assignment[var]
         for var in members if u_base <= var < v_base}
    v = {var - v_base: 1 - 2 * assignment[var]
         for var in members if var >= v_base}
    return ComponentAssignment(
        component=component, a=a, u=u, v=v,
        trace=tuple(trace), eliminated=eliminated,
    )


def _eliminate(model, constraints, assignment, leftovers, trace) -> int:
    """Gaussian elimination over the block's not-yet-forced signs."""
    position = {var: i for i, var in enumerate(leftovers)}
    rows: list[tuple[int, int]] = []  # (mask over leftovers, rhs)
    for c in constraints:
        mask, rhs = 0, c.bit
        for var in c.vars:
            if var in assignment:
                rhs ^= assignment[var]
            else:
                mask |= 1 << position[var]
        if mask:
            rows.append((mask, rhs))
        elif rhs:
            raise CounterexampleAlarm(
                f"conflicting sign chain at {c.kind} ({c.where})"
            )
    pivots: dict[int, tuple[int, int]] = {}
    for mask, rhs in rows:
        # each pivot row's highest bit is its pivot, so reducing from the
        # top down terminates with a mask whose top bit is fresh
        while mask:
            top = mask.bit_length() - 1
            if top not in pivots:
                break
            pmask, prhs = pivots[top]
            mask ^= pmask
            rhs ^= prhs
        if mask == 0:
            if rhs:
                raise CounterexampleAlarm(
                    "sign subsystem is unsatisfiable after elimination"
                )
            continue
        pivots[mask.bit_length() - 1] = (mask, rhs)
    values = {var: 0 for var in leftovers}  # free signs default to +1
    for pivot_bit in sorted(pivots):  # lower pivots feed higher rows
        pmask, prhs = pivots[pivot_bit]
        acc = prhs
        bits = pmask & ~(1 << pivot_bit)
        while bits:
            low = bits & -bits
            acc ^= values[leftovers[low.bit_length() - 1]]
            bits ^= low
        values[leftovers[pivot_bit]] = acc
    for var in leftovers:
        assignment[var] = values[var]
        trace.append(TraceStep(
            kind="elimination",
            target=_var_name(model, var),
            value=1 - 2 * values[var],
            reason="solved from the block's remaining cells by elimination",
        ))
    return len(leftovers)


def merge_components(
    model: LhvModel, assignments: tuple[ComponentAssignment, ...]
) -> Factorization:
    """Align block signs across correlated tuples and assemble the result.

    A correlated tuple can pin a block's sign only when an odd number of its
    four angles land in that block and the rest in already-aligned blocks;
    such a tuple demands a flip exactly when its four-angle sign product is
    -1. The flip (a, u, v of the block together) preserves every response.
    The first block is the reference frame; blocks never mixed with it by
    any correlated tuple keep their seed signs and are reported unmerged.
    """
    _reject_single_source(model)
    m = model.steps
    a = np.ones(m, dtype=np.int8)
    u = np.ones(model.size1, dtype=np.int8)
    v = np.ones(model.size4, dtype=np.int8)
    comp_of_angle = np.zeros(m, dtype=int)
    for ci, asg in enumerate(assignments):
        for k, s in asg.a.items():
            a[k] = s
            comp_of_angle[k] = ci
        for i, s in asg.u.items():
            u[i] = s
        for j, s in asg.v.items():
            v[j] = s

    trace = [step for asg in assignments for step in asg.trace]
    merged = [False] * len(assignments)
    if assignments:
        merged[0] = True

    sectors = realized_sectors(model) or (1,)
    correlated: list[np.ndarray] = []
    for sector in sectors:
        correlated.append(np.argwhere(sign_table(model.n, sector) == 1))

    progress = True
    while progress:
        progress = False
        for ci, asg in enumerate(assignments):
            if merged[ci]:
                continue
            demands: set[int] = set()
            merged_ids = [j for j, flag in enumerate(merged) if flag]
            for tuples in correlated:
                comps4 = comp_of_angle[tuples]  # (T, 4)
                in_this = comps4 == ci
                allowed = in_this | np.isin(comps4, merged_ids)
                usable = allowed.all(axis=1) & (in_this.sum(axis=1) % 2 == 1)
                if not usable.any():
                    continue
                products = a[tuples[usable]].prod(axis=1)
                demands.update(int(p) for p in np.unique(products))
            if not demands:
                continue
            if demands == {1, -1}:
                raise CounterexampleAlarm(
                    "block sign cannot satisfy all correlated tuples that mix"
                    f" it with aligned blocks (block {ci})"
                )
            if demands == {-1}:
                for k in asg.a:
                    a[k] = -a[k]
                for i in asg.u:
                    u[i] = -u[i]
                for j in asg.v:
                    v[j] = -v[j]
                trace.append(TraceStep(
                    kind="flip",
                    target=assignments[ci].component.anchor,
                    value=-1,
                    reason=f"block {ci} flipped so mixing correlated tuples"
                           " multiply to +1",
                ))
            merged[ci] = True
            progress = True

    factorization = Factorization(
        a=a, u=u, v=v,
        components=tuple(asg.component for asg in assignments),
        merged=tuple(merged),
        trace=tuple(trace),
    )
    _verify_products(model, factorization)
    return factorization


def _verify_products(model: LhvModel, fact: Factorization) -> None:
    """Every nonzero response must be reproduced exactly."""
    a, u, v = fact.a, fact.u, fact.v
    want_a = a[:, None] * u[None, :]
    want_d = a[:, None] * v[None, :]
    f = selected_analyzer(model)
    want_f = (a[:, None, None, None] * a[None, :, None, None]
              * u[None, None, :, None] * v[None, None, None, :])
    for name, table, want in (
        ("first station", model.a, want_a),
        ("last station", model.d, want_d),
        ("analyzer", f, want_f),
    ):
        bad = (table != 0) & (table != want)
        if bad.any():
            where = np.unravel_index(int(np.argmax(bad)), bad.shape)
            raise CounterexampleAlarm(
                f"{name} response at {tuple(int(i) for i in where)} is not"
                " reproduced by the assembled signs"
            )


def factorize(model: LhvModel) -> FactorizeResult:
    """Full pipeline: robustness gate, consistency scan, seed, merge.

    The robustness gate enforces the correlated half of the sign law plus
    counts and relevance; those are exactly the properties the construction
    consumes. Inconsistent tables are reported with their witness; the
    construction itself raising CounterexampleAlarm means an input escaped
    both gates yet cannot factor, which the theorem forbids.
    """
    _reject_single_source(model)
    report = is_robust(model, minus_row=False)
    if not report.is_robust:
        return FactorizeResult(status="not_robust", robustness=report)
    dangling = find_dangling_support(model)
    if dangling is not None:
        raise CounterexampleAlarm(
            "a station response has no completing partner anywhere, which"
            f" counts and relevance are supposed to exclude: {dangling}"
        )
    witness = check_consistency(model)
    if witness is not None:
        return FactorizeResult(status="consistency_violated", witness=witness)
    components = build_components(model)
    assignments = tuple(seed_component(model, c) for c in components)
    factorization = merge_components(model, assignments)
    return FactorizeResult(status="ok", factorization=factorization)
