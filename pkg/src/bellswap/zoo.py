"""Catalog of reproducible models, one per behavior the pipeline exercises.

Every constructor is deterministic given its arguments: randomness is always
drawn from a seeded generator, so the same URI always denotes the same model.
The catalog covers the factorizable product family (dense and thinned), one
representative for each way robustness can fail, the two known robust
non-factorizable models, and the shared-source family with its
half-efficiency escape model.
"""

from __future__ import annotations

import inspect
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .model import (
    SINGLE_SOURCE,
    TWO_SOURCE,
    LhvModel,
    load,
    selected_analyzer,
)
from .robustness import is_robust
from .search import SearchSpace, forced_analyzer, search_single_source

__all__ = [
    "ZooError",
    "all_delta_one",
    "synthetic_factorizable",
    "evasive_nonrobust",
    "padded_irrelevant",
    "parity_split_robust",
    "both_sector_robust",
    "single_source_shift",
    "single_source_efficient_50",
    "two_source_shell",
    "catalog",
    "by_uri",
    "resolve",
]


class ZooError(ValueError):
    """A catalog constructor was misused or a model reference is malformed."""


def _uniform(size: int) -> list[Fraction]:
    return [Fraction(1, size)] * size


def _signs(rng: np.random.Generator, shape) -> np.ndarray:
    return (1 - 2 * rng.integers(0, 2, size=shape)).astype(np.int8)


def _check_grid(n) -> int:
    if not isinstance(n, int) or n < 1:
        raise ZooError("grid resolution n must be a positive integer")
    return 2 * n


def _alternating_pair_signs(m: int) -> np.ndarray:
    """The sign sequence +1,+1,-1,-1,... used by the robust catalog models."""
    return np.array([(-1) ** (k // 2) for k in range(m)], dtype=np.int8)


# ---------------------------------------------------------------------------
# factorizable product family


def all_delta_one(n: int = 4, size1: int = 2, size4: int = 2) -> LhvModel:
    """Fully detecting product model with every sign equal to +1.

    All announcements land in the plus sector, so each angle tuple records
    exactly half the nominal emissions there and nothing in the minus
    sector. The reference point for the counting law.
    """
    m = _check_grid(n)
    if size1 < 1 or size4 < 1:
        raise ZooError("hidden-variable counts must be positive")
    return LhvModel(
        family=TWO_SOURCE,
        n=n,
        a=np.ones((m, size1), np.int8),
        d=np.ones((m, size4), np.int8),
        kappa=np.ones((size1, size4), np.int8),
        f_plus=np.ones((m, m, size1, size4), np.int8),
        f_minus=np.ones((m, m, size1, size4), np.int8),
        rho1=_uniform(size1),
        rho4=_uniform(size4),
        n0=4 * n,
    )


_KAPPA_PATTERNS = ("plus", "minus", "mixed")


def _kappa_pattern(pattern: str, size1: int, size4: int) -> np.ndarray:
    if pattern == "plus":
        return np.ones((size1, size4), np.int8)
    if pattern == "minus":
        return -np.ones((size1, size4), np.int8)
    if pattern == "mixed":
        i = np.arange(size1)[:, None]
        j = np.arange(size4)[None, :]
        return (1 - 2 * ((i + j) % 2)).astype(np.int8)
    raise ZooError(
        f"unknown announcement pattern {pattern!r}; choose from {_KAPPA_PATTERNS}"
    )


def _repair_support(
    da: np.ndarray, dd: np.ndarray, df: np.ndarray, kappa: np.ndarray
) -> None:
    """Grow detection masks in place until the event guarantees hold.

    One pass per announced sector covers every angle tuple through that
    sector's first hidden pair; a final pass gives each hidden value a
    complete event to participate in. Only ever turns slots on, so the
    drawn support is preserved.
    """
    m = da.shape[0]
    size1, size4 = kappa.shape
    for sector in (1, -1):
        pairs = np.argwhere(kappa == sector)
        if not len(pairs):
            continue
        covered = np.zeros((m, m, m, m), dtype=bool)
        for l1, l4 in pairs:
            covered |= (
                da[:, l1][:, None, None, None]
                & df[:, :, l1, l4][None, :, :, None]
                & dd[:, l4][None, None, None, :]
            )
        missing = ~covered
        if missing.any():
            l1, l4 = (int(x) for x in pairs[0])
            da[:, l1] |= missing.any(axis=(1, 2, 3))
            dd[:, l4] |= missing.any(axis=(0, 1, 2))
            df[:, :, l1, l4] |= missing.any(axis=(0, 3))

    def completes(l1: int, l4: int) -> bool:
        return bool(da[:, l1].any() and df[:, :, l1, l4].any() and dd[:, l4].any())

    for l1 in range(size1):
        if not any(completes(l1, l4) for l4 in range(size4)):
            da[0, l1] = True
            df[0, 0, l1, 0] = True
            dd[0, 0] = True
    for l4 in range(size4):
        if not any(completes(l1, l4) for l1 in range(size1)):
            dd[0, l4] = True
            df[0, 0, 0, l4] = True
            da[0, 0] = True


def synthetic_factorizable(
    seed: int,
    n: int = 4,
    size1: int = 2,
    size4: int = 2,
    density: float = 1.0,
    kappa: str = "plus",
) -> LhvModel:
    """Random product-form model with detector support thinned then repaired.

    Responses are exact sign products of one constant station sign, one sign
    per hidden value on each side, and detection masks drawn slot-wise at the
    requested density. A deterministic repair pass then restores the events
    the pipeline's entry checks demand (every angle tuple covered in every
    announced sector, every hidden value participating in some event), so
    generation never fails: very low densities simply come back thicker than
    requested. ``kappa`` selects the announcement pattern: ``plus`` or
    ``minus`` send every hidden pair to one sector, ``mixed`` alternates.
    """
    m = _check_grid(n)
    if size1 < 1 or size4 < 1:
        raise ZooError("hidden-variable counts must be positive")
    if not 0.0 <= density <= 1.0:
        raise ZooError(f"density must lie in [0, 1], got {density}")
    kappa_table = _kappa_pattern(kappa, size1, size4)
    rng = np.random.default_rng(seed)
    station = np.full(m, int(_signs(rng, 1)[0]), np.int8)
    u = _signs(rng, size1)
    v = _signs(rng, size4)
    da = rng.random((m, size1)) < density
    dd = rng.random((m, size4)) < density
    df = rng.random((m, m, size1, size4)) < density
    _repair_support(da, dd, df, kappa_table)
    table_a = station[:, None] * u[None, :] * da
    table_d = station[:, None] * v[None, :] * dd
    table_f = (
        station[:, None, None, None]
        * station[None, :, None, None]
        * u[None, None, :, None]
        * v[None, None, None, :]
        * df
    )
    return LhvModel(
        family=TWO_SOURCE,
        n=n,
        a=table_a.astype(np.int8),
        d=table_d.astype(np.int8),
        kappa=kappa_table,
        f_plus=table_f.astype(np.int8),
        f_minus=table_f.astype(np.int8),
        rho1=_uniform(size1),
        rho4=_uniform(size4),
        n0=4 * n,
    )


# ---------------------------------------------------------------------------
# robustness-failure representatives


def evasive_nonrobust(n: int = 4) -> LhvModel:
    """Model correct at exactly one angle tuple and silent everywhere else.

    All three devices fire only at angle step 0, producing the demanded +1
    product there; every other tuple records no event at all, which is
    precisely the evasion the event-count requirement exists to reject.
    """
    m = _check_grid(n)
    a = np.zeros((m, 1), np.int8)
    a[0, 0] = 1
    f = np.zeros((m, m, 1, 1), np.int8)
    f[0, 0, 0, 0] = 1
    return LhvModel(
        family=TWO_SOURCE,
        n=n,
        a=a,
        d=a.copy(),
        kappa=np.ones((1, 1), np.int8),
        f_plus=f,
        f_minus=np.zeros((m, m, 1, 1), np.int8),
        rho1=[Fraction(1)],
        rho4=[Fraction(1)],
        n0=4 * n,
    )


def padded_irrelevant(n: int = 4) -> LhvModel:
    """A robust model padded with one hidden value that never fires.

    Starts from the parity-split robust model and appends a third
    first-source hidden value whose station and analyzer responses are all
    zero. Counts and correlations still hold through the live values, so the
    relevance check is the only one that fails, naming the padded value.
    """
    base = parity_split_robust(n)
    m = base.steps
    a = np.hstack([base.a, np.zeros((m, 1), np.int8)])
    f = np.concatenate([base.f_plus, np.zeros((m, m, 1, base.size4), np.int8)], axis=2)
    kappa = np.vstack([base.kappa, np.ones((1, base.size4), np.int8)])
    return LhvModel(
        family=TWO_SOURCE,
        n=n,
        a=a,
        d=base.d,
        kappa=kappa,
        f_plus=f,
        f_minus=f,
        rho1=_uniform(base.size1 + 1),
        rho4=base.rho4,
        n0=base.n0,
    )


# ---------------------------------------------------------------------------
# robust non-factorizable models


def _demanded_model(a: np.ndarray, kappa: np.ndarray, n: int) -> LhvModel:
    f = forced_analyzer(a, a, kappa, n)
    size = a.shape[1]
    return LhvModel(
        family=TWO_SOURCE,
        n=n,
        a=a,
        d=a.copy(),
        kappa=kappa,
        f_plus=f,
        f_minus=f,
        rho1=_uniform(size),
        rho4=_uniform(size),
        n0=4 * n,
    )


def _verified_robust(model: LhvModel, name: str) -> LhvModel:
    report = is_robust(model)
    if not report.is_robust:
        raise ZooError(
            f"{name} holds on its documented grid only; "
            f"n={model.n} breaks the construction"
        )
    return model


def parity_split_robust(n: int = 4) -> LhvModel:
    """Robust model whose two hidden values split the angle grid by parity.

    Each hidden value fires on one angle parity with the +1,+1,-1,-1 sign
    sequence; every correlated tuple routes through exactly one
    parity-matched pair, satisfying the full correlation law with events
    everywhere, yet no per-source sign assignment reproduces the analyzer
    table. The constructor re-verifies robustness and refuses grids where
    the construction degrades.
    """
    m = _check_grid(n)
    seq = _alternating_pair_signs(m)
    a = np.zeros((m, 2), np.int8)
    for k in range(m):
        a[k, k % 2] = seq[k]
    return _verified_robust(
        _demanded_model(a, np.ones((2, 2), np.int8), n), "parity_split_robust"
    )


def both_sector_robust(n: int = 4) -> LhvModel:
    """Robust model announcing in both sectors with half-filled analyzers.

    Full-support stations whose second hidden value flips the sign sequence
    on odd angles, with announcements keyed to the first-source value. Both
    sectors carry weight and record events at every tuple, yet the analyzer
    demands cannot be written as a sign product. Re-verified on build.
    """
    m = _check_grid(n)
    seq = _alternating_pair_signs(m)
    a = np.zeros((m, 2), np.int8)
    for k in range(m):
        a[k, 0] = seq[k]
        a[k, 1] = seq[k] if k % 2 == 0 else -seq[k]
    kappa = np.array([[1, 1], [-1, -1]], np.int8)
    return _verified_robust(_demanded_model(a, kappa, n), "both_sector_robust")


# ---------------------------------------------------------------------------
# shared-source family


def single_source_shift(n: int = 4) -> LhvModel:
    """Shared-source model shifting a half-plane sign pattern by the hidden value.

    Both stations respond with the sign of the shifted angle's half-plane
    (+1 on the first half of the circle, -1 on the second), and the analyzer
    is their pointwise product. Every device always fires. The construction
    looks like a factorized model with the hidden value shared, which is
    exactly why its two-source repackaging (see ``two_source_shell``) fails
    the independent-source consistency relations.
    """
    m = _check_grid(n)
    half = np.where(np.arange(m) < n, 1, -1).astype(np.int8)
    shifts = (np.arange(m)[:, None] - np.arange(m)[None, :]) % m
    station = half[shifts]
    analyzer = station[:, None, :] * station[None, :, :]
    return LhvModel(
        family=SINGLE_SOURCE,
        n=n,
        a=station,
        d=station.copy(),
        kappa=np.ones(m, np.int8),
        f_plus=analyzer,
        f_minus=analyzer.copy(),
        rho1=_uniform(m),
        rho4=None,
        n0=4 * n,
    )


@lru_cache(maxsize=None)
def single_source_efficient_50(n: int = 4) -> LhvModel:
    """Shared-source model with 50% station detectors and a perfect analyzer.

    Regenerates the witness the shift-lattice search finds at efficiency
    floor one half, then independently re-verifies it: the correlation law,
    counts, and relevance all hold, each station row fires for at least half
    the hidden values, and the analyzer fires for all of them. This is the
    escape hatch the two-source impossibility leaves open when one source is
    shared and detectors may stay silent.
    """
    space = SearchSpace(family=SINGLE_SOURCE, denominator=n, size1=4 * n)
    result = search_single_source(space, efficiency_floor=0.5)
    model = result.first_found
    if model is None:
        raise ZooError(
            f"the shift-lattice family offers no half-efficiency model at n={n}"
        )
    report = is_robust(model)
    if not report.is_robust:
        raise ZooError("search returned a model that fails re-verification")
    size = model.size1
    for name, table in (("first", model.a), ("last", model.d)):
        rate = min(
            np.count_nonzero(table[k]) / size for k in range(model.steps)
        )
        if rate < 0.5:
            raise ZooError(f"{name}-station firing rate {rate} fell below one half")
    if np.count_nonzero(selected_analyzer(model) == 0):
        raise ZooError("analyzer must fire for every hidden value")
    return model


def two_source_shell(model: LhvModel) -> LhvModel:
    """Repackage a shared-source model in the two-source table shape.

    The first source keeps the shared hidden value and the analyzer's
    dependence on it; the second source collapses to a singleton carrying
    the last station's response at hidden value 0. The shell is a container
    for the tables, not an equivalent model: scanning the independent-source
    consistency relations on it shows why the shared value cannot be
    factored apart.
    """
    if model.family != SINGLE_SOURCE:
        raise ZooError("only shared-source models can be wrapped in a shell")
    return LhvModel(
        family=TWO_SOURCE,
        n=model.n,
        a=model.a,
        d=model.d[:, :1],
        kappa=model.kappa[:, None],
        f_plus=model.f_plus[..., None],
        f_minus=model.f_minus[..., None],
        rho1=model.rho1,
        rho4=[Fraction(1)],
        n0=model.n0,
    )


# ---------------------------------------------------------------------------
# catalog and model references

_BUILDERS: dict[str, Callable[..., LhvModel]] = {
    "all_delta_one": all_delta_one,
    "synthetic_factorizable": synthetic_factorizable,
    "evasive_nonrobust": evasive_nonrobust,
    "padded_irrelevant": padded_irrelevant,
    "parity_split_robust": parity_split_robust,
    "both_sector_robust": both_sector_robust,
    "single_source_shift": single_source_shift,
    "single_source_efficient_50": single_source_efficient_50,
}


def catalog() -> dict[str, str]:
    """Catalog names with their one-line summaries, in stable order."""
    out: dict[str, str] = {}
    for name, builder in _BUILDERS.items():
        doc = inspect.getdoc(builder) or ""
        out[name] = doc.splitlines()[0] if doc else ""
    return out


def _coerce(text: str):
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            continue
    return text


def by_uri(uri: str) -> LhvModel:
    """Build the model a ``zoo:<name>`` or ``zoo:<name>:<k>=<v>,...`` URI names."""
    if not uri.startswith("zoo:"):
        raise ZooError(f"not a zoo URI: {uri!r}")
    name, _, argpart = uri[len("zoo:"):].partition(":")
    builder = _BUILDERS.get(name)
    if builder is None:
        known = ", ".join(_BUILDERS)
        raise ZooError(f"unknown zoo model {name!r}; known models: {known}")
    kwargs = {}
    for piece in filter(None, argpart.split(",")):
        key, sep, value = piece.partition("=")
        if not sep or not key:
            raise ZooError(f"malformed argument {piece!r}; expected key=value")
        kwargs[key] = _coerce(value)
    try:
        return builder(**kwargs)
    except TypeError as exc:
        raise ZooError(f"bad arguments for {name}: {exc}") from exc


def resolve(reference: str) -> LhvModel:
    """Load a model from a ``zoo:`` URI or from a file path."""
    if reference.startswith("zoo:"):
        return by_uri(reference)
    return load(reference)
