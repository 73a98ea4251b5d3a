"""Hand-built model fixtures shared across test modules.

The composer mirrors the factorized product form independently of the
package's own generator so construct-then-recover tests have an oracle
that shares no code with the code under test.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from bellswap.model import LhvModel


def checkerboard(size1: int, size4: int) -> np.ndarray:
    """Sector map alternating +1/-1 so each sector gets half the assignments."""
    i = np.arange(size1)[:, None]
    j = np.arange(size4)[None, :]
    return (1 - 2 * ((i + j) % 2)).astype(np.int8)


def compose_two_source(
    n=4,
    u=(1, -1),
    v=(1, 1),
    a=None,
    kappa=None,
    delta_a=None,
    delta_d=None,
    delta_f=None,
    n0=16,
):
    """Model built from the product form: responses are a*u, a*v, a*a*u*v.

    Detection masks default to full detection; kappa defaults to the
    balanced checkerboard.
    """
    m = 2 * n
    u = np.asarray(u, dtype=np.int8)
    v = np.asarray(v, dtype=np.int8)
    size1, size4 = len(u), len(v)
    a = np.ones(m, dtype=np.int8) if a is None else np.asarray(a, dtype=np.int8)
    if kappa is None:
        kappa = checkerboard(size1, size4)
    delta_a = np.ones((m, size1), np.int8) if delta_a is None else np.asarray(delta_a)
    delta_d = np.ones((m, size4), np.int8) if delta_d is None else np.asarray(delta_d)
    if delta_f is None:
        delta_f = np.ones((m, m, size1, size4), np.int8)
    else:
        delta_f = np.asarray(delta_f)
    table_a = a[:, None] * u[None, :] * delta_a
    table_d = a[:, None] * v[None, :] * delta_d
    table_f = (
        a[:, None, None, None]
        * a[None, :, None, None]
        * u[None, None, :, None]
        * v[None, None, None, :]
        * delta_f
    )
    return LhvModel(
        family="two_source",
        n=n,
        a=table_a,
        d=table_d,
        kappa=kappa,
        f_plus=table_f,
        f_minus=table_f,
        rho1=[Fraction(1, size1)] * size1,
        rho4=[Fraction(1, size4)] * size4,
        n0=n0,
    )


def demand_filled_analyzer(a, d, kappa, n):
    """Analyzer table pinned cell by cell from the correlation law.

    Each cell takes the unique sign its station supports demand, 0 when two
    demands disagree, +1 when nothing constrains it. Shares no code with
    the package's propagation.
    """
    m = 2 * n

    def required(c):
        c %= m
        if (2 * c) % n:
            return 0
        return 1 if c % n == 0 else -1

    size1, size4 = a.shape[1], d.shape[1]
    table = np.zeros((m, m, size1, size4), dtype=np.int8)
    for l1 in range(size1):
        for l4 in range(size4):
            s = int(kappa[l1, l4])
            for k2 in range(m):
                for k3 in range(m):
                    demands = set()
                    for k1 in range(m):
                        if not a[k1, l1]:
                            continue
                        for k4 in range(m):
                            if not d[k4, l4]:
                                continue
                            r = required(k1 - k2 + s * (k3 - k4))
                            if r:
                                demands.add(r * int(a[k1, l1]) * int(d[k4, l4]))
                    if len(demands) == 1:
                        table[k2, k3, l1, l4] = demands.pop()
                    elif not demands:
                        table[k2, k3, l1, l4] = 1
    return table


def parity_split_model(n=4):
    """Two λ per source, each firing only on its own angle parity.

    Every correlated tuple routes through exactly one parity-matched pair,
    so the full correlation law holds with events at every tuple, yet the
    analyzer table is antisymmetric across some cross-parity pairs.
    """
    m = 2 * n
    ih = np.array([(-1) ** (k // 2) for k in range(m)], dtype=np.int8)
    a = np.zeros((m, 2), dtype=np.int8)
    for k in range(m):
        a[k, k % 2] = ih[k]
    kappa = np.ones((2, 2), dtype=np.int8)
    f = demand_filled_analyzer(a, a, kappa, n)
    return LhvModel(
        family="two_source",
        n=n,
        a=a,
        d=a.copy(),
        kappa=kappa,
        f_plus=f,
        f_minus=f,
        rho1=[Fraction(1, 2)] * 2,
        rho4=[Fraction(1, 2)] * 2,
        n0=16,
    )


def both_sector_model(n=4):
    """Full-support stations, 50% analyzer, events in both sectors."""
    m = 2 * n
    ih = np.array([(-1) ** (k // 2) for k in range(m)], dtype=np.int8)
    a = np.zeros((m, 2), dtype=np.int8)
    for k in range(m):
        a[k, 0] = ih[k]
        a[k, 1] = ih[k] if k % 2 == 0 else -ih[k]
    kappa = np.array([[1, 1], [-1, -1]], dtype=np.int8)
    f = demand_filled_analyzer(a, a, kappa, n)
    return LhvModel(
        family="two_source",
        n=n,
        a=a,
        d=a.copy(),
        kappa=kappa,
        f_plus=f,
        f_minus=f,
        rho1=[Fraction(1, 2)] * 2,
        rho4=[Fraction(1, 2)] * 2,
        n0=16,
    )


def rebuild(model: LhvModel, **overrides) -> LhvModel:
    """Copy of a model with some tables replaced."""
    fields = dict(
        family=model.family,
        n=model.n,
        a=model.a,
        d=model.d,
        kappa=model.kappa,
        f_plus=model.f_plus,
        f_minus=model.f_minus,
        rho1=model.rho1,
        rho4=model.rho4,
        n0=model.n0,
    )
    fields.update(overrides)
    return LhvModel(**fields)
