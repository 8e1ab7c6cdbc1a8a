"""Summation by parts for a pair of line maps in one momentum dimension.

For tables ``f`` (line ``l``) and ``g`` (line ``l'``) on the integers with
compact support, and ``K``, ``K'`` the momenta of ``e_S`` and ``e_S'``,

    g(K') f(K) = sum_{t < K'} [dg(t) f(K + K' - 1 - t) - g(t) df(K + K' - 1 - t)]

with ``dh(t) = h(t + 1) - h(t)``; the sum telescopes. In operator form

    C_l[a] ^ C_l'[a'] = sum_t dg(t) C_l(t)[a ^ X(t)[a']] + sum_t g(t) C'_l(t)[a ^ X(t)[a']]

where ``C_l(t)[e_S] = f(P_S - 1 - t) e_S``, ``C'_l(t)[e_S] = -df(P_S - 1 - t) e_S``
and ``X(t)[e_S] = [t < P_S] e_S``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..exterior import Form, lp_norm, wedge
from .problem import AmplitudeProblem
from .recursion import _as_assignment


@dataclass(frozen=True)
class LineTable:
    """A function on the integers: ``values[i]`` at ``start + i``, zero elsewhere."""

    values: np.ndarray
    start: int

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        i = k - self.start
        ok = (i >= 0) & (i < len(self.values))
        return np.where(ok, self.values[np.clip(i, 0, len(self.values) - 1)], 0)

    def diff(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        return self(k + 1) - self(k)

    def support(self) -> tuple[int, int]:
        nz = np.nonzero(self.values)[0]
        if not len(nz):
            return self.start, self.start - 1
        return self.start + int(nz[0]), self.start + int(nz[-1])

    def l1(self) -> float:
        return float(np.abs(self.values).sum())

    def sup(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))

    def diff_l1(self) -> float:
        lo, hi = self.support()
        t = np.arange(lo - 1, hi + 1)
        return float(np.abs(self.diff(t)).sum())

    def diff_sup(self) -> float:
        lo, hi = self.support()
        t = np.arange(lo - 1, hi + 1)
        return float(np.abs(self.diff(t)).max(initial=0.0))

    @classmethod
    def from_torus_row(cls, row: np.ndarray) -> LineTable:
        """Centered copy of a periodic row; the support must stay off the domain edge."""
        row = np.asarray(row, dtype=complex)
        L = len(row)
        start = -(L // 2)
        centered = np.roll(row, L // 2)
        if centered[0] != 0 or (L > 1 and centered[-1] != 0):
            raise ValueError("covariance support touches the edge of the momentum domain")
        return cls(centered, start)


def ibp_c_constant(f: LineTable, g: LineTable) -> float:
    """``||g||_1 ||df||_inf + ||dg||_1 ||f||_inf`` with plain sums over momenta."""
    return g.l1() * f.diff_sup() + g.diff_l1() * f.sup()


def _momentum_map(form: Form, momenta: np.ndarray, fn) -> Form:
    return form.map_terms(lambda mask: fn(int(sum(momenta[i] for i in range(len(momenta)) if mask >> i & 1))))


@dataclass
class IBPResult:
    lhs: Form
    rhs: Form
    residual: float
    bound_value: float
    c_constant: float
    norms: tuple[float, float]


def ibp_identity(f: LineTable, g: LineTable, momenta: Sequence[int], a_factors: Sequence[Form],
                 a2: Form) -> IBPResult:
    """Both sides of the identity for ``a = wedge(a_factors)`` (rank 1) and an arbitrary ``a2``."""
    for v in a_factors:
        if v.degrees() - {1}:
            raise ValueError("a must be given as a wedge of one-forms")
    momenta = np.asarray(momenta, dtype=np.int64)
    size = a2.size
    a = wedge(*a_factors) if a_factors else Form.scalar(size)
    lhs = wedge(_momentum_map(a, momenta, lambda k: f(k)), _momentum_map(a2, momenta, lambda k: g(k)))
    lo, hi = g.support()
    rhs = Form.zero(size)
    bound = 0.0
    for t in range(lo - 1, hi + 1):
        cut = _momentum_map(a2, momenta, lambda k: 1.0 if t < k else 0.0)
        base = wedge(a, cut)
        dg, gt = complex(g.diff(t)), complex(g(t))
        first = _momentum_map(base, momenta, lambda k: f(k - 1 - t))
        second = _momentum_map(base, momenta, lambda k: -f.diff(k - 1 - t))
        rhs = rhs + first * dg + second * gt
        bound += abs(dg) * lp_norm(first, 2) + abs(gt) * lp_norm(second, 2)
    keys = set(lhs.terms) | set(rhs.terms)
    residual = max((abs(lhs.terms.get(k, 0) - rhs.terms.get(k, 0)) for k in keys), default=0.0)
    na = float(np.prod([lp_norm(v, 2) for v in a_factors])) if a_factors else 1.0
    return IBPResult(lhs, rhs, residual, bound, ibp_c_constant(f, g), (na, lp_norm(a2, 2)))


def ibp_apply(problem: AmplitudeProblem, sigma, edge, edge2, a_factors: Sequence[Form], a2: Form) -> IBPResult:
    """The identity for two lines of a problem on a one-dimensional torus.

    Leg momenta are taken as centered integers and the covariance rows are
    extended by zero outside the momentum domain.
    """
    if problem.torus.ndim != 1:
        raise ValueError("summation by parts is implemented per momentum dimension (1-D torus)")
    sigma = _as_assignment(problem, sigma)
    table = problem.covariance.table
    f = LineTable.from_torus_row(table[sigma.lines[edge]])
    g = LineTable.from_torus_row(table[sigma.lines[edge2]])
    L = problem.torus.dims[0]
    p = problem.momenta
    centered = np.where(p < (L + 1) // 2, p, p - L)
    return ibp_identity(f, g, centered, a_factors, a2)
