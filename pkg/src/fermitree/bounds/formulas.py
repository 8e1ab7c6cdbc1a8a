"""Closed-form bounds on tree amplitudes and kernels.

``w_sup[l]`` is ``||w_hat_{n_l}||_inf`` and ``w_l1[l]`` is the position-space
``||w_{n_l}||_1`` of the kernel at vertex ``l + 1``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..trees import Tree, caterpillar
from .norms import CovarianceNorms


def contracted_legs(tree: Tree, n: Sequence[int]) -> int:
    """``n(n, m) = sum n_l - 2(m - 1)``: legs left after the tree lines."""
    return int(sum(n)) - 2 * (tree.m - 1)


def loop_lines(tree: Tree, n: Sequence[int]) -> int:
    """Half the contracted legs; an error when that is not a nonnegative integer."""
    legs = contracted_legs(tree, n)
    if legs < 0 or legs % 2:
        raise ValueError(f"{legs} remaining legs cannot be paired into loop lines")
    return legs // 2


def _power_ratio(base: int, exp: float, n: int) -> float:
    # base**exp / n! with 0**0 = 1
    return (float(base) ** exp if base else 1.0) / math.factorial(n)


def _vertex_product(tree: Tree, n: Sequence[int]) -> float:
    return float(math.prod(math.factorial(d) * 2 ** nl for d, nl in zip(tree.degrees, n)))


def _check(tree: Tree, n: Sequence[int], *seqs):
    if len(n) != tree.m or any(len(s) != tree.m for s in seqs):
        raise ValueError("one entry per vertex")


def perturbative_bound(norms: CovarianceNorms, tree: Tree, n: Sequence[int], w_sup: Sequence[float],
                       const: float = 1.0) -> float:
    """``(const ||C_hat||_inf)^(m-1) prod_l d(l)! 2^(n_l) ||w_hat_(n_l)||_inf`` (ordered kernel, sup norm)."""
    _check(tree, n, w_sup)
    if const <= 0:
        raise ValueError("const must be positive")
    return (const * norms.sup_hat) ** (tree.m - 1) * _vertex_product(tree, n) * float(np.prod(w_sup))


def standard_bound(norms: CovarianceNorms, tree: Tree, n: Sequence[int], w_l1: Sequence[float]) -> float:
    """``n^(n/2) / n! ||C||_1^(m-1) prod_l d(l)! 2^(n_l) ||w_(n_l)||_1`` with ``n`` the contracted legs."""
    _check(tree, n, w_l1)
    k = contracted_legs(tree, n)
    if k < 0:
        raise ValueError("more tree lines than legs")
    return (_power_ratio(k, k / 2, k) * norms.l1_pos ** (tree.m - 1) * _vertex_product(tree, n)
            * float(np.prod(w_l1)))


def theorem1_bound(norms: CovarianceNorms, tree: Tree, n: Sequence[int], w_sup: Sequence[float],
                   nspin: int | None = None, volume: float | None = None) -> float:
    """Bound on the contracted amplitude, using sup norms of ``C_hat`` and ``w_hat`` only."""
    _check(tree, n, w_sup)
    if min(n) < 2:
        raise ValueError("every vertex needs at least two legs")
    S = norms.nspin if nspin is None else nspin
    vol = norms.volume if volume is None else volume
    k = loop_lines(tree, n)
    per_vertex = math.prod(math.factorial(d) * 2 ** nl * max(d - 1, 1) ** k * S ** nl
                           for d, nl in zip(tree.degrees, n))
    return (vol * _power_ratio(k, k, k) * norms.sup_hat ** (tree.m - 1) * norms.l1_hat ** k
            * float(per_vertex) * float(np.prod(w_sup)))


def theorem2_bound(norms: CovarianceNorms, m: int, n: Sequence[int], w_sup: Sequence[float],
                   w_l1: Sequence[float], nspin: int | None = None, volume: float | None = None,
                   c: float | None = None) -> float:
    """Bound on the contracted amplitude of the caterpillar on ``2m + 2`` vertices.

    Vertices ``1..m+2`` enter through ``||w_hat||_inf`` and the pendant leaves
    ``m+3..2m+2`` through ``||w||_1``; ``c`` defaults to ``norms.c_lebesgue``.
    """
    tree = caterpillar(m)
    _check(tree, n, w_sup, w_l1)
    S = norms.nspin if nspin is None else nspin
    vol = norms.volume if volume is None else volume
    c = norms.c_lebesgue if c is None else c
    k = sum(n) / 2 - (2 * m + 1)
    if k < 0 or k != int(k):
        raise ValueError(f"{k} loop lines is not a nonnegative integer")
    k = int(k)
    head = m + 2
    spins = float(math.prod(S ** nl for nl in n[:head]))
    return (vol * _power_ratio(k, k, k) * norms.sup_hat * c ** m * norms.l1_hat ** k
            * _vertex_product(tree, n) * spins * float(np.prod(w_sup[:head])) * float(np.prod(w_l1[head:])))


def loop_bound(norms: CovarianceNorms, kernel_sup: float, n: int, volume: float | None = None) -> float:
    """``|T| (2n)! / (2^n n!) ||C_hat||_1^n ||A_hat_2n||_inf`` for ``n`` loop lines."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    vol = norms.volume if volume is None else volume
    pairings = math.factorial(2 * n) // (2 ** n * math.factorial(n))
    return vol * pairings * norms.l1_hat ** n * kernel_sup


def effective_norm(norms: CovarianceNorms, n: int, w_sup: float, branches: int) -> float:
    """``||C_hat||_inf ||C_hat||_1^(n/2 - 1) 8 e^-1 (4 e^(b + 1/2))^n ||w_hat_n||_inf``."""
    if n % 2:
        raise ValueError("effective norm is defined for even n")
    return (norms.sup_hat * norms.l1_hat ** (n / 2 - 1) * 8 / math.e
            * (4 * math.exp(branches + 0.5)) ** n * w_sup)


def corollary_effective_norm(norms: CovarianceNorms, w_sup: dict[int, float], branches: int,
                             k: int = 0) -> dict:
    """Per-order norms, ``||W||`` and the output bound ``8 (4 e^b)^k ||W|| / (1 - ||W||)``.

    ``bound`` is ``None`` (and ``defined`` false) when ``||W|| >= 1``.
    """
    per_n = {}
    for n, s in sorted(w_sup.items()):
        if n < 2 or n % 2:
            raise ValueError("orders must be even and at least 2")
        per_n[n] = effective_norm(norms, n, s, branches)
    total = float(sum(per_n.values()))
    defined = total < 1
    bound = 8 * (4 * math.exp(branches)) ** k * total / (1 - total) if defined else None
    return {"per_n": per_n, "total": total, "defined": defined, "bound": bound}
