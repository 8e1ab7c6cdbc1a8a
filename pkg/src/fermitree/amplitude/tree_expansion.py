"""Tree expansion of the free energy on replicated Grassmann generators.

Vertex ``l`` gets its own copy of the generators (offset ``(l-1) * G``).
Each tree line ``{l, l'}`` acts as ``sum C(xi, xi') d^{l'}_{xi'} d^l_{xi}``,
and the result is integrated against ``C (x) s^T`` with ``s^T`` the
interpolation matrix of the tree.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from ..grassmann.algebra import MAX_BITS, GrassmannPoly, product
from ..grassmann.gaussian import gaussian_integral
from ..trees import Tree, enumerate_trees, s_matrix


def replicate(poly: GrassmannPoly, copy: int, copies: int) -> GrassmannPoly:
    """Move ``poly`` onto block ``copy`` of ``copies`` generator blocks."""
    G = poly.size
    if G * copies > MAX_BITS:
        raise ValueError(f"{G * copies} replicated generators exceed {MAX_BITS}")
    return GrassmannPoly(G * copies, poly.masks << (copy * G), poly.coeffs)


def line_operator(poly: GrassmannPoly, cov: np.ndarray, a: int, b: int, G: int) -> GrassmannPoly:
    """``sum_{g, g'} C(g, g') d^b_{g'} d^a_g poly`` between blocks ``a`` and ``b`` (0-based)."""
    out = GrassmannPoly.zero(poly.size)
    for g in range(G):
        da = poly.derivative(a * G + g)
        if not len(da):
            continue
        for g2 in range(G):
            c = cov[g, g2]
            if c == 0:
                continue
            dab = da.derivative(b * G + g2)
            if len(dab):
                out = out + dab.scale(c)
    return out


def tree_polynomial(tree: Tree, polys: Sequence[GrassmannPoly], cov: np.ndarray) -> GrassmannPoly:
    """The tree term ``prod_lines (line operator) [P_1(psi^1) ... P_m(psi^m)]`` on replicated generators."""
    m = tree.m
    if len(polys) != m:
        raise ValueError("one polynomial per vertex")
    G = polys[0].size
    cov = np.asarray(cov, dtype=complex)
    if cov.shape != (G, G):
        raise ValueError("covariance must act on one generator block")
    poly = replicate(polys[0], 0, m)
    for l in range(1, m):
        poly = product(poly, replicate(polys[l], l, m))
    for a, b in tree.edges:
        poly = line_operator(poly, cov, a - 1, b - 1, G)
    return poly


def interpolated_covariance(cov: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``C (x) s``: block ``(l, l')`` equals ``s[l, l'] * C``."""
    return np.kron(np.asarray(s), np.asarray(cov))


def simplex_rule(dim: int, points: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Legendre rule on ``{1 >= u_1 >= ... >= u_dim >= 0}``."""
    x, w = np.polynomial.legendre.leggauss(points)
    x = (x + 1) / 2
    w = w / 2
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    grid = np.array(list(itertools.product(range(points), repeat=dim)))
    t = x[grid]
    weights = np.prod(w[grid], axis=1)
    u = np.cumprod(t, axis=1)
    for j in range(dim - 1):
        weights = weights * t[:, j] ** (dim - 1 - j)
    return u, weights


def interpolation_integral(tree: Tree, poly: GrassmannPoly, cov: np.ndarray, points: int = 6) -> complex:
    """``int_{[0,1]^{m-1}} ds int poly dmu_{C (x) s^T}``.

    The integrand is polynomial on each region where the ``s`` values have a
    fixed order, so each region is integrated by an exact simplex rule.
    """
    k = tree.m - 1
    if k == 0:
        return gaussian_integral(poly, np.asarray(cov))
    u, w = simplex_rule(k, points)
    total = 0j
    for order in itertools.permutations(range(k)):
        for ui, wi in zip(u, w):
            s = np.empty(k)
            s[list(order)] = ui
            mat = interpolated_covariance(cov, s_matrix(tree, list(s)).matrix)
            total += wi * gaussian_integral(poly, mat)
    return total


def tree_expansion_coefficients(w: GrassmannPoly, cov: np.ndarray, order: int, points: int = 6) -> np.ndarray:
    """``[Omega_1, ..., Omega_order]`` from ``(1/m!) sum_T int ds int F_T(W, ..., W) dmu``."""
    out = np.zeros(order, dtype=complex)
    for m in range(1, order + 1):
        acc = 0j
        for tree in enumerate_trees(m):
            poly = tree_polynomial(tree, [w] * m, cov)
            if len(poly):
                acc += interpolation_integral(tree, poly, cov, points)
        out[m - 1] = acc / math.factorial(m)
    return out
