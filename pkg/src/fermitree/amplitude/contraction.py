"""Full contraction of a tree kernel into a number (all legs paired by the covariance)."""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..exterior import permutations_with_signs
from ..grassmann.algebra import GeneratorSet
from ..grassmann.gaussian import gaussian_integral
from ..grassmann.momentum import kernel_polynomial
from ..grassmann.pfaffian import _matching_sign, perfect_matchings
from .oracle import direct_kernel_tensor
from .problem import AmplitudeProblem
from .recursion import kernel_hat_A
from .tree_expansion import interpolated_covariance, tree_polynomial

PAIRING_LIMIT = 50_000


def _loop_momenta(problem: AmplitudeProblem, half: int) -> np.ndarray:
    N = problem.torus.sites
    return np.array(list(itertools.product(range(N), repeat=half)), dtype=np.int64).reshape(-1, half)


def _wick(problem: AmplitudeProblem) -> complex:
    n = problem.leg_count
    half = n // 2
    torus = problem.torus
    table = problem.covariance.table
    q = _loop_momenta(problem, half)
    total = 0j
    for matching in perfect_matchings(list(range(n))):
        slots = np.zeros((len(q), n), dtype=np.int64)
        ops = []
        for i, (a, b) in enumerate(matching):
            slots[:, a] = q[:, i]
            slots[:, b] = torus.neg_table[q[:, i]]
            ops += [np.moveaxis(table[:, :, q[:, i]], -1, 0), [0, a + 1, b + 1]]
        vals = direct_kernel_tensor(problem, slots)
        total += _matching_sign(matching) * np.einsum(vals, list(range(n + 1)), *ops, [], optimize="greedy")
    return complex(total)


def _pairing(problem: AmplitudeProblem) -> complex:
    n = problem.leg_count
    half = n // 2
    S = problem.nspin
    torus = problem.torus
    table = problem.covariance.table
    q = _loop_momenta(problem, half)
    spin_pairs = list(itertools.product(range(S), repeat=n))
    if len(q) * len(spin_pairs) > PAIRING_LIMIT:
        raise ValueError("instance too large for the pairing path")
    total = 0j
    for qs in q:
        for sp in spin_pairs:
            weight = 1 + 0j
            ext = []
            for i in range(half):
                s, s2 = sp[2 * i], sp[2 * i + 1]
                weight *= table[s, s2, qs[i]]
                ext += [(int(qs[i]), s), (torus.neg(int(qs[i])), s2)]
            if weight == 0:
                continue
            total += weight * kernel_hat_A(problem.with_external(ext))
    return complex(total * math.factorial(n) / (2 ** half * math.factorial(half)))


def paired_kernels(problem: AmplitudeProblem) -> np.ndarray:
    """``A_hat_n(q_1, -q_1, ..., q_h, -q_h)`` for all loop momenta and all spins.

    Antisymmetrizes the ordered kernel by summing over slot permutations;
    returns ``(N**h,) + (S,) * n``.
    """
    n = problem.leg_count
    if n % 2:
        raise ValueError("paired configurations need an even number of legs")
    half = n // 2
    q = _loop_momenta(problem, half)
    mom = np.zeros((len(q), n), dtype=np.int64)
    mom[:, 0::2] = q
    mom[:, 1::2] = problem.torus.neg_table[q]
    perms, signs = permutations_with_signs(n)
    out = np.zeros((len(q),) + (problem.nspin,) * n, dtype=complex)
    for perm, sign in zip(perms, signs):
        vals = direct_kernel_tensor(problem, mom[:, perm])
        out += sign * np.einsum(vals, [0] + [int(i) + 1 for i in perm], list(range(n + 1)))
    return out / math.factorial(n)


def paired_kernel_sup(problem: AmplitudeProblem) -> float:
    """``max |A_hat_n|`` over paired momentum configurations (a lower estimate of the sup norm)."""
    if problem.leg_count == 0:
        return abs(kernel_hat_A(problem.with_external(())))
    return float(np.abs(paired_kernels(problem)).max())


def _grassmann(problem: AmplitudeProblem) -> complex:
    torus = problem.torus
    gens = GeneratorSet(torus, problem.covariance.spins, cap=62)
    polys = [kernel_polynomial(k, gens) for k in problem.kernels]
    cov = problem.covariance.position_matrix(gens)
    poly = tree_polynomial(problem.tree, polys, cov)
    return complex(gaussian_integral(poly, interpolated_covariance(cov, np.ones((problem.m, problem.m)))))


def tree_amplitude_value(problem: AmplitudeProblem, method: str = "wick") -> complex:
    """Contract all external legs of the tree term with the covariance.

    ``wick`` sums over pairings of the ordered kernel, ``pairing`` uses the
    antisymmetric kernel from the recursion, and ``grassmann`` integrates the
    tree term built from Grassmann derivatives (an independent reference).
    """
    n = problem.leg_count
    if n % 2:
        return 0j
    if method == "grassmann":
        return _grassmann(problem)
    if n == 0:
        base = problem.with_external(())
        value = kernel_hat_A(base)
    elif method == "wick":
        value = _wick(problem)
    elif method == "pairing":
        value = _pairing(problem)
    else:
        raise ValueError(f"unknown method {method!r}")
    N = problem.torus.sites
    return complex(N * value / N ** (n // 2))
