"""Direct evaluation of tree amplitudes as explicit sums over leg assignments.

These are the reference implementations the recursion is checked against:
no intermediate forms, just the product of line and vertex factors for each
bijection between slots and external legs.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..exterior import Form, permutations_with_signs
from .problem import AmplitudeProblem, SpinAssignment


def spin_grid(S: int, k: int) -> np.ndarray:
    """All ``S**k`` spin tuples as rows of a ``(S**k, k)`` array."""
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(S), repeat=k)), dtype=np.int64)


def _factor_network(problem: AmplitudeProblem, slot_momenta: np.ndarray, slot_spins: np.ndarray | None):
    """Operands of the tree product for a batch of slot momenta ``(B, n)``.

    Returns ``einsum`` operands with batch axis ``0`` and spin variable ``v``
    labelled ``v + 1`` (variables as in ``AmplitudeProblem.spin_variable_count``).
    If ``slot_spins`` ``(B, n)`` is given the leg spins are fixed per row,
    otherwise they stay free.
    """
    prob = problem
    rt = prob.rooted
    torus = prob.torus
    S = prob.nspin
    B = slot_momenta.shape[0]
    # line momenta: total slot momentum in the child's subtree
    flow = {}
    for l in rt.postorder():
        legs = prob.vertex_legs(l)
        tot = torus.sum(slot_momenta[:, legs]) if legs else np.zeros(B, dtype=np.int64)
        tot = np.asarray(tot, dtype=np.int64).reshape(B)
        for c in rt.children[l]:
            tot = torus.add_table[tot, flow[c]]
        flow[l] = tot
    ops = []
    for l in range(1, prob.m + 1):
        if rt.parent[l] is not None:
            a, b = prob.line_axes(rt.line(l))
            ops += [np.moveaxis(prob.covariance.table[:, :, flow[l]], -1, 0), [0, a + 1, b + 1]]
    for l in range(1, prob.m + 1):
        args_mom, free_axes, fixed = [], [], []
        if rt.parent[l] is not None:
            args_mom.append(torus.neg_table[flow[l]])
            free_axes.append(prob.line_axes(rt.line(l))[1])
            fixed.append(None)
        for c in rt.children[l]:
            args_mom.append(flow[c])
            free_axes.append(prob.line_axes(rt.line(c))[0])
            fixed.append(None)
        for pos in prob.vertex_legs(l):
            args_mom.append(slot_momenta[:, pos])
            if slot_spins is None:
                free_axes.append(prob.leg_axis(pos))
                fixed.append(None)
            else:
                fixed.append(slot_spins[:, pos])
        nl = len(args_mom)
        var = [i for i in range(nl) if fixed[i] is None]
        grid = spin_grid(S, len(var))
        spins = np.zeros((B, len(grid), nl), dtype=np.int64)
        for j, i in enumerate(var):
            spins[:, :, i] = grid[None, :, j]
        for i in range(nl):
            if fixed[i] is not None:
                spins[:, :, i] = fixed[i][:, None]
        mom = np.stack(args_mom, axis=-1).reshape(B, 1, nl) if nl else np.zeros((B, 1, 0), dtype=np.int64)
        w = prob.kernels[l - 1].evaluate(np.broadcast_to(mom, spins.shape), spins)
        ops += [w.reshape((B,) + (S,) * len(var)), [0] + [free_axes[i] + 1 for i in range(len(var))]]
    return ops


def _contract(problem: AmplitudeProblem, ops, keep_legs: bool, keep_lines: bool = True) -> np.ndarray:
    out = [0] + ([a + 1 for a in range(2 * (problem.m - 1))] if keep_lines else [])
    if keep_legs:
        out += [problem.leg_axis(pos) + 1 for pos in range(problem.leg_count)]
    return np.einsum(*ops, out, optimize="greedy")


def oracle_direct_alpha_all(problem: AmplitudeProblem) -> np.ndarray:
    """``alpha'`` for every spin assignment, as a sum over slot-to-leg bijections.

    Same layout as ``dense_alpha``: ``(S,) * V + (2**n,)``; only the top
    basis element is nonzero.
    """
    n = problem.leg_count
    S = problem.nspin
    V = problem.spin_variable_count
    L = 2 * (problem.m - 1)
    perms, signs = permutations_with_signs(n)
    mom = problem.momenta[perms]
    spins = problem.spins[perms]
    vals = _contract(problem, _factor_network(problem, mom, spins), keep_legs=False)
    vals = (signs.reshape((-1,) + (1,) * L) * vals).reshape(len(perms), S ** L)
    leg_flat = np.ravel_multi_index(tuple(spins.T), (S,) * n) if n else np.zeros(1, dtype=np.int64)
    acc = np.zeros((S ** L, S ** n), dtype=complex)
    np.add.at(acc.T, leg_flat, vals)
    out = np.zeros((S ** V, 1 << n), dtype=complex)
    out[:, -1] = acc.reshape(-1)
    return out.reshape((S,) * V + (1 << n,))


def oracle_direct_alpha(problem: AmplitudeProblem, sigma) -> Form:
    """``alpha'(sigma)`` as the top form ``sum_iota sgn(iota) prod C_hat prod w_hat e_top``."""
    if not isinstance(sigma, SpinAssignment):
        sigma = SpinAssignment.from_vector(sigma, problem.edges)
    n = problem.leg_count
    ext = problem.spins
    target = np.array(sigma.legs, dtype=np.int64)
    perms_arr, signs = permutations_with_signs(n)
    keep = np.all(ext[perms_arr] == target, axis=1) if n else np.ones(1, dtype=bool)
    if not keep.any():
        return Form.zero(n)
    perms_arr, signs = perms_arr[keep], signs[keep]
    mom = problem.momenta[perms_arr] if n else np.zeros((1, 0), dtype=np.int64)
    spins = np.broadcast_to(target, perms_arr.shape)
    vals = _contract(problem, _factor_network(problem, mom, spins), keep_legs=False)
    line = tuple(v for e in problem.edges for v in sigma.lines[e])
    vals = vals[(slice(None),) + line]
    return Form.from_dict(n, {(1 << n) - 1: complex(signs @ vals)}, prune=0.0)


def direct_kernel_tensor(problem: AmplitudeProblem, slot_momenta: np.ndarray) -> np.ndarray:
    """Ordered tree kernel ``A_hat'`` for a batch of slot momenta, all slot spins at once.

    Returns ``(B,) + (S,) * n``; rows whose momenta do not sum to zero are zero.
    Includes the sign and factorial prefactor of the tree term.
    """
    slot_momenta = np.asarray(slot_momenta, dtype=np.int64).reshape(-1, problem.leg_count)
    n = problem.leg_count
    vals = _contract(problem, _factor_network(problem, slot_momenta, None), keep_legs=True, keep_lines=False)
    if n:
        ok = problem.torus.sum(slot_momenta) == 0
        vals = vals * np.asarray(ok).reshape((-1,) + (1,) * n)
    return problem.global_sign() * problem.prefactor() * vals


def oracle_direct_kernel(problem: AmplitudeProblem) -> complex:
    """``A_hat'`` at the problem's external legs (lexicographic slot order)."""
    vals = direct_kernel_tensor(problem, problem.momenta[None, :])
    return complex(vals[(0,) + tuple(problem.spins)])


def antisymmetrized_direct_kernel(problem: AmplitudeProblem) -> complex:
    """``(1/n!) sum_pi sgn(pi) A_hat'(pi lambda)``, straight from the definition."""
    n = problem.leg_count
    if not problem.total_momentum_zero():
        return 0j
    perms_arr, signs = permutations_with_signs(n)
    mom = problem.momenta[perms_arr] if n else np.zeros((1, 0), dtype=np.int64)
    spins = problem.spins[perms_arr] if n else np.zeros((1, 0), dtype=np.int64)
    vals = _contract(problem, _factor_network(problem, mom, spins), keep_legs=False, keep_lines=False)
    total = problem.global_sign() * problem.prefactor() * (signs @ vals)
    return complex(total / math.factorial(n))
