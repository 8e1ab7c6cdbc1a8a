"""Leaf-to-root evaluation of the tree amplitude as an exterior form over the external legs.

Two implementations share the same conventions:

* ``recurse_alpha`` works with sparse ``Form`` objects for one spin assignment;
* ``dense_alpha`` keeps one array axis per spin variable plus a bitmask axis
  and so handles every spin assignment at once.

Both return coefficients in the increasing basis of the leg universe, after
the fixed reordering sign that puts the wedged slots in lexicographic order.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from ..exterior import Form, merge_sign, merge_sign_table
from .oracle import spin_grid
from .problem import AmplitudeProblem, SpinAssignment


def mask_momenta(problem: AmplitudeProblem) -> np.ndarray:
    """Flat momentum ``sum_{iota in S} p_iota`` for every bitmask ``S`` of legs."""
    n = problem.leg_count
    torus = problem.torus
    out = np.zeros(1 << n, dtype=np.int64)
    if n == 0:
        return out
    p = problem.momenta
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        out[mask] = torus.add_table[out[mask & (mask - 1)], p[low]]
    return out


def _as_assignment(problem: AmplitudeProblem, sigma) -> SpinAssignment:
    if isinstance(sigma, SpinAssignment):
        return sigma
    return SpinAssignment.from_vector(sigma, problem.edges)


# -- sparse forms -------------------------------------------------------------

def fundamental_form(problem: AmplitudeProblem, sigma, pos: int, interpolation=None) -> Form:
    """``alpha_iota = sum_{iota'} [sigma_{iota'} = sigma'_iota] e_{iota'}`` for the slot at flat position ``pos``.

    ``interpolation=(a, k)`` weights ``e_{iota'}`` by ``a[k_i, l(iota')]`` (complex
    conjugated for the first slot of each pair), where ``i = pos // 2`` and
    vertices and ``k`` entries are 1-based.
    """
    sigma = _as_assignment(problem, sigma)
    n = problem.leg_count
    spins = problem.spins
    target = sigma.legs[pos]
    coeffs = (spins == target).astype(complex)
    if interpolation is not None:
        a, k = interpolation
        a = np.asarray(a)
        row = int(k[pos // 2]) - 1
        weights = np.array([a[row, leg.vertex - 1] for leg in problem.legs])
        coeffs = coeffs * (np.conj(weights) if pos % 2 == 0 else weights)
    return Form.from_dict(n, {1 << i: c for i, c in enumerate(coeffs)})


def apply_c(problem: AmplitudeProblem, sigma, edge: tuple[int, int], form: Form,
            msum: np.ndarray | None = None) -> Form:
    """Multiply each basis term ``e_S`` by ``C_hat_{sigma_l sigma'_l}(sum_{iota in S} p_iota)``."""
    sigma = _as_assignment(problem, sigma)
    msum = mask_momenta(problem) if msum is None else msum
    s, sp = sigma.lines[edge]
    row = problem.covariance.table[s, sp]
    return form.map_terms(lambda mask: row[msum[mask]])


def apply_w(problem: AmplitudeProblem, sigma, l: int, inputs: Sequence[Form],
            msum: np.ndarray | None = None) -> Form:
    """Contract the wedge of ``inputs`` with the vertex kernel at ``l``.

    ``inputs`` are the forms of the children (increasing label) followed by
    the fundamental forms of the free legs of ``l``. The kernel receives the
    parent line (momentum ``-P``, spin ``sigma'`` of that line), each child
    line (the child's momentum, spin ``sigma`` of the line) and each leg.
    """
    sigma = _as_assignment(problem, sigma)
    msum = mask_momenta(problem) if msum is None else msum
    rt = problem.rooted
    torus = problem.torus
    kernel = problem.kernels[l - 1]
    children = rt.children[l]
    if len(inputs) != len(children) + problem.free_legs[l - 1]:
        raise ValueError(f"vertex {l} expects {len(children) + problem.free_legs[l - 1]} input forms")
    arg_spins = []
    if rt.parent[l] is not None:
        arg_spins.append(sigma.lines[rt.line(l)][1])
    arg_spins += [sigma.lines[rt.line(c)][0] for c in children]
    arg_spins += [sigma.legs[pos] for pos in problem.vertex_legs(l)]

    unions, signs, coeffs, parts = [], [], [], []
    for combo in itertools.product(*(f.terms.items() for f in inputs)):
        union, sign, coeff = 0, 1, 1 + 0j
        for mask, c in combo:
            if union & mask:
                break
            sign *= merge_sign(union, mask)
            union |= mask
            coeff *= c
        else:
            unions.append(union)
            signs.append(sign)
            coeffs.append(coeff)
            parts.append([mask for mask, _ in combo])
    if not unions:
        return Form.zero(problem.leg_count)
    parts = np.array(parts, dtype=np.int64).reshape(len(unions), len(inputs))
    mom = msum[parts]
    if rt.parent[l] is not None:
        mom = np.concatenate([torus.neg_table[msum[np.array(unions)]][:, None], mom], axis=1)
    vals = kernel.evaluate(mom, np.broadcast_to(np.array(arg_spins), mom.shape))
    out: dict[int, complex] = {}
    for u, sg, c, v in zip(unions, signs, coeffs, vals):
        out[u] = out.get(u, 0j) + sg * c * v
    return Form.from_dict(problem.leg_count, out, prune=0.0)


def recurse_alpha(problem: AmplitudeProblem, sigma, interpolation=None) -> Form:
    """``alpha'(r; n; lambda; sigma)`` by leaf-to-root evaluation."""
    sigma = _as_assignment(problem, sigma)
    msum = mask_momenta(problem)
    rt = problem.rooted
    done: dict[int, Form] = {}
    for l in rt.postorder():
        ins = [done.pop(c) for c in rt.children[l]]
        ins += [fundamental_form(problem, sigma, pos, interpolation) for pos in problem.vertex_legs(l)]
        out = apply_w(problem, sigma, l, ins, msum)
        if l != rt.root:
            out = apply_c(problem, sigma, rt.line(l), out, msum)
        done[l] = out
    return done[rt.root] * problem.recursion_sign()


# -- dense arrays over all spin assignments -----------------------------------

class DenseRecursion:
    """The recursion on arrays ``(spin axes..., 2**n)``, one axis per spin variable.

    Axes that a factor does not depend on have length one. With
    ``sum_spins=True`` each spin variable is summed as soon as no later factor
    uses it, which yields the spin-summed form cheaply.
    """

    def __init__(self, problem: AmplitudeProblem, sum_spins: bool = False):
        self.problem = problem
        self.sum_spins = sum_spins
        self.S = problem.nspin
        self.V = problem.spin_variable_count
        self.n = problem.leg_count
        self.msum = mask_momenta(problem)
        self.top = (1 << self.n) - 1

    def _shape(self, axes: dict[int, int]) -> list[int]:
        shape = [1] * self.V + [1 << self.n]
        for ax, size in axes.items():
            shape[ax] = size
        return shape

    def leg_form(self, pos: int) -> np.ndarray:
        S = self.S
        arr = np.zeros((S, 1 << self.n), dtype=complex)
        spins = self.problem.spins
        for i in range(self.n):
            arr[spins[i], 1 << i] = 1.0
        return arr.reshape(self._shape({self.problem.leg_axis(pos): S}))

    def apply_c(self, edge, arr: np.ndarray) -> np.ndarray:
        a, b = self.problem.line_axes(edge)
        fac = self.problem.covariance.table[:, :, self.msum]
        out = arr * fac.reshape(self._shape({a: self.S, b: self.S}))
        if self.sum_spins:
            out = out.sum(axis=b, keepdims=True)
        return out

    def apply_w(self, l: int, inputs: list[np.ndarray]) -> np.ndarray:
        prob = self.problem
        rt = prob.rooted
        torus = prob.torus
        spin_axes = tuple(range(self.V))
        # disjoint combinations of supported basis masks, with wedge signs
        unions = np.zeros(1, dtype=np.int64)
        signs = np.ones(1, dtype=np.int64)
        picks = np.zeros((1, 0), dtype=np.int64)
        merge = merge_sign_table(self.n)
        for arr in inputs:
            support = np.nonzero(np.any(arr != 0, axis=spin_axes))[0].astype(np.int64)
            u = np.repeat(unions, len(support))
            mk = np.tile(support, len(unions))
            keep = (u & mk) == 0
            u, mk = u[keep], mk[keep]
            signs = np.repeat(signs, len(support))[keep] * merge[u, mk]
            picks = np.concatenate([np.repeat(picks, len(support), axis=0)[keep], mk[:, None]], axis=1)
            unions = u | mk
        C = len(unions)
        shape = self._shape({})
        if C == 0:
            return np.zeros(shape, dtype=complex)
        prod = signs.astype(complex).reshape([1] * self.V + [C])
        for i, arr in enumerate(inputs):
            prod = prod * arr[..., picks[:, i]]
        # kernel values for every combination and every spin tuple of its arguments
        mom = self.msum[picks]
        axes = []
        if rt.parent[l] is not None:
            mom = np.concatenate([torus.neg_table[self.msum[unions]][:, None], mom], axis=1)
            axes.append(prob.line_axes(rt.line(l))[1])
        axes += [prob.line_axes(rt.line(c))[0] for c in rt.children[l]]
        axes += [prob.leg_axis(pos) for pos in prob.vertex_legs(l)]
        nl = len(axes)
        grid = spin_grid(self.S, nl)
        w = prob.kernels[l - 1].evaluate(mom[:, None, :], grid[None, :, :])
        w = np.moveaxis(w.reshape((C,) + (self.S,) * nl), 0, -1)
        order = np.argsort(axes)
        w = w.transpose(list(order) + [nl]).reshape(self._shape({ax: self.S for ax in axes})[:-1] + [C])
        prod = prod * w
        onehot = np.zeros((C, 1 << self.n))
        onehot[np.arange(C), unions] = 1.0
        out = prod @ onehot
        if self.sum_spins:
            done = [prob.line_axes(rt.line(c))[0] for c in rt.children[l]]
            done += [prob.leg_axis(pos) for pos in prob.vertex_legs(l)]
            if done:
                out = out.sum(axis=tuple(done), keepdims=True)
        return out

    def run(self) -> np.ndarray:
        prob = self.problem
        rt = prob.rooted
        done: dict[int, np.ndarray] = {}
        for l in rt.postorder():
            ins = [done.pop(c) for c in rt.children[l]]
            ins += [self.leg_form(pos) for pos in prob.vertex_legs(l)]
            out = self.apply_w(l, ins)
            if l != rt.root:
                out = self.apply_c(rt.line(l), out)
            done[l] = out
        out = done[rt.root] * prob.recursion_sign()
        return np.broadcast_to(out, [self.S] * self.V + [1 << self.n]).copy() if not self.sum_spins else out


def dense_alpha(problem: AmplitudeProblem, sum_spins: bool = False) -> np.ndarray:
    """``alpha'`` for every spin assignment: shape ``(S,) * V + (2**n,)``.

    With ``sum_spins`` the spin axes are summed (kept with length one).
    """
    return DenseRecursion(problem, sum_spins).run()


def recurse_alpha_all(problem: AmplitudeProblem) -> np.ndarray:
    return dense_alpha(problem, sum_spins=False)


def kernel_hat_A(problem: AmplitudeProblem) -> complex:
    """Antisymmetric tree kernel ``A_hat`` at the problem's external legs, via the recursion."""
    if not problem.total_momentum_zero():
        return 0j
    top = dense_alpha(problem, sum_spins=True).reshape(-1)[-1]
    n = problem.leg_count
    return complex(problem.global_sign() * problem.prefactor() * top / math.factorial(n))
