"""Position-space form of the line and vertex maps as superpositions of rank-1 wedges."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..exterior import Form, lp_norm, wedge
from .problem import AmplitudeProblem
from .recursion import _as_assignment


@dataclass
class RankOneSuperposition:
    """``sum_j coeffs[j] * factors[j][0] ^ factors[j][1] ^ ...`` with one-form factors."""

    size: int
    coeffs: list[complex]
    factors: list[list[Form]]

    def to_form(self) -> Form:
        total = Form.zero(self.size)
        for c, fs in zip(self.coeffs, self.factors):
            total = total + (wedge(*fs) if fs else Form.scalar(self.size)) * c
        return total

    def norm_bound(self) -> float:
        """``sum_j |c_j| prod ||factor||_2``, which dominates ``||to_form()||_2``."""
        return float(sum(abs(c) * np.prod([lp_norm(f, 2) for f in fs]) for c, fs in zip(self.coeffs, self.factors)))

    def __len__(self):
        return len(self.coeffs)


def _check_one_forms(forms: Sequence[Form]):
    for f in forms:
        if f.degrees() - {1}:
            raise ValueError("inputs must be explicit wedges of one-forms")


def phase_shift(problem: AmplitudeProblem, x: int, v: Form) -> Form:
    """``E(x)[v]``: multiply ``e_iota`` by ``exp(i p_iota . x)``."""
    ph = problem.torus.phase(problem.momenta, x)
    return v.map_terms(lambda mask: ph[mask.bit_length() - 1])


def decompose_line(problem: AmplitudeProblem, sigma, edge, factors: Sequence[Form]) -> RankOneSuperposition:
    """``C_l[v_1 ^ ... ^ v_k] = sum_x C(x) E(x)[v_1] ^ ... ^ E(x)[v_k]``."""
    _check_one_forms(factors)
    sigma = _as_assignment(problem, sigma)
    s, sp = sigma.lines[edge]
    pos = problem.covariance.position[s, sp]
    coeffs, out = [], []
    for x in np.nonzero(np.abs(pos) > 0)[0]:
        coeffs.append(complex(pos[x]))
        out.append([phase_shift(problem, int(x), v) for v in factors])
    return RankOneSuperposition(problem.leg_count, coeffs, out)


def decompose_vertex(problem: AmplitudeProblem, sigma, l: int, child_factors: Sequence[Sequence[Form]],
                     leg_forms: Sequence[Form]) -> RankOneSuperposition:
    """The vertex map at ``l`` as a position sum of rank-1 wedges.

    ``child_factors[c]`` lists the one-form factors of the ``c``-th child's
    input; each factor of a child attached at ``x'`` and each leg at ``x_k`` is
    shifted by ``E(x' - x_0)`` or ``E(x_k - x_0)``, ``x_0`` being the position
    of the parent argument (zero at the root).
    """
    sigma = _as_assignment(problem, sigma)
    rt = problem.rooted
    children = rt.children[l]
    if len(child_factors) != len(children) or len(leg_forms) != problem.free_legs[l - 1]:
        raise ValueError(f"vertex {l}: arity mismatch")
    for fs in child_factors:
        _check_one_forms(fs)
    _check_one_forms(leg_forms)
    spins = []
    has_parent = rt.parent[l] is not None
    if has_parent:
        spins.append(sigma.lines[rt.line(l)][1])
    spins += [sigma.lines[rt.line(c)][0] for c in children]
    spins += [sigma.legs[pos] for pos in problem.vertex_legs(l)]
    torus = problem.torus
    coeffs, out = [], []
    for key, w in problem.kernels[l - 1].position_terms().items():
        if [s for _, s in key] != spins:
            continue
        xs = [x for x, _ in key]
        x0 = xs[0] if has_parent else 0
        shifts = [torus.add(x, torus.neg(x0)) for x in xs[int(has_parent):]]
        factors = []
        for shift, fs in zip(shifts, list(child_factors) + [[f] for f in leg_forms]):
            factors += [phase_shift(problem, shift, v) for v in fs]
        coeffs.append(complex(w))
        out.append(factors)
    return RankOneSuperposition(problem.leg_count, coeffs, out)


def fourier_decompose(problem: AmplitudeProblem, sigma, target, *inputs) -> RankOneSuperposition:
    """Dispatch on ``target``: ``("edge", (a, b))`` or ``("vertex", l)``."""
    kind, which = target
    if kind == "edge":
        return decompose_line(problem, sigma, which, *inputs)
    if kind == "vertex":
        return decompose_vertex(problem, sigma, which, *inputs)
    raise ValueError(f"unknown target {kind!r}")
