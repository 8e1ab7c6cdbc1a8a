"""Tree-amplitude problems: tree, legs per vertex, external momenta and spins, kernels, covariance."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ..exterior import LegIndex, leg_universe, permutation_sign
from ..grassmann.momentum import Covariance, SeparableKernel
from ..trees import RootedTree, Tree, root_tree

PROBLEM_SCHEMA = "fermitree.problem/1"


@dataclass(frozen=True)
class SpinAssignment:
    """Line spins ``(sigma_l, sigma'_l)`` per edge (parent end, child end) and leg spins ``sigma'_iota``.

    All values are spin indices.
    """

    lines: dict[tuple[int, int], tuple[int, int]]
    legs: tuple[int, ...]

    def vector(self, edges: Sequence[tuple[int, int]]) -> tuple[int, ...]:
        """Flat layout used by the dense arrays: line spins in edge order, then leg spins."""
        out = []
        for e in edges:
            out.extend(self.lines[e])
        return tuple(out) + tuple(self.legs)

    @classmethod
    def from_vector(cls, vec: Sequence[int], edges: Sequence[tuple[int, int]]) -> SpinAssignment:
        vec = [int(v) for v in vec]
        lines = {e: (vec[2 * i], vec[2 * i + 1]) for i, e in enumerate(edges)}
        return cls(lines, tuple(vec[2 * len(edges):]))


@dataclass(eq=False)
class AmplitudeProblem:
    """One tree term: ``tree`` rooted at ``root``, ``n[l-1]`` legs at vertex ``l``.

    ``kernels[l-1]`` is the interaction kernel at vertex ``l`` (arity ``n[l-1]``);
    ``external`` lists ``(momentum, spin)`` index pairs for the free legs in
    lexicographic ``(vertex, slot)`` order.
    """

    tree: Tree
    root: int
    n: tuple[int, ...]
    covariance: Covariance
    kernels: tuple[SeparableKernel, ...]
    external: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        self.n = tuple(int(v) for v in self.n)
        if isinstance(self.kernels, dict):
            self.kernels = tuple(self.kernels[v] for v in self.n)
        self.kernels = tuple(self.kernels)
        m = self.tree.m
        if len(self.n) != m or len(self.kernels) != m:
            raise ValueError("need one leg count and one kernel per vertex")
        for l, (nl, d) in enumerate(zip(self.n, self.tree.degrees), start=1):
            if nl < d:
                raise ValueError(f"vertex {l} has {nl} legs but degree {d}")
        for l, (nl, k) in enumerate(zip(self.n, self.kernels), start=1):
            if k.arity != nl:
                raise ValueError(f"kernel at vertex {l} has arity {k.arity}, expected {nl}")
            if k.torus != self.covariance.torus or k.nspin != self.covariance.nspin:
                raise ValueError("kernels and covariance must share torus and spin set")
        if self.external is not None:
            ext = tuple((int(p), int(s)) for p, s in self.external)
            if len(ext) != self.leg_count:
                raise ValueError(f"expected {self.leg_count} external legs, got {len(ext)}")
            for p, s in ext:
                if not (0 <= p < self.torus.sites and 0 <= s < self.nspin):
                    raise ValueError(f"external leg {(p, s)} out of range")
            self.external = ext

    # -- basic data ---------------------------------------------------------

    @property
    def m(self) -> int:
        return self.tree.m

    @property
    def torus(self):
        return self.covariance.torus

    @property
    def nspin(self) -> int:
        return self.covariance.nspin

    @cached_property
    def rooted(self) -> RootedTree:
        return root_tree(self.tree, self.root)

    @cached_property
    def free_legs(self) -> tuple[int, ...]:
        return tuple(nl - d for nl, d in zip(self.n, self.tree.degrees))

    @cached_property
    def legs(self) -> list[LegIndex]:
        return leg_universe(self.free_legs)

    @property
    def leg_count(self) -> int:
        """``n(n, m) = sum_l n_l - 2(m - 1)``."""
        return sum(self.n) - 2 * (self.m - 1)

    @cached_property
    def leg_position(self) -> dict[LegIndex, int]:
        return {leg: i for i, leg in enumerate(self.legs)}

    def vertex_legs(self, l: int) -> list[int]:
        """Flat positions of the free legs of vertex ``l``."""
        start = sum(self.free_legs[: l - 1])
        return list(range(start, start + self.free_legs[l - 1]))

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return self.tree.edges

    def line_child(self, edge: tuple[int, int]) -> int:
        a, b = edge
        return a if self.rooted.parent.get(a) == b else b

    def line_parent(self, edge: tuple[int, int]) -> int:
        return self.rooted.parent[self.line_child(edge)]

    @cached_property
    def line_index(self) -> dict[tuple[int, int], int]:
        return {e: i for i, e in enumerate(self.edges)}

    @property
    def spin_variable_count(self) -> int:
        return 2 * (self.m - 1) + self.leg_count

    def line_axes(self, edge) -> tuple[int, int]:
        """Dense-array axes of ``(sigma_l, sigma'_l)``."""
        i = self.line_index[edge]
        return 2 * i, 2 * i + 1

    def leg_axis(self, pos: int) -> int:
        return 2 * (self.m - 1) + pos

    def prefactor(self) -> int:
        """``prod_l n_l! / (n_l - d(l))!``."""
        return math.prod(math.factorial(nl) // math.factorial(nl - d)
                         for nl, d in zip(self.n, self.tree.degrees))

    # -- external data ------------------------------------------------------

    def with_external(self, external) -> AmplitudeProblem:
        return AmplitudeProblem(self.tree, self.root, self.n, self.covariance, self.kernels, tuple(external))

    def with_root(self, root: int) -> AmplitudeProblem:
        return AmplitudeProblem(self.tree, root, self.n, self.covariance, self.kernels, self.external)

    def _require_external(self):
        if self.external is None:
            raise ValueError("problem has no external legs assigned")
        return self.external

    @property
    def momenta(self) -> np.ndarray:
        return np.array([p for p, _ in self._require_external()], dtype=np.int64).reshape(-1)

    @property
    def spins(self) -> np.ndarray:
        return np.array([s for _, s in self._require_external()], dtype=np.int64).reshape(-1)

    def total_momentum_zero(self) -> bool:
        if self.leg_count == 0:
            return True
        return self.torus.sum(self.momenta) == 0

    def spin_assignments(self):
        """All spin assignments as flat vectors (see ``SpinAssignment.vector``)."""
        return itertools.product(range(self.nspin), repeat=self.spin_variable_count)

    # -- sign conventions ---------------------------------------------------

    def vertex_slots(self, l: int) -> list[tuple[int, int]]:
        """Lines at ``l`` in argument order: parent line first, then children by label."""
        rt = self.rooted
        out = []
        if rt.parent[l] is not None:
            out.append(rt.line(l))
        out.extend(rt.line(c) for c in rt.children[l])
        return out

    def global_sign(self) -> int:
        """Sign relating the ordered kernel product to the tree term of the expansion.

        The edge operators ``C(xi_p, xi_c) d_c d_p`` (``p`` the parent end) are
        reordered into per-vertex blocks, ``block_1 ... block_m``, each block
        applying its parent-line derivative first; the blocks are then moved
        onto their own interaction factor.
        """
        rt = self.rooted
        seq_d = []
        for child, parent in rt.lines():
            e = rt.line(child)
            seq_d.extend([(child, e), (parent, e)])
        seq_b = []
        for l in range(1, self.m + 1):
            seq_b.extend((l, e) for e in reversed(self.vertex_slots(l)))
        where = {sym: i for i, sym in enumerate(seq_d)}
        sign = permutation_sign([where[sym] for sym in seq_b]) if seq_d else 1
        passed = 0
        for l in range(1, self.m + 1):
            if (self.tree.degree(l) * passed) % 2:
                sign = -sign
            passed += self.n[l - 1]
        return sign

    def recursion_order(self) -> list[int]:
        """Flat leg positions in the order the recursion wedges them (children first, then own legs)."""
        rt = self.rooted

        def visit(l):
            out = []
            for c in rt.children[l]:
                out.extend(visit(c))
            return out + self.vertex_legs(l)

        return visit(self.root)

    def recursion_sign(self) -> int:
        return permutation_sign(self.recursion_order()) if self.leg_count else 1

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "schema": PROBLEM_SCHEMA,
            "tree": json.loads(self.tree.to_json()),
            "root": self.root,
            "n_per_vertex": list(self.n),
            "external_legs": None if self.external is None else [list(e) for e in self.external],
            "covariance": json.loads(self.covariance.to_json()),
            "kernels": [json.loads(k.to_json()) for k in self.kernels],
        })

    @classmethod
    def from_json(cls, text: str | dict, covariance: Covariance | None = None,
                  kernels: Sequence[SeparableKernel] | None = None) -> AmplitudeProblem:
        """Load a problem; ``covariance_ref``/``kernels_ref`` entries are resolved through the arguments."""
        data = json.loads(text) if isinstance(text, str) else text
        tree = Tree.from_json(data["tree"])
        cov = covariance if covariance is not None else Covariance.from_json(data["covariance"])
        if kernels is None:
            kernels = [SeparableKernel.from_json(k) for k in data["kernels"]]
        ext = data.get("external_legs")
        return cls(tree, int(data["root"]), tuple(data["n_per_vertex"]), cov, tuple(kernels),
                   None if ext is None else tuple(tuple(e) for e in ext))


def admissible_leg_counts(tree: Tree, choices: Sequence[int], max_legs: int | None = None,
                          min_legs: int = 0) -> list[tuple[int, ...]]:
    """All ``n`` with ``n_l`` in ``choices``, ``n_l >= d(l)`` and ``min_legs <= n(n, m) <= max_legs``."""
    out = []
    for n in itertools.product(sorted(choices), repeat=tree.m):
        if any(nl < d for nl, d in zip(n, tree.degrees)):
            continue
        total = sum(n) - 2 * (tree.m - 1)
        if total < min_legs or (max_legs is not None and total > max_legs):
            continue
        out.append(n)
    return out


def random_external(rng: np.random.Generator, problem: AmplitudeProblem, conserve: bool = True):
    """Random external ``(momentum, spin)`` legs, summing to zero momentum when ``conserve``."""
    n = problem.leg_count
    torus = problem.torus
    if n == 0:
        return ()
    p = rng.integers(0, torus.sites, size=n)
    if conserve:
        p[-1] = torus.neg(torus.sum(p[:-1])) if n > 1 else 0
    s = rng.integers(0, problem.nspin, size=n)
    return tuple((int(a), int(b)) for a, b in zip(p, s))
