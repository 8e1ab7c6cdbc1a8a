"""Labeled trees on ``{1..m}``: enumeration, rooting, momentum routing, interpolation matrices."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

MAX_ENUMERATE = 8


def _edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Tree:
    """A labeled tree on vertices ``1..m``; ``edges`` is a sorted tuple of pairs ``(a, b)``, ``a < b``."""

    m: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple(sorted(_edge(a, b) for a, b in self.edges))
        object.__setattr__(self, "edges", edges)
        if self.m < 1:
            raise ValueError("a tree needs at least one vertex")
        if len(edges) != self.m - 1 or len(set(edges)) != len(edges):
            raise ValueError(f"{len(edges)} distinct edges cannot form a tree on {self.m} vertices")
        for a, b in edges:
            if not (1 <= a < b <= self.m):
                raise ValueError(f"edge {(a, b)} outside vertex set 1..{self.m}")
        seen = {1}
        frontier = [1]
        adj = self.adjacency
        while frontier:
            v = frontier.pop()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    frontier.append(u)
        if len(seen) != self.m:
            raise ValueError("edge set is not connected")

    @cached_property
    def adjacency(self) -> dict[int, list[int]]:
        adj = {v: [] for v in range(1, self.m + 1)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return {v: sorted(ns) for v, ns in adj.items()}

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @property
    def degrees(self) -> list[int]:
        return [self.degree(v) for v in range(1, self.m + 1)]

    def path(self, a: int, b: int) -> list[tuple[int, int]]:
        """Edges on the tree path from ``a`` to ``b``."""
        parent = {a: None}
        frontier = [a]
        while frontier:
            v = frontier.pop()
            for u in self.adjacency[v]:
                if u not in parent:
                    parent[u] = v
                    frontier.append(u)
        out = []
        v = b
        while parent[v] is not None:
            out.append(_edge(v, parent[v]))
            v = parent[v]
        return out[::-1]

    def to_json(self) -> str:
        return json.dumps({"m": self.m, "edges": [list(e) for e in self.edges]})

    @classmethod
    def from_json(cls, text: str | dict) -> Tree:
        data = json.loads(text) if isinstance(text, str) else text
        return cls(int(data["m"]), tuple(tuple(e) for e in data["edges"]))


def prufer_decode(seq: Sequence[int], m: int) -> Tree:
    """Tree on ``1..m`` with Pruefer sequence ``seq`` (length ``m - 2``)."""
    if len(seq) != m - 2:
        raise ValueError("Pruefer sequence must have length m - 2")
    degree = [1] * (m + 1)
    for v in seq:
        degree[v] += 1
    edges = []
    for v in seq:
        leaf = next(u for u in range(1, m + 1) if degree[u] == 1)
        edges.append((leaf, v))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = (x for x in range(1, m + 1) if degree[x] == 1)
    edges.append((u, w))
    return Tree(m, tuple(edges))


def enumerate_trees(m: int) -> list[Tree]:
    """All ``m^(m-2)`` labeled trees on ``1..m``."""
    if not 1 <= m <= MAX_ENUMERATE:
        raise ValueError(f"m must lie in 1..{MAX_ENUMERATE}, got {m}")
    if m == 1:
        return [Tree(1, ())]
    if m == 2:
        return [Tree(2, ((1, 2),))]
    return [prufer_decode(seq, m) for seq in itertools.product(range(1, m + 1), repeat=m - 2)]


def path_tree(m: int) -> Tree:
    return Tree(m, tuple((l, l + 1) for l in range(1, m)))


def star_tree(m: int, center: int = 1) -> Tree:
    return Tree(m, tuple((center, v) for v in range(1, m + 1) if v != center))


def caterpillar(m: int) -> Tree:
    """Spine ``1..m+2`` with a pendant leaf ``l+m+1`` on each interior spine vertex ``l``."""
    if m < 1:
        raise ValueError("caterpillar needs m >= 1")
    edges = [(l, l + 1) for l in range(1, m + 2)]
    edges += [(l, l + m + 1) for l in range(2, m + 2)]
    return Tree(2 * m + 2, tuple(edges))


def branch_excess(tree: Tree) -> int:
    """``sum_l max(deg(l) - 2, 0)``: the number of branches."""
    return sum(max(d - 2, 0) for d in tree.degrees)


def trees_with_branches(m: int, branches: int) -> list[Tree]:
    return [t for t in enumerate_trees(m) if branch_excess(t) <= branches]


@dataclass(frozen=True)
class RootedTree:
    """A tree with a chosen root; lines are oriented towards the root."""

    base: Tree
    root: int
    parent: dict[int, int | None] = field(repr=False)
    children: dict[int, tuple[int, ...]] = field(repr=False)

    @property
    def m(self) -> int:
        return self.base.m

    def degree(self, v: int) -> int:
        return self.base.degree(v)

    @property
    def degrees(self) -> list[int]:
        return self.base.degrees

    def line(self, v: int) -> tuple[int, int]:
        """The line ``{v, parent(v)}`` for a non-root vertex."""
        p = self.parent[v]
        if p is None:
            raise ValueError("the root has no parent line")
        return _edge(v, p)

    @cached_property
    def subtree(self) -> dict[int, frozenset[int]]:
        """Vertex sets below each non-root vertex (the vertices cut off from the root by its line)."""
        out: dict[int, frozenset[int]] = {}
        for v in self.postorder():
            below = {v}
            for c in self.children[v]:
                below |= out[c]
            out[v] = frozenset(below)
        return out

    def edge_subtree(self, edge: tuple[int, int]) -> frozenset[int]:
        a, b = edge
        child = a if self.parent.get(a) == b else b
        if self.parent.get(child) not in edge:
            raise ValueError(f"{edge} is not a line of the tree")
        return self.subtree[child]

    def postorder(self) -> list[int]:
        """Children (in increasing label) before their parent, root last."""
        out = []

        def visit(v):
            for c in self.children[v]:
                visit(c)
            out.append(v)

        visit(self.root)
        return out

    def lines(self) -> list[tuple[int, int]]:
        """Lines as ``(child, parent)`` pairs in postorder of the child."""
        return [(v, self.parent[v]) for v in self.postorder() if v != self.root]


def root_tree(tree: Tree, root: int) -> RootedTree:
    if not 1 <= root <= tree.m:
        raise ValueError(f"root {root} not a vertex of the tree")
    parent: dict[int, int | None] = {root: None}
    order = [root]
    for v in order:
        for u in tree.adjacency[v]:
            if u not in parent:
                parent[u] = v
                order.append(u)
    children = {v: tuple(sorted(u for u in tree.adjacency[v] if parent.get(u) == v))
                for v in range(1, tree.m + 1)}
    return RootedTree(tree, root, parent, children)


class NoMomentumSolution(ValueError):
    """Raised when the external momenta do not sum to zero."""


def momentum_assignment(rooted: RootedTree, leg_momenta: dict[int, Sequence],
                        add: Callable, zero, is_zero: Callable | None = None) -> dict[tuple[int, int], object]:
    """Line momenta solving conservation at every vertex.

    ``leg_momenta[l]`` lists the external momenta entering at vertex ``l``.
    The line ``(child, parent)`` carries the total momentum of the legs in the
    child's subtree, flowing towards the parent.
    """
    is_zero = is_zero or (lambda p: p == zero)
    total = zero
    own = {}
    for v in range(1, rooted.m + 1):
        s = zero
        for p in leg_momenta.get(v, ()):
            s = add(s, p)
        own[v] = s
        total = add(total, s)
    if not is_zero(total):
        raise NoMomentumSolution("external momenta do not sum to zero")
    flow: dict[int, object] = {}
    out = {}
    for v in rooted.postorder():
        s = own[v]
        for c in rooted.children[v]:
            s = add(s, flow[c])
        flow[v] = s
        if v != rooted.root:
            out[(v, rooted.parent[v])] = s
    return out


@dataclass(frozen=True)
class STMatrix:
    s_values: dict[tuple[int, int], float]
    matrix: np.ndarray


def s_matrix(tree: Tree, s: dict[tuple[int, int], float] | Sequence[float]) -> STMatrix:
    """Interpolation matrix: 1 on the diagonal, minimum of ``s`` along the tree path elsewhere."""
    if not isinstance(s, dict):
        s = dict(zip(tree.edges, s))
    s = {_edge(*e): float(v) for e, v in s.items()}
    if set(s) != set(tree.edges):
        raise ValueError("s must assign a value to every edge of the tree")
    for e, v in s.items():
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"s{e} = {v} outside [0, 1]")
    m = tree.m
    mat = np.eye(m)
    for a in range(1, m + 1):
        for b in range(a + 1, m + 1):
            val = min(s[e] for e in tree.path(a, b))
            mat[a - 1, b - 1] = mat[b - 1, a - 1] = val
    return STMatrix(s, mat)


def factor_a(st: STMatrix | np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Symmetric PSD square root ``a`` with ``a.T @ a = s``."""
    mat = st.matrix if isinstance(st, STMatrix) else np.asarray(st, dtype=float)
    evals, evecs = np.linalg.eigh(mat)
    if evals.min() < -tol:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {evals.min():.3g})")
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
    return (root + root.T) / 2


def degree_factorial_sum(m: int) -> int:
    """``sum over trees on 1..m of prod_l deg(l)!`` (exact integer)."""
    return sum(math.prod(math.factorial(d) for d in t.degrees) for t in enumerate_trees(m))
