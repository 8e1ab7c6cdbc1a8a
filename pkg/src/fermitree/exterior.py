"""Sparse exterior algebra over a finite, totally ordered index set.

A basis element ``e_{i1} ^ ... ^ e_{ik}`` with ``i1 < ... < ik`` is stored as
the bitmask ``sum(1 << i)``. Signs of products are computed by counting
inversions between the two masks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

PRUNE = 1e-14


class LegIndex(NamedTuple):
    """A leg ``(vertex, slot)``; tuples order lexicographically."""

    vertex: int
    slot: int


def leg_universe(free_legs: Sequence[int]) -> list[LegIndex]:
    """All leg indices ``(l, k)``, ``k = 1..free_legs[l-1]``, in increasing order."""
    return [LegIndex(l, k) for l, count in enumerate(free_legs, start=1)
            for k in range(1, count + 1)]


def merge_sign(a: int, b: int) -> int:
    """Sign of ``e_a ^ e_b`` relative to the increasing basis element ``e_{a|b}``.

    ``a`` and ``b`` must be disjoint masks.
    """
    inversions = 0
    while b:
        low = b & -b
        inversions += (a & ~((low << 1) - 1)).bit_count()
        b ^= low
    return -1 if inversions & 1 else 1


def permutation_sign(seq: Sequence) -> int:
    """Sign of the permutation sorting ``seq`` (0 if entries repeat)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq))
                     if seq[i] > seq[j])
    return -1 if inversions & 1 else 1


@lru_cache(maxsize=None)
def permutations_with_signs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All permutations of ``range(n)`` as rows (lexicographic order) and their signs."""
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(math.factorial(n), n)
    inv = np.zeros(len(perms), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            inv += perms[:, i] > perms[:, j]
    return perms, np.where(inv % 2, -1, 1)


@lru_cache(maxsize=None)
def merge_sign_table(n: int) -> np.ndarray:
    """``table[a, b]`` = ``merge_sign(a, b)`` for disjoint masks over ``n`` indices (0 if they overlap)."""
    masks = np.arange(1 << n, dtype=np.int64)
    inv = np.zeros((1 << n, 1 << n), dtype=np.int64)
    for bit in range(n):
        has = (masks >> bit) & 1
        above = np.bitwise_count(masks >> (bit + 1)).astype(np.int64)
        inv += above[:, None] * has[None, :]
    table = np.where(inv % 2, -1, 1).astype(np.int8)
    table[(masks[:, None] & masks[None, :]) != 0] = 0
    return table


def mask_indices(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


@dataclass(frozen=True)
class Form:
    """Element of the exterior algebra over ``size`` generators.

    ``terms`` maps bitmasks of increasing index tuples to complex coefficients.
    Instances are treated as immutable.
    """

    size: int
    terms: Mapping[int, complex]

    def __post_init__(self):
        top = 1 << self.size
        for mask in self.terms:
            if mask < 0 or mask >= top:
                raise ValueError(f"basis mask {mask:#b} outside universe of size {self.size}")

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, size: int) -> Form:
        return cls(size, {})

    @classmethod
    def scalar(cls, size: int, value: complex = 1.0) -> Form:
        return cls.from_dict(size, {0: value})

    @classmethod
    def from_dict(cls, size: int, terms: Mapping[int, complex], prune: float = PRUNE) -> Form:
        return cls(size, {k: complex(v) for k, v in terms.items() if abs(v) > prune})

    @classmethod
    def basis(cls, size: int, *indices: int, coeff: complex = 1.0) -> Form:
        """``coeff * e_{i1} ^ ... ^ e_{ik}`` for indices in any order."""
        return cls.from_tuple(size, indices, coeff)

    @classmethod
    def from_tuple(cls, size: int, indices: Iterable[int], coeff: complex = 1.0) -> Form:
        indices = list(indices)
        for i in indices:
            if not 0 <= i < size:
                raise ValueError(f"index {i} outside universe of size {size}")
        sign = permutation_sign(indices)
        if sign == 0:
            return cls.zero(size)
        mask = 0
        for i in indices:
            mask |= 1 << i
        return cls.from_dict(size, {mask: sign * coeff})

    @classmethod
    def one_form(cls, coefficients: Sequence[complex]) -> Form:
        size = len(coefficients)
        return cls.from_dict(size, {1 << i: c for i, c in enumerate(coefficients)})

    # -- inspection ---------------------------------------------------------

    def degrees(self) -> set[int]:
        return {mask.bit_count() for mask in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def coefficient(self, indices: Iterable[int]) -> complex:
        """Coefficient of ``e_{i1} ^ ... ^ e_{ik}`` (indices in any order)."""
        indices = list(indices)
        sign = permutation_sign(indices)
        if sign == 0:
            return 0j
        mask = sum(1 << i for i in indices)
        return sign * self.terms.get(mask, 0j)

    def one_form_vector(self) -> np.ndarray:
        if self.degrees() - {1}:
            raise ValueError("not a one-form")
        vec = np.zeros(self.size, dtype=complex)
        for mask, c in self.terms.items():
            vec[mask.bit_length() - 1] = c
        return vec

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        parts = [f"{c:.6g}*e{tuple(mask_indices(m))}" for m, c in sorted(self.terms.items())]
        return f"Form(size={self.size}, " + (" + ".join(parts) or "0") + ")"

    # -- linear structure ---------------------------------------------------

    def _check(self, other: Form):
        if not isinstance(other, Form):
            raise TypeError(f"expected Form, got {type(other).__name__}")
        if other.size != self.size:
            raise ValueError(f"universe mismatch: {self.size} != {other.size}")

    def __add__(self, other: Form) -> Form:
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0j) + v
        return Form.from_dict(self.size, out)

    def __neg__(self) -> Form:
        return Form(self.size, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: Form) -> Form:
        return self + (-other)

    def __mul__(self, c: complex) -> Form:
        return Form.from_dict(self.size, {k: c * v for k, v in self.terms.items()})

    __rmul__ = __mul__

    def map_terms(self, factor) -> Form:
        """Multiply each basis term by ``factor(mask)`` (a diagonal operator)."""
        return Form.from_dict(self.size, {k: factor(k) * v for k, v in self.terms.items()})

    def allclose(self, other: Form, atol: float = 1e-10) -> bool:
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0j) - other.terms.get(k, 0j)) <= atol for k in keys)

    # -- products -----------------------------------------------------------

    def __xor__(self, other: Form) -> Form:
        return wedge(self, other)


def wedge(*forms: Form) -> Form:
    """Wedge product ``a1 ^ a2 ^ ... ^ an``."""
    if not forms:
        raise ValueError("wedge of no forms")
    result = forms[0]
    for f in forms[1:]:
        result._check(f)
        out: dict[int, complex] = {}
        for ma, ca in result.terms.items():
            for mb, cb in f.terms.items():
                if ma & mb:
                    continue
                key = ma | mb
                out[key] = out.get(key, 0j) + merge_sign(ma, mb) * ca * cb
        result = Form.from_dict(result.size, out)
    return result


def lp_norm(a: Form, p: float = 2.0) -> float:
    """l^p norm of the coefficient vector over increasing basis tuples."""
    if p < 1:
        raise ValueError(f"l^p norm requires p >= 1, got {p}")
    if not a.terms:
        return 0.0
    values = np.abs(np.fromiter(a.terms.values(), dtype=complex, count=len(a.terms)))
    if math.isinf(p):
        return float(values.max())
    return float(np.sum(values ** p) ** (1.0 / p))


def top_integral(a: Form) -> complex:
    """Coefficient of the full increasing tuple ``e_0 ^ ... ^ e_{size-1}``."""
    return a.terms.get((1 << a.size) - 1, 0j)


def interior_product(v: Form, a: Form) -> Form:
    """l^2 adjoint of ``b -> v ^ b`` applied to ``a``; ``v`` must be a one-form."""
    if v.degrees() - {1}:
        raise ValueError("interior product needs a degree-1 form")
    v._check(a)
    out: dict[int, complex] = {}
    for mv, cv in v.terms.items():
        i = mv.bit_length() - 1
        below = mv - 1
        for ma, ca in a.terms.items():
            if not ma & mv:
                continue
            sign = -1 if (ma & below).bit_count() & 1 else 1
            key = ma ^ mv
            out[key] = out.get(key, 0j) + sign * np.conj(cv) * ca
    return Form.from_dict(a.size, out)


def shuffle_bound(degrees: Sequence[int], p: float) -> float:
    """Multinomial ``(k; k1..kn)`` raised to ``(p-1)/p``; the wedge submultiplicativity constant."""
    degrees = list(degrees)
    if not degrees:
        raise ValueError("shuffle_bound needs at least one degree")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if any(k < 0 for k in degrees):
        raise ValueError("degrees must be nonnegative")
    multinomial = math.factorial(sum(degrees))
    for k in degrees:
        multinomial //= math.factorial(k)
    exponent = 1.0 if math.isinf(p) else (p - 1.0) / p
    return float(multinomial) ** exponent


def random_form(rng: np.random.Generator, size: int, degree: int, density: float = 1.0) -> Form:
    """Random homogeneous form with complex Gaussian coefficients."""
    from itertools import combinations
    terms = {}
    for combo in combinations(range(size), degree):
        if density < 1.0 and rng.random() > density:
            continue
        terms[sum(1 << i for i in combo)] = complex(rng.normal(), rng.normal())
    return Form.from_dict(size, terms)
