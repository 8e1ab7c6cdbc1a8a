"""Finite Grassmann algebras with sparse, vectorized products.

A monomial ``psi(g1) ^ ... ^ psi(gk)`` with ``g1 < ... < gk`` in the generator
order is the bitmask ``sum(1 << g)``. Coefficients may carry a trailing axis
(for example powers of a formal coupling); products then take the truncated
Cauchy product along that axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .lattice import Torus

DEFAULT_CAP = 14
MAX_BITS = 62
PRUNE = 1e-14


@dataclass(frozen=True)
class GeneratorSet:
    """Generators ``psi(x, sigma)`` for ``x`` on a torus and ``sigma`` in a spin list.

    ``order`` optionally permutes the canonical enumeration: generator
    ``(x, s)`` (``s`` a spin index) has natural label ``x * len(spins) + s``
    and sits at position ``order.index(label)``.
    """

    torus: Torus
    spins: tuple
    order: tuple[int, ...] | None = None
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        object.__setattr__(self, "spins", tuple(self.spins))
        if not self.spins:
            raise ValueError("spin set must be nonempty")
        n = self.torus.sites * len(self.spins)
        if n > self.cap:
            raise ValueError(f"{n} generators exceed the cap of {self.cap}")
        if self.order is not None:
            order = tuple(int(i) for i in self.order)
            if sorted(order) != list(range(n)):
                raise ValueError("order must be a permutation of the generator labels")
            object.__setattr__(self, "order", order)

    @property
    def size(self) -> int:
        return self.torus.sites * len(self.spins)

    @property
    def nspin(self) -> int:
        return len(self.spins)

    def _position(self) -> np.ndarray:
        pos = np.arange(self.size)
        if self.order is not None:
            pos[np.array(self.order)] = np.arange(self.size)
        return pos

    def index(self, x: int, s: int) -> int:
        """Position of generator ``(x, s)``; ``x`` a flat site, ``s`` a spin index."""
        label = (int(x) % self.torus.sites) * self.nspin + int(s)
        return int(self._position()[label])

    def labels(self) -> list[tuple[int, int]]:
        """``(x, s)`` of the generator at each position."""
        nat = [(x, s) for x in range(self.torus.sites) for s in range(self.nspin)]
        if self.order is None:
            return nat
        return [nat[label] for label in self.order]

    def spin_index(self, spin: Hashable) -> int:
        return self.spins.index(spin)


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a.astype(np.uint64)).astype(np.int64)


def reorder_parity(a: int, b: np.ndarray) -> np.ndarray:
    """Parity of moving monomial ``b`` (array of masks) left past monomial ``a``."""
    parity = np.zeros(b.shape, dtype=np.int64)
    rest = a
    while rest:
        low = rest & -rest
        parity += _popcount(b & np.int64(low - 1))
        rest ^= low
    return parity & 1


class GrassmannPoly:
    """Sparse element of the Grassmann algebra over ``size`` generators."""

    __slots__ = ("size", "masks", "coeffs")

    def __init__(self, size: int, masks, coeffs, prune: float = PRUNE):
        if size > MAX_BITS:
            raise ValueError(f"at most {MAX_BITS} generators supported")
        masks = np.asarray(masks, dtype=np.int64).reshape(-1)
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape[:1] != masks.shape:
            raise ValueError("one coefficient (row) per monomial")
        if masks.size and (masks.min() < 0 or masks.max() >= (1 << size)):
            raise ValueError("monomial outside the generator set")
        uniq, inv = np.unique(masks, return_inverse=True)
        summed = np.zeros((uniq.size,) + coeffs.shape[1:], dtype=complex)
        np.add.at(summed, inv, coeffs)
        flat = np.abs(summed).reshape(uniq.size, int(np.prod(coeffs.shape[1:], dtype=int)))
        keep = flat.max(axis=1, initial=0.0) > prune
        self.size = size
        self.masks = uniq[keep]
        self.coeffs = summed[keep]

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, size: int, series: int | None = None) -> GrassmannPoly:
        shape = (0,) if series is None else (0, series)
        return cls(size, [], np.zeros(shape, dtype=complex))

    @classmethod
    def constant(cls, size: int, value: complex = 1.0) -> GrassmannPoly:
        return cls(size, [0], [value])

    @classmethod
    def generator(cls, size: int, g: int, coeff: complex = 1.0) -> GrassmannPoly:
        return cls.monomial(size, [g], coeff)

    @classmethod
    def monomial(cls, size: int, gens: Sequence[int], coeff: complex = 1.0) -> GrassmannPoly:
        """``coeff * psi(g1) ^ ... ^ psi(gk)`` for generators in any order."""
        gens = [int(g) for g in gens]
        if len(set(gens)) != len(gens):
            return cls.zero(size)
        inversions = sum(1 for i in range(len(gens)) for j in range(i + 1, len(gens)) if gens[i] > gens[j])
        mask = sum(1 << g for g in gens)
        return cls(size, [mask], [(-1) ** inversions * coeff])

    @classmethod
    def from_dict(cls, size: int, terms: dict[int, complex]) -> GrassmannPoly:
        return cls(size, list(terms), list(terms.values()))

    # -- inspection ---------------------------------------------------------

    @property
    def is_series(self) -> bool:
        return self.coeffs.ndim == 2

    def to_dict(self) -> dict[int, complex]:
        if self.is_series:
            raise ValueError("to_dict needs scalar coefficients")
        return {int(m): complex(c) for m, c in zip(self.masks, self.coeffs)}

    def degrees(self) -> np.ndarray:
        return _popcount(self.masks)

    def coefficient(self, gens: Sequence[int]):
        gens = list(gens)
        sign = GrassmannPoly.monomial(self.size, gens).coeffs
        if not sign.size:
            return 0j
        mask = sum(1 << g for g in gens)
        hit = np.searchsorted(self.masks, mask)
        if hit < self.masks.size and self.masks[hit] == mask:
            return sign[0] * self.coeffs[hit]
        return 0j * (self.coeffs[0] if self.coeffs.size else 1)

    def homogeneous(self, degree: int) -> GrassmannPoly:
        keep = self.degrees() == degree
        return GrassmannPoly(self.size, self.masks[keep], self.coeffs[keep])

    def is_even(self) -> bool:
        return bool(np.all(self.degrees() % 2 == 0))

    def __len__(self):
        return int(self.masks.size)

    def __repr__(self):
        return f"GrassmannPoly(size={self.size}, terms={len(self)})"

    # -- linear structure ---------------------------------------------------

    def _check(self, other: GrassmannPoly):
        if not isinstance(other, GrassmannPoly):
            raise TypeError(f"expected GrassmannPoly, got {type(other).__name__}")
        if other.size != self.size:
            raise ValueError(f"generator-set mismatch: {self.size} != {other.size}")

    def __add__(self, other: GrassmannPoly) -> GrassmannPoly:
        self._check(other)
        a, b = _align(self.coeffs, other.coeffs)
        return GrassmannPoly(self.size, np.concatenate([self.masks, other.masks]), np.concatenate([a, b]))

    def __neg__(self) -> GrassmannPoly:
        return GrassmannPoly(self.size, self.masks, -self.coeffs)

    def __sub__(self, other: GrassmannPoly) -> GrassmannPoly:
        return self + (-other)

    def scale(self, c) -> GrassmannPoly:
        return GrassmannPoly(self.size, self.masks, self.coeffs * c)

    def __mul__(self, other):
        if isinstance(other, GrassmannPoly):
            return product(self, other)
        return self.scale(other)

    def __rmul__(self, c):
        return self.scale(c)

    def allclose(self, other: GrassmannPoly, atol: float = 1e-10) -> bool:
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol))

    # -- calculus -----------------------------------------------------------

    def derivative(self, g: int) -> GrassmannPoly:
        """Left derivative with respect to generator ``g``."""
        bit = np.int64(1 << g)
        hit = (self.masks & bit) != 0
        masks = self.masks[hit]
        sign = 1 - 2 * (_popcount(masks & np.int64((1 << g) - 1)) & 1)
        coeffs = self.coeffs[hit] * sign.reshape((-1,) + (1,) * (self.coeffs.ndim - 1))
        return GrassmannPoly(self.size, masks ^ bit, coeffs)

    def relabel(self, perm: Sequence[int], size: int | None = None) -> GrassmannPoly:
        """Substitute ``psi(g) -> psi(perm[g])`` (with reordering signs)."""
        size = self.size if size is None else size
        perm = np.asarray(perm, dtype=np.int64)
        masks = np.zeros_like(self.masks)
        parity = np.zeros(self.masks.shape, dtype=np.int64)
        for g in range(self.size):
            has = (self.masks >> g) & 1
            target = perm[g]
            # generators already placed with a larger target index are passed over
            parity += has * _popcount(masks & ~np.int64((1 << (target + 1)) - 1))
            masks |= has << target
        sign = 1 - 2 * (parity & 1)
        coeffs = self.coeffs * sign.reshape((-1,) + (1,) * (self.coeffs.ndim - 1))
        return GrassmannPoly(size, masks, coeffs)


def _align(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if a.ndim == b.ndim:
        if a.ndim == 2 and a.shape[1] != b.shape[1]:
            raise ValueError("series lengths differ")
        return a, b
    if a.ndim == 1:
        a2 = np.zeros((a.shape[0], b.shape[1]), dtype=complex)
        a2[:, 0] = a
        return a2, b
    b2, a2 = _align(b, a)
    return a2, b2


def _combine(ca, cb: np.ndarray) -> np.ndarray:
    """Coefficient products for one left coefficient against many right ones."""
    if np.ndim(ca) == 0:
        return ca * cb
    K = cb.shape[1]
    out = np.zeros_like(cb)
    for k in range(K):
        out[:, k] = cb[:, : k + 1] @ ca[k::-1]
    return out


def product(a: GrassmannPoly, b: GrassmannPoly) -> GrassmannPoly:
    """Grassmann product ``a b``."""
    a._check(b)
    if a.coeffs.ndim == 2 and b.coeffs.ndim == 1:
        b = GrassmannPoly(b.size, b.masks, _align(b.coeffs, a.coeffs)[0])
    masks, coeffs = [], []
    for ma, ca in zip(a.masks, a.coeffs):
        ma = int(ma)
        free = (b.masks & np.int64(ma)) == 0
        if not free.any():
            continue
        mb = b.masks[free]
        sign = 1 - 2 * reorder_parity(ma, mb)
        prod = _combine(ca, b.coeffs[free])
        masks.append(mb | np.int64(ma))
        coeffs.append(prod * sign.reshape((-1,) + (1,) * (prod.ndim - 1)))
    if not masks:
        shape = (0,) + np.broadcast_shapes(a.coeffs.shape[1:], b.coeffs.shape[1:])
        return GrassmannPoly(a.size, [], np.zeros(shape, dtype=complex))
    return GrassmannPoly(a.size, np.concatenate(masks), np.concatenate(coeffs))


def power_series_exp(w: GrassmannPoly, order: int) -> GrassmannPoly:
    """``exp(g w)`` truncated at ``g^order``, coefficients along a trailing axis."""
    if w.is_series:
        raise ValueError("exponent must have scalar coefficients")
    out = GrassmannPoly(w.size, [0], np.eye(1, order + 1, dtype=complex))
    term = GrassmannPoly.constant(w.size)
    for k in range(1, order + 1):
        term = product(term, w).scale(1.0 / k)
        col = np.zeros((term.masks.size, order + 1), dtype=complex)
        col[:, k] = term.coeffs
        out = out + GrassmannPoly(w.size, term.masks, col)
    return out


def random_even_poly(rng: np.random.Generator, size: int, degree: int, terms: int) -> GrassmannPoly:
    """Random homogeneous polynomial with ``terms`` random monomials."""
    masks = []
    for _ in range(terms):
        gens = rng.choice(size, size=degree, replace=False)
        masks.append(int(sum(1 << int(g) for g in gens)))
    coeffs = rng.normal(size=terms) + 1j * rng.normal(size=terms)
    return GrassmannPoly(size, masks, coeffs)
