"""Discrete torus and its dual momentum lattice.

Positions are integer vectors ``n`` with ``x = spacing * n``; momenta are
integer vectors ``k`` with ``p = 2*pi*k / (spacing * L)``. Both are stored as
flat indices in row-major order, so ``p . x = 2*pi * sum_c k_c n_c / L_c``
never depends on the spacing.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Torus:
    dims: tuple[int, ...]
    spacing: tuple[float, ...] = ()

    def __post_init__(self):
        dims = tuple(int(L) for L in self.dims)
        if not dims or any(L < 1 for L in dims):
            raise ValueError(f"torus dimensions must be positive, got {self.dims}")
        object.__setattr__(self, "dims", dims)
        spacing = tuple(float(e) for e in self.spacing) or (1.0,) * len(dims)
        if len(spacing) != len(dims):
            raise ValueError("one spacing per torus direction")
        object.__setattr__(self, "spacing", spacing)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def sites(self) -> int:
        return int(np.prod(self.dims))

    @property
    def volume(self) -> float:
        """Physical volume ``prod_c spacing_c * L_c``; equals ``sites`` at unit spacing."""
        return float(np.prod([e * L for e, L in zip(self.spacing, self.dims)]))

    @property
    def momentum_step(self) -> tuple[float, ...]:
        return tuple(2 * np.pi / (e * L) for e, L in zip(self.spacing, self.dims))

    def vector(self, index: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(index, self.dims))

    def index(self, vec: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(int(v) % L for v, L in zip(vec, self.dims)), self.dims))

    @cached_property
    def coords(self) -> np.ndarray:
        """``(sites, ndim)`` integer coordinates of every flat index."""
        return np.stack(np.unravel_index(np.arange(self.sites), self.dims), axis=-1)

    @cached_property
    def add_table(self) -> np.ndarray:
        c = self.coords
        summed = (c[:, None, :] + c[None, :, :]) % np.array(self.dims)
        return np.ravel_multi_index(tuple(np.moveaxis(summed, -1, 0)), self.dims)

    @cached_property
    def neg_table(self) -> np.ndarray:
        neg = (-self.coords) % np.array(self.dims)
        return np.ravel_multi_index(tuple(neg.T), self.dims)

    def add(self, a: int, b: int) -> int:
        return int(self.add_table[a, b])

    def neg(self, a: int) -> int:
        return int(self.neg_table[a])

    def sum(self, indices) -> int:
        """Sum of flat momenta (or positions); works on integer arrays along the last axis."""
        arr = np.asarray(indices)
        vec = self.coords[arr].sum(axis=-2) % np.array(self.dims)
        out = np.ravel_multi_index(tuple(np.moveaxis(vec, -1, 0)), self.dims)
        return int(out) if np.ndim(out) == 0 else out

    def phase(self, k, x) -> np.ndarray:
        """``exp(i p . x)`` for flat momentum ``k`` and flat position ``x`` (broadcasting)."""
        kc = self.coords[np.asarray(k)]
        xc = self.coords[np.asarray(x)]
        ang = 2 * np.pi * np.sum(kc * xc / np.array(self.dims), axis=-1)
        return np.exp(1j * ang)

    @cached_property
    def phase_matrix(self) -> np.ndarray:
        """``[k, x] -> exp(i p_k . x)``."""
        return self.phase(np.arange(self.sites)[:, None], np.arange(self.sites)[None, :])

    def centered(self, axis: int) -> np.ndarray:
        """Momenta along one axis, mapped into ``[-pi/spacing, pi/spacing)``."""
        L = self.dims[axis]
        k = np.arange(L)
        k = np.where(k >= (L + 1) // 2, k - L, k)
        return k * self.momentum_step[axis]
