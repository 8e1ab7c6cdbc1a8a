"""Translation-invariant covariances and interaction kernels, and their Fourier transforms.

Conventions (``N`` the number of torus sites, ``p . x`` as in ``Torus.phase``):

    C_hat[s, s', p] = sum_x C[s, s', x] exp(i p.x)
    C[s, s', x]     = N**-1 sum_p C_hat[s, s', p] exp(-i p.x)
    C((x, s), (x', s')) = C[s, s', x' - x]

so antisymmetry ``C(xi, xi') = -C(xi', xi)`` reads
``C_hat[s, s', p] = -C_hat[s', s, -p]``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from ..exterior import permutation_sign
from .algebra import GeneratorSet, GrassmannPoly
from .lattice import Torus

COV_SCHEMA = "fermitree.covariance/1"
KERNEL_SCHEMA = "fermitree.kernel/1"
MAX_ANTISYMMETRIZE = 8
SUP_ENUMERATION_LIMIT = 4_000_000
HAT_TABLE_LIMIT = 1 << 22


def _spin_label(x):
    return tuple(_spin_label(v) for v in x) if isinstance(x, list) else x


# -- Fourier transforms -------------------------------------------------------

def fourier_kernel(pos: np.ndarray, torus: Torus) -> np.ndarray:
    """``sum_x f(x) exp(i p.x)`` along the last (flat site) axis."""
    pos = np.asarray(pos, dtype=complex)
    lead = pos.shape[:-1]
    grid = pos.reshape(lead + torus.dims)
    axes = tuple(range(len(lead), len(lead) + torus.ndim))
    return (np.fft.ifftn(grid, axes=axes) * torus.sites).reshape(pos.shape)


def inverse_fourier_kernel(hat: np.ndarray, torus: Torus) -> np.ndarray:
    """``N**-1 sum_p f_hat(p) exp(-i p.x)`` along the last (flat site) axis."""
    hat = np.asarray(hat, dtype=complex)
    lead = hat.shape[:-1]
    grid = hat.reshape(lead + torus.dims)
    axes = tuple(range(len(lead), len(lead) + torus.ndim))
    return (np.fft.fftn(grid, axes=axes) / torus.sites).reshape(hat.shape)


def fourier_npoint(f: np.ndarray, torus: Torus) -> np.ndarray:
    """``f_hat(p1..pn) = sum_{x1..xn} f(x1..xn) exp(i sum_j pj.xj)``; one axis per argument."""
    f = np.asarray(f, dtype=complex)
    n = f.ndim
    grid = f.reshape(torus.dims * n)
    return (np.fft.ifftn(grid) * torus.sites ** n).reshape(f.shape)


def antisymmetrize(f):
    """``(1/n!) sum_pi sgn(pi) f o pi`` for an ``n``-axis array or an ``n``-argument callable."""
    if callable(f) and not isinstance(f, np.ndarray):
        return _antisymmetrize_callable(f)
    f = np.asarray(f)
    n = f.ndim
    if n > MAX_ANTISYMMETRIZE:
        raise ValueError(f"permutation sum limited to n <= {MAX_ANTISYMMETRIZE}")
    if len(set(f.shape)) > 1:
        raise ValueError("all arguments must range over the same set")
    out = np.zeros(f.shape, dtype=np.result_type(f, float))
    for perm in itertools.permutations(range(n)):
        out += permutation_sign(perm) * np.transpose(f, perm)
    return out / math.factorial(n)


def _antisymmetrize_callable(f: Callable) -> Callable:
    def g(*args):
        n = len(args)
        if n > MAX_ANTISYMMETRIZE:
            raise ValueError(f"permutation sum limited to n <= {MAX_ANTISYMMETRIZE}")
        total = 0
        for perm in itertools.permutations(range(n)):
            total = total + permutation_sign(perm) * f(*(args[i] for i in perm))
        return total / math.factorial(n)
    return g


# -- covariance ---------------------------------------------------------------

@dataclass(eq=False)
class Covariance:
    """Momentum-space table ``table[s, s', p]`` of an antisymmetric translation-invariant covariance."""

    torus: Torus
    spins: tuple
    table: np.ndarray

    def __post_init__(self):
        self.spins = tuple(self.spins)
        self.table = np.asarray(self.table, dtype=complex)
        S = len(self.spins)
        if self.table.shape != (S, S, self.torus.sites):
            raise ValueError(f"table shape {self.table.shape} != {(S, S, self.torus.sites)}")

    @classmethod
    def from_position(cls, torus: Torus, spins, pos: np.ndarray) -> Covariance:
        return cls(torus, spins, fourier_kernel(pos, torus))

    @property
    def nspin(self) -> int:
        return len(self.spins)

    @cached_property
    def position(self) -> np.ndarray:
        return inverse_fourier_kernel(self.table, self.torus)

    def hat(self, s, sp, k) -> np.ndarray:
        return self.table[s, sp, k]

    def antisymmetry_error(self) -> float:
        flipped = np.transpose(self.table, (1, 0, 2))[:, :, self.torus.neg_table]
        return float(np.abs(self.table + flipped).max(initial=0.0))

    def position_matrix(self, gens: GeneratorSet | None = None) -> np.ndarray:
        """``C(g, g')`` over the generators in ``gens`` order (natural order by default)."""
        gens = gens or GeneratorSet(self.torus, self.spins, cap=self.torus.sites * self.nspin)
        labels = np.array(gens.labels())
        x, s = labels[:, 0], labels[:, 1]
        diff = self.torus.add_table[self.torus.neg_table[x][:, None], x[None, :]]
        return self.position[s[:, None], s[None, :], diff]

    def scaled(self, c: complex) -> Covariance:
        return Covariance(self.torus, self.spins, c * self.table)

    def to_json(self) -> str:
        rows = []
        for s, sp, k in zip(*np.nonzero(self.table)):
            v = self.table[s, sp, k]
            rows.append([self.spins[s], self.spins[sp], *self.torus.vector(int(k)), float(v.real), float(v.imag)])
        return json.dumps({"schema": COV_SCHEMA, "torus_dims": list(self.torus.dims),
                           "spacing": list(self.torus.spacing), "spins": list(self.spins), "table": rows})

    @classmethod
    def from_json(cls, text: str | dict) -> Covariance:
        data = json.loads(text) if isinstance(text, str) else text
        if data.get("schema", COV_SCHEMA) != COV_SCHEMA:
            raise ValueError(f"unknown covariance schema {data.get('schema')!r}")
        torus = Torus(tuple(data["torus_dims"]), tuple(data.get("spacing", ())))
        spins = tuple(_spin_label(s) for s in data["spins"])
        table = np.zeros((len(spins), len(spins), torus.sites), dtype=complex)
        D = torus.ndim
        for row in data["table"]:
            s, sp = spins.index(_spin_label(row[0])), spins.index(_spin_label(row[1]))
            k = torus.index(row[2:2 + D])
            table[s, sp, k] = complex(row[2 + D], row[3 + D])
        return cls(torus, spins, table)


def random_covariance(rng: np.random.Generator, torus: Torus, spins: Sequence, scale: float = 1.0) -> Covariance:
    """Random antisymmetric covariance with complex Gaussian position-space entries."""
    S = len(spins)
    raw = rng.normal(size=(S, S, torus.sites)) + 1j * rng.normal(size=(S, S, torus.sites))
    pos = 0.5 * (raw - np.transpose(raw, (1, 0, 2))[:, :, torus.neg_table])
    return Covariance.from_position(torus, spins, scale * pos)


# -- interaction kernels ------------------------------------------------------

@dataclass(eq=False)
class SeparableKernel:
    """Antisymmetric ``n``-point kernel ``w = Ant(sum_r c_r prod_i delta(xi_i = (a_ri, s_ri)))``.

    ``positions`` holds flat torus sites and ``spin_idx`` spin indices, both
    ``(terms, n)``. The momentum-space kernel is
    ``w_hat(p, s) = (1/n!) sum_r c_r det[delta(s_i = s_rj) exp(i p_i . a_rj)]``.
    """

    torus: Torus
    spins: tuple
    coeffs: np.ndarray
    positions: np.ndarray
    spin_idx: np.ndarray
    _l1: float | None = field(default=None, repr=False)
    _table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.spins = tuple(self.spins)
        self.coeffs = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        pos = np.asarray(self.positions, dtype=np.int64)
        self.positions = pos.reshape(self.coeffs.size, pos.shape[-1] if pos.ndim > 1 else -1)
        self.spin_idx = np.asarray(self.spin_idx, dtype=np.int64).reshape(self.positions.shape)
        if self.positions.size and (self.positions.min() < 0 or self.positions.max() >= self.torus.sites):
            raise ValueError("kernel positions must be flat torus sites")
        if self.spin_idx.size and (self.spin_idx.min() < 0 or self.spin_idx.max() >= len(self.spins)):
            raise ValueError("kernel spin index out of range")

    @property
    def arity(self) -> int:
        return self.positions.shape[1]

    @property
    def nspin(self) -> int:
        return len(self.spins)

    def hat_table(self) -> np.ndarray | None:
        """``w_hat[p1..pn, s1..sn]`` on the whole lattice, or None above ``HAT_TABLE_LIMIT`` entries.

        Built once by FFT of the position kernel.
        """
        n = self.arity
        if (self.torus.sites * self.nspin) ** n > HAT_TABLE_LIMIT:
            return None
        if self._table is None:
            dense = self.dense().reshape(self.torus.dims * n + (self.nspin,) * n)
            axes = tuple(range(n * self.torus.ndim))
            hat = np.fft.ifftn(dense, axes=axes) * self.torus.sites ** n if n else dense
            self._table = hat.reshape((self.torus.sites,) * n + (self.nspin,) * n)
        return self._table

    def evaluate(self, momenta, spins) -> np.ndarray:
        """``w_hat`` on flat momenta and spin indices, both shaped ``(..., n)``."""
        momenta = np.asarray(momenta, dtype=np.int64)
        spins = np.asarray(spins, dtype=np.int64)
        n = self.arity
        if momenta.shape[-1] != n or spins.shape[-1] != n:
            raise ValueError(f"kernel takes {n} arguments")
        table = self.hat_table()
        if table is not None:
            momenta, spins = np.broadcast_arrays(momenta, spins)
            return table[tuple(np.moveaxis(momenta, -1, 0)) + tuple(np.moveaxis(spins, -1, 0))]
        return self.evaluate_direct(momenta, spins)

    def evaluate_direct(self, momenta, spins) -> np.ndarray:
        """``w_hat`` from the determinant formula (no table)."""
        momenta = np.asarray(momenta, dtype=np.int64)
        spins = np.asarray(spins, dtype=np.int64)
        n = self.arity
        if not self.coeffs.size:
            return np.zeros(np.broadcast_shapes(momenta.shape, spins.shape)[:-1], dtype=complex)
        ph = self.torus.phase_matrix[momenta[..., None, :, None], self.positions[:, None, :]]
        match = spins[..., None, :, None] == self.spin_idx[:, None, :]
        det = np.linalg.det(np.where(match, ph, 0))
        return det @ self.coeffs / math.factorial(n)

    def __call__(self, *args):
        """``w_hat((p1, s1), ..., (pn, sn))`` for scalar arguments."""
        p = [a[0] for a in args]
        s = [a[1] for a in args]
        return complex(self.evaluate(p, s))

    def position_terms(self) -> dict[tuple, complex]:
        """Exact position kernel ``{((x1, s1), ..., (xn, sn)): w}`` on its support."""
        n = self.arity
        out: dict[tuple, complex] = {}
        perms = [(p, permutation_sign(p)) for p in itertools.permutations(range(n))]
        for c, a, s in zip(self.coeffs, self.positions, self.spin_idx):
            for perm, sign in perms:
                key = tuple((int(a[i]), int(s[i])) for i in perm)
                out[key] = out.get(key, 0j) + sign * c / math.factorial(n)
        return {k: v for k, v in out.items() if abs(v) > 1e-15}

    def dense(self) -> np.ndarray:
        """Position kernel as an array with axes ``(x1..xn, s1..sn)``."""
        n = self.arity
        out = np.zeros((self.torus.sites,) * n + (self.nspin,) * n, dtype=complex)
        for key, v in self.position_terms().items():
            out[tuple(x for x, _ in key) + tuple(s for _, s in key)] = v
        return out

    def l1_norm(self) -> float:
        """``||w||_1``: sum of ``|w|`` over all position and spin tuples."""
        if self._l1 is None:
            self._l1 = float(sum(abs(v) for v in self.position_terms().values()))
        return self._l1

    def sup_hat(self, limit: int = SUP_ENUMERATION_LIMIT) -> float:
        """``||w_hat||_inf`` by enumeration; falls back to the upper bound ``||w||_1`` when too large."""
        n = self.arity
        count = (self.torus.sites * self.nspin) ** n * max(1, self.coeffs.size)
        if count > limit:
            return self.l1_norm()
        spin_tuples = np.array(list(itertools.product(range(self.nspin), repeat=n)), dtype=np.int64)
        mom_tuples = np.array(list(itertools.product(range(self.torus.sites), repeat=n)), dtype=np.int64)
        best = 0.0
        for st in spin_tuples:
            vals = self.evaluate(mom_tuples, np.broadcast_to(st, mom_tuples.shape))
            best = max(best, float(np.abs(vals).max(initial=0.0)))
        return best

    def scaled(self, c: complex) -> SeparableKernel:
        return SeparableKernel(self.torus, self.spins, c * self.coeffs, self.positions, self.spin_idx)

    def to_json(self) -> str:
        terms = [{"coeff": [float(c.real), float(c.imag)],
                  "positions": [list(self.torus.vector(int(x))) for x in a],
                  "spins": [self.spins[int(s)] for s in sp]}
                 for c, a, sp in zip(self.coeffs, self.positions, self.spin_idx)]
        return json.dumps({"schema": KERNEL_SCHEMA, "torus_dims": list(self.torus.dims),
                           "spacing": list(self.torus.spacing), "spins": list(self.spins),
                           "arity": self.arity, "terms": terms})

    @classmethod
    def from_json(cls, text: str | dict) -> SeparableKernel:
        data = json.loads(text) if isinstance(text, str) else text
        if data.get("schema", KERNEL_SCHEMA) != KERNEL_SCHEMA:
            raise ValueError(f"unknown kernel schema {data.get('schema')!r}")
        torus = Torus(tuple(data["torus_dims"]), tuple(data.get("spacing", ())))
        spins = tuple(_spin_label(s) for s in data["spins"])
        n = int(data["arity"])
        coeffs = [complex(*t["coeff"]) for t in data["terms"]]
        pos = [[torus.index(v) for v in t["positions"]] for t in data["terms"]]
        sp = [[spins.index(_spin_label(s)) for s in t["spins"]] for t in data["terms"]]
        return cls(torus, spins, coeffs, np.reshape(pos, (-1, n)), np.reshape(sp, (-1, n)))


def random_kernel(rng: np.random.Generator, torus: Torus, spins: Sequence, arity: int,
                  terms: int = 2) -> SeparableKernel:
    """Random separable kernel with complex Gaussian coefficients."""
    coeffs = rng.normal(size=terms) + 1j * rng.normal(size=terms)
    pos = rng.integers(0, torus.sites, size=(terms, arity))
    sp = rng.integers(0, len(spins), size=(terms, arity))
    return SeparableKernel(torus, tuple(spins), coeffs, pos, sp)


def kernel_polynomial(kernel: SeparableKernel, gens: GeneratorSet) -> GrassmannPoly:
    """``W_n = sum_x sum_r c_r psi(x + a_r1, s_r1) ^ ... ^ psi(x + a_rn, s_rn)``."""
    torus = kernel.torus
    masks, coeffs = [], []
    for x in range(torus.sites):
        for c, a, s in zip(kernel.coeffs, kernel.positions, kernel.spin_idx):
            idx = [gens.index(torus.add(x, int(ai)), int(si)) for ai, si in zip(a, s)]
            mono = GrassmannPoly.monomial(gens.size, idx, c)
            masks.extend(mono.masks)
            coeffs.extend(mono.coeffs)
    return GrassmannPoly(gens.size, masks, coeffs)


def build_interaction(v: np.ndarray, torus: Torus, spins: Sequence = ("up", "down")) -> SeparableKernel:
    """Quartic kernel of ``-1/2 sum v(x - x') psi(x,s,1) psi(x',s',1) psi(x,s,0) psi(x',s',0)``.

    The particle/hole index is folded into the spin set: the returned kernel's
    spins are the pairs ``(s, kappa)``.
    """
    v = np.asarray(v)
    if v.shape != (torus.sites,):
        raise ValueError("potential must give one value per torus site")
    if np.iscomplexobj(v) and np.abs(v.imag).max(initial=0.0) > 0:
        raise ValueError("potential must be real")
    v = np.real(v).astype(float)
    if np.abs(v - v[torus.neg_table]).max(initial=0.0) > 1e-12:
        raise ValueError("potential must be even: v(x) = v(-x)")
    folded = tuple((s, kappa) for s in spins for kappa in (0, 1))
    fi = {lab: i for i, lab in enumerate(folded)}
    coeffs, pos, sp = [], [], []
    for y in np.nonzero(v)[0]:
        for s in spins:
            for s2 in spins:
                coeffs.append(-0.5 * v[y])
                pos.append([0, int(y), 0, int(y)])
                sp.append([fi[(s, 1)], fi[(s2, 1)], fi[(s, 0)], fi[(s2, 0)]])
    return SeparableKernel(torus, folded, coeffs, np.array(pos, dtype=np.int64).reshape(len(coeffs), 4),
                           np.array(sp, dtype=np.int64).reshape(len(coeffs), 4))
