"""Norms of a translation-invariant covariance.

Momentum integrals use ``int dlambda = |T|**-1 sum_p sum_spins`` with ``|T|``
the physical torus volume. The derivative is the mixed forward difference
``prod_c Delta_c / h_c`` over all momentum axes, ``h_c`` the momentum step.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..grassmann.momentum import Covariance


@dataclass(frozen=True)
class CovarianceNorms:
    sup_hat: float
    l1_hat: float
    l1_pos: float
    grad_sup: float
    grad_l1: float
    volume: float
    nspin: int
    ndim: int
    compact: bool = True

    @property
    def c_constant(self) -> float:
        """``||C_hat||_1 ||grad C_hat||_inf + ||grad C_hat||_1 ||C_hat||_inf`` with the normalized measure."""
        return self.l1_hat * self.grad_sup + self.grad_l1 * self.sup_hat

    @property
    def c_lebesgue(self) -> float:
        """The same constant with plain Lebesgue measure ``dp`` on momentum space.

        This is the constant the summation-by-parts step actually produces
        (``sum_t |C_hat| max |Delta C_hat| + ...`` over lattice momenta); it is
        ``(2 pi)**ndim`` times ``c_constant``.
        """
        return (2 * np.pi) ** self.ndim * self.c_constant

    def to_dict(self) -> dict:
        d = asdict(self)
        d["c_constant"] = self.c_constant
        d["c_lebesgue"] = self.c_lebesgue
        return d


def centered_table(cov: Covariance) -> np.ndarray:
    """``table`` reshaped to ``(S, S, L_1, ..., L_D)`` with zero momentum in the middle."""
    t = cov.torus
    grid = cov.table.reshape(cov.table.shape[:2] + t.dims)
    return np.fft.fftshift(grid, axes=tuple(range(2, 2 + t.ndim)))


def mixed_difference(grid: np.ndarray, steps) -> np.ndarray:
    """``prod_c (f(p + h_c e_c) - f(p)) / h_c`` over the trailing axes (periodic)."""
    out = grid
    lead = grid.ndim - len(steps)
    for c, h in enumerate(steps):
        ax = lead + c
        out = (np.roll(out, -1, axis=ax) - out) / h
    return out


def touches_edge(grid: np.ndarray, ndim: int) -> bool:
    """True if a centered table is nonzero on the first or last slice of some axis."""
    lead = grid.ndim - ndim
    for c in range(ndim):
        ax = lead + c
        if grid.shape[ax] < 2:
            return True
        first = np.take(grid, 0, axis=ax)
        last = np.take(grid, -1, axis=ax)
        if np.any(first != 0) or np.any(last != 0):
            return True
    return False


def covariance_norms(cov: Covariance) -> CovarianceNorms:
    t = cov.torus
    vol = t.volume
    absC = np.abs(cov.table)
    grid = centered_table(cov)
    grad = mixed_difference(grid, t.momentum_step)
    return CovarianceNorms(
        sup_hat=float(absC.max(initial=0.0)),
        l1_hat=float(absC.sum() / vol),
        l1_pos=float(np.abs(cov.position).sum()),
        grad_sup=float(np.abs(grad).max(initial=0.0)),
        grad_l1=float(np.abs(grad).sum() / vol),
        volume=vol,
        nspin=cov.nspin,
        ndim=t.ndim,
        compact=not touches_edge(grid, t.ndim),
    )
