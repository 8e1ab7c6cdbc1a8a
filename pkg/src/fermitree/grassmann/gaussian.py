"""Grassmann Gaussian integrals and the exact free energy."""

from __future__ import annotations

import numpy as np

from .algebra import GrassmannPoly, power_series_exp
from .pfaffian import pfaffian_batch

MAX_ORDER = 4


def _as_matrix(cov, size: int, gens=None) -> np.ndarray:
    if hasattr(cov, "position_matrix"):
        mat = cov.position_matrix(gens)
    else:
        mat = np.asarray(cov, dtype=complex)
    if mat.shape != (size, size):
        raise ValueError(f"covariance shape {mat.shape} does not match {size} generators")
    return mat


def mask_generators(masks: np.ndarray, size: int, degree: int) -> np.ndarray:
    """``(len(masks), degree)`` sorted generator indices of equal-degree masks."""
    bits = (masks[:, None] >> np.arange(size, dtype=np.int64)) & 1
    rows, cols = np.nonzero(bits)
    return cols.reshape(len(masks), degree)


def gaussian_integral(poly: GrassmannPoly, cov, gens=None):
    """``int poly dmu_C``: each monomial maps to the Pfaffian of its covariance submatrix.

    ``cov`` is a ``Covariance`` (with ``gens`` giving the generator order) or a
    plain ``(size, size)`` matrix ``C(g, g')``.
    """
    mat = _as_matrix(cov, poly.size, gens)
    degrees = poly.degrees()
    total = np.zeros(poly.coeffs.shape[1:], dtype=complex)
    for d in np.unique(degrees):
        if d % 2:
            continue
        pick = degrees == d
        coeffs = poly.coeffs[pick]
        if d == 0:
            total = total + coeffs.sum(axis=0)
            continue
        idx = mask_generators(poly.masks[pick], poly.size, int(d))
        sub = mat[idx[:, :, None], idx[:, None, :]]
        pf = pfaffian_batch(sub)
        total = total + np.tensordot(pf, coeffs, axes=(0, 0))
    return complex(total) if total.ndim == 0 else total


def log_series(z: np.ndarray) -> np.ndarray:
    """Coefficients of ``log Z(g)`` from those of ``Z(g)``, given ``Z(0) = 1``."""
    z = np.asarray(z, dtype=complex)
    if abs(z[0] - 1) > 1e-12:
        raise ValueError("series must start with 1")
    omega = np.zeros_like(z)
    for n in range(1, len(z)):
        acc = n * z[n]
        for k in range(1, n):
            acc -= k * omega[k] * z[n - k]
        omega[n] = acc / n
    return omega


def free_energy_oracle(w: GrassmannPoly, cov, order: int, gens=None, cap: int = 14) -> np.ndarray:
    """Coefficients ``[Omega_1, ..., Omega_order]`` of ``log int exp(g W) dmu_C``.

    Exact: ``exp(g W)`` is expanded in the Grassmann algebra with one series
    coefficient per monomial, integrated, and the formal logarithm taken.
    """
    if w.size > cap:
        raise ValueError(f"{w.size} generators exceed the cap of {cap}")
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in 1..{MAX_ORDER}")
    if np.any(w.degrees() == 0):
        raise ValueError("interaction must have no constant part")
    z = gaussian_integral(power_series_exp(w, order), cov, gens)
    return log_series(z)[1:]
