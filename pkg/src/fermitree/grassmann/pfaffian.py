"""Pfaffians of skew-symmetric matrices."""

from __future__ import annotations

from typing import Iterator

import numpy as np

MATCHING_MAX_DIM = 10
SKEW_TOL = 1e-12


def perfect_matchings(items: list[int]) -> Iterator[list[tuple[int, int]]]:
    """All partitions of ``items`` into pairs, each pair in increasing position."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        for tail in perfect_matchings(rest[:i] + rest[i + 1:]):
            yield [(first, partner)] + tail


def _matching_sign(matching: list[tuple[int, int]]) -> int:
    flat = [i for pair in matching for i in pair]
    inversions = sum(1 for a in range(len(flat)) for b in range(a + 1, len(flat)) if flat[a] > flat[b])
    return -1 if inversions & 1 else 1


def _check_skew(a: np.ndarray):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a + a.T).max(initial=0.0) > SKEW_TOL * scale:
        raise ValueError("matrix is not skew-symmetric")


def pfaffian_matching(a: np.ndarray) -> complex:
    """Pfaffian as the signed sum over perfect matchings (reference implementation)."""
    a = np.asarray(a, dtype=complex)
    _check_skew(a)
    n = a.shape[0]
    if n > MATCHING_MAX_DIM:
        raise ValueError(f"matching sum limited to dimension <= {MATCHING_MAX_DIM}")
    if n % 2:
        return 0j
    total = 0j
    for matching in perfect_matchings(list(range(n))):
        term = complex(_matching_sign(matching))
        for i, j in matching:
            term *= a[i, j]
        total += term
    return total


def pfaffian_elimination(a: np.ndarray) -> complex:
    """Pfaffian by skew-symmetric Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=complex)
    _check_skew(a)
    return complex(pfaffian_batch(a[None])[0])


def pfaffian(a: np.ndarray, method: str = "elimination") -> complex:
    if method == "elimination":
        return pfaffian_elimination(a)
    if method == "matching_oracle":
        return pfaffian_matching(a)
    raise ValueError(f"unknown Pfaffian method {method!r}")


def pfaffian_batch(mats: np.ndarray) -> np.ndarray:
    """Pfaffians of a stack ``(B, n, n)`` of skew-symmetric matrices (no input check)."""
    a = np.array(mats, dtype=complex)
    batch, n, _ = a.shape
    if n % 2:
        return np.zeros(batch, dtype=complex)
    pf = np.ones(batch, dtype=complex)
    rows = np.arange(batch)
    for k in range(0, n - 1, 2):
        kp = k + 1 + np.abs(a[:, k + 1:, k]).argmax(axis=1)
        swap = kp != k + 1
        if swap.any():
            r = rows[swap]
            q = kp[swap]
            tmp = a[r, k + 1, :].copy()
            a[r, k + 1, :] = a[r, q, :]
            a[r, q, :] = tmp
            tmp = a[r, :, k + 1].copy()
            a[r, :, k + 1] = a[r, :, q]
            a[r, :, q] = tmp
            pf[swap] *= -1
        piv = a[:, k, k + 1]
        pf *= piv
        if k + 2 < n:
            safe = np.where(piv == 0, 1.0, piv)
            tau = a[:, k, k + 2:] / safe[:, None]
            col = a[:, k + 2:, k + 1]
            a[:, k + 2:, k + 2:] += tau[:, :, None] * col[:, None, :] - col[:, :, None] * tau[:, None, :]
    return pf
