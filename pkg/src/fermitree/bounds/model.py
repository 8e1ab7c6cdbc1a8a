"""Single-scale propagator of the cold Fermi gas and scaling fits of its norms.

Momenta are ``(p0, p_1, ..., p_d)`` with ``mu = 1`` and ``2m = 1``. The
cutoff is ``chi_j = phi(M^(2j) (p0^2 + (p^2 - 1)^2))`` with

    phi(u) = s((2 - u) / eps) * s((u - 1/2) / eps),   eps = 1/4,
    s(t)   = f(t) / (f(t) + f(1 - t)),                f(t) = exp(-1/t) for t > 0,

which is smooth, supported in ``[1/2, 2]`` and equal to 1 on ``[3/4, 7/4]``.
Spins are folded as ``(sigma, kappa)`` with ``kappa`` in ``{0, 1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..grassmann.lattice import Torus
from ..grassmann.momentum import Covariance
from .norms import CovarianceNorms, covariance_norms

BUMP_EPS = 0.25
SPINS = (("down", 0), ("down", 1), ("up", 0), ("up", 1))
MIN_RESOLUTION = 4  # below this the shell of width ~M^-j is not resolved


def smooth_step(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(t > 0, np.exp(-1 / np.where(t > 0, t, 1)), 0.0)
        g = np.where(1 - t > 0, np.exp(-1 / np.where(1 - t > 0, 1 - t, 1)), 0.0)
    return f / (f + g)


def bump(u, eps: float = BUMP_EPS):
    u = np.asarray(u, dtype=float)
    return smooth_step((2 - u) / eps) * smooth_step((u - 0.5) / eps)


@dataclass(frozen=True)
class ScaleModel:
    M: float = 2.0
    j: int = 2
    d: int = 1
    resolution: int = 8  # lattice points per M^-j in each momentum direction
    margin: int = 2  # extra empty lattice points beyond the support on each side

    def __post_init__(self):
        if self.M <= 1:
            raise ValueError("M must exceed 1")
        if self.j <= 0:
            raise ValueError("the scale j must be positive")
        if self.d < 1 or self.resolution < 1:
            raise ValueError("d and resolution must be positive")

    @property
    def step(self) -> float:
        return self.M ** -self.j / self.resolution

    def half_widths(self) -> tuple[float, ...]:
        """Half-widths of a box containing the support of ``chi_j``."""
        s = self.M ** -self.j
        p0 = math.sqrt(2) * s
        p = math.sqrt(1 + math.sqrt(2) * s)
        return (p0,) + (p,) * self.d

    def dims(self) -> tuple[int, ...]:
        h = self.step
        out = []
        for w in self.half_widths():
            L = 2 * (math.ceil(w / h) + self.margin)
            out.append(L + (L % 2))
        return tuple(out)

    def torus(self) -> Torus:
        dims = self.dims()
        h = self.step
        return Torus(dims, tuple(2 * np.pi / (L * h) for L in dims))


def cutoff(model: ScaleModel, p0, psq):
    return bump(model.M ** (2 * model.j) * (p0 ** 2 + (psq - 1) ** 2))


def propagator_grid(model: ScaleModel, torus: Torus | None = None) -> np.ndarray:
    """``chi_j / (i p0 - p^2 + 1)`` on the momentum lattice, flat site order."""
    torus = torus or model.torus()
    h = model.step
    k = np.where(torus.coords >= (np.array(torus.dims) + 1) // 2, torus.coords - np.array(torus.dims), torus.coords)
    p = k * h
    p0, psq = p[:, 0], np.sum(p[:, 1:] ** 2, axis=1)
    chi = cutoff(model, p0, psq)
    den = 1j * p0 - psq + 1
    return np.where(chi > 0, chi / np.where(chi > 0, den, 1), 0)


def build_single_scale(model: ScaleModel) -> Covariance:
    """Antisymmetrized single-scale covariance on ``(sigma, kappa)`` spin labels."""
    if model.resolution < MIN_RESOLUTION:
        need = ScaleModel(model.M, model.j, model.d, MIN_RESOLUTION, model.margin).dims()
        raise ValueError(f"resolution {model.resolution} does not resolve the M^-{model.j} shell; "
                         f"need lattice {need} (resolution >= {MIN_RESOLUTION})")
    torus = model.torus()
    g = propagator_grid(model, torus)
    neg = g[torus.neg_table]
    table = np.zeros((4, 4, torus.sites), dtype=complex)
    for s in (0, 1):
        table[2 * s + 1, 2 * s] = 0.5 * g
        table[2 * s, 2 * s + 1] = -0.5 * neg
    cov = Covariance(torus, SPINS, table)
    if not covariance_norms(cov).compact:
        raise ValueError(f"cutoff support does not fit lattice {torus.dims}; raise resolution or margin")
    return cov


def synthetic_covariance(M: float, j: int, side: int = 3, margin: int = 2) -> Covariance:
    """``C_hat = M^j`` on a centered ``side x side`` box of lattice points with step ``M^-j / side``.

    The box has area ``M^-2j`` and all norms scale exactly.
    """
    h = M ** -j / side
    L = side + 2 * margin
    L += L % 2
    torus = Torus((L, L), (2 * np.pi / (L * h),) * 2)
    k = np.where(torus.coords >= (L + 1) // 2, torus.coords - L, torus.coords)
    lo = -(side // 2)
    inside = np.all((k >= lo) & (k < lo + side), axis=1)
    val = np.where(inside, M ** j, 0.0)
    # box is symmetric only for odd side, so antisymmetrize with spin exchange
    table = np.zeros((2, 2, torus.sites), dtype=complex)
    table[0, 1] = val
    table[1, 0] = -val[torus.neg_table]
    return Covariance(torus, ("a", "b"), table)


@dataclass
class ScalingFit:
    M: float
    js: list[int]
    norms: list[dict]
    slopes: dict[str, float]
    stderr: dict[str, float]
    expected: dict[str, str]

    def to_dict(self) -> dict:
        return {"M": self.M, "j": self.js, "norms": self.norms, "slopes": self.slopes,
                "stderr": self.stderr, "expected": self.expected}


FIT_KEYS = ("sup_hat", "l1_hat", "l1_pos", "c_constant")


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    from scipy.stats import linregress

    if np.ptp(x) == 0 or not np.all(np.isfinite(y)):
        raise ValueError("degenerate fit")
    res = linregress(x, y)
    return float(res.slope), float(res.stderr)


def power_counting_fit(M: float, js: Sequence[int], build: Callable[[int], Covariance],
                       d: int | None = None) -> ScalingFit:
    """Least-squares slopes of ``log_M`` of the covariance norms against ``j``."""
    js = [int(j) for j in js]
    if len(js) < 3:
        raise ValueError("need at least three scales")
    rows: list[CovarianceNorms] = [covariance_norms(build(j)) for j in js]
    x = np.array(js, dtype=float)
    slopes, errs = {}, {}
    for key in FIT_KEYS:
        vals = np.array([getattr(r, key) for r in rows])
        if np.any(vals <= 0):
            raise ValueError(f"degenerate fit: {key} vanishes")
        slopes[key], errs[key] = _fit(x, np.log(vals) / math.log(M))
    dd = "d" if d is None else str(d)
    expected = {"sup_hat": "1", "l1_hat": "-1", "l1_pos": f"<= {dd}",
                "c_constant": f"{dd} + 1" if d is None else str(d + 1)}
    return ScalingFit(M, js, [r.to_dict() for r in rows], slopes, errs, expected)


def single_scale_fit(M: float = 2.0, js: Sequence[int] = (2, 3, 4, 5), d: int = 1,
                     resolution: int = 8) -> ScalingFit:
    return power_counting_fit(M, js, lambda j: build_single_scale(ScaleModel(M, j, d, resolution)), d)


def synthetic_fit(M: float = 2.0, js: Sequence[int] = (2, 3, 4, 5), side: int = 3) -> ScalingFit:
    return power_counting_fit(M, js, lambda j: synthetic_covariance(M, j, side), 1)
