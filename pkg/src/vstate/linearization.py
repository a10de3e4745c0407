"""Linearized contour functional: disk multipliers, Jacobians, kernels."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .boundary import FourierBoundary, PatchState
from .contour import default_quadrature, eval_contour_residual
from .quadrature import QuadratureConfig

OMEGA_DIRECTION = "omega_direction"


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("VSTATE_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _mode_sine_coeff(omega, k, amp, n_modes, q):
    b = FourierBoundary.from_modes(n_modes, cos={k: amp})
    return eval_contour_residual(PatchState(b, omega), q).sine_coeffs[k - 1]


def disk_multiplier_numeric(omega: float, k: int, h: float = 1e-6,
                            n_modes: int | None = None,
                            q: QuadratureConfig | None = None) -> float:
    """mu_k(omega): sin(k theta) coefficient of the derivative of F at the disk along cos(k theta)."""
    if k < 1:
        raise ValueError("mode index must be >= 1")
    if not 1e-8 <= h <= 1e-4:
        raise ValueError(f"step {h} outside [1e-8, 1e-4]")
    n_modes = max(k, 16) if n_modes is None else n_modes
    if n_modes < k:
        raise ValueError(f"mode {k} needs n_modes >= {k}")
    q = default_quadrature(n_modes) if q is None else q
    plus = _mode_sine_coeff(omega, k, h, n_modes, q)
    minus = _mode_sine_coeff(omega, k, -h, n_modes, q)
    return (plus - minus) / (2 * h)


def omega_cross_derivative(k: int, omega: float = 0.25, h: float = 1e-6,
                           h_omega: float = 1e-2, n_modes: int | None = None,
                           q: QuadratureConfig | None = None) -> float:
    """sin(k theta) coefficient of F_{omega V}(cos k theta) at the disk (mixed central difference).

    F is affine in omega, so a large omega step costs no accuracy.
    """
    n_modes = max(k, 16) if n_modes is None else n_modes
    q = default_quadrature(n_modes) if q is None else q
    total = 0.0
    for so in (1, -1):
        for sv in (1, -1):
            total += so * sv * _mode_sine_coeff(omega + so * h_omega, k, sv * h, n_modes, q)
    return total / (4 * h * h_omega)


def bifurcation_omega(m: int) -> float:
    """Angular velocity (m-1)/(2m) at which the m-fold branch leaves the disk."""
    if m < 2:
        raise ValueError("m must be >= 2 (m=1 is a translation)")
    return (m - 1) / (2 * m)


def multiplier_root(k: int, n_modes: int | None = None,
                    q: QuadratureConfig | None = None, xtol: float = 1e-14) -> float:
    """Numerical root of omega -> mu_k(omega) on [0, 1/2]."""
    if k < 2:
        raise ValueError("mode 1 has its root at omega = 0")
    f = lambda om: disk_multiplier_numeric(om, k, n_modes=n_modes, q=q)
    return brentq(f, 0.0, 0.5, xtol=xtol, rtol=4 * np.finfo(float).eps)


def fit_multiplier_scale(ks=range(1, 9), omega: float = 0.25, n_modes: int | None = None):
    """Least-squares constant C with mu_k(omega) ~ C (1 - k/2); returns (C, relative residual)."""
    ks = np.asarray(list(ks))
    mu = np.array([disk_multiplier_numeric(omega, int(k), n_modes=n_modes) for k in ks])
    pattern = 1.0 - ks / 2.0
    c = float(pattern @ mu / (pattern @ pattern))
    rel = float(np.linalg.norm(mu - c * pattern) / np.linalg.norm(mu))
    return c, rel


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    omega: float
    multipliers: np.ndarray
    kernel_modes: tuple
    zero_tolerance: float
    scale: float

    def rows(self):
        for k, mu in enumerate(self.multipliers, start=1):
            yield k, float(mu)


def spectrum(omega: float, n_modes: int = 16, zero_tolerance: float = 1e-8,
             scale: float | None = None, q: QuadratureConfig | None = None) -> SpectrumReport:
    """Disk multipliers mu_1..mu_N at ``omega``; kernel detected by |mu_k| <= tol * |scale|."""
    q = default_quadrature(n_modes) if q is None else q
    mus = np.array(parallel_map(
        lambda k: disk_multiplier_numeric(omega, k, n_modes=n_modes, q=q),
        range(1, n_modes + 1),
    ))
    if scale is None:
        scale, _ = fit_multiplier_scale(n_modes=max(8, min(n_modes, 16)))
    tol = zero_tolerance * abs(scale)
    modes = [OMEGA_DIRECTION]
    for k, mu in enumerate(mus, start=1):
        if abs(mu) <= tol:
            modes += [f"cos {k}theta", f"sin {k}theta"]
    return SpectrumReport(omega, mus, tuple(modes), tol, scale)


def unknown_labels(n_modes: int) -> list:
    return ([f"cos {k}theta" for k in range(1, n_modes + 1)]
            + [f"sin {k}theta" for k in range(1, n_modes + 1)]
            + [OMEGA_DIRECTION])


def unpack(p: PatchState, u: np.ndarray) -> PatchState:
    """Full unknown vector (cos_1..N, sin_1..N, omega) -> PatchState with unit mean radius."""
    n = p.boundary.n_modes
    return PatchState(FourierBoundary(1.0, u[:n], u[n:2 * n]), u[2 * n])


def pack(p: PatchState) -> np.ndarray:
    b = p.boundary
    return np.concatenate([b.cos_coeffs, b.sin_coeffs, [p.omega]])


@dataclass(frozen=True, eq=False)
class JacobianMatrix:
    """d(residual cos/sin coefficients) / d(cos_1..N, sin_1..N, omega), or a column subset."""

    matrix: np.ndarray
    base_point: PatchState
    step: float
    columns: tuple

    @property
    def labels(self) -> list:
        all_labels = unknown_labels(self.base_point.boundary.n_modes)
        return [all_labels[j] for j in self.columns]


def jacobian(p: PatchState, q: QuadratureConfig | None = None, h: float | None = None,
             columns=None) -> JacobianMatrix:
    """Central finite-difference Jacobian of the residual coefficients."""
    n = p.boundary.n_modes
    q = default_quadrature(n) if q is None else q
    h = q.fd_step if h is None else h
    base = pack(p)
    columns = tuple(range(2 * n + 1)) if columns is None else tuple(columns)

    def column(j):
        du = np.zeros_like(base)
        du[j] = h
        rp = eval_contour_residual(unpack(p, base + du), q).coefficient_vector
        rm = eval_contour_residual(unpack(p, base - du), q).coefficient_vector
        return (rp - rm) / (2 * h)

    cols = parallel_map(column, columns)
    return JacobianMatrix(np.column_stack(cols), p, h, columns)


def jacobian_kernel(jac: JacobianMatrix, rel_tol: float = 1e-8) -> list:
    """Labels of unknown directions spanning the numerical null space of ``jac``."""
    a = jac.matrix
    _, s, vt = np.linalg.svd(a)
    smax = s[0] if s.size else 1.0
    rank = int(np.sum(s > rel_tol * smax))
    null = vt[rank:]
    weight = np.sum(null**2, axis=0)
    labels = jac.labels
    return [labels[j] for j in np.argsort(-weight)[: null.shape[0]] if weight[j] > 0.5]
