"""Relative stream function of a rotating patch and the estimates built on it.

The Newtonian potential N(x) = (1/2pi) int_D ln|x - y| dA(y) is reduced to
boundary integrals:

    N(x)      = (1/2pi) oint (y - x).n (ln|y - x| - 1/2) / 2 dS(y)
    grad N(x) = -(1/2pi) oint ln|x - y| n(y) dS(y)

and Psi = N - omega |x|^2 / 2 + c, with c fixing the boundary mean of Psi to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import FourierBoundary, PatchState, collocation_angles
from .geometry import area
from .quadrature import log_weights

MAX_NODES = 1 << 16
ON_BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class StreamSample:
    position: tuple
    psi: float
    psi_r: float
    psi_theta: float


@dataclass(frozen=True)
class GradientDeviation:
    """sup |grad(Psi - Psi0)| on the annulus 2/3 <= |x| <= 4/3, sup |Psi_r - 1/4| on the
    boundary, and sup |Psi_theta| on the annulus."""

    gradient: float
    radial: float
    angular: float


def default_nodes(b: FourierBoundary) -> int:
    return max(8 * (2 * b.n_modes + 1), 256)


def psi0(omega: float, x) -> np.ndarray | float:
    """Relative stream function of the unit disk rotating at ``omega``."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x**2, axis=-1)
    with np.errstate(divide="ignore"):
        outside = -omega * (r2 - 1) / 2 + 0.25 * np.log(r2)
    val = np.where(r2 < 1, (1 - 2 * omega) * (r2 - 1) / 4, outside)
    return float(val) if val.ndim == 0 else val


def psi0_gradient(omega: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x**2, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        outside = -omega * x + x / (2 * r2)
    return np.where(r2 < 1, (1 - 2 * omega) * x / 2, outside)


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _off_boundary(b: FourierBoundary, pts: np.ndarray, m: int):
    t = collocation_angles(m)
    z, dz = b.points(t), b.tangents(t)
    normal = np.stack([dz[:, 1], -dz[:, 0]], axis=-1)
    rel = z[None, :, :] - pts[:, None, :]
    log_dist = 0.5 * np.log(np.sum(rel**2, axis=-1))
    pot = np.sum(_cross(rel, dz[None]) * (log_dist - 0.5), axis=1) / (2 * m)
    grad = -(log_dist @ normal) / m
    return pot, grad


def _on_boundary(b: FourierBoundary, theta: np.ndarray, m: int):
    """Potential and gradient at z(theta) with the log singularity integrated exactly."""
    t = collocation_angles(m)
    z, dz = b.points(t), b.tangents(t)
    normal = np.stack([dz[:, 1], -dz[:, 0]], axis=-1)
    x = b.points(theta)
    dx = b.tangents(theta)
    log_w, four_sin2, diag = log_weights(theta, m)
    rel = z[None, :, :] - x[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.sum(rel**2, axis=-1) / four_sin2
    q = np.where(diag, np.sum(dx**2, axis=-1)[:, None], q)
    smooth = (2 * np.pi / m) * 0.5 * np.log(q)
    weights = smooth + 0.5 * log_w  # integrates ln|z(theta) - z(t)| dt
    phi = _cross(rel, dz[None])
    pot = (np.sum(weights * phi, axis=1) - (np.pi / m) * np.sum(phi, axis=1)) / (4 * np.pi)
    grad = -(weights @ normal) / (2 * np.pi)
    return pot, grad


def _boundary_angles(b: FourierBoundary, pts: np.ndarray):
    theta = np.arctan2(pts[:, 1], pts[:, 0]) % (2 * np.pi)
    r = np.hypot(pts[:, 0], pts[:, 1])
    on = np.abs(r - b.radius(theta)) <= ON_BOUNDARY_TOL * np.maximum(r, 1.0)
    return theta, on


def _distance(b: FourierBoundary, pts: np.ndarray) -> np.ndarray:
    dense = b.points(collocation_angles(max(2048, 16 * b.n_modes)))
    d = np.empty(len(pts))
    for i in range(0, len(pts), 256):
        chunk = pts[i:i + 256]
        d[i:i + 256] = np.sqrt(np.min(np.sum((chunk[:, None, :] - dense[None]) ** 2, axis=-1), axis=1))
    return d


def potential_and_gradient(b: FourierBoundary, points, m: int | None = None):
    """Newtonian potential of the patch and its gradient at ``points`` (shape (..., 2))."""
    pts = np.asarray(points, dtype=float)
    shape = pts.shape[:-1]
    pts = pts.reshape(-1, 2)
    m = default_nodes(b) if m is None else m
    pot = np.empty(len(pts))
    grad = np.empty((len(pts), 2))
    theta, on = _boundary_angles(b, pts)
    if np.any(on):
        pot[on], grad[on] = _on_boundary(b, theta[on], m)
    off = ~on
    if np.any(off):
        speed = float(np.max(np.hypot(*b.tangents(collocation_angles(256)).T)))
        d = np.maximum(_distance(b, pts[off]), 1e-300)
        need = np.clip(36 * speed / d, m, MAX_NODES)
        m_eff = np.maximum(m, 2 ** np.ceil(np.log2(need))).astype(int)
        idx = np.flatnonzero(off)
        for mm in np.unique(m_eff):
            sel = idx[m_eff == mm]
            for i in range(0, len(sel), 512):
                part = sel[i:i + 512]
                pot[part], grad[part] = _off_boundary(b, pts[part], int(mm))
    return pot.reshape(shape), grad.reshape(shape + (2,))


def newtonian_potential(b: FourierBoundary, x, m: int | None = None):
    pot, _ = potential_and_gradient(b, x, m)
    return float(pot) if np.ndim(pot) == 0 else pot


def boundary_constant(p: PatchState, m: int | None = None, n_samples: int | None = None) -> float:
    """Additive constant c that makes the boundary mean of Psi vanish."""
    b = p.boundary
    n_samples = max(4 * b.n_modes, 64) if n_samples is None else n_samples
    theta = collocation_angles(n_samples)
    pot, _ = _on_boundary(b, theta, default_nodes(b) if m is None else m)
    r2 = b.radius(theta) ** 2
    return -float(np.mean(pot - p.omega * r2 / 2))


def stream_field(p: PatchState, points, m: int | None = None, constant: float | None = None):
    """(psi, grad psi) at ``points``."""
    pts = np.asarray(points, dtype=float)
    c = boundary_constant(p, m) if constant is None else constant
    pot, grad = potential_and_gradient(p.boundary, pts, m)
    psi = pot - p.omega * np.sum(pts**2, axis=-1) / 2 + c
    return psi, grad - p.omega * pts


def polar_derivatives(points, grad):
    """(psi_r, psi_theta) from Cartesian gradients; both 0 at the origin."""
    pts = np.asarray(points, dtype=float)
    r = np.hypot(pts[..., 0], pts[..., 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        psi_r = np.where(r > 0, np.sum(grad * pts, axis=-1) / r, 0.0)
    psi_theta = pts[..., 0] * grad[..., 1] - pts[..., 1] * grad[..., 0]
    return psi_r, psi_theta


def relative_stream(p: PatchState, x, m: int | None = None) -> StreamSample:
    x = np.asarray(x, dtype=float).reshape(2)
    psi, grad = stream_field(p, x[None], m)
    psi_r, psi_theta = polar_derivatives(x[None], grad)
    return StreamSample((float(x[0]), float(x[1])), float(psi[0]), float(psi_r[0]), float(psi_theta[0]))


def _boundary_samples(p: PatchState, n_samples: int | None, m: int | None):
    b = p.boundary
    n_samples = max(4 * b.n_modes, 64) if n_samples is None else n_samples
    theta = collocation_angles(n_samples)
    m = default_nodes(b) if m is None else m
    pot, grad = _on_boundary(b, theta, m)
    pts = b.points(theta)
    psi = pot - p.omega * np.sum(pts**2, axis=-1) / 2
    return theta, pts, psi - np.mean(psi), grad - p.omega * pts


def boundary_flatness(p: PatchState, n_samples: int | None = None, m: int | None = None) -> float:
    """sup |Psi| over the boundary after the mean-zero normalization."""
    _, _, psi, _ = _boundary_samples(p, n_samples, m)
    return float(np.max(np.abs(psi)))


def contour_ode_residual(p: PatchState, n_samples: int | None = None, m: int | None = None) -> float:
    """max over boundary samples of |R'(theta) + Psi_theta / Psi_r|."""
    theta, pts, _, grad = _boundary_samples(p, n_samples, m)
    psi_r, psi_theta = polar_derivatives(pts, grad)
    return float(np.max(np.abs(p.boundary.radius_derivative(theta) + psi_theta / psi_r)))


def laplacian_probe(p: PatchState, x, h: float = 1e-3, m: int | None = None) -> np.ndarray:
    """Five-point discrete Laplacian of Psi at ``x`` (shape (..., 2))."""
    x = np.asarray(x, dtype=float)
    offsets = np.array([[0, 0], [h, 0], [-h, 0], [0, h], [0, -h]])
    stencil = x[..., None, :] + offsets
    c = boundary_constant(p, m)
    psi, _ = stream_field(p, stencil, m, constant=c)
    return (np.sum(psi[..., 1:], axis=-1) - 4 * psi[..., 0]) / h**2


def annulus_grid(b: FourierBoundary, n_r: int = 17, n_theta: int | None = None,
                 band: float = 0.02) -> np.ndarray:
    """Polar grid on 2/3 <= |x| <= 4/3 minus a band of width ``band`` around the boundary."""
    n_theta = max(4 * b.n_modes, 64) if n_theta is None else n_theta
    r = np.linspace(2 / 3, 4 / 3, n_r)
    theta = collocation_angles(n_theta)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    keep = np.abs(rr - b.radius(tt)) > band
    pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1)
    return pts[keep]


def gradient_deviation(p: PatchState, n_r: int = 17, n_theta: int | None = None,
                       m: int | None = None) -> GradientDeviation:
    b = p.boundary
    c = boundary_constant(p, m)
    grid = annulus_grid(b, n_r, n_theta)
    _, grad_grid = stream_field(p, grid, m, constant=c)
    _, bpts, _, grad_bd = _boundary_samples(p, n_theta, m)
    pts = np.concatenate([grid, bpts])
    grad = np.concatenate([grad_grid, grad_bd])
    dev = np.hypot(*(grad - psi0_gradient(p.omega, pts)).T)
    _, psi_theta = polar_derivatives(pts, grad)
    psi_r_bd, _ = polar_derivatives(bpts, grad_bd)
    return GradientDeviation(
        gradient=float(np.max(dev)),
        radial=float(np.max(np.abs(psi_r_bd - 0.25))),
        angular=float(np.max(np.abs(psi_theta))),
    )


def steiner_integral(b: FourierBoundary, x, m: int | None = None):
    """(int_D |x - y|^{-1} dA(y), value / sqrt(|D|)).

    In polar coordinates about x the radial integral of (1/rho) rho drho is the
    signed ray length, which equals oint (z - x) x z' / |z - x| dt.
    """
    x = np.asarray(x, dtype=float).reshape(2)
    m = default_nodes(b) if m is None else m
    theta0, on = _boundary_angles(b, x[None])
    if on[0]:
        mm = max(m, 1 << 14)
        t = theta0[0] + collocation_angles(mm)
    else:
        d = max(float(_distance(b, x[None])[0]), 1e-300)
        speed = float(np.max(np.hypot(*b.tangents(collocation_angles(256)).T)))
        mm = int(max(m, 2 ** math.ceil(math.log2(min(max(36 * speed / d, m), MAX_NODES)))))
        t = collocation_angles(mm)
    rel = b.points(t) - x
    dist = np.hypot(rel[:, 0], rel[:, 1])
    cr = _cross(rel, b.tangents(t))
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(dist > 0, cr / dist, 0.0)
    value = float(2 * np.pi * np.mean(integrand))
    return value, value / math.sqrt(area(b))
