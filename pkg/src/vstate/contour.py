"""The contour functional for uniformly rotating patches.

For a boundary R = 1 + V(x) in polar form the rigid-rotation condition reads

    F(omega, V)(x) = omega (1 + V(x)) V'(x) - (F1 + F2 + F3)(V)(x) = 0

where each F_i is (1/4pi) int ln A(x, y) G_i(x, y) dy with
A = (V(x)-V(y))^2 + 4 (1+V(x)) (1+V(y)) sin^2((x-y)/2).

The log is split as ln A = ln Q + ln(4 sin^2((x-y)/2)), Q being smooth with
diagonal value (1+V(x))^2 + V'(x)^2. The ln Q part is integrated with the
trapezoid rule; the ln(4 sin^2) part with the configured log rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import FourierBoundary, PatchState, collocation_angles, trig_coefficients
from .quadrature import QuadratureConfig, grid_kernels, is_grid, point_kernels


class SingularGeometryError(ArithmeticError):
    """The log argument became non-positive (degenerate or self-intersecting boundary)."""


@dataclass(frozen=True, eq=False)
class ResidualField:
    angles: np.ndarray
    grid_values: np.ndarray
    cosine_coeffs: np.ndarray
    sine_coeffs: np.ndarray
    mean: float

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.grid_values)))

    @property
    def coefficient_vector(self) -> np.ndarray:
        return np.concatenate([self.cosine_coeffs, self.sine_coeffs])


def default_quadrature(n_modes: int) -> QuadratureConfig:
    return QuadratureConfig.for_modes(n_modes)


class _Kernel:
    """Shared pieces of the three integrals for one boundary and a set of evaluation angles.

    Every G_i(x, y) is a sum of products f(x) g(y) times sin(x-y) or cos(x-y), so
    each integral reduces to the weighted matrices w*sin and w*cos applied to
    boundary data at the nodes.
    """

    def __init__(self, v: FourierBoundary, x, q: QuadratureConfig):
        if abs(v.mean_radius - 1.0) > 1e-12:
            raise ValueError(
                f"contour functional needs unit mean radius (got {v.mean_radius}); normalize first"
            )
        m = q.nodes
        y = collocation_angles(m)
        if x is None or is_grid(x, m):
            x = y
            sin_s, cos_s, inv_four_sin2, log_sin, log_cos, diag = grid_kernels(m, q.log_rule)
        else:
            x = np.asarray(x, dtype=float).reshape(-1)
            sin_s, cos_s, inv_four_sin2, log_sin, log_cos, diag = point_kernels(x, m, q.log_rule)
        self.x = x
        vx, dvx = v.perturbation(x), v.perturbation_derivative(x)
        vy, dvy = v.perturbation(y), v.perturbation_derivative(y)
        self.vx, self.vy = vx, vy
        self.rx, self.ry = 1.0 + vx, 1.0 + vy
        self.dvx, self.dvy = dvx, dvy
        dv = np.subtract.outer(vx, vy)
        q_smooth = np.multiply.outer(self.rx, self.ry)
        q_smooth += dv * dv * inv_four_sin2
        if np.any(diag):
            rows = np.nonzero(diag)[0]
            q_smooth[diag] = (self.rx**2 + dvx**2)[rows]
        if not np.all(q_smooth > 0):
            raise SingularGeometryError("non-positive log argument in contour kernel")
        smooth_w = np.log(q_smooth)
        smooth_w *= 2 * np.pi / m
        self.weighted = {
            "smooth": (smooth_w * sin_s, smooth_w * cos_s),
            "log": (log_sin, log_cos),
        }

    def _mats(self, part):
        if part == "all":
            (a, b), (c, d) = self.weighted["smooth"], self.weighted["log"]
            return a + c, b + d
        return self.weighted[part]

    def f1(self, part="all"):
        ws, _ = self._mats(part)
        return (self.rx * (ws @ self.ry) + self.dvx * (ws @ self.dvy)) / (4 * np.pi)

    def f2(self, part="all"):
        _, wc = self._mats(part)
        return self.rx * (wc @ self.dvy - self.dvx * wc.sum(axis=1)) / (4 * np.pi)

    def f3(self, part="all"):
        _, wc = self._mats(part)
        return self.dvx * (self.vx * wc.sum(axis=1) - wc @ self.vy) / (4 * np.pi)

    def total(self):
        out = np.zeros_like(self.rx)
        for ws, wc in self.weighted.values():
            out += self.rx * (ws @ self.ry + wc @ self.dvy)
            out += self.dvx * (ws @ self.dvy - wc @ self.ry)
        return out / (4 * np.pi)


def _scalar_or_array(x, values):
    return float(values[0]) if np.ndim(x) == 0 else values


def _config(v: FourierBoundary, q: QuadratureConfig | None) -> QuadratureConfig:
    return default_quadrature(v.n_modes) if q is None else q


def eval_F1(v: FourierBoundary, x, q: QuadratureConfig | None = None, part: str = "all"):
    """F1 at angle(s) ``x``. ``part`` selects the smooth-kernel piece (``"smooth"``),
    the log-singular piece (``"log"``) or their sum."""
    return _scalar_or_array(x, _Kernel(v, np.atleast_1d(x), _config(v, q)).f1(part))


def eval_F2(v: FourierBoundary, x, q: QuadratureConfig | None = None, part: str = "all"):
    return _scalar_or_array(x, _Kernel(v, np.atleast_1d(x), _config(v, q)).f2(part))


def eval_F3(v: FourierBoundary, x, q: QuadratureConfig | None = None, part: str = "all"):
    return _scalar_or_array(x, _Kernel(v, np.atleast_1d(x), _config(v, q)).f3(part))


def residual_values(omega: float, v: FourierBoundary, q: QuadratureConfig | None = None,
                    x=None) -> np.ndarray:
    """F(omega, V) on the quadrature grid (or at angles ``x``)."""
    kern = _Kernel(v, x, _config(v, q))
    return omega * kern.rx * kern.dvx - kern.total()


def eval_contour_residual(p: PatchState, q: QuadratureConfig | None = None) -> ResidualField:
    v = p.boundary
    q = _config(v, q)
    values = residual_values(p.omega, v, q)
    mean, cos, sin = trig_coefficients(values, v.n_modes)
    return ResidualField(
        angles=collocation_angles(q.nodes),
        grid_values=values,
        cosine_coeffs=cos,
        sine_coeffs=sin,
        mean=float(mean),
    )
