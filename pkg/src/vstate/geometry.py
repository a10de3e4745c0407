"""Area, center of vorticity, symmetric differences and shape classification."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import reduce

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .boundary import (
    FourierBoundary,
    collocation_angles,
    from_ellipse,
    normalize_mean,
    rotate,
)

CLASSES = ("disk", "ellipse", "other")


def _exact_nodes(b: FourierBoundary, power: int) -> np.ndarray:
    # trapezoid is exact for trig polynomials of degree < m
    return collocation_angles(max(power * b.n_modes + 2, 8))


def area(b: FourierBoundary) -> float:
    theta = _exact_nodes(b, 2)
    return float(0.5 * np.mean(b.radius(theta) ** 2) * 2 * np.pi)


def first_moment(b: FourierBoundary) -> np.ndarray:
    theta = _exact_nodes(b, 3)
    r3 = b.radius(theta) ** 3 / 3
    return 2 * np.pi * np.array([np.mean(r3 * np.cos(theta)), np.mean(r3 * np.sin(theta))])


def center_of_vorticity(b: FourierBoundary) -> np.ndarray:
    return first_moment(b) / area(b)


def symmetric_difference_area(b1: FourierBoundary, b2: FourierBoundary,
                              nodes: int = 1 << 14) -> float:
    """|D1 delta D2| for two sets star-shaped about the origin."""
    theta = collocation_angles(nodes)
    diff = np.abs(b1.radius(theta) ** 2 - b2.radius(theta) ** 2)
    return float(0.5 * np.mean(diff) * 2 * np.pi)


def radial_bounds(b: FourierBoundary, delta: float | None = None):
    """(min R, max R); with ``delta`` also ((max-1)/sqrt(delta), (1-min)/sqrt(delta))."""
    n = max(64 * b.n_modes, 1024)
    theta = collocation_angles(n)
    r = b.radius(theta)
    h = 2 * np.pi / n

    def refine(i, sign):
        res = minimize_scalar(lambda t: sign * b.radius(t), bounds=(theta[i] - h, theta[i] + h),
                              method="bounded", options={"xatol": 1e-12})
        return sign * min(sign * r[i], res.fun)

    rmin = refine(int(np.argmin(r)), 1.0)
    rmax = refine(int(np.argmax(r)), -1.0)
    if delta is None:
        return rmin, rmax
    root = math.sqrt(delta)
    return rmin, rmax, (rmax - 1) / root, (1 - rmin) / root


def align_mode(b: FourierBoundary, m: int = 2) -> FourierBoundary:
    """Rotate so the mode-``m`` term reads A cos(m theta) with A >= 0."""
    if b.n_modes < m:
        return b
    a, s = b.cos_coeffs[m - 1], b.sin_coeffs[m - 1]
    if a == 0 and s == 0:
        return b
    return rotate(b, -math.atan2(s, a) / m)


def rotational_symmetry(b: FourierBoundary, tol: float = 1e-8) -> int:
    """Largest m such that only modes divisible by m exceed ``tol`` (0 for a disk)."""
    amp = np.hypot(b.cos_coeffs, b.sin_coeffs)
    active = [k for k, x in enumerate(amp, start=1) if x > tol]
    return reduce(math.gcd, active, 0)


def _normalized_ellipse(aspect: float, n_modes: int) -> FourierBoundary:
    return normalize_mean(from_ellipse(aspect, 1.0, n_modes, tol=np.inf))


def fit_ellipse(b: FourierBoundary, max_aspect: float = 20.0):
    """Normalized ellipse with the same mode-2 cos amplitude as ``b`` (b aligned, a_2 >= 0).

    Returns ``(ellipse, aspect)``, or ``(None, nan)`` when no ellipse in range matches.
    """
    target = b.cos_coeffs[1] if b.n_modes >= 2 else 0.0
    if target <= 0:
        return None, math.nan
    g = lambda t: _normalized_ellipse(t, b.n_modes).cos_coeffs[1] - target
    if g(max_aspect) < 0:
        return None, math.nan
    aspect = brentq(g, 1.0, max_aspect, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return _normalized_ellipse(aspect, b.n_modes), aspect


def coefficient_distance(b1: FourierBoundary, b2: FourierBoundary) -> float:
    n = max(b1.n_modes, b2.n_modes)
    p, q = b1.with_modes(n), b2.with_modes(n)
    return float(max(np.max(np.abs(p.cos_coeffs - q.cos_coeffs), initial=0.0),
                     np.max(np.abs(p.sin_coeffs - q.sin_coeffs), initial=0.0)))


def classify(b: FourierBoundary, tol: float = 1e-7, center_tol: float = 1e-6):
    """Return ``(classification, residual)`` with classification in disk/ellipse/other.

    The boundary is normalized and rotated so the mode-2 sine part vanishes
    before fitting, so the result does not depend on the orientation.
    """
    center = center_of_vorticity(b)
    if np.hypot(*center) > center_tol * b.mean_radius:
        raise ValueError(
            f"classify needs a boundary centered at its center of vorticity (|center| = {np.hypot(*center):.2e})"
        )
    b = align_mode(normalize_mean(b), 2)
    energy = float(np.sqrt(np.sum(b.cos_coeffs**2) + np.sum(b.sin_coeffs**2)))
    if energy < tol:
        return "disk", energy
    ellipse, _ = fit_ellipse(b)
    if ellipse is None:
        return "other", energy
    resid = coefficient_distance(b, ellipse)
    return ("ellipse" if resid < tol else "other"), resid


@dataclass(frozen=True)
class ShapeReport:
    area: float
    center: tuple
    sym_diff_to_unit_disk: float
    radial_min: float
    radial_max: float
    classification: str
    classification_residual: float
    rotational_symmetry: int

    def to_dict(self) -> dict:
        return asdict(self)


def shape_report(b: FourierBoundary, tol: float = 1e-7) -> ShapeReport:
    center = center_of_vorticity(b)
    rmin, rmax = radial_bounds(b)
    try:
        label, resid = classify(b, tol)
    except ValueError:
        label, resid = "other", math.nan
    return ShapeReport(
        area=area(b),
        center=(float(center[0]), float(center[1])),
        sym_diff_to_unit_disk=symmetric_difference_area(b, FourierBoundary.disk(1.0, b.n_modes)),
        radial_min=float(rmin),
        radial_max=float(rmax),
        classification=label,
        classification_residual=float(resid),
        rotational_symmetry=rotational_symmetry(normalize_mean(b), tol),
    )
