"""Star-shaped patch boundaries stored as truncated Fourier series.

A boundary is ``R(theta) = mean_radius * (1 + V(theta))`` with

    V(theta) = sum_{k=1}^{N} a_k cos(k theta) + b_k sin(k theta).

There is no k=0 term; the mean radius is kept separately.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_MODES = 64


class PatchFormatError(ValueError):
    """Raised when a patch JSON document is malformed; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FourierBoundary:
    mean_radius: float
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def __post_init__(self):
        cos = _frozen(self.cos_coeffs)
        sin = _frozen(self.sin_coeffs)
        if cos.shape != sin.shape:
            raise ValueError(
                f"cos and sin coefficient counts differ ({cos.size} != {sin.size})"
            )
        if not (math.isfinite(self.mean_radius) and self.mean_radius > 0):
            raise ValueError(f"mean_radius must be positive, got {self.mean_radius}")
        if not (np.all(np.isfinite(cos)) and np.all(np.isfinite(sin))):
            raise ValueError("Fourier coefficients must be finite")
        object.__setattr__(self, "mean_radius", float(self.mean_radius))
        object.__setattr__(self, "cos_coeffs", cos)
        object.__setattr__(self, "sin_coeffs", sin)
        # positivity of 1 + V on 16N points
        n_check = max(16 * cos.size, 64)
        theta = 2 * np.pi * np.arange(n_check) / n_check
        if cos.size and np.min(1.0 + self.perturbation(theta)) <= 0:
            raise ValueError("boundary is not star-shaped: 1 + V(theta) <= 0 somewhere")

    @property
    def n_modes(self) -> int:
        return self.cos_coeffs.size

    @classmethod
    def disk(cls, radius: float = 1.0, n_modes: int = DEFAULT_MODES) -> "FourierBoundary":
        return cls(radius, np.zeros(n_modes), np.zeros(n_modes))

    @classmethod
    def from_modes(
        cls, n_modes: int, cos: dict | None = None, sin: dict | None = None,
        mean_radius: float = 1.0,
    ) -> "FourierBoundary":
        """Build a boundary from sparse ``{k: amplitude}`` mode dictionaries."""
        a = np.zeros(n_modes)
        b = np.zeros(n_modes)
        for k, amp in (cos or {}).items():
            a[k - 1] = amp
        for k, amp in (sin or {}).items():
            b[k - 1] = amp
        return cls(mean_radius, a, b)

    def _trig(self, theta):
        k = np.arange(1, self.n_modes + 1)
        kt = np.multiply.outer(np.asarray(theta, dtype=float), k)
        return k, np.cos(kt), np.sin(kt)

    def perturbation(self, theta):
        """V(theta)."""
        _, c, s = self._trig(theta)
        return c @ self.cos_coeffs + s @ self.sin_coeffs

    def perturbation_derivative(self, theta):
        """V'(theta)."""
        k, c, s = self._trig(theta)
        return s @ (-k * self.cos_coeffs) + c @ (k * self.sin_coeffs)

    def perturbation_second_derivative(self, theta):
        k, c, s = self._trig(theta)
        return -(c @ (k**2 * self.cos_coeffs) + s @ (k**2 * self.sin_coeffs))

    def radius(self, theta):
        return self.mean_radius * (1.0 + self.perturbation(theta))

    def radius_derivative(self, theta):
        return self.mean_radius * self.perturbation_derivative(theta)

    def points(self, theta) -> np.ndarray:
        """Boundary points ``R(theta) e^{i theta}`` as an (..., 2) array."""
        theta = np.asarray(theta, dtype=float)
        r = self.radius(theta)
        return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def tangents(self, theta) -> np.ndarray:
        """d/dtheta of :meth:`points`."""
        theta = np.asarray(theta, dtype=float)
        r = self.radius(theta)
        dr = self.radius_derivative(theta)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([dr * c - r * s, dr * s + r * c], axis=-1)

    def with_modes(self, n_modes: int) -> "FourierBoundary":
        """Truncate or zero-pad to ``n_modes``."""
        a = np.zeros(n_modes)
        b = np.zeros(n_modes)
        n = min(n_modes, self.n_modes)
        a[:n] = self.cos_coeffs[:n]
        b[:n] = self.sin_coeffs[:n]
        return FourierBoundary(self.mean_radius, a, b)

    def allclose(self, other: "FourierBoundary", atol: float = 1e-12) -> bool:
        n = max(self.n_modes, other.n_modes)
        p, q = self.with_modes(n), other.with_modes(n)
        return (
            abs(p.mean_radius - q.mean_radius) <= atol
            and np.allclose(p.cos_coeffs, q.cos_coeffs, rtol=0, atol=atol)
            and np.allclose(p.sin_coeffs, q.sin_coeffs, rtol=0, atol=atol)
        )


@dataclass(frozen=True, eq=False)
class PatchState:
    boundary: FourierBoundary
    omega: float

    def __post_init__(self):
        if not math.isfinite(self.omega):
            raise ValueError(f"omega must be finite, got {self.omega}")
        object.__setattr__(self, "omega", float(self.omega))

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "mean_radius": self.boundary.mean_radius,
            "cos": self.boundary.cos_coeffs.tolist(),
            "sin": self.boundary.sin_coeffs.tolist(),
        }

    @classmethod
    def from_dict(cls, data) -> "PatchState":
        if not isinstance(data, dict):
            raise PatchFormatError("<root>", "expected a JSON object")
        for name in ("omega", "mean_radius", "cos", "sin"):
            if name not in data:
                raise PatchFormatError(name, "missing field")
        omega = _number(data, "omega")
        mean_radius = _number(data, "mean_radius")
        if mean_radius <= 0:
            raise PatchFormatError("mean_radius", "must be positive")
        cos = _number_list(data, "cos")
        sin = _number_list(data, "sin")
        if len(cos) != len(sin):
            raise PatchFormatError("sin", f"length {len(sin)} does not match cos length {len(cos)}")
        try:
            boundary = FourierBoundary(mean_radius, cos, sin)
        except ValueError as exc:
            raise PatchFormatError("cos", str(exc)) from exc
        return cls(boundary, omega)


def _number(data: dict, name: str) -> float:
    value = data[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise PatchFormatError(name, f"expected a finite number, got {value!r}")
    return float(value)


def _number_list(data: dict, name: str) -> list:
    value = data[name]
    if not isinstance(value, list):
        raise PatchFormatError(name, "expected a list of numbers")
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise PatchFormatError(f"{name}[{i}]", f"expected a finite number, got {v!r}")
    return [float(v) for v in value]


def read_patch(path) -> PatchState:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PatchFormatError("<file>", str(exc)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PatchFormatError("<json>", str(exc)) from exc
    return PatchState.from_dict(data)


def write_patch(state: PatchState, path) -> None:
    Path(path).write_text(json.dumps(state.to_dict(), indent=2) + "\n", encoding="utf-8")


def eval_radius(b: FourierBoundary, theta):
    return b.radius(theta)


def eval_radius_derivative(b: FourierBoundary, theta):
    return b.radius_derivative(theta)


def rotate(b: FourierBoundary, phi: float) -> FourierBoundary:
    """Boundary of the set rotated counterclockwise by ``phi``: R_new(theta) = R(theta - phi)."""
    k = np.arange(1, b.n_modes + 1)
    c, s = np.cos(k * phi), np.sin(k * phi)
    a, bb = b.cos_coeffs, b.sin_coeffs
    return FourierBoundary(b.mean_radius, a * c - bb * s, a * s + bb * c)


def normalize_mean(b: FourierBoundary) -> FourierBoundary:
    """Dilate to unit mean radius; V is unchanged because it is stored relative to the mean."""
    return FourierBoundary(1.0, b.cos_coeffs, b.sin_coeffs)


def scale(b: FourierBoundary, factor: float) -> FourierBoundary:
    return FourierBoundary(b.mean_radius * factor, b.cos_coeffs, b.sin_coeffs)


def trig_coefficients(values: np.ndarray, n_modes: int):
    """Real Fourier coefficients (mean, cos_1..N, sin_1..N) of samples on the uniform grid.

    ``values`` may carry leading batch axes; the last axis is the grid.
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[-1]
    if m < 2 * n_modes + 1:
        raise ValueError(f"grid of {m} points aliases {n_modes} modes (need >= {2 * n_modes + 1})")
    spec = np.fft.rfft(values, axis=-1) / m
    mean = spec[..., 0].real
    cos = 2.0 * spec[..., 1:n_modes + 1].real
    sin = -2.0 * spec[..., 1:n_modes + 1].imag
    if m % 2 == 0 and n_modes == m // 2:
        cos[..., -1] *= 0.5
    return mean, cos, sin


def collocation_angles(m: int) -> np.ndarray:
    return 2 * np.pi * np.arange(m) / m


def coeffs_to_grid(b: FourierBoundary, m: int) -> np.ndarray:
    """Radius samples ``R(2 pi j / m)``, j = 0..m-1."""
    if m < 2 * b.n_modes + 1:
        raise ValueError(f"grid of {m} points aliases {b.n_modes} modes (need >= {2 * b.n_modes + 1})")
    return b.radius(collocation_angles(m))


def grid_to_coeffs(values, n_modes: int) -> FourierBoundary:
    mean, cos, sin = trig_coefficients(values, n_modes)
    return FourierBoundary(mean, cos / mean, sin / mean)


def ellipse_radius(a_semi: float, b_semi: float, theta):
    c, s = np.cos(theta), np.sin(theta)
    return a_semi * b_semi / np.sqrt((b_semi * c) ** 2 + (a_semi * s) ** 2)


def from_ellipse(a_semi: float, b_semi: float, n_modes: int = DEFAULT_MODES,
                 tol: float = 1e-8, full_output: bool = False):
    """Fourier projection of the centered ellipse with semi-axes ``a_semi`` (x) and ``b_semi`` (y).

    Raises ``ValueError`` when the sup-norm projection error exceeds ``tol``.
    With ``full_output`` returns ``(boundary, projection_error)``.
    """
    if a_semi <= 0 or b_semi <= 0:
        raise ValueError("semi-axes must be positive")
    m = max(32 * n_modes, 4096)
    theta = collocation_angles(m)
    r = ellipse_radius(a_semi, b_semi, theta)
    mean, cos, sin = trig_coefficients(r, n_modes)
    # r(theta) is even with period pi
    cos[0::2] = 0.0
    sin[:] = 0.0
    b = FourierBoundary(mean, cos / mean, sin / mean)
    check = theta + np.pi / m
    err = float(np.max(np.abs(b.radius(check) - ellipse_radius(a_semi, b_semi, check))))
    if err > tol:
        raise ValueError(
            f"{n_modes} modes resolve the {a_semi:g}x{b_semi:g} ellipse only to {err:.2e} (> {tol:g})"
        )
    return (b, err) if full_output else b


def kirchhoff_omega(a_semi: float, b_semi: float) -> float:
    """Rotation rate of the Kirchhoff ellipse with unit vorticity."""
    return a_semi * b_semi / (a_semi + b_semi) ** 2
