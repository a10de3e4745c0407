"""Periodic quadrature on the uniform grid, including the log-kernel rule."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

LOG_RULES = ("spectral", "trapezoid")


@dataclass(frozen=True)
class QuadratureConfig:
    """Inner-integral node count and rules.

    ``log_rule="spectral"`` integrates ln(4 sin^2((x-y)/2)) against the
    trigonometric interpolant of the smooth factor exactly; ``"trapezoid"``
    applies the plain rule with the diagonal node set to its limit (zero).
    """

    nodes: int
    diagonal_rule: str = "limit_value"
    log_rule: str = "spectral"
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.nodes < 4:
            raise ValueError(f"need at least 4 quadrature nodes, got {self.nodes}")
        if self.diagonal_rule != "limit_value":
            raise ValueError(f"unknown diagonal rule {self.diagonal_rule!r}")
        if self.log_rule not in LOG_RULES:
            raise ValueError(f"log_rule must be one of {LOG_RULES}, got {self.log_rule!r}")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")

    @classmethod
    def for_modes(cls, n_modes: int, factor: int = 8, **kwargs) -> "QuadratureConfig":
        return cls(nodes=factor * (2 * n_modes + 1), **kwargs)

    def check_resolves(self, n_modes: int) -> None:
        if self.nodes < 4 * (2 * n_modes + 1):
            raise ValueError(
                f"{self.nodes} quadrature nodes under-resolve {n_modes} modes "
                f"(need >= {4 * (2 * n_modes + 1)})"
            )


def log_kernel_weights(t: np.ndarray, m: int) -> np.ndarray:
    """Weights R(t) with sum_j R(x - y_j) f(y_j) = int ln(4 sin^2((x-y)/2)) f(y) dy
    exactly for trigonometric polynomials f resolved by ``m`` nodes."""
    t = np.asarray(t, dtype=float)
    n_half = (m - 1) // 2 if m % 2 else m // 2 - 1
    k = np.arange(1, n_half + 1)
    flat = t.reshape(-1)
    out = np.empty_like(flat)
    chunk = max(1, 2_000_000 // max(n_half, 1))
    for i in range(0, flat.size, chunk):
        tt = flat[i:i + chunk]
        out[i:i + chunk] = np.cos(np.multiply.outer(tt, k)) @ (-4 * np.pi / (m * k))
    if m % 2 == 0:
        out -= 4 * np.pi / m**2 * np.cos(m // 2 * flat)
    return out.reshape(t.shape)


@lru_cache(maxsize=16)
def _circulant_log_weights(m: int) -> np.ndarray:
    w = log_kernel_weights(2 * np.pi * np.arange(m) / m, m)
    w.setflags(write=False)
    return w


@lru_cache(maxsize=16)
def _circulant_index(m: int) -> np.ndarray:
    idx = (np.arange(m)[:, None] - np.arange(m)[None, :]) % m
    idx.setflags(write=False)
    return idx


def _assemble(sin_s, cos_s, four_sin2, weights, diag):
    with np.errstate(divide="ignore"):
        inv = np.where(diag, 0.0, 1.0 / np.where(diag, 1.0, four_sin2))
    return sin_s, cos_s, inv, weights * sin_s, weights * cos_s, diag


@lru_cache(maxsize=8)
def grid_kernels(m: int, log_rule: str):
    """Cached (M, M) matrices for x_i, y_j both on the M-point grid:
    sin(x-y), cos(x-y), 1/(4 sin^2((x-y)/2)) (0 on the diagonal), the log-rule
    weights times sin(x-y) and cos(x-y), and the diagonal mask."""
    idx = _circulant_index(m)
    s = 2 * np.pi * np.arange(m) / m
    diag = idx == 0
    if log_rule == "spectral":
        lw = _circulant_log_weights(m)
    else:
        lw = np.zeros(m)
        lw[1:] = 2 * np.pi / m * np.log(4 * np.sin(s[1:] / 2) ** 2)
    out = _assemble(np.sin(s)[idx], np.cos(s)[idx], (4 * np.sin(s / 2) ** 2)[idx], lw[idx], diag)
    for a in out:
        a.setflags(write=False)
    return out


def point_kernels(x: np.ndarray, m: int, log_rule: str):
    """As :func:`grid_kernels` for arbitrary evaluation angles ``x``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = 2 * np.pi * np.arange(m) / m
    s = x[:, None] - y[None, :]
    half = np.sin(s / 2)
    diag = np.abs(half) < 1e-13
    four_sin2 = 4 * half**2
    if log_rule == "spectral":
        weights = log_kernel_weights(s, m)
    else:
        with np.errstate(divide="ignore"):
            weights = np.where(diag, 0.0, 2 * np.pi / m * np.log(np.where(diag, 1.0, four_sin2)))
    return _assemble(np.sin(s), np.cos(s), four_sin2, weights, diag)


def log_weights(x: np.ndarray, m: int):
    """(log-rule weight matrix, 4 sin^2((x-y)/2), diagonal mask) for angles ``x`` against the grid."""
    x = np.asarray(x, dtype=float).reshape(-1)
    s = x[:, None] - 2 * np.pi * np.arange(m)[None, :] / m
    half = np.sin(s / 2)
    return log_kernel_weights(s, m), 4 * half**2, np.abs(half) < 1e-13


def is_grid(x: np.ndarray, m: int) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    return x.size == m and np.allclose(x, 2 * np.pi * np.arange(m) / m, rtol=0, atol=1e-15)
