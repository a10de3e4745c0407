import numpy as np
import pytest

from vstate.boundary import FourierBoundary, PatchState
from vstate.linearization import (
    OMEGA_DIRECTION,
    bifurcation_omega,
    disk_multiplier_numeric,
    fit_multiplier_scale,
    jacobian,
    jacobian_kernel,
    multiplier_root,
    omega_cross_derivative,
    pack,
    spectrum,
    unknown_labels,
    unpack,
    worker_count,
)


def analytic_multiplier(omega, k):
    # frozen from the measured disk linearization
    return (k - 1) / 2 - k * omega


@pytest.mark.parametrize("omega", [0.0, 0.25, 0.4])
@pytest.mark.parametrize("k", [1, 2, 3, 6])
def test_multiplier_oracle(omega, k):
    assert disk_multiplier_numeric(omega, k) == pytest.approx(analytic_multiplier(omega, k), abs=1e-8)


def test_mode_two_is_the_kernel_at_quarter():
    assert abs(disk_multiplier_numeric(0.25, 2)) < 1e-8
    assert abs(disk_multiplier_numeric(0.25, 1)) >= 0.05


def test_multiplier_is_affine_in_omega():
    k = 4
    mus = [disk_multiplier_numeric(om, k) for om in (0.1, 0.2, 0.3)]
    assert mus[2] - mus[1] == pytest.approx(mus[1] - mus[0], abs=1e-9)
    assert (mus[1] - mus[0]) / 0.1 == pytest.approx(-k, abs=1e-6)


def test_step_bounds():
    with pytest.raises(ValueError):
        disk_multiplier_numeric(0.25, 2, h=1e-3)
    with pytest.raises(ValueError):
        disk_multiplier_numeric(0.25, 0)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_cross_derivative(k):
    assert omega_cross_derivative(k) == pytest.approx(-k, abs=1e-6)


def test_fitted_scale():
    c, rel = fit_multiplier_scale()
    assert c == pytest.approx(-0.5, abs=1e-8)
    assert rel < 1e-6


@pytest.mark.parametrize("m, expected", [(2, 0.25), (3, 1 / 3), (4, 0.375)])
def test_bifurcation_points(m, expected):
    assert bifurcation_omega(m) == expected
    assert multiplier_root(m) == pytest.approx(expected, abs=1e-8)


def test_bifurcation_rejects_translation_mode():
    with pytest.raises(ValueError):
        bifurcation_omega(1)
    with pytest.raises(ValueError):
        multiplier_root(1)


def test_spectrum_kernel_at_quarter():
    rep = spectrum(0.25, n_modes=16)
    assert set(rep.kernel_modes) == {OMEGA_DIRECTION, "cos 2theta", "sin 2theta"}
    assert [k for k, _ in rep.rows()] == list(range(1, 17))


def test_spectrum_away_from_bifurcation_has_no_mode_kernel():
    rep = spectrum(0.3, n_modes=8)
    assert rep.kernel_modes == (OMEGA_DIRECTION,)


def test_pack_unpack_round_trip():
    p = PatchState(FourierBoundary.from_modes(3, cos={2: 0.1}, sin={1: 0.02}), 0.3)
    q = unpack(p, pack(p))
    assert q.omega == p.omega and q.boundary.allclose(p.boundary, atol=0)
    assert unknown_labels(2) == ["cos 1theta", "cos 2theta", "sin 1theta", "sin 2theta", OMEGA_DIRECTION]


def test_jacobian_at_disk_is_diagonal_multipliers():
    n = 8
    jac = jacobian(PatchState(FourierBoundary.disk(1.0, n), 0.3))
    a = jac.matrix
    mus = np.array([analytic_multiplier(0.3, k) for k in range(1, n + 1)])
    # d(sin_k)/d(cos_k) = mu_k and d(cos_k)/d(sin_k) = -mu_k
    assert np.allclose(a[n:, :n], np.diag(mus), atol=1e-5)
    assert np.allclose(a[:n, n:2 * n], -np.diag(mus), atol=1e-5)
    assert np.allclose(a[:, 2 * n], 0, atol=1e-10)


def test_full_jacobian_kernel_at_quarter():
    jac = jacobian(PatchState(FourierBoundary.disk(1.0, 8), 0.25))
    assert set(jacobian_kernel(jac)) == {OMEGA_DIRECTION, "cos 2theta", "sin 2theta"}


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("VSTATE_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("VSTATE_THREADS", "junk")
    assert worker_count() == 1
