"""Newton solves, amplitude-constrained solves, branch continuation and the rigidity scan.

Unknowns live in the full vector (cos_1..N, sin_1..N, omega) with unit mean
radius. Each solve chooses which entries are free; the rest are pinned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .boundary import FourierBoundary, PatchState, normalize_mean
from .contour import SingularGeometryError, eval_contour_residual
from .geometry import align_mode, classify, rotational_symmetry, symmetric_difference_area
from .linearization import bifurcation_omega, pack, parallel_map, unpack
from .quadrature import QuadratureConfig

log = logging.getLogger(__name__)

SYMMETRIES = ("full", "even_cosine")


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, history=()):
        super().__init__(message)
        self.history = tuple(history)


class NewtonDivergence(ConvergenceError):
    """Residual did not reach the tolerance within the iteration budget."""


class SingularJacobianError(ConvergenceError):
    """Jacobian is rank deficient at fixed omega; use amplitude_constrained_solve instead."""


@dataclass(frozen=True)
class SolveConfig:
    newton_tol: float = 1e-10
    max_iters: int = 25
    symmetry: str = "full"
    fix_rotation: bool = True
    damping: float = 1.0
    free_omega: bool = False
    quad_factor: int = 4
    fd_step: float = 1e-6

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.symmetry not in SYMMETRIES:
            raise ValueError(f"symmetry must be one of {SYMMETRIES}")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")

    def quadrature(self, n_modes: int) -> QuadratureConfig:
        return QuadratureConfig.for_modes(n_modes, self.quad_factor, fd_step=self.fd_step)

    @property
    def classification_tol(self) -> float:
        return 100 * self.newton_tol


@dataclass(frozen=True, eq=False)
class SolveResult:
    state: PatchState
    iterations: int
    residual_history: tuple
    quadratic_constants: tuple
    pinned_mode: int | None = None

    @property
    def residual(self) -> float:
        return self.residual_history[-1]


@dataclass(frozen=True, eq=False)
class BranchRecord:
    omega: float
    amplitude: float
    boundary: FourierBoundary
    residual: float
    classification: str
    arclength: float
    classification_residual: float = math.nan

    @property
    def state(self) -> PatchState:
        return PatchState(self.boundary, self.omega)


class _System:
    """Residual rows and free columns of the contour equation for one solve."""

    def __init__(self, template: PatchState, q: QuadratureConfig, free: np.ndarray,
                 rows: np.ndarray):
        self.template = template
        self.q = q
        self.free = free
        self.rows = rows

    def state(self, u_full):
        return unpack(self.template, u_full)

    def residual(self, u_full):
        field_ = eval_contour_residual(self.state(u_full), self.q)
        return field_.coefficient_vector[self.rows], field_.sup_norm

    def jacobian(self, u_full):
        h = self.q.fd_step

        def column(j):
            du = np.zeros_like(u_full)
            du[j] = h
            rp, _ = self.residual(u_full + du)
            rm, _ = self.residual(u_full - du)
            return (rp - rm) / (2 * h)

        return np.column_stack(parallel_map(column, self.free))


def _layout(n: int, symmetry: str, pinned: dict, free_omega: bool):
    fixed = set(pinned)
    if symmetry == "even_cosine":
        fixed |= set(range(n, 2 * n))
        rows = np.arange(n, 2 * n)
    else:
        rows = np.arange(2 * n)
    if not free_omega:
        fixed.add(2 * n)
    free = np.array([j for j in range(2 * n + 1) if j not in fixed], dtype=int)
    return free, rows


def _linear_tail(history, window: int = 6, ratio: float = 0.2) -> bool:
    # full Newton steps near an isolated root contract superlinearly
    if len(history) <= window:
        return False
    tail = history[-window - 1:]
    return all(tail[i + 1] > ratio * tail[i] for i in range(window))


def _newton(system: _System, u0: np.ndarray, cfg: SolveConfig, constraint=None,
            allow_singular: bool = True):
    """Gauss-Newton on the free entries of ``u0``.

    ``constraint`` is an optional linear equation (a, b) on the free entries,
    appended as one more row (used by the arclength corrector).
    """
    u = u0.copy()
    history = []
    best = math.inf
    stall = 0
    for it in range(cfg.max_iters + 1):
        try:
            r, sup = system.residual(u)
        except SingularGeometryError as exc:
            raise NewtonDivergence(f"singular geometry at iteration {it}: {exc}", history) from exc
        history.append(sup)
        c_err = 0.0
        if constraint is not None:
            a, b = constraint
            c_err = float(a @ u[system.free] - b)
        if sup <= cfg.newton_tol and abs(c_err) <= cfg.newton_tol:
            return u, it, history
        if it == cfg.max_iters:
            break
        if not allow_singular and cfg.damping == 1.0 and _linear_tail(history):
            raise SingularJacobianError(
                "Newton converges only linearly at fixed omega: the root is not isolated "
                "(bifurcation point?); use amplitude_constrained_solve",
                history,
            )
        if sup < 0.9 * best:
            best, stall = sup, 0
        else:
            stall += 1
            if stall >= 4:
                break
        jac = system.jacobian(u)
        rhs = r
        if constraint is not None:
            jac = np.vstack([jac, constraint[0]])
            rhs = np.append(r, c_err)
        svals = np.linalg.svd(jac, compute_uv=False)
        if (not allow_singular and jac.shape[0] >= jac.shape[1]
                and svals[-1] <= 1e-10 * svals[0]):
            raise SingularJacobianError(
                "Jacobian is rank deficient at fixed omega (bifurcation point?); "
                "use amplitude_constrained_solve",
                history,
            )
        step = np.linalg.lstsq(jac, rhs, rcond=1e-12)[0]
        lam = cfg.damping
        for _ in range(8):
            trial = u.copy()
            trial[system.free] -= lam * step
            try:
                system.state(trial)
                break
            except ValueError:
                lam *= 0.5
        else:
            raise NewtonDivergence("Newton step left the star-shaped class", history)
        u = trial
    raise NewtonDivergence(
        f"no convergence to {cfg.newton_tol:g} in {len(history) - 1} iterations "
        f"(last residual {history[-1]:.3e})",
        history,
    )


def _quadratic_constants(history):
    return tuple(
        history[i + 1] / history[i] ** 2
        for i in range(len(history) - 1)
        if history[i] > 0
    )


def _dominant_mode(b: FourierBoundary) -> int:
    if b.n_modes < 2:
        return 1
    amp = np.hypot(b.cos_coeffs[1:], b.sin_coeffs[1:])
    return 2 if not np.any(amp > 0) else int(np.argmax(amp)) + 2


def newton_solve(initial: PatchState, cfg: SolveConfig | None = None,
                 q: QuadratureConfig | None = None, pin_mode: int | None = None) -> SolveResult:
    """Solve F(omega, V) = 0 starting from ``initial``.

    With ``fix_rotation`` the initial boundary is first rotated so the sine part
    of the pinned mode vanishes, and that sine coefficient is held at zero.
    Omega is held fixed unless ``cfg.free_omega``, in which case the
    underdetermined system is solved by minimum-norm Gauss-Newton steps.
    """
    cfg = SolveConfig() if cfg is None else cfg
    b = normalize_mean(initial.boundary)
    n = b.n_modes
    q = cfg.quadrature(n) if q is None else q
    pinned = {}
    m = None
    if cfg.symmetry == "even_cosine":
        b = FourierBoundary(1.0, b.cos_coeffs, np.zeros(n))
    elif cfg.fix_rotation and n >= 1:
        m = _dominant_mode(b) if pin_mode is None else pin_mode
        if m > n:
            raise ValueError(f"pinned mode {m} exceeds the {n} available modes")
        b = align_mode(b, m)
        pinned[n + m - 1] = 0.0
    start = PatchState(b, initial.omega)
    free, rows = _layout(n, cfg.symmetry, pinned, cfg.free_omega)
    system = _System(start, q, free, rows)
    u0 = pack(start)
    for j, val in pinned.items():
        u0[j] = val
    u, its, history = _newton(system, u0, cfg, allow_singular=cfg.free_omega)
    log.debug("newton converged in %d iterations: %s", its, history)
    return SolveResult(system.state(u), its, tuple(history), _quadratic_constants(history), m)


def _record(state: PatchState, m: int, residual: float, arclength: float,
            cfg: SolveConfig) -> BranchRecord:
    try:
        label, resid = classify(state.boundary, cfg.classification_tol)
    except ValueError:
        label, resid = "other", math.nan
    return BranchRecord(
        omega=state.omega,
        amplitude=float(state.boundary.cos_coeffs[m - 1]),
        boundary=state.boundary,
        residual=residual,
        classification=label,
        arclength=arclength,
        classification_residual=resid,
    )


def _branch_system(m: int, n_modes: int, cfg: SolveConfig, q: QuadratureConfig | None,
                   pin_amplitude: bool):
    q = cfg.quadrature(n_modes) if q is None else q
    pinned = {n_modes + m - 1: 0.0} if cfg.symmetry == "full" else {}
    if pin_amplitude:
        pinned[m - 1] = None
    free, rows = _layout(n_modes, cfg.symmetry, pinned, free_omega=True)
    template = PatchState(FourierBoundary.disk(1.0, n_modes), bifurcation_omega(m))
    return _System(template, q, free, rows)


def amplitude_constrained_solve(m: int, c: float, omega_guess: float | None = None,
                                cfg: SolveConfig | None = None, n_modes: int = 32,
                                q: QuadratureConfig | None = None,
                                max_amplitude: float = 0.3,
                                initial: PatchState | None = None) -> BranchRecord:
    """Solve for omega and every coefficient except the cos(m theta) projection, which is pinned to ``c``."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if m > n_modes:
        raise ValueError(f"mode {m} exceeds n_modes={n_modes}")
    if abs(c) > max_amplitude:
        raise ValueError(f"amplitude {c} outside the resolvable range |c| <= {max_amplitude}")
    cfg = SolveConfig(symmetry="even_cosine") if cfg is None else cfg
    omega_guess = bifurcation_omega(m) if omega_guess is None else omega_guess
    system = _branch_system(m, n_modes, cfg, q, pin_amplitude=True)
    if initial is None:
        u0 = np.zeros(2 * n_modes + 1)
    else:
        u0 = pack(PatchState(normalize_mean(initial.boundary).with_modes(n_modes), initial.omega))
        if cfg.symmetry == "even_cosine":
            u0[n_modes:2 * n_modes] = 0.0
        else:
            u0[n_modes + m - 1] = 0.0
    u0[m - 1] = c
    u0[2 * n_modes] = omega_guess
    u, _, history = _newton(system, u0, cfg)
    return _record(system.state(u), m, history[-1], math.nan, cfg)


def continue_branch(m: int, steps: int, ds: float = 0.01, cfg: SolveConfig | None = None,
                    n_modes: int = 32, q: QuadratureConfig | None = None,
                    ds_min: float = 1e-4, ds_max: float | None = None) -> list:
    """Pseudo-arclength continuation of the m-fold branch leaving the disk at (m-1)/(2m).

    The first two records come from amplitude-constrained solves at c = ds, 2 ds;
    later ones use a secant predictor and a Newton corrector on the system
    bordered by the arclength equation. A failed step halves ``ds``; below
    ``ds_min`` the partial branch is returned.
    """
    cfg = SolveConfig(symmetry="even_cosine") if cfg is None else cfg
    ds_max = 4 * ds if ds_max is None else ds_max
    system = _branch_system(m, n_modes, cfg, q, pin_amplitude=False)
    free = system.free
    disk = np.zeros(2 * n_modes + 1)
    disk[2 * n_modes] = bifurcation_omega(m)

    first = amplitude_constrained_solve(m, ds, cfg=cfg, n_modes=n_modes, q=system.q)
    second = amplitude_constrained_solve(m, 2 * ds, omega_guess=first.omega, cfg=cfg,
                                         n_modes=n_modes, q=system.q, initial=first.state)
    u_prev, u_curr = pack(first.state), pack(second.state)
    s0 = float(np.linalg.norm((u_prev - disk)[free]))
    s1 = s0 + float(np.linalg.norm((u_curr - u_prev)[free]))
    records = [replace(first, arclength=s0), replace(second, arclength=s1)]
    step = ds
    while len(records) < steps:
        secant = (u_curr - u_prev)[free]
        tangent = secant / np.linalg.norm(secant)
        guess = u_curr.copy()
        guess[free] += step * tangent
        constraint = (tangent, float(tangent @ u_curr[free]) + step)
        try:
            u_new, its, history = _newton(system, guess, replace(cfg, max_iters=min(cfg.max_iters, 10)),
                                          constraint=constraint)
        except ConvergenceError as exc:
            step *= 0.5
            log.info("continuation step failed (%s); ds -> %g", exc, step)
            if step < ds_min:
                log.warning("ds fell below %g; returning partial branch", ds_min)
                break
            continue
        arclength = records[-1].arclength + float(np.linalg.norm((u_new - u_curr)[free]))
        records.append(_record(system.state(u_new), m, history[-1], arclength, cfg))
        u_prev, u_curr = u_curr, u_new
        if its <= 3:
            step = min(1.5 * step, ds_max)
    return records


def random_perturbation(rng: np.random.Generator, n_modes: int, target_sym_diff: float,
                        decay: float = 3.0) -> FourierBoundary:
    """Gaussian coefficients with k^-decay falloff, scaled so |disk delta D| hits the target."""
    k = np.arange(1, n_modes + 1)
    a = rng.standard_normal(n_modes) * k**-decay
    b = rng.standard_normal(n_modes) * k**-decay
    if target_sym_diff <= 0:
        return FourierBoundary.disk(1.0, n_modes)
    disk = FourierBoundary.disk(1.0, n_modes)
    sup = float(np.sum(np.abs(a) + np.abs(b)))
    s_max = 0.9 / sup
    g = lambda s: symmetric_difference_area(FourierBoundary(1.0, s * a, s * b), disk) - target_sym_diff
    if g(s_max) < 0:
        s = s_max
    else:
        s = brentq(g, 0.0, s_max, xtol=1e-14)
    return FourierBoundary(1.0, s * a, s * b)


@dataclass(frozen=True)
class TrialOutcome:
    trial: int
    omega_initial: float
    sym_diff_initial: float
    converged_to: str
    residual: float
    sym_diff: float
    omega: float
    classification_residual: float
    rotational_symmetry: int
    iterations: int


@dataclass
class ScanReport:
    delta: float
    trials: int
    seed: int
    omega_center: float
    outcomes: list = field(default_factory=list)

    @property
    def counts(self) -> dict:
        out = {"disk": 0, "ellipse": 0, "other": 0, "inconclusive": 0}
        for o in self.outcomes:
            out[o.converged_to] += 1
        return out

    @property
    def others(self) -> list:
        return [o for o in self.outcomes if o.converged_to == "other"]

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "trials": self.trials,
            "seed": self.seed,
            "omega_center": self.omega_center,
            "counts": self.counts,
            "others": [o.trial for o in self.others],
            "outcomes": [asdict(o) for o in self.outcomes],
        }


def _scan_trial(i: int, delta: float, seed: int, omega_center: float, n_modes: int,
                cfg: SolveConfig) -> TrialOutcome:
    rng = np.random.default_rng([seed, i])
    omega0 = omega_center + delta * (2 * rng.random() - 1)
    target = delta * rng.random()
    v = random_perturbation(rng, n_modes, target)
    disk = FourierBoundary.disk(1.0, n_modes)
    sd0 = symmetric_difference_area(v, disk)
    try:
        res = newton_solve(PatchState(v, omega0), cfg, pin_mode=2)
    except ConvergenceError as exc:
        last = exc.history[-1] if exc.history else math.nan
        return TrialOutcome(i, omega0, sd0, "inconclusive", last, math.nan, math.nan,
                            math.nan, 0, len(exc.history))
    b = res.state.boundary
    try:
        label, resid = classify(b, cfg.classification_tol)
    except ValueError:
        label, resid = "other", math.nan
    fold = rotational_symmetry(align_mode(b, 2), cfg.classification_tol)
    return TrialOutcome(i, omega0, sd0, label, res.residual, symmetric_difference_area(b, disk),
                        res.state.omega, resid, fold, res.iterations)


def rigidity_scan(delta: float, trials: int, seed: int, cfg: SolveConfig | None = None,
                  n_modes: int = 16, omega_center: float = 0.25,
                  max_delta: float = 0.05) -> ScanReport:
    """Random (omega, V) near (omega_center, disk) fed to Newton; converged shapes are classified.

    Omega is held at its drawn value: with omega free, Newton can slide to
    omega ~ 0 where translated disks are trivially steady. Each trial draws its
    own generator from (seed, trial index). Diverged trials are reported as
    inconclusive.
    """
    if delta < 0 or delta > max_delta:
        raise ValueError(f"delta must lie in [0, {max_delta}]")
    cfg = SolveConfig() if cfg is None else cfg
    report = ScanReport(delta, trials, seed, omega_center)
    report.outcomes = parallel_map(
        lambda i: _scan_trial(i, delta, seed, omega_center, n_modes, cfg), range(trials)
    )
    return report
