"""Command-line front end: ``vstate solve|continue|spectrum|verify|report|scan``.

Every command writes its artifact plus a ``<artifact>.manifest.json`` run
manifest. Exit codes: 0 success, 1 usage or input error, 2 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import (
    FourierBoundary,
    PatchFormatError,
    PatchState,
    collocation_angles,
    from_ellipse,
    normalize_mean,
    read_patch,
    write_patch,
)
from .contour import SingularGeometryError, eval_contour_residual
from .geometry import center_of_vorticity, shape_report, symmetric_difference_area
from .linearization import multiplier_root, spectrum
from .solver import ConvergenceError, SolveConfig, continue_branch, newton_solve, rigidity_scan
from .stream import boundary_flatness, contour_ode_residual, gradient_deviation, steiner_integral

EXIT_OK, EXIT_INPUT, EXIT_DIVERGED = 0, 1, 2


class InputError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for non-convergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int | None
    version: str
    started: str
    finished: str = ""
    status: str = "ok"
    residual: float | None = None
    residual_history: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(output) -> Path:
    p = Path(output)
    return p.with_name(p.name + ".manifest.json")


def _write_manifest(manifest: RunManifest, primary: Path, extra=()) -> None:
    manifest.finished = _now()
    for path in (primary, *extra):
        if Path(path).exists():
            manifest.outputs[str(path)] = sha256(path)
    manifest_path(primary).write_text(json.dumps(manifest.to_dict(), indent=2) + "\n", encoding="utf-8")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _write_json(data, path: Path) -> None:
    path.write_text(json.dumps(data, indent=2, default=_json_default) + "\n", encoding="utf-8")


# ---- argument parsing helpers ----

_PERTURB = re.compile(r"^(cos|sin)(\d+):([-+0-9.eE]+)$")


def parse_perturbation(spec: str | None) -> tuple[dict, dict]:
    """``"cos2:0.3,sin3:-0.01"`` -> ({2: 0.3}, {3: -0.01})."""
    cos, sin = {}, {}
    if not spec:
        return cos, sin
    for item in spec.split(","):
        m = _PERTURB.match(item.strip())
        if not m:
            raise InputError("--perturb", f"expected cos<k>:<amp> or sin<k>:<amp>, got {item!r}")
        kind, k, amp = m.group(1), int(m.group(2)), float(m.group(3))
        if k < 1:
            raise InputError("--perturb", "mode index must be >= 1")
        (cos if kind == "cos" else sin)[k] = amp
    return cos, sin


def initial_state(init: str, omega: float | None, modes: int, perturb: str | None,
                  manifest: RunManifest) -> PatchState:
    """Initial PatchState from ``disk``, ``ellipse:a,b`` or a patch file."""
    if init == "disk":
        b = FourierBoundary.disk(1.0, modes)
    elif init.startswith("ellipse:"):
        try:
            a, c = (float(x) for x in init[len("ellipse:"):].split(","))
        except ValueError:
            raise InputError("--init", f"expected ellipse:a,b, got {init!r}") from None
        if not (a > 0 and c > 0):
            raise InputError("--init", "ellipse semi-axes must be positive")
        try:
            b = from_ellipse(a, c, modes)
        except ValueError as exc:
            raise InputError("--init", str(exc)) from None
    else:
        patch = read_patch(init)
        manifest.inputs[init] = sha256(init)
        b = patch.boundary.with_modes(max(modes, patch.boundary.n_modes))
        omega = patch.omega if omega is None else omega
    if omega is None:
        raise InputError("--omega", "required unless --init is a patch file")
    cos, sin = parse_perturbation(perturb)
    if cos or sin:
        top = max([*cos, *sin])
        if top > b.n_modes:
            raise InputError("--perturb", f"mode {top} exceeds --modes {b.n_modes}")
        a = np.array(b.cos_coeffs)
        s = np.array(b.sin_coeffs)
        for k, v in cos.items():
            a[k - 1] += v
        for k, v in sin.items():
            s[k - 1] += v
        try:
            b = FourierBoundary(b.mean_radius, a, s)
        except ValueError as exc:
            raise InputError("--perturb", str(exc)) from None
    return PatchState(normalize_mean(b), omega)


def _load(path: str, manifest: RunManifest) -> PatchState:
    patch = read_patch(path)
    manifest.inputs[path] = sha256(path)
    return patch


# ---- commands ----

def cmd_solve(args, manifest: RunManifest) -> int:
    out = Path(args.output)
    start = initial_state(args.init, args.omega, args.modes, args.perturb, manifest)
    cfg = SolveConfig(newton_tol=args.tol, symmetry=args.symmetry, free_omega=args.free_omega,
                      max_iters=args.max_iters)
    try:
        result = newton_solve(start, cfg)
    except ConvergenceError as exc:
        manifest.status = "diverged"
        manifest.residual_history = list(exc.history)
        manifest.residual = exc.history[-1] if exc.history else None
        _write_manifest(manifest, out)
        print(f"vstate solve: {exc}", file=sys.stderr)
        print("residual history: " + " ".join(f"{r:.3e}" for r in exc.history), file=sys.stderr)
        return EXIT_DIVERGED
    write_patch(result.state, out)
    manifest.residual = result.residual
    manifest.residual_history = list(result.residual_history)
    _write_manifest(manifest, out)
    print(f"converged in {result.iterations} iterations: omega={result.state.omega:.12g} "
          f"residual={result.residual:.3e} -> {out}")
    return EXIT_OK


BRANCH_COLUMNS = ("step", "arclength", "omega", "amplitude", "residual", "classification")


def cmd_continue(args, manifest: RunManifest) -> int:
    out = Path(args.output)
    cfg = SolveConfig(newton_tol=args.tol, symmetry=args.symmetry)
    try:
        records = continue_branch(args.m, args.steps, args.ds, cfg, n_modes=args.modes)
    except ConvergenceError as exc:
        manifest.status = "diverged"
        manifest.residual_history = list(exc.history)
        _write_manifest(manifest, out)
        print(f"vstate continue: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(BRANCH_COLUMNS)
        for i, r in enumerate(records):
            w.writerow([i, repr(r.arclength), repr(r.omega), repr(r.amplitude), repr(r.residual),
                        r.classification])
    extra = []
    if args.plot_data:
        extra.append(_branch_plot_data(records, Path(args.plot_data), args.samples))
    manifest.residual = max(r.residual for r in records)
    if len(records) < args.steps:
        manifest.status = "partial"
    _write_manifest(manifest, out, extra)
    if len(records) < args.steps:
        print(f"vstate continue: branch stopped after {len(records)} of {args.steps} steps",
              file=sys.stderr)
        return EXIT_DIVERGED
    print(f"{len(records)} branch points -> {out}")
    return EXIT_OK


def _branch_plot_data(records, path: Path, samples: int) -> Path:
    theta = collocation_angles(samples)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("step", "theta", "x", "y"))
        for i, r in enumerate(records):
            pts = r.boundary.points(theta)
            for t, (x, y) in zip(theta, pts):
                w.writerow([i, repr(float(t)), repr(float(x)), repr(float(y))])
    return path


def cmd_spectrum(args, manifest: RunManifest) -> int:
    out = Path(args.output)
    rep = spectrum(args.omega, n_modes=args.modes)
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("k", "mu_k", "omega_root_k"))
        for k, mu in rep.rows():
            root = 0.0 if k == 1 else multiplier_root(k, n_modes=args.modes)
            w.writerow([k, repr(mu), repr(root)])
    _write_manifest(manifest, out)
    print(f"kernel at omega={args.omega}: {', '.join(rep.kernel_modes)} -> {out}")
    return EXIT_OK


def steiner_ratio(b: FourierBoundary, n_points: int = 8) -> float:
    """Largest Steiner ratio over the center of vorticity and a ring of interior points."""
    c = center_of_vorticity(b)
    theta = collocation_angles(n_points)
    ring = 0.5 * np.min(b.radius(collocation_angles(256))) * np.stack([np.cos(theta), np.sin(theta)], -1)
    return max(steiner_integral(b, x)[1] for x in np.vstack([c[None], ring]))


def cmd_verify(args, manifest: RunManifest) -> int:
    out = Path(args.output)
    p = _load(args.input, manifest)
    p = PatchState(normalize_mean(p.boundary), p.omega)
    dev = gradient_deviation(p)
    delta = symmetric_difference_area(p.boundary, FourierBoundary.disk(1.0, p.boundary.n_modes))
    report = {
        "omega": p.omega,
        "residual_sup_norm": eval_contour_residual(p).sup_norm,
        "boundary_flatness": boundary_flatness(p),
        "contour_ode_residual": contour_ode_residual(p),
        "gradient_deviation": dev.gradient,
        "radial_deviation": dev.radial,
        "angular_deviation": dev.angular,
        "sym_diff_to_unit_disk": delta,
        "steiner_ratio": steiner_ratio(p.boundary),
        "steiner_bound": 2 * math.sqrt(math.pi),
    }
    _write_json(report, out)
    manifest.residual = report["residual_sup_norm"]
    _write_manifest(manifest, out)
    print(json.dumps(report, indent=2, default=_json_default))
    return EXIT_OK


def cmd_report(args, manifest: RunManifest) -> int:
    out = Path(args.output)
    p = _load(args.input, manifest)
    report = {"omega": p.omega, **shape_report(p.boundary, args.tol).to_dict()}
    _write_json(report, out)
    _write_manifest(manifest, out)
    print(json.dumps(report, indent=2, default=_json_default))
    return EXIT_OK


def cmd_scan(args, manifest: RunManifest) -> int:
    out = Path(args.output)
    rep = rigidity_scan(args.delta, args.trials, args.seed, n_modes=args.modes,
                        omega_center=args.omega_center)
    _write_json(rep.to_dict(), out)
    _write_manifest(manifest, out)
    print(json.dumps({"counts": rep.counts, "others": [o.trial for o in rep.others]}))
    return EXIT_OK


# ---- entry point ----

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vstate", description="Uniformly rotating vortex patches (V-states).")
    parser.add_argument("--version", action="version", version=f"vstate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="Newton solve of the contour equation")
    p.add_argument("--omega", type=float, help="angular velocity (default: from --init file)")
    p.add_argument("--init", default="disk", help="disk | ellipse:a,b | patch.json")
    p.add_argument("--perturb", help="added modes, e.g. cos2:0.05,sin3:0.01")
    p.add_argument("--modes", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=25)
    p.add_argument("--symmetry", choices=("full", "even_cosine"), default="full")
    p.add_argument("--free-omega", action="store_true", help="let omega move (min-norm steps)")
    p.add_argument("--output", default="patch.json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("continue", help="pseudo-arclength continuation of the m-fold branch")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--ds", type=float, default=0.01)
    p.add_argument("--modes", type=int, default=32)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--symmetry", choices=("full", "even_cosine"), default="even_cosine")
    p.add_argument("--output", default="branch.csv")
    p.add_argument("--plot-data", help="CSV of boundary samples for every branch point")
    p.add_argument("--samples", type=int, default=256)
    p.set_defaults(func=cmd_continue)

    p = sub.add_parser("spectrum", help="disk multipliers mu_k and their roots")
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--modes", type=int, default=16)
    p.add_argument("--output", default="spectrum.csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("verify", help="stream-function certificate for a patch")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="verify.json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="shape report for a patch")
    p.add_argument("--input", required=True)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--output", default="report.json")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("scan", help="randomized rigidity scan near the disk at omega = 1/4")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--modes", type=int, default=16)
    p.add_argument("--omega-center", type=float, default=0.25)
    p.add_argument("--output", default="scan.json")
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = RunManifest(command=args.command, params=params, seed=params.get("seed"),
                           version=__version__, started=_now())
    try:
        return args.func(args, manifest)
    except (PatchFormatError, InputError) as exc:
        print(f"vstate {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SingularGeometryError as exc:
        print(f"vstate {args.command}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ConvergenceError as exc:
        print(f"vstate {args.command}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValueError as exc:
        print(f"vstate {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
