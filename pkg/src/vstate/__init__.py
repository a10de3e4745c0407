"""Uniformly rotating vortex patches (V-states) near the Rankine vortex."""

__version__ = "0.1.0"

from .boundary import (
    FourierBoundary,
    PatchFormatError,
    PatchState,
    from_ellipse,
    kirchhoff_omega,
    normalize_mean,
    read_patch,
    rotate,
    write_patch,
)
from .contour import (
    ResidualField,
    SingularGeometryError,
    eval_contour_residual,
    eval_F1,
    eval_F2,
    eval_F3,
)
from .geometry import (
    ShapeReport,
    area,
    center_of_vorticity,
    classify,
    radial_bounds,
    shape_report,
    symmetric_difference_area,
)
from .linearization import (
    bifurcation_omega,
    disk_multiplier_numeric,
    jacobian,
    jacobian_kernel,
    multiplier_root,
    omega_cross_derivative,
    spectrum,
)
from .quadrature import QuadratureConfig
from .solver import (
    ConvergenceError,
    NewtonDivergence,
    SingularJacobianError,
    SolveConfig,
    amplitude_constrained_solve,
    continue_branch,
    newton_solve,
    rigidity_scan,
)
from .stream import (
    boundary_flatness,
    contour_ode_residual,
    gradient_deviation,
    laplacian_probe,
    relative_stream,
    steiner_integral,
)
