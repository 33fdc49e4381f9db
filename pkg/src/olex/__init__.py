"""Orlicz-Legendre ellipsoids of star bodies, computed on spherical quadrature grids."""

from .bodies import (
    DualConicalMeasure,
    StarBody,
    ball,
    body_from_spec,
    cuboid,
    dual_conical,
    ellipsoid_body,
    hull_support,
    lp_ball,
    quadrature_volume,
    radial_grid,
    transform,
    volume,
)
from .ellipsoid import (
    Ellipsoid,
    apply_linear,
    canonical_spd_factor,
    max_principal_radius,
    polar,
    shape_distance,
)
from .errors import (
    CapabilityError,
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    InternalError,
    NumericError,
    OlexError,
)
from .functionals import (
    FunctionalContext,
    dual_orlicz_mixed_volume,
    make_context,
    normalized_dual_volume,
    o_phi,
    quadrature_tolerance,
    sup_ratio,
)
from .loewner import loewner
from .orlicz import (
    OrliczFunction,
    WeightedSamples,
    check_orlicz,
    exp_minus_one,
    orlicz_norm,
    phi_from_spec,
    phi_mean,
    power,
    power_of,
    table,
)
from .quadrature import SphericalGrid, ball_volume, build_grid, integrate, sphere_area
from .solver import (
    MuPhiMeasure,
    SolveOptions,
    SolveReport,
    isotropic_position,
    isotropy_residual,
    legendre_closed_form,
    limit_sweep,
    mu_phi,
    orlicz_legendre,
    p1_gradient,
    solve_p1,
    solve_p2,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
