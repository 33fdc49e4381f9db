"""Dual Orlicz mixed volumes of a star body K against a second body L.

All integrals use the dual conical measure of K sampled once on a fixed
grid, so comparisons between different L for the same context are
consistent to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bodies import DualConicalMeasure, StarBody, dual_conical, quadrature_volume
from .errors import DomainError, NumericError
from .orlicz import OrliczFunction, WeightedSamples, orlicz_norm, phi_mean
from .quadrature import SphericalGrid, build_grid


@dataclass(frozen=True, eq=False)
class FunctionalContext:
    K: StarBody
    grid: SphericalGrid
    phi: OrliczFunction
    measure: DualConicalMeasure = field(init=False, repr=False)

    def __post_init__(self):
        if self.grid.dim != self.K.dim:
            raise DomainError("grid and body dimensions differ")
        object.__setattr__(self, "measure", dual_conical(self.K, self.grid))

    @property
    def volume(self) -> float:
        """Quadrature volume of K (total dual conical mass)."""
        return self.measure.total

    @property
    def rho(self) -> np.ndarray:
        return self.measure.rho

    def ratios(self, L) -> np.ndarray:
        """rho_K / rho_L on the grid nodes; L is a StarBody or an Ellipsoid."""
        if L.dim != self.K.dim:
            raise DomainError("bodies must have the same dimension")
        return self.rho / np.asarray(L.radial(self.grid.nodes), dtype=float)

    def samples(self, L) -> WeightedSamples:
        return WeightedSamples(self.ratios(L), self.measure.masses)

    def with_phi(self, phi: OrliczFunction) -> "FunctionalContext":
        ctx = object.__new__(FunctionalContext)
        object.__setattr__(ctx, "K", self.K)
        object.__setattr__(ctx, "grid", self.grid)
        object.__setattr__(ctx, "phi", phi)
        object.__setattr__(ctx, "measure", self.measure)
        return ctx


def make_context(K: StarBody, phi: OrliczFunction, grid: SphericalGrid | None = None):
    return FunctionalContext(K, grid if grid is not None else build_grid(K.dim), phi)


def dual_orlicz_mixed_volume(ctx: FunctionalContext, L) -> float:
    """sum_i m_i phi(rho_K(u_i) / rho_L(u_i)) against the dual conical masses of K."""
    with np.errstate(over="ignore", invalid="ignore"):
        v = ctx.phi.value(ctx.ratios(L))
    if not np.all(np.isfinite(v)):
        raise NumericError("phi overflowed on rho_K / rho_L; rescale the bodies")
    return float(np.dot(ctx.measure.masses, v))


def normalized_dual_volume(ctx: FunctionalContext, L) -> float:
    """phi^{-1} of the dual Orlicz mixed volume divided by V(K)."""
    return phi_mean(ctx.samples(L), ctx.phi)


def o_phi(ctx: FunctionalContext, L) -> float:
    """Orlicz norm of rho_K / rho_L under the dual conical measure of K."""
    return orlicz_norm(ctx.samples(L), ctx.phi)


def sup_ratio(ctx: FunctionalContext, L) -> float:
    """max_i rho_K(u_i) / rho_L(u_i), the p -> infinity limit of the functionals."""
    return float(ctx.ratios(L).max())


def quadrature_tolerance(K: StarBody, grid: SphericalGrid, factor: float = 5.0,
                         floor: float = 1e-12) -> float:
    """Relative volume change when the grid resolution is doubled, times ``factor``.

    This is the error budget used for the inequality checks.
    """
    finer = build_grid(grid.dim, 2 * grid.resolution, grid.scheme, grid.seed) \
        if grid.resolution else None
    if finer is None:
        return floor
    v0 = quadrature_volume(K, grid)
    v1 = quadrature_volume(K, finer)
    return max(factor * abs(v1 - v0) / abs(v1), floor)
