"""Deterministic quadrature rules on the unit sphere S^{n-1}.

Every grid is stored as a base half followed by its mirror image, so that
``nodes[i + half] == -nodes[i]`` with equal weights.  :func:`integrate`
sums mirrored pairs first, which makes the integral of ``f(u)`` and of
``f(-u)`` bitwise identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericError

SCHEMES = ("uniform_circle", "fibonacci_sphere", "gauss_product", "monte_carlo_seeded")

DEFAULT_SCHEME = {2: "uniform_circle", 3: "gauss_product"}
# base (pre-mirroring) node counts; totals are twice these
DEFAULT_RESOLUTION = {2: 1024, 3: 2048}
DEFAULT_RESOLUTION_HIGH_DIM = 10000

MIN_RESOLUTION = 8


def sphere_area(n: int) -> float:
    """Surface measure of S^{n-1}."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int) -> float:
    """Volume of the Euclidean unit ball in R^n."""
    return sphere_area(n) / n


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    """Nodes and positive weights on S^{n-1}, centrally symmetric by layout."""

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    scheme: str = "custom"
    resolution: int = 0
    seed: int | None = None
    _half: int = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != self.dim:
            raise ConfigurationError(f"nodes must have shape (N, {self.dim})")
        if weights.shape != (nodes.shape[0],):
            raise ConfigurationError("one weight per node required")
        if nodes.shape[0] % 2:
            raise ConfigurationError("symmetric grid needs an even node count")
        if np.any(np.abs(np.linalg.norm(nodes, axis=1) - 1.0) > 1e-12):
            raise ConfigurationError("grid nodes must be unit vectors")
        if np.any(weights <= 0):
            raise ConfigurationError("grid weights must be positive")
        half = nodes.shape[0] // 2
        if not (np.array_equal(nodes[half:], -nodes[:half])
                and np.array_equal(weights[half:], weights[:half])):
            raise ConfigurationError("grid must be stored as base half followed by its mirror")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "_half", half)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def half(self) -> int:
        return self._half

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "scheme": self.scheme,
            "resolution": self.resolution,
            "nodes": self.size,
            "seed": self.seed,
        }


def _mirror(base: np.ndarray, base_weights: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    base = base / np.linalg.norm(base, axis=1, keepdims=True)
    nodes = np.concatenate([base, -base])
    weights = np.concatenate([base_weights, base_weights])
    weights = weights * (sphere_area(n) / weights.sum())
    half = base.shape[0]
    # normalisation can break pairwise equality in the last bit
    weights[half:] = weights[:half]
    return nodes, weights


def _uniform_circle(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    theta = np.pi * np.arange(resolution) / resolution
    base = np.column_stack([np.cos(theta), np.sin(theta)])
    return base, np.ones(resolution)


def _fibonacci_hemisphere(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(resolution)
    z = (k + 0.5) / resolution
    azimuth = k * np.pi * (3.0 - math.sqrt(5.0))
    r = np.sqrt(1.0 - z * z)
    base = np.column_stack([r * np.cos(azimuth), r * np.sin(azimuth), z])
    return base, np.ones(resolution)


def _gauss_product(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    # Gauss-Legendre in z times the trapezoid rule in azimuth; nz and na even so
    # that the rule is closed under u -> -u.  About four azimuths per z node
    # was the most accurate split on elongated ellipsoids.
    nz = max(2, 2 * round(math.sqrt(resolution / 4.0)))
    na = 2 * math.ceil(resolution / nz)
    z, wz = np.polynomial.legendre.leggauss(nz)
    upper = z > 0
    z, wz = z[upper], wz[upper]
    azimuth = (np.arange(na) + 0.5) * 2.0 * np.pi / na
    zz, aa = np.meshgrid(z, azimuth, indexing="ij")
    r = np.sqrt(1.0 - zz * zz)
    base = np.column_stack([(r * np.cos(aa)).ravel(), (r * np.sin(aa)).ravel(), zz.ravel()])
    weights = np.outer(wz, np.full(na, 2.0 * np.pi / na)).ravel()
    return base, weights


def _monte_carlo(dim: int, resolution: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((resolution, dim))
    return base, np.ones(resolution)


def build_grid(dim: int, resolution: int | None = None, scheme: str | None = None,
               seed: int | None = None) -> SphericalGrid:
    """Build a centrally symmetric quadrature grid on S^{dim-1}.

    ``resolution`` counts base nodes before mirroring, so the grid holds
    ``2 * resolution`` nodes (``gauss_product`` rounds to a full product
    rule).  Weights are rescaled to sum to the exact sphere area.
    """
    if dim < 2:
        raise ConfigurationError("dimension must be at least 2")
    if scheme is None:
        scheme = DEFAULT_SCHEME.get(dim, "monte_carlo_seeded")
    if resolution is None:
        resolution = DEFAULT_RESOLUTION.get(dim, DEFAULT_RESOLUTION_HIGH_DIM)
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown quadrature scheme {scheme!r}")
    if resolution < MIN_RESOLUTION:
        raise ConfigurationError(
            f"resolution {resolution} too small to build a symmetric grid (minimum {MIN_RESOLUTION})")

    if scheme == "uniform_circle":
        if dim != 2:
            raise ConfigurationError("uniform_circle is only available for dim = 2")
        base, w = _uniform_circle(resolution)
    elif scheme == "fibonacci_sphere":
        if dim != 3:
            raise ConfigurationError("fibonacci_sphere is only available for dim = 3")
        base, w = _fibonacci_hemisphere(resolution)
    elif scheme == "gauss_product":
        if dim != 3:
            raise ConfigurationError("gauss_product is only available for dim = 3")
        base, w = _gauss_product(resolution)
    else:
        if seed is None:
            seed = 0
        base, w = _monte_carlo(dim, resolution, seed)

    nodes, weights = _mirror(base, w, dim)
    return SphericalGrid(dim=dim, nodes=nodes, weights=weights, scheme=scheme,
                         resolution=resolution, seed=seed if scheme == "monte_carlo_seeded" else None)


def integrate_values(grid: SphericalGrid, values: np.ndarray) -> float:
    """Quadrature sum for integrand values already sampled on ``grid.nodes``."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise ValueError(f"expected {grid.size} samples, got shape {values.shape}")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = int(bad[0])
        raise NumericError(
            f"integrand is not finite at node {i} ({grid.nodes[i].tolist()}): {values[i]!r}")
    h = grid.half
    return float(np.dot(grid.weights[:h], values[:h] + values[h:]))


def integrate(grid: SphericalGrid, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """Return ``sum_i w_i f(u_i)``; ``f`` maps an (N, n) node array to N values."""
    values = np.broadcast_to(np.asarray(f(grid.nodes), dtype=float), (grid.size,))
    return integrate_values(grid, values)
