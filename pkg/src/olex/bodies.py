"""Star bodies about the origin, represented by their radial functions.

``radial`` accepts a single vector or an (N, n) array and is homogeneous of
degree -1, so it can be evaluated at non-unit vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, cKDTree

from ._spec import load_spec
from .errors import ConfigurationError, DomainError
from .quadrature import SphericalGrid, ball_volume, integrate_values

# bodies whose sampled radial function spans more than this ratio are rejected
MIN_RADIAL_RATIO = 1e-9


def _as_points(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != dim:
        raise DomainError(f"expected vectors of dimension {dim}, got shape {x.shape}")
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise DomainError("radial function is undefined at the origin")
    return x, norms, single


def _out(values, single):
    return float(values[0]) if single else values


def _check_invertible(T, dim):
    T = np.asarray(T, dtype=float)
    if T.shape != (dim, dim):
        raise DomainError(f"linear map must be {dim}x{dim}, got shape {T.shape}")
    det = np.linalg.det(T)
    if not np.isfinite(det) or abs(det) <= 1e-14 * max(1.0, np.abs(T).max()) ** dim:
        raise DomainError("linear map is singular")
    return T


class StarBody:
    """Common interface.  Subclasses set ``dim`` and implement ``_radial_unit`` on unit vectors."""

    kind = "abstract"
    dim: int
    #: True when the body is known to be convex and origin-symmetric.
    convex_symmetric = False

    def radial(self, x):
        x, norms, single = _as_points(x, self.dim)
        return _out(self._radial_unit(x / norms[:, None]) / norms, single)

    def _radial_unit(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def closed_form_volume(self) -> float | None:
        return None

    def to_spec(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Ball(StarBody):
    kind = "ball"
    convex_symmetric = True

    def __init__(self, r: float = 1.0, dim: int = 2):
        if not r > 0:
            raise DomainError("ball radius must be positive")
        self.r = float(r)
        self.dim = int(dim)

    def _radial_unit(self, u):
        return np.full(u.shape[0], self.r)

    def closed_form_volume(self):
        return ball_volume(self.dim) * self.r ** self.dim

    def to_spec(self):
        return {"type": "ball", "r": self.r, "dim": self.dim}


class EllipsoidBody(StarBody):
    """{x : x.Qx <= 1} for symmetric positive definite Q."""

    kind = "ellipsoid"
    convex_symmetric = True

    def __init__(self, Q):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ConfigurationError("ellipsoid shape matrix must be square")
        Q = 0.5 * (Q + Q.T)
        evals = np.linalg.eigvalsh(Q)
        if evals[0] <= 1e-12 * evals[-1]:
            raise DomainError("ellipsoid shape matrix must be positive definite")
        self.Q = Q
        self.dim = Q.shape[0]

    def _radial_unit(self, u):
        return 1.0 / np.sqrt(np.einsum("ij,jk,ik->i", u, self.Q, u))

    def closed_form_volume(self):
        return ball_volume(self.dim) / math.sqrt(np.linalg.det(self.Q))

    def to_spec(self):
        return {"type": "ellipsoid", "Q": self.Q.tolist()}


class LpBall(StarBody):
    """{x : sum |x_i / a_i|^q <= 1}; q = inf gives the box with half-widths a."""

    kind = "lp_ball"

    def __init__(self, q: float, radii):
        q = float(q)
        if not q > 0:
            raise ConfigurationError("lp_ball exponent must be positive")
        radii = np.asarray(radii, dtype=float)
        if radii.ndim != 1 or radii.size < 2 or np.any(radii <= 0):
            raise ConfigurationError("lp_ball radii must be positive, one per coordinate")
        self.q = q
        self.radii = radii
        self.dim = radii.size
        self.convex_symmetric = q >= 1

    def _radial_unit(self, u):
        y = np.abs(u) / self.radii
        if math.isinf(self.q):
            return 1.0 / y.max(axis=1)
        # scale by the max entry to avoid underflow for large q
        m = y.max(axis=1)
        return 1.0 / (m * np.sum((y / m[:, None]) ** self.q, axis=1) ** (1.0 / self.q))

    def to_spec(self):
        return {"type": "lp_ball", "q": self.q, "radii": self.radii.tolist()}


class Cuboid(LpBall):
    kind = "cuboid"

    def __init__(self, half_widths):
        super().__init__(math.inf, half_widths)

    def to_spec(self):
        return {"type": "cuboid", "a": self.radii.tolist()}


class RadialGrid(StarBody):
    """Radial function sampled at unit directions, interpolated between them.

    n = 2 uses periodic linear interpolation in the angle, n = 3 barycentric
    interpolation on the spherical Delaunay triangulation of the nodes, and
    n >= 4 the nearest node.  The last rule is discontinuous between nodes.
    """

    kind = "radial_grid"

    def __init__(self, nodes, rho):
        nodes = np.asarray(nodes, dtype=float)
        rho = np.asarray(rho, dtype=float)
        if nodes.ndim != 2 or rho.shape != (nodes.shape[0],):
            raise ConfigurationError("radial_grid needs an (M, n) node array and M radii")
        if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
            raise DomainError("radial_grid radii must be positive (origin in the interior)")
        if rho.min() < MIN_RADIAL_RATIO * rho.max():
            raise DomainError("radial_grid is too degenerate (min rho / max rho below 1e-9)")
        norms = np.linalg.norm(nodes, axis=1)
        if np.any(norms == 0):
            raise ConfigurationError("radial_grid nodes must be nonzero")
        self.nodes = nodes / norms[:, None]
        self.rho = rho
        self.dim = nodes.shape[1]
        if self.dim == 2:
            angle = np.arctan2(self.nodes[:, 1], self.nodes[:, 0])
            order = np.argsort(angle)
            self._angle = angle[order]
            self._rho_sorted = rho[order]
            if np.any(np.diff(self._angle) <= 0):
                raise ConfigurationError("radial_grid nodes must be distinct directions")
        elif self.dim == 3:
            self._setup_triangulation()
        else:
            self._tree = cKDTree(self.nodes)

    def _setup_triangulation(self):
        hull = ConvexHull(self.nodes)
        if len(hull.vertices) != self.nodes.shape[0]:
            raise ConfigurationError("radial_grid nodes must all be hull vertices of the sphere")
        tri = hull.simplices
        self._tri = tri
        self._tri_inv = np.linalg.inv(self.nodes[tri].transpose(0, 2, 1))
        incident = [[] for _ in range(self.nodes.shape[0])]
        for k, t in enumerate(tri):
            for v in t:
                incident[v].append(k)
        width = max(len(s) for s in incident)
        table = np.full((len(incident), width), -1, dtype=int)
        for v, s in enumerate(incident):
            table[v, :len(s)] = s
        self._incident = table
        self._tree = cKDTree(self.nodes)

    def _radial_unit(self, u):
        if self.dim == 2:
            theta = np.arctan2(u[:, 1], u[:, 0])
            return np.interp(theta, self._angle, self._rho_sorted, period=2 * np.pi)
        if self.dim == 3:
            return self._barycentric(u)
        _, idx = self._tree.query(u)
        return self.rho[idx]

    def _barycentric(self, u):
        # the containing spherical Delaunay triangle has the nearest node as a vertex
        _, nearest = self._tree.query(u)
        cand = self._incident[nearest]                       # (N, w)
        valid = cand >= 0
        safe = np.where(valid, cand, 0)
        coeff = np.einsum("nwij,nj->nwi", self._tri_inv[safe], u)
        worst = np.where(valid, coeff.min(axis=2), -np.inf)
        best = worst.argmax(axis=1)
        rows = np.arange(u.shape[0])
        c = np.maximum(coeff[rows, best], 0.0)
        c /= c.sum(axis=1, keepdims=True)
        verts = self._tri[safe[rows, best]]
        return np.sum(c * self.rho[verts], axis=1)

    def to_spec(self):
        return {"type": "radial_grid", "nodes": self.nodes.tolist(), "rho": self.rho.tolist()}


class LinearImage(StarBody):
    """T K, evaluated lazily through rho_{TK}(x) = rho_K(T^{-1} x)."""

    kind = "linear_image"

    def __init__(self, T, base: StarBody):
        self.dim = base.dim
        self.T = _check_invertible(T, self.dim)
        self.T_inv = np.linalg.inv(self.T)
        self.base = base
        self.convex_symmetric = base.convex_symmetric

    def radial(self, x):
        x, _, single = _as_points(x, self.dim)
        return _out(self.base.radial(x @ self.T_inv.T), single)

    def _radial_unit(self, u):
        return self.base.radial(u @ self.T_inv.T)

    def closed_form_volume(self):
        v = self.base.closed_form_volume()
        return None if v is None else abs(np.linalg.det(self.T)) * v

    def to_spec(self):
        return {"type": "linear_image", "T": self.T.tolist(), "base": self.base.to_spec()}


def ball(r: float = 1.0, dim: int = 2) -> Ball:
    return Ball(r, dim)


def ellipsoid_body(Q) -> EllipsoidBody:
    return EllipsoidBody(Q)


def cuboid(half_widths) -> Cuboid:
    return Cuboid(half_widths)


def lp_ball(q: float, radii) -> LpBall:
    return LpBall(q, radii)


def radial_grid(nodes, rho) -> RadialGrid:
    return RadialGrid(nodes, rho)


def transform(T, body: StarBody) -> LinearImage:
    """The image T K; nested images are flattened into one matrix."""
    T = _check_invertible(T, body.dim)
    if isinstance(body, LinearImage):
        return LinearImage(T @ body.T, body.base)
    return LinearImage(T, body)


def body_from_spec(spec) -> StarBody:
    """Parse a body spec given as dict, JSON text or path to a JSON file."""
    spec = load_spec(spec, "body")
    kind = spec["type"]
    try:
        if kind == "ball":
            return Ball(spec.get("r", 1.0), spec.get("dim", 2))
        if kind == "ellipsoid":
            return EllipsoidBody(spec["Q"])
        if kind == "cuboid":
            return Cuboid(spec["a"])
        if kind == "lp_ball":
            return LpBall(spec["q"], spec["radii"])
        if kind == "radial_grid":
            return RadialGrid(spec["nodes"], spec["rho"])
        if kind == "linear_image":
            return LinearImage(spec["T"], body_from_spec(spec["base"]))
    except KeyError as exc:
        raise ConfigurationError(f"body spec of type {kind!r} is missing field {exc}") from exc
    raise ConfigurationError(f"unknown body type {kind!r}")


@dataclass(frozen=True, eq=False)
class DualConicalMeasure:
    """Masses m_i = w_i rho_K(u_i)^n / n; their total is the volume of K."""

    grid: SphericalGrid
    rho: np.ndarray
    masses: np.ndarray
    total: float


def sample_radial(body: StarBody, grid: SphericalGrid) -> np.ndarray:
    """rho_K on the grid nodes, with the origin-interior check."""
    if grid.dim != body.dim:
        raise DomainError(f"grid dimension {grid.dim} does not match body dimension {body.dim}")
    rho = np.asarray(body.radial(grid.nodes), dtype=float)
    if not np.all(np.isfinite(rho)) or rho.min() <= 0:
        raise DomainError("radial function must be positive and finite on the grid")
    if rho.min() < MIN_RADIAL_RATIO * rho.max():
        raise DomainError("body is too degenerate (min rho / max rho below 1e-9)")
    return rho


def dual_conical(body: StarBody, grid: SphericalGrid) -> DualConicalMeasure:
    rho = sample_radial(body, grid)
    n = body.dim
    masses = grid.weights * rho ** n / n
    return DualConicalMeasure(grid=grid, rho=rho, masses=masses,
                              total=integrate_values(grid, rho ** n) / n)


def quadrature_volume(body: StarBody, grid: SphericalGrid) -> float:
    """(1/n) * sum_i w_i rho_K(u_i)^n."""
    rho = sample_radial(body, grid)
    return integrate_values(grid, rho ** body.dim) / body.dim


def volume(body: StarBody, grid: SphericalGrid) -> float:
    """Closed form for balls and ellipsoids (and their linear images), else quadrature."""
    exact = body.closed_form_volume()
    if exact is not None:
        return exact
    return quadrature_volume(body, grid)


def hull_support(body: StarBody, v, grid: SphericalGrid) -> float:
    """Support function of conv K in direction v, maximised over the grid nodes."""
    v = np.asarray(v, dtype=float)
    rho = sample_radial(body, grid)
    return float(np.max(rho * (grid.nodes @ v)))
