"""Minimum-volume origin-symmetric ellipsoid containing a star body.

The body is sampled at the boundary points rho_K(u_i) u_i of the grid; the
centred minimum-volume enclosing ellipsoid of that cloud is found from
its dual (maximize log det sum_i w_i x_i x_i^T over the simplex) with
Khachiyan's multiplicative coordinate updates plus Todd-Yildirim away
steps, run loosely, followed by an SLSQP solve of the primal problem on
the near-active points.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .bodies import StarBody, sample_radial
from .ellipsoid import Ellipsoid, symmetrize
from .errors import DomainError, InternalError
from .quadrature import SphericalGrid, build_grid

CONTAINMENT_TOL = 1e-8


def _khachiyan(X, u, tol, max_iter, refresh=200):
    """Dual weights on the rows of X; stops when both optimality gaps are below tol.

    g_i = x_i.M^{-1}x_i is updated by Sherman-Morrison after each step and
    recomputed from scratch every ``refresh`` steps.
    """
    m, n = X.shape
    for it in range(max_iter):
        if it % refresh == 0:
            M_inv = np.linalg.inv(symmetrize((X * u[:, None]).T @ X))
            g = np.einsum("ij,ij->i", X @ M_inv, X)
        j = int(np.argmax(g))
        k = int(np.argmin(np.where(u > 0, g, np.inf)))
        up, down = g[j] / n - 1.0, 1.0 - g[k] / n
        if up <= tol and down <= tol:
            break
        if up >= down:
            # M <- (1 - a) M + a x_j x_j^T
            a = (g[j] - n) / (n * (g[j] - 1.0))
            c, i, gi = -a, j, g[j]
            u *= 1.0 - a
            u[j] += a
        else:
            # away step M <- (1 + b) M - b x_k x_k^T, clipped so that u_k stays nonnegative
            b = min((n - g[k]) / (n * (g[k] - 1.0)), u[k] / (1.0 - u[k]))
            c, i, gi = b, k, g[k]
            u *= 1.0 + b
            u[k] -= b
            u[k] = max(u[k], 0.0)
        v = M_inv @ X[i]
        proj = X @ v
        denom = (1.0 + c) - c * gi
        g = (g + c * proj ** 2 / denom) / (1.0 + c)
        M_inv = (M_inv + c * np.outer(v, v) / denom) / (1.0 + c)
    return u


def _initial_weights(X):
    """Uniform weights on n points chosen greedily to span the space."""
    m, n = X.shape
    chosen = []
    R = X.copy()
    for _ in range(n):
        i = int(np.argmax(np.einsum("ij,ij->i", R, R)))
        chosen.append(i)
        d = R[i] / np.linalg.norm(R[i])
        R -= np.outer(R @ d, d)
    u = np.zeros(m)
    u[chosen] = 1.0 / n
    return u


def _polish(X, Q0, tol):
    """Solve min -log det Q s.t. x.Qx <= 1 on a small point set, from a nearby Q0."""
    n = X.shape[1]
    iu = np.triu_indices(n)
    scale = np.where(iu[0] == iu[1], 1.0, 2.0)
    # x.Qx is linear in the upper-triangle entries of Q
    A = X[:, iu[0]] * X[:, iu[1]] * scale

    def unpack(q):
        Q = np.zeros((n, n))
        Q[iu] = q
        return Q + np.triu(Q, 1).T

    def objective(q):
        sign, logdet = np.linalg.slogdet(unpack(q))
        if sign <= 0:
            return 1e300, np.zeros_like(q)
        return -logdet, -np.linalg.inv(unpack(q))[iu] * scale

    # a box keeps the restricted problem bounded when the working set is too
    # small to enclose; an optimum on the box produces violators downstream
    cap = 100.0 * float(np.abs(Q0).max())
    res = minimize(objective, Q0[iu], jac=True, method="SLSQP",
                   bounds=[(0.0 if a == b else -cap, cap) for a, b in zip(*iu)],
                   constraints=[{"type": "ineq", "fun": lambda q: 1.0 - A @ q, "jac": lambda q: -A}],
                   options={"ftol": tol * 1e-2, "maxiter": 500})
    Q = unpack(res.x)
    if not res.success or np.linalg.eigvalsh(Q)[0] <= 0:
        return None
    return Q


def _scale_inside(X, Q):
    return symmetrize(Q / float(np.max(np.einsum("ij,jk,ik->i", X, Q, X))))


def symmetric_mvee(points: np.ndarray, tol: float = 1e-10, max_iter: int = 200000) -> np.ndarray:
    """Shape matrix Q of the smallest ellipsoid {x : x.Qx <= 1} containing +-points.

    A loose multiplicative solve on the full cloud picks the near-active
    points; the problem restricted to those is finished by SLSQP and the
    working set grows with any violators until the full cloud is inside.
    If polishing fails the multiplicative solve is run to ``tol``.
    """
    X = np.asarray(points, dtype=float)
    m, n = X.shape
    if np.linalg.matrix_rank(X) < n:
        raise DomainError("point cloud does not span the space")
    u = _khachiyan(X, _initial_weights(X), 1e-2, max_iter)
    M = symmetrize((X * u[:, None]).T @ X)
    Q = _scale_inside(X, np.linalg.inv(n * M))
    g0 = np.einsum("ij,jk,ik->i", X, Q, X)
    for level in (0.99, 0.9, 0.5):
        core = np.flatnonzero(g0 >= level)
        Qw = Q
        for _ in range(50):
            if np.linalg.matrix_rank(X[core]) < n:
                break
            Qc = _polish(X[core], Qw, tol)
            if Qc is None:
                break
            g = np.einsum("ij,jk,ik->i", X, Qc, X)
            outside = np.setdiff1d(np.flatnonzero(g > 1.0 + tol), core)
            if outside.size == 0:
                return _scale_inside(X, Qc)
            core = np.union1d(core, outside)
            Qw = _scale_inside(X, Qc)
    u = _khachiyan(X, u, tol, max_iter)
    M = symmetrize((X * u[:, None]).T @ X)
    return _scale_inside(X, np.linalg.inv(n * M))


def loewner(K: StarBody, grid: SphericalGrid | None = None, tol: float = 1e-10) -> Ellipsoid:
    """Smallest origin-symmetric ellipsoid containing the sampled boundary of K."""
    grid = grid if grid is not None else build_grid(K.dim)
    rho = sample_radial(K, grid)
    points = grid.nodes * rho[:, None]
    E = Ellipsoid(symmetric_mvee(points, tol))
    ratio = float(np.max(rho / E.radial(grid.nodes)))
    if ratio > 1.0 + CONTAINMENT_TOL:
        raise InternalError(f"Loewner ellipsoid fails containment: max rho_K/rho_E = {ratio}")
    return E
