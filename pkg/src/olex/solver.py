"""Orlicz-Legendre ellipsoids and their volume-normalized relatives.

The inner problem minimizes the dual Orlicz mixed volume of K against
volume-normalized ellipsoids E = A B, A symmetric positive definite with
det A = 1.  Steps move A to A exp(t R), R traceless, so the volume never
drifts.  R is the isotropy defect of the measure

    d mu_phi(K', u) = phi'(rho_{K'}) rho_{K'}^{n+1} dS,    K' = A^{-1} K,

which is (up to a positive factor) the negative gradient; the solve stops
once the normalized second moment of that measure equals the identity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .bodies import StarBody, dual_conical
from .ellipsoid import Ellipsoid, spd_function, symmetrize
from .errors import ConfigurationError, DomainError, NumericError
from .functionals import FunctionalContext, o_phi
from .orlicz import OrliczFunction, WeightedSamples, orlicz_norm, power_of, require_c1
from .quadrature import SphericalGrid, build_grid

log = logging.getLogger(__name__)

ARMIJO = 1e-4
MIN_STEP = 1e-14
MAX_STEP = 1e4
UNDERFLOW = 1e-300


@dataclass(frozen=True)
class SolveOptions:
    max_iterations: int = 500
    isotropy_tol: float = 1e-8
    step_init: float = 0.25
    backtrack_factor: float = 0.5
    outer_tol: float = 1e-10
    algorithm: str = "gradient"
    warm_start: str = "ball"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be positive")
        for name in ("isotropy_tol", "step_init", "outer_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise ConfigurationError("backtrack_factor must lie in (0, 1)")
        if self.algorithm not in ("gradient", "derivative_free"):
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.warm_start not in ("ball", "legendre"):
            raise ConfigurationError(f"unknown warm_start {self.warm_start!r}")


@dataclass
class SolveReport:
    iterations: int = 0
    objective_trace: list = field(default_factory=list)
    isotropy_residual_trace: list = field(default_factory=list)
    step_trace: list = field(default_factory=list)
    outer_lambda_trace: list = field(default_factory=list)
    terminated: str = "max_iters"
    final_ellipsoid: Ellipsoid | None = None
    certificate: str = "available"
    notes: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.terminated == "converged"

    @property
    def final_residual(self) -> float:
        return self.isotropy_residual_trace[-1] if self.isotropy_residual_trace else math.nan

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "terminated": self.terminated,
            "certificate": self.certificate,
            "final_isotropy_residual": self.final_residual,
            "outer_lambda_trace": list(self.outer_lambda_trace),
            "notes": list(self.notes),
        }


@dataclass(frozen=True, eq=False)
class MuPhiMeasure:
    """Discrete mu_phi: nodes, masses nu_i, total mass and second moment sum nu_i u_i u_i^T."""

    nodes: np.ndarray
    masses: np.ndarray
    total: float
    second_moment: np.ndarray


def _pushforward(T, nodes, rho, masses, n):
    """Nodes, radii and dual conical masses of T K from those of K.

    Exact change of variables u -> Tu/|Tu|, so the result is the same
    discrete measure seen from the transformed body.
    """
    y = nodes @ np.asarray(T, dtype=float).T
    s = np.linalg.norm(y, axis=1)
    return y / s[:, None], rho * s, masses * abs(np.linalg.det(T))


def _mu_from_samples(nodes, rho, masses, phi, n):
    with np.errstate(over="ignore", invalid="ignore"):
        nu = n * masses * phi.derivative(rho) * rho
    if not np.all(np.isfinite(nu)):
        raise NumericError("phi' overflowed while building mu_phi; rescale the body")
    nu = np.where(nu < UNDERFLOW, 0.0, nu)
    M = symmetrize((nodes * nu[:, None]).T @ nodes)
    return MuPhiMeasure(nodes=nodes, masses=nu, total=float(nu.sum()), second_moment=M)


def mu_phi(K: StarBody, phi: OrliczFunction, grid: SphericalGrid | None = None,
           transform=None) -> MuPhiMeasure:
    """Discretized mu_phi(K) on ``grid``, or mu_phi(T K) when ``transform`` T is given.

    For T K the grid of K is carried along by T, which keeps the measure
    consistent with the one the solver differentiates.
    """
    require_c1(phi)
    grid = grid if grid is not None else build_grid(K.dim)
    meas = dual_conical(K, grid)
    nodes, rho, masses = grid.nodes, meas.rho, meas.masses
    if transform is not None:
        nodes, rho, masses = _pushforward(transform, nodes, rho, masses, K.dim)
    return _mu_from_samples(nodes, rho, masses, phi, K.dim)


def isotropy_residual(m: MuPhiMeasure) -> float:
    """|| (n / |mu|) sum nu_i u_i u_i^T - I ||_F."""
    n = m.second_moment.shape[0]
    if not m.total > 0:
        raise DomainError("mu_phi has zero total mass")
    return float(np.linalg.norm(n / m.total * m.second_moment - np.eye(n)))


def p1_gradient(K: StarBody, phi: OrliczFunction, grid: SphericalGrid | None, T) -> np.ndarray:
    """D = (M - tr(M)/n I) / n with M the second moment of mu_phi(T^{-1} K).

    <D, L> is the derivative at 0 of eps -> V_phi(K, T L_eps^{-1} B) with
    L_eps = (I + eps L) / det(I + eps L)^{1/n}.
    """
    T = np.asarray(T, dtype=float)
    if abs(np.linalg.det(T) - 1.0) > 1e-10:
        raise DomainError("p1_gradient needs det T = 1")
    m = mu_phi(K, phi, grid, transform=np.linalg.inv(T))
    n = T.shape[0]
    M = m.second_moment
    return (M - np.trace(M) / n * np.eye(n)) / n


class _P1Problem:
    """min sum_i m_i phi(rho_i sqrt(u_i.Q u_i)) over det Q = 1, on fixed samples."""

    def __init__(self, nodes, rho, masses, phi, n):
        self.nodes, self.rho, self.masses, self.phi, self.n = nodes, rho, masses, phi, n

    def ratios(self, Q):
        return self.rho * np.sqrt(np.einsum("ij,jk,ik->i", self.nodes, Q, self.nodes))

    def objective(self, Q):
        with np.errstate(over="ignore", invalid="ignore"):
            v = self.phi.value(self.ratios(Q))
        val = float(np.dot(self.masses, v))
        if not math.isfinite(val):
            raise NumericError("objective overflowed; rescale the body")
        return val

    def frame(self, Q):
        """Nodes, ratios and mu_phi of the body seen from the ellipsoid Q."""
        root = spd_function(Q, np.sqrt)
        y = self.nodes @ root
        s = np.linalg.norm(y, axis=1)
        w = y / s[:, None]
        r = self.rho * s
        mu = _mu_from_samples(w, r, self.masses, self.phi, self.n)
        return root, w, r, mu

    def increment(self, w, r, lam, V, t):
        """Change of the objective for Q -> Q^{1/2} exp(-2tR) Q^{1/2}, R = V diag(lam) V^T.

        Computed per node without cancellation, so it stays accurate when
        the change is far below the objective's rounding level.
        """
        D = (V * np.expm1(-2.0 * t * lam)) @ V.T
        delta = np.einsum("ij,jk,ik->i", w, D, w)
        rel = delta / (1.0 + np.sqrt(1.0 + delta))
        with np.errstate(over="ignore", invalid="ignore"):
            inc = self.phi.increment(r, rel)
        return float(np.dot(self.masses, inc))


def _residual_matrix(mu: MuPhiMeasure, n: int) -> np.ndarray:
    if not mu.total > 0:
        raise NumericError("mu_phi vanished (phi' underflow); rescale the body")
    R = n / mu.total * mu.second_moment
    # exact tracelessness matters: near the optimum ||R||^2 is comparable to
    # the rounding error in tr(R)
    return R - np.trace(R) / n * np.eye(n)


def _gradient_descent(prob: _P1Problem, Q0, opts: SolveOptions, report: SolveReport):
    n = prob.n
    Q = symmetrize(Q0)
    f = prob.objective(Q)
    t = opts.step_init
    for it in range(opts.max_iterations + 1):
        root, w, r, mu = prob.frame(Q)
        R = _residual_matrix(mu, n)
        res = float(np.linalg.norm(R))
        report.objective_trace.append(f)
        report.isotropy_residual_trace.append(res)
        report.step_trace.append(t if it else 0.0)
        report.iterations = it
        if res < opts.isotropy_tol:
            report.terminated = "converged"
            return Q
        if it == opts.max_iterations:
            report.terminated = "max_iters"
            return Q
        lam, V = np.linalg.eigh(R)
        # R carries absolute rounding of order 1e-16 and any trace it keeps
        # moves the objective at first order; centred eigenvalues cancel to
        # rounding relative to |lam| instead
        lam = lam - lam.mean()
        slope = mu.total / n ** 2 * float(np.dot(lam, lam))
        while True:
            delta = prob.increment(w, r, lam, V, t)
            if math.isfinite(delta) and delta <= -ARMIJO * t * slope:
                break
            t *= opts.backtrack_factor
            if t < MIN_STEP:
                report.terminated = "line_search_stall"
                return Q
        # Armijo alone accepts long overshooting steps; try the minimizer of
        # the quadratic through f(0), f'(0) and f(t)
        curv = delta + slope * t
        if curv > 0:
            t_quad = 0.5 * slope * t * t / curv
            if t_quad < t:
                d_quad = prob.increment(w, r, lam, V, t_quad)
                if math.isfinite(d_quad) and d_quad < delta:
                    t, delta = t_quad, d_quad
        Q = symmetrize(root @ ((V * np.exp(-2.0 * t * lam)) @ V.T) @ root)
        Q /= np.linalg.det(Q) ** (1.0 / n)
        f = f + delta
        t = min(t / opts.backtrack_factor, MAX_STEP)
    return Q


def _traceless_basis(n):
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            B = np.zeros((n, n))
            B[i, j] = B[j, i] = 1.0 / math.sqrt(2.0)
            basis.append(B)
    for k in range(n - 1):
        B = np.zeros((n, n))
        d = np.zeros(n)
        d[: k + 1] = 1.0
        d[k + 1] = -(k + 1)
        B[np.diag_indices(n)] = d / np.linalg.norm(d)
        basis.append(B)
    return basis


def _nelder_mead(prob: _P1Problem, Q0, opts: SolveOptions, report: SolveReport):
    n = prob.n
    basis = _traceless_basis(n)
    root0 = spd_function(Q0, np.sqrt)

    def shape(x):
        S = sum(c * B for c, B in zip(x, basis))
        return symmetrize(root0 @ spd_function(S, lambda w: np.exp(-2.0 * w)) @ root0)

    trace = []

    def fun(x):
        val = prob.objective(shape(x))
        trace.append(val)
        return val

    res = minimize(fun, np.zeros(len(basis)), method="Nelder-Mead",
                   options={"maxiter": opts.max_iterations * len(basis), "xatol": 1e-10,
                            "fatol": 1e-15 * max(1.0, abs(fun(np.zeros(len(basis))))),
                            "adaptive": True})
    best = np.minimum.accumulate(trace)
    report.objective_trace.extend(best.tolist())
    report.iterations = int(res.nit)
    report.terminated = "converged" if res.success else "max_iters"
    Q = shape(res.x)
    Q /= np.linalg.det(Q) ** (1.0 / n)
    if prob.phi.is_c1:
        _, _, _, mu = prob.frame(Q)
        report.isotropy_residual_trace.append(float(np.linalg.norm(_residual_matrix(mu, n))))
    else:
        report.certificate = "unavailable"
        report.notes.append("phi is not C1: optimality certificate unavailable, "
                            "termination by objective stagnation")
    return Q


def _run_p1(prob: _P1Problem, Q0, opts: SolveOptions) -> tuple[np.ndarray, SolveReport]:
    report = SolveReport()
    if opts.algorithm == "gradient":
        require_c1(prob.phi)
        Q = _gradient_descent(prob, Q0, opts, report)
    else:
        Q = _nelder_mead(prob, Q0, opts, report)
    with np.errstate(under="ignore"):
        nu = prob.n * prob.masses * np.asarray(prob.phi.derivative(prob.ratios(Q))) \
            if prob.phi.is_c1 else None
    if nu is not None and np.any((nu > 0) & (nu < UNDERFLOW)):
        report.notes.append("mu_phi masses below 1e-300 were flushed to zero")
    return Q, report


def _initial_shape(ctx_rho, grid, n, opts, init):
    if init is not None:
        Q = init.Q if isinstance(init, Ellipsoid) else np.asarray(init, dtype=float)
    elif opts.warm_start == "legendre":
        Q = _legendre_shape(ctx_rho, grid, n)
    else:
        Q = np.eye(n)
    Q = symmetrize(Q)
    return Q / np.linalg.det(Q) ** (1.0 / n)


def _context(K, phi, grid):
    grid = grid if grid is not None else build_grid(K.dim)
    return FunctionalContext(K, grid, phi)


def solve_p1(K: StarBody, phi: OrliczFunction, grid: SphericalGrid | None = None,
             opts: SolveOptions | None = None, init=None) -> tuple[Ellipsoid, SolveReport]:
    """Ellipsoid of volume omega_n minimizing the dual Orlicz mixed volume against K."""
    opts = opts or SolveOptions()
    ctx = _context(K, phi, grid)
    n = K.dim
    prob = _P1Problem(ctx.grid.nodes, ctx.rho, ctx.measure.masses, phi, n)
    Q, report = _run_p1(prob, _initial_shape(ctx.rho, ctx.grid, n, opts, init), opts)
    E = Ellipsoid(Q)
    report.final_ellipsoid = E
    return E, report


def _scaled_problem(ctx: FunctionalContext, lam: float) -> _P1Problem:
    n = ctx.K.dim
    return _P1Problem(ctx.grid.nodes, ctx.rho / lam, ctx.measure.masses / lam ** n, ctx.phi, n)


def solve_p2(K: StarBody, phi: OrliczFunction, grid: SphericalGrid | None = None,
             opts: SolveOptions | None = None, init=None) -> tuple[Ellipsoid, SolveReport]:
    """Normalized Orlicz-Legendre ellipsoid: volume omega_n, minimal O_phi(K, E).

    Outer fixed point lambda_{k+1} = O_phi(K, E_k), where E_k solves the
    inner problem for K / lambda_k.  A fixed point makes E_k optimal for
    the normalized problem.
    """
    opts = opts or SolveOptions()
    ctx = _context(K, phi, grid)
    n = K.dim
    Q = _initial_shape(ctx.rho, ctx.grid, n, opts, init)
    lam = 1.0
    report = SolveReport(outer_lambda_trace=[lam])
    prev_step = 0.0
    total_iters = 0
    outer_done = False
    inner = None
    for _ in range(opts.max_iterations):
        Q, inner = _run_p1(_scaled_problem(ctx, lam), Q, opts)
        total_iters += inner.iterations
        new = orlicz_norm(WeightedSamples(ctx.ratios(Ellipsoid(Q)), ctx.measure.masses), phi)
        step = new - lam
        if prev_step * step < 0:
            new = lam + 0.5 * step
            step = new - lam
        prev_step = step
        done = abs(step) <= opts.outer_tol * lam
        lam = new
        report.outer_lambda_trace.append(lam)
        if done:
            outer_done = True
            break
    report.iterations = total_iters
    report.objective_trace = inner.objective_trace
    report.isotropy_residual_trace = inner.isotropy_residual_trace
    report.step_trace = inner.step_trace
    report.certificate = inner.certificate
    report.notes = inner.notes
    if not outer_done:
        report.terminated = "max_iters"
    else:
        report.terminated = inner.terminated
    E = Ellipsoid(Q)
    report.final_ellipsoid = E
    return E, report


def orlicz_legendre(K: StarBody, phi: OrliczFunction, grid: SphericalGrid | None = None,
                    opts: SolveOptions | None = None, init=None) -> tuple[Ellipsoid, SolveReport]:
    """L_phi K = O_phi(K, Lbar) Lbar, where Lbar solves the normalized problem."""
    grid = grid if grid is not None else build_grid(K.dim)
    Lbar, report = solve_p2(K, phi, grid, opts, init)
    lam = o_phi(FunctionalContext(K, grid, phi), Lbar)
    E = Lbar.scaled(lam)
    report.final_ellipsoid = E
    return E, report


def _legendre_shape(rho, grid, n):
    weights = grid.weights * rho ** (n + 2) / (n + 2)
    inertia = symmetrize((grid.nodes * weights[:, None]).T @ grid.nodes)
    vol = float(np.dot(grid.weights, rho ** n)) / n
    return np.linalg.inv(symmetrize((n + 2) / vol * inertia))


def legendre_closed_form(K: StarBody, grid: SphericalGrid | None = None) -> Ellipsoid:
    """Classical Legendre ellipsoid: Q^{-1} = ((n+2)/V(K)) int_K x x^T dx.

    The body integral is taken in polar form on the grid, with the same
    quadrature volume as the solvers use.
    """
    grid = grid if grid is not None else build_grid(K.dim)
    rho = dual_conical(K, grid).rho
    return Ellipsoid(_legendre_shape(rho, grid, K.dim))


def isotropic_position(K: StarBody, phi: OrliczFunction, grid: SphericalGrid | None = None,
                       opts: SolveOptions | None = None) -> tuple[np.ndarray, SolveReport]:
    """T in SL(n), SPD, with mu_phi(T K) isotropic: the inverse of the inner-solve factor."""
    E, report = solve_p1(K, phi, grid, opts)
    T = spd_function(E.Q, np.sqrt)
    return T / np.linalg.det(T) ** (1.0 / K.dim), report


@dataclass
class SweepEntry:
    p: float
    ellipsoid: Ellipsoid | None
    volume: float
    dist_to_loewner: float
    status: str
    report: SolveReport | None = None
    error: str | None = None


def limit_sweep(K: StarBody, phi: OrliczFunction, p_list, grid: SphericalGrid | None = None,
                opts: SolveOptions | None = None, loewner_ellipsoid: Ellipsoid | None = None,
                executor=None) -> list[SweepEntry]:
    """Orlicz-Legendre ellipsoids of K for phi^p along ``p_list``.

    Each entry carries the volume and the Frobenius distance of its shape
    matrix to the Loewner ellipsoid's.
    """
    from .loewner import loewner

    p_list = [float(p) for p in p_list]
    if any(p < 1 for p in p_list) or any(b <= a for a, b in zip(p_list, p_list[1:])):
        raise ConfigurationError("p values must be increasing and at least 1")
    grid = grid if grid is not None else build_grid(K.dim)
    L_inf = loewner_ellipsoid or loewner(K, grid)

    def one(p):
        try:
            E, rep = orlicz_legendre(K, power_of(phi, p), grid, opts)
        except (NumericError, DomainError) as exc:
            return SweepEntry(p, None, math.nan, math.nan, "error", None, str(exc))
        return SweepEntry(p, E, E.volume, float(np.linalg.norm(E.Q - L_inf.Q)),
                          rep.terminated, rep)

    if executor is None:
        return [one(p) for p in p_list]
    return list(executor.map(one, p_list))


def with_options(opts: SolveOptions | None, **overrides) -> SolveOptions:
    return replace(opts or SolveOptions(), **{k: v for k, v in overrides.items() if v is not None})
