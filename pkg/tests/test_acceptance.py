"""Acceptance criteria 1-12, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict, printed in the terminal
summary, and then asserts it.  Run directly with ``python tests/test_acceptance.py``.
"""

import math
import sys

import numpy as np
import pytest
from scipy.stats import ortho_group

from olex import (
    Ellipsoid,
    WeightedSamples,
    apply_linear,
    ball_volume,
    cuboid,
    ellipsoid_body,
    exp_minus_one,
    legendre_closed_form,
    limit_sweep,
    loewner,
    lp_ball,
    make_context,
    normalized_dual_volume,
    o_phi,
    orlicz_legendre,
    orlicz_norm,
    p1_gradient,
    power,
    power_of,
    quadrature_tolerance,
    quadrature_volume,
    shape_distance,
    solve_p1,
    transform,
    dual_orlicz_mixed_volume,
)
from olex.orlicz import Power
from olex.solver import _P1Problem
from olex.verify import local_minimality_gap

from conftest import ACCEPTANCE_LINES, RegularPolygon, random_spd, random_star_body

pytestmark = pytest.mark.acceptance


def verdict(number: int, ok: bool, detail: str):
    ACCEPTANCE_LINES.append(f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}")
    print(f"CRITERION {number}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def conditioned_map(rng, n, low=0.5, high=2.0):
    """Random invertible map with singular values in [low, high], either orientation."""
    U = ortho_group.rvs(n, random_state=rng)
    V = ortho_group.rvs(n, random_state=rng)
    return U @ np.diag(np.exp(rng.uniform(math.log(low), math.log(high), n))) @ V


def test_criterion_01_ellipsoid_fixed_point(grid2, grid3):
    rng = np.random.default_rng(101)
    phis = [power(1), power(2), power(4), exp_minus_one()]
    worst = 0.0
    for k in range(20):
        n, grid = (2, grid2) if k < 10 else (3, grid3)
        Q = random_spd(rng, n, spread=0.5)
        for phi in phis:
            E, report = orlicz_legendre(ellipsoid_body(Q), phi, grid)
            worst = max(worst, shape_distance(E, Ellipsoid(Q)))
    verdict(1, worst <= 1e-5, f"max relative Frobenius error {worst:.3e} (<= 1e-5) over 20 SPD x 4 phi")


def test_criterion_02_legendre_oracle(grid2, grid3):
    bodies = {
        "square": (cuboid([1, 1]), grid2),
        "rectangle": (cuboid([2, 1]), grid2),
        "l1-ball": (lp_ball(1, [1, 1]), grid2),
        "random radial_grid": (random_star_body(), grid2),
        "cube": (cuboid([1, 1, 1]), grid3),
    }
    worst = 0.0
    for K, grid in bodies.values():
        E, _ = orlicz_legendre(K, power(2), grid)
        worst = max(worst, shape_distance(E, legendre_closed_form(K, grid)))
    E_sq, _ = orlicz_legendre(cuboid([1, 1]), power(2), grid2)
    radius = 1 / math.sqrt(E_sq.Q[0, 0])
    radius_err = abs(radius - math.sqrt(4 / 3))
    verdict(2, worst <= 1e-5 and radius_err <= 1e-5,
            f"max Q error vs closed form {worst:.3e} (<= 1e-5); square radius {radius:.7f} "
            f"vs sqrt(4/3)=1.1547005")


def test_criterion_03_loewner_oracle(grid2, grid3):
    E = loewner(cuboid([1, 1]), grid2)
    radius_err = float(np.max(np.abs(E.semi_axes()[0] - math.sqrt(2))))
    vol_err = abs(E.volume - 2 * math.pi)
    bodies = [(cuboid([1, 1]), grid2), (cuboid([2, 1]), grid2), (lp_ball(1, [1, 1]), grid2),
              (random_star_body(), grid2), (RegularPolygon(6), grid2),
              (transform([[1, 0.4], [0.1, 1.3]], lp_ball(3, [1, 2])), grid2),
              (cuboid([1, 1, 1]), grid3), (lp_ball(1.5, [1, 2, 1]), grid3)]
    worst = 0.0
    for K, grid in bodies:
        L = loewner(K, grid)
        worst = max(worst, float(np.max(np.asarray(K.radial(grid.nodes)) / L.radial(grid.nodes))))
    ok = radius_err <= 1e-6 and vol_err <= 1e-6 and worst <= 1 + 1e-8
    verdict(3, ok, f"square radius error {radius_err:.2e}, volume error {vol_err:.2e}; "
                   f"max containment ratio {worst:.12f}")


def test_criterion_04_limit_theorem(grid2):
    square = cuboid([1, 1])
    entries = limit_sweep(square, power(1), [2, 4, 8, 16, 32, 64], grid2)
    dists = [e.dist_to_loewner for e in entries]
    decreasing = all(b < a for a, b in zip(dists, dists[1:]))
    ok = decreasing and dists[-1] <= 5e-2
    verdict(4, ok, "||Q_p - Q_inf||_F for p=2..64: " + ", ".join(f"{d:.4f}" for d in dists)
            + f"; strictly decreasing={decreasing}, final {dists[-1]:.4f} (<= 0.05)")


def test_criterion_05_volume_chain(grid2):
    phi = exp_minus_one()
    bodies = {"square": cuboid([1, 1]), "l1-ball": lp_ball(1, [1, 1]), "random star": random_star_body()}
    worst = math.inf
    details = []
    for name, K in bodies.items():
        qtol = quadrature_tolerance(K, grid2)
        vols = [orlicz_legendre(K, f, grid2)[0].volume
                for f in (power(1), phi, power_of(phi, 2), power_of(phi, 4))]
        vols.append(loewner(K, grid2).volume)
        # gaps in units of the allowed slack 2 * qtol * V
        slack = [(b - a) / (2 * qtol * a) for a, b in zip(vols, vols[1:])]
        worst = min(worst, min(slack))
        details.append(f"{name}: " + " <= ".join(f"{v:.6f}" for v in vols))
    verdict(5, worst >= -1, "; ".join(details))


def _test_bodies(grid2, grid3):
    return [
        ("square", cuboid([1, 1]), grid2), ("rectangle", cuboid([2, 1]), grid2),
        ("l1-ball", lp_ball(1, [1, 1]), grid2), ("hexagon", RegularPolygon(6), grid2),
        ("l3-ball", lp_ball(3, [1, 2]), grid2), ("random star", random_star_body(), grid2),
        ("cube", cuboid([1, 1, 1]), grid3), ("l1.5-ball", lp_ball(1.5, [1, 2, 1]), grid3),
    ]


def test_criterion_06_volume_lower_bound(grid2, grid3):
    rng = np.random.default_rng(106)
    worst_ratio = math.inf
    for _, K, grid in _test_bodies(grid2, grid3):
        for phi in (power(1), power(2), exp_minus_one()):
            E, _ = orlicz_legendre(K, phi, grid)
            worst_ratio = min(worst_ratio, E.volume / quadrature_volume(K, grid))
    worst_eq = 0.0
    for k in range(6):
        n, grid = (2, grid2) if k < 3 else (3, grid3)
        Q = random_spd(rng, n, spread=0.5)
        for phi in (power(1), exp_minus_one()):
            E, _ = orlicz_legendre(ellipsoid_body(Q), phi, grid)
            worst_eq = max(worst_eq, abs(E.volume / Ellipsoid(Q).volume - 1))
    ok = worst_ratio >= 1 - 1e-4 and worst_eq <= 1e-5
    verdict(6, ok, f"min V(L_phi K)/V(K) = {worst_ratio:.6f} (>= 0.9999); "
                   f"ellipsoid equality error {worst_eq:.2e} (<= 1e-5)")


def test_criterion_07_outer_volume_ratio(grid2, grid3):
    worst = math.inf
    for name, K, grid in _test_bodies(grid2, grid3):
        if not K.convex_symmetric:
            continue
        n = K.dim
        bound = 2 ** n / (math.factorial(n) * ball_volume(n))
        for phi in (power(1), power(4), exp_minus_one()):
            E, _ = orlicz_legendre(K, phi, grid)
            worst = min(worst, quadrature_volume(K, grid) / E.volume - bound)
    verdict(7, worst >= -1e-3, f"min V(K)/V(L_phi K) - 2^n/(n! omega_n) = {worst:.4f} (>= -1e-3)")


def test_criterion_08_isotropy_certificate(grid2, grid3):
    worst_res, worst_gap, solves = 0.0, math.inf, 0
    for _, K, grid in _test_bodies(grid2, grid3):
        for phi in (power(1), power(4), exp_minus_one()):
            E, report = solve_p1(K, phi, grid)
            if not report.converged:
                continue
            solves += 1
            worst_res = max(worst_res, report.final_residual)
            ctx = make_context(K, phi, grid)
            prob = _P1Problem(grid.nodes, ctx.rho, ctx.measure.masses, phi, K.dim)
            worst_gap = min(worst_gap, local_minimality_gap(prob, E.Q, 32, 1e-3, seed=solves))
    ok = solves == 24 and worst_res <= 1e-8 and worst_gap >= -1e-6
    verdict(8, ok, f"{solves}/24 converged; max residual {worst_res:.2e} (<= 1e-8); "
                   f"min objective change under perturbation {worst_gap:.3e} (>= -1e-6)")


def test_criterion_09_gradient_finite_differences(grid2, grid3):
    rng = np.random.default_rng(109)
    bodies = [(cuboid([1, 1]), grid2), (random_star_body(), grid2), (lp_ball(3, [1, 2]), grid2),
              (lp_ball(1.5, [1, 2, 1]), grid3)]
    phis = [power(1), power(3), exp_minus_one()]
    eps = 1e-5
    worst = 0.0
    for k in range(50):
        K, grid = bodies[k % len(bodies)]
        phi = phis[k % len(phis)]
        n = K.dim
        T = conditioned_map(rng, n, 0.7, 1.4)
        if np.linalg.det(T) < 0:
            T[:, 0] *= -1
        T /= np.linalg.det(T) ** (1 / n)
        L = rng.normal(size=(n, n))
        L = 0.5 * (L + L.T)
        L -= np.trace(L) / n * np.eye(n)
        D = p1_gradient(K, phi, grid, T)
        ctx = make_context(K, phi, grid)

        def value(e):
            Le = np.eye(n) + e * L
            Le /= np.linalg.det(Le) ** (1 / n)
            return dual_orlicz_mixed_volume(ctx, Ellipsoid.from_factor(T @ np.linalg.inv(Le)))

        fd = (value(eps) - value(-eps)) / (2 * eps)
        analytic = float(np.sum(D * L))
        worst = max(worst, abs(fd - analytic) / abs(analytic))
    verdict(9, worst <= 1e-5, f"max relative error {worst:.2e} (<= 1e-5) over 50 triples")


def test_criterion_10_gl_covariance(grid2):
    rng = np.random.default_rng(110)
    bodies = {"l3-ball": lp_ball(3, [1, 1.5]), "random star": random_star_body()}
    worst = 0.0
    for K in bodies.values():
        for phi in (power(2), exp_minus_one()):
            E, _ = orlicz_legendre(K, phi, grid2)
            for _ in range(20):
                T = conditioned_map(rng, 2)
                E_T, _ = orlicz_legendre(transform(T, K), phi, grid2)
                worst = max(worst, shape_distance(E_T, apply_linear(T, E)))
    verdict(10, worst <= 1e-5, f"max relative error {worst:.2e} (<= 1e-5) over 20 maps x 2 bodies x 2 phi")


def test_criterion_11_orlicz_norm(grid2):
    rng = np.random.default_rng(111)
    worst_lp = 0.0
    for _ in range(200):
        size = int(rng.integers(1, 50))
        f = rng.uniform(0, 5, size)
        m = rng.uniform(0.1, 3, size)
        p = float(rng.uniform(1, 8))
        exact = (np.dot(m, f ** p) / m.sum()) ** (1 / p)
        worst_lp = max(worst_lp, abs(orlicz_norm(WeightedSamples(f, m), power(p)) / exact - 1))
    phi = exp_minus_one()
    worst_id = 0.0
    for K in (cuboid([1, 1]), random_star_body(), lp_ball(1, [1, 2])):
        ctx = make_context(K, phi, grid2)
        for Q in (np.eye(2), np.diag([0.5, 3.0]), np.array([[1.0, 0.4], [0.4, 2.0]])):
            L = Ellipsoid(Q)
            lam = o_phi(ctx, L)
            worst_id = max(worst_id, abs(normalized_dual_volume(ctx, L.scaled(lam)) - 1))
    ok = worst_lp <= 1e-10 and worst_id <= 1e-8
    verdict(11, ok, f"L_p mean error {worst_lp:.2e} (<= 1e-10); defining identity error "
                    f"{worst_id:.2e} (<= 1e-8)")


def brute_force_minimum(K, phi, grid, angles=720, aspects=400):
    """Minimum of the P1 objective over det-normalized ellipses on an angle x aspect grid."""
    ctx = make_context(K, phi, grid)
    h = grid.half
    u = grid.nodes[:h]
    rho = ctx.rho[:h]
    mass = 2 * ctx.measure.masses[:h]
    log_a = np.linspace(-1.5, 1.5, aspects)
    a = np.exp(log_a)[:, None]
    best = math.inf
    for theta in np.linspace(0, math.pi, angles, endpoint=False):
        c, s = math.cos(theta), math.sin(theta)
        x2 = (u @ np.array([c, s])) ** 2
        y2 = (u @ np.array([-s, c])) ** 2
        if isinstance(phi, Power) and phi.p == 2:
            # phi(rho |.|) is linear in the quadratic form here
            value = a[:, 0] * (mass @ (rho ** 2 * x2)) + (mass @ (rho ** 2 * y2)) / a[:, 0]
        else:
            value = phi.value(rho * np.sqrt(a * x2 + y2 / a)) @ mass
        best = min(best, float(value.min()))
    return best


def test_criterion_12_brute_force(grid2):
    worst = 0.0
    details = []
    for name, K in (("square", cuboid([1, 1])), ("l1-ball", lp_ball(1, [1, 1]))):
        for phi in (power(2), exp_minus_one()):
            E, report = solve_p1(K, phi, grid2)
            ctx = make_context(K, phi, grid2)
            solved = dual_orlicz_mixed_volume(ctx, E)
            brute = brute_force_minimum(K, phi, grid2)
            rel = abs(solved - brute) / brute
            worst = max(worst, rel)
            details.append(f"{name}/{phi.kind}: {solved:.8f} vs {brute:.8f}")
    verdict(12, worst <= 1e-4, f"max relative gap {worst:.2e} (<= 1e-4); " + "; ".join(details))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-rA"]))
