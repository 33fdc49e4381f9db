import math

import numpy as np
import pytest

from olex import build_grid
from olex.bodies import RadialGrid, StarBody

ACCEPTANCE_LINES: list[str] = []


class RegularPolygon(StarBody):
    """Regular origin-symmetric polygon with ``sides`` edges and circumradius r."""

    kind = "regular_polygon"
    convex_symmetric = True

    def __init__(self, sides: int = 6, r: float = 1.0, phase: float = 0.0):
        assert sides % 2 == 0
        self.dim = 2
        self.sides, self.r, self.phase = sides, r, phase

    def _radial_unit(self, u):
        sector = 2 * math.pi / self.sides
        theta = np.arctan2(u[:, 1], u[:, 0]) - self.phase
        local = np.mod(theta, sector) - sector / 2
        return self.r * math.cos(sector / 2) / np.cos(local)

    def closed_form_area(self):
        return 0.5 * self.sides * self.r ** 2 * math.sin(2 * math.pi / self.sides)


def random_star_body(seed: int = 7, samples: int = 64, amplitude: float = 0.15) -> RadialGrid:
    """Smooth random planar star body sampled at equally spaced angles."""
    rng = np.random.default_rng(seed)
    theta = 2 * np.pi * np.arange(samples) / samples
    log_rho = np.zeros(samples)
    for k in range(1, 5):
        a, b = rng.normal(scale=amplitude / k, size=2)
        log_rho += a * np.cos(k * theta) + b * np.sin(k * theta)
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    return RadialGrid(nodes, np.exp(log_rho))


def random_spd(rng, n, spread=1.0):
    A = rng.normal(size=(n, n))
    Q = A @ A.T + 0.3 * np.eye(n)
    return Q / np.linalg.det(Q) ** (1 / n) * math.exp(rng.uniform(-spread, spread))


def random_sl(rng, n, scale=0.4):
    T = np.eye(n) + scale * rng.normal(size=(n, n))
    while np.linalg.det(T) <= 0.2:
        T = np.eye(n) + scale * rng.normal(size=(n, n))
    return T


@pytest.fixture(scope="session")
def grid2():
    return build_grid(2)


@pytest.fixture(scope="session")
def grid3():
    return build_grid(3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
