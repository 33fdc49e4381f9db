"""Orlicz functions and the Orlicz (Luxemburg-type) norm of weighted samples.

An Orlicz function here is convex, strictly increasing on [0, inf) and
vanishes at 0.  Four families are provided: ``power``, ``exp_minus_one``,
``power_of`` (composition with t^p) and ``table`` (piecewise-linear convex
interpolation of user knots).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._spec import load_spec
from .errors import (CapabilityError, ConfigurationError, DegenerateInputError, DomainError,
                     NumericError)

NORM_RTOL = 1e-12


class OrliczFunction:
    """Base class.  Subclasses implement ``value``, ``derivative`` and ``inverse``."""

    kind = "abstract"
    #: True when the derivative is continuous on [0, inf).
    is_c1 = True

    def value(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    def inverse(self, s):
        raise NotImplementedError

    def increment(self, t, rel):
        """Return ``phi(t * (1 + rel)) - phi(t)`` without cancellation.

        Used by line searches, where the change in the objective can sit far
        below the rounding error of the objective itself.
        """
        t = np.asarray(t, dtype=float)
        return self.value(t * (1.0 + np.asarray(rel))) - self.value(t)

    def __call__(self, t):
        return self.value(t)

    def to_spec(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({json.dumps(self.to_spec())})"


class Power(OrliczFunction):
    kind = "power"

    def __init__(self, p: float):
        p = float(p)
        if not p >= 1.0:
            raise ConfigurationError(f"power Orlicz function needs p >= 1, got {p}")
        self.p = p

    def value(self, t):
        return np.power(t, self.p)

    def derivative(self, t):
        if self.p == 1.0:
            return np.ones_like(np.asarray(t, dtype=float))
        return self.p * np.power(t, self.p - 1.0)

    def inverse(self, s):
        return np.power(s, 1.0 / self.p)

    def increment(self, t, rel):
        t = np.asarray(t, dtype=float)
        return np.power(t, self.p) * np.expm1(self.p * np.log1p(rel))

    def to_spec(self):
        return {"type": "power", "p": self.p}


class ExpMinusOne(OrliczFunction):
    """phi(t) = e^t - 1."""

    kind = "exp_minus_one"

    def value(self, t):
        return np.expm1(t)

    def derivative(self, t):
        return np.exp(t)

    def inverse(self, s):
        return np.log1p(s)

    def increment(self, t, rel):
        t = np.asarray(t, dtype=float)
        return np.exp(t) * np.expm1(t * np.asarray(rel))

    def to_spec(self):
        return {"type": "exp_minus_one"}


class PowerOf(OrliczFunction):
    """t -> base(t) ** p, again an Orlicz function for p >= 1."""

    kind = "power_of"

    def __init__(self, base: OrliczFunction, p: float):
        p = float(p)
        if not p >= 1.0:
            raise ConfigurationError(f"power_of needs p >= 1, got {p}")
        self.base = base
        self.p = p
        self.is_c1 = base.is_c1

    def value(self, t):
        return np.power(self.base.value(t), self.p)

    def derivative(self, t):
        b = self.base.value(t)
        if self.p == 1.0:
            return self.base.derivative(t)
        return self.p * np.power(b, self.p - 1.0) * self.base.derivative(t)

    def inverse(self, s):
        return self.base.inverse(np.power(s, 1.0 / self.p))

    def increment(self, t, rel):
        t = np.asarray(t, dtype=float)
        b = np.asarray(self.base.value(t), dtype=float)
        db = np.asarray(self.base.increment(t, rel), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.power(b, self.p) * np.expm1(self.p * np.log1p(db / b))
        zero = b == 0
        if np.any(zero):
            out = np.where(zero, np.power(np.maximum(db, 0.0), self.p), out)
        return out

    def to_spec(self):
        return {"type": "power_of", "base": self.base.to_spec(), "p": self.p}


class Table(OrliczFunction):
    """Piecewise-linear convex interpolation through knots (t_k, phi(t_k)).

    The first knot must be (0, 0).  Beyond the last knot the last slope is
    continued.  The derivative jumps at interior knots, so ``is_c1`` is False
    and only derivative-free solves accept this kind.
    """

    kind = "table"
    is_c1 = False

    def __init__(self, knots):
        knots = np.asarray(knots, dtype=float)
        if knots.ndim != 2 or knots.shape[1] != 2 or knots.shape[0] < 2:
            raise ConfigurationError("table knots must be a list of [t, phi(t)] pairs (at least 2)")
        t, v = knots[:, 0], knots[:, 1]
        if t[0] != 0.0 or v[0] != 0.0:
            raise ConfigurationError("table must start at the knot (0, 0)")
        if np.any(np.diff(t) <= 0):
            raise ConfigurationError("table abscissae must be strictly increasing")
        slopes = np.diff(v) / np.diff(t)
        if np.any(slopes <= 0):
            raise ConfigurationError("table must be strictly increasing")
        if np.any(np.diff(slopes) < -1e-12 * np.abs(slopes[1:])):
            raise ConfigurationError("table is not convex (slopes must be nondecreasing)")
        self.t, self.v, self.slopes = t, v, slopes

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.t, self.v)
        beyond = t > self.t[-1]
        if np.any(beyond):
            out = np.where(beyond, self.v[-1] + self.slopes[-1] * (t - self.t[-1]), out)
        return out

    def derivative(self, t):
        # right derivative
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.slopes) - 1)
        return self.slopes[idx]

    def inverse(self, s):
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.v, self.t)
        beyond = s > self.v[-1]
        if np.any(beyond):
            out = np.where(beyond, self.t[-1] + (s - self.v[-1]) / self.slopes[-1], out)
        return out

    def to_spec(self):
        return {"type": "table", "knots": np.column_stack([self.t, self.v]).tolist()}


def power(p: float) -> Power:
    return Power(p)


def exp_minus_one() -> ExpMinusOne:
    return ExpMinusOne()


def power_of(base: OrliczFunction, p: float) -> PowerOf:
    return PowerOf(base, p)


def table(knots) -> Table:
    return Table(knots)


def phi_from_spec(spec) -> OrliczFunction:
    """Build an Orlicz function from its JSON spec (dict, JSON text or file path)."""
    spec = load_spec(spec, "phi")
    kind = spec["type"]
    try:
        if kind == "power":
            return Power(spec["p"])
        if kind == "exp_minus_one":
            return ExpMinusOne()
        if kind == "power_of":
            return PowerOf(phi_from_spec(spec["base"]), spec["p"])
        if kind == "table":
            return Table(spec["knots"])
    except KeyError as exc:
        raise ConfigurationError(f"phi spec of type {kind!r} is missing field {exc}") from exc
    raise ConfigurationError(f"unknown phi type {kind!r}")


def check_orlicz(phi: OrliczFunction, lattice=None, tol: float = 1e-12) -> None:
    """Validate phi(0) = 0, monotonicity, midpoint convexity and the inverse on a lattice."""
    if lattice is None:
        lattice = np.linspace(0.0, 4.0, 81)
    t = np.asarray(lattice, dtype=float)
    v = phi.value(t)
    if phi.value(0.0) != 0.0:
        raise ConfigurationError("phi(0) must be 0")
    if np.any(np.diff(v) <= 0):
        raise ConfigurationError("phi must be strictly increasing")
    a, b = np.meshgrid(t, t)
    mid = phi.value((a + b) / 2)
    if np.any(mid > (phi.value(a) + phi.value(b)) / 2 + tol * np.maximum(1.0, np.abs(mid))):
        raise ConfigurationError("phi fails the midpoint convexity check")
    back = phi.inverse(v)
    if np.any(np.abs(back - t) > 1e-10 * np.maximum(1.0, t)):
        raise ConfigurationError("phi inverse does not invert phi on the test lattice")


def require_c1(phi: OrliczFunction) -> None:
    if not phi.is_c1:
        raise CapabilityError(
            f"{phi.kind} Orlicz function has no continuous derivative; "
            "use algorithm='derivative_free'")


@dataclass(frozen=True)
class WeightedSamples:
    """Nonnegative samples f_i with positive masses m_i."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if values.shape != weights.shape or values.ndim != 1:
            raise ValueError("values and weights must be 1-d arrays of equal length")
        if np.any(weights <= 0):
            raise DomainError("sample weights must be positive")
        if np.any(values < 0):
            raise DomainError("sample values must be nonnegative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def _phi_average(phi: OrliczFunction, values, weights, total):
    with np.errstate(over="ignore", invalid="ignore"):
        v = phi.value(values)
    if not np.all(np.isfinite(v)):
        return math.inf
    return float(np.dot(weights, v)) / total


def orlicz_norm(samples: WeightedSamples, phi: OrliczFunction, rtol: float = NORM_RTOL) -> float:
    """Unique lambda > 0 with mean_m phi(f / lambda) = phi(1), by bisection.

    The bracket starts at [min positive f, max f] and is widened
    geometrically until the averaged phi straddles phi(1).
    """
    f, m = samples.values, samples.weights
    positive = f > 0
    if not np.any(positive):
        raise DegenerateInputError("Orlicz norm of an identically zero sample is undefined")
    total = samples.total
    target = float(phi.value(1.0))

    def excess(lam):
        return _phi_average(phi, f / lam, m, total) - target

    lo, hi = float(f[positive].min()), float(f.max())
    if lo == hi and np.all(positive):
        return lo
    while excess(lo) < 0:
        lo *= 0.5
    while excess(hi) > 0:
        hi *= 2.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rtol * mid or mid in (lo, hi):
            break
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def phi_mean(samples: WeightedSamples, phi: OrliczFunction) -> float:
    """phi^{-1} of the weighted mean of phi(f_i)."""
    with np.errstate(over="ignore", invalid="ignore"):
        v = phi.value(samples.values)
    if not np.all(np.isfinite(v)):
        raise NumericError(
            "phi overflowed on the sample ratios; rescale the bodies or use smaller ratios")
    return float(phi.inverse(float(np.dot(samples.weights, v)) / samples.total))

