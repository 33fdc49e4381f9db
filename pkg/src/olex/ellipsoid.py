"""Origin-symmetric ellipsoids E = {x : x.Qx <= 1} stored by their shape matrix."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError, DomainError
from .quadrature import ball_volume

SPD_RTOL = 1e-12


def symmetrize(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def spd_function(M: np.ndarray, fn) -> np.ndarray:
    """Apply a scalar function to a symmetric matrix through its eigendecomposition."""
    evals, evecs = np.linalg.eigh(symmetrize(M))
    return symmetrize((evecs * fn(evals)) @ evecs.T)


class Ellipsoid:
    """Origin-symmetric ellipsoid with symmetric positive definite shape matrix Q."""

    __slots__ = ("Q",)

    def __init__(self, Q):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ConfigurationError("shape matrix must be square")
        Q = symmetrize(Q)
        evals = np.linalg.eigvalsh(Q)
        if not np.all(np.isfinite(evals)) or evals[0] <= SPD_RTOL * evals[-1]:
            raise DomainError("shape matrix must be symmetric positive definite")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)

    def __setattr__(self, name, value):
        raise AttributeError("Ellipsoid is immutable")

    @classmethod
    def unit_ball(cls, n: int) -> "Ellipsoid":
        return cls(np.eye(n))

    @classmethod
    def from_factor(cls, A) -> "Ellipsoid":
        """The image A B of the unit ball under an invertible A."""
        A = np.asarray(A, dtype=float)
        A_inv = np.linalg.inv(A)
        return cls(A_inv.T @ A_inv)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def radial(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(1.0 / math.sqrt(x @ self.Q @ x))
        return 1.0 / np.sqrt(np.einsum("ij,jk,ik->i", x, self.Q, x))

    def support(self, x):
        x = np.asarray(x, dtype=float)
        Q_inv = np.linalg.inv(self.Q)
        if x.ndim == 1:
            return float(math.sqrt(x @ Q_inv @ x))
        return np.sqrt(np.einsum("ij,jk,ik->i", x, Q_inv, x))

    @property
    def volume(self) -> float:
        return ball_volume(self.dim) / math.sqrt(np.linalg.det(self.Q))

    def scaled(self, s: float) -> "Ellipsoid":
        """The dilate s E."""
        return Ellipsoid(self.Q / (s * s))

    def normalized(self) -> "Ellipsoid":
        """The dilate with the volume of the unit ball."""
        return Ellipsoid(self.Q / np.linalg.det(self.Q) ** (1.0 / self.dim))

    def semi_axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Semi-axis lengths (descending) and the matching unit directions as columns."""
        evals, evecs = np.linalg.eigh(self.Q)
        return 1.0 / np.sqrt(evals), evecs

    def to_dict(self) -> dict:
        radii, axes = self.semi_axes()
        return {
            "Q": self.Q.tolist(),
            "semi_axes": radii.tolist(),
            "axes": axes.T.tolist(),
            "volume": self.volume,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Ellipsoid":
        return cls(data["Q"])

    def __repr__(self):
        return f"Ellipsoid(Q={self.Q.tolist()})"


def polar(E: Ellipsoid) -> Ellipsoid:
    return Ellipsoid(np.linalg.inv(E.Q))


def apply_linear(T, E: Ellipsoid) -> Ellipsoid:
    """T E, with shape matrix T^{-t} Q T^{-1}."""
    T = np.asarray(T, dtype=float)
    if T.shape != E.Q.shape:
        raise DomainError("linear map and ellipsoid dimensions differ")
    if abs(np.linalg.det(T)) <= 1e-14 * max(1.0, np.abs(T).max()) ** E.dim:
        raise DomainError("linear map is singular")
    T_inv = np.linalg.inv(T)
    return Ellipsoid(T_inv.T @ E.Q @ T_inv)


def canonical_spd_factor(E: Ellipsoid) -> np.ndarray:
    """The unique SPD A with A B = E, namely Q^{-1/2}."""
    return spd_function(E.Q, lambda w: 1.0 / np.sqrt(w))


def max_principal_radius(E: Ellipsoid) -> float:
    return float(1.0 / math.sqrt(np.linalg.eigvalsh(E.Q)[0]))


def shape_distance(E1: Ellipsoid, E2: Ellipsoid) -> float:
    """Relative Frobenius distance ||Q1 - Q2|| / ||Q2||."""
    return float(np.linalg.norm(E1.Q - E2.Q) / np.linalg.norm(E2.Q))
