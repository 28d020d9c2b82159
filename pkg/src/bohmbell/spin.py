"""Two-component spinors, the coil rotation, and the rotated singlet."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Spinor2",
    "SpinRotation",
    "rotation_y",
    "relative_angle",
    "conditional_coefficients",
    "SINGLET",
    "two_spin_state",
    "branch_weights",
]


@dataclass(frozen=True)
class Spinor2:
    up: complex
    down: complex

    @property
    def norm2(self) -> float:
        return abs(self.up) ** 2 + abs(self.down) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.up, self.down], dtype=complex)

    @classmethod
    def from_array(cls, a) -> "Spinor2":
        return cls(complex(a[0]), complex(a[1]))


@dataclass(frozen=True, eq=False)
class SpinRotation:
    """``exp(i angle/2 sigma_y)``; the matrix is real."""

    angle: float
    matrix: np.ndarray

    def __call__(self, spinor: Spinor2) -> Spinor2:
        return Spinor2.from_array(self.matrix @ spinor.as_array())

    def __matmul__(self, other: "SpinRotation") -> "SpinRotation":
        return SpinRotation(self.angle + other.angle, self.matrix @ other.matrix)


def rotation_y(alpha: float) -> SpinRotation:
    if not math.isfinite(alpha):
        raise ValueError(f"rotation angle must be finite, got {alpha!r}")
    c, s = math.cos(alpha / 2), math.sin(alpha / 2)
    # cos(a/2) 1 + i sin(a/2) sigma_y, with i*sigma_y = [[0, 1], [-1, 0]]
    return SpinRotation(alpha, np.array([[c, s], [-s, c]]))


def relative_angle(alpha: float, beta: float) -> float:
    return beta - alpha


def conditional_coefficients(gamma, s_A: int):
    """Bob's spin amplitudes ``(c_plus, c_minus)`` once Alice has found ``s_A``."""
    if s_A == 1:
        return np.sin(gamma / 2), np.cos(gamma / 2)
    if s_A == -1:
        return -np.cos(gamma / 2), np.sin(gamma / 2)
    raise ValueError(f"s_A must be +1 or -1, got {s_A!r}")


# product basis order: ++, +-, -+, --
SINGLET = np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2)


def two_spin_state(alpha: float, beta: float) -> np.ndarray:
    """Singlet after Alice's coil (``alpha``) and Bob's coil (``beta``)."""
    return np.kron(rotation_y(alpha).matrix, rotation_y(beta).matrix) @ SINGLET


def branch_weights(alpha, beta) -> np.ndarray:
    """Squared product-basis amplitudes ``w[a, b]`` of the rotated singlet.

    Index 0 is spin up and 1 spin down; ``w`` sums to one.  Accepts arrays of
    angles, in which case the trailing axes follow their broadcast shape.
    """
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, float), np.asarray(beta, float))
    ca, sa = np.cos(alpha / 2), np.sin(alpha / 2)
    cb, sb = np.cos(beta / 2), np.sin(beta / 2)
    RA = np.array([[ca, sa], [-sa, ca]])
    RB = np.array([[cb, sb], [-sb, cb]])
    S = SINGLET.reshape(2, 2)
    amp = np.einsum("ij...,kl...,jl->ik...", RA, RB, S)
    return amp**2
