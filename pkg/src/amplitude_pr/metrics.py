"""Phase-invariant distances and residuals."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np



def _pair(x, y):
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return x, y


def _sq(v):
    return float(np.vdot(v, v).real)


def _rotate(x, y):
    """e^{i theta*} y with <x, e^{i theta*} y> real and >= 0."""
    c = np.vdot(y, x)
    theta = float(np.angle(c)) % (2.0 * math.pi) if c != 0 else 0.0
    return theta, np.exp(1j * theta) * y


def phase_dist(x, y) -> float:
    """min over theta of ||x - e^{i theta} y||_2."""
    x, y = _pair(x, y)
    # Norm of the aligned difference rather than sqrt(|x|^2 + |y|^2 - 2|<x,y>|),
    # which cancels catastrophically for nearby vectors.
    return math.sqrt(_sq(x - _rotate(x, y)[1]))


@dataclass(frozen=True, eq=False)
class AlignedPair:
    x_hat: np.ndarray
    x0: np.ndarray
    theta_star: float
    dist: float

    @property
    def aligned_x0(self) -> np.ndarray:
        return np.exp(1j * self.theta_star) * self.x0


def align(x, y) -> AlignedPair:
    """Rotate ``y`` onto ``x``.

    theta* is the argument of sum_i conj(y_i) x_i, so that
    <x, e^{i theta*} y> is real and nonnegative; theta* = 0 when the
    inner product vanishes.
    """
    x, y = _pair(x, y)
    theta, yr = _rotate(x, y)
    return AlignedPair(x, y, theta, math.sqrt(_sq(x - yr)))


def lifted_dist(x, y) -> float:
    """||x x^* - y y^*||_F without forming the d x d matrices."""
    x, y = _pair(x, y)
    nx = _sq(x)
    if nx == 0.0:
        return _sq(y)
    # With w = e^{i theta*} y - x:
    #   ||xx* - yy*||_F^2 = (|x|^2 - |y|^2)^2 + 2 |x|^2 |P w|^2,
    # P the projector orthogonal to x. Both terms are formed from w, so there
    # is no cancellation when y is close to x.
    w = _rotate(x, y)[1] - x
    gap = -float(np.vdot(w, 2.0 * x + w).real)
    pw = w - (np.vdot(x, w) / nx) * x
    return math.sqrt(gap * gap + 2.0 * nx * _sq(pw))


def residual(A, x, b) -> float:
    """sqrt(sum_j (|<a_j, x>| - b_j)^2)."""
    x = np.asarray(x, dtype=np.complex128)
    b = np.asarray(b, dtype=np.float64)
    if x.shape != (A.d,) or b.shape != (A.m,):
        raise ValueError(f"dimension mismatch: A is {A.m}x{A.d}, x {x.shape}, b {b.shape}")
    # Same forward path as observe(), so x = x0 with zero noise gives exactly 0.
    return float(np.linalg.norm(np.abs(A.forward(x)) - b))
