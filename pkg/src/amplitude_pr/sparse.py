"""Sparse recovery: projected amplitude flow on a complex l1 ball.

The constrained l1 program (minimize ||x||_1 subject to a residual bound) is
handled through a surrogate: amplitude flow projected onto
{x : ||x||_1 <= R}, followed by a feasibility check at the noise level eps.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .measurements import SensingMatrix
from .metrics import residual
from .solvers import (
    DegenerateInputWarning,
    SolverConfig,
    SolverResult,
    _check,
    _descent,
    _finish,
    _initial_point,
    spectral_init,
)

PROJECTIONS = ("l1", "topk")


@dataclass(frozen=True)
class SparseConfig:
    radius: float
    epsilon: float = 0.0
    k: int | None = None
    projection: str = "l1"
    inner: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be > 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.projection not in PROJECTIONS:
            raise ValueError(f"projection must be one of {PROJECTIONS}")
        if self.projection == "topk" and self.k is None:
            raise ValueError("top-k projection needs k")


def _simplex_cap(v, R):
    """Project nonnegative v onto {w >= 0, sum w <= R} by sorted thresholding."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    if css[-1] <= R:
        return v.copy()
    ks = np.arange(1, u.size + 1)
    rho = np.nonzero(u * ks > css - R)[0][-1]
    tau = max((css[rho] - R) / (rho + 1.0), 0.0)
    return np.maximum(v - tau, 0.0)


def project_l1_ball(x, R: float) -> np.ndarray:
    """Euclidean projection of a complex vector onto {z : ||z||_1 <= R}.

    Moduli are soft-thresholded onto the capped simplex; phases are kept.
    """
    if not R > 0:
        raise ValueError("radius must be > 0")
    x = np.asarray(x, dtype=np.complex128)
    a = np.abs(x)
    w = _simplex_cap(a, R)
    if np.array_equal(w, a):
        return x
    out = np.zeros_like(x)
    nz = (w > 0) & (a > 0)
    out[nz] = x[nz] * (w[nz] / a[nz])
    return out


def project_top_k(x, k: int) -> np.ndarray:
    """Keep the k largest-modulus entries (ties by lower index)."""
    x = np.asarray(x, dtype=np.complex128)
    keep = np.argsort(-np.abs(x), kind="stable")[:k]
    out = np.zeros_like(x)
    out[keep] = x[keep]
    return out


def sparse_spectral_init(A: SensingMatrix, b, k: int, power_iters: int = 100,
                         seed: int = 0) -> np.ndarray:
    """Spectral initializer restricted to the k columns with largest
    (1/m) sum_j b_j^2 |A_ji|^2, embedded back into d coordinates."""
    b, _ = _check(A, b)
    if not 1 <= k <= A.d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={A.d}")
    b2 = b * b
    if not np.any(b2):
        warnings.warn("all observations are zero", DegenerateInputWarning, stacklevel=2)
        return np.zeros(A.d, dtype=np.complex128)
    scores = b2 @ (np.abs(A.entries) ** 2) / A.m
    S = np.sort(np.argsort(-scores, kind="stable")[:k])
    sub = SensingMatrix.from_array(A.entries[:, S], A.ensemble)
    x = np.zeros(A.d, dtype=np.complex128)
    x[S] = spectral_init(sub, b, power_iters, seed)
    return x


def feasibility_check(A: SensingMatrix, b, x, epsilon: float):
    """(residual <= epsilon, residual)."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    r = residual(A, x, b)
    return r <= epsilon, r


def zero_solution_check(b, epsilon: float) -> bool:
    """True when x = 0 satisfies the residual constraint, i.e. ||b||_2 <= eps."""
    return float(np.linalg.norm(np.asarray(b, dtype=np.float64))) <= epsilon


def sparse_amplitude_flow(A: SensingMatrix, b, cfg: SparseConfig, truth=None) -> SolverResult:
    """Projected amplitude flow; the output satisfies ||x_hat||_1 <= R.

    Starts from :func:`sparse_spectral_init` when ``cfg.k`` is set and the
    inner config asks for spectral initialization.
    """
    b, _ = _check(A, b)
    inner = cfg.inner
    if inner.init_mode == "spectral" and cfg.k is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateInputWarning)
            x = sparse_spectral_init(A, b, cfg.k, inner.power_iters, inner.seed)
    else:
        x = _initial_point(A, b, inner)
    R = cfg.radius
    if cfg.projection == "l1":
        def project(v):
            return project_l1_ball(v, R)
    else:
        def project(v):
            return project_l1_ball(project_top_k(v, cfg.k), R)
    x, it, conv, trace, dists, t0 = _descent(A, b, x, inner, truth, project)
    l1 = float(np.abs(x).sum())
    cap = R / l1 if l1 > 0 else math.inf
    res = _finish(A, b, x, it, conv, trace, dists, t0, truth, max_scale=cap, project=project)
    res.residual = math.sqrt(res.loss_trace[-1])
    return res
