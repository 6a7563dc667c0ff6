"""Nonconvex solvers for min_x sum_j (|<a_j, x>| - b_j)^2.

Two backends: amplitude flow (generalized gradient descent with a
backtracking safeguard and optional truncation) and alternating projection
in Gerchberg-Saxton form. Both start from a spectral initializer by default.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels
from .measurements import SensingMatrix
from .metrics import phase_dist

INIT_MODES = ("spectral", "given", "random")

# Loss values below LOSS_FLOOR * ||b||^2 are treated as an exact fit.
LOSS_FLOOR = 1e-28


class DegenerateInputWarning(UserWarning):
    """Input carries no information (all-zero observations or a zero iterate)."""


class SolverDivergence(RuntimeError):
    """A non-finite iterate appeared; ``last_finite`` holds the previous one."""

    def __init__(self, message, last_finite):
        super().__init__(message)
        self.last_finite = last_finite


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 2000
    step_size: float = 0.6
    tol_rel_change: float = 1e-10
    truncation: float = 0.0
    init_mode: str = "spectral"
    power_iters: int = 100
    backtracking: bool = True
    seed: int = 0
    x_init: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.step_size > 0:
            raise ValueError("step_size must be > 0")
        if not self.tol_rel_change > 0:
            raise ValueError("tol_rel_change must be > 0")
        if self.truncation < 0:
            raise ValueError("truncation must be >= 0")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"init_mode must be one of {INIT_MODES}")
        if self.init_mode == "given" and self.x_init is None:
            raise ValueError("init_mode 'given' needs x_init")
        if self.power_iters < 1:
            raise ValueError("power_iters must be >= 1")


@dataclass
class SolverResult:
    x_hat: np.ndarray
    iterations_used: int
    converged: bool
    loss_trace: list
    dist_trace: list | None
    stationarity: float
    wall_time_ms: float
    residual: float | None = None


def _check(A: SensingMatrix, b, x=None):
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.m,):
        raise ValueError(f"b has shape {b.shape}, expected ({A.m},)")
    if x is not None:
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (A.d,):
            raise ValueError(f"x has shape {x.shape}, expected ({A.d},)")
    return b, x


def loss(A: SensingMatrix, b, x) -> float:
    b, x = _check(A, b, x)
    return kernels.amplitude_loss(A.B, b, x)


def gradient(A: SensingMatrix, b, x, truncation: float = 0.0):
    """Loss and Wirtinger subgradient with respect to conj(x).

    The real gradient over (Re x, Im x) is twice the real and imaginary
    parts of the returned vector.
    """
    b, x = _check(A, b, x)
    thresh = np.linalg.norm(x) / truncation if truncation > 0 else 0.0
    return kernels.amplitude_gradient(A.B, b, x, thresh)


def _leading_eigvec(B, weights, iters, seed):
    m, d = B.shape
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    BH = B.conj().T
    for _ in range(iters):
        w = BH @ (weights * (B @ v)) / m
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
    return v


def spectral_init(A: SensingMatrix, b, power_iters: int = 100, seed: int = 0) -> np.ndarray:
    """Leading eigenvector of (1/m) sum_j b_j^2 a_j a_j^*, scaled to sqrt(mean b^2).

    All-zero ``b`` gives the zero vector and a :class:`DegenerateInputWarning`.
    """
    b, _ = _check(A, b)
    if A.m < A.d:
        warnings.warn(f"spectral_init with m={A.m} < d={A.d}", stacklevel=2)
    b2 = b * b
    if not np.any(b2):
        warnings.warn("all observations are zero", DegenerateInputWarning, stacklevel=2)
        return np.zeros(A.d, dtype=np.complex128)
    v = _leading_eigvec(A.B, b2, power_iters, seed)
    return math.sqrt(b2.mean()) * v


def _initial_point(A, b, cfg: SolverConfig):
    if cfg.init_mode == "given":
        x = np.array(cfg.x_init, dtype=np.complex128)
        if x.shape != (A.d,):
            raise ValueError(f"x_init has shape {x.shape}, expected ({A.d},)")
        return x
    if cfg.init_mode == "random":
        rng = np.random.default_rng(cfg.seed)
        x = rng.standard_normal(A.d) + 1j * rng.standard_normal(A.d)
        return x * (math.sqrt(np.mean(b * b)) / np.linalg.norm(x))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateInputWarning)
        return spectral_init(A, b, cfg.power_iters, cfg.seed)


def stationarity_residual(A: SensingMatrix, b, x) -> float:
    """Scale-free violation of sum_j (|<a_j,x>| - b_j) |<a_j,x>| = 0.

    Normalized by m ||x|| max(||b||/sqrt(m), ||x||). At x = 0 the raw
    (unnormalized) sum is returned with a :class:`DegenerateInputWarning`.
    """
    b, x = _check(A, b, x)
    a = np.abs(A.forward(x))
    s = abs(float(np.dot(a - b, a)))
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        warnings.warn("stationarity at x = 0 is unnormalized", DegenerateInputWarning,
                      stacklevel=2)
        return s
    scale = max(float(np.linalg.norm(b)) / math.sqrt(A.m), nx)
    return s / (A.m * nx * scale)


def radial_rescale(A: SensingMatrix, b, x, max_scale=math.inf):
    """Exact minimizer of loss(t x) over t >= 0, capped at ``max_scale``.

    t* = sum_j b_j |<a_j,x>| / sum_j |<a_j,x>|^2. The loss is a convex
    quadratic in t, so capping keeps it non-increasing relative to t = 1
    whenever the cap is >= 1.
    """
    a = np.abs(A.forward(x))
    den = float(a @ a)
    if den == 0.0:
        return x
    t = min(max(float(b @ a) / den, 0.0), max_scale)
    return t * x


def _finish(A, b, x, it, converged, trace, dists, t0, truth=None, max_scale=math.inf,
            project=None, **extra):
    x_pol = radial_rescale(A, b, x, max_scale)
    if project is not None:
        x_pol = project(x_pol)
    f_pol = kernels.amplitude_loss(A.B, b, x_pol)
    if f_pol < trace[-1]:
        x = x_pol
        trace.append(f_pol)
        if dists is not None:
            dists.append(phase_dist(x, truth))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateInputWarning)
        stat = stationarity_residual(A, b, x)
    return SolverResult(
        x_hat=x,
        iterations_used=it,
        converged=converged,
        loss_trace=trace,
        dist_trace=dists,
        stationarity=stat,
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
        **extra,
    )


def _descent(A, b, x, cfg: SolverConfig, truth=None, project=None):
    """Shared (projected) amplitude-flow loop."""
    t0 = time.perf_counter()
    B, m = A.B, A.m
    if project is not None:
        x = project(x)

    def evaluate(z):
        thresh = np.linalg.norm(z) / cfg.truncation if cfg.truncation > 0 else 0.0
        return kernels.amplitude_gradient(B, b, z, thresh)

    floor = LOSS_FLOOR * max(float(b @ b), np.finfo(float).tiny)
    f, g = evaluate(x)
    trace = [f]
    dists = [phase_dist(x, truth)] if truth is not None else None
    mu = cfg.step_size
    converged = f <= floor
    it = 0
    while not converged and it < cfg.max_iters:
        it += 1
        while True:
            x_new = x - (mu / m) * g
            if project is not None:
                x_new = project(x_new)
            f_new, g_new = evaluate(x_new)
            if not (math.isfinite(f_new) and np.all(np.isfinite(x_new))):
                raise SolverDivergence(f"non-finite iterate at iteration {it}", x)
            if not cfg.backtracking or f_new <= f:
                break
            mu *= 0.5
            if mu < 1e-12 * cfg.step_size:
                # No descent available along the (projected) direction.
                x_new, f_new, g_new = x, f, g
                break
        change = abs(f - f_new)
        x, f, g = x_new, f_new, g_new
        mu = min(2.0 * mu, cfg.step_size)
        trace.append(f)
        if dists is not None:
            dists.append(phase_dist(x, truth))
        converged = f <= floor or change <= cfg.tol_rel_change * max(trace[-2], floor)
    return x, it, converged, trace, dists, t0


def amplitude_flow(A: SensingMatrix, b, cfg: SolverConfig | None = None, truth=None) -> SolverResult:
    """Amplitude flow: x <- x - (mu/m) sum_j (|<a_j,x>| - b_j) phase(<a_j,x>) a_j.

    The step is halved whenever the loss would increase. With
    ``cfg.truncation > 0`` terms with |<a_j,x>| < ||x||/truncation are dropped
    from the update. Stops on relative loss change below
    ``cfg.tol_rel_change``, an (numerically) exact fit, or ``max_iters``.
    """
    cfg = cfg or SolverConfig()
    b, _ = _check(A, b)
    x = _initial_point(A, b, cfg)
    x, it, conv, trace, dists, t0 = _descent(A, b, x, cfg, truth)
    return _finish(A, b, x, it, conv, trace, dists, t0, truth)


def alternating_projection(A: SensingMatrix, b, cfg: SolverConfig | None = None,
                           truth=None) -> SolverResult:
    """Gerchberg-Saxton iteration on min ||A x - c (.) b|| over x and unimodular c.

    Alternates c <- phase(<a_j, x>) (1 where the product is 0) with the
    least-squares update for x, reusing one QR factorization.
    """
    cfg = cfg or SolverConfig()
    b, _ = _check(A, b)
    t0 = time.perf_counter()
    B = A.B
    Q, R = np.linalg.qr(B)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= 1e-12 * max(diag.max(), np.finfo(float).tiny):
        raise np.linalg.LinAlgError(
            "least-squares step failed: sensing matrix is rank deficient"
        )
    QH = Q.conj().T
    x = _initial_point(A, b, cfg)
    floor = LOSS_FLOOR * max(float(b @ b), np.finfo(float).tiny)
    z = B @ x
    r = np.abs(z) - b
    f = float(r @ r)
    trace = [f]
    dists = [phase_dist(x, truth)] if truth is not None else None
    converged = f <= floor
    it = 0
    while not converged and it < cfg.max_iters:
        it += 1
        target = _unit_phase(z) * b
        x_new = solve_triangular(R, QH @ target)
        z = B @ x_new
        r = np.abs(z) - b
        f_new = float(r @ r)
        if not (math.isfinite(f_new) and np.all(np.isfinite(x_new))):
            raise SolverDivergence(f"non-finite iterate at iteration {it}", x)
        change = abs(f - f_new)
        x = x_new
        trace.append(f_new)
        if dists is not None:
            dists.append(phase_dist(x, truth))
        converged = f_new <= floor or change <= cfg.tol_rel_change * max(f, floor)
        f = f_new
    return _finish(A, b, x, it, converged, trace, dists, t0, truth)


def _unit_phase(z):
    a = np.abs(z)
    c = np.ones_like(z)
    nz = a > 0
    c[nz] = z[nz] / a[nz]
    return c


def with_init(cfg: SolverConfig, x_init) -> SolverConfig:
    """Copy of ``cfg`` starting from ``x_init``."""
    return replace(cfg, init_mode="given", x_init=np.asarray(x_init, dtype=np.complex128))
