"""Monte Carlo envelopes of restricted isometry constants for the lifted map.

The lifted map sends a Hermitian matrix X to (a_j^* X a_j)_j. Samples are
rank-2, k-column-sparse, unit-Frobenius matrices kept in factored form
X = lam1 u1 u1^* + lam2 u2 u2^*; no d x d matrix is formed.

The reported constants are empirical min/max over the drawn samples, not
certified worst-case values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .measurements import SensingMatrix
from .seeding import derive_seed

HIST_BINS = 50


@dataclass(frozen=True, eq=False)
class LiftedSample:
    lambda1: float
    lambda2: float
    u1: np.ndarray
    u2: np.ndarray
    S: np.ndarray
    d: int
    k: int

    def dense(self) -> np.ndarray:
        return (self.lambda1 * np.outer(self.u1, self.u1.conj())
                + self.lambda2 * np.outer(self.u2, self.u2.conj()))


def sample_lifted(d: int, k: int, seed) -> LiftedSample:
    """Uniform support of size k, orthonormal complex-Gaussian u1, u2 on it,
    and (lam1, lam2) uniform on the unit circle."""
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    rng = np.random.default_rng(seed)
    S = np.sort(rng.choice(d, size=k, replace=False))
    u1 = np.zeros(d, dtype=np.complex128)
    u2 = np.zeros(d, dtype=np.complex128)
    if k == 1:
        u1[S] = 1.0
        lam1 = 1.0 if rng.random() < 0.5 else -1.0
        return LiftedSample(lam1, 0.0, u1, u2, S, d, k)
    G = rng.standard_normal((k, 2)) + 1j * rng.standard_normal((k, 2))
    Q, _ = np.linalg.qr(G)
    u1[S] = Q[:, 0]
    u2[S] = Q[:, 1]
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return LiftedSample(math.cos(phi), math.sin(phi), u1, u2, S, d, k)


def witness_sample(d: int) -> LiftedSample:
    """X = (e1 e1^* - e2 e2^*)/sqrt(2), annihilated by any unit-modulus ensemble."""
    if d < 2:
        raise ValueError("witness needs d >= 2")
    u1 = np.zeros(d, dtype=np.complex128)
    u2 = np.zeros(d, dtype=np.complex128)
    u1[0] = 1.0
    u2[1] = 1.0
    s = 1.0 / math.sqrt(2.0)
    return LiftedSample(s, -s, u1, u2, np.array([0, 1]), d, 2)


def apply_lifted(A: SensingMatrix, X: LiftedSample) -> np.ndarray:
    """Entries lam1 |<a_j,u1>|^2 + lam2 |<a_j,u2>|^2, real by construction."""
    if X.d != A.d:
        raise ValueError(f"sample has d={X.d}, matrix has d={A.d}")
    BS = A.B[:, X.S]
    return kernels.lifted_forward(BS, X.u1[X.S], X.u2[X.S], X.lambda1, X.lambda2)


def rip_ratio(A: SensingMatrix, X: LiftedSample) -> float:
    """(1/m) ||A(X)||_1 for unit-Frobenius X."""
    return float(np.abs(apply_lifted(A, X)).sum()) / A.m


def _n_drop(beta0: float, m: int) -> int:
    # ceil(beta0 m), robust to beta0*m landing just above an integer.
    return min(m, math.ceil(beta0 * m - 1e-9))


def _check_beta0(beta0):
    if not 0.0 <= beta0 < 1.0:
        raise ValueError(f"beta0 must lie in [0, 1), got {beta0}")


def trimmed_sum(values, beta0: float) -> float:
    """Sum of |values| after removing the ceil(beta0 m) largest magnitudes."""
    _check_beta0(beta0)
    a = np.sort(np.abs(values))
    return float(a[: a.size - _n_drop(beta0, a.size)].sum())


def strong_rip_ratio(A: SensingMatrix, X: LiftedSample, beta0: float) -> float:
    """Smallest (1/m) ||A_I(X)||_1 over index sets that keep all but the
    ceil(beta0 m) largest entries; dropping the largest magnitudes is the
    minimizing choice."""
    return trimmed_sum(apply_lifted(A, X), beta0) / A.m


@dataclass
class RipEstimate:
    c_minus_hat: float
    c_plus_hat: float
    strong_c_minus_hat: float
    beta0: float
    trials: int
    hist_counts: np.ndarray
    hist_edges: np.ndarray
    ratios: np.ndarray
    strong_ratios: np.ndarray


def estimate_rip_constants(A: SensingMatrix, d: int, k: int, trials: int, beta0: float,
                           seed: int, include_witness: bool = False) -> RipEstimate:
    """Empirical min/max of the RIP ratio (and min of the trimmed ratio)
    over ``trials`` fresh samples, optionally plus the unit-modulus witness."""
    if trials < 100:
        raise ValueError("estimate_rip_constants needs trials >= 100")
    _check_beta0(beta0)
    samples = (sample_lifted(d, k, derive_seed(seed, 0, t)) for t in range(trials))
    if include_witness:
        samples = [witness_sample(d), *samples]
    ratios, strong = [], []
    for X in samples:
        v = apply_lifted(A, X)
        ratios.append(float(np.abs(v).sum()) / A.m)
        strong.append(trimmed_sum(v, beta0) / A.m)
    ratios = np.array(ratios)
    counts, edges = np.histogram(ratios, bins=HIST_BINS)
    return RipEstimate(
        c_minus_hat=float(ratios.min()),
        c_plus_hat=float(ratios.max()),
        strong_c_minus_hat=float(min(strong)),
        beta0=beta0,
        trials=len(ratios),
        hist_counts=counts,
        hist_edges=edges,
        ratios=ratios,
        strong_ratios=np.array(strong),
    )


def beta0_default(c0: float) -> float:
    """min{c0/8, exp(-c0/8), 1/4}."""
    if not c0 > 0:
        raise ValueError("c0 must be > 0")
    return min(c0 / 8.0, math.exp(-c0 / 8.0), 0.25)


def trimmed_index_set(A: SensingMatrix, x_hat, x0, beta0: float) -> np.ndarray:
    """Indices of the floor((1-beta0) m) smallest |<a_j,x_hat>| + |<a_j,x0>|,
    in ascending order of that score (ties by index)."""
    _check_beta0(beta0)
    xi = np.abs(A.forward(np.asarray(x_hat, dtype=np.complex128))) + np.abs(
        A.forward(np.asarray(x0, dtype=np.complex128)))
    order = np.argsort(xi, kind="stable")
    return order[: A.m - _n_drop(beta0, A.m)]


def trimmed_lifted_ratio(A: SensingMatrix, x_hat, x0, eta_norm: float, beta0: float) -> float:
    """(1/sqrt m) ||A_I(x_hat x_hat^* - x0 x0^*)||_1 / (||eta|| (||x_hat|| + ||x0||))
    with I from :func:`trimmed_index_set`."""
    x_hat = np.asarray(x_hat, dtype=np.complex128)
    x0 = np.asarray(x0, dtype=np.complex128)
    I = trimmed_index_set(A, x_hat, x0, beta0)
    za = np.abs(A.forward(x_hat)[I])
    zb = np.abs(A.forward(x0)[I])
    num = float(np.abs(za * za - zb * zb).sum()) / math.sqrt(A.m)
    den = eta_norm * (np.linalg.norm(x_hat) + np.linalg.norm(x0))
    return num / den if den > 0 else math.inf
