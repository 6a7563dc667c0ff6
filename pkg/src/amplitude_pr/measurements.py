"""Sub-Gaussian complex sensing ensembles and amplitude observations.

Inner products follow one convention everywhere in the package:
``<a, x> = sum_i conj(a_i) x_i``. A :class:`SensingMatrix` stores the
measurement vectors ``a_j`` as rows of ``entries``; ``SensingMatrix.B`` is
the conjugate, so ``B @ x`` gives every ``<a_j, x>`` at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

ENSEMBLE_KINDS = ("complex-gaussian", "ternary", "complex-rademacher", "custom-discrete")
NOISE_KINDS = ("zero-mean-gaussian", "shifted-gaussian", "constant", "explicit")

_MAX_ENTRIES = 2**31


@dataclass(frozen=True)
class EntryDistribution:
    """A complex scalar law together with its analytic moments.

    ``pseudo_second`` is E[xi^2] and ``abs_fourth`` is gamma = E|xi|^4.
    ``psi2_bound`` is an optional user-documented sub-Gaussian norm bound;
    it is never computed.
    """

    kind: str
    params: tuple = ()
    mean: complex = 0j
    pseudo_second: complex = 0j
    abs_second: float = 1.0
    abs_fourth: float = 2.0
    atoms: tuple = ()
    probs: tuple = ()
    psi2_bound: float | None = None

    @property
    def gamma(self) -> float:
        return self.abs_fourth

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        """Draw i.i.d. entries with the given shape (a tuple)."""
        shape = tuple(shape)
        if self.kind == "complex-gaussian":
            z = rng.standard_normal(shape + (2,))
            return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)
        if self.kind in ("ternary", "complex-rademacher"):
            p = self.params[0] if self.kind == "ternary" else 0.5
            v = 1.0 / (2.0 * math.sqrt(p))
            levels = np.array([-v, 0.0, v])
            idx = rng.choice(3, size=shape + (2,), p=[p, 1.0 - 2.0 * p, p])
            parts = levels[idx]
            return parts[..., 0] + 1j * parts[..., 1]
        if self.kind == "custom-discrete":
            atoms = np.asarray(self.atoms, dtype=np.complex128)
            return atoms[rng.choice(len(atoms), size=shape, p=np.asarray(self.probs))]
        raise ValueError(f"unknown ensemble kind {self.kind!r}")


def make_ensemble(kind: str, params=()) -> EntryDistribution:
    """Build an :class:`EntryDistribution` with its moments filled in.

    Kinds: ``complex-gaussian``; ``ternary`` with ``params=[p]``, 0 < p <= 1/2,
    where real and imaginary parts are independent and take +-1/(2 sqrt p)
    with probability p each; ``complex-rademacher`` ((+-1 +- i)/sqrt 2);
    ``custom-discrete`` with ``params=[atoms, probs]``.
    """
    params = tuple(params or ())
    if kind == "complex-gaussian":
        return EntryDistribution(kind, (), 0j, 0j, 1.0, 2.0)
    if kind == "ternary":
        if len(params) != 1:
            raise ValueError("ternary ensemble takes exactly one parameter p")
        p = float(params[0])
        if not 0.0 < p <= 0.5:
            raise ValueError(f"ternary parameter p must lie in (0, 1/2], got {p}")
        return EntryDistribution(kind, (p,), 0j, 0j, 1.0, 1.0 / (4.0 * p) + 0.5)
    if kind == "complex-rademacher":
        return EntryDistribution(kind, (), 0j, 0j, 1.0, 1.0)
    if kind == "custom-discrete":
        if len(params) != 2:
            raise ValueError("custom-discrete ensemble takes [atoms, probs]")
        atoms = np.asarray(params[0], dtype=np.complex128).ravel()
        probs = np.asarray(params[1], dtype=np.float64).ravel()
        if atoms.size == 0 or atoms.shape != probs.shape:
            raise ValueError("custom-discrete atoms and probs must be non-empty and equal length")
        if np.any(probs < 0) or not math.isclose(probs.sum(), 1.0, abs_tol=1e-12):
            raise ValueError("custom-discrete probs must be nonnegative and sum to 1")
        abs2 = float(probs @ np.abs(atoms) ** 2)
        if not math.isclose(abs2, 1.0, rel_tol=1e-9):
            raise ValueError(
                f"custom-discrete atoms have E|xi|^2 = {abs2:.6g}; "
                f"divide the atoms by {math.sqrt(abs2):.6g} to normalize"
            )
        return EntryDistribution(
            kind,
            (tuple(atoms.tolist()), tuple(probs.tolist())),
            complex(probs @ atoms),
            complex(probs @ atoms**2),
            abs2,
            float(probs @ np.abs(atoms) ** 4),
            atoms=tuple(atoms.tolist()),
            probs=tuple(probs.tolist()),
        )
    raise ValueError(f"unknown ensemble kind {kind!r}; expected one of {ENSEMBLE_KINDS}")


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """m x d complex matrix whose rows are the measurement vectors a_j."""

    entries: np.ndarray
    ensemble: str
    seed: int | None = None

    def __post_init__(self):
        self.entries.flags.writeable = False

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def d(self) -> int:
        return self.entries.shape[1]

    @cached_property
    def B(self) -> np.ndarray:
        """Row-conjugated entries; ``B @ x`` is the vector of <a_j, x>."""
        out = np.ascontiguousarray(self.entries.conj())
        out.flags.writeable = False
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.B @ x

    @classmethod
    def from_array(cls, entries, ensemble: str = "explicit") -> SensingMatrix:
        arr = np.array(entries, dtype=np.complex128, order="C", ndmin=2)
        return cls(arr, ensemble, None)


def sample_matrix(dist: EntryDistribution, m: int, d: int, seed: int) -> SensingMatrix:
    """Draw an m x d sensing matrix; identical arguments give identical entries."""
    if m < 1 or d < 1:
        raise ValueError(f"need m >= 1 and d >= 1, got m={m}, d={d}")
    if m * d > _MAX_ENTRIES:
        raise ValueError(f"m*d = {m * d} exceeds the addressable limit {_MAX_ENTRIES}")
    rng = np.random.default_rng(seed)
    entries = np.ascontiguousarray(dist.sample(rng, (m, d)), dtype=np.complex128)
    return SensingMatrix(entries, dist.kind, seed)


def empirical_moments(dist: EntryDistribution, n: int, seed: int = 0):
    """Sample (mean, E xi^2, E|xi|^2, E|xi|^4) from n draws."""
    if n < 1000:
        raise ValueError("empirical_moments needs n >= 1000")
    xi = dist.sample(np.random.default_rng(seed), (n,))
    a = np.abs(xi)
    a2 = a * a
    return complex(xi.mean()), complex((xi * xi).mean()), float(a2.mean()), float((a2 * a2).mean())


@dataclass(frozen=True, eq=False)
class NoiseVector:
    values: np.ndarray
    kind: str = "explicit"
    params: tuple = ()
    l2_norm: float = field(init=False)
    sum: float = field(init=False)
    bias_ratio: float = field(init=False)

    def __post_init__(self):
        v = self.values
        v.flags.writeable = False
        norm = float(np.linalg.norm(v))
        total = float(v.sum())
        if norm == 0.0:
            ratio = 0.0
        elif np.all(v == v[0]):
            ratio = 1.0
        else:
            ratio = abs(total) / (math.sqrt(v.size) * norm)
        object.__setattr__(self, "l2_norm", norm)
        object.__setattr__(self, "sum", total)
        # Cauchy-Schwarz bounds the ratio by 1; rounding can overshoot.
        object.__setattr__(self, "bias_ratio", min(ratio, 1.0))

    @property
    def m(self) -> int:
        return self.values.size


def make_noise(kind: str, params=(), m: int | None = None, seed: int | None = 0) -> NoiseVector:
    """Build a noise vector.

    ``zero-mean-gaussian`` takes [sigma]; ``shifted-gaussian`` takes [mu, sigma];
    ``constant`` takes [c]; ``explicit`` takes the values themselves.
    """
    params = tuple(params or ())
    if kind == "explicit":
        values = np.array(params, dtype=np.float64).ravel()
        if m is not None and values.size != m:
            raise ValueError(f"explicit noise has {values.size} values, expected m={m}")
        if values.size == 0:
            raise ValueError("noise vector must have m >= 1 entries")
        return NoiseVector(values, kind, ())
    if m is None or m < 1:
        raise ValueError(f"noise needs m >= 1, got {m}")
    rng = np.random.default_rng(seed)
    if kind == "zero-mean-gaussian":
        (sigma,) = params
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        values = sigma * rng.standard_normal(m)
    elif kind == "shifted-gaussian":
        mu, sigma = params
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        values = mu + sigma * rng.standard_normal(m)
    elif kind == "constant":
        (c,) = params
        values = np.full(m, float(c))
    else:
        raise ValueError(f"unknown noise kind {kind!r}; expected one of {NOISE_KINDS}")
    return NoiseVector(values, kind, tuple(float(p) for p in params))


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    A: SensingMatrix
    x0: np.ndarray
    eta: NoiseVector
    b: np.ndarray


def observe(A: SensingMatrix, x0, eta: NoiseVector) -> MeasurementSet:
    """Amplitude observations b_j = |<a_j, x0>| + eta_j (no clipping)."""
    x0 = np.asarray(x0, dtype=np.complex128)
    if x0.shape != (A.d,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({A.d},)")
    if eta.m != A.m:
        raise ValueError(f"noise has length {eta.m}, expected m={A.m}")
    b = np.abs(A.forward(x0)) + eta.values
    b.flags.writeable = False
    return MeasurementSet(A, x0, eta, b)


def chi_square_epsilon(m: int, sigma: float) -> float:
    """Noise level eps with ||eta||_2 <= eps w.p. >= 1 - 1/m for N(0, sigma^2) noise."""
    if m < 2:
        raise ValueError("chi_square_epsilon needs m >= 2")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    lm = math.log(m)
    return math.sqrt(m + 2.0 * math.sqrt(m * lm) + 2.0 * lm) * sigma


def operator_norm_estimate(A, iters: int = 500, tol: float = 1e-14, seed: int = 0) -> float:
    """Largest singular value by power iteration on A* A."""
    if iters < 10:
        raise ValueError("operator_norm_estimate needs iters >= 10")
    M = A.entries if isinstance(A, SensingMatrix) else np.asarray(A)
    d = M.shape[1]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = M.conj().T @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = float(np.real(np.vdot(v, w)))
        v = w / nw
        if abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    return math.sqrt(max(lam, 0.0))
