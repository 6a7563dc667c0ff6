import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amplitude_pr import (
    DegenerateInputWarning,
    SolverConfig,
    SolverDivergence,
    alternating_projection,
    amplitude_flow,
    loss,
    make_ensemble,
    make_noise,
    observe,
    phase_dist,
    sample_matrix,
    spectral_init,
    stationarity_residual,
)
from amplitude_pr.measurements import SensingMatrix
from amplitude_pr.solvers import gradient, radial_rescale, with_init

from conftest import crandn


def _instance(m, d, seed, sigma=0.0, kind="zero-mean-gaussian"):
    A = sample_matrix(make_ensemble("complex-gaussian"), m, d, seed)
    r = np.random.default_rng(seed + 1000)
    x0 = crandn(r, d)
    x0 /= np.linalg.norm(x0)
    eta = make_noise(kind, [sigma], m, seed=seed + 2000)
    return A, x0, observe(A, x0, eta)


def test_config_validation():
    for bad in (dict(max_iters=0), dict(step_size=0), dict(tol_rel_change=0),
                dict(truncation=-1), dict(init_mode="x"), dict(init_mode="given"),
                dict(power_iters=0)):
        with pytest.raises(ValueError):
            SolverConfig(**bad)


def test_loss_examples(small_problem):
    A, x0, b = small_problem
    assert loss(A, b, x0) == pytest.approx(0.0, abs=1e-20)
    assert loss(A, b, np.zeros(8)) == pytest.approx(b @ b)
    eta = make_noise("zero-mean-gaussian", [0.2], A.m, seed=5)
    ms = observe(A, x0, eta)
    assert loss(A, ms.b, x0) == pytest.approx(eta.l2_norm ** 2, rel=1e-10)


def _fd_grad(A, b, x, h=1e-6):
    g = np.zeros(x.size, dtype=complex)
    for i in range(x.size):
        e = np.zeros(x.size, dtype=complex)
        e[i] = h
        gr = (loss(A, b, x + e) - loss(A, b, x - e)) / (2 * h)
        gi = (loss(A, b, x + 1j * e) - loss(A, b, x - 1j * e)) / (2 * h)
        g[i] = gr + 1j * gi
    return g


def test_gradient_matches_finite_differences():
    checked = 0
    for seed in range(140):
        r = np.random.default_rng(seed)
        m, d = 20 + seed % 30, 2 + seed % 7
        A = sample_matrix(make_ensemble("complex-gaussian"), m, d, seed)
        x = crandn(r, d)
        b = np.abs(A.forward(crandn(r, d))) + 0.3 * r.standard_normal(m)
        if np.min(np.abs(A.forward(x))) < 1e-8:
            continue
        _, g = gradient(A, b, x)
        fd = _fd_grad(A, b, x)
        # real gradient over (Re x, Im x) is 2 (Re g, Im g)
        assert np.linalg.norm(2 * g - fd) <= 1e-4 * np.linalg.norm(fd)
        checked += 1
        if checked == 100:
            break
    assert checked == 100


def test_start_at_truth_stays(small_problem):
    A, x0, b = small_problem
    _, g = gradient(A, b, x0)
    assert np.linalg.norm(g) <= 1e-12
    res = amplitude_flow(A, b, with_init(SolverConfig(), x0))
    assert phase_dist(res.x_hat, x0) <= 1e-12
    assert res.iterations_used == 0 and res.converged


def test_alternating_projection_fixed_point(small_problem):
    A, x0, b = small_problem
    res = alternating_projection(A, b, with_init(SolverConfig(), x0))
    assert phase_dist(res.x_hat, x0) <= 1e-12


def test_alternating_projection_zero_data():
    A, _, _ = _instance(40, 4, 1)
    res = alternating_projection(A, np.zeros(40), SolverConfig(init_mode="random", max_iters=1))
    np.testing.assert_allclose(res.x_hat, 0.0, atol=1e-300)


def test_alternating_projection_rank_deficient():
    M = np.ones((10, 3), dtype=complex)
    with pytest.raises(np.linalg.LinAlgError, match="least-squares"):
        alternating_projection(SensingMatrix.from_array(M), np.ones(10))


def test_spectral_init_zero_data_warns():
    A, _, _ = _instance(40, 4, 1)
    with pytest.warns(DegenerateInputWarning):
        x = spectral_init(A, np.zeros(40))
    assert np.all(x == 0)


def test_spectral_init_underdetermined_warns():
    A, _, ms = _instance(3, 5, 1)
    with pytest.warns(UserWarning, match="m=3 < d=5"):
        spectral_init(A, ms.b)


def _spectral_hits(ratio, d=32, trials=50):
    good = 0
    for seed in range(trials):
        A, x0, ms = _instance(ratio * d, d, seed)
        good += phase_dist(spectral_init(A, ms.b, seed=seed), x0) <= 0.5
    return good


def test_spectral_init_quality_m_10d():
    # Stated band: dist <= 0.5 in >= 90% of 50 trials at m = 10 d.
    assert _spectral_hits(10) >= 45


def test_spectral_init_quality_m_30d():
    assert _spectral_hits(30) >= 45


def test_spectral_init_matches_dense_eigenvector():
    A, x0, ms = _instance(120, 6, 9)
    Y = (A.B.conj().T * ms.b ** 2) @ A.B / A.m
    w, V = np.linalg.eigh(Y)
    v = spectral_init(A, ms.b, power_iters=2000)
    assert phase_dist(v / np.linalg.norm(v), V[:, -1]) <= 1e-8


def test_spectral_init_scales_linearly():
    A, x0, ms = _instance(200, 8, 3)
    v1 = spectral_init(A, ms.b, seed=1)
    v3 = spectral_init(A, 3.0 * ms.b, seed=1)
    assert np.linalg.norm(v3) == pytest.approx(3 * np.linalg.norm(v1), rel=1e-12)
    assert phase_dist(v3, 3 * v1) <= 1e-8


@pytest.mark.parametrize("solver", [amplitude_flow, alternating_projection])
def test_noiseless_recovery_and_traces(solver):
    A, x0, ms = _instance(256, 32, 0)
    res = solver(A, ms.b, truth=x0)
    assert phase_dist(res.x_hat, x0) <= 1e-6
    assert len(res.dist_trace) == len(res.loss_trace)
    assert res.stationarity == stationarity_residual(A, ms.b, res.x_hat)
    assert res.wall_time_ms > 0


@pytest.mark.parametrize("trunc", [0.0, 5.0])
@pytest.mark.parametrize("sigma", [0.05, 0.5])
def test_loss_trace_non_increasing(trunc, sigma):
    A, x0, ms = _instance(200, 10, 4, sigma)
    res = amplitude_flow(A, ms.b, SolverConfig(truncation=trunc, max_iters=300))
    t = np.array(res.loss_trace)
    assert np.all(np.diff(t) <= 1e-12 * t[0])


def test_alternating_projection_step_monotone():
    # each half-step is an exact minimization of ||Ax - c(.)b|| for b >= 0
    A, x0, ms = _instance(120, 6, 8, 0.05, kind="constant")
    b = ms.b
    B = A.B
    x = spectral_init(A, b)
    Q, R = np.linalg.qr(B)
    prev = np.inf
    for _ in range(30):
        z = B @ x
        c = np.where(np.abs(z) > 0, z / np.where(np.abs(z) > 0, np.abs(z), 1), 1)
        obj_c = np.linalg.norm(z - c * b)
        assert obj_c <= prev + 1e-12
        x = np.linalg.solve(R, Q.conj().T @ (c * b))
        prev = np.linalg.norm(B @ x - c * b)
        assert prev <= obj_c + 1e-12


@pytest.mark.parametrize("solver", [amplitude_flow, alternating_projection])
@pytest.mark.parametrize("alpha", [0.7, 2.5])
def test_phase_equivariance(solver, alpha):
    A, x0, ms = _instance(150, 8, 6, 0.1)
    x_init = spectral_init(A, ms.b)
    base = solver(A, ms.b, with_init(SolverConfig(max_iters=200), x_init))
    rot = solver(A, ms.b, with_init(SolverConfig(max_iters=200), np.exp(1j * alpha) * x_init))
    assert phase_dist(base.x_hat, rot.x_hat) <= 1e-8 * np.linalg.norm(base.x_hat)


def test_stationarity_examples(small_problem):
    A, x0, b = small_problem
    assert stationarity_residual(A, b, x0) == pytest.approx(0.0, abs=1e-14)
    assert stationarity_residual(A, b, 10 * x0) > 0.1
    with pytest.warns(DegenerateInputWarning):
        raw = stationarity_residual(A, b, np.zeros(8))
    assert raw == 0.0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), sigma=st.sampled_from([0.0, 0.05, 0.3]))
def test_converged_runs_are_stationary(seed, sigma):
    A, x0, ms = _instance(160, 8, seed, sigma)
    for solver in (amplitude_flow, alternating_projection):
        res = solver(A, ms.b)
        if res.converged:
            assert res.stationarity <= 1e-6


def test_radial_rescale_is_exact_line_minimizer(small_problem):
    A, x0, b = small_problem
    x = 0.3 * x0 + 0.05
    y = radial_rescale(A, b, x)
    ts = np.linspace(0.5, 5, 2001)
    best = min(loss(A, b, t * x) for t in ts)
    assert loss(A, b, y) <= best + 1e-12
    assert np.allclose(radial_rescale(A, b, x, max_scale=1.0), x)


def test_divergence_carries_last_finite():
    A, x0, ms = _instance(40, 4, 2)
    with pytest.raises(SolverDivergence) as info:
        with np.errstate(all="ignore"):
            amplitude_flow(A, ms.b, SolverConfig(backtracking=False, step_size=1e150))
    assert np.all(np.isfinite(info.value.last_finite))


def test_dimension_errors(small_problem):
    A, x0, b = small_problem
    with pytest.raises(ValueError):
        loss(A, b[:-1], x0)
    with pytest.raises(ValueError):
        amplitude_flow(A, b, with_init(SolverConfig(), np.zeros(3)))
