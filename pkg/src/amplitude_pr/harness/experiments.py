"""Experiment runners.

Every trial is a pure function of (config, cell, seed): the seed is derived
from the master seed and the (cell, trial) pair, and all randomness of the
trial (x0, sensing matrix, noise, RIP samples) is drawn from it. Trials may
run in a process pool; rows are merged in (cell, trial) order.
"""
from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..measurements import (
    chi_square_epsilon,
    empirical_moments,
    make_ensemble,
    make_noise,
    observe,
    sample_matrix,
)
from ..metrics import lifted_dist, phase_dist
from ..rip import estimate_rip_constants, trimmed_lifted_ratio
from ..seeding import derive_seed
from ..solvers import (
    DegenerateInputWarning,
    SolverDivergence,
    alternating_projection,
    amplitude_flow,
)
from ..sparse import SparseConfig, sparse_amplitude_flow, zero_solution_check
from .config import ExperimentConfig, Spec, sparse_m
from .report import ExperimentReport, scalar_row, summarize_cell

MOMENT_COLUMNS = ("experiment", "ensemble", "stat", "n", "seed", "mean_re", "mean_im",
                  "pseudo_re", "pseudo_im", "abs_second", "abs_fourth", "max_abs_err")


def _sub_seeds(seed: int, n: int = 4):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)]


def _unit_gaussian(rng, d, norm):
    x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return x * (norm / np.linalg.norm(x))


def _sparse_vector(rng, d, k, norm):
    S = np.sort(rng.choice(d, size=k, replace=False))
    x = np.zeros(d, dtype=np.complex128)
    v = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    x[S] = v * (norm / np.linalg.norm(v))
    return x, S


def _noise_moments(spec: Spec):
    """(mu, sigma) columns for a noise spec."""
    if spec.kind == "zero-mean-gaussian":
        return 0.0, float(spec.params[0])
    if spec.kind == "shifted-gaussian":
        return float(spec.params[0]), float(spec.params[1])
    if spec.kind == "constant":
        return float(spec.params[0]), 0.0
    return None, None


# -- cells ------------------------------------------------------------------

def cells(cfg: ExperimentConfig) -> list:
    """Grid cells in deterministic order; each is a dict of cell parameters."""
    name = cfg.experiment
    out = []
    if name in ("error-scaling", "sharpness", "zero-mean"):
        for ens, d, m, noise in itertools.product(cfg.ensemble, cfg.d, cfg.m, cfg.noise):
            out.append(dict(ensemble=ens, d=d, m=m, k=None, noise=noise))
    elif name == "sparse":
        for ens, d, k, noise in itertools.product(cfg.ensemble, cfg.d, cfg.k, cfg.noise):
            for m in cfg.m or [sparse_m(cfg.m_factor, k, d)]:
                out.append(dict(ensemble=ens, d=d, m=m, k=k, noise=noise))
    elif name in ("sparse-sharpness", "degenerate"):
        for ens, d, m in itertools.product(cfg.ensemble, cfg.d, cfg.m):
            out.append(dict(ensemble=ens, d=d, m=m, k=None, noise=None))
    elif name == "rip-table":
        for ens, d, k, m, b0 in itertools.product(cfg.ensemble, cfg.d, cfg.k, cfg.m, cfg.beta0):
            if k <= d:
                out.append(dict(ensemble=ens, d=d, m=m, k=k, noise=None, beta0=b0))
    else:
        raise ValueError(f"experiment {name!r} has no cell grid")
    for i, c in enumerate(out):
        c["cell"] = i
    return out


def _base_row(cfg, cell, seed):
    dist = make_ensemble(cell["ensemble"].kind, cell["ensemble"].params)
    row = dict(
        experiment=cfg.experiment, cell=cell["cell"], m=cell["m"], d=cell["d"], k=cell["k"],
        ensemble=cell["ensemble"].label, gamma=dist.gamma, seed=seed, summary=False,
        x0_norm=cfg.x0_norm,
    )
    if cell.get("noise") is not None:
        row["noise"] = cell["noise"].label
        row["mu"], row["sigma"] = _noise_moments(cell["noise"])
    return dist, row


def _noise_columns(row, eta, m):
    row["eta_norm"] = eta.l2_norm
    row["eta_sum"] = eta.sum
    row["bias_ratio"] = eta.bias_ratio


def _solve(cfg, A, b, x0):
    fn = amplitude_flow if cfg.solver == "amplitude-flow" else alternating_projection
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateInputWarning)
        return fn(A, b, cfg.solver_cfg())


def _result_columns(row, res, x0):
    row["dist"] = phase_dist(res.x_hat, x0)
    row["lifted_dist"] = lifted_dist(res.x_hat, x0)
    row["iterations"] = res.iterations_used
    row["stationarity"] = res.stationarity
    row["converged"] = res.converged
    row["wall_time_ms"] = res.wall_time_ms


# -- trials -------------------------------------------------------------------

def _trial_solver(cfg, cell, seed):
    dist, row = _base_row(cfg, cell, seed)
    row["solver"] = cfg.solver
    m, d = cell["m"], cell["d"]
    s_x, s_a, s_eta, _ = _sub_seeds(seed)
    x0 = _unit_gaussian(np.random.default_rng(s_x), d, cfg.x0_norm)
    A = sample_matrix(dist, m, d, s_a)
    noise = cell["noise"]
    eta = make_noise(noise.kind, noise.params, m, s_eta)
    _noise_columns(row, eta, m)
    if noise.kind == "zero-mean-gaussian" and m >= 2:
        sigma = float(noise.params[0])
        row["epsilon"] = chi_square_epsilon(m, sigma)
        if cfg.experiment == "zero-mean":
            q = math.sqrt(d * math.log(m) / m)
            row["model_bound"] = q * sigma * max(cfg.x0_norm, q * sigma)
            # |sum eta| against sigma sqrt(m ln m)
            row["value"] = abs(eta.sum) / (sigma * math.sqrt(m * math.log(m))) if sigma > 0 else None
    if cfg.experiment == "sharpness" and cfg.x0_norm < 10.0 * eta.l2_norm / math.sqrt(m):
        row["error"] = "x0 norm below 10 ||eta|| / sqrt(m)"
        return row
    ms = observe(A, x0, eta)
    try:
        res = _solve(cfg, A, ms.b, x0)
    except (SolverDivergence, np.linalg.LinAlgError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    _result_columns(row, res, x0)
    if eta.l2_norm > 0:
        row["ratio"] = row["dist"] * math.sqrt(m) / eta.l2_norm
        row["beta0"] = cfg.beta0[0]
        row["lemma_ratio"] = trimmed_lifted_ratio(A, res.x_hat, x0, eta.l2_norm, cfg.beta0[0])
    return row


def _trial_sparse(cfg, cell, seed):
    dist, row = _base_row(cfg, cell, seed)
    row["solver"] = "sparse-amplitude-flow"
    m, d, k = cell["m"], cell["d"], cell["k"]
    s_x, s_a, s_eta, _ = _sub_seeds(seed)
    x0, S = _sparse_vector(np.random.default_rng(s_x), d, k, cfg.x0_norm)
    A = sample_matrix(dist, m, d, s_a)
    sigma = float(cell["noise"].params[0])
    eta = make_noise("zero-mean-gaussian", (sigma,), m, s_eta)
    _noise_columns(row, eta, m)
    eps = chi_square_epsilon(m, sigma)
    row["epsilon"] = eps
    row["model_bound"] = eps / math.sqrt(m)
    ms = observe(A, x0, eta)
    R = float(np.abs(x0).sum())
    try:
        res = sparse_amplitude_flow(A, ms.b, SparseConfig(R, eps, k, inner=cfg.solver_cfg()))
    except (SolverDivergence, np.linalg.LinAlgError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    _result_columns(row, res, x0)
    row["residual"] = res.residual
    # Noiseless runs use a round-off floor in place of eps = 0.
    tol = eps if eps > 0 else 1e-9 * float(np.linalg.norm(ms.b))
    row["feasible"] = res.residual <= tol
    top = np.argsort(-np.abs(res.x_hat), kind="stable")[:k]
    row["support_recovery"] = len(set(top.tolist()) & set(S.tolist())) / k
    if eta.l2_norm > 0:
        row["ratio"] = row["dist"] * math.sqrt(m) / eta.l2_norm
    if eps > 0:
        row["eps_ratio"] = row["dist"] * math.sqrt(m) / eps
    return row


def _trial_sparse_sharpness(cfg, cell, seed):
    dist, row = _base_row(cfg, cell, seed)
    m, d = cell["m"], cell["d"]
    A = sample_matrix(dist, m, d, _sub_seeds(seed)[1])
    x0 = np.zeros(d, dtype=np.complex128)
    x0[0] = 1.0
    eta = make_noise("constant", (1.0,), m)
    row["noise"] = Spec("constant", (1.0,)).label
    row["mu"], row["sigma"] = 1.0, 0.0
    _noise_columns(row, eta, m)
    eps = math.sqrt(8.0 * m)
    row["epsilon"] = eps
    row["model_bound"] = eps / math.sqrt(m)
    row["x0_norm"] = 1.0
    ms = observe(A, x0, eta)
    ok = zero_solution_check(ms.b, eps)
    row["zero_feasible"] = ok
    row["residual"] = float(np.linalg.norm(ms.b))
    if ok:
        # x_hat = 0 is feasible with the least l1 norm.
        row["dist"] = phase_dist(np.zeros(d, dtype=np.complex128), x0)
        row["ratio"] = row["dist"] * math.sqrt(m) / eta.l2_norm
        row["eps_ratio"] = row["dist"] * math.sqrt(m) / eps
    return row


def _trial_rip(cfg, cell, seed):
    dist, row = _base_row(cfg, cell, seed)
    m, d, k, b0 = cell["m"], cell["d"], cell["k"], cell["beta0"]
    s_a, s_x = _sub_seeds(seed, 2)
    A = sample_matrix(dist, m, d, s_a)
    est = estimate_rip_constants(A, d, k, cfg.samples, b0, s_x,
                                 include_witness=cfg.witness and k >= 2)
    row.update(
        beta0=b0,
        c_minus_hat=est.c_minus_hat,
        c_plus_hat=est.c_plus_hat,
        strong_c_minus_hat=est.strong_c_minus_hat,
        order_violations=int(np.count_nonzero(est.strong_ratios > est.ratios)),
    )
    return row


def _trial_degenerate(cfg, cell, seed):
    dist, row = _base_row(cfg, cell, seed)
    m, d = cell["m"], cell["d"]
    A = sample_matrix(dist, m, d, _sub_seeds(seed)[1])
    e1 = np.zeros(d, dtype=np.complex128)
    e2 = np.zeros(d, dtype=np.complex128)
    e1[0] = 1.0
    e2[1] = 1.0
    eta = make_noise("constant", (0.0,), m)
    row["noise"] = Spec("constant", (0.0,)).label
    row["mu"], row["sigma"] = 0.0, 0.0
    _noise_columns(row, eta, m)
    b1 = observe(A, e1, eta).b
    b2 = observe(A, e2, eta).b
    row["identical_obs"] = bool(np.array_equal(b1, b2))
    row["solver"] = cfg.solver
    try:
        res = _solve(cfg, A, b1, e1)
    except (SolverDivergence, np.linalg.LinAlgError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    _result_columns(row, res, e1)
    row["dist_alt"] = phase_dist(res.x_hat, e2)
    row["value"] = min(row["dist"], row["dist_alt"])
    return row


_TRIALS = {
    "error-scaling": _trial_solver,
    "sharpness": _trial_solver,
    "zero-mean": _trial_solver,
    "sparse": _trial_sparse,
    "sparse-sharpness": _trial_sparse_sharpness,
    "rip-table": _trial_rip,
    "degenerate": _trial_degenerate,
}


def run_single(cfg: ExperimentConfig, cell: int, seed: int) -> dict:
    """Re-run one trial of ``cell`` from its recorded seed."""
    c = cells(cfg)[cell]
    return _TRIALS[cfg.experiment](cfg, c, seed)


def _task(args):
    cfg, cell, trial = args
    seed = derive_seed(cfg.seed, cell["cell"], trial)
    row = _TRIALS[cfg.experiment](cfg, cell, seed)
    row["trial"] = trial
    return row


def _run_trials(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    grid = cells(cfg)
    tasks = [(cfg, c, t) for c in grid for t in range(cfg.trials)]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    else:
        rows = []
        for i, t in enumerate(tasks):
            rows.append(_task(t))
            if progress is not None:
                progress(i + 1, len(tasks))
    report = ExperimentReport(cfg.experiment)
    for c in grid:
        cell_rows = [r for r in rows if r["cell"] == c["cell"]]
        report.rows.extend(cell_rows)
        report.rows.extend(summarize_cell(cell_rows))
    return report


def _medians(report, column, cell_ids):
    med = {r["cell"]: r.get(column) for r in report.summary_rows("median")}
    return [med.get(c) for c in cell_ids]


def _groups(grid, keys):
    out = {}
    for c in grid:
        out.setdefault(tuple(str(c.get(k)) for k in keys), []).append(c)
    return out


def loglog_slope(ms, values) -> float:
    """Least-squares slope of log(values) against log(ms)."""
    return float(np.polyfit(np.log(np.asarray(ms, float)), np.log(np.asarray(values, float)), 1)[0])


def count_inversions(values) -> int:
    """Number of consecutive increases in a sequence expected to decrease."""
    return sum(1 for a, b in zip(values, values[1:]) if b > a)


def run_error_scaling(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    report = _run_trials(cfg, progress)
    for _, cs in _groups(cells(cfg), ("ensemble", "d", "noise")).items():
        med = [v for v in _medians(report, "ratio", [c["cell"] for c in cs]) if v]
        if len(med) >= 1:
            report.rows.append(dict(scalar_row(cfg.experiment, "ratio_band", max(med) / min(med)),
                                    ensemble=cs[0]["ensemble"].label, d=cs[0]["d"],
                                    noise=cs[0]["noise"].label))
    return report


def run_sharpness(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    return _run_trials(cfg, progress)


def run_zero_mean(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    report = _run_trials(cfg, progress)
    for _, cs in _groups(cells(cfg), ("ensemble", "d", "noise")).items():
        cs = sorted(cs, key=lambda c: c["m"])
        med = _medians(report, "dist", [c["cell"] for c in cs])
        if len(cs) < 2 or any(v is None or v <= 0 for v in med):
            continue
        extra = dict(ensemble=cs[0]["ensemble"].label, d=cs[0]["d"], noise=cs[0]["noise"].label)
        report.rows.append(dict(scalar_row(cfg.experiment, "loglog_slope",
                                           loglog_slope([c["m"] for c in cs], med)), **extra))
        report.rows.append(dict(scalar_row(cfg.experiment, "inversions", count_inversions(med)),
                                **extra))
        report.rows.append(dict(scalar_row(cfg.experiment, "last_over_first", med[-1] / med[0]),
                                **extra))
    return report


def run_sparse(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    return _run_trials(cfg, progress)


def run_sparse_sharpness(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    return _run_trials(cfg, progress)


def run_rip_table(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    report = _run_trials(cfg, progress)
    grid = cells(cfg)
    ternary = [c for c in grid if c["ensemble"].kind == "ternary"]
    for _, cs in _groups(ternary, ("d", "k", "m", "beta0")).items():
        cs = sorted(cs, key=lambda c: make_ensemble(c["ensemble"].kind, c["ensemble"].params).gamma)
        if len(cs) < 2:
            continue
        med = _medians(report, "c_minus_hat", [c["cell"] for c in cs])
        mono = all(b >= a for a, b in zip(med, med[1:]))
        report.rows.append(dict(scalar_row(cfg.experiment, "gamma_monotone", int(mono)),
                                d=cs[0]["d"], k=cs[0]["k"], m=cs[0]["m"], beta0=cs[0]["beta0"]))
    return report


def run_degenerate(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    return _run_trials(cfg, progress)


def run_moments(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    """Analytic against empirical moments per ensemble (own column set)."""
    report = ExperimentReport(cfg.experiment)
    report.columns = MOMENT_COLUMNS
    for i, spec in enumerate(cfg.ensemble):
        dist = make_ensemble(spec.kind, spec.params)
        seed = derive_seed(cfg.seed, i, 0)
        mean, pseudo, a2, a4 = empirical_moments(dist, cfg.samples, seed)
        exact = (dist.mean, dist.pseudo_second, dist.abs_second, dist.abs_fourth)
        err = max(abs(mean - exact[0]), abs(pseudo - exact[1]), abs(a2 - exact[2]),
                  abs(a4 - exact[3]))
        for stat, (mu, ps, s2, s4) in (("analytic", exact), ("empirical", (mean, pseudo, a2, a4))):
            report.rows.append(dict(
                experiment="moments", ensemble=spec.label, stat=stat, n=cfg.samples, seed=seed,
                mean_re=complex(mu).real, mean_im=complex(mu).imag,
                pseudo_re=complex(ps).real, pseudo_im=complex(ps).imag,
                abs_second=float(s2), abs_fourth=float(s4),
                max_abs_err=float(err) if stat == "empirical" else 0.0,
            ))
        if progress is not None:
            progress(i + 1, len(cfg.ensemble))
    return report


RUNNERS = {
    "error-scaling": run_error_scaling,
    "sharpness": run_sharpness,
    "zero-mean": run_zero_mean,
    "sparse": run_sparse,
    "sparse-sharpness": run_sparse_sharpness,
    "rip-table": run_rip_table,
    "degenerate": run_degenerate,
    "moments": run_moments,
}


def run_experiment(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    return RUNNERS[cfg.experiment](cfg, progress)


# x-axis column of the plot-data tables per experiment.
PLOT_AXES = {
    "error-scaling": ("m", "ratio"),
    "sharpness": ("m", "ratio"),
    "zero-mean": ("m", "dist"),
    "sparse": ("m", "dist"),
    "sparse-sharpness": ("m", "residual"),
    "rip-table": ("gamma", "c_minus_hat"),
    "degenerate": ("m", "dist"),
}
