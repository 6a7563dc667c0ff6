"""Experiment configuration: JSON documents validated into ExperimentConfig."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields

from ..measurements import ENSEMBLE_KINDS, NOISE_KINDS, make_ensemble
from ..solvers import SolverConfig

EXPERIMENTS = (
    "error-scaling",
    "sharpness",
    "zero-mean",
    "sparse",
    "sparse-sharpness",
    "rip-table",
    "degenerate",
    "moments",
)
SOLVERS = ("amplitude-flow", "alternating-projection")
SOLVER_EXPERIMENTS = ("error-scaling", "sharpness", "zero-mean", "degenerate")

_SOLVER_KEYS = {"max_iters", "step_size", "tol_rel_change", "truncation", "init_mode",
                "power_iters", "backtracking", "seed"}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class Spec:
    kind: str
    params: tuple = ()

    @property
    def label(self) -> str:
        if not self.params:
            return self.kind
        return f"{self.kind}({','.join(_fmt(p) for p in self.params)})"


def _fmt(p):
    if isinstance(p, (list, tuple)):
        return "[" + ";".join(_fmt(q) for q in p) + "]"
    return repr(p)


@dataclass
class ExperimentConfig:
    experiment: str
    ensemble: list = field(default_factory=lambda: [Spec("complex-gaussian")])
    d: list = field(default_factory=lambda: [16])
    m: list | None = None
    k: list | None = None
    noise: list = field(default_factory=lambda: [Spec("constant", (0.05,))])
    solver: str = "amplitude-flow"
    solver_config: dict = field(default_factory=dict)
    trials: int = 20
    seed: int = 0
    out: str | None = None
    beta0: list = field(default_factory=lambda: [0.1])
    samples: int = 2000
    witness: bool = True
    m_factor: float = 8.0
    x0_norm: float = 1.0
    workers: int = 1

    def solver_cfg(self) -> SolverConfig:
        return SolverConfig(**self.solver_config)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ensemble"] = [{"kind": s.kind, "params": list(s.params)} for s in self.ensemble]
        out["noise"] = [{"kind": s.kind, "params": list(s.params)} for s in self.noise]
        return out


DEFAULTS = {
    "error-scaling": dict(
        m=[128, 256, 512, 1024, 2048],
        noise=[{"kind": "constant", "params": [0.05]}, {"kind": "constant", "params": [0.0]}],
        trials=100,
    ),
    "sharpness": dict(
        m=[1024],
        noise=[{"kind": "constant", "params": [0.05]},
               {"kind": "zero-mean-gaussian", "params": [0.05]}],
        trials=200,
    ),
    "zero-mean": dict(
        m=[256, 512, 1024, 2048, 4096, 8192],
        noise=[{"kind": "zero-mean-gaussian", "params": [0.1]}],
        trials=50,
    ),
    "sparse": dict(
        d=[256], k=[8], m=None,
        noise=[{"kind": "zero-mean-gaussian", "params": [0.01]}],
        trials=100,
    ),
    "sparse-sharpness": dict(
        d=[8], m=[1000],
        noise=[{"kind": "constant", "params": [1.0]}],
        trials=200,
    ),
    "rip-table": dict(
        ensemble=[{"kind": "complex-gaussian"}, {"kind": "complex-rademacher"},
                  {"kind": "ternary", "params": [0.45]}, {"kind": "ternary", "params": [0.25]},
                  {"kind": "ternary", "params": [0.1]}],
        d=[16], k=[16], m=[640], trials=5,
    ),
    "degenerate": dict(
        ensemble=[{"kind": "complex-rademacher"}, {"kind": "complex-gaussian"}],
        d=[8], m=[64],
        noise=[{"kind": "constant", "params": [0.0]}],
        trials=100,
    ),
    "moments": dict(
        ensemble=[{"kind": "complex-gaussian"}, {"kind": "ternary", "params": [0.25]},
                  {"kind": "complex-rademacher"}],
        samples=1_000_000,
        trials=1,
    ),
}

_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _int_list(name, value, minimum=1):
    if isinstance(value, bool):
        raise ConfigError(name, "expected an integer or a list of integers")
    vals = value if isinstance(value, list) else [value]
    if not vals:
        raise ConfigError(name, "must not be empty")
    out = []
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(name, f"expected integers, got {v!r}")
        if v < minimum:
            raise ConfigError(name, f"values must be >= {minimum}, got {v}")
        out.append(v)
    return out


def _specs(name, value, kinds):
    vals = value if isinstance(value, list) else [value]
    if not vals:
        raise ConfigError(name, "must not be empty")
    out = []
    for i, v in enumerate(vals):
        where = f"{name}[{i}]"
        if not isinstance(v, dict):
            raise ConfigError(where, "expected an object with 'kind' and optional 'params'")
        extra = set(v) - {"kind", "params"}
        if extra:
            raise ConfigError(where, f"unknown keys {sorted(extra)}")
        if "kind" not in v:
            raise ConfigError(f"{where}.kind", "missing required key 'kind'")
        if v["kind"] not in kinds:
            raise ConfigError(f"{where}.kind", f"unknown kind {v['kind']!r}; expected one of {kinds}")
        params = v.get("params", [])
        if not isinstance(params, list):
            raise ConfigError(f"{where}.params", "expected a list")
        out.append(Spec(v["kind"], tuple(tuple(p) if isinstance(p, list) else p for p in params)))
    return out


def build_config(doc: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a config document (plus CLI overrides) into an ExperimentConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    if "experiment" not in doc:
        raise ConfigError("experiment", "missing required key 'experiment'")
    unknown = set(doc) - _FIELDS
    if unknown:
        raise ConfigError(sorted(unknown)[0], f"unknown key(s) {sorted(unknown)}")
    name = doc["experiment"]
    if name not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
    merged = {**DEFAULTS[name], **doc, **{k: v for k, v in (overrides or {}).items() if v is not None}}

    cfg = ExperimentConfig(experiment=name)
    if "ensemble" in merged:
        cfg.ensemble = _specs("ensemble", merged["ensemble"], ENSEMBLE_KINDS)
        for i, s in enumerate(cfg.ensemble):
            try:
                make_ensemble(s.kind, s.params)
            except ValueError as exc:
                raise ConfigError(f"ensemble[{i}]", str(exc)) from None
    if "noise" in merged:
        cfg.noise = _specs("noise", merged["noise"], NOISE_KINDS)
        for i, s in enumerate(cfg.noise):
            if s.kind in ("zero-mean-gaussian", "shifted-gaussian") and s.params and s.params[-1] < 0:
                raise ConfigError(f"noise[{i}].params", "sigma must be >= 0")
    if "d" in merged:
        cfg.d = _int_list("d", merged["d"])
    if merged.get("m") is not None:
        cfg.m = _int_list("m", merged["m"])
    if merged.get("k") is not None:
        cfg.k = _int_list("k", merged["k"])
    for key in ("trials", "samples", "workers"):
        if key in merged:
            v = merged[key]
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(key, f"must be an integer >= 1, got {v!r}")
            setattr(cfg, key, v)
    if "seed" in merged:
        v = merged["seed"]
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < 2**64:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {v!r}")
        cfg.seed = v
    if "solver" in merged:
        if merged["solver"] not in SOLVERS:
            raise ConfigError("solver", f"expected one of {SOLVERS}")
        cfg.solver = merged["solver"]
    if "solver_config" in merged:
        sc = merged["solver_config"]
        if not isinstance(sc, dict):
            raise ConfigError("solver_config", "expected an object")
        bad = set(sc) - _SOLVER_KEYS
        if bad:
            raise ConfigError(f"solver_config.{sorted(bad)[0]}", "unknown key")
        try:
            SolverConfig(**sc)
        except (TypeError, ValueError) as exc:
            raise ConfigError("solver_config", str(exc)) from None
        cfg.solver_config = dict(sc)
    if "beta0" in merged:
        b0 = merged["beta0"] if isinstance(merged["beta0"], list) else [merged["beta0"]]
        if not b0 or not all(isinstance(v, (int, float)) and 0 <= v < 1 for v in b0):
            raise ConfigError("beta0", "values must lie in [0, 1)")
        cfg.beta0 = [float(v) for v in b0]
    for key in ("m_factor", "x0_norm"):
        if key in merged:
            v = merged[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(key, "must be a positive number")
            setattr(cfg, key, float(v))
    if "witness" in merged:
        if not isinstance(merged["witness"], bool):
            raise ConfigError("witness", "expected true or false")
        cfg.witness = merged["witness"]
    if "out" in merged:
        cfg.out = merged["out"]
    _cross_checks(cfg)
    return cfg


def _cross_checks(cfg: ExperimentConfig):
    name = cfg.experiment
    if name in ("error-scaling", "sharpness", "zero-mean", "degenerate", "rip-table",
                "sparse-sharpness") and cfg.m is None:
        raise ConfigError("m", f"experiment {name!r} needs m")
    if name in ("sparse", "rip-table") and cfg.k is None:
        raise ConfigError("k", f"experiment {name!r} needs k")
    if cfg.k is not None and name in ("sparse", "rip-table"):
        for k in cfg.k:
            if any(k > d for d in cfg.d):
                raise ConfigError("k", f"k={k} exceeds d={min(cfg.d)}")
    if name in SOLVER_EXPERIMENTS and any(m < d for m in cfg.m for d in cfg.d):
        warnings.warn("grid contains m < d; the least-squares and spectral steps may be ill-posed",
                      stacklevel=3)
    if name == "rip-table" and cfg.samples < 100:
        raise ConfigError("samples", "rip-table needs samples >= 100")
    if name == "sharpness":
        for i, s in enumerate(cfg.noise):
            if s.kind == "constant" and cfg.x0_norm < 10 * abs(s.params[0]):
                raise ConfigError(f"noise[{i}]", "||x0|| must be >= 10 ||eta||/sqrt(m)")
    if name == "zero-mean":
        for i, s in enumerate(cfg.noise):
            if s.kind != "zero-mean-gaussian":
                raise ConfigError(f"noise[{i}].kind", "zero-mean experiment needs zero-mean-gaussian noise")
    if name == "sparse":
        for i, s in enumerate(cfg.noise):
            if s.kind != "zero-mean-gaussian":
                raise ConfigError(f"noise[{i}].kind", "sparse experiment needs zero-mean-gaussian noise")
        for d in cfg.d:
            for k in cfg.k:
                for m in cfg.m or [sparse_m(cfg.m_factor, k, d)]:
                    if m < 2:
                        raise ConfigError("m", "sparse experiment needs m >= 2")
    if name == "degenerate" and any(d < 2 for d in cfg.d):
        raise ConfigError("d", "degenerate experiment needs d >= 2")


def sparse_m(factor: float, k: int, d: int) -> int:
    """ceil(factor k ln(e d / k))."""
    return math.ceil(factor * k * math.log(math.e * d / k))


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    return build_config({"experiment": experiment}, overrides)


def read_config(path) -> ExperimentConfig:
    """Parse a JSON config file; unknown keys and bad values raise ConfigError."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"malformed JSON: {exc}") from None
    return build_config(doc)
