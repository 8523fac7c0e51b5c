"""Run configuration, report plumbing, and the comparison commands.

Each command composes the spectral, rate-function, and sampling layers into
one empirical-versus-predicted table. Sampling fans out over fixed-size
stream shards (layout independent of the worker count), so identical
config + seed reproduce identical report bodies byte for byte, no matter how
many workers execute the shards.
"""
from __future__ import annotations

import datetime
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import jsonschema
import numpy as np

from .ensemble import (
    FiniteEnsemble,
    check_conditions,
    ensemble_from_dict,
    ensemble_hash,
    load_ensemble,
)
from .errors import ConfigError, IntervalTooNarrowError
from .grid import build_grid
from .predictions import (
    brp_tail,
    edgeworth_cdf,
    empirical_cdf_on_grid,
    gaussian_cdf,
    llt_large_deviation,
    llt_moderate,
    llt_window,
)
from .ratefn import (
    CumulantTable,
    cramer_series,
    export_cumulants_csv,
    export_legendre_csv,
    lambda_curve,
    legendre,
)
from .sampler import (
    PathObservables,
    TiltedBatch,
    estimate_drifts,
    is_probability,
    simulate_paths,
    tilted_simulate,
)
from .spectral import SpectralSolution, dump_spectral_csv, solve_spectral
from .streams import RandomStream

WORKERS_ENV = "CONELAB_WORKERS"
SHARD_SIZE = 65536

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["ensemble"],
    "properties": {
        "ensemble": {
            "type": "object",
            "properties": {
                "path": {"type": "string"},
                "dim": {"type": "integer", "minimum": 2},
                "atoms": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "probs": {"type": "array", "items": {"type": "number"}},
                "scalar_reference": {"type": "object"},
            },
        },
        "f": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "v": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "n_list": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "count": {"type": "integer", "minimum": 1000},
        "s": {"type": "number"},
        "q": {"type": "number"},
        "s_list": {"type": "array", "items": {"type": "number"}},
        "s_samples": {"type": "array", "items": {"type": "number"}},
        "resolution": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0},
        "out_dir": {"type": "string"},
        "phi": {"type": "string"},
        "y_grid": {
            "type": "object",
            "properties": {
                "lo": {"type": "number"},
                "hi": {"type": "number"},
                "points": {"type": "integer", "minimum": 3},
            },
        },
        "interval": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "tail": {"type": "string", "enum": ["upper", "lower"]},
        "drift_count": {"type": "integer", "minimum": 1000},
        "drift_tail": {"type": "integer", "minimum": 1},
        "md_power": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "shard_size": {"type": "integer", "minimum": 1024},
        "renorm_every": {"type": "integer", "minimum": 1},
        "observables": {"type": "array", "items": {"type": "string"}},
    },
}

_KNOWN_KEYS = set(CONFIG_SCHEMA["properties"])


@dataclass
class RunConfig:
    """Validated harness inputs with defaults filled in."""

    ensemble: FiniteEnsemble
    f: np.ndarray
    v: np.ndarray
    n_list: list[int]
    count: int = 10000
    s: Optional[float] = None
    q: Optional[float] = None
    s_list: list[float] = field(default_factory=lambda: [0.5])
    s_samples: Optional[list[float]] = None
    resolution: int = 256
    seed: int = 0
    out_dir: Optional[str] = None
    phi: str = "const1"
    y_grid: np.ndarray = field(default_factory=lambda: np.linspace(-3.0, 3.0, 41))
    interval: tuple[float, float] = (0.0, 1.0)
    tail: str = "upper"
    drift_count: int = 20000
    drift_tail: int = 200
    md_power: float = 0.25
    shard_size: int = SHARD_SIZE
    renorm_every: int = 32
    observables: list[str] = field(
        default_factory=lambda: ["coefficient", "vecnorm", "matnorm", "entry11", "specrad"]
    )

    def __post_init__(self):
        ns = list(self.n_list)
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("n_list must be strictly increasing")
        a1, a2 = self.interval
        if not a1 < a2:
            raise ConfigError("interval must satisfy a1 < a2")

    def stream(self) -> RandomStream:
        return RandomStream(self.seed)

    def grid(self):
        return build_grid(self.ensemble.dim, self.resolution)

    def phi_fn(self) -> Callable[[np.ndarray], np.ndarray]:
        return phi_catalog(self.phi, self.ensemble.dim)


def phi_catalog(name: str, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Fixed test-function catalog: const1, coord_i (1-based), smooth bump."""
    if name == "const1":
        return lambda u: np.ones(np.atleast_2d(u).shape[0])
    if name.startswith("coord_"):
        i = int(name.split("_", 1)[1]) - 1
        if not 0 <= i < dim:
            raise ConfigError(f"schema-violation: phi: coordinate index out of range in {name!r}")
        return lambda u: np.atleast_2d(u)[:, i]
    if name == "bump":
        center = np.full(dim, 1.0 / dim)
        width = 0.2
        return lambda u: np.exp(
            -np.sum((np.atleast_2d(u) - center) ** 2, axis=1) / (2.0 * width**2)
        )
    raise ConfigError(f"schema-violation: phi: unknown test function {name!r}")


def parse_config(source, base_dir: Optional[str] = None) -> RunConfig:
    """Load and validate a config from a JSON path or a dict.

    Schema violations raise ConfigError naming the offending field path;
    unknown keys only warn, for forward compatibility.
    """
    if isinstance(source, (str, os.PathLike)):
        base_dir = base_dir or os.path.dirname(os.fspath(source))
        try:
            with open(source, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config-parse: {exc}") from exc
    else:
        doc = dict(source)
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"schema-violation: {path}: {err.message}")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        warnings.warn(f"ignoring unknown config keys: {sorted(unknown)}", UserWarning)

    ens_doc = doc["ensemble"]
    if "path" in ens_doc:
        path = ens_doc["path"]
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        ens = load_ensemble(path)
    else:
        ens = ensemble_from_dict(ens_doc)

    d = ens.dim
    kwargs = {
        "ensemble": ens,
        "f": np.asarray(doc.get("f", np.full(d, 1.0 / d)), dtype=float),
        "v": np.asarray(doc.get("v", np.full(d, 1.0 / d)), dtype=float),
        "n_list": [int(n) for n in doc.get("n_list", [64, 256])],
    }
    if kwargs["f"].size != d or kwargs["v"].size != d:
        raise ConfigError("schema-violation: f/v: length must equal ensemble dim")
    for key in (
        "count",
        "s",
        "q",
        "s_list",
        "s_samples",
        "resolution",
        "seed",
        "out_dir",
        "phi",
        "tail",
        "drift_count",
        "drift_tail",
        "md_power",
        "shard_size",
        "renorm_every",
        "observables",
    ):
        if key in doc:
            kwargs[key] = doc[key]
    if "y_grid" in doc:
        yg = doc["y_grid"]
        kwargs["y_grid"] = np.linspace(yg.get("lo", -3.0), yg.get("hi", 3.0), yg.get("points", 41))
    if "interval" in doc:
        kwargs["interval"] = tuple(doc["interval"])
    return RunConfig(**kwargs)


def config_to_dict(config: RunConfig) -> dict:
    """Emit-compatible dict; parse(config_to_dict(c)) preserves all fields."""
    from .ensemble import ensemble_to_dict

    return {
        "ensemble": ensemble_to_dict(config.ensemble),
        "f": [float(x) for x in config.f],
        "v": [float(x) for x in config.v],
        "n_list": list(config.n_list),
        "count": config.count,
        **({"s": config.s} if config.s is not None else {}),
        **({"q": config.q} if config.q is not None else {}),
        "s_list": list(config.s_list),
        **({"s_samples": list(config.s_samples)} if config.s_samples is not None else {}),
        "resolution": config.resolution,
        "seed": config.seed,
        **({"out_dir": config.out_dir} if config.out_dir is not None else {}),
        "phi": config.phi,
        "y_grid": {
            "lo": float(config.y_grid[0]),
            "hi": float(config.y_grid[-1]),
            "points": int(config.y_grid.size),
        },
        "interval": list(config.interval),
        "tail": config.tail,
        "drift_count": config.drift_count,
        "drift_tail": config.drift_tail,
        "md_power": config.md_power,
        "shard_size": config.shard_size,
        "renorm_every": config.renorm_every,
        "observables": list(config.observables),
    }


# --- reports ---------------------------------------------------------------


@dataclass
class ComparisonReport:
    """Rows of empirical-versus-predicted values traceable to one formula."""

    formula_id: str
    ensemble_hash: str
    seed: int
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError("row width does not match columns")
        self.rows.append(row)


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{float(x):.17g}"


def emit_report(report: ComparisonReport, path) -> None:
    """CSV with provenance header; body is deterministic for fixed config+seed."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# formula={report.formula_id}\n")
        fh.write(f"# ensemble={report.ensemble_hash}\n")
        fh.write(f"# seed={report.seed}\n")
        fh.write(f"# generated_at={datetime.datetime.now(datetime.timezone.utc).isoformat()}\n")
        fh.write(",".join(report.columns) + "\n")
        for row in report.rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _merge_batches(parts):
    first = parts[0]
    cat = lambda name: (
        np.concatenate([getattr(p, name) for p in parts])
        if getattr(first, name) is not None
        else None
    )
    common = dict(
        n=first.n,
        count=sum(p.count for p in parts),
        f=first.f,
        v=first.v,
        log_coeff=cat("log_coeff"),
        log_vecnorm=cat("log_vecnorm"),
        endpoint=cat("endpoint"),
        log_matnorm=cat("log_matnorm"),
        log_entry11=cat("log_entry11"),
        log_specrad=cat("log_specrad"),
    )
    if isinstance(first, TiltedBatch):
        return TiltedBatch(
            **common,
            s=first.s,
            mode=first.mode,
            log_weight=cat("log_weight"),
            log_weight_theory=cat("log_weight_theory"),
        )
    return PathObservables(**common)


def sharded_paths(
    config: RunConfig,
    n: int,
    stream: RandomStream,
    track_product: bool,
    sol: Optional[SpectralSolution] = None,
    mode: str = "norm",
) -> PathObservables:
    """Fan sampling out over fixed-size shards and merge deterministically.

    The shard layout depends only on (count, shard_size), never on the worker
    count, so reports stay byte-identical under CONELAB_WORKERS changes.
    """
    count = config.count
    sizes = [config.shard_size] * (count // config.shard_size)
    if count % config.shard_size:
        sizes.append(count % config.shard_size)

    def run(i_size):
        i, size = i_size
        sub = stream.child(i)
        if sol is None:
            return simulate_paths(
                config.ensemble, config.v, config.f, n, size, sub,
                track_product=track_product, renorm_every=config.renorm_every,
            )
        return tilted_simulate(
            config.ensemble, sol, mode, config.v, n, size, sub, f=config.f,
            track_product=track_product, renorm_every=config.renorm_every,
        )

    jobs = list(enumerate(sizes))
    workers = _workers()
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    return _merge_batches(parts)


# --- commands ---------------------------------------------------------------


def cmd_check(config: RunConfig):
    """Report the standing-condition constants; exit 2 if A2 fails."""
    rep = check_conditions(config.ensemble)
    report = ComparisonReport(
        formula_id="conditions",
        ensemble_hash=ensemble_hash(config.ensemble),
        seed=config.seed,
        columns=["quantity", "value"],
    )
    report.add("c_full", rep.c_full)
    report.add("c_col", rep.c_col)
    report.add("epsilon", rep.epsilon)
    report.add("nonarithmetic_heuristic", int(rep.nonarithmetic_heuristic))
    report.add("moment_log3_finite", int(rep.moment_log3_finite))
    report.add("moment_exponential_finite", int(rep.moment_exponential_finite))
    code = 0 if rep.a2_holds else 2
    return [("check", report)], code


def cmd_spectral(config: RunConfig):
    """Solve the eigenproblem on s_list and dump per-node CSVs."""
    grid = config.grid()
    reports = []
    summary = ComparisonReport(
        formula_id="spectral-eigendata",
        ensemble_hash=ensemble_hash(config.ensemble),
        seed=config.seed,
        columns=["s", "kappa", "kappa_star", "residual", "nu_r", "iterations"],
    )
    sols = []
    for s in config.s_list:
        sol = solve_spectral(config.ensemble, float(s), grid)
        summary.add(s, sol.kappa, sol.kappa_star, sol.residual, sol.nu_r, sol.iterations)
        sols.append(sol)
    reports.append(("spectral", summary))
    return reports, 0, sols


def _table(config: RunConfig) -> CumulantTable:
    return lambda_curve(config.ensemble, config.grid(), config.s_samples)


def cmd_cumulants(config: RunConfig):
    """Tabulate the log-eigenvalue curve and its Legendre transform."""
    table = _table(config)
    report = ComparisonReport(
        formula_id="cumulant-table",
        ensemble_hash=ensemble_hash(config.ensemble),
        seed=config.seed,
        columns=["quantity", "value"],
    )
    report.add("lambda1", table.lambda1)
    report.add("sigma2", table.sigma2)
    report.add("m3", table.m3)
    report.add("fd_gap_d1", table.fd_check.get("max_gap_d1", math.nan))
    report.add("fd_gap_d3", table.fd_check.get("max_gap_d3", math.nan))
    return [("cumulants", report)], 0, table


def _drift(config: RunConfig, f, v, stream) -> tuple[float, float]:
    est = estimate_drifts(
        config.ensemble, f, v, n_tail=config.drift_tail, count=config.drift_count,
        stream=stream, resolution=config.resolution,
    )
    return est.b_v[0], est.d_f[0]


def cmd_edgeworth(config: RunConfig):
    """Empirical CDFs against the corrected expansion, per n and observable."""
    table = _table(config)
    lam, sigma = table.lambda1, math.sqrt(table.sigma2)
    m3 = table.m3
    stream = config.stream()
    b_v, d_f = _drift(config, config.f, config.v, stream.child(1001))
    ones = np.ones(config.ensemble.dim)
    b_ones, _ = _drift(config, ones, ones, stream.child(1002))
    drifts = {
        "coefficient": b_v + d_f,
        "vecnorm": b_v,
        "matnorm": b_ones,
    }
    ehash = ensemble_hash(config.ensemble)
    detail = ComparisonReport(
        "edgeworth-cdf", ehash, config.seed,
        ["observable", "n", "y", "empirical", "predicted", "gaussian"],
    )
    summary = ComparisonReport(
        "edgeworth-sup", ehash, config.seed,
        ["observable", "n", "sup_edgeworth", "sup_gaussian", "sqrt_n_sup_edgeworth"],
    )
    need_products = "matnorm" in config.observables
    for n in config.n_list:
        batch = sharded_paths(config, n, stream.child(n), track_product=need_products)
        root = sigma * math.sqrt(n)
        per_obs = {"coefficient": batch.log_coeff, "vecnorm": batch.log_vecnorm}
        if need_products:
            per_obs["matnorm"] = batch.log_matnorm
        for name, values in per_obs.items():
            if name not in config.observables and name != "coefficient":
                continue
            t = (values - n * lam) / root
            emp = empirical_cdf_on_grid(t, config.y_grid)
            pred = edgeworth_cdf(config.y_grid, n, sigma, m3, drifts[name])
            gauss = gaussian_cdf(config.y_grid)
            for y, e, p, g in zip(config.y_grid, emp, pred, gauss):
                detail.add(name, n, y, e, p, g)
            sup_e = float(np.max(np.abs(emp - pred)))
            sup_g = float(np.max(np.abs(emp - gauss)))
            summary.add(name, n, sup_e, sup_g, math.sqrt(n) * sup_e)
    return [("edgeworth_cdf", detail), ("edgeworth_summary", summary)], 0


def cmd_berry_esseen(config: RunConfig):
    """sqrt(n)-scaled Kolmogorov distances; pass if bounded within 2x median."""
    table = _table(config)
    lam, sigma = table.lambda1, math.sqrt(table.sigma2)
    stream = config.stream()
    ehash = ensemble_hash(config.ensemble)
    report = ComparisonReport(
        "berry-esseen", ehash, config.seed,
        ["observable", "n", "sup_distance", "c_n"],
    )
    wanted = [o for o in ("coefficient", "matnorm", "specrad") if o in config.observables]
    cs: dict[str, list[float]] = {o: [] for o in wanted}
    for n in config.n_list:
        batch = sharded_paths(config, n, stream.child(n), track_product=True)
        for name in wanted:
            values = {"coefficient": batch.log_coeff, "matnorm": batch.log_matnorm,
                      "specrad": batch.log_specrad}[name]
            t = (values - n * lam) / (sigma * math.sqrt(n))
            sup = float(np.max(np.abs(empirical_cdf_on_grid(t, config.y_grid)
                                      - gaussian_cdf(config.y_grid))))
            c_n = math.sqrt(n) * sup
            cs[name].append(c_n)
            report.add(name, n, sup, c_n)
    ok = all(max(v) <= 2.0 * float(np.median(v)) for v in cs.values() if v)
    return [("berry_esseen", report)], 0 if ok else 1


def _tilt(config: RunConfig, table: CumulantTable):
    """Resolve the tilt point from config.s or config.q."""
    if config.s is not None:
        s = float(config.s)
        q = table.dLam(s, 1)
        rate = s * q - float(table.Lam(s))
    elif config.q is not None:
        s, rate = legendre(table, float(config.q))
        q = float(config.q)
    else:
        raise ConfigError("schema-violation: s: ldp/llt need a tilt (s or q)")
    return s, q, rate


def spectral_prefactors(sol: SpectralSolution, f, v, phi=None) -> dict:
    """Spectral constants entering the sharp tail formulas."""
    d = sol.grid.dim
    e1 = np.zeros(d)
    e1[0] = 1.0
    ones = np.ones(d)
    nu_r = sol.nu_r
    r_v = float(sol.r_of(np.asarray(v, dtype=float)[None, :])[0])
    rs_f = float(sol.r_star_of(np.asarray(f, dtype=float)[None, :])[0])
    out = {
        "coefficient": r_v * rs_f / nu_r,
        "vecnorm": r_v / nu_r,  # f = ones, r_s*(ones) = 1
        "matnorm": 1.0 / nu_r,  # r_s(ones) = r_s*(ones) = 1
        "entry11": float(sol.r_of(e1[None, :])[0]) * float(sol.r_star_of(e1[None, :])[0]) / nu_r,
        "nu_r": nu_r,
    }
    if phi is not None:
        pair = np.power(np.maximum(sol.grid.nodes @ np.asarray(f, dtype=float), 1e-300), sol.s)
        out["target"] = r_v / nu_r * float(sol.nu @ (phi(sol.grid.nodes) * pair))
    return out


def cmd_ldp(config: RunConfig):
    """Importance-sampled tail probabilities against the sharp asymptotics."""
    table = _table(config)
    s, q, rate = _tilt(config, table)
    if s < 0 and not check_conditions(config.ensemble).a1_holds:
        raise ConfigError("lower tilts require full comparability (A1)")
    sigma_s = table.sigma_s(s)
    sol = solve_spectral(config.ensemble, s, config.grid())
    pre = spectral_prefactors(sol, config.f, config.v, phi=config.phi_fn())
    tail = "lower" if s < 0 else "upper"
    stream = config.stream()
    ehash = ensemble_hash(config.ensemble)
    report = ComparisonReport(
        "bahadur-rao-petrov", ehash, config.seed,
        ["observable", "n", "q", "empirical", "stderr", "predicted", "ratio"],
    )
    need_products = any(o in config.observables for o in ("matnorm", "entry11", "specrad"))
    mode = "coefficient" if "coefficient" in config.observables else "norm"
    for n in config.n_list:
        batch = sharded_paths(
            config, n, stream.child(n), track_product=need_products, sol=sol, mode=mode
        )
        threshold = n * q
        for name in config.observables:
            if name == "specrad":
                est, se = is_probability(batch, threshold, tail, observable="specrad")
                for bound, ref in (("specrad/lower-bound", "entry11"), ("specrad/upper-bound", "matnorm")):
                    predicted = brp_tail(n, s, rate, sigma_s, pre[ref])
                    report.add(bound, n, q, est, se, predicted, est / predicted)
                continue
            est, se = is_probability(batch, threshold, tail, observable=name)
            predicted = brp_tail(n, s, rate, sigma_s, pre[name])
            report.add(name, n, q, est, se, predicted, est / predicted if predicted else math.nan)
        if config.phi != "const1":
            phi = config.phi_fn()
            hit = (batch.log_coeff >= threshold) if tail == "upper" else (batch.log_coeff <= threshold)
            y = np.exp(batch.log_weight) * hit * phi(batch.endpoint)
            est = float(y.mean())
            se = float(y.std(ddof=1) / math.sqrt(y.size))
            predicted = brp_tail(n, s, rate, sigma_s, pre["target"])
            report.add("target", n, q, est, se, predicted, est / predicted if predicted else math.nan)
    return [("ldp", report)], 0


def cmd_llt(config: RunConfig):
    """Interval probabilities: central, moderate-deviation, and tilted windows."""
    table = _table(config)
    lam, sigma = table.lambda1, math.sqrt(table.sigma2)
    a1, a2 = config.interval
    grid = config.grid()
    sol0 = solve_spectral(config.ensemble, 0.0, grid)
    phi = config.phi_fn()
    nu_phi = float(sol0.nu @ phi(grid.nodes))
    stream = config.stream()
    ehash = ensemble_hash(config.ensemble)
    report = ComparisonReport(
        "local-limit", ehash, config.seed,
        ["regime", "n", "offset", "empirical", "stderr", "predicted", "ratio"],
    )
    for n in config.n_list:
        expected = config.count * llt_window(n, sigma, a1, a2, 1.0)
        if expected < 50:
            raise IntervalTooNarrowError(
                f"expected window count {expected:.1f} < 50 at n={n}; widen [a1,a2] or add paths"
            )
        batch = sharded_paths(config, n, stream.child(n), track_product=False)
        centered = batch.log_coeff - n * lam
        weights = phi(batch.endpoint)
        for regime, l in (("central", 0.0), ("moderate", n ** (-config.md_power))):
            shift = sigma * n * l
            y = weights * ((centered >= a1 + shift) & (centered <= a2 + shift))
            est = float(y.mean())
            se = float(y.std(ddof=1) / math.sqrt(y.size))
            if regime == "central":
                predicted = llt_window(n, sigma, a1, a2, nu_phi)
            else:
                predicted = llt_moderate(n, sigma, a1, a2, l, cramer_series(table, 0.0, l), nu_phi)
            report.add(regime, n, shift, est, se, predicted, est / predicted)
    if config.s is not None or config.q is not None:
        s, q, rate = _tilt(config, table)
        sigma_s = table.sigma_s(s)
        sol = solve_spectral(config.ensemble, s, grid)
        pre = spectral_prefactors(sol, config.f, config.v, phi=phi)
        for n in config.n_list:
            batch = sharded_paths(
                config, n, stream.child(100000 + n), track_product=False, sol=sol,
                mode="coefficient",
            )
            centered = batch.log_coeff - n * q
            y = np.exp(batch.log_weight) * phi(batch.endpoint) * (
                (centered >= a1) & (centered <= a2)
            )
            est = float(y.mean())
            se = float(y.std(ddof=1) / math.sqrt(y.size))
            predicted = llt_large_deviation(n, s, rate, sigma_s, a1, a2, pre["target"])
            report.add("tilted", n, n * q, est, se, predicted, est / predicted)
    return [("llt", report)], 0
