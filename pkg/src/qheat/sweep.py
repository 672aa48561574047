"""Sweep orchestration: run solvers over (method, m, epsilon, seed) cells.

Every cell produces the benchmark scalar ``H_S`` (heat in a region at the final
time) and compares it with the classical reference on the same discretization.
Records are sorted by ``(method, m, epsilon, seed)`` so output is independent of
worker scheduling.  Wall time lives in a separate timings file; the records CSV
holds only deterministic quantities.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .costs import CostModel, cost_cas_readout, cost_fft, cost_osk
from .grid import (assemble_block_system, heat_in_region, make_problem, march_explicit,
                   region_indices, semidiscrete_reference, spectral_solve, solve_block_direct)

METHODS = ("classical", "fft", "cas", "osk")
METHOD_MODEL = {"fft": "fft_classical", "cas": "cas_readout", "osk": "osk"}
MAX_CAS_M = 4


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CostRecord:
    method: str
    m: int
    epsilon: float
    seed: int
    predicted_cost: float
    queries: int
    estimate: float
    reference: float
    achieved_error: float
    status: str = "ok"
    message: str = ""
    wall_time: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


_INT_FIELDS = {"m", "seed", "queries"}
_FLOAT_FIELDS = {"epsilon", "predicted_cost", "estimate", "reference", "achieved_error",
                 "wall_time"}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def record_columns(include_wall_time: bool = False) -> list[str]:
    cols = [f.name for f in fields(CostRecord)]
    return cols if include_wall_time else [c for c in cols if c != "wall_time"]


def records_to_csv(records, dest=None, include_wall_time: bool = False) -> str:
    cols = record_columns(include_wall_time)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for rec in records:
        d = asdict(rec)
        w.writerow([_fmt(d[c]) for c in cols])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


def records_from_csv(source) -> list[CostRecord]:
    """Parse text produced by :func:`records_to_csv` (a path or the CSV text)."""
    text = source
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        kw = {}
        for k, v in row.items():
            if k in _INT_FIELDS:
                kw[k] = int(v)
            elif k in _FLOAT_FIELDS:
                kw[k] = float(v)
            else:
                kw[k] = v
        out.append(CostRecord(**kw))
    return out


def timings_to_csv(records, dest=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "m", "epsilon", "seed", "wall_time"])
    for r in records:
        w.writerow([r.method, r.m, repr(r.epsilon), r.seed, repr(r.wall_time)])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


@dataclass(frozen=True)
class SweepConfig:
    methods: tuple[str, ...]
    m_values: tuple[int, ...]
    epsilons: tuple[float, ...]
    seeds: tuple[int, ...] = (0,)
    lam: float = 0.25
    initial: str = "sine:1"
    region: str = "left"
    cas_walk_steps: int = 64
    osk_n: int = 4
    osk_k: int = 2
    osk_knf: int = 3
    osk_kns: int = 8
    osk_t_final: float = 0.05
    q: float = 1.0
    gamma: float = 1.0
    qae_mode: str = "argmax"
    workers: int = 1
    records_path: str | None = None
    timings_path: str | None = None
    report_path: str | None = None
    dat_dir: str | None = None

    def __post_init__(self):
        if not self.methods or not self.m_values or not self.epsilons or not self.seeds:
            raise ConfigError("methods, m, epsilon and seeds must all be non-empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}; choose from {list(METHODS)}")
        if any(not 0 < e < 1 for e in self.epsilons):
            raise ConfigError("every epsilon must lie in (0, 1)")
        if any(m < 2 for m in self.m_values):
            raise ConfigError("grid sizes must be at least 2")
        if self.region not in ("left", "right", "full"):
            raise ConfigError(f"unknown region {self.region!r}")
        if self.qae_mode not in ("argmax", "sample"):
            raise ConfigError(f"unknown qae_mode {self.qae_mode!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def cells(self):
        return sorted((meth, m, eps, seed) for meth in self.methods for m in self.m_values
                      for eps in self.epsilons for seed in self.seeds)


def config_from_dict(cfg: dict) -> SweepConfig:
    if not isinstance(cfg, dict):
        raise ConfigError("sweep config must be a mapping")
    known = {"methods", "m", "epsilon", "seeds", "problem", "cas", "osk", "qae_mode",
             "workers", "output"}
    extra = set(cfg) - known
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    prob = cfg.get("problem") or {}
    cas = cfg.get("cas") or {}
    osk = cfg.get("osk") or {}
    out = cfg.get("output") or {}
    try:
        return SweepConfig(
            methods=tuple(cfg.get("methods", METHODS)),
            m_values=tuple(int(m) for m in cfg.get("m", ())),
            epsilons=tuple(float(e) for e in cfg.get("epsilon", ())),
            seeds=tuple(int(s) for s in cfg.get("seeds", (0,))),
            lam=float(prob.get("lambda", 0.25)),
            initial=str(prob.get("initial", "sine:1")),
            region=str(prob.get("region", "left")),
            cas_walk_steps=int(cas.get("walk_steps", 64)),
            osk_n=int(osk.get("n", 4)),
            osk_k=int(osk.get("k", 2)),
            osk_knf=int(osk.get("knf", 3)),
            osk_kns=int(osk.get("kns", 8)),
            osk_t_final=float(osk.get("t_final", 0.05)),
            q=float(osk.get("q", 1.0)),
            gamma=float(osk.get("gamma", 1.0)),
            qae_mode=str(cfg.get("qae_mode", "argmax")),
            workers=int(cfg.get("workers", 1)),
            records_path=out.get("records"),
            timings_path=out.get("timings"),
            report_path=out.get("report"),
            dat_dir=out.get("dat_dir"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SweepConfig:
    import yaml

    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(cfg or {})


def _cell_classical(cfg, m, eps, seed):
    problem = make_problem(m, n_steps=m, lam=cfg.lam, initial=cfg.initial)
    region = region_indices(m, cfg.region)
    dx = problem.grid.delta_x
    est = heat_in_region(march_explicit(problem).final, region, dx)
    ref = heat_in_region(solve_block_direct(assemble_block_system(problem)).final, region, dx)
    n_ops = m * problem.grid.n_steps
    return float(n_ops), n_ops, est, ref


def _cell_fft(cfg, m, eps, seed):
    problem = make_problem(m, n_steps=m, lam=cfg.lam, initial=cfg.initial)
    region = region_indices(m, cfg.region)
    dx = problem.grid.delta_x
    est = heat_in_region(spectral_solve(problem), region, dx)
    ref = heat_in_region(solve_block_direct(assemble_block_system(problem)).final, region, dx)
    queries = m * max(1, math.ceil(math.log2(m)))
    return cost_fft(eps), queries, est, ref


def _cell_cas(cfg, m, eps, seed):
    from .chebyshev import filter_weights
    from .qae import ReadoutNorms, heat_readout
    from .qlsp import (StateVector, WalkSchedule, adiabatic_evolve, build_hamiltonian_path,
                       chebyshev_filter, extract_solution, filter_step, walk_step)

    if m > MAX_CAS_M:
        raise ValueError(f"dense CAS emulation is capped at m={MAX_CAS_M}")
    problem = make_problem(m, n_steps=m, lam=cfg.lam, initial=cfg.initial)
    system = assemble_block_system(problem)
    region = region_indices(m, cfg.region)
    dx = problem.grid.delta_x
    ref = heat_in_region(system.solve()[-m:], region, dx)
    path = build_hamiltonian_path(system.to_dense(), system.rhs)
    run = adiabatic_evolve(path, WalkSchedule(cfg.cas_walk_steps), track_overlaps=False)
    taps = filter_weights()
    filtered = chebyshev_filter(run.state, walk_step(path, 1.0, filter_step(path)), taps)
    u_final = extract_solution(filtered, path).values[-m:]
    norm = float(np.linalg.norm(u_final))
    state = StateVector.from_vector(u_final)
    prep = cfg.cas_walk_steps + len(taps) - 1
    res = heat_readout(state, region, ReadoutNorms(norm, dx), eps, seed=seed, prep_cost=prep,
                       m=m, mode=cfg.qae_mode)
    return cost_cas_readout(m, eps), res.combined_queries, res.estimate, ref


def _cell_osk(cfg, m, eps, seed):
    from .osk import QAEMean, SmoothnessParams, build_hierarchy, osk_solve
    from .qae import MAX_ANCILLAS, ancillas_for

    problem = make_problem(m, n_steps=1, t_final=cfg.osk_t_final, initial=cfg.initial)
    hier = build_hierarchy(cfg.osk_t_final, cfg.osk_n, cfg.osk_k, cfg.osk_knf, cfg.osk_kns)
    M = min(ancillas_for(eps), MAX_ANCILLAS)
    est = QAEMean(M, seed, cfg.qae_mode)
    res = osk_solve(problem, hier, SmoothnessParams(), est, reference=False)
    region = region_indices(m, cfg.region)
    dx = problem.grid.delta_x
    ref_final = semidiscrete_reference(problem, [float(hier.T_total)])[0]
    value = heat_in_region(res.trajectory.final, region, dx)
    ref = heat_in_region(ref_final, region, dx)
    return cost_osk(eps, cfg.q, cfg.gamma), res.queries, value, ref


_RUNNERS = {"classical": _cell_classical, "fft": _cell_fft, "cas": _cell_cas,
            "osk": _cell_osk}


def run_cell(cfg: SweepConfig, cell) -> CostRecord:
    method, m, eps, seed = cell
    t0 = time.perf_counter()
    try:
        pred, queries, est, ref = _RUNNERS[method](cfg, m, eps, seed)
        return CostRecord(method, m, eps, seed, float(pred), int(queries), float(est),
                          float(ref), float(abs(est - ref)),
                          wall_time=time.perf_counter() - t0)
    except Exception as exc:
        msg = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        nan = float("nan")
        return CostRecord(method, m, eps, seed, nan, 0, nan, nan, nan, "failed", msg,
                          time.perf_counter() - t0)


def _run_cell_args(args):
    return run_cell(*args)


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list[CostRecord]:
    cells = cfg.cells()
    workers = cfg.workers if workers is None else workers
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_run_cell_args, [(cfg, c) for c in cells]))
    else:
        records = [run_cell(cfg, c) for c in cells]
    return sorted(records, key=lambda r: (r.method, r.m, r.epsilon, r.seed))


def model_records(models, m_values, epsilons) -> list[CostRecord]:
    """Pure model evaluations as records (queries = 0, errors = 0)."""
    out = []
    for name in models:
        for m in m_values:
            cm = CostModel(name, m=m, d=1) if name != "cas_highdim" else CostModel(name, m=m, d=2)
            for eps in epsilons:
                out.append(CostRecord(name, int(m), float(eps), 0, cm.cost(eps), 0,
                                      0.0, 0.0, 0.0))
    return sorted(out, key=lambda r: (r.method, r.m, r.epsilon, r.seed))


def log_grid(lo: float, hi: float, per_decade: int = 5) -> tuple[float, ...]:
    """Log-spaced epsilons from ``lo`` to ``hi`` inclusive."""
    n = int(round(per_decade * math.log10(hi / lo))) + 1
    return tuple(float(v) for v in np.logspace(math.log10(lo), math.log10(hi), n))
