"""Command-line front end: strategy comparisons, approximation assessments, simulation, export."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import data_path
from .dynamics import DynamicParams, SecurityVerdict, SimulationTrace, security_verdict, simulate_post_fault
from .errors import ConfigurationError, FreqSucError, SchemaError, SolverError, ValidationError
from .frequency import FrequencyState, build_planes, plane_domain, plane_overestimation_stats, required_pfr
from .milp import export_model
from .nadir import MODES, assess_damping_approx
from .scenarios import GB_QUANTILES, ForecastModel, build_tree, load_profile_csv
from .suc import (
    STRATEGIES,
    FleetState,
    OperationLog,
    SolverSettings,
    StepRecord,
    StrategyOptions,
    build_suc_model,
    rolling_horizon_run,
    solve_suc,
)
from .system import SystemModel, load_system

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VALIDATION = 0, 2, 3, 4
BASELINE = "just-pfr"
BIT_SETS = (tuple(range(0, 12)), tuple(range(5, 12)), (10, 11))


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class BitsCase:
    """Single SUC solve used by the bit-set assessment."""

    hour: int = 0
    lookahead: int = 6
    quantiles: tuple[float, ...] = (0.5,)
    strategy: str = "optimised-efr"
    time_limit: float | None = 120.0


@dataclass(frozen=True)
class RunConfig:
    system: Path
    forecast: Path
    realized: Path
    strategies: tuple[str, ...] = ("just-pfr", "fixed-efr", "optimised-efr", "deload", "full")
    steps: int = 48
    lookahead: int = 24
    quantiles: tuple[float, ...] = GB_QUANTILES
    error_sigma0: float = 500.0  # MW
    error_growth: float = 1.0
    initial_online: dict = field(default_factory=lambda: {"ccgt": 65})
    planes: int = 2
    bits: tuple[int, ...] = tuple(range(5, 12))
    efr_fixed: float = 200.0  # MW
    seed: int = 0
    solver: SolverSettings = field(default_factory=lambda: SolverSettings(backend="highs"))
    wind_capacity: float | None = None  # MW; rescales both wind traces
    wind_sweep: tuple[float, ...] = (0.0, 20000.0, 40000.0)
    validate_dynamics: bool = True
    dynamics: DynamicParams = field(default_factory=DynamicParams)
    damping_samples: int = 3500
    bits_case: BitsCase = field(default_factory=BitsCase)
    out: Path = Path("out")

    def validate(self) -> "RunConfig":
        for name in ("system", "forecast", "realized"):
            p = getattr(self, name)
            if not Path(p).is_file():
                raise ConfigurationError(f"{name}: file {p} does not exist")
        unknown = [s for s in self.strategies if s not in STRATEGIES]
        if unknown:
            raise ConfigurationError(f"unknown strategies {unknown}; choose from {sorted(STRATEGIES)}")
        if self.steps < 1 or self.lookahead < 1:
            raise ConfigurationError("steps and lookahead must be >= 1")
        if self.wind_capacity is not None and self.wind_capacity < 0:
            raise ConfigurationError("wind_capacity must be >= 0")
        try:
            Path(self.out).mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigurationError(f"output directory {self.out} is not writable: {exc}") from exc
        if not os.access(self.out, os.W_OK):
            raise ConfigurationError(f"output directory {self.out} is not writable")
        return self

    def strategy(self, name: str) -> StrategyOptions:
        return replace(STRATEGIES[name], planes=self.planes, bits=tuple(self.bits), efr_fixed=self.efr_fixed)

    def load_system(self) -> SystemModel:
        m = load_system(self.system)
        if self.wind_capacity is not None:
            m = replace(m, wind_capacity=float(self.wind_capacity))
        return m

    def wind_scale(self) -> float:
        if self.wind_capacity is None:
            return 1.0
        base = load_system(self.system).wind_capacity
        return self.wind_capacity / base if base > 0 else 0.0

    def load_traces(self) -> tuple[ForecastModel, tuple[np.ndarray, np.ndarray]]:
        d, w = load_profile_csv(self.forecast)
        rd, rw = load_profile_csv(self.realized)
        k = self.wind_scale()
        fc = ForecastModel(d, w * k, error_sigma0=self.error_sigma0, error_growth=self.error_growth)
        return fc, (rd, rw * k)


def _resolve(value: str, base: Path) -> Path:
    p = Path(value)
    if p.is_absolute():
        return p
    if (base / p).exists():
        return base / p
    bundled = data_path(value)
    return bundled if bundled.exists() else base / p


def _tuple(v):
    return tuple(v) if v is not None else None


def load_run_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Read a JSON run configuration; relative paths resolve against its folder, then the bundled data."""
    raw: dict = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file {path} does not exist")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(exc.msg, field=str(path), line=exc.lineno) from exc
        base = path.parent
    known = {f for f in RunConfig.__dataclass_fields__}
    extra = set(raw) - known
    if extra:
        raise SchemaError(f"unknown keys {sorted(extra)}", field=str(path))
    kw: dict = {}
    for name, default in (("system", "gb2030.json"), ("forecast", "desk_forecast.csv"), ("realized", "desk_realized.csv")):
        kw[name] = _resolve(raw.get(name, default), base)
    for name in ("strategies", "quantiles", "bits", "wind_sweep"):
        if name in raw:
            kw[name] = _tuple(raw[name])
    for name in ("steps", "lookahead", "error_sigma0", "error_growth", "initial_online", "planes", "efr_fixed", "seed",
                 "wind_capacity", "validate_dynamics", "damping_samples"):
        if name in raw:
            kw[name] = raw[name]
    if "solver" in raw:
        s = dict(raw["solver"])
        if "options" in s:
            s["options"] = tuple(sorted(dict(s["options"]).items()))
        try:
            kw["solver"] = SolverSettings(**s)
        except TypeError as exc:
            raise SchemaError(str(exc), field="solver") from exc
    if "dynamics" in raw:
        try:
            kw["dynamics"] = DynamicParams(**raw["dynamics"])
        except TypeError as exc:
            raise SchemaError(str(exc), field="dynamics") from exc
    if "bits_case" in raw:
        b = dict(raw["bits_case"])
        if "quantiles" in b:
            b["quantiles"] = tuple(b["quantiles"])
        try:
            kw["bits_case"] = BitsCase(**b)
        except TypeError as exc:
            raise SchemaError(str(exc), field="bits_case") from exc
    if "out" in raw:
        kw["out"] = Path(raw["out"]) if Path(raw["out"]).is_absolute() else base / raw["out"]
    kw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise SchemaError(str(exc)) from exc


# -- strategy comparison --------------------------------------------------------


@dataclass
class StepCheck:
    hour: int
    analytic_ok: bool
    simulated_ok: bool
    nadir_sim: float
    rocof_sim: float
    qss_sim: float
    pfr_margin: float  # scheduled R_G over the analytic requirement, minus one


@dataclass
class StrategyResult:
    name: str
    log: OperationLog | None
    error: str | None = None
    checks: list[StepCheck] = field(default_factory=list)
    traces: dict[int, SimulationTrace] = field(default_factory=dict, repr=False)
    runtime: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def security_failures(self) -> int:
        return sum(1 for c in self.checks if not (c.analytic_ok and c.simulated_ok))

    @property
    def analytic_pass_sim_fail(self) -> int:
        return sum(1 for c in self.checks if c.analytic_ok and not c.simulated_ok)


@dataclass
class ComparisonReport:
    results: dict[str, StrategyResult] = field(default_factory=dict)
    baseline: str = BASELINE
    efr_storage: tuple[str, ...] = ()
    R_S_max: float = 0.0

    def cost(self, name: str) -> float | None:
        r = self.results.get(name)
        return r.log.total_cost if r is not None and r.ok else None

    def savings(self, name: str) -> float | None:
        base, c = self.cost(self.baseline), self.cost(name)
        if base is None or c is None:
            return None
        return base - c

    def rows(self) -> list[dict]:
        out = []
        for name, r in self.results.items():
            row = {"strategy": name, "status": "ok" if r.ok else "failed"}
            if r.ok:
                s = r.log.summary()
                row.update(
                    total_cost=s["total_cost"],
                    emissions_tco2=s["emissions_tco2"],
                    curtailment_mwh=s["curtailment_mwh"],
                    shed_mwh=s["shed_mwh"],
                    mean_H=s["mean_H"],
                    mean_R_S=s["mean_R_S"],
                    mean_R_G=s["mean_R_G"],
                    mean_P_L=s["mean_P_L"],
                    savings=self.savings(name),
                    max_mip_gap=max((st.mip_gap for st in r.log.steps), default=0.0),
                    security_failures=r.security_failures,
                )
            else:
                row["error"] = r.error
            out.append(row)
        return out

    def write(self, out: str | Path) -> None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        rows = self.rows()
        cols = ["strategy", "status", "total_cost", "savings", "emissions_tco2", "curtailment_mwh", "shed_mwh",
                "mean_H", "mean_R_S", "mean_R_G", "mean_P_L", "max_mip_gap", "security_failures"]
        with open(out / "comparison.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(r.get(k)) for k in cols})
        (out / "comparison.json").write_text(json.dumps({"baseline": self.baseline, "strategies": rows}, indent=2) + "\n")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return v


def estimate_runtime(cfg: RunConfig) -> float:
    """Rough upper estimate in seconds for :func:`run_case`."""
    per = cfg.solver.time_limit
    if per is None:
        nodes = 1 + len(cfg.quantiles) * cfg.lookahead
        per = 0.05 * nodes * (4.0 if cfg.solver.backend == "scipy" else 1.0)
    return len(cfg.strategies) * cfg.steps * (per + (0.5 if cfg.validate_dynamics else 0.0))


def validate_steps(m: SystemModel, log: OperationLog, d: DynamicParams, keep_traces: int = 1):
    """Screen every step analytically and in the time domain.

    Returns the checks and the traces of the ``keep_traces`` steps whose
    scheduled PFR is closest to the analytic requirement, plus the deepest one.
    """
    f = m.freq
    checks, kept = [], []
    deepest = (-1.0, None, None)
    for rec in log.steps:
        state = rec.frequency_state()
        analytic = rec.rocof_ok and rec.qss_ok and rec.nadir_ok
        tr = simulate_post_fault(state, f, d)
        v = security_verdict(tr, f)
        need = required_pfr(state.H, state.R_S, state.P_L, state.P_D, f, with_damping=True)
        margin = rec.R_G / need - 1.0 if need > 0 and math.isfinite(need) else math.inf
        checks.append(StepCheck(rec.hour, analytic, v.secure, tr.nadir, tr.rocof_max, tr.qss_60s, margin))
        kept = sorted(kept + [(margin, rec.hour, tr)], key=lambda c: (c[0], c[1]))[:keep_traces]
        if tr.nadir > deepest[0]:
            deepest = (tr.nadir, rec.hour, tr)
    traces = {hour: tr for _, hour, tr in kept}
    if deepest[1] is not None:
        traces.setdefault(deepest[1], deepest[2])
    return checks, traces


def run_case(cfg: RunConfig, progress: Callable[[str], None] | None = None) -> ComparisonReport:
    """Run every configured strategy on identical inputs, validate and write the artifacts."""
    cfg.validate()
    m = cfg.load_system()
    fc, realized = cfg.load_traces()
    initial = FleetState.initial(m, cfg.initial_online)
    solver = replace(cfg.solver, seed=cfg.seed)
    report = ComparisonReport(efr_storage=tuple(s.name for s in m.efr_storage), R_S_max=m.freq.R_S_max)
    out = Path(cfg.out)
    for name in cfg.strategies:
        opts = cfg.strategy(name)
        t0 = time.perf_counter()

        def on_step(k, rec: StepRecord, name=name):
            if progress is not None:
                progress(f"{name}: hour {rec.hour} cost {rec.cost:.0f} gap {rec.mip_gap:.2e} ({rec.solve_time:.1f} s)")

        try:
            log = rolling_horizon_run(
                m, realized, fc, opts, cfg.lookahead, steps=cfg.steps, initial=initial, solver=solver,
                quantiles=cfg.quantiles, on_step=on_step,
            )
            res = StrategyResult(name, log)
        except SolverError as exc:
            res = StrategyResult(name, exc.partial, error=str(exc))
        res.runtime = time.perf_counter() - t0
        if res.log is not None and opts.frequency_constraints_enabled and cfg.validate_dynamics:
            res.checks, res.traces = validate_steps(m, res.log, cfg.dynamics)
        report.results[name] = res
        _write_strategy(out / name, res)
    report.write(out)
    return report


def _write_strategy(folder: Path, res: StrategyResult) -> None:
    folder.mkdir(parents=True, exist_ok=True)
    if res.log is not None:
        res.log.write_csv(folder / "log.csv")
        res.log.write_json(folder / "summary.json")
    if res.checks:
        with open(folder / "validation.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["hour", "analytic_ok", "simulated_ok", "nadir_hz", "rocof_hz_s", "qss_hz", "pfr_margin"])
            for c in res.checks:
                w.writerow([c.hour, int(c.analytic_ok), int(c.simulated_ok)] + [f"{v:.10g}" for v in (c.nadir_sim, c.rocof_sim, c.qss_sim, c.pfr_margin)])
    for hour, tr in sorted(res.traces.items()):
        tr.write_csv(folder / f"trace_h{hour:03d}.csv")


# -- wind sweep ---------------------------------------------------------------------


@dataclass
class WindSweep:
    capacities: tuple[float, ...]
    reports: dict[float, ComparisonReport]

    def savings(self, strategy: str) -> list[float | None]:
        return [self.reports[c].savings(strategy) for c in self.capacities]


def run_wind_sweep(cfg: RunConfig, strategies: Sequence[str] = (BASELINE, "optimised-efr"), progress=None) -> WindSweep:
    reports = {}
    for cap in cfg.wind_sweep:
        sub = replace(cfg, wind_capacity=float(cap), strategies=tuple(strategies), out=Path(cfg.out) / f"wind_{cap / 1000:g}gw")
        reports[float(cap)] = run_case(sub, progress)
    return WindSweep(tuple(float(c) for c in cfg.wind_sweep), reports)


# -- plot data ------------------------------------------------------------------


def emit_plot_data(report: ComparisonReport | None, out: str | Path, sweep: WindSweep | None = None) -> list[Path]:
    """Write plot-ready CSV bundles; returns the files written."""
    out = Path(out)
    written: list[Path] = []
    if report is not None and report.results:
        out.mkdir(parents=True, exist_ok=True)
        for name, res in report.results.items():
            if res.log is None:
                continue
            p = out / f"profile_{name}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["hour", "net_demand_mw", "soc_mwh", "efr_frac"])
                for s in res.log.steps:
                    soc = sum(s.soc.get(n, 0.0) for n in report.efr_storage)
                    frac = s.R_S / report.R_S_max if report.R_S_max > 0 else 0.0
                    w.writerow([s.hour, f"{s.net_demand:.10g}", f"{soc:.10g}", f"{frac:.10g}"])
            written.append(p)
            for hour, tr in sorted(res.traces.items()):
                p = out / f"trace_{name}_h{hour:03d}.csv"
                tr.write_csv(p)
                written.append(p)
    if sweep is not None and sweep.capacities:
        out.mkdir(parents=True, exist_ok=True)
        p = out / "savings_vs_wind.csv"
        names = sorted({n for r in sweep.reports.values() for n in r.results if n != BASELINE})
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["wind_gw", "strategy", "savings"])
            for cap in sweep.capacities:
                for n in names:
                    w.writerow([f"{cap / 1000:g}", n, _fmt(sweep.reports[cap].savings(n))])
        written.append(p)
    return written


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if len(x) < 2 or np.std(x) == 0 or np.std(y) == 0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])


# -- assessments ------------------------------------------------------------------


def assess_planes(m: SystemModel, counts: Sequence[int] = (2, 4, 8), grid_step: float = 5.0) -> list[dict]:
    rows = []
    prev = None
    for n in counts:
        planes = build_planes(*plane_domain(m), n, m.freq)
        mean, mx = plane_overestimation_stats(planes, grid_step)
        rows.append({"planes": n, "mean_over_pct": mean, "max_over_pct": mx, "max_ratio": (prev / mx) if prev else None})
        prev = mx
    return rows


def assess_bits(cfg: RunConfig, bit_sets: Sequence[tuple[int, ...]] = BIT_SETS) -> list[dict]:
    """Solve one desk tree per bit set; frequency-service cost is the increase over the unconstrained schedule."""
    m = cfg.load_system()
    fc, (rd, rw) = cfg.load_traces()
    bc = cfg.bits_case
    tree = build_tree(fc, bc.quantiles, bc.lookahead, float(rw[bc.hour]), float(rd[bc.hour]),
                      wind_capacity=m.wind_capacity, start_hour=bc.hour)
    initial = FleetState.initial(m, cfg.initial_online)
    solver = replace(cfg.solver, seed=cfg.seed, time_limit=bc.time_limit, accept_incumbent=True)
    base_opts = replace(cfg.strategy(bc.strategy), frequency_constraints_enabled=False)
    _, free, _ = solve_suc(m, tree, base_opts, initial, replace(solver, warm_start=False))
    rows: dict[tuple[int, ...], dict] = {}
    prev = None
    # coarse to fine: each finer set starts from the coarser schedule, which it can represent
    for bits in sorted(bit_sets, key=lambda b: (len(b), b)):
        opts = replace(cfg.strategy(bc.strategy), bits=tuple(bits))
        seed = prev if prev is not None and set(prev[2]) <= set(bits) else None
        model, sol, x = solve_suc(m, tree, opts, initial, solver, seed_from=seed[:2] if seed else None)
        if x is not None:
            prev = (model, x, tuple(bits))
        obj = sol.objective if x is not None else None
        rows[tuple(bits)] = {
            "bits": f"{min(bits)}-{max(bits)}",
            "n_bits": len(bits),
            "precision_mw": 2 ** min(bits),
            "status": sol.status if sol.ok else ("time-limit" if sol.limit_reached else sol.status),
            "objective": obj,
            "mip_gap": sol.gap,
            "solve_time_s": sol.solve_time,
            "freq_service_cost": (obj - free.objective) if obj is not None and free.objective is not None else None,
        }
    rows = [rows[tuple(b)] for b in bit_sets]
    base = rows[0]
    for r in rows:
        r["time_decrease_pct"] = 100.0 * (1 - r["solve_time_s"] / base["solve_time_s"]) if base["solve_time_s"] else None
        fb, fr = base["freq_service_cost"], r["freq_service_cost"]
        r["freq_cost_increase_pct"] = 100.0 * (fr / fb - 1) if fb and fr is not None else None
    return rows


def _write_rows(path: Path, rows: list[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if rows:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
    return path


def run_assessment(cfg: RunConfig, which: str) -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    m = cfg.load_system()
    if which == "damping":
        summary = {}
        files = []
        for mode in MODES:
            rep = assess_damping_approx(n_samples=cfg.damping_samples, seed=cfg.seed, mode=mode, f=m.freq)
            rep.write_csv(out / f"damping_{mode}.csv")
            files.append(out / f"damping_{mode}.csv")
            summary[mode] = rep.summary()
        table = [{"statistic": k, **{mode: summary[mode][f"{k}_nadir"] for mode in MODES}} for k in ("mean", "max", "min")]
        files.append(_write_rows(out / "damping_table.csv", table))
        (out / "damping_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        return files + [out / "damping_summary.json"]
    if which == "planes":
        return [_write_rows(out / "planes.csv", assess_planes(m, sorted({2, 4, 8, cfg.planes})))]
    if which == "bits":
        return [_write_rows(out / "bits.csv", assess_bits(cfg))]
    raise ValueError(f"unknown assessment {which!r}")


# -- command line ------------------------------------------------------------------


def _bits_arg(text: str) -> tuple[int, ...]:
    out = set()
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-")
            out.update(range(int(a), int(b) + 1))
        elif part:
            out.add(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty bit set")
    return tuple(sorted(out))


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freqsuc", description="Frequency-secured stochastic unit commitment tools.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="run configuration JSON")
        p.add_argument("--seed", type=int, help="sampling and solver seed")
        p.add_argument("--gap", type=float, help="relative MILP gap")
        p.add_argument("--planes", type=int, help="number of nadir planes")
        p.add_argument("--bits", type=_bits_arg, help="expansion bits, e.g. 5-11 or 0,3,7")
        p.add_argument("--out", help="output directory")
        return p

    p = common(sub.add_parser("run", help="compare strategies with rolling-horizon operation"))
    p.add_argument("--strategies", help="comma-separated strategy names")
    p.add_argument("--steps", type=int)
    p.add_argument("--wind-sweep", action="store_true", help="also run the wind-capacity sweep")
    common(sub.add_parser("assess-damping", help="damping approximation assessment"))
    common(sub.add_parser("assess-planes", help="plane overestimation assessment"))
    common(sub.add_parser("assess-bits", help="binary expansion assessment"))
    p = common(sub.add_parser("simulate", help="time-domain post-fault simulation"))
    for name, default in (("H", 132000.0), ("R_S", 220.0), ("R_G", 2240.0), ("P_L", 1660.0), ("P_D", 38300.0)):
        p.add_argument(f"--{name}", type=float, default=default)
    p.add_argument("--tau-g", type=float, default=5.0)
    p.add_argument("--tau-b", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=1e-3)
    p = common(sub.add_parser("export-model", help="write one step's SUC model as MPS"))
    p.add_argument("--strategy", default="optimised-efr")
    p.add_argument("--hour", type=int, default=0)
    return ap


def _config_from_args(args) -> RunConfig:
    over = {"seed": args.seed, "planes": args.planes, "bits": args.bits, "out": Path(args.out) if args.out else None}
    if getattr(args, "strategies", None):
        over["strategies"] = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    if getattr(args, "steps", None):
        over["steps"] = args.steps
    cfg = load_run_config(args.config, **over)
    if args.gap is not None:
        cfg = replace(cfg, solver=replace(cfg.solver, gap=args.gap))
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "simulate":
            return _cmd_simulate(args, cfg)
        cfg.validate()
        if args.command == "run":
            return _cmd_run(args, cfg)
        if args.command == "export-model":
            return _cmd_export(args, cfg)
        which = args.command.split("-", 1)[1]
        for p in run_assessment(cfg, which):
            print(p)
        return EXIT_OK
    except (ConfigurationError, SchemaError, ValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except FreqSucError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def _cmd_run(args, cfg: RunConfig) -> int:
    runs = len(cfg.wind_sweep) + 1 if args.wind_sweep else 1
    est = estimate_runtime(cfg) * runs
    print(f"estimated runtime: up to {est / 60:.1f} min for {len(cfg.strategies)} strategies x {cfg.steps} steps", flush=True)
    report = run_case(cfg, progress=lambda s: print(s, flush=True))
    sweep = run_wind_sweep(cfg, progress=lambda s: print(s, flush=True)) if args.wind_sweep else None
    for p in emit_plot_data(report, Path(cfg.out) / "plots", sweep):
        print(p)
    for r in report.rows():
        print(json.dumps(r))
    if any(not r.ok for r in report.results.values()):
        return EXIT_SOLVER
    if any(r.security_failures for r in report.results.values()):
        return EXIT_VALIDATION
    return EXIT_OK


def _cmd_simulate(args, cfg: RunConfig) -> int:
    m = cfg.load_system()
    state = FrequencyState(args.H, args.R_S, args.R_G, args.P_L, args.P_D)
    d = replace(cfg.dynamics, tau_g=args.tau_g, tau_b=args.tau_b, dt=args.dt)
    tr = simulate_post_fault(state, m.freq, d)
    v: SecurityVerdict = security_verdict(tr, m.freq)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    tr.write_csv(out / "trace.csv")
    v.write_json(out / "verdict.json")
    print(json.dumps({**tr.scalars(), **v.to_dict()}))
    return EXIT_OK if v.secure else EXIT_VALIDATION


def _cmd_export(args, cfg: RunConfig) -> int:
    m = cfg.load_system()
    fc, (rd, rw) = cfg.load_traces()
    h = args.hour
    tree = build_tree(fc, cfg.quantiles, cfg.lookahead, float(rw[h]), float(rd[h]), wind_capacity=m.wind_capacity, start_hour=h)
    model = build_suc_model(m, tree, cfg.strategy(args.strategy), FleetState.initial(m, cfg.initial_online))
    out = Path(cfg.out)
    path = out / f"suc_{args.strategy}_h{h:03d}.mps"
    export_model(model, path)
    print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
