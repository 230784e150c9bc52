"""Frequency-secured stochastic unit commitment and rolling-horizon operation.

Generator classes are clustered: each class carries integer online, start and
shutdown counts per scenario node. Must-run classes stay online throughout and
may be deloaded to shrink the largest infeed. Storage flagged for fast response
offers EFR; in ``none`` mode that headroom is counted as PFR instead.

Start decisions for a class with lead time ``L`` are taken ``L`` hours ahead,
so starts at stages below ``L`` come from the fleet state and starts at stage
``L`` are shared by all scenarios (they are decided at the root).
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ModelError, SolverError, ValidationError
from .frequency import (
    ExpansionConfig,
    FrequencyState,
    NadirHandles,
    build_planes,
    emit_nadir_constraints,
    plane_domain,
    security_screen,
)
from .milp import LinExpr, MilpModel, Solution, Var, lin_sum, solve
from .scenarios import GB_QUANTILES, ForecastModel, ScenarioNode, ScenarioTree, build_tree
from .system import SystemModel, total_must_run_count

EFR_MODES = ("none", "fixed", "optimized")
INT_TOL = 1e-6


@dataclass(frozen=True)
class StrategyOptions:
    name: str = "optimised-efr"
    efr_mode: str = "optimized"
    efr_fixed: float = 200.0  # MW, used when efr_mode == "fixed"
    deload_enabled: bool = False
    bits: tuple[int, ...] = tuple(range(5, 12))
    planes: int = 2
    frequency_constraints_enabled: bool = True
    deterministic_quantile: float | None = None
    nadir_damping: bool = True
    clustered_infeed: bool = False  # P_L also covers the largest online non-must-run unit
    nadir_cuts: int = 8  # valid tangent cuts per plane; 0 disables

    def validate(self, m: SystemModel | None = None) -> "StrategyOptions":
        if self.efr_mode not in EFR_MODES:
            raise ValidationError("efr_mode", f"must be one of {EFR_MODES}")
        if self.planes < 1:
            raise ValidationError("planes", "must be >= 1")
        if not self.bits:
            raise ValidationError("bits", "must be non-empty")
        if self.deterministic_quantile is not None and not 0 < self.deterministic_quantile < 1:
            raise ValidationError("deterministic_quantile", "must lie in (0, 1)")
        if self.efr_fixed < 0:
            raise ValidationError("efr_fixed", "must be >= 0")
        if m is not None and self.efr_mode == "fixed" and self.efr_fixed > m.freq.R_S_max + 1e-9:
            raise ValidationError("efr_fixed", f"exceeds R_S_max = {m.freq.R_S_max}")
        return self


STRATEGIES = {
    "just-pfr": StrategyOptions(name="just-pfr", efr_mode="none"),
    "fixed-efr": StrategyOptions(name="fixed-efr", efr_mode="fixed", efr_fixed=200.0),
    "optimised-efr": StrategyOptions(name="optimised-efr", efr_mode="optimized"),
    "deload": StrategyOptions(name="deload", efr_mode="none", deload_enabled=True),
    "full": StrategyOptions(name="full", efr_mode="optimized", deload_enabled=True),
    "no-frequency": StrategyOptions(name="no-frequency", efr_mode="none", frequency_constraints_enabled=False),
}


@dataclass
class FleetState:
    """Commitment and storage state carried between rolling-horizon steps.

    Histories hold the most recent step last. ``pending[g][k]`` units of class
    ``g`` come online ``k`` steps ahead from starts decided earlier.
    """

    n_up: dict[str, int]
    p_out: dict[str, float]
    start_history: dict[str, tuple[int, ...]]
    stop_history: dict[str, tuple[int, ...]]
    pending: dict[str, tuple[int, ...]]
    soc: dict[str, float]

    @classmethod
    def initial(cls, m: SystemModel, n_up: Mapping[str, int] | None = None) -> "FleetState":
        n_up = dict(n_up or {})
        up, p_out, hist, pend = {}, {}, {}, {}
        for g in m.generators:
            up[g.name] = g.unit_count if g.must_run else int(n_up.get(g.name, 0))
            p_out[g.name] = g.p_max * up[g.name] if g.must_run else g.p_min * up[g.name]
            hist[g.name] = (0,) * max(g.min_up, g.min_down, 1)
            pend[g.name] = (0,) * g.startup_time
        unknown = set(n_up) - set(up)
        if unknown:
            raise ValidationError("initial.n_up", f"unknown classes {sorted(unknown)}")
        return cls(up, p_out, hist, dict(hist), pend, {s.name: s.soc_initial for s in m.storage}).validate(m)

    def validate(self, m: SystemModel) -> "FleetState":
        for g in m.generators:
            n = self.n_up.get(g.name)
            if n is None or not 0 <= n <= g.unit_count:
                raise ValidationError(f"initial.n_up.{g.name}", f"must lie in [0, {g.unit_count}]")
            if g.must_run and n != g.unit_count:
                raise ValidationError(f"initial.n_up.{g.name}", "must-run classes are always fully online")
            if len(self.pending.get(g.name, ())) != g.startup_time:
                raise ValidationError(f"initial.pending.{g.name}", f"needs {g.startup_time} entries")
            if n + sum(self.pending[g.name]) > g.unit_count:
                raise ValidationError(f"initial.pending.{g.name}", "pending starts exceed offline units")
            recent_starts = sum(self.start_history[g.name][-(g.min_up - 1) :]) if g.min_up > 1 else 0
            if recent_starts > n:
                raise ValidationError(f"initial.start_history.{g.name}", "inconsistent with min_up")
            recent_stops = sum(self.stop_history[g.name][-(g.min_down - 1) :]) if g.min_down > 1 else 0
            if recent_stops > g.unit_count - n:
                raise ValidationError(f"initial.stop_history.{g.name}", "inconsistent with min_down")
        for s in m.storage:
            v = self.soc.get(s.name)
            if v is None or not -1e-6 <= v <= s.capacity + 1e-6:
                raise ValidationError(f"initial.soc.{s.name}", f"must lie in [0, {s.capacity}]")
        return self

    def copy(self) -> "FleetState":
        return FleetState(dict(self.n_up), dict(self.p_out), dict(self.start_history), dict(self.stop_history), dict(self.pending), dict(self.soc))


@dataclass
class NodeHandles:
    n_up: dict[str, Var | float] = field(default_factory=dict)
    n_sg: dict[str, Var | float] = field(default_factory=dict)
    n_sh: dict[str, Var | float] = field(default_factory=dict)
    p_g: dict[str, Var] = field(default_factory=dict)
    r_g: dict[str, Var] = field(default_factory=dict)
    charge: dict[str, Var] = field(default_factory=dict)
    discharge: dict[str, Var] = field(default_factory=dict)
    soc: dict[str, Var] = field(default_factory=dict)
    r_s: dict[str, Var] = field(default_factory=dict)
    r_bp: dict[str, Var] = field(default_factory=dict)  # storage headroom counted as PFR
    P_W: Var | None = None
    P_L: Var | None = None
    shed: Var | None = None
    H: Var | None = None
    R_S: Var | None = None
    R_G: Var | None = None
    nadir: NadirHandles | None = None


def _val(x) -> LinExpr:
    return LinExpr.of(x)


def _window(tree: ScenarioTree, node: ScenarioNode, length: int) -> list[ScenarioNode]:
    out = []
    for a in tree.ancestors(node):
        if len(out) == length:
            break
        out.append(a)
    return out


def _tail_sum(history: Sequence[int], k: int) -> float:
    return float(sum(history[len(history) - k :])) if k > 0 else 0.0


def _max_online(g, node: ScenarioNode, initial: FleetState) -> float:
    """Online count bound: before the lead time only pending starts can add units."""
    if g.must_run or node.stage >= g.startup_time:
        return float(g.unit_count)
    return float(min(g.unit_count, initial.n_up[g.name] + sum(initial.pending[g.name][: node.stage + 1])))


def build_suc_model(
    m: SystemModel,
    tree: ScenarioTree,
    opts: StrategyOptions,
    initial: FleetState,
    fixed: Mapping[str, float] | None = None,
) -> MilpModel:
    """Assemble the SUC over ``tree``; ``fixed`` pins named variables (used for re-dispatch)."""
    opts.validate(m)
    initial.validate(m)
    f = m.freq
    model = MilpModel(name="SUC", metadata={"strategy": opts.name, "nodes": len(tree)})
    handles: dict[int, NodeHandles] = {}
    n_must = total_must_run_count(m)
    cfg = planes = None
    if opts.frequency_constraints_enabled:
        cfg = ExpansionConfig.for_system(m, opts.bits)
        planes = build_planes(*plane_domain(m), opts.planes, f)
    model.metadata.update(expansion=cfg, planes=planes, handles=handles, tree=tree)
    objective = LinExpr()
    by_stage_first: dict[int, ScenarioNode] = {}

    for node in tree.nodes:
        i = node.id
        pre = f"n{i}_"
        h = NodeHandles()
        handles[i] = h
        parent = tree.parent(node)
        ph = handles[parent.id] if parent is not None else None
        dt = node.delta_tau
        pi = node.probability
        balance = LinExpr()
        cost = LinExpr()
        P_M = LinExpr()
        pfr = LinExpr()

        for g in m.generators:
            gn = g.name
            if g.must_run:
                n_up = float(g.unit_count)
                h.n_up[gn], h.n_sg[gn], h.n_sh[gn] = n_up, 0.0, 0.0
                lo = g.min_output * n_up if (opts.deload_enabled and g.deloadable) else g.p_max * n_up
                p = model.add_variable(f"{pre}{gn}_P", lb=lo, ub=g.p_max * n_up)
                h.p_g[gn] = p
                P_M.iadd(p)
                if g.ramp_rate is not None and lo < g.p_max * n_up:
                    prev = ph.p_g[gn] if ph is not None else initial.p_out[gn]
                    lim = g.ramp_rate * dt * n_up
                    model.add_constraint(f"{pre}{gn}_ru", _val(p) - prev, "<=", lim)
                    model.add_constraint(f"{pre}{gn}_rd", _val(p) - prev, ">=", -lim)
                cost.iadd(p, dt * g.cost_marginal)
                cost.iadd(dt * g.cost_noload * n_up)
            else:
                up = model.add_variable(f"{pre}{gn}_Nup", "integer", 0, _max_online(g, node, initial))
                sg = model.add_variable(f"{pre}{gn}_Nsg", "integer", 0, g.unit_count)
                sh = model.add_variable(f"{pre}{gn}_Nsh", "integer", 0, g.unit_count)
                h.n_up[gn], h.n_sg[gn], h.n_sh[gn] = up, sg, sh
                prev_up = ph.n_up[gn] if ph is not None else float(initial.n_up[gn])
                model.add_constraint(f"{pre}{gn}_bal", _val(up) - prev_up - sg + sh, "==", 0.0)
                L = g.startup_time
                if node.stage < L:
                    model.fix(sg, float(initial.pending[gn][node.stage]))
                elif node.stage == L and L > 0:
                    first = by_stage_first.get(node.stage)
                    if first is not None and first.id != node.id:
                        model.add_constraint(f"{pre}{gn}_na", _val(sg) - handles[first.id].n_sg[gn], "==", 0.0)
                if g.min_up > 1:
                    win = _window(tree, node, g.min_up)
                    starts = lin_sum(handles[a.id].n_sg[gn] for a in win)
                    starts.iadd(_tail_sum(initial.start_history[gn], g.min_up - len(win)))
                    model.add_constraint(f"{pre}{gn}_mu", _val(up) - starts, ">=", 0.0)
                if g.min_down > 1:
                    win = _window(tree, node, g.min_down)
                    stops = lin_sum(handles[a.id].n_sh[gn] for a in win)
                    stops.iadd(_tail_sum(initial.stop_history[gn], g.min_down - len(win)))
                    model.add_constraint(f"{pre}{gn}_md", -_val(up) - stops, ">=", -g.unit_count)
                p = model.add_variable(f"{pre}{gn}_P", lb=0.0, ub=g.p_max * g.unit_count)
                h.p_g[gn] = p
                model.add_constraint(f"{pre}{gn}_pmin", _val(p) - g.p_min * up, ">=", 0.0)
                model.add_constraint(f"{pre}{gn}_pmax", _val(p) - g.p_max * up, "<=", 0.0)
                if g.ramp_rate is not None and g.deloadable:
                    prev = ph.p_g[gn] if ph is not None else initial.p_out[gn]
                    model.add_constraint(f"{pre}{gn}_ru", _val(p) - prev - g.ramp_rate * dt * up, "<=", 0.0)
                    model.add_constraint(f"{pre}{gn}_rd", _val(p) - prev + g.ramp_rate * dt * up, ">=", 0.0)
                cost.iadd(sg, g.cost_startup)
                cost.iadd(up, dt * g.cost_noload)
                cost.iadd(p, dt * g.cost_marginal)
            balance.iadd(h.p_g[gn])
            if opts.frequency_constraints_enabled and g.pfr_max_per_unit > 0:
                r = model.add_variable(f"{pre}{gn}_R", lb=0.0, ub=g.pfr_max_per_unit * g.unit_count)
                h.r_g[gn] = r
                model.add_constraint(f"{pre}{gn}_rcap", _val(r) - g.pfr_max_per_unit * _val(h.n_up[gn]), "<=", 0.0)
                model.add_constraint(f"{pre}{gn}_rhd", _val(r) + h.p_g[gn] - g.p_max * _val(h.n_up[gn]), "<=", 0.0)
                pfr.iadd(r)

        efr = LinExpr()
        for s in m.storage:
            sn = s.name
            ch = model.add_variable(f"{pre}{sn}_ch", ub=s.rating)
            dis = model.add_variable(f"{pre}{sn}_dis", ub=s.rating)
            soc = model.add_variable(f"{pre}{sn}_soc", ub=s.capacity)
            h.charge[sn], h.discharge[sn], h.soc[sn] = ch, dis, soc
            model.add_constraint(f"{pre}{sn}_mode", _val(ch) + dis, "<=", s.rating)
            prev = ph.soc[sn] if ph is not None else initial.soc[sn]
            eta = s.leg_efficiency
            model.add_constraint(f"{pre}{sn}_e", _val(soc) - prev - dt * eta * ch + (dt / eta) * dis, "==", 0.0)
            balance.iadd(dis)
            balance.iadd(ch, -1.0)
            if s.provides_efr and opts.frequency_constraints_enabled:
                offered = LinExpr()
                if opts.efr_mode != "none":
                    rs = model.add_variable(f"{pre}{sn}_Rs", ub=2 * s.rating)
                    h.r_s[sn] = rs
                    offered.iadd(rs)
                    efr.iadd(rs)
                rb = model.add_variable(f"{pre}{sn}_Rb", ub=2 * s.rating)
                h.r_bp[sn] = rb
                offered.iadd(rb)
                pfr.iadd(rb)
                model.add_constraint(f"{pre}{sn}_hd", offered - ch + dis, "<=", s.rating)
                model.add_constraint(f"{pre}{sn}_bk", offered * f.efr_backing_h - soc, "<=", 0.0)
                model.add_constraint(f"{pre}{sn}_bk0", offered * f.efr_backing_h - prev, "<=", 0.0)

        P_W = model.add_variable(f"{pre}PW", ub=node.wind_available)
        shed = model.add_variable(f"{pre}shed", ub=node.demand)
        h.P_W, h.shed = P_W, shed
        balance.iadd(P_W)
        balance.iadd(shed)
        model.add_constraint(f"{pre}bal", balance, "==", node.demand)
        cost.iadd(shed, dt * m.voll)
        if m.wind_marginal_cost:
            cost.iadd(P_W, dt * m.wind_marginal_cost)

        if opts.frequency_constraints_enabled:
            P_L = model.add_variable(f"{pre}PL", ub=f.P_L_max)
            h.P_L = P_L
            if not opts.deload_enabled:
                model.fix(P_L, f.P_L_max)
            if n_must > 0:
                model.add_constraint(f"{pre}PLm", _val(P_L) - P_M * (1.0 / n_must), ">=", 0.0)
            if opts.clustered_infeed:
                for g in m.generators:
                    if g.must_run or g.unit_count == 0:
                        continue
                    u = model.add_variable(f"{pre}{g.name}_on", "binary")
                    model.add_constraint(f"{pre}{g.name}_onl", g.unit_count * _val(u) - h.n_up[g.name], ">=", 0.0)
                    model.add_constraint(f"{pre}{g.name}_PLg", _val(P_L) - min(g.p_max, f.P_L_max) * _val(u), ">=", 0.0)
            h_lo = f.f0 * P_L.lb / (2.0 * f.rocof_max) if n_must > 0 else 0.0
            h_hi = sum(g.inertia_const * g.p_max * _max_online(g, node, initial) for g in m.generators)
            h_hi += f.H_W * node.wind_available - f.P_L_max * f.H_L
            H = model.add_variable(f"{pre}H", lb=min(h_lo, max(h_hi, 0.0)), ub=max(h_hi, 0.0))
            R_S = model.add_variable(f"{pre}RS", ub=f.R_S_max)
            R_G = model.add_variable(f"{pre}RG", ub=float(cfg.max_pfr))
            h.H, h.R_S, h.R_G = H, R_S, R_G
            inertia = LinExpr(const=-f.P_L_max * f.H_L)
            for g in m.generators:
                inertia.iadd(h.n_up[g.name], g.inertia_const * g.p_max)
            inertia.iadd(P_W, f.H_W)
            model.add_constraint(f"{pre}Hdef", _val(H) - inertia, "==", 0.0)
            model.add_constraint(f"{pre}RSdef", _val(R_S) - efr, "==", 0.0)
            model.add_constraint(f"{pre}RGdef", _val(R_G) - pfr, "==", 0.0)
            if opts.efr_mode == "fixed":
                model.fix(R_S, opts.efr_fixed)
            elif opts.efr_mode == "none":
                model.fix(R_S, 0.0)
            model.add_constraint(f"{pre}rocof", 2.0 * f.rocof_max * _val(H) - f.f0 * _val(P_L), ">=", 0.0)
            model.add_constraint(f"{pre}qss", _val(R_S) + R_G - P_L, ">=", -f.D * node.demand * f.df_ss_max)
            nh = NadirHandles(H, R_S, R_G, P_L, [model.add_variable(f"{pre}z{b}", "binary") for b in cfg.bits])
            emit_nadir_constraints(
                model, nh, node.demand, planes, cfg, f, prefix=pre, with_damping=opts.nadir_damping, cuts=opts.nadir_cuts
            )
            h.nadir = nh

        objective.iadd(cost, pi)
        by_stage_first.setdefault(node.stage, node)

    model.set_objective(objective)
    for name, value in (fixed or {}).items():
        model.fix(model.var(name), value)
    return model


# -- schedules ----------------------------------------------------------------


@dataclass
class NodeSchedule:
    node_id: int
    stage: int
    probability: float
    demand: float
    wind_available: float
    n_up: dict[str, int]
    n_sg: dict[str, int]
    n_sh: dict[str, int]
    p_g: dict[str, float]
    r_g: dict[str, float]
    charge: dict[str, float]
    discharge: dict[str, float]
    soc: dict[str, float]
    r_s: dict[str, float]
    r_bp: dict[str, float]
    P_W: float
    shed: float
    P_L: float | None = None
    H: float | None = None
    R_S: float | None = None
    R_G: float | None = None
    z: tuple[int, ...] = ()
    must_run: tuple[str, ...] = ()

    @property
    def P_M(self) -> float:
        return sum(self.p_g.get(k, 0.0) for k in self.must_run)

    def balance_residual(self) -> float:
        supply = sum(self.p_g.values()) + self.P_W + sum(self.discharge.values()) - sum(self.charge.values()) + self.shed
        return supply - self.demand

    def frequency_state(self) -> FrequencyState | None:
        if self.H is None:
            return None
        return FrequencyState(self.H, self.R_S, self.R_G, self.P_L, self.demand)


class ExtractionError(ModelError):
    pass


def extract_schedule(
    model: MilpModel, sol: Solution | np.ndarray, tree: ScenarioTree, m: SystemModel | None = None
) -> dict[int, NodeSchedule]:
    """Per-node decisions from a solution, or from a raw value vector in variable order."""
    if isinstance(sol, Solution):
        if not sol.ok:
            raise ExtractionError(f"solution status {sol.status!r} carries no values")
        x = sol.values
    else:
        x = np.asarray(sol, dtype=float)
    handles: dict[int, NodeHandles] = model.metadata["handles"]

    def num(v) -> float:
        return float(v) if not isinstance(v, Var) else float(x[v.index])

    def integral(v, what: str) -> int:
        val = num(v)
        r = round(val)
        if abs(val - r) > INT_TOL:
            raise ExtractionError(f"{what}: integrality residual {abs(val - r):.3g} exceeds {INT_TOL}")
        return int(r)

    out = {}
    must = tuple(g.name for g in m.generators if g.must_run) if m is not None else ()
    for node in tree.nodes:
        h = handles[node.id]
        sched = NodeSchedule(
            node_id=node.id,
            stage=node.stage,
            probability=node.probability,
            demand=node.demand,
            wind_available=node.wind_available,
            n_up={g: integral(v, f"n{node.id} {g} N_up") for g, v in h.n_up.items()},
            n_sg={g: integral(v, f"n{node.id} {g} N_sg") for g, v in h.n_sg.items()},
            n_sh={g: integral(v, f"n{node.id} {g} N_sh") for g, v in h.n_sh.items()},
            p_g={g: num(v) for g, v in h.p_g.items()},
            r_g={g: num(v) for g, v in h.r_g.items()},
            charge={s: num(v) for s, v in h.charge.items()},
            discharge={s: num(v) for s, v in h.discharge.items()},
            soc={s: num(v) for s, v in h.soc.items()},
            r_s={s: num(v) for s, v in h.r_s.items()},
            r_bp={s: num(v) for s, v in h.r_bp.items()},
            P_W=num(h.P_W),
            shed=num(h.shed),
            P_L=num(h.P_L) if h.P_L is not None else None,
            H=num(h.H) if h.H is not None else None,
            R_S=num(h.R_S) if h.R_S is not None else None,
            R_G=num(h.R_G) if h.R_G is not None else None,
            z=tuple(integral(v, f"n{node.id} bit") for v in h.nadir.z) if h.nadir is not None else (),
            must_run=must,
        )
        if m is not None:
            for g in m.generators:
                if not 0 <= sched.n_up[g.name] <= g.unit_count:
                    raise ExtractionError(f"node {node.id}: {g.name} online count {sched.n_up[g.name]} outside [0, {g.unit_count}]")
        out[node.id] = sched
    return out


def schedule_fixings(model: MilpModel, sched: NodeSchedule, node_id: int = 0) -> dict[str, float]:
    """Integer decisions and storage flows of one node, keyed by variable name for re-dispatch."""
    handles = model.metadata["handles"][node_id]
    fix: dict[str, float] = {}
    for d_vals, d_handles in ((sched.n_up, handles.n_up), (sched.n_sg, handles.n_sg), (sched.n_sh, handles.n_sh)):
        for k, v in d_handles.items():
            if isinstance(v, Var):
                fix[v.name] = float(d_vals[k])
    for k, v in handles.charge.items():
        fix[v.name] = sched.charge[k]
    for k, v in handles.discharge.items():
        fix[v.name] = sched.discharge[k]
    if handles.nadir is not None:
        for v, b in zip(handles.nadir.z, sched.z):
            fix[v.name] = float(b)
    return fix


# -- rolling horizon --------------------------------------------------------


@dataclass(frozen=True)
class SolverSettings:
    """How each SUC model is solved.

    ``time_limit`` caps one solve. With ``accept_incumbent`` a solve stopped by
    the limit above ``gap`` still yields its best schedule (the step records
    the achieved gap); otherwise it aborts the run. ``warm_start`` first solves
    a copy that keeps only the two highest expansion bits and passes the mapped
    result to the full model as a starting point (``highs`` backend only);
    ``coarse_share`` is the fraction of the time limit given to that copy.
    """

    backend: str = "scipy"
    path: str | None = None
    gap: float = 1e-3
    time_limit: float | None = None
    seed: int = 0
    accept_incumbent: bool = False
    warm_start: bool = False
    coarse_share: float = 0.5
    options: tuple[tuple[str, object], ...] = ()

    def run(self, model: MilpModel, time_limit: float | None = None, start=None) -> Solution:
        tl = self.time_limit if time_limit is None else time_limit
        return solve(
            model, gap=self.gap, time_limit=tl, backend=self.backend, path=self.path, seed=self.seed,
            start=start, options=dict(self.options),
        )


def map_start(coarse: MilpModel, values: np.ndarray, fine: MilpModel) -> np.ndarray:
    """Carry a solution of a coarser-expansion copy over to ``fine``.

    Variables are matched by name; expansion binaries and their products are
    recomputed from the scheduled R_G, which stays representable because the
    coarse bit set is a subset of the fine one.
    """
    by_name = {v.name: values[v.index] for v in coarse.variables}
    start = np.array([by_name.get(v.name, 0.0) for v in fine.variables])
    cfg: ExpansionConfig = fine.metadata["expansion"]
    for h in fine.metadata["handles"].values():
        nv = h.nadir
        if nv is None:
            continue
        H, R_S = start[nv.H.index], start[nv.R_S.index]
        z = cfg.represent(float(start[nv.R_G.index]))
        for zi, zv, mv in zip(z, nv.z, nv.m):
            start[zv.index] = zi
            start[mv.index] = H * zi
        for zi, kv in zip(z, nv.k):
            start[kv.index] = R_S * zi
    return start


def solve_suc(
    m: SystemModel,
    tree: ScenarioTree,
    opts: StrategyOptions,
    state: FleetState,
    solver: SolverSettings,
    seed_from: tuple[MilpModel, np.ndarray] | None = None,
) -> tuple[MilpModel, Solution, np.ndarray | None]:
    """Build and solve one SUC; returns the model, the solution and the values to use.

    The values are the optimal or gap-feasible point, or the limit-stopped
    incumbent when ``solver.accept_incumbent`` is set; None otherwise.
    ``seed_from`` is a solved model with a bit subset whose point becomes the
    starting solution (it replaces the internal warm start).
    """
    model = build_suc_model(m, tree, opts, state)
    bits = tuple(sorted(opts.bits))
    start = None
    tl = solver.time_limit
    t0 = time.perf_counter()
    if seed_from is not None:
        start = map_start(seed_from[0], seed_from[1], model)
    elif solver.warm_start and solver.backend == "highs" and opts.frequency_constraints_enabled and len(bits) > 2:
        coarse = build_suc_model(m, tree, replace(opts, bits=bits[-2:]), state)
        csol = solver.run(coarse, None if tl is None else tl * solver.coarse_share)
        cvals = csol.values if csol.ok else csol.incumbent
        if cvals is not None:
            start = map_start(coarse, cvals, model)
        if tl is not None:
            tl = max(tl - (time.perf_counter() - t0), 1.0)
    sol = solver.run(model, tl, start)
    sol.solve_time = time.perf_counter() - t0
    if sol.ok:
        return model, sol, sol.values
    if solver.accept_incumbent and sol.incumbent is not None:
        x = sol.incumbent
        sol.objective = model.objective.const + sum(c * x[v.index] for v, c in model.objective.terms.items())
        return model, sol, x
    return model, sol, None


@dataclass
class StepRecord:
    hour: int
    demand: float
    wind_available: float
    wind_used: float
    curtailment: float
    shed: float
    cost_startup: float
    cost_noload: float
    cost_energy: float
    cost_shed: float
    emissions: float
    H: float
    R_S: float
    R_G: float
    P_L: float
    balance_residual: float
    n_up: dict
    p_g: dict
    soc: dict
    charge: dict
    discharge: dict
    r_s: dict
    solve_time: float
    mip_gap: float
    mip_objective: float
    rocof_ok: bool = True
    qss_ok: bool = True
    nadir_ok: bool = True

    @property
    def cost(self) -> float:
        return self.cost_startup + self.cost_noload + self.cost_energy + self.cost_shed

    @property
    def net_demand(self) -> float:
        return self.demand - self.wind_available

    def frequency_state(self) -> FrequencyState:
        return FrequencyState(self.H, self.R_S, self.R_G, self.P_L, self.demand)


@dataclass
class OperationLog:
    strategy: str
    steps: list[StepRecord] = field(default_factory=list)
    storage_names: tuple[str, ...] = ()
    generator_names: tuple[str, ...] = ()

    @property
    def total_cost(self) -> float:
        return sum(s.cost for s in self.steps)

    def summary(self) -> dict:
        st = self.steps
        mean = lambda k: float(np.mean([getattr(s, k) for s in st])) if st else 0.0  # noqa: E731
        return {
            "strategy": self.strategy,
            "steps": len(st),
            "total_cost": self.total_cost,
            "emissions_tco2": sum(s.emissions for s in st),
            "curtailment_mwh": sum(s.curtailment for s in st),
            "shed_mwh": sum(s.shed for s in st),
            "mean_H": mean("H"),
            "mean_R_S": mean("R_S"),
            "mean_R_G": mean("R_G"),
            "mean_P_L": mean("P_L"),
            "solve_time_s": sum(s.solve_time for s in st),
        }

    def rows(self) -> list[dict]:
        out = []
        for s in self.steps:
            row = {
                "hour": s.hour,
                "demand_mw": s.demand,
                "wind_available_mw": s.wind_available,
                "net_demand_mw": s.net_demand,
                "wind_used_mw": s.wind_used,
                "curtailment_mw": s.curtailment,
                "shed_mw": s.shed,
                "cost": s.cost,
                "cost_startup": s.cost_startup,
                "cost_noload": s.cost_noload,
                "cost_energy": s.cost_energy,
                "cost_shed": s.cost_shed,
                "emissions_tco2": s.emissions,
                "H_mws": s.H,
                "R_S_mw": s.R_S,
                "R_G_mw": s.R_G,
                "P_L_mw": s.P_L,
            }
            for g in self.generator_names:
                row[f"{g}_online"] = s.n_up[g]
                row[f"{g}_mw"] = s.p_g[g]
            for n in self.storage_names:
                row[f"{n}_soc_mwh"] = s.soc[n]
                row[f"{n}_charge_mw"] = s.charge[n]
                row[f"{n}_discharge_mw"] = s.discharge[n]
                row[f"{n}_efr_mw"] = s.r_s.get(n, 0.0)
            row.update(mip_gap=s.mip_gap, rocof_ok=int(s.rocof_ok), qss_ok=int(s.qss_ok), nadir_ok=int(s.nadir_ok))
            out.append(row)
        return out

    def write_csv(self, path: str | Path) -> None:
        rows = self.rows()
        with open(path, "w", newline="") as fh:
            if not rows:
                return
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in r.items()})

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2) + "\n")


def _root_tree(tree: ScenarioTree) -> ScenarioTree:
    return ScenarioTree((tree.root,), tree.quantiles, 0)


def advance_state(m: SystemModel, state: FleetState, root: NodeSchedule, schedule: Mapping[int, NodeSchedule], tree: ScenarioTree) -> FleetState:
    new = state.copy()
    for g in m.generators:
        gn = g.name
        new.n_up[gn] = root.n_up[gn]
        new.p_out[gn] = root.p_g[gn]
        new.start_history[gn] = (state.start_history[gn] + (root.n_sg[gn],))[-len(state.start_history[gn]) :]
        new.stop_history[gn] = (state.stop_history[gn] + (root.n_sh[gn],))[-len(state.stop_history[gn]) :]
        L = g.startup_time
        if L > 0:
            nodes_L = tree.stage(L)
            decided = schedule[nodes_L[0].id].n_sg[gn] if nodes_L else 0
            new.pending[gn] = state.pending[gn][1:] + (decided,)
    for s in m.storage:
        new.soc[s.name] = min(max(root.soc[s.name], 0.0), s.capacity)
    return new


def realize_step(
    m: SystemModel,
    opts: StrategyOptions,
    state: FleetState,
    tree: ScenarioTree,
    model: MilpModel,
    schedule: Mapping[int, NodeSchedule],
    solver: SolverSettings,
) -> NodeSchedule:
    """Re-dispatch the root against its realization with integers and storage flows held."""
    root_tree = _root_tree(tree)
    fixings = schedule_fixings(model, schedule[0])
    lp = build_suc_model(m, root_tree, opts, state, fixed=fixings)
    sol = solve(lp, gap=solver.gap, time_limit=solver.time_limit, backend="scipy")
    if not sol.ok:
        # Fall back to the committed root values when the LP is numerically fussy.
        return schedule[0]
    return extract_schedule(lp, sol, root_tree, m)[0]


def rolling_horizon_run(
    m: SystemModel,
    realized: tuple[Sequence[float], Sequence[float]],
    forecast: ForecastModel,
    opts: StrategyOptions,
    horizon: int = 24,
    *,
    steps: int | None = None,
    initial: FleetState | None = None,
    solver: SolverSettings | None = None,
    quantiles: Sequence[float] = GB_QUANTILES,
    start_hour: int = 0,
    on_step: Callable[[int, StepRecord], None] | None = None,
) -> OperationLog:
    demand, wind = (np.asarray(v, dtype=float) for v in realized)
    if len(demand) < 1 or len(demand) != len(wind):
        raise ValidationError("realized", "need equally long, non-empty demand and wind series")
    steps = len(demand) if steps is None else min(steps, len(demand))
    solver = solver or SolverSettings()
    state = (initial or FleetState.initial(m)).copy()
    qs = (opts.deterministic_quantile,) if opts.deterministic_quantile is not None else tuple(quantiles)
    log = OperationLog(opts.name, storage_names=tuple(s.name for s in m.storage), generator_names=tuple(g.name for g in m.generators))
    for k in range(steps):
        hour = start_hour + k
        tree = build_tree(forecast, qs, horizon, float(wind[k]), float(demand[k]), wind_capacity=m.wind_capacity, start_hour=hour)
        model, sol, values = solve_suc(m, tree, opts, state, solver)
        elapsed = sol.solve_time
        if values is None:
            raise SolverError(f"step {k} (hour {hour}): solver returned {sol.status}: {sol.message}", step=k, partial=log)
        schedule = extract_schedule(model, values, tree, m)
        root = realize_step(m, opts, state, tree, model, schedule, solver)
        rec = _record(m, opts, hour, root, elapsed, sol)
        log.steps.append(rec)
        if on_step is not None:
            on_step(k, rec)
        state = advance_state(m, state, root, schedule, tree)
    return log


def _record(m: SystemModel, opts: StrategyOptions, hour: int, root: NodeSchedule, elapsed: float, sol: Solution) -> StepRecord:
    dt = 1.0
    c_st = c_nl = c_e = em = 0.0
    for g in m.generators:
        c_st += g.cost_startup * root.n_sg[g.name]
        c_nl += dt * g.cost_noload * root.n_up[g.name]
        c_e += dt * g.cost_marginal * root.p_g[g.name]
        em += dt * g.emissions * root.p_g[g.name]
    c_e += dt * m.wind_marginal_cost * root.P_W
    rec = StepRecord(
        hour=hour,
        demand=root.demand,
        wind_available=root.wind_available,
        wind_used=root.P_W,
        curtailment=max(root.wind_available - root.P_W, 0.0) * dt,
        shed=root.shed * dt,
        cost_startup=c_st,
        cost_noload=c_nl,
        cost_energy=c_e,
        cost_shed=dt * m.voll * root.shed,
        emissions=em,
        H=root.H or 0.0,
        R_S=root.R_S or 0.0,
        R_G=root.R_G or 0.0,
        P_L=root.P_L or 0.0,
        balance_residual=root.balance_residual(),
        n_up=dict(root.n_up),
        p_g=dict(root.p_g),
        soc=dict(root.soc),
        charge=dict(root.charge),
        discharge=dict(root.discharge),
        r_s={s.name: root.r_s.get(s.name, 0.0) for s in m.storage},
        solve_time=elapsed,
        mip_gap=sol.gap if sol.gap is not None else 0.0,
        mip_objective=sol.objective if sol.objective is not None else float("nan"),
    )
    if opts.frequency_constraints_enabled:
        screen = security_screen(rec.frequency_state(), m.freq)
        rec.rocof_ok, rec.qss_ok, rec.nadir_ok = screen["rocof_ok"], screen["qss_ok"], screen["nadir_ok"]
    return rec
