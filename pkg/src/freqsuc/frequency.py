"""Analytic frequency-security metrics and their MILP encoding.

A post-fault state is summarised by post-loss inertia ``H`` (MW s), fast
response ``R_S`` delivered as a ramp over ``T_s``, slow response ``R_G``
delivered as a ramp over ``T_g``, the lost infeed ``P_L`` and demand ``P_D``.

The nadir requirement is bilinear in ``H`` and ``R_G`` and quadratic in
``P_L - R_S``. It is made linear for the scheduler by chord planes on the
quadratic, a truncated binary expansion of ``R_G`` and big-M products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import AssumptionError, ModelError, NumericError
from .milp import Constraint, LinExpr, MilpModel, Var, lin_sum, linearize_product_bin_cont
from .system import FrequencyParams, SystemModel


@dataclass(frozen=True)
class FrequencyState:
    H: float  # MW s, after the loss
    R_S: float  # MW
    R_G: float  # MW
    P_L: float  # MW
    P_D: float = 0.0  # MW

    def validate(self, f: FrequencyParams | None = None, tol: float = 1e-6) -> "FrequencyState":
        for name in ("H", "R_S", "R_G", "P_L", "P_D"):
            if getattr(self, name) < -tol:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if f is not None:
            if self.R_S > f.R_S_max + tol:
                raise ValueError(f"R_S={self.R_S} exceeds R_S_max={f.R_S_max}")
            if self.P_L > f.P_L_max + tol:
                raise ValueError(f"P_L={self.P_L} exceeds P_L_max={f.P_L_max}")
        return self


def rocof_of(state: FrequencyState, f: FrequencyParams) -> float:
    if state.H <= 0:
        raise NumericError("RoCoF undefined for H <= 0")
    return state.P_L * f.f0 / (2.0 * state.H)


def system_inertia(commitments: Mapping[str, float], P_W: float, m: SystemModel) -> float:
    """Post-loss inertia from online unit counts per class name and wind output."""
    h = 0.0
    for g in m.generators:
        n = commitments.get(g.name, 0.0)
        if not 0 <= n <= g.unit_count:
            raise ValueError(f"{g.name}: online count {n} outside [0, {g.unit_count}]")
        h += g.inertia_const * g.p_max * n
    return h + m.freq.H_W * P_W - m.freq.P_L_max * m.freq.H_L


def qss_deviation(state: FrequencyState, f: FrequencyParams) -> float:
    shortfall = state.P_L - state.R_S - state.R_G
    if shortfall <= 0:
        return 0.0
    dp = f.D * state.P_D
    if dp <= 0:
        raise AssumptionError("no load damping: a response shortfall never settles")
    return shortfall / dp


def nadir_time_no_damping(state: FrequencyState, f: FrequencyParams, check: bool = True) -> float:
    if state.R_G <= 0:
        raise AssumptionError("R_G = 0: frequency declines without bound")
    t = (state.P_L - state.R_S) * f.T_g / state.R_G
    if check and not f.T_s <= t < f.T_g:
        raise AssumptionError(f"nadir time {t:.6g} s outside [T_s, T_g) = [{f.T_s}, {f.T_g})")
    return t


def nadir_no_damping(state: FrequencyState, f: FrequencyParams) -> float:
    if state.R_S >= state.P_L:
        return 0.0
    t = nadir_time_no_damping(state, f)
    df = (
        f.f0
        / (2.0 * state.H)
        * (state.R_G / (2.0 * f.T_g) * t * t + state.R_S * (t - f.T_s / 2.0) - state.P_L * t)
    )
    return abs(df)


@dataclass(frozen=True)
class NadirCheck:
    satisfied: bool
    margin: float  # lhs - rhs, MW^2 s
    lhs: float
    rhs: float


def nadir_gain(H: float, R_S: float, f: FrequencyParams) -> float:
    """Coefficient multiplying R_G on the left of the nadir inequality."""
    return H / f.f0 - R_S * f.T_s / (4.0 * f.df_max)


def nadir_rhs(P_L: float, R_S: float, P_D: float, f: FrequencyParams, with_damping: bool = True) -> float:
    x = max(P_L - R_S, 0.0)
    rhs = x * x * f.T_g / (4.0 * f.df_max)
    if with_damping:
        rhs -= x * f.T_g * f.D / 4.0 * P_D
    return rhs


def nadir_constraint_satisfied(
    state: FrequencyState, f: FrequencyParams, with_damping: bool = True, tol: float = 0.0
) -> NadirCheck:
    lhs = nadir_gain(state.H, state.R_S, f) * state.R_G
    rhs = nadir_rhs(state.P_L, state.R_S, state.P_D, f, with_damping)
    margin = lhs - rhs
    return NadirCheck(margin >= -tol, margin, lhs, rhs)


def required_pfr(H: float, R_S: float, P_L: float, P_D: float, f: FrequencyParams, with_damping: bool = True) -> float:
    """R_G at which the analytic nadir inequality binds."""
    g = nadir_gain(H, R_S, f)
    if g <= 0:
        raise AssumptionError("inertia too small for the nadir inequality to be satisfiable")
    return max(nadir_rhs(P_L, R_S, P_D, f, with_damping), 0.0) / g


# -- planes -----------------------------------------------------------------


@dataclass(frozen=True)
class PlaneSet:
    """Chords of ``alpha(x) = k x^2`` with ``x = P_L - R_S`` and ``k = T_g / (4 df_max)``.

    Each plane is ``(a, b, c)`` so that its value is ``a P_L + b R_S + c``.
    """

    breakpoints: tuple[float, ...]
    planes: tuple[tuple[float, float, float], ...]
    k: float

    def __len__(self):
        return len(self.planes)

    def alpha(self, x):
        return self.k * np.asarray(x, dtype=float) ** 2

    def envelope(self, P_L, R_S):
        P_L = np.asarray(P_L, dtype=float)
        R_S = np.asarray(R_S, dtype=float)
        vals = [a * P_L + b * R_S + c for a, b, c in self.planes]
        return np.max(vals, axis=0)

    @property
    def domain(self) -> tuple[float, float]:
        return self.breakpoints[0], self.breakpoints[-1]


def build_planes(x_min: float, x_max: float, n_planes: int, f: FrequencyParams) -> PlaneSet:
    if n_planes < 1:
        raise ValueError("n_planes must be >= 1")
    if not 0 <= x_min <= x_max:
        raise ValueError(f"invalid range [{x_min}, {x_max}]")
    k = f.T_g / (4.0 * f.df_max)
    bps = np.linspace(x_min, x_max, n_planes + 1)
    planes = []
    for x1, x2 in zip(bps[:-1], bps[1:]):
        s = (x1 + x2) * k
        planes.append((float(s), float(-s), float(-x1 * x2 * k)))
    return PlaneSet(tuple(float(b) for b in bps), tuple(planes), k)


def plane_domain(m: SystemModel, p_l_min: float | None = None) -> tuple[float, float]:
    """Range of ``P_L - R_S`` the planes must cover for a given system."""
    f = m.freq
    if p_l_min is None:
        must = [g for g in m.generators if g.must_run and g.unit_count > 0]
        if must:
            p_l_min = min(g.min_output if g.deloadable else g.p_max for g in must)
        else:
            p_l_min = 0.0
    return max(0.0, p_l_min - f.R_S_max), f.P_L_max


def plane_overestimation_stats(
    planes: PlaneSet,
    grid_step: float,
    pl_range: tuple[float, float] = (1400.0, 1800.0),
    rs_range: tuple[float, float] = (0.0, 400.0),
) -> tuple[float, float]:
    """Mean and max of ``(envelope - alpha) / alpha`` over a (P_L, R_S) grid, in percent."""
    if grid_step <= 0:
        raise ValueError("grid_step must be > 0")
    pl = np.arange(pl_range[0], pl_range[1] + grid_step / 2, grid_step)
    rs = np.arange(rs_range[0], rs_range[1] + grid_step / 2, grid_step)
    PL, RS = np.meshgrid(pl, rs, indexing="ij")
    x = PL - RS
    lo, hi = planes.domain
    keep = (x > 0) & (x >= lo - 1e-9) & (x <= hi + 1e-9)
    if not keep.any():
        raise ValueError("no grid points inside the plane domain")
    alpha = planes.alpha(x[keep])
    over = (planes.envelope(PL[keep], RS[keep]) - alpha) / alpha * 100.0
    return float(over.mean()), float(over.max())


# -- binary expansion -------------------------------------------------------


@dataclass(frozen=True)
class ExpansionConfig:
    bits: tuple[int, ...]
    bigM_H: float
    bigM_RS: float

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(sorted(set(int(b) for b in self.bits))))
        if not self.bits:
            raise ValueError("bits must be non-empty")
        if min(self.bits) < 0:
            raise ValueError("bits must be >= 0")
        if self.bigM_H <= 0 or self.bigM_RS < 0:
            raise ValueError("big-M bounds must be positive")

    @classmethod
    def for_system(cls, m: SystemModel, bits: Sequence[int]) -> "ExpansionConfig":
        return cls(tuple(bits), m.max_inertia(), m.freq.R_S_max)

    @property
    def granularity(self) -> int:
        return 2 ** min(self.bits)

    @property
    def max_represented(self) -> int:
        return sum(2**b for b in self.bits)

    @property
    def max_pfr(self) -> int:
        """Largest R_G the sandwich coupling admits."""
        return self.max_represented + self.granularity

    def represent(self, R_G: float) -> tuple[int, ...]:
        """Bit values of the largest representable value not above ``R_G``."""
        rem = min(R_G, self.max_represented)
        z = []
        for b in sorted(self.bits, reverse=True):
            on = rem >= 2**b
            z.append(int(on))
            rem -= on * 2**b
        return tuple(reversed(z))


@dataclass
class NadirHandles:
    H: Var
    R_S: Var
    R_G: Var
    P_L: Var
    z: list[Var] = field(default_factory=list)
    m: list[Var] = field(default_factory=list)
    k: list[Var] = field(default_factory=list)


def new_nadir_handles(model: MilpModel, prefix: str, H: Var, R_S: Var, R_G: Var, P_L: Var, cfg: ExpansionConfig):
    h = NadirHandles(H, R_S, R_G, P_L)
    for b in cfg.bits:
        h.z.append(model.add_variable(f"{prefix}z{b}", "binary"))
    return h


def emit_nadir_constraints(
    model: MilpModel,
    nv: NadirHandles,
    P_D: float,
    planes: PlaneSet,
    cfg: ExpansionConfig,
    f: FrequencyParams,
    prefix: str = "",
    with_damping: bool = True,
    cuts: int = 0,
) -> list[Constraint]:
    """Add the linearized nadir rows for one node and return them.

    Rows added: the expansion sandwich (2), three or four big-M rows per
    product, one non-negativity row on the R_G gain and one row per plane.
    Product bounds come from the handles' variable bounds capped by the
    big-M values; a fixed ``R_S`` needs no product variables at all.

    ``cuts > 0`` adds that many valid inequalities per plane which tighten the
    LP relaxation without removing any integer-feasible point (see
    :func:`_outer_cuts`).
    """
    for v in (nv.H, nv.R_S, nv.R_G, nv.P_L, *nv.z):
        if v.model is not model:
            raise ModelError(f"handle {v.name!r} belongs to another model")
    if len(nv.z) != len(cfg.bits):
        raise ModelError("one binary per expansion bit is required")
    rows: list[Constraint] = []
    weights = [float(2**b) for b in cfg.bits]
    rep = lin_sum(nv.z, weights)
    rows.append(model.add_constraint(f"{prefix}rgl", nv.R_G - rep, ">=", 0.0))
    rows.append(model.add_constraint(f"{prefix}rgu", nv.R_G - rep, "<=", float(cfg.granularity)))
    nv.m, nv.k = [], []
    H_hi = min(cfg.bigM_H, nv.H.ub)
    H_lo = min(max(nv.H.lb, 0.0), H_hi)
    RS_hi = min(cfg.bigM_RS, nv.R_S.ub)
    RS_lo = min(max(nv.R_S.lb, 0.0), RS_hi)
    rs_fixed = RS_lo == RS_hi
    for b, z in zip(cfg.bits, nv.z):
        n_before = len(model.constraints)
        nv.m.append(linearize_product_bin_cont(model, f"{prefix}m{b}", nv.H, z, H_hi, H_lo))
        if not rs_fixed:
            nv.k.append(linearize_product_bin_cont(model, f"{prefix}k{b}", nv.R_S, z, RS_hi, RS_lo))
        rows.extend(model.constraints[n_before:])
    gain = LinExpr.of(nv.H) * (1.0 / f.f0) - LinExpr.of(nv.R_S) * (f.T_s / (4.0 * f.df_max))
    rows.append(model.add_constraint(f"{prefix}ngain", gain, ">=", 0.0))
    lhs = lin_sum(nv.m, [w / f.f0 for w in weights])
    if rs_fixed:
        # k_l = R_S z_l collapses to a constant multiple of z_l
        lhs.iadd(lin_sum(nv.z, weights), -RS_lo * f.T_s / (4.0 * f.df_max))
    else:
        lhs.iadd(lin_sum(nv.k, weights), -f.T_s / (4.0 * f.df_max))
    beta = f.T_g * f.D * P_D / 4.0 if with_damping else 0.0
    for p, (a, bcoef, c) in enumerate(planes.planes):
        rhs = LinExpr.of(nv.P_L) * (a - beta) + LinExpr.of(nv.R_S) * (bcoef + beta) + c
        rows.append(model.add_constraint(f"{prefix}nad{p}", lhs - rhs, ">=", 0.0))
        if cuts > 0:
            rows.extend(_outer_cuts(model, nv, rep, gain, rhs, cuts, f, f"{prefix}oc{p}_"))
    return rows


def _expr_range(e: LinExpr) -> tuple[float, float]:
    lo = hi = e.const
    for v, k in e.terms.items():
        lo += k * (v.lb if k > 0 else v.ub)
        hi += k * (v.ub if k > 0 else v.lb)
    return lo, hi


def _outer_cuts(model, nv, rep, gain, K, n, f, prefix) -> list[Constraint]:
    """Cuts implied by ``rep * gain >= K`` at integral ``z``.

    From ``4 r g <= (r/t + t g)^2`` the product row gives
    ``r/t + t g >= 2 sqrt(K)``, and ``sqrt`` is bounded below by its chord
    over the range of ``K``. Each ``t`` is a tangent of ``r >= K/g`` at one
    gain on a geometric grid.
    """
    K_lo, K_hi = _expr_range(K)
    g_lo, g_hi = _expr_range(gain)
    if K_hi <= 0.0 or g_hi <= 0.0:
        return []
    g_lo = max(g_lo, 1e-3 * g_hi)
    K_lo = max(K_lo, 0.0)
    s_lo, s_hi = math.sqrt(K_lo), math.sqrt(K_hi)
    if K_hi - K_lo > 1e-9 * K_hi:
        slope = (s_hi - s_lo) / (K_hi - K_lo)
        chord = LinExpr.of(K) * slope + (s_lo - slope * K_lo)
    else:
        chord = LinExpr(const=s_hi)
    s_ref = math.sqrt(0.5 * (K_lo + K_hi))
    rows = []
    for j, g0 in enumerate(np.geomspace(g_lo, g_hi, n) if n > 1 else [math.sqrt(g_lo * g_hi)]):
        t = s_ref / g0
        rows.append(model.add_constraint(f"{prefix}{j}", rep + gain * (t * t) - chord * (2.0 * t), ">=", 0.0))
    return rows


def security_screen(state: FrequencyState, f: FrequencyParams, tol: float = 1e-6) -> dict[str, bool]:
    """Analytic RoCoF, q-s-s and damped nadir checks with a small absolute slack."""
    rocof = rocof_of(state, f) if state.H > 0 else math.inf
    try:
        qss = qss_deviation(state, f)
    except AssumptionError:
        qss = math.inf
    nad = nadir_constraint_satisfied(state, f, with_damping=True)
    scale = max(abs(nad.rhs), 1.0)
    return {
        "rocof_ok": rocof <= f.rocof_max * (1 + tol),
        "qss_ok": qss <= f.df_ss_max * (1 + tol),
        "nadir_ok": nad.margin >= -tol * scale,
    }
