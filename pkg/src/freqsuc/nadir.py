"""Reference nadir computations with load damping.

With damping ``D' = D P_D f0`` the swing equation is linear with piecewise
linear forcing, so the frequency drop has a closed form on ``[T_s, T_g]``.
Writing ``a = D' / (2H)``, ``c = f0 / (2H)`` and ``u = a t``::

    y(t) = c [ P_L t g1(u) - R_G t^2 g2(u) / T_g - R_S (t g1(u) - e^-u T_s g3(a T_s)) ]

with ``g1(u) = (1 - e^-u)/u``, ``g2(u) = (u - 1 + e^-u)/u^2`` and
``g3(v) = (e^v - 1 - v)/v^2``. At the nadir ``y' = 0``, which fixes
``y(t*) = (P_L - R_S - R_G t*/T_g) / (D P_D)``. Requiring ``y(t*) = df_max``
gives ``t* = (P_L - R_S - D P_D df_max) T_g / R_G`` and leaves a scalar
equation in ``R_G`` that is solved by bisection.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import AssumptionError, NumericError
from .frequency import FrequencyState
from .system import FrequencyParams

GB_RANGES = {
    "H": (50e3, 400e3),
    "R_S": (0.0, 400.0),
    "R_G": (500.0, 2500.0),
    "P_L": (1400.0, 1800.0),
    "P_D": (20e3, 60e3),
}
MODES = ("linear-damping", "no-damping")


def _g1(u: float) -> float:
    if abs(u) < 1e-4:
        return 1.0 - u / 2.0 + u * u / 6.0
    return -math.expm1(-u) / u


def _g2(u: float) -> float:
    if abs(u) < 1e-3:
        return 0.5 - u / 6.0 + u * u / 24.0
    return (u + math.expm1(-u)) / (u * u)


def _g3(v: float) -> float:
    if abs(v) < 1e-3:
        return 0.5 + v / 6.0 + v * v / 24.0
    return (math.expm1(v) - v) / (v * v)


@dataclass(frozen=True)
class DampingNadirProblem:
    H: float
    R_S: float
    P_L: float
    P_D: float
    f: FrequencyParams = field(default_factory=FrequencyParams)

    def __post_init__(self):
        if self.H <= 0:
            raise ValueError("H must be > 0")
        if self.P_L <= self.R_S:
            raise ValueError("P_L must exceed R_S")
        if self.f.D * self.P_D <= 0:
            raise ValueError("D * P_D must be > 0")

    @property
    def d_prime(self) -> float:
        """Damping in MW per unit of df/f0."""
        return self.f.D * self.P_D * self.f.f0

    def drop(self, t: float, R_G: float) -> float:
        """Frequency drop ``-df(t)`` in Hz for ``T_s <= t <= T_g`` (ideal ramps)."""
        f = self.f
        a = self.d_prime / (2.0 * self.H)
        c = f.f0 / (2.0 * self.H)
        u = a * t
        g1 = _g1(u)
        efr = t * g1 - math.exp(-u) * f.T_s * _g3(a * f.T_s)
        return c * (self.P_L * t * g1 - R_G * t * t * _g2(u) / f.T_g - self.R_S * efr)

    def nadir_time(self, R_G: float) -> float:
        f = self.f
        return (self.P_L - self.R_S - f.D * self.P_D * f.df_max) * f.T_g / R_G

    def residual(self, R_G: float) -> float:
        """Drop at the stationary time implied by ``df_max``, minus ``df_max`` (Hz)."""
        return self.drop(self.nadir_time(R_G), R_G) - self.f.df_max

    def gamma(self, R_G: float) -> float:
        f = self.f
        return self.d_prime * f.T_g * (self.P_L - self.R_S - f.D * self.P_D * f.df_max) / (2.0 * self.H * R_G)


def pd_feasible_range(P_L: float, R_S: float, f: FrequencyParams) -> tuple[float, float] | None:
    """Open interval of demand for which PFR is still needed; None when empty."""
    if P_L <= R_S:
        return None
    if f.D <= 0:
        return (0.0, math.inf)
    return (0.0, (P_L - R_S) / (f.D * f.df_max))


def required_pfr_with_damping(p: DampingNadirProblem, rtol: float = 1e-8, max_iter: int = 200) -> float:
    """R_G at which the damped ideal-ramp nadir equals ``df_max``."""
    rng = pd_feasible_range(p.P_L, p.R_S, p.f)
    if rng is None or not rng[0] < p.P_D < rng[1]:
        raise AssumptionError(f"P_D={p.P_D} outside the demand range {rng} where a nadir requirement exists")
    lo = 0.0
    hi = 10.0 * p.P_L
    for _ in range(60):
        if p.residual(hi) <= 0:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise NumericError(f"no bracket for R_G: residual({hi:.6g}) = {p.residual(hi):.6g}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= 0:
            break
        if p.residual(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return hi


# -- ODE ---------------------------------------------------------------------


def nadir_by_ode(
    H,
    R_S,
    R_G,
    P_L,
    P_D,
    f: FrequencyParams,
    include_damping: bool = True,
    dt: float = 1e-3,
    horizon: float = 60.0,
):
    """Nadir and its time from RK4 on the swing equation with ideal ramp providers.

    Accepts scalars or equal-length arrays; returns ``(nadir, t_nadir)`` of the
    same shape. Integration stops early once every trajectory is recovering
    after ``T_g``, since the dynamics are then autonomous and monotone.
    """
    scalar = np.ndim(H) == 0
    H, R_S, R_G, P_L, P_D = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (H, R_S, R_G, P_L, P_D))
    damp = (f.D * P_D) if include_damping else np.zeros_like(P_D)
    c = f.f0 / (2.0 * H)

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        inj = R_S * min(t / f.T_s, 1.0) + R_G * min(t / f.T_g, 1.0)
        return c * (inj - P_L - damp * x)

    x = np.zeros_like(H)
    best = np.zeros_like(H)
    t_best = np.zeros_like(H)
    n_steps = int(round(horizon / dt))
    for i in range(n_steps):
        t = i * dt
        k1 = rhs(t, x)
        k2 = rhs(t + dt / 2, x + dt / 2 * k1)
        k3 = rhs(t + dt / 2, x + dt / 2 * k2)
        k4 = rhs(t + dt, x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        lower = x < best
        best = np.where(lower, x, best)
        t_best = np.where(lower, t + dt, t_best)
        if t + dt >= f.T_g and np.all(rhs(t + dt, x) >= 0):
            break
    else:
        if np.any(rhs(horizon, x) < 0):
            raise NumericError(f"nadir not reached within {horizon} s")
    nadir, t_nadir = -best, t_best
    if scalar:
        return float(nadir[0]), float(t_nadir[0])
    return nadir, t_nadir


def nadir_by_ode_state(state: FrequencyState, f: FrequencyParams, include_damping: bool = True, **kw):
    return nadir_by_ode(state.H, state.R_S, state.R_G, state.P_L, state.P_D, f, include_damping, **kw)


# -- assessment ----------------------------------------------------------------


@dataclass
class AssessmentReport:
    mode: str
    sample_count: int
    mean_nadir: float
    max_nadir: float
    min_nadir: float
    draws: int
    records: list[dict] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("records")
        return d

    def write_csv(self, path: str | Path) -> None:
        cols = ["index", "H", "R_S", "P_L", "P_D", "R_G", "t_star", "nadir"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.records:
                w.writerow([r["index"]] + [f"{r[c]:.10g}" for c in cols[1:]])

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2) + "\n")


def solve_binding_pfr(H, R_S, P_L, P_D, f: FrequencyParams, mode: str):
    """R_G making the analytic nadir inequality bind, vectorized over samples."""
    with_damping = mode == "linear-damping"
    gain = H / f.f0 - R_S * f.T_s / (4.0 * f.df_max)
    x = np.maximum(P_L - R_S, 0.0)
    rhs = x * x * f.T_g / (4.0 * f.df_max)
    if with_damping:
        rhs = rhs - x * f.T_g * f.D / 4.0 * P_D
    return rhs / gain


def assess_damping_approx(
    ranges: dict | None = None,
    n_samples: int = 3500,
    seed: int = 0,
    mode: str = "linear-damping",
    f: FrequencyParams | None = None,
    max_draws: int | None = None,
    dt: float = 1e-3,
) -> AssessmentReport:
    """Sample states, size R_G so the chosen analytic rule binds, and measure the true damped nadir.

    Candidate ``i`` draws from its own stream ``default_rng([seed, i])``, so the
    accepted set does not depend on batching. Candidates whose R_G falls outside
    its range or whose undamped nadir time leaves ``[T_s, T_g)`` are rejected.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    f = f or FrequencyParams()
    ranges = {**GB_RANGES, **(ranges or {})}
    max_draws = max_draws or 200 * n_samples
    keys = ("H", "R_S", "P_L", "P_D")
    accepted: list[tuple] = []
    i = 0
    batch = max(n_samples, 256)
    while len(accepted) < n_samples and i < max_draws:
        idx = np.arange(i, min(i + batch, max_draws))
        draws = np.array([np.random.default_rng([seed, int(j)]).random(4) for j in idx])
        vals = {k: ranges[k][0] + draws[:, n] * (ranges[k][1] - ranges[k][0]) for n, k in enumerate(keys)}
        R_G = solve_binding_pfr(vals["H"], vals["R_S"], vals["P_L"], vals["P_D"], f, mode)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_star = (vals["P_L"] - vals["R_S"]) * f.T_g / R_G
        ok = (R_G >= ranges["R_G"][0]) & (R_G <= ranges["R_G"][1]) & (t_star >= f.T_s) & (t_star < f.T_g)
        for n in np.flatnonzero(ok):
            accepted.append((int(idx[n]), *(float(vals[k][n]) for k in keys), float(R_G[n]), float(t_star[n])))
            if len(accepted) == n_samples:
                break
        i = accepted[-1][0] + 1 if len(accepted) == n_samples else int(idx[-1]) + 1
    if not accepted:
        raise AssumptionError("no sample satisfied the acceptance rules")
    arr = np.array(accepted)
    nadir, _ = nadir_by_ode(arr[:, 1], arr[:, 2], arr[:, 5], arr[:, 3], arr[:, 4], f, include_damping=True, dt=dt)
    records = [
        {"index": int(r[0]), "H": r[1], "R_S": r[2], "P_L": r[3], "P_D": r[4], "R_G": r[5], "t_star": r[6], "nadir": float(n)}
        for r, n in zip(accepted, nadir)
    ]
    return AssessmentReport(
        mode=mode,
        sample_count=len(records),
        mean_nadir=float(np.mean(nadir)),
        max_nadir=float(np.max(nadir)),
        min_nadir=float(np.min(nadir)),
        draws=i,
        records=records,
    )
