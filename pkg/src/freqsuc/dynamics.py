"""Post-fault frequency simulation with droop-controlled providers.

Each provider follows a droop command ``-df / K`` through a first-order lag
whose output is clipped to ``[0, R]``. Load damping is ``D P_D`` MW/Hz and the
lost infeed is a step at ``t = 0``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import NumericError
from .frequency import FrequencyState
from .system import FrequencyParams


@dataclass(frozen=True)
class DynamicParams:
    tau_g: float = 5.0  # s
    tau_b: float = 0.1  # s
    K_g: float | None = None  # Hz/MW; None sizes it from gen_droop_deviation
    K_b: float | None = None  # Hz/MW; None sizes it from bess_droop_deviation
    gen_droop_deviation: float | None = None  # Hz commanding full PFR; None -> df_ss_max
    bess_droop_deviation: float | None = None  # Hz commanding full EFR; None -> df_ss_max
    rate_limit: bool = False  # cap output slew at R_G/T_g and R_S/T_s
    dt: float = 1e-3
    horizon: float = 60.0

    def validate(self) -> "DynamicParams":
        if self.tau_g <= 0 or self.tau_b <= 0:
            raise ValueError("time constants must be > 0")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.horizon < 60.0:
            raise ValueError("horizon must be >= 60 s")
        for name in ("K_g", "K_b", "gen_droop_deviation", "bess_droop_deviation"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be > 0")
        return self

    def gains(self, state: FrequencyState, f: FrequencyParams) -> tuple[float, float]:
        dg = self.gen_droop_deviation if self.gen_droop_deviation is not None else f.df_ss_max
        db = self.bess_droop_deviation if self.bess_droop_deviation is not None else f.df_ss_max
        K_g = self.K_g if self.K_g is not None else (dg / state.R_G if state.R_G > 0 else math.inf)
        K_b = self.K_b if self.K_b is not None else (db / state.R_S if state.R_S > 0 else math.inf)
        return K_g, K_b


@dataclass
class SimulationTrace:
    times: np.ndarray
    delta_f: np.ndarray
    pfr_injection: np.ndarray
    efr_injection: np.ndarray
    rocof_max: float
    nadir: float
    t_nadir: float
    qss_60s: float

    def write_csv(self, path: str | Path, stride: int = 1) -> None:
        """Write every ``stride``-th sample; the final sample is always kept."""
        idx = list(range(0, len(self.times), max(1, int(stride))))
        if idx[-1] != len(self.times) - 1:
            idx.append(len(self.times) - 1)
        cols = (self.times, self.delta_f, self.pfr_injection, self.efr_injection)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_s", "delta_f_hz", "pfr_mw", "efr_mw"])
            for row in zip(*(np.asarray(c)[idx] for c in cols)):
                w.writerow([f"{v:.10g}" for v in row])

    def scalars(self) -> dict:
        return {"rocof_max": self.rocof_max, "nadir": self.nadir, "t_nadir": self.t_nadir, "qss_60s": self.qss_60s}


def simulate_post_fault(
    state: FrequencyState, f: FrequencyParams, d: DynamicParams | None = None
) -> SimulationTrace:
    d = (d or DynamicParams()).validate()
    if state.H <= 0:
        raise NumericError("H must be > 0")
    K_g, K_b = d.gains(state, f)
    R_G, R_S, P_L = state.R_G, state.R_S, state.P_L
    damp = f.D * state.P_D
    c = f.f0 / (2.0 * state.H)
    tg, tb = d.tau_g, d.tau_b
    slew_g = R_G / f.T_g if d.rate_limit else math.inf
    slew_b = R_S / f.T_s if d.rate_limit else math.inf
    clip = lambda v, hi: 0.0 if v < 0.0 else (hi if v > hi else v)  # noqa: E731

    def rhs(df, pg, pb):
        ug = clip(pg, R_G)
        ub = clip(pb, R_S)
        cg = -df / K_g if K_g != math.inf else 0.0
        cb = -df / K_b if K_b != math.inf else 0.0
        dpg = (cg - pg) / tg
        dpb = (cb - pb) / tb
        if dpg > slew_g:
            dpg = slew_g
        if dpb > slew_b:
            dpb = slew_b
        return c * (ug + ub - P_L - damp * df), dpg, dpb

    n = int(round(d.horizon / d.dt))
    h = d.dt
    times = [0.0] * (n + 1)
    dfs = [0.0] * (n + 1)
    pgs = [0.0] * (n + 1)
    pbs = [0.0] * (n + 1)
    df = pg = pb = 0.0
    rocof = abs(rhs(0.0, 0.0, 0.0)[0])
    for i in range(1, n + 1):
        a1, b1, c1 = rhs(df, pg, pb)
        a2, b2, c2 = rhs(df + h / 2 * a1, pg + h / 2 * b1, pb + h / 2 * c1)
        a3, b3, c3 = rhs(df + h / 2 * a2, pg + h / 2 * b2, pb + h / 2 * c2)
        a4, b4, c4 = rhs(df + h * a3, pg + h * b3, pb + h * c3)
        df += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        pg += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
        pb += h / 6 * (c1 + 2 * c2 + 2 * c3 + c4)
        if not (math.isfinite(df) and math.isfinite(pg) and math.isfinite(pb)):
            raise NumericError(f"non-finite state at step {i}")
        times[i] = i * h
        dfs[i] = df
        pgs[i] = clip(pg, R_G)
        pbs[i] = clip(pb, R_S)
        slope = abs(rhs(df, pg, pb)[0])
        if slope > rocof:
            rocof = slope
    delta_f = np.array(dfs)
    k = int(np.argmin(delta_f))
    i60 = min(int(round(60.0 / h)), n)
    return SimulationTrace(
        times=np.array(times),
        delta_f=delta_f,
        pfr_injection=np.array(pgs),
        efr_injection=np.array(pbs),
        rocof_max=rocof,
        nadir=float(max(-delta_f[k], 0.0)),
        t_nadir=float(times[k]),
        qss_60s=float(abs(delta_f[i60])),
    )


@dataclass(frozen=True)
class SecurityVerdict:
    rocof_ok: bool
    nadir_ok: bool
    qss_ok: bool
    rocof_margin: float  # Hz/s
    nadir_margin: float  # Hz
    qss_margin: float  # Hz

    @property
    def secure(self) -> bool:
        return self.rocof_ok and self.nadir_ok and self.qss_ok

    def to_dict(self) -> dict:
        return {**asdict(self), "secure": self.secure}

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def security_verdict(trace: SimulationTrace, f: FrequencyParams) -> SecurityVerdict:
    rm = f.rocof_max - trace.rocof_max
    nm = f.df_max - trace.nadir
    qm = f.df_ss_max - trace.qss_60s
    return SecurityVerdict(rm >= 0, nm >= 0, qm >= 0, rm, nm, qm)


def energy_residual(trace: SimulationTrace, state: FrequencyState, f: FrequencyParams) -> float:
    """Relative mismatch between integrated power imbalance and stored kinetic energy change."""
    p = trace.pfr_injection + trace.efr_injection - state.P_L - f.D * state.P_D * trace.delta_f
    lhs = np.concatenate([[0.0], np.cumsum((p[1:] + p[:-1]) / 2 * np.diff(trace.times))])
    rhs = 2.0 * state.H / f.f0 * trace.delta_f
    scale = max(np.max(np.abs(rhs)), 1e-12)
    return float(np.max(np.abs(lhs - rhs)) / scale)
