from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqsuc.errors import AssumptionError, NumericError
from freqsuc.frequency import FrequencyState, required_pfr
from freqsuc.nadir import (
    GB_RANGES,
    DampingNadirProblem,
    assess_damping_approx,
    nadir_by_ode,
    nadir_by_ode_state,
    pd_feasible_range,
    required_pfr_with_damping,
    solve_binding_pfr,
)
from freqsuc.system import FrequencyParams

F = FrequencyParams()
F0 = replace(F, D=0.0)
finite = dict(allow_nan=False, allow_infinity=False)
FIG4 = DampingNadirProblem(132000.0, 220.0, 1660.0, 38300.0, F)


def test_pd_range_vectors():
    assert pd_feasible_range(1800.0, 0.0, F) == pytest.approx((0.0, 450000.0))
    assert pd_feasible_range(1800.0, 1800.0, F) is None
    hi = pd_feasible_range(1800.0, 0.0, replace(F, D=F.D / 2))[1]
    assert hi == pytest.approx(900000.0)


def test_fig4_required_pfr():
    rg = required_pfr_with_damping(FIG4)
    # [DERIVED] bisection on the closed-form drop; frozen
    assert rg == pytest.approx(2138.77, abs=0.05)
    assert rg < 2240.0  # the published schedule is secure with slack
    nad, t = nadir_by_ode(FIG4.H, FIG4.R_S, rg, FIG4.P_L, FIG4.P_D, F)
    assert nad == pytest.approx(0.8, abs=2e-3)
    assert t == pytest.approx(FIG4.nadir_time(rg), abs=2e-2)


def test_residual_small_at_root():
    rg = required_pfr_with_damping(FIG4)
    assert abs(FIG4.residual(rg)) <= 1e-6


def test_required_pfr_vanishes_at_range_end():
    hi = pd_feasible_range(1660.0, 220.0, F)[1]
    rg = required_pfr_with_damping(DampingNadirProblem(132000.0, 220.0, 1660.0, hi * (1 - 1e-4), F))
    assert rg < 5.0
    with pytest.raises(AssumptionError):
        required_pfr_with_damping(DampingNadirProblem(132000.0, 220.0, 1660.0, hi * 1.01, F))


def test_small_damping_limit_matches_undamped_rule():
    f = replace(F, D=1e-7)
    rg = required_pfr_with_damping(DampingNadirProblem(132000.0, 220.0, 1660.0, 38300.0, f))
    assert rg == pytest.approx(required_pfr(132000.0, 220.0, 1660.0, 38300.0, F, with_damping=False), rel=1e-4)


def test_problem_rejects_bad_inputs():
    with pytest.raises(ValueError):
        DampingNadirProblem(0.0, 0.0, 1000.0, 1e4, F)
    with pytest.raises(ValueError):
        DampingNadirProblem(1e5, 1000.0, 1000.0, 1e4, F)
    with pytest.raises(ValueError):
        DampingNadirProblem(1e5, 0.0, 1000.0, 1e4, F0)


def test_gamma_formula():
    rg = 2000.0
    expect = F.D * 38300 * 50 * 10 * (1660 - 220 - F.D * 38300 * 0.8) / (2 * 132000 * rg)
    assert FIG4.gamma(rg) == pytest.approx(expect)


# -- ODE ----------------------------------------------------------------------


def test_ode_fig4_ideal_ramps_between_bounds():
    nad, t = nadir_by_ode(132000.0, 220.0, 2240.0, 1660.0, 38300.0, F)
    assert 0.72 <= nad <= 0.80


def test_ode_full_efr_cover_closed_form():
    H, P = 100000.0, 300.0
    nad, t = nadir_by_ode(H, P, 1e-9, P, 0.0, F0)
    assert nad == pytest.approx(F.f0 * P * F.T_s / (4 * H), rel=1e-6)
    assert t == pytest.approx(F.T_s, abs=2e-3)


def test_ode_diverges_without_response():
    with pytest.raises(NumericError):
        nadir_by_ode(1e5, 0.0, 100.0, 1800.0, 0.0, F0, horizon=20.0)


def test_ode_state_wrapper_and_vectorized():
    s = FrequencyState(132000.0, 220.0, 2240.0, 1660.0, 38300.0)
    a = nadir_by_ode_state(s, F)
    v, tv = nadir_by_ode(np.array([s.H, s.H]), np.array([s.R_S, 0.0]), np.array([s.R_G] * 2), np.array([s.P_L] * 2), np.array([s.P_D] * 2), F)
    assert v[0] == pytest.approx(a[0], abs=1e-12) and v[1] > v[0]


def test_binding_undamped_states_hit_limit():
    rng = np.random.default_rng(3)
    H = rng.uniform(*GB_RANGES["H"], 40)
    RS = rng.uniform(*GB_RANGES["R_S"], 40)
    PL = rng.uniform(*GB_RANGES["P_L"], 40)
    RG = solve_binding_pfr(H, RS, PL, 0.0, F, "no-damping")
    t = (PL - RS) * F.T_g / RG
    ok = (t >= F.T_s) & (t < F.T_g)
    assert ok.sum() >= 10
    nad, _ = nadir_by_ode(H[ok], RS[ok], RG[ok], PL[ok], np.zeros(ok.sum()), F0)
    assert np.max(np.abs(nad - F.df_max)) <= 1e-3


# -- properties -----------------------------------------------------------------


@st.composite
def problems(draw):
    H = draw(st.floats(5e4, 4e5, **finite))
    RS = draw(st.floats(0.0, 400.0, **finite))
    PL = draw(st.floats(1400.0, 1800.0, **finite))
    PD = draw(st.floats(2e4, 6e4, **finite))
    return H, RS, PL, PD


def _rg(H, RS, PL, PD):
    return required_pfr_with_damping(DampingNadirProblem(H, RS, PL, PD, F))


@given(problems(), st.floats(1.01, 1.5))
@settings(max_examples=40, deadline=None)
def test_required_pfr_monotone(p, k):
    H, RS, PL, PD = p
    base = _rg(*p)
    assert _rg(H * k, RS, PL, PD) <= base * (1 + 1e-7)
    assert _rg(H, RS, PL, min(PD * k, 6e4 * 1.5)) <= base * (1 + 1e-7)
    assert _rg(H, RS * 0.5, PL, PD) >= base * (1 - 1e-7)
    assert _rg(H, RS, PL * k, PD) >= base * (1 - 1e-7)


@given(problems())
@settings(max_examples=25, deadline=None)
def test_damping_rule_conservative_ordering(p):
    H, RS, PL, PD = p
    rg_damp = solve_binding_pfr(H, RS, PL, PD, F, "linear-damping")
    rg_bare = solve_binding_pfr(H, RS, PL, PD, F, "no-damping")
    assert rg_bare >= rg_damp
    t = (PL - RS) * F.T_g / rg_bare
    if not (F.T_s <= t < F.T_g):
        return
    n_damp, _ = nadir_by_ode(H, RS, rg_damp, PL, PD, F, dt=2e-3)
    n_bare, _ = nadir_by_ode(H, RS, rg_bare, PL, PD, F, dt=2e-3)
    assert n_bare <= n_damp + 1e-9 <= F.df_max + 1e-3


# -- assessment -------------------------------------------------------------------


def test_assessment_small_run_and_outputs(tmp_path):
    rep = assess_damping_approx(n_samples=60, seed=5, dt=2e-3)
    assert rep.sample_count == 60 and rep.draws >= 60
    assert rep.min_nadir <= rep.mean_nadir <= rep.max_nadir <= F.df_max
    rep.write_csv(tmp_path / "a.csv")
    rep.write_json(tmp_path / "a.json")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "index,H,R_S,P_L,P_D,R_G,t_star,nadir" and len(lines) == 61
    for r in rep.records:
        assert GB_RANGES["R_G"][0] <= r["R_G"] <= GB_RANGES["R_G"][1]
        assert F.T_s <= r["t_star"] < F.T_g


def test_assessment_is_deterministic_and_prefix_stable():
    a = assess_damping_approx(n_samples=30, seed=1, dt=2e-3)
    b = assess_damping_approx(n_samples=30, seed=1, dt=2e-3)
    c = assess_damping_approx(n_samples=10, seed=1, dt=2e-3)
    assert a.records == b.records
    assert a.records[:10] == c.records


def test_zero_damping_assessment_exact():
    rep = assess_damping_approx(n_samples=40, seed=2, mode="no-damping", f=F0)
    assert abs(rep.max_nadir - 0.8) <= 1e-3 and abs(rep.min_nadir - 0.8) <= 1e-3


def test_assessment_argument_errors():
    with pytest.raises(ValueError):
        assess_damping_approx(n_samples=0)
    with pytest.raises(ValueError):
        assess_damping_approx(n_samples=5, mode="quadratic")
    with pytest.raises(AssumptionError):
        assess_damping_approx(n_samples=5, ranges={"R_G": (1e6, 1e6 + 1)}, max_draws=50)
