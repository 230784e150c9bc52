import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqsuc.errors import ConfigurationError, ModelError
from freqsuc.milp import (
    INF,
    LinExpr,
    MilpModel,
    _classify,
    _finish_file_solve,
    export_model,
    lin_sum,
    linearize_product_bin_cont,
    read_mps,
    solve,
)

BACKENDS = ["scipy", "highs"]


def sig12(v: float) -> str:
    return "%.12g" % v


# -- builder ------------------------------------------------------------------


def test_binary_bounds():
    m = MilpModel()
    z = m.add_variable("z_5", "binary")
    assert (z.lb, z.ub) == (0.0, 1.0)
    assert z.is_integral


def test_foreign_handle_rejected():
    a, b = MilpModel(), MilpModel()
    x = a.add_variable("x")
    with pytest.raises(ModelError):
        b.add_constraint("c", x, ">=", 1)
    with pytest.raises(ModelError):
        b.set_objective(x)


@pytest.mark.parametrize(
    "build",
    [
        lambda m: (m.add_variable("x"), m.add_variable("x")),
        lambda m: m.add_variable("x", lb=2, ub=1),
        lambda m: m.add_variable("x", kind="real"),
        lambda m: (m.add_constraint("c", 0, "<="), m.add_constraint("c", 0, "<=")),
        lambda m: m.add_constraint("c", 0, "<"),
        lambda m: m.set_objective(0, sense="maximize"),
    ],
    ids=["dup-var", "lb-gt-ub", "kind", "dup-row", "sense", "maximize"],
)
def test_builder_errors(build):
    with pytest.raises(ModelError):
        build(MilpModel())


@pytest.mark.parametrize("backend", BACKENDS)
def test_empty_objective_is_feasibility(backend):
    m = MilpModel()
    x = m.add_variable("x", ub=4)
    m.add_constraint("c", x, ">=", 1)
    sol = solve(m, backend=backend)
    assert sol.ok and sol.objective == 0.0
    assert 1 - 1e-9 <= sol[x] <= 4 + 1e-9


def test_linexpr_arithmetic():
    m = MilpModel()
    x, y = m.add_variable("x"), m.add_variable("y")
    e = 2 * (x - y) + 3 - (x / 2)
    assert e.terms[x] == 1.5 and e.terms[y] == -2 and e.const == 3
    s = lin_sum([x, y, 1.0], [1.0, 4.0, 2.0])
    assert s.terms == {x: 1.0, y: 4.0} and s.const == 2.0


# -- solve ---------------------------------------------------------------


@pytest.mark.parametrize("backend", BACKENDS)
def test_min_x_continuous(backend):
    m = MilpModel()
    x = m.add_variable("x", lb=-INF)
    m.add_constraint("c", x, ">=", 3)
    m.set_objective(x)
    sol = solve(m, backend=backend)
    assert sol.status == "optimal"
    assert sol[x] == pytest.approx(3.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_max_integer(backend):
    m = MilpModel()
    x = m.add_variable("x", "integer", lb=-10)
    m.add_constraint("c", x, "<=", 5.5)
    m.set_objective(-x)
    sol = solve(m, backend=backend)
    assert sol.status == "optimal"
    assert sol[x] == pytest.approx(5.0)
    assert sol.objective == pytest.approx(-5.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible(backend):
    m = MilpModel()
    x = m.add_variable("x")
    m.add_constraint("lo", x, ">=", 2)
    m.add_constraint("hi", x, "<=", 1)
    sol = solve(m, backend=backend)
    assert sol.status == "infeasible"
    assert sol.values is None and not sol.ok
    with pytest.raises(ValueError):
        sol.value(x)


@pytest.mark.parametrize("backend", BACKENDS)
def test_unbounded(backend):
    m = MilpModel()
    x = m.add_variable("x", lb=-INF)
    m.set_objective(x)
    m.add_constraint("c", x, "<=", 0)
    sol = solve(m, backend=backend)
    assert sol.status in ("unbounded", "error")
    assert sol.values is None


def test_backends_agree_on_knapsack():
    m = _knapsack(12, seed=3)
    a = solve(m, gap=0.0, backend="scipy")
    b = solve(m, gap=0.0, backend="highs")
    assert a.objective == pytest.approx(b.objective, rel=1e-9)


def test_deterministic_repeat():
    m = _knapsack(25, seed=1)
    first = solve(m, gap=1e-4, backend="highs", seed=7)
    second = solve(m, gap=1e-4, backend="highs", seed=7)
    assert np.array_equal(first.values, second.values)


def test_start_vector_accepted_and_checked():
    m = _knapsack(10, seed=2)
    ref = solve(m, gap=0.0, backend="highs")
    warm = solve(m, gap=0.0, backend="highs", start=ref.values)
    assert warm.objective == pytest.approx(ref.objective)
    with pytest.raises(ModelError):
        solve(m, backend="highs", start=np.zeros(3))


def test_backend_errors():
    m = _knapsack(3, seed=0)
    with pytest.raises(ConfigurationError):
        solve(m, backend="cplex")
    with pytest.raises(ConfigurationError):
        solve(m, backend="highs-cli", path="/nonexistent/highs")
    with pytest.raises(ValueError):
        solve(m, gap=-0.1)
    with pytest.raises(ConfigurationError):
        solve(m, backend="highs", options={"not_an_option": 1})


def test_status_classification():
    assert _classify(True, 0.0, 1e-3) == "optimal"
    assert _classify(True, 5e-4, 1e-3) == "gap-feasible"
    assert _classify(False, 5e-4, 1e-3) == "gap-feasible"
    assert _classify(False, 0.02, 1e-3) == "error"
    assert _classify(False, None, 1e-3) == "error"


def test_limit_keeps_incumbent_outside_values():
    m = _knapsack(4, seed=0)
    x = np.zeros(4)
    sol = _finish_file_solve(m, "Time limit reached", x, 0.05, 1e-3, 1.0, "highs")
    assert sol.status == "error" and sol.values is None
    assert sol.limit_reached and np.array_equal(sol.incumbent, x)
    ok = _finish_file_solve(m, "Time limit reached", x, 5e-4, 1e-3, 1.0, "highs")
    assert ok.status == "gap-feasible" and ok.values is not None and ok.gap <= 1e-3


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_values_present_iff_ok(seed):
    m = _knapsack(6, seed=seed)
    sol = solve(m, backend="scipy")
    assert (sol.values is not None) == sol.ok


# -- export -------------------------------------------------------------


def _knapsack(n: int, seed: int) -> MilpModel:
    rng = np.random.default_rng(seed)
    m = MilpModel("knap")
    w = rng.uniform(1, 10, n)
    v = rng.uniform(1, 10, n)
    xs = [m.add_variable(f"x{i}", "binary") for i in range(n)]
    m.add_constraint("cap", lin_sum(xs, w), "<=", float(w.sum() / 2))
    m.set_objective(lin_sum(xs, -v))
    return m


def _random_model(rng: np.random.Generator) -> MilpModel:
    m = MilpModel("rand")
    kinds = ["continuous", "integer", "binary"]
    xs = []
    for i in range(int(rng.integers(1, 7))):
        kind = kinds[int(rng.integers(0, 3))]
        lb = float(rng.choice([0.0, -INF, rng.uniform(-50, 0)]))
        ub = float(rng.choice([INF, rng.uniform(1, 1e6)]))
        xs.append(m.add_variable(f"v{i}", kind, lb, ub))
    for j in range(int(rng.integers(0, 6))):
        coeffs = rng.uniform(-1e5, 1e5, len(xs)) * (rng.random(len(xs)) < 0.7)
        m.add_constraint(f"r{j}", lin_sum(xs, coeffs), ["<=", ">=", "=="][j % 3], float(rng.uniform(-1e6, 1e6)))
    m.set_objective(lin_sum(xs, rng.uniform(-1, 1, len(xs)) / 3.0))
    return m


def _assert_same(a: MilpModel, b: MilpModel):
    assert len(a.variables) == len(b.variables)
    assert len(a.constraints) == len(b.constraints)
    for u, v in zip(a.variables, b.variables):
        kind = u.kind if not (u.kind == "binary" and (u.lb, u.ub) != (0.0, 1.0)) else "integer"
        assert kind == v.kind
        assert sig12(u.lb) == sig12(v.lb) and sig12(u.ub) == sig12(v.ub)
    for c, d in zip(a.constraints, b.constraints):
        assert c.sense == d.sense and sig12(c.rhs) == sig12(d.rhs)
        ct = {v.index: k for v, k in c.terms.items()}
        dt = {v.index: k for v, k in d.terms.items()}
        assert ct.keys() == dt.keys()
        assert all(sig12(ct[i]) == sig12(dt[i]) for i in ct)
    oa = {v.index: k for v, k in a.objective.terms.items() if k != 0}
    ob = {v.index: k for v, k in b.objective.terms.items() if k != 0}
    assert oa.keys() == ob.keys() and all(sig12(oa[i]) == sig12(ob[i]) for i in oa)


def test_two_variable_round_trip(tmp_path):
    m = MilpModel("lp2")
    x = m.add_variable("x", ub=10)
    y = m.add_variable("y", lb=-INF)
    m.add_constraint("c1", 1.5 * x + 2 * y, "<=", 7.25)
    m.add_constraint("c2", x - y, ">=", -1)
    m.set_objective(-x - 0.1 * y)
    back = read_mps(export_model(m, tmp_path / "lp2.mps"))
    _assert_same(m, back)
    assert [v.name for v in back.variables] == ["x", "y"]


def test_integrality_markers(tmp_path):
    m = MilpModel()
    a = m.add_variable("a")
    z = m.add_variable("z", "binary")
    n = m.add_variable("n", "integer", ub=9)
    m.add_constraint("c", a + z + n, ">=", 1)
    text = export_model(m, tmp_path / "m.mps").read_text().splitlines()
    cols = text[text.index("COLUMNS") + 1 : text.index("RHS")]
    assert "'INTORG'" in cols[1] and "'INTEND'" in cols[-1]
    assert cols[0].split()[0] == "a"
    assert any(line.split()[:3] == ["BV", "BND", "z"] for line in text)
    back = read_mps(tmp_path / "m.mps")
    assert [v.kind for v in back.variables] == ["continuous", "binary", "integer"]


def test_long_names_become_positional(tmp_path):
    m = MilpModel()
    x = m.add_variable("a_rather_long_name")
    m.add_constraint("another_long_row", x, ">=", 1)
    back = read_mps(export_model(m, tmp_path / "m.mps"))
    assert back.variables[0].name == "C0000000"
    assert back.constraints[0].name == "R0000000"


def test_fixed_field_columns(tmp_path):
    m = _knapsack(3, seed=4)
    for line in export_model(m, tmp_path / "k.mps").read_text().splitlines():
        if line.startswith("    ") and "MARKER" not in line:
            assert line[4:12].strip() and line[14:22].strip()


def test_export_deterministic(tmp_path):
    a = export_model(_knapsack(8, seed=5), tmp_path / "a.mps").read_bytes()
    b = export_model(_knapsack(8, seed=5), tmp_path / "b.mps").read_bytes()
    assert a == b


def test_highs_reads_export_without_warning(tmp_path):
    highspy = pytest.importorskip("highspy")
    m = _random_model(np.random.default_rng(11))
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(export_model(m, tmp_path / "r.mps"))) == highspy.HighsStatus.kOk
    assert h.getNumCol() == len(m.variables) and h.getNumRow() == len(m.constraints)


@given(st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_round_trip_property(tmp_path_factory, seed):
    m = _random_model(np.random.default_rng(seed))
    path = tmp_path_factory.mktemp("rt") / "m.mps"
    _assert_same(m, read_mps(export_model(m, path)))


# -- products --------------------------------------------------------------


def _product_model(x_val: float, z_val: int, M: float, L: float = 0.0):
    m = MilpModel()
    x = m.add_variable("x", lb=L, ub=M)
    z = m.add_variable("z", "binary")
    w = linearize_product_bin_cont(m, "w", x, z, L=L)
    m.fix(x, x_val)
    m.fix(z, z_val)
    return m, w


@pytest.mark.parametrize("z_val,x_frac", list(itertools.product([0, 1], [0.0, 0.5, 1.0])))
def test_product_exact_at_vertices(z_val, x_frac):
    M = 40.0
    x_val = x_frac * M
    for sign in (1.0, -1.0):
        m, w = _product_model(x_val, z_val, M)
        m.set_objective(sign * LinExpr.of(w))
        sol = solve(m, gap=0.0)
        assert sol.ok
        assert sol[w] == pytest.approx(x_val * z_val, abs=1e-9)


def test_product_rows_and_errors():
    m = MilpModel()
    x = m.add_variable("x", ub=5)
    z = m.add_variable("z", "binary")
    n0 = len(m.constraints)
    linearize_product_bin_cont(m, "w", x, z)
    assert len(m.constraints) - n0 == 3
    linearize_product_bin_cont(m, "w2", x, z, M=5, L=1)
    assert len(m.constraints) - n0 == 7
    free = m.add_variable("free")
    with pytest.raises(ModelError):
        linearize_product_bin_cont(m, "w3", free, z)
    with pytest.raises(ModelError):
        linearize_product_bin_cont(m, "w4", x, x)


@given(st.floats(0, 1), st.integers(0, 1), st.floats(0, 0.9), st.floats(1, 1e5))
@settings(max_examples=60, deadline=None)
def test_product_exact_property(frac, z_val, lfrac, M):
    L = lfrac * M
    x_val = L + frac * (M - L)
    lo_hi = []
    for sign in (1.0, -1.0):
        m, w = _product_model(x_val, z_val, M, L)
        m.set_objective(sign * LinExpr.of(w))
        sol = solve(m, gap=0.0)
        assert sol.ok
        lo_hi.append(sol[w])
    assert lo_hi[0] == pytest.approx(x_val * z_val, abs=1e-6 * M)
    assert lo_hi[1] == pytest.approx(x_val * z_val, abs=1e-6 * M)
    assert math.isfinite(lo_hi[0])
