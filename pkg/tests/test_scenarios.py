import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqsuc import data_path
from freqsuc.errors import SchemaError
from freqsuc.scenarios import (
    DETERMINISTIC_QUANTILE,
    GB_QUANTILES,
    ForecastModel,
    build_tree,
    load_profile_csv,
    node_probability,
    quantile_masses,
    write_profile_csv,
)


@pytest.fixture(scope="module")
def desk():
    d, w = load_profile_csv(data_path("desk_forecast.csv"))
    return ForecastModel(d, w, error_sigma0=500.0)


def test_gb_tree_has_169_nodes(desk):
    tree = build_tree(desk, GB_QUANTILES, 24, 10000.0, 30000.0).validate()
    assert len(tree) == 169
    assert len(tree.stage(1)) == 7 and len(tree.stage(24)) == 7
    assert all(tree.parent(n).id == 0 for n in tree.stage(1))


def test_median_probability_and_root(desk):
    tree = build_tree(desk, GB_QUANTILES, 24, 10000.0, 30000.0)
    assert node_probability(tree, 0) == 1.0
    med = tree.chain(3)
    assert all(n.probability == pytest.approx(0.2) for n in med[1:])
    with pytest.raises(KeyError):
        node_probability(tree, 10_000)


def test_chain_nodes_inherit_root_child_probability(desk):
    tree = build_tree(desk, GB_QUANTILES, 6, 0.0, 30000.0)
    for k in range(7):
        ch = tree.chain(k)
        assert {n.probability for n in ch[1:]} == {ch[1].probability}


def test_zero_sigma_median_is_point_forecast(desk):
    fc = ForecastModel(desk.demand_profile, desk.wind_point_forecast, error_sigma0=0.0)
    tree = build_tree(fc, (0.5,), 24, 5000.0, 30000.0, start_hour=3)
    for n in tree.nodes[1:]:
        d, w = fc.point(3 + n.stage)
        assert n.demand == d and n.wind_available == pytest.approx(w)


def test_deterministic_quantile_tree(desk):
    tree = build_tree(desk, (DETERMINISTIC_QUANTILE,), 24, 5000.0, 30000.0).validate()
    assert len(tree) == 25
    assert all(n.probability == 1.0 for n in tree.nodes)
    # high net-demand quantile means less wind than forecast
    assert all(n.wind_available <= desk.point(n.stage)[1] + 1e-9 for n in tree.nodes[1:])


@pytest.mark.parametrize("q", [(0.5, 0.3), (0.2, 0.2), (0.0, 0.5), (0.5, 1.0), ()])
def test_bad_quantiles_rejected(desk, q):
    with pytest.raises(ValueError):
        build_tree(desk, q, 4, 0.0, 1.0)


def test_horizon_must_be_positive(desk):
    with pytest.raises(ValueError):
        build_tree(desk, (0.5,), 0, 0.0, 1.0)


def test_wind_clamped_to_capacity_and_zero():
    fc = ForecastModel(np.full(4, 100.0), np.array([0.0, 50.0, 950.0, 1000.0]), error_sigma0=400.0)
    tree = build_tree(fc, (0.005, 0.995), 3, 2000.0, 100.0, wind_capacity=1000.0)
    assert tree.root.wind_available == 1000.0
    assert all(0.0 <= n.wind_available <= 1000.0 for n in tree.nodes)
    assert any(n.wind_available == 0.0 for n in tree.nodes)
    assert any(n.wind_available == 1000.0 for n in tree.nodes[1:])


def test_profile_csv_round_trip_and_errors(tmp_path):
    p = tmp_path / "prof.csv"
    write_profile_csv(p, [1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    d, w = load_profile_csv(p)
    assert d.tolist() == [1.0, 2.0, 3.0] and w.tolist() == [4.0, 5.0, 6.0]
    bad = tmp_path / "bad.csv"
    bad.write_text("hour,demand_mw,wind_mw\n0,1,2\n1,x,3\n")
    with pytest.raises(SchemaError) as e:
        load_profile_csv(bad)
    assert e.value.line == 3
    bad.write_text("hour,demand\n0,1\n")
    with pytest.raises(SchemaError):
        load_profile_csv(bad)


quantile_sets = st.lists(st.floats(0.001, 0.999), min_size=1, max_size=9, unique=True).map(sorted).filter(
    lambda q: all(b - a > 1e-6 for a, b in zip(q, q[1:]))
)


@given(quantile_sets)
def test_masses_positive_and_normalized(q):
    m = quantile_masses(q)
    assert all(x > 0 for x in m)
    assert sum(m) == pytest.approx(1.0, abs=1e-12)


@given(quantile_sets, st.integers(1, 12), st.floats(0, 3000))
@settings(max_examples=50, deadline=None)
def test_stage_sums_are_one(q, horizon, sigma):
    fc = ForecastModel(np.full(24, 30000.0), np.full(24, 15000.0), error_sigma0=sigma)
    tree = build_tree(fc, q, horizon, 15000.0, 30000.0, wind_capacity=40000.0).validate()
    for t in range(horizon + 1):
        assert sum(n.probability for n in tree.stage(t)) == pytest.approx(1.0, abs=1e-9)


@given(st.floats(0, 2000), st.floats(1, 2000), st.integers(1, 24))
@settings(max_examples=50, deadline=None)
def test_spread_grows_with_sigma(s0, ds, t):
    # unclamped wind so net-demand spread is linear in sigma0
    d, w = np.full(30, 30000.0), np.full(30, 20000.0)

    def spread(s):
        tree = build_tree(ForecastModel(d, w, error_sigma0=s), GB_QUANTILES, t, 20000.0, 30000.0)
        nd = [n.net_demand for n in tree.stage(t)]
        return max(nd) - min(nd)

    assert spread(s0 + ds) > spread(s0)


def test_net_demand_quantiles_ordered(desk):
    tree = build_tree(desk, GB_QUANTILES, 24, 10000.0, 30000.0, wind_capacity=1e9)
    for t in range(1, 25):
        nd = [n.net_demand for n in sorted(tree.stage(t), key=lambda n: n.scenario)]
        assert nd == sorted(nd)
