"""Root-branching scenario trees over net-demand.

Each quantile of the forecast-error distribution becomes one deterministic
chain hanging off the current-time node. Errors are Gaussian with standard
deviation ``sigma0 * growth * sqrt(lead_hours)`` and are attributed to wind,
so demand stays at its point forecast.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .errors import SchemaError

GB_QUANTILES = (0.005, 0.1, 0.3, 0.5, 0.7, 0.9, 0.995)
DETERMINISTIC_QUANTILE = 0.98


@dataclass(frozen=True)
class ScenarioNode:
    id: int
    parent: int | None
    stage: int
    delta_tau: float  # h
    probability: float
    demand: float  # MW
    wind_available: float  # MW, before curtailment
    scenario: int = -1  # index into the quantile list, -1 for the root

    @property
    def net_demand(self) -> float:
        return self.demand - self.wind_available


@dataclass(frozen=True)
class ScenarioTree:
    nodes: tuple[ScenarioNode, ...]
    quantiles: tuple[float, ...]
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def __len__(self):
        return len(self.nodes)

    @property
    def root(self) -> ScenarioNode:
        return self.nodes[0]

    def node(self, node_id: int) -> ScenarioNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id}") from None

    def parent(self, node: ScenarioNode) -> ScenarioNode | None:
        return None if node.parent is None else self._by_id[node.parent]

    def ancestors(self, node: ScenarioNode):
        """Yield ``node`` and then each ancestor up to and including the root."""
        while node is not None:
            yield node
            node = self.parent(node)

    def stage(self, t: int) -> list[ScenarioNode]:
        return [n for n in self.nodes if n.stage == t]

    def chain(self, scenario: int) -> list[ScenarioNode]:
        """Root followed by the nodes of one scenario, in stage order."""
        return [self.root] + [n for n in self.nodes if n.scenario == scenario]

    def validate(self) -> "ScenarioTree":
        roots = [n for n in self.nodes if n.parent is None]
        if len(roots) != 1 or roots[0].stage != 0 or abs(roots[0].probability - 1.0) > 1e-12:
            raise ValueError("tree needs exactly one root at stage 0 with probability 1")
        for n in self.nodes:
            if not 0 < n.probability <= 1:
                raise ValueError(f"node {n.id}: probability out of (0, 1]")
            if n.demand < 0 or n.wind_available < 0:
                raise ValueError(f"node {n.id}: negative demand or wind")
            if n.parent is not None:
                p = self._by_id.get(n.parent)
                if p is None or p.stage != n.stage - 1:
                    raise ValueError(f"node {n.id}: parent missing or not at previous stage")
                if p.parent is not None and p.scenario != n.scenario:
                    raise ValueError(f"node {n.id}: branching below the root")
        for t in range(self.horizon + 1):
            total = sum(n.probability for n in self.stage(t))
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"stage {t}: probabilities sum to {total}")
        return self


@dataclass(frozen=True)
class ForecastModel:
    demand_profile: np.ndarray  # MW per hour
    wind_point_forecast: np.ndarray  # MW per hour
    error_sigma0: float = 0.0  # MW
    error_growth: float = 1.0  # per sqrt(h)

    def __post_init__(self):
        object.__setattr__(self, "demand_profile", np.asarray(self.demand_profile, dtype=float))
        object.__setattr__(self, "wind_point_forecast", np.asarray(self.wind_point_forecast, dtype=float))
        if self.error_sigma0 < 0:
            raise ValueError("error_sigma0 must be >= 0")
        if len(self.demand_profile) != len(self.wind_point_forecast) or len(self.demand_profile) == 0:
            raise ValueError("demand and wind forecasts must be non-empty and equally long")

    def sigma(self, lead_hours: float) -> float:
        return self.error_sigma0 * self.error_growth * math.sqrt(max(lead_hours, 0.0))

    def point(self, hour: int) -> tuple[float, float]:
        """Point forecast (demand, wind) at an absolute hour; profiles repeat periodically."""
        k = hour % len(self.demand_profile)
        return float(self.demand_profile[k]), float(self.wind_point_forecast[k])


def quantile_masses(quantiles: Sequence[float]) -> list[float]:
    """Probability of each quantile scenario.

    Interval boundaries sit halfway between neighbouring quantiles, with the
    outer boundaries at 0 and 1, so interior masses are (q[i+1] - q[i-1]) / 2
    and the tails absorb whatever lies beyond the extreme quantiles.
    """
    q = list(quantiles)
    bounds = [0.0] + [(a + b) / 2 for a, b in zip(q, q[1:])] + [1.0]
    return [hi - lo for lo, hi in zip(bounds, bounds[1:])]


def _check_quantiles(quantiles: Sequence[float]) -> None:
    if not quantiles:
        raise ValueError("need at least one quantile")
    for a, b in zip(quantiles, quantiles[1:]):
        if not b > a:
            raise ValueError(f"quantiles must be strictly increasing, got {list(quantiles)}")
    if quantiles[0] <= 0 or quantiles[-1] >= 1:
        raise ValueError("quantiles must lie strictly inside (0, 1)")


def build_tree(
    forecast: ForecastModel,
    quantiles: Sequence[float],
    horizon: int,
    current_wind: float,
    current_demand: float,
    *,
    wind_capacity: float = math.inf,
    start_hour: int = 0,
    delta_tau: float = 1.0,
) -> ScenarioTree:
    quantiles = tuple(float(q) for q in quantiles)
    _check_quantiles(quantiles)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    masses = quantile_masses(quantiles)
    z = [NormalDist().inv_cdf(q) for q in quantiles]

    nodes = [
        ScenarioNode(
            id=0,
            parent=None,
            stage=0,
            delta_tau=delta_tau,
            probability=1.0,
            demand=max(float(current_demand), 0.0),
            wind_available=min(max(float(current_wind), 0.0), wind_capacity),
        )
    ]
    next_id = 1
    for k, (zk, pk) in enumerate(zip(z, masses)):
        parent = 0
        for t in range(1, horizon + 1):
            demand, wind = forecast.point(start_hour + t)
            err = forecast.sigma(t * delta_tau) * zk  # net-demand error
            nodes.append(
                ScenarioNode(
                    id=next_id,
                    parent=parent,
                    stage=t,
                    delta_tau=delta_tau,
                    probability=pk,
                    demand=max(demand, 0.0),
                    wind_available=min(max(wind - err, 0.0), wind_capacity),
                    scenario=k,
                )
            )
            parent = next_id
            next_id += 1
    return ScenarioTree(tuple(nodes), quantiles, horizon)


def node_probability(tree: ScenarioTree, node_id: int) -> float:
    return tree.node(node_id).probability


def load_profile_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``hour, demand_mw, wind_mw`` rows; returns (demand, wind) ordered by hour."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"hour", "demand_mw", "wind_mw"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise SchemaError(f"expected columns {sorted(need)}", field=str(path))
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((int(row["hour"]), float(row["demand_mw"]), float(row["wind_mw"])))
            except ValueError as exc:
                raise SchemaError(str(exc), line=lineno) from exc
    rows.sort()
    hours = [r[0] for r in rows]
    if hours != list(range(hours[0], hours[0] + len(hours))):
        raise SchemaError("hours must be consecutive", field=str(path))
    return np.array([r[1] for r in rows]), np.array([r[2] for r in rows])


def write_profile_csv(path: str | Path, demand: Sequence[float], wind: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "demand_mw", "wind_mw"])
        for h, (d, wv) in enumerate(zip(demand, wind)):
            w.writerow([h, f"{d:.6g}", f"{wv:.6g}"])
