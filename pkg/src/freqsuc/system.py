"""Static grid description: generator classes, storage, wind and frequency limits.

The on-disk form is a JSON document with sections ``generators``, ``storage``,
``wind``, ``frequency`` and ``economics``; the README lists every field.
Powers are MW, energies MWh, inertia constants and delivery times seconds,
unit-commitment times hours.
"""

from __future__ import annotations

import json
import math
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import SchemaError, ValidationError


@dataclass(frozen=True)
class GeneratorClass:
    name: str
    unit_count: int
    p_max: float  # MW per unit
    p_min: float  # MW per unit, min stable generation
    cost_noload: float  # currency/h per online unit
    cost_marginal: float  # currency/MWh
    cost_startup: float = 0.0
    startup_time: int = 0  # h
    min_up: int = 0  # h
    min_down: int = 0  # h
    inertia_const: float = 0.0  # H_g, s
    pfr_max_per_unit: float = 0.0  # MW
    emissions: float = 0.0  # tCO2/MWh
    ramp_rate: float | None = None  # MW/h per unit
    must_run: bool = False
    deloadable: bool = False
    deload_max: float = 0.0  # MW per unit

    def validate(self, where: str = "generator") -> None:
        if self.unit_count < 0:
            raise ValidationError(f"{where}.unit_count", "must be >= 0")
        if self.p_max < 0:
            raise ValidationError(f"{where}.p_max", "must be >= 0")
        if self.p_min < 0 or self.p_min > self.p_max:
            raise ValidationError(f"{where}.p_min", f"must satisfy 0 <= p_min <= p_max ({self.p_max})")
        if self.inertia_const < 0:
            raise ValidationError(f"{where}.inertia_const", "must be >= 0")
        if self.pfr_max_per_unit < 0:
            raise ValidationError(f"{where}.pfr_max_per_unit", "must be >= 0")
        if self.deload_max < 0 or self.deload_max > self.p_max - self.p_min + 1e-9:
            raise ValidationError(f"{where}.deload_max", "must satisfy 0 <= deload_max <= p_max - p_min")
        for name in ("startup_time", "min_up", "min_down"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{where}.{name}", "must be >= 0")
        if self.deloadable and self.ramp_rate is None:
            raise ValidationError(f"{where}.ramp_rate", "required for deloadable classes")
        if self.ramp_rate is not None and self.ramp_rate < 0:
            raise ValidationError(f"{where}.ramp_rate", "must be >= 0")

    @property
    def min_output(self) -> float:
        """Lowest per-unit output of a must-run unit when deloading is allowed."""
        return max(self.p_min, self.p_max - self.deload_max)


@dataclass(frozen=True)
class StorageUnit:
    name: str
    capacity: float  # MWh
    rating: float  # MW, both directions
    round_trip_efficiency: float
    provides_efr: bool = False
    soc_initial: float = 0.0  # MWh

    def validate(self, where: str = "storage") -> None:
        if self.rating <= 0:
            raise ValidationError(f"{where}.rating", "must be > 0")
        if self.capacity < 0:
            raise ValidationError(f"{where}.capacity", "must be >= 0")
        if not 0 < self.round_trip_efficiency <= 1:
            raise ValidationError(f"{where}.round_trip_efficiency", "must lie in (0, 1]")
        if not 0 <= self.soc_initial <= self.capacity:
            raise ValidationError(f"{where}.soc_initial", "must satisfy 0 <= soc_initial <= capacity")

    @property
    def leg_efficiency(self) -> float:
        return math.sqrt(self.round_trip_efficiency)


@dataclass(frozen=True)
class FrequencyParams:
    f0: float = 50.0  # Hz
    df_max: float = 0.8  # nadir limit, Hz
    df_ss_max: float = 0.5  # quasi-steady-state limit, Hz
    rocof_max: float = 0.5  # Hz/s
    T_s: float = 0.5  # EFR delivery, s
    T_g: float = 10.0  # PFR delivery, s
    D: float = 0.005  # fraction of demand per Hz
    H_W: float = 0.0  # wind synthetic inertia constant, s
    H_L: float = 0.0  # inertia constant of the lost unit, s
    P_L_max: float = 1800.0  # MW
    R_S_max: float = 400.0  # MW
    efr_backing_h: float = 0.5  # h of full EFR that must sit in the state of charge

    def validate(self, where: str = "frequency") -> None:
        if self.f0 <= 0:
            raise ValidationError(f"{where}.f0", "must be > 0")
        if not 0 < self.T_s < self.T_g:
            raise ValidationError(f"{where}.T_s", "must satisfy 0 < T_s < T_g")
        if not self.df_ss_max > 0:
            raise ValidationError(f"{where}.df_ss_max", "must be > 0")
        if not self.df_max > self.df_ss_max:
            raise ValidationError(f"{where}.df_max", "must exceed df_ss_max")
        if not self.rocof_max > 0:
            raise ValidationError(f"{where}.rocof_max", "must be > 0")
        if self.D < 0:
            raise ValidationError(f"{where}.D", "must be >= 0")
        for name in ("H_W", "H_L", "P_L_max", "R_S_max", "efr_backing_h"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{where}.{name}", "must be >= 0")


@dataclass(frozen=True)
class SystemModel:
    generators: tuple[GeneratorClass, ...]
    storage: tuple[StorageUnit, ...] = ()
    wind_capacity: float = 0.0
    freq: FrequencyParams = field(default_factory=FrequencyParams)
    voll: float = 30000.0
    wind_marginal_cost: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "storage", tuple(self.storage))

    def validate(self) -> "SystemModel":
        if not self.generators and self.wind_capacity <= 0:
            raise ValidationError("generators", "need at least one generator class or wind_capacity > 0")
        names = [g.name for g in self.generators] + [s.name for s in self.storage]
        if len(set(names)) != len(names):
            raise ValidationError("generators", "generator and storage names must be unique")
        for i, g in enumerate(self.generators):
            g.validate(f"generators[{i}]")
        for i, s in enumerate(self.storage):
            s.validate(f"storage[{i}]")
        if self.wind_capacity < 0:
            raise ValidationError("wind.capacity", "must be >= 0")
        self.freq.validate()
        for i, g in enumerate(self.generators):
            if self.voll <= g.cost_marginal:
                raise ValidationError("economics.voll", f"must exceed cost_marginal of generators[{i}]")
        return self

    def generator(self, name: str) -> GeneratorClass:
        for g in self.generators:
            if g.name == name:
                return g
        raise KeyError(name)

    @property
    def efr_storage(self) -> tuple[StorageUnit, ...]:
        return tuple(s for s in self.storage if s.provides_efr)

    def max_inertia(self) -> float:
        """Static upper bound on system inertia (MW s), used as a big-M."""
        h = sum(g.inertia_const * g.p_max * g.unit_count for g in self.generators)
        return h + self.freq.H_W * self.wind_capacity


def total_must_run_count(m: SystemModel) -> int:
    return sum(g.unit_count for g in m.generators if g.must_run)


# -- serialization ---------------------------------------------------------

_SECTIONS = ("generators", "storage", "wind", "frequency", "economics")


def system_to_dict(m: SystemModel) -> dict[str, Any]:
    return {
        "generators": [asdict(g) for g in m.generators],
        "storage": [asdict(s) for s in m.storage],
        "wind": {"capacity": m.wind_capacity, "marginal_cost": m.wind_marginal_cost},
        "frequency": asdict(m.freq),
        "economics": {"voll": m.voll},
    }


def _build(cls, raw: Any, where: str):
    if not isinstance(raw, dict):
        raise SchemaError(f"expected an object, got {type(raw).__name__}", field=where)
    known = {f.name: f for f in fields(cls)}
    unknown = set(raw) - set(known)
    if unknown:
        raise SchemaError(f"unknown keys {sorted(unknown)}", field=where)
    kwargs = {}
    for name, f in known.items():
        if name not in raw:
            if f.default is MISSING and f.default_factory is MISSING:
                raise SchemaError("missing required field", field=f"{where}.{name}")
            continue
        value = raw[name]
        kwargs[name] = _coerce(value, f.type, f"{where}.{name}")
    return cls(**kwargs)


def _coerce(value, type_name: str, where: str):
    t = str(type_name)
    if t == "bool":
        if not isinstance(value, bool):
            raise SchemaError("expected true/false", field=where)
        return value
    if t == "str":
        if not isinstance(value, str):
            raise SchemaError("expected a string", field=where)
        return value
    if value is None and "None" in t:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError("expected a number", field=where)
    if t == "int":
        if value != int(value):
            raise SchemaError("expected an integer", field=where)
        return int(value)
    return float(value)


def system_from_dict(raw: dict[str, Any]) -> SystemModel:
    if not isinstance(raw, dict):
        raise SchemaError("top level must be an object")
    unknown = set(raw) - set(_SECTIONS)
    if unknown:
        raise SchemaError(f"unknown sections {sorted(unknown)}")
    gens_raw = raw.get("generators", [])
    if not isinstance(gens_raw, list):
        raise SchemaError("expected a list", field="generators")
    stor_raw = raw.get("storage", [])
    if not isinstance(stor_raw, list):
        raise SchemaError("expected a list", field="storage")
    gens = [_build(GeneratorClass, g, f"generators[{i}]") for i, g in enumerate(gens_raw)]
    stor = [_build(StorageUnit, s, f"storage[{i}]") for i, s in enumerate(stor_raw)]
    wind = raw.get("wind", {})
    if not isinstance(wind, dict) or set(wind) - {"capacity", "marginal_cost"}:
        raise SchemaError("expected {capacity, marginal_cost}", field="wind")
    econ = raw.get("economics", {})
    if not isinstance(econ, dict) or set(econ) - {"voll"}:
        raise SchemaError("expected {voll}", field="economics")
    freq = _build(FrequencyParams, raw.get("frequency", {}), "frequency")
    m = SystemModel(
        generators=gens,
        storage=stor,
        wind_capacity=_coerce(wind.get("capacity", 0.0), "float", "wind.capacity"),
        wind_marginal_cost=_coerce(wind.get("marginal_cost", 0.0), "float", "wind.marginal_cost"),
        freq=freq,
        voll=_coerce(econ.get("voll", 30000.0), "float", "economics.voll"),
    )
    return m.validate()


def parse_system(text: str) -> SystemModel:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, line=exc.lineno) from exc
    return system_from_dict(raw)


def load_system(path: str | Path) -> SystemModel:
    return parse_system(Path(path).read_text())


def dump_system(m: SystemModel, path: str | Path | None = None) -> str:
    text = json.dumps(system_to_dict(m), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
