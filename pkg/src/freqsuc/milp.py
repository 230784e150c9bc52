"""Solver-neutral MILP container, MPS exchange and backend dispatch.

Models are built with :class:`MilpModel` from :class:`Var` handles and
:class:`LinExpr` combinations. Every model minimizes. Two backends ship:

``scipy``
    in-process, through :func:`scipy.optimize.milp` (HiGHS branch and bound).
``highs``
    file exchange: the model is exported to MPS, read back and solved by the
    HiGHS library, and the HiGHS solution file is parsed.
``highs-cli``
    same file exchange through a HiGHS executable given by ``solver.path``.
"""

from __future__ import annotations

import math
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from .errors import ConfigurationError, ModelError, SchemaError

INF = math.inf
KINDS = ("continuous", "integer", "binary")
SENSES = ("<=", ">=", "==")


class Var:
    __slots__ = ("model", "index", "name", "kind", "lb", "ub")

    def __init__(self, model, index, name, kind, lb, ub):
        self.model = model
        self.index = index
        self.name = name
        self.kind = kind
        self.lb = lb
        self.ub = ub

    def __repr__(self):
        return f"Var({self.name!r}, {self.kind}, [{self.lb}, {self.ub}])"

    @property
    def is_integral(self) -> bool:
        return self.kind != "continuous"

    def _expr(self) -> "LinExpr":
        return LinExpr({self: 1.0})

    def __add__(self, other):
        return self._expr() + other

    __radd__ = __add__

    def __sub__(self, other):
        return self._expr() - other

    def __rsub__(self, other):
        return other - self._expr()

    def __mul__(self, k):
        return self._expr() * k

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self._expr() * (1.0 / k)

    def __neg__(self):
        return self._expr() * -1.0


class LinExpr:
    __slots__ = ("terms", "const")

    def __init__(self, terms: Mapping[Var, float] | None = None, const: float = 0.0):
        self.terms: dict[Var, float] = dict(terms) if terms else {}
        self.const = float(const)

    @staticmethod
    def of(x) -> "LinExpr":
        if isinstance(x, LinExpr):
            return x
        if isinstance(x, Var):
            return x._expr()
        if isinstance(x, (int, float, np.floating, np.integer)):
            return LinExpr(const=float(x))
        raise TypeError(f"cannot use {type(x).__name__} in a linear expression")

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def iadd(self, other, k: float = 1.0) -> "LinExpr":
        """In-place ``self += k * other``; the workhorse for large sums."""
        if isinstance(other, Var):
            self.terms[other] = self.terms.get(other, 0.0) + k
        elif isinstance(other, LinExpr):
            for v, c in other.terms.items():
                self.terms[v] = self.terms.get(v, 0.0) + k * c
            self.const += k * other.const
        else:
            self.const += k * float(other)
        return self

    def __add__(self, other):
        return self.copy().iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().iadd(other, -1.0)

    def __rsub__(self, other):
        return (self * -1.0).iadd(other)

    def __mul__(self, k):
        if isinstance(k, (Var, LinExpr)):
            raise TypeError("product of two expressions is not linear")
        k = float(k)
        return LinExpr({v: c * k for v, c in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1.0 / k)

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        parts = [f"{c:+g}*{v.name}" for v, c in self.terms.items()]
        if self.const or not parts:
            parts.append(f"{self.const:+g}")
        return " ".join(parts)


def lin_sum(items: Iterable, coeffs: Iterable[float] | None = None) -> LinExpr:
    out = LinExpr()
    if coeffs is None:
        for x in items:
            out.iadd(x)
    else:
        for x, k in zip(items, coeffs):
            out.iadd(x, k)
    return out


@dataclass
class Constraint:
    name: str
    terms: dict[Var, float]
    sense: str
    rhs: float
    index: int = -1

    def activity(self, values: np.ndarray) -> float:
        return sum(c * values[v.index] for v, c in self.terms.items())


@dataclass
class MilpModel:
    name: str = "MODEL"
    variables: list[Var] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: LinExpr = field(default_factory=LinExpr)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self._vnames: dict[str, Var] = {v.name: v for v in self.variables}
        self._cnames: dict[str, Constraint] = {c.name: c for c in self.constraints}

    # -- builder surface ----------------------------------------------------

    def add_variable(self, name: str, kind: str = "continuous", lb: float = 0.0, ub: float = INF) -> Var:
        if name in self._vnames:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind not in KINDS:
            raise ModelError(f"unknown variable kind {kind!r}")
        lb, ub = float(lb), float(ub)
        if kind == "binary":
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        if lb > ub:
            raise ModelError(f"variable {name!r}: lower bound {lb} exceeds upper bound {ub}")
        v = Var(self, len(self.variables), name, kind, lb, ub)
        self.variables.append(v)
        self._vnames[name] = v
        return v

    def add_constraint(self, name: str, lhs, sense: str, rhs=0.0) -> Constraint:
        if name in self._cnames:
            raise ModelError(f"duplicate constraint name {name!r}")
        if sense not in SENSES:
            raise ModelError(f"unknown sense {sense!r}")
        expr = LinExpr.of(lhs) - LinExpr.of(rhs)
        terms = {}
        for v, c in expr.terms.items():
            if v.model is not self:
                raise ModelError(f"constraint {name!r} references {v.name!r} from another model")
            if c != 0.0:
                terms[v] = c
        con = Constraint(name, terms, sense, -expr.const, len(self.constraints))
        self.constraints.append(con)
        self._cnames[name] = con
        return con

    def set_objective(self, expr, sense: str = "minimize") -> None:
        if sense != "minimize":
            raise ModelError("only minimization is supported; negate the objective")
        expr = LinExpr.of(expr)
        for v in expr.terms:
            if v.model is not self:
                raise ModelError(f"objective references {v.name!r} from another model")
        self.objective = expr

    def var(self, name: str) -> Var:
        try:
            return self._vnames[name]
        except KeyError:
            raise ModelError(f"unknown variable {name!r}") from None

    def has_var(self, name: str) -> bool:
        return name in self._vnames

    def constraint(self, name: str) -> Constraint:
        try:
            return self._cnames[name]
        except KeyError:
            raise ModelError(f"unknown constraint {name!r}") from None

    def fix(self, v: Var, value: float) -> None:
        if v.model is not self:
            raise ModelError(f"{v.name!r} belongs to another model")
        v.lb = v.ub = float(value)

    # -- inspection -----------------------------------------------------------

    def count(self, kind: str) -> int:
        return sum(1 for v in self.variables if v.kind == kind)

    @property
    def is_mip(self) -> bool:
        return any(v.is_integral for v in self.variables)

    def validate(self) -> "MilpModel":
        for v in self.variables:
            if v.lb > v.ub:
                raise ModelError(f"variable {v.name!r}: lb > ub")
            if v.kind == "binary" and (v.lb < 0 or v.ub > 1):
                raise ModelError(f"binary {v.name!r} has bounds outside [0, 1]")
        for c in self.constraints:
            for v in c.terms:
                if v.model is not self or self.variables[v.index] is not v:
                    raise ModelError(f"constraint {c.name!r} references a foreign variable")
        return self

    def to_arrays(self):
        """Dense-vector/sparse-matrix form: (c, A, row_lb, row_ub, lb, ub, integrality)."""
        n = len(self.variables)
        c = np.zeros(n)
        for v, k in self.objective.terms.items():
            c[v.index] += k
        rows, cols, vals = [], [], []
        row_lb = np.empty(len(self.constraints))
        row_ub = np.empty(len(self.constraints))
        for i, con in enumerate(self.constraints):
            for v, k in con.terms.items():
                rows.append(i)
                cols.append(v.index)
                vals.append(k)
            row_lb[i] = con.rhs if con.sense in (">=", "==") else -INF
            row_ub[i] = con.rhs if con.sense in ("<=", "==") else INF
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(self.constraints), n))
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        integrality = np.array([1 if v.is_integral else 0 for v in self.variables])
        return c, A, row_lb, row_ub, lb, ub, integrality

    def max_violation(self, values: np.ndarray) -> float:
        worst = 0.0
        for con in self.constraints:
            a = con.activity(values)
            if con.sense == "<=":
                worst = max(worst, a - con.rhs)
            elif con.sense == ">=":
                worst = max(worst, con.rhs - a)
            else:
                worst = max(worst, abs(a - con.rhs))
        for v in self.variables:
            worst = max(worst, v.lb - values[v.index], values[v.index] - v.ub)
        return worst


# -- product linearization ---------------------------------------------------


def linearize_product_bin_cont(
    model: MilpModel, w_name: str, x, z: Var, M: float | None = None, L: float = 0.0
) -> Var:
    """Add ``w = x * z`` for binary ``z`` and ``L <= x <= M`` with big-M rows.

    ``x`` may be a variable (``M`` defaults to its upper bound) or a linear
    expression, in which case ``M`` is required. With ``L = 0`` the lower
    envelope ``w >= L z`` is carried by the bound ``w >= 0``.
    """
    if z.kind != "binary":
        raise ModelError(f"{z.name!r} is not binary")
    if M is None:
        if not isinstance(x, Var) or not math.isfinite(x.ub):
            raise ModelError(f"product {w_name!r}: a finite bound M on x is required")
        M = x.ub
    M, L = float(M), float(L)
    if not 0.0 <= L <= M:
        raise ModelError(f"product {w_name!r}: need 0 <= L <= M, got L={L}, M={M}")
    w = model.add_variable(w_name, "continuous", 0.0, M)
    model.add_constraint(f"{w_name}_mz", LinExpr.of(w) - M * z, "<=", 0.0)
    model.add_constraint(f"{w_name}_ux", LinExpr.of(w) - x - L * z, "<=", -L)
    model.add_constraint(f"{w_name}_lx", LinExpr.of(w) - x - M * z, ">=", -M)
    if L > 0.0:
        model.add_constraint(f"{w_name}_lz", LinExpr.of(w) - L * z, ">=", 0.0)
    return w


# -- MPS ---------------------------------------------------------------------


def _num(v: float) -> str:
    s = "%.12g" % v
    return "0" if s == "-0" else s


def _short_names(names: list[str], prefix: str) -> list[str]:
    if all(len(n) <= 8 and not re.search(r"\s", n) for n in names) and len(set(names)) == len(names):
        return list(names)
    return [f"{prefix}{i:07d}" for i in range(len(names))]


def _field_line(code: str, a: str, b: str = "", v1: str = "", c: str = "", v2: str = "") -> str:
    return f" {code:<2} {a:<8}  {b:<8}  {v1:<12}   {c:<8}  {v2:<12}".rstrip()


def export_model(model: MilpModel, path: str | Path) -> Path:
    """Write ``model`` as column-aligned MPS in declaration order.

    Names longer than 8 characters are replaced by positional names
    (``C0000012`` for the 13th variable, ``R0000003`` for the 4th row) so that
    every file can also be read by strict fixed-format parsers as long as the
    numbers fit their 12-character fields.
    """
    model.validate()
    path = Path(path)
    cnames = _short_names([v.name for v in model.variables], "C")
    rnames = _short_names([c.name for c in model.constraints], "R")
    obj = "COST"
    while obj in rnames:
        obj = obj + "_"

    col_entries: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for v, k in model.objective.terms.items():
        if k != 0.0:
            col_entries[v.index].append((obj, k))
    for i, con in enumerate(model.constraints):
        for v, k in con.terms.items():
            col_entries[v.index].append((rnames[i], k))

    lines = [f"NAME          {model.name[:8] or 'MODEL'}", "ROWS", f" N  {obj}"]
    code = {"<=": "L", ">=": "G", "==": "E"}
    for i, con in enumerate(model.constraints):
        lines.append(f" {code[con.sense]}  {rnames[i]}")
    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for v, entries in zip(model.variables, col_entries):
        if v.is_integral != in_int:
            tag = "'INTORG'" if v.is_integral else "'INTEND'"
            lines.append(f"    M{marker:07d}  'MARKER'                 {tag}")
            marker += 1
            in_int = v.is_integral
        name = cnames[v.index]
        if not entries:
            # a column must appear at least once to be declared
            entries = [(obj, 0.0)]
        for j in range(0, len(entries), 2):
            pair = entries[j : j + 2]
            if len(pair) == 2:
                lines.append(_field_line("", name, pair[0][0], _num(pair[0][1]), pair[1][0], _num(pair[1][1])))
            else:
                lines.append(_field_line("", name, pair[0][0], _num(pair[0][1])))
    if in_int:
        lines.append(f"    M{marker:07d}  'MARKER'                 'INTEND'")
    lines.append("RHS")
    rhs = [(rnames[i], c.rhs) for i, c in enumerate(model.constraints) if c.rhs != 0.0]
    for j in range(0, len(rhs), 2):
        pair = rhs[j : j + 2]
        if len(pair) == 2:
            lines.append(_field_line("", "RHS", pair[0][0], _num(pair[0][1]), pair[1][0], _num(pair[1][1])))
        else:
            lines.append(_field_line("", "RHS", pair[0][0], _num(pair[0][1])))
    lines.append("BOUNDS")
    for v in model.variables:
        name = cnames[v.index]
        if v.kind == "binary" and v.lb == 0.0 and v.ub == 1.0:
            lines.append(_field_line("BV", "BND", name))
            continue
        if v.lb == v.ub:
            lines.append(_field_line("FX", "BND", name, _num(v.lb)))
            continue
        if v.lb == -INF and v.ub == INF:
            lines.append(_field_line("FR", "BND", name))
            continue
        if v.lb == -INF:
            lines.append(_field_line("MI", "BND", name))
        elif v.lb != 0.0 or v.is_integral:
            lines.append(_field_line("LO", "BND", name, _num(v.lb)))
        if v.ub != INF:
            lines.append(_field_line("UP", "BND", name, _num(v.ub)))
        elif v.is_integral:
            lines.append(_field_line("PL", "BND", name))
    lines.append("ENDATA")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_mps(path: str | Path) -> MilpModel:
    """Parse the MPS subset written by :func:`export_model` (free or fixed layout)."""
    text = Path(path).read_text().splitlines()
    model = MilpModel()
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    obj_row = None
    cols: dict[str, dict[str, float]] = {}
    col_order: list[str] = []
    col_int: dict[str, bool] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list] = {}
    integer_block = False
    for lineno, raw in enumerate(text, start=1):
        if not raw.strip() or raw.startswith("*"):
            continue
        tok = raw.split()
        if not raw[0].isspace():
            section = tok[0]
            if section == "NAME":
                model.name = tok[1] if len(tok) > 1 else "MODEL"
            elif section == "RANGES":
                raise SchemaError("RANGES section is not supported", line=lineno)
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
                raise SchemaError(f"unknown section {section}", line=lineno)
            continue
        if section == "ROWS":
            s, name = tok
            if s == "N":
                obj_row = obj_row or name
            else:
                row_sense[name] = {"L": "<=", "G": ">=", "E": "=="}[s]
                row_order.append(name)
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                integer_block = tok[2] == "'INTORG'"
                continue
            name = tok[0]
            if name not in cols:
                cols[name] = {}
                col_order.append(name)
                col_int[name] = integer_block
            for r, val in zip(tok[1::2], tok[2::2]):
                cols[name][r] = cols[name].get(r, 0.0) + float(val)
        elif section == "RHS":
            for r, val in zip(tok[1::2], tok[2::2]):
                rhs[r] = float(val)
        elif section == "BOUNDS":
            bounds.setdefault(tok[2], []).append((tok[0], float(tok[3]) if len(tok) > 3 else None))
    for name in col_order:
        kind = "integer" if col_int[name] else "continuous"
        lb, ub = 0.0, INF
        for code, val in bounds.get(name, []):
            if code == "UP":
                ub = val
            elif code == "LO":
                lb = val
            elif code == "FX":
                lb = ub = val
            elif code == "FR":
                lb, ub = -INF, INF
            elif code == "MI":
                lb = -INF
            elif code == "PL":
                ub = INF
            elif code == "BV":
                kind, lb, ub = "binary", 0.0, 1.0
            else:
                raise SchemaError(f"unsupported bound type {code}", field=name)
        model.add_variable(name, kind, lb, ub)
    row_terms: dict[str, dict[Var, float]] = {r: {} for r in row_order}
    obj = LinExpr()
    for name in col_order:
        v = model.var(name)
        for r, val in cols[name].items():
            if r == obj_row:
                obj.iadd(v, val)
            elif r in row_terms:
                row_terms[r][v] = val
            else:
                raise SchemaError(f"column {name} references unknown row {r}")
    model.set_objective(obj)
    for r in row_order:
        model.add_constraint(r, LinExpr(row_terms[r]), row_sense[r], rhs.get(r, 0.0))
    return model


# -- solving -----------------------------------------------------------------


@dataclass
class Solution:
    status: str  # optimal | gap-feasible | infeasible | unbounded | error
    values: np.ndarray | None
    objective: float | None
    gap: float | None
    solve_time: float
    message: str = ""
    backend: str = ""
    # best integer-feasible point when a limit stopped the search above the
    # requested gap; ``values`` stays None in that case
    incumbent: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "gap-feasible")

    @property
    def limit_reached(self) -> bool:
        return self.status == "error" and self.incumbent is not None

    def value(self, x) -> float:
        if self.values is None:
            raise ValueError(f"no values available (status {self.status})")
        if isinstance(x, Var):
            return float(self.values[x.index])
        e = LinExpr.of(x)
        return e.const + sum(c * self.values[v.index] for v, c in e.terms.items())

    __getitem__ = value


def _classify(finished: bool, gap: float | None, requested: float) -> str:
    if not finished:
        return "gap-feasible" if gap is not None and gap <= requested else "error"
    if gap is None or gap <= 1e-9:
        return "optimal"
    return "gap-feasible"


def _solve_scipy(model: MilpModel, gap: float, time_limit: float | None, **_) -> Solution:
    from scipy.optimize import Bounds, LinearConstraint, milp

    c, A, rl, ru, lb, ub, integrality = model.to_arrays()
    options = {"disp": False, "mip_rel_gap": gap}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    cons = [LinearConstraint(A, rl, ru)] if A.shape[0] else []
    t0 = time.perf_counter()
    res = milp(c, constraints=cons, integrality=integrality, bounds=Bounds(lb, ub), options=options)
    elapsed = time.perf_counter() - t0
    if res.status == 2:
        return Solution("infeasible", None, None, None, elapsed, res.message, "scipy")
    if res.status == 3:
        return Solution("unbounded", None, None, None, elapsed, res.message, "scipy")
    if res.x is None:
        return Solution("error", None, None, None, elapsed, res.message, "scipy")
    mgap = getattr(res, "mip_gap", None)
    mgap = 0.0 if (mgap is None or not model.is_mip) else float(mgap)
    status = _classify(res.status == 0, mgap, gap)
    x = np.asarray(res.x, dtype=float)
    if status == "error":
        msg = f"{res.message} (gap {mgap:.3g})"
        return Solution("error", None, None, mgap, elapsed, msg, "scipy", incumbent=x)
    return Solution(status, x, float(c @ x) + model.objective.const, mgap, elapsed, res.message, "scipy")


def parse_highs_solution(path: str | Path, names: list[str]) -> tuple[str, np.ndarray | None]:
    """Read a HiGHS raw solution file; returns (model status text, column values)."""
    lines = Path(path).read_text().splitlines()
    status = lines[1].strip() if len(lines) > 1 else ""
    values = None
    for i, line in enumerate(lines):
        if line.startswith("# Columns"):
            n = int(line.split()[2])
            by_name = {}
            for entry in lines[i + 1 : i + 1 + n]:
                name, val = entry.rsplit(None, 1)
                by_name[name] = float(val)
            if len(by_name) != len(names):
                raise SchemaError("solution file column count does not match the model", field=str(path))
            values = np.array([by_name[n_] for n_ in names])
            break
        if line.startswith("# Primal solution values") and i + 1 < len(lines) and lines[i + 1].strip() == "None":
            break
    return status, values


def _status_from_text(text: str) -> str:
    t = text.lower()
    if t == "optimal":
        return "finished"
    if "infeasible" in t and "unbounded" not in t:
        return "infeasible"
    if "unbounded" in t and "infeasible" not in t:
        return "unbounded"
    if "time limit" in t or "iteration limit" in t or "node limit" in t:
        return "limit"
    return "error"


def _file_paths(model: MilpModel, workdir):
    tmp = None
    if workdir is None:
        tmp = tempfile.TemporaryDirectory(prefix="freqsuc_")
        workdir = tmp.name
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    mps = export_model(model, workdir / "model.mps")
    return tmp, workdir, mps


def _finish_file_solve(model, status_text, values, mip_gap, gap, elapsed, backend) -> Solution:
    kind = _status_from_text(status_text)
    if kind in ("infeasible", "unbounded"):
        return Solution(kind, None, None, None, elapsed, status_text, backend)
    if values is None or kind == "error":
        return Solution("error", None, None, None, elapsed, status_text, backend)
    mgap = 0.0 if not model.is_mip else mip_gap
    status = _classify(kind == "finished", mgap, gap)
    if status == "error":
        msg = f"{status_text} (gap {mgap})"
        return Solution("error", None, None, mgap, elapsed, msg, backend, incumbent=values)
    c = model.to_arrays()[0]
    return Solution(status, values, float(c @ values) + model.objective.const, mgap, elapsed, status_text, backend)


def _solve_highs_file(
    model: MilpModel, gap: float, time_limit: float | None, workdir=None, seed=0, start=None, options=None, **_
) -> Solution:
    try:
        import highspy
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise ConfigurationError("backend 'highs' needs the highspy package") from exc
    tmp, workdir, mps = _file_paths(model, workdir)
    try:
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("threads", 1)
        h.setOptionValue("random_seed", int(seed))
        h.setOptionValue("mip_rel_gap", float(gap))
        if time_limit is not None:
            h.setOptionValue("time_limit", float(time_limit))
        for key, val in (options or {}).items():
            if h.setOptionValue(key, val) != highspy.HighsStatus.kOk:
                raise ConfigurationError(f"HiGHS rejected option {key}={val!r}")
        if h.readModel(str(mps)) not in (highspy.HighsStatus.kOk, highspy.HighsStatus.kWarning):
            return Solution("error", None, None, None, 0.0, "HiGHS rejected the model file", "highs")
        if start is not None:
            hs = highspy.HighsSolution()
            hs.col_value = [float(v) for v in start]
            hs.value_valid = True
            h.setSolution(hs)
        t0 = time.perf_counter()
        h.run()
        elapsed = time.perf_counter() - t0
        sol = workdir / "model.sol"
        h.writeSolution(str(sol), 0)
        names = list(h.getLp().col_names_)
        status_text, values = parse_highs_solution(sol, names)
        mip_gap = float(h.getInfo().mip_gap) if model.is_mip else 0.0
        if not math.isfinite(mip_gap):
            mip_gap = None
        return _finish_file_solve(model, status_text, values, mip_gap, gap, elapsed, "highs")
    finally:
        if tmp is not None:
            tmp.cleanup()


def _solve_highs_cli(
    model: MilpModel, gap: float, time_limit: float | None, path=None, workdir=None, seed=0, options=None, **_
):
    exe = path or shutil.which("highs")
    if not exe or not Path(exe).exists():
        raise ConfigurationError("backend 'highs-cli' needs solver.path pointing at a HiGHS executable")
    tmp, workdir, mps = _file_paths(model, workdir)
    try:
        opts = workdir / "highs.opt"
        lines = [f"mip_rel_gap = {gap}", "threads = 1", f"random_seed = {int(seed)}"]
        if time_limit is not None:
            lines.append(f"time_limit = {float(time_limit)}")
        lines += [f"{k} = {v}" for k, v in (options or {}).items()]
        opts.write_text("\n".join(lines) + "\n")
        sol = workdir / "model.sol"
        t0 = time.perf_counter()
        proc = subprocess.run(
            [exe, "--model_file", str(mps), "--solution_file", str(sol), "--options_file", str(opts)],
            capture_output=True,
            text=True,
        )
        elapsed = time.perf_counter() - t0
        if proc.returncode != 0 or not sol.exists():
            return Solution("error", None, None, None, elapsed, proc.stdout[-2000:] + proc.stderr[-2000:], "highs-cli")
        names = _short_names([v.name for v in model.variables], "C")
        status_text, values = parse_highs_solution(sol, names)
        m = re.search(r"Gap\s*\|?\s*([0-9.eE+-]+)%", proc.stdout)
        mip_gap = float(m.group(1)) / 100 if m else (0.0 if status_text == "Optimal" else None)
        return _finish_file_solve(model, status_text, values, mip_gap, gap, elapsed, "highs-cli")
    finally:
        if tmp is not None:
            tmp.cleanup()


BACKENDS = {"scipy": _solve_scipy, "highs": _solve_highs_file, "highs-cli": _solve_highs_cli}


def solve(
    model: MilpModel,
    gap: float = 1e-3,
    time_limit: float | None = None,
    backend: str = "scipy",
    path: str | None = None,
    workdir: str | Path | None = None,
    seed: int = 0,
    start: np.ndarray | None = None,
    options: Mapping | None = None,
) -> Solution:
    """Solve ``model`` with the named backend.

    ``start`` is an optional starting point in variable order; only the
    ``highs`` backend uses it. ``options`` are extra backend option values
    (HiGHS option names for the HiGHS backends, ignored by ``scipy``).
    A limit that stops the search above ``gap`` yields status ``error`` with the
    best point, if any, in ``Solution.incumbent``.
    """
    if gap < 0:
        raise ValueError("gap must be >= 0")
    try:
        fn = BACKENDS[backend]
    except KeyError:
        raise ConfigurationError(f"unknown solver backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    model.validate()
    try:
        if start is not None and len(start) != len(model.variables):
            raise ModelError(f"start has {len(start)} entries for {len(model.variables)} variables")
        return fn(model, gap, time_limit, path=path, workdir=workdir, seed=seed, start=start, options=options)
    except (ConfigurationError, ModelError):
        raise
    except Exception as exc:  # solver crashed; surface diagnostics instead of propagating
        return Solution("error", None, None, None, 0.0, f"{type(exc).__name__}: {exc}", backend)
