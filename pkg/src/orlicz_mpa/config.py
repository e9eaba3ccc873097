"""Run configuration: INI loading, validation and problem assembly.

A config has the sections [problem], [grid], [solver], [sweep] and [output].
[problem] either names a builtin (``builtin = desk-scalar``) with optional
overrides of its parameters, or defines the problem by expressions:

    kind = scalar            # or system
    Phi1 = |t|^1.5/1.5       # the N-function itself, or
    phi1 = |t|^(-0.5)        # the kernel phi, Phi(t) = int_0^t s phi(s) ds
    V1 = 1
    F = |t|^2.2
    k = 2.2                  # pairs are written "a, b"
    r = 2.5
    mu = 2.2
    delta = 1                # scalar cut-off radius (the system uses 4)
"""
from __future__ import annotations

import configparser
import dataclasses
import io
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import expr
from .builtins import (BUILTINS, DeskScalar, DeskSystem, WORKED_INDICES, phi1_kernel,
                       phi2_kernel, worked_nonlinearity, V1_SRC, V2_SRC)
from .cutoff import CutoffFamily
from .energy import Problem
from .field import Grid
from .mpa import SolverConfig
from .nfunction import (GrowthKernel, HypothesisFailure, IndexPair, NFunction,
                        build_from_kernel, estimate_indices, power_nfunction)
from .nonlinearity import NonlinearitySpec, build_modified, build_scalar_modified


class ConfigError(ValueError):
    """Bad configuration; carries the line number when it is known."""

    def __init__(self, message, line: Optional[int] = None, field_name: Optional[str] = None):
        where = f"line {line}: " if line is not None else ""
        what = f"[{field_name}] " if field_name else ""
        super().__init__(f"{where}{what}{message}")
        self.line = line
        self.field_name = field_name


@dataclass(frozen=True)
class GridConfig:
    dim: int = 2
    n: int = 64
    L: float = 8.0

    def build(self) -> Grid:
        return Grid(self.dim, self.n, self.L)


@dataclass(frozen=True)
class SweepConfig:
    lam_min: float = 10.0
    lam_max: float = 1000.0
    points: int = 7
    log: bool = True

    def __post_init__(self):
        if not self.lam_min > 0:
            raise ConfigError("lam_min must be positive", field_name="sweep.lam_min")
        if self.points < 1:
            raise ConfigError("points must be at least 1", field_name="sweep.points")
        if self.points > 1 and not self.lam_max > self.lam_min:
            raise ConfigError("lam_max must exceed lam_min", field_name="sweep.lam_max")

    def lambdas(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.lam_min])
        if self.log:
            return np.logspace(np.log10(self.lam_min), np.log10(self.lam_max), self.points)
        return np.linspace(self.lam_min, self.lam_max, self.points)


PAIR_KEYS = ("k", "M12", "r", "M34", "Theta", "mu")


@dataclass(frozen=True)
class ProblemConfig:
    builtin: Optional[str] = None
    overrides: tuple = ()            # (name, value) pairs for builtin parameters
    kind: str = "scalar"
    Phi: tuple = (None, None)        # N-function expressions
    phi: tuple = (None, None)        # kernel expressions
    V: tuple = (None, None)
    F: Optional[str] = None
    constants: tuple = ()            # (name, pair) for PAIR_KEYS
    delta: float = 1.0
    D3: Optional[float] = None
    N: Optional[int] = None

    @property
    def scalar(self) -> bool:
        if self.builtin == "desk-scalar":
            return True
        if self.builtin in ("desk-system", "worked-example"):
            return False
        return self.kind == "scalar"


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig
    grid: GridConfig = GridConfig()
    solver: SolverConfig = SolverConfig()
    sweep: SweepConfig = SweepConfig()
    output_dir: str = "out"
    seed: int = 0
    source: Optional[str] = None

    @property
    def lam(self) -> float:
        """lambda used by single solves: solver.lam, else the sweep start."""
        return self.solver.lam if self.solver.lam is not None else self.sweep.lam_min

    def echo(self) -> str:
        """Effective configuration (defaults filled in) in INI form."""
        cp = configparser.ConfigParser()
        cp.optionxform = str
        p = self.problem
        sec = {}
        if p.builtin:
            sec["builtin"] = p.builtin
            sec.update({k: str(v) for k, v in p.overrides})
        else:
            sec["kind"] = p.kind
            for i in range(2 if not p.scalar else 1):
                if p.Phi[i]:
                    sec[f"Phi{i + 1}"] = p.Phi[i]
                if p.phi[i]:
                    sec[f"phi{i + 1}"] = p.phi[i]
                sec[f"V{i + 1}"] = p.V[i] or "1"
            sec["F"] = p.F or ""
            for k, v in p.constants:
                sec[k] = ", ".join(str(a) for a in v if a is not None)
            sec["delta"] = repr(p.delta)
            if p.D3 is not None:
                sec["D3"] = repr(p.D3)
        if p.N is not None:
            sec["N"] = str(p.N)
        cp["problem"] = sec
        cp["grid"] = {k: str(v) for k, v in dataclasses.asdict(self.grid).items()}
        cp["solver"] = {k: str(v) for k, v in dataclasses.asdict(self.solver).items() if v is not None}
        cp["sweep"] = {k: str(v) for k, v in dataclasses.asdict(self.sweep).items()}
        cp["output"] = {"dir": self.output_dir, "seed": str(self.seed)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


# parsing

_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_KEY = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _key_lines(text: str) -> dict:
    """(section, key) -> 1-based line number, for error messages."""
    out, section = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        m = _SECTION.match(line)
        if m:
            section = m.group(1).strip()
            continue
        m = _KEY.match(line)
        if m and section is not None:
            out[(section, m.group(1).strip())] = i
    return out


class _Reader:
    def __init__(self, cp, lines):
        self.cp, self.lines, self.used = cp, lines, set()

    def has(self, sec, key):
        return self.cp.has_option(sec, key)

    def raw(self, sec, key):
        self.used.add((sec, key))
        return self.cp.get(sec, key)

    def err(self, sec, key, msg):
        return ConfigError(msg, self.lines.get((sec, key)), f"{sec}.{key}")

    def get(self, sec, key, conv, default):
        if not self.has(sec, key):
            return default
        txt = self.raw(sec, key).strip()
        try:
            return conv(txt)
        except (ValueError, ArithmeticError) as exc:
            raise self.err(sec, key, f"cannot read {txt!r}: {exc}") from None

    def expression(self, sec, key):
        if not self.has(sec, key):
            return None
        txt = self.raw(sec, key).strip()
        try:
            expr.parse(txt)
        except expr.ExprSyntaxError as exc:
            raise self.err(sec, key, str(exc)) from None
        return txt


def _bool(txt):
    low = txt.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _number(txt):
    """Float, or an exact Fraction when written as a/b."""
    if "/" in txt:
        return Fraction(txt.replace(" ", ""))
    return float(txt)


def _pair(txt):
    parts = [p.strip() for p in txt.split(",")]
    if not 1 <= len(parts) <= 2:
        raise ValueError("expected one or two comma-separated numbers")
    vals = [_number(p) for p in parts]
    return tuple(vals) if len(vals) == 2 else (vals[0], None)


_SOLVER_TYPES = {f.name: f.type for f in dataclasses.fields(SolverConfig)}


def _solver_conv(name):
    typ = str(_SOLVER_TYPES[name])
    if "bool" in typ:
        return _bool
    if "int" in typ:
        return int
    return float


def parse_config(text: str, source: Optional[str] = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line) from None
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(exc.message if hasattr(exc, "message") else str(exc), line) from None
    rd = _Reader(cp, _key_lines(text))
    known = {"problem", "grid", "solver", "sweep", "output"}
    for sec in cp.sections():
        if sec not in known:
            line = next((i for i, l in enumerate(text.splitlines(), 1)
                         if _SECTION.match(l) and _SECTION.match(l).group(1).strip() == sec), None)
            raise ConfigError(f"unknown section [{sec}]", line)
    if not cp.has_section("problem"):
        raise ConfigError("missing [problem] section")

    problem = _parse_problem(rd)
    g = GridConfig()
    grid = GridConfig(rd.get("grid", "dim", int, g.dim), rd.get("grid", "n", int, g.n),
                      rd.get("grid", "L", float, g.L))
    try:
        grid.build()
    except ValueError as exc:
        raise ConfigError(str(exc), field_name="grid") from None

    skw = {}
    if cp.has_section("solver"):
        for key in cp.options("solver"):
            if key not in _SOLVER_TYPES:
                raise rd.err("solver", key, "unknown solver option")
            skw[key] = rd.get("solver", key, _solver_conv(key), None)
    try:
        solver = SolverConfig(**skw)
    except ValueError as exc:
        raise ConfigError(str(exc), field_name="solver") from None

    s = SweepConfig()
    sweep = SweepConfig(rd.get("sweep", "lam_min", float, s.lam_min),
                        rd.get("sweep", "lam_max", float, s.lam_max),
                        rd.get("sweep", "points", int, s.points),
                        rd.get("sweep", "log", _bool, s.log))
    out_dir = rd.get("output", "dir", str, "out")
    seed = rd.get("output", "seed", int, 0)
    for sec in ("problem", "grid", "sweep", "output"):
        if cp.has_section(sec):
            for key in cp.options(sec):
                if (sec, key) not in rd.used:
                    raise rd.err(sec, key, "unknown option")
    return RunConfig(problem, grid, solver, sweep, out_dir, seed, source)


_BUILTIN_FIELDS = {
    "desk-scalar": {f.name for f in dataclasses.fields(DeskScalar)},
    "desk-system": {f.name for f in dataclasses.fields(DeskSystem)},
    "worked-example": set(),
}


def _parse_problem(rd: _Reader) -> ProblemConfig:
    sec = "problem"
    N = rd.get(sec, "N", int, None)
    if rd.has(sec, "builtin"):
        name = rd.raw(sec, "builtin").strip()
        if name not in BUILTINS:
            raise rd.err(sec, "builtin", f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
        overrides = []
        for key in rd.cp.options(sec):
            if key in ("builtin", "N"):
                continue
            if key not in _BUILTIN_FIELDS[name]:
                raise rd.err(sec, key, f"not a parameter of builtin {name}")
            if key in ("M34", "Theta"):
                overrides.append((key, rd.get(sec, key, _pair, None)))
            elif key == "dim":
                overrides.append((key, rd.get(sec, key, int, None)))
            else:
                overrides.append((key, rd.get(sec, key, float, None)))
        return ProblemConfig(builtin=name, overrides=tuple(overrides), N=N)

    kind = rd.get(sec, "kind", str, "scalar")
    if kind not in ("scalar", "system"):
        raise rd.err(sec, "kind", "kind must be scalar or system")
    ncomp = 1 if kind == "scalar" else 2
    Phi = tuple(rd.expression(sec, f"Phi{i}") for i in (1, 2))
    phi = tuple(rd.expression(sec, f"phi{i}") for i in (1, 2))
    V = tuple(rd.expression(sec, f"V{i}") for i in (1, 2))
    for i in range(ncomp):
        if Phi[i] is None and phi[i] is None and not (i == 1 and (Phi[0] or phi[0])):
            raise ConfigError(f"component {i + 1} needs Phi{i + 1} or phi{i + 1}",
                              field_name=f"problem.Phi{i + 1}")
        if Phi[i] is not None and phi[i] is not None:
            raise rd.err(sec, f"phi{i + 1}", f"give Phi{i + 1} or phi{i + 1}, not both")
    F = rd.expression(sec, "F")
    if F is None:
        raise ConfigError("missing F", field_name="problem.F")
    consts = tuple((k, rd.get(sec, k, _pair, None)) for k in PAIR_KEYS if rd.has(sec, k))
    delta = rd.get(sec, "delta", float, 1.0)
    if not delta > 0:
        raise rd.err(sec, "delta", "delta must be positive")
    D3 = rd.get(sec, "D3", float, None)
    return ProblemConfig(kind=kind, Phi=Phi, phi=phi, V=V, F=F, constants=consts,
                         delta=delta, D3=D3, N=N)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config(p.read_text(), str(p))


# problem assembly

@dataclass
class Resolved:
    """Everything needed to check or solve a configured problem."""

    name: str
    nfs: list
    kernels: list                 # GrowthKernel or None per component
    indices: list                 # IndexPair per component
    spec: NonlinearitySpec
    potentials: tuple
    scalar: bool
    delta: float                  # cut-off radius
    D3: Optional[float] = None
    gridded: bool = True
    declared_indices: Optional[list] = None
    notes: list = field(default_factory=list)

    @property
    def inner_radius(self) -> float:
        """F~ coincides with F while the pointwise norm stays below this."""
        return self.delta / 2

    def modified(self):
        if self.scalar:
            return build_scalar_modified(self.spec, self.delta, self.D3)
        return build_modified(self.spec, CutoffFamily("sine", self.delta))

    def problem(self, grid: Grid, lam: float) -> Problem:
        if not self.gridded:
            raise ConfigError(f"{self.name} is a constants-only builtin and cannot be solved on a grid")
        return Problem(self.nfs, self.modified(), lam, grid, self.potentials, self.name)

    @property
    def r(self):
        return self.spec.r[0]


def _potential(src):
    if src is None:
        return None
    node = expr.parse(src)
    return lambda coords: expr.evaluate(node, {"x": coords})


def _nfunction_from_expression(src: str, name: str) -> NFunction:
    node = expr.parse(src)
    d = expr.differentiate(node, "t")
    val = expr.compile_expr(node, ("t",))
    der = expr.compile_expr(d, ("t",))

    def value(t):
        return val(np.abs(np.asarray(t, dtype=float)))

    def deriv(t):
        return der(np.abs(np.asarray(t, dtype=float)))

    return NFunction(value, deriv, name=name)


def _kernel_from_expression(src: str, name: str) -> GrowthKernel:
    fn = expr.compile_expr(expr.parse(src), ("t",))
    return GrowthKernel(phi=lambda t: fn(np.asarray(t, dtype=float)), name=name)


def resolve(cfg: RunConfig) -> Resolved:
    """Build kernels, N-functions, index pairs and F for a configuration.

    Raises HypothesisFailure when an N-function has lower index l <= 1.
    """
    p = cfg.problem
    N = p.N if p.N is not None else cfg.grid.dim
    if p.builtin == "worked-example":
        ks = [phi1_kernel(), phi2_kernel()]
        nfs = [build_from_kernel(k) for k in ks]
        est = [estimate_indices(nf, 6) for nf in nfs]
        return Resolved("worked-example", nfs, ks, est, worked_nonlinearity(),
                        (_potential(V1_SRC), _potential(V2_SRC)), False, 4.0, gridded=False,
                        declared_indices=[WORKED_INDICES, WORKED_INDICES])
    if p.builtin in ("desk-scalar", "desk-system"):
        cls = DeskScalar if p.builtin == "desk-scalar" else DeskSystem
        b = cls(**dict(p.overrides))
        ip = IndexPair(b.p, b.p, N)
        nf = power_nfunction(b.p)
        if p.builtin == "desk-scalar":
            return Resolved(p.builtin, [nf], [b.kernel()], [ip], b.nonlinearity(), (None,),
                            True, b.delta, b.D3)
        return Resolved(p.builtin, [nf, nf], [b.kernel()] * 2, [ip, ip], b.nonlinearity(),
                        (None, None), False, 4.0)

    ncomp = 1 if p.scalar else 2
    nfs, kernels = [], []
    for i in range(ncomp):
        j = i if (p.Phi[i] or p.phi[i]) else 0
        if p.Phi[j]:
            nfs.append(_nfunction_from_expression(p.Phi[j], f"Phi{i + 1}"))
            kernels.append(None)
        else:
            k = _kernel_from_expression(p.phi[j], f"phi{i + 1}")
            kernels.append(k)
            nfs.append(build_from_kernel(k))
    indices = [estimate_indices(nf, N) for nf in nfs]
    consts = {k: v for k, v in p.constants}
    spec = NonlinearitySpec.from_expression(p.F, scalar=p.scalar, **consts)
    pots = tuple(_potential(p.V[i]) for i in range(ncomp))
    delta = p.delta if p.scalar else 4.0
    return Resolved("expression", nfs, kernels, indices, spec, pots, p.scalar, delta, p.D3)


__all__ = ["ConfigError", "GridConfig", "SweepConfig", "ProblemConfig", "RunConfig",
           "parse_config", "load_config", "resolve", "Resolved", "HypothesisFailure"]
