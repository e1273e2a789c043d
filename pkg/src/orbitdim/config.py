"""Text format for system definitions.

An INI file with these sections (keys are case sensitive, unknown keys are
rejected)::

    [system]
    name = k2
    kind = map                 ; map | flow
    variables = x
    fixed_point = 0            ; defaults to the origin
    description = ...
    provenance = ...
    box_radius = 1000          ; flows only

    [equations]
    x = x - x^2

    [parameters]               ; optional named constants
    a = 0.5

    [orbit]                    ; or [orbit:label], any number of them
    x1 = 0.5
    direction = forward        ; forward | inverse | backward (flows)
    max_n = 1000000
    delta = 1e-12
    manifold_axis = 0          ; optional: iterate the restricted map, then lift
    expected_dimension = 0.5
    tolerance = 0.05
    provenance = ...

    [expected]
    verdict = nonhyperbolic
    k = 2
    provenance = ...

    [manifold]                 ; defaults for the manifold command
    axis = 0
    order = 5

    [run]                      ; defaults for command-line parameters
    eps_samples = 48
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType

from .dynsys import DEFAULT_DELTA, DEFAULT_MAX_N, FlowSystem, MapSystem
from .expr import ExpressionError

__all__ = [
    "ConfigError",
    "OrbitSpec",
    "SystemConfig",
    "RunParameters",
    "parse_config",
    "load_config",
    "parse_assignments",
    "parse_vector",
]

VERDICTS = (
    "hyperbolic_stable",
    "hyperbolic_unstable",
    "hyperbolic_saddle",
    "nonhyperbolic",
)

_SECTION_KEYS = {
    "system": {"name", "kind", "variables", "fixed_point", "description", "provenance", "box_radius"},
    "orbit": {
        "x1", "direction", "max_n", "delta", "radius", "manifold_axis",
        "expected_dimension", "tolerance", "provenance",
    },
    "expected": {"verdict", "k", "provenance"},
    "manifold": {"axis", "order"},
    "run": {"x0", "max_n", "delta", "eps_samples", "theta", "eta", "order", "seed"},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OrbitSpec:
    label: str
    x1: tuple[float, ...]
    direction: str = "forward"
    max_n: int = DEFAULT_MAX_N
    delta: float = DEFAULT_DELTA
    radius: float | None = None
    manifold_axis: int | None = None
    expected_dimension: float | None = None
    tolerance: float = 0.05
    provenance: str = ""


@dataclass(frozen=True)
class RunParameters:
    """Command parameters with their documented ranges."""

    x0: tuple[float, ...] | None = None
    max_n: int | None = None
    delta: float | None = None
    eps_samples: int = 48
    theta: float = 0.2
    eta: float = 1e-6
    order: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_n is not None and not 1 <= self.max_n <= 10**8:
            raise ConfigError("max_n must be in [1, 1e8]")
        if self.delta is not None and not (self.delta > 0 and math.isfinite(self.delta)):
            raise ConfigError("delta must be positive")
        if not 32 <= self.eps_samples <= 4096:
            raise ConfigError("eps_samples must be in [32, 4096]")
        if not 0 < self.theta < 1:
            raise ConfigError("theta must be in (0, 1)")
        if not 0 <= self.eta < 1:
            raise ConfigError("eta must be in [0, 1)")
        if self.order is not None and not 2 <= self.order <= 5:
            raise ConfigError("order must be in [2, 5]")
        if self.x0 is not None and not all(math.isfinite(v) for v in self.x0):
            raise ConfigError("x0 must be finite")


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """A system definition together with its designated orbits and expectations."""

    name: str
    kind: str
    variables: tuple[str, ...]
    equations: tuple[str, ...]
    fixed_point: tuple[float, ...]
    parameters: MappingProxyType
    orbits: MappingProxyType  # label -> OrbitSpec; "default" comes first
    expected_verdict: str | None = None
    expected_k: int | None = None
    expected_provenance: str = ""
    description: str = ""
    provenance: str = ""
    box_radius: float = 1e3
    manifold_axis: int | None = None
    manifold_order: int | None = None
    run: RunParameters = field(default_factory=RunParameters)
    system: MapSystem | FlowSystem = field(default=None, repr=False)

    def __post_init__(self):
        if self.system is None:
            object.__setattr__(self, "system", self._build(dict(self.parameters)))

    def _build(self, params):
        try:
            if self.kind == "map":
                return MapSystem(self.equations, self.variables, self.fixed_point, self.name, params)
            return FlowSystem(
                self.equations, self.variables, self.fixed_point, self.name, params,
                box_radius=self.box_radius,
            )
        except (ExpressionError, ValueError) as exc:
            raise ConfigError(f"system {self.name!r}: {exc}") from exc

    @property
    def designated_orbit(self) -> OrbitSpec | None:
        return next(iter(self.orbits.values()), None)

    def with_parameters(self, overrides: dict[str, float]) -> "SystemConfig":
        unknown = set(overrides) - set(self.parameters)
        if unknown:
            raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for {self.name!r}")
        params = dict(self.parameters)
        params.update({k: float(v) for k, v in overrides.items()})
        return replace(self, parameters=MappingProxyType(params), system=None)


def parse_vector(text: str, n: int | None = None, what: str = "vector") -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{what}: cannot parse {text!r} as numbers") from None
    if n is not None and len(values) != n:
        raise ConfigError(f"{what}: expected {n} values, got {len(values)}")
    if not all(math.isfinite(v) for v in values):
        raise ConfigError(f"{what}: values must be finite")
    return values


def parse_assignments(text: str) -> dict[str, float]:
    """``"a=1, b=2"`` -> ``{"a": 1.0, "b": 2.0}``."""
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise ConfigError(f"expected name=value, got {part.strip()!r}")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ConfigError(f"parameter {k.strip()!r}: {v.strip()!r} is not a number") from None
    return out


def _check_keys(section_name, kind, section):
    unknown = set(section) - _SECTION_KEYS[kind]
    if unknown:
        raise ConfigError(f"[{section_name}]: unknown key(s) {sorted(unknown)}")


def _num(section, key, cast=float, default=None, where=""):
    if key not in section:
        return default
    try:
        return cast(section[key])
    except ValueError:
        raise ConfigError(f"[{where}] {key}: cannot parse {section[key]!r}") from None


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError(text)
    return int(v)


def parse_config(text: str, source: str = "<config>") -> SystemConfig:
    cp = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=(";",),
        interpolation=None, default_section="\0defaults",
    )
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    known = {"system", "equations", "parameters", "expected", "manifold", "run"}
    for sec in cp.sections():
        if sec not in known and sec != "orbit" and not sec.startswith("orbit:"):
            raise ConfigError(f"{source}: unknown section [{sec}]")
    if "system" not in cp or "equations" not in cp:
        raise ConfigError(f"{source}: [system] and [equations] sections are required")

    sysec = cp["system"]
    _check_keys("system", "system", sysec)
    kind = sysec.get("kind", "map").strip()
    if kind not in ("map", "flow"):
        raise ConfigError(f"[system] kind must be 'map' or 'flow', got {kind!r}")
    if "variables" not in sysec:
        raise ConfigError("[system] variables is required")
    variables = tuple(v.strip() for v in sysec["variables"].split(",") if v.strip())
    n = len(variables)
    eqsec = cp["equations"]
    if set(eqsec) != set(variables):
        raise ConfigError(
            f"[equations] must define exactly the variables {list(variables)}, got {list(eqsec)}"
        )
    equations = tuple(eqsec[v] for v in variables)
    fixed_point = (
        parse_vector(sysec["fixed_point"], n, "fixed_point") if "fixed_point" in sysec else (0.0,) * n
    )
    params = {}
    if "parameters" in cp:
        for k, v in cp["parameters"].items():
            try:
                params[k] = float(v)
            except ValueError:
                raise ConfigError(f"[parameters] {k}: {v!r} is not a number") from None

    orbits = {}
    orbit_sections = [s for s in cp.sections() if s == "orbit" or s.startswith("orbit:")]
    for sec in orbit_sections:
        o = cp[sec]
        _check_keys(sec, "orbit", o)
        label = "default" if sec == "orbit" else sec.split(":", 1)[1].strip()
        if not label or label in orbits:
            raise ConfigError(f"[{sec}]: missing or duplicate orbit label")
        if "x1" not in o:
            raise ConfigError(f"[{sec}] x1 is required")
        axis = _num(o, "manifold_axis", _int, None, sec)
        x1 = parse_vector(o["x1"], 1 if axis is not None else n, f"[{sec}] x1")
        direction = o.get("direction", "forward").strip()
        allowed = ("forward", "backward") if kind == "flow" else ("forward", "inverse")
        if direction not in allowed:
            raise ConfigError(f"[{sec}] direction must be one of {allowed}")
        orbits[label] = OrbitSpec(
            label=label,
            x1=x1,
            direction=direction,
            max_n=_num(o, "max_n", _int, DEFAULT_MAX_N, sec),
            delta=_num(o, "delta", float, DEFAULT_DELTA, sec),
            radius=_num(o, "radius", float, None, sec),
            manifold_axis=axis,
            expected_dimension=_num(o, "expected_dimension", float, None, sec),
            tolerance=_num(o, "tolerance", float, 0.05, sec),
            provenance=o.get("provenance", ""),
        )
    if "default" in orbits:
        orbits = {"default": orbits.pop("default"), **orbits}

    verdict = k = None
    exp_prov = ""
    if "expected" in cp:
        e = cp["expected"]
        _check_keys("expected", "expected", e)
        verdict = e.get("verdict")
        if verdict is not None and verdict not in VERDICTS:
            raise ConfigError(f"[expected] verdict must be one of {VERDICTS}")
        k = _num(e, "k", _int, None, "expected")
        exp_prov = e.get("provenance", "")

    m_axis = m_order = None
    if "manifold" in cp:
        m = cp["manifold"]
        _check_keys("manifold", "manifold", m)
        m_axis = _num(m, "axis", _int, None, "manifold")
        m_order = _num(m, "order", _int, None, "manifold")

    run = RunParameters()
    if "run" in cp:
        r = cp["run"]
        _check_keys("run", "run", r)
        run = RunParameters(
            x0=parse_vector(r["x0"], None, "[run] x0") if "x0" in r else None,
            max_n=_num(r, "max_n", _int, None, "run"),
            delta=_num(r, "delta", float, None, "run"),
            eps_samples=_num(r, "eps_samples", _int, 48, "run"),
            theta=_num(r, "theta", float, 0.2, "run"),
            eta=_num(r, "eta", float, 1e-6, "run"),
            order=_num(r, "order", _int, None, "run"),
            seed=_num(r, "seed", _int, 0, "run"),
        )

    return SystemConfig(
        name=sysec.get("name", Path(source).stem),
        kind=kind,
        variables=variables,
        equations=equations,
        fixed_point=fixed_point,
        parameters=MappingProxyType(params),
        orbits=MappingProxyType(orbits),
        expected_verdict=verdict,
        expected_k=k,
        expected_provenance=exp_prov,
        description=sysec.get("description", ""),
        provenance=sysec.get("provenance", ""),
        box_radius=_num(sysec, "box_radius", float, 1e3, "system"),
        manifold_axis=m_axis,
        manifold_order=m_order,
        run=run,
    )


def load_config(path) -> SystemConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_config(text, str(path))
