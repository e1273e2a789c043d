"""Catalog of reference systems with known verdicts and dimensions.

Entries are stored as config files under ``orbitdim/catalog`` and parsed
with :func:`orbitdim.config.parse_config`, so user files and catalog
entries share one format.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from .config import ConfigError, OrbitSpec, SystemConfig, parse_config
from .dynsys import (
    Orbit,
    generate_flow_orbit,
    generate_inverse_orbit,
    generate_orbit,
)
from .manifolds import lift_orbit, restrict_to_manifold, solve_invariance

__all__ = [
    "CatalogEntry",
    "UnknownEntryError",
    "get_entry",
    "entry_names",
    "catalog_source",
    "run_orbit",
]

CatalogEntry = SystemConfig


class UnknownEntryError(ConfigError, KeyError):
    def __str__(self):
        return self.args[0]


def _files():
    return resources.files("orbitdim") / "catalog"


@lru_cache(maxsize=None)
def entry_names() -> tuple[str, ...]:
    return tuple(sorted(p.name[:-4] for p in _files().iterdir() if p.name.endswith(".ini")))


def catalog_source(name: str) -> str:
    """Config text of a catalog entry."""
    if name not in entry_names():
        raise UnknownEntryError(f"unknown catalog entry {name!r}; known: {', '.join(entry_names())}")
    return (_files() / f"{name}.ini").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _load(name: str) -> CatalogEntry:
    return parse_config(catalog_source(name), f"{name}.ini")


def get_entry(name: str, overrides: dict[str, float] | None = None) -> CatalogEntry:
    """Catalog entry by name, optionally with parameter values replaced."""
    entry = _load(name)
    if overrides:
        entry = entry.with_parameters(overrides)
    return entry


def run_orbit(
    entry: SystemConfig,
    spec: OrbitSpec | str | None = None,
    *,
    x1=None,
    max_n: int | None = None,
    delta: float | None = None,
) -> Orbit:
    """Generate one of an entry's designated orbits.

    Specs with ``manifold_axis`` iterate the map restricted to that
    manifold (1-D) and lift the result onto the manifold graph.
    """
    if spec is None:
        spec = entry.designated_orbit
        if spec is None:
            raise ConfigError(f"{entry.name!r} has no designated orbit")
    elif isinstance(spec, str):
        try:
            spec = entry.orbits[spec]
        except KeyError:
            raise ConfigError(
                f"{entry.name!r} has no orbit {spec!r}; known: {', '.join(entry.orbits)}"
            ) from None
    x1 = spec.x1 if x1 is None else tuple(x1)
    max_n = spec.max_n if max_n is None else max_n
    delta = spec.delta if delta is None else delta
    sys = entry.system
    if spec.manifold_axis is not None:
        expansion = solve_invariance(sys, spec.manifold_axis, order=entry.manifold_order or 5)
        restricted = restrict_to_manifold(sys, expansion).system
        generate = generate_orbit if spec.direction == "forward" else generate_inverse_orbit
        orbit = generate(restricted, x1, max_n, delta, spec.radius)
        return lift_orbit(orbit, expansion)
    if entry.kind == "flow":
        hint = "stable" if spec.direction == "forward" else "unstable"
        return generate_flow_orbit(sys, x1, max_n, delta, spec.radius, stability_hint=hint)
    generate = generate_orbit if spec.direction == "forward" else generate_inverse_orbit
    return generate(sys, x1, max_n, delta, spec.radius)
