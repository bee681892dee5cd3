"""Strict JSON scenario configuration.

A scenario file has four sections::

    {
      "system":  {"type": "two_level", "omega1": 1.0},
      "bath":    {"alpha": 0.005, "s": 0.5, "omega_c": 5.0, "omega_max": 100.0, "n_modes": 300},
      "initial": {"preset": "example2", "kind": "DC"},
      "evolve":  {"dt": 0.0025, "t_max": 10.0, "record_stride": 4}
    }

Unknown keys anywhere are rejected. Complex numbers are written either as a
plain number or as ``[re, im]``. Instead of a preset, ``initial`` may list
explicit components::

    "initial": {"terms": [
        {"label": "vac", "phi_s": [[0.5, 0.5], [0.5, 0.5]],
         "phi_b": [{"ket": {}, "bra": {}, "c": 1.0}]}
    ]}

where ``ket``/``bra`` map 1-based mode indices to occupation numbers.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .bath import BathModel, SpectralDensity, discretize
from .evolution import EvolutionConfig
from .initial_state import FockOperator, GammaTerm, InitialState, occupation
from .presets import SystemSpec, build_example1, build_example2, build_example3, two_level_system, v_atom_system


class ConfigError(ValueError):
    """Invalid scenario file (message names the offending field)."""


@dataclass(frozen=True)
class SystemSection:
    type: str = "two_level"
    omega1: float = 1.0
    omega2: float = 0.5
    epsilon_L: float = 0.0
    omega_L: float = 0.0


@dataclass(frozen=True)
class BathSection:
    alpha: float = 0.005
    s: float = 0.5
    omega_c: float = 5.0
    omega_max: float = 100.0
    n_modes: int = 300


@dataclass(frozen=True)
class InitialSection:
    preset: str | None = None
    kind: str | None = None
    A: Any = None
    B: Any = None
    C: Any = None
    A2: Any = None
    B2: Any = None
    sigma: float | None = None
    sigma2: float | None = None
    k0: float | None = None
    weights: list | None = None
    terms: list | None = None
    pairing: list | None = None


@dataclass(frozen=True)
class EvolveSection:
    dt: float = 2.5e-3
    t_max: float = 10.0
    record_stride: int = 1
    reduced_path: str = "auto"


@dataclass(frozen=True)
class ScenarioConfig:
    system: SystemSection = field(default_factory=SystemSection)
    bath: BathSection = field(default_factory=BathSection)
    initial: InitialSection = field(default_factory=InitialSection)
    evolve: EvolveSection = field(default_factory=EvolveSection)

    def to_dict(self) -> dict:
        out = {}
        for name in ("system", "bath", "initial", "evolve"):
            sec = asdict(getattr(self, name))
            out[name] = {k: v for k, v in sec.items() if v is not None}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def with_value(self, section: str, key: str, value) -> "ScenarioConfig":
        sec = getattr(self, section)
        return replace(self, **{section: replace(sec, **{key: value})})


PRESETS = {
    "example1": ("v_atom", ("NSL", "SL")),
    "example2": ("two_level", ("NSL", "SL", "DC")),
    "example3": ("two_level", ("NSL", "SL")),
}
PRESET_PARAMS = {
    "example1": {"A", "B", "C", "sigma", "k0"},
    "example2": {"A", "B", "A2", "B2", "sigma", "sigma2", "k0", "weights"},
    "example3": {"A", "B", "sigma", "k0"},
}


def _number(value, where: str, integer: bool = False, positive: bool = False, nonneg: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if not np.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    if positive and value <= 0:
        raise ConfigError(f"{where}: must be positive")
    if nonneg and value < 0:
        raise ConfigError(f"{where}: must be non-negative")
    return int(value) if integer else float(value)


def parse_complex(value, where: str) -> complex:
    if isinstance(value, list):
        if len(value) != 2:
            raise ConfigError(f"{where}: complex numbers are written [re, im]")
        return complex(_number(value[0], where), _number(value[1], where))
    return complex(_number(value, where))


def _section(cls, data, name: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}: unknown key")
    return cls(**data)


def _validate(cfg: ScenarioConfig) -> ScenarioConfig:
    s = cfg.system
    if s.type not in ("two_level", "v_atom"):
        raise ConfigError(f"system.type: must be 'two_level' or 'v_atom', got {s.type!r}")
    system = SystemSection(
        s.type,
        _number(s.omega1, "system.omega1"),
        _number(s.omega2, "system.omega2"),
        _number(s.epsilon_L, "system.epsilon_L"),
        _number(s.omega_L, "system.omega_L"),
    )
    b = cfg.bath
    bath = BathSection(
        _number(b.alpha, "bath.alpha", nonneg=True),
        _number(b.s, "bath.s", positive=True),
        _number(b.omega_c, "bath.omega_c", positive=True),
        _number(b.omega_max, "bath.omega_max", positive=True),
        _number(b.n_modes, "bath.n_modes", integer=True, positive=True),
    )
    e = cfg.evolve
    if e.reduced_path not in ("auto", "force_general", "force_equilibrium"):
        raise ConfigError(f"evolve.reduced_path: invalid value {e.reduced_path!r}")
    evolve = EvolveSection(
        _number(e.dt, "evolve.dt", positive=True),
        _number(e.t_max, "evolve.t_max", nonneg=True),
        _number(e.record_stride, "evolve.record_stride", integer=True, positive=True),
        e.reduced_path,
    )
    i = cfg.initial
    if (i.preset is None) == (i.terms is None):
        raise ConfigError("initial: give exactly one of 'preset' or 'terms'")
    if i.preset is not None:
        if i.preset not in PRESETS:
            raise ConfigError(f"initial.preset: unknown preset {i.preset!r} (known: {', '.join(PRESETS)})")
        sys_type, kinds = PRESETS[i.preset]
        if system.type != sys_type:
            raise ConfigError(f"system.type: preset {i.preset} needs '{sys_type}'")
        kind = (i.kind or "").upper()
        if kind not in kinds:
            raise ConfigError(f"initial.kind: {i.preset} supports {', '.join(kinds)}")
        allowed = PRESET_PARAMS[i.preset]
        for name in ("A", "B", "C", "A2", "B2", "sigma", "sigma2", "k0", "weights", "pairing"):
            val = getattr(i, name)
            if val is not None and name not in allowed:
                raise ConfigError(f"initial.{name}: not a parameter of {i.preset}")
        for name in ("A", "B", "C", "A2", "B2"):
            if getattr(i, name) is not None:
                parse_complex(getattr(i, name), f"initial.{name}")
        for name in ("sigma", "sigma2"):
            if getattr(i, name) is not None:
                _number(getattr(i, name), f"initial.{name}", positive=True)
        if i.k0 is not None:
            _number(i.k0, "initial.k0", nonneg=True)
        if i.weights is not None:
            if not isinstance(i.weights, list) or len(i.weights) != 2:
                raise ConfigError("initial.weights: expected two numbers")
            for j, w in enumerate(i.weights):
                _number(w, f"initial.weights[{j}]", nonneg=True)
        i = replace(i, kind=kind)
    else:
        for name in ("kind", "A", "B", "C", "A2", "B2", "sigma", "sigma2", "k0", "weights"):
            if getattr(i, name) is not None:
                raise ConfigError(f"initial.{name}: only valid together with a preset")
        _check_terms(i.terms, i.pairing, 3 if system.type == "v_atom" else 2, bath.n_modes)
    return ScenarioConfig(system, bath, i, evolve)


def _check_terms(terms, pairing, d: int, n_modes: int):
    if not isinstance(terms, list) or not terms:
        raise ConfigError("initial.terms: expected a non-empty list")
    for j, t in enumerate(terms):
        where = f"initial.terms[{j}]"
        if not isinstance(t, dict):
            raise ConfigError(f"{where}: expected an object")
        unknown = sorted(set(t) - {"label", "phi_s", "phi_b", "max_exc"})
        if unknown:
            raise ConfigError(f"{where}.{unknown[0]}: unknown key")
        for key in ("phi_s", "phi_b"):
            if key not in t:
                raise ConfigError(f"{where}.{key}: missing")
        m = t["phi_s"]
        if not isinstance(m, list) or len(m) != d or any(not isinstance(r, list) or len(r) != d for r in m):
            raise ConfigError(f"{where}.phi_s: expected a {d}x{d} matrix")
        for a, row in enumerate(m):
            for b, v in enumerate(row):
                parse_complex(v, f"{where}.phi_s[{a}][{b}]")
        max_exc = _number(t.get("max_exc", 2), f"{where}.max_exc", integer=True, nonneg=True)
        if not isinstance(t["phi_b"], list):
            raise ConfigError(f"{where}.phi_b: expected a list of entries")
        for k, entry in enumerate(t["phi_b"]):
            ew = f"{where}.phi_b[{k}]"
            if not isinstance(entry, dict):
                raise ConfigError(f"{ew}: expected an object")
            unknown = sorted(set(entry) - {"ket", "bra", "c"})
            if unknown:
                raise ConfigError(f"{ew}.{unknown[0]}: unknown key")
            for side in ("ket", "bra"):
                occ = entry.get(side, {})
                if not isinstance(occ, dict):
                    raise ConfigError(f"{ew}.{side}: expected an object mapping mode -> occupation")
                total = 0
                for mode, n in occ.items():
                    try:
                        q = int(mode)
                    except ValueError:
                        raise ConfigError(f"{ew}.{side}: mode index {mode!r} is not an integer") from None
                    if not 1 <= q <= n_modes:
                        raise ConfigError(f"{ew}.{side}: mode {q} outside 1..{n_modes}")
                    total += _number(n, f"{ew}.{side}[{mode}]", integer=True, nonneg=True)
                if total > max_exc:
                    raise ConfigError(f"{ew}.{side}: {total} excitations exceed max_exc={max_exc}")
            if "c" not in entry:
                raise ConfigError(f"{ew}.c: missing")
            parse_complex(entry["c"], f"{ew}.c")
    if pairing is not None:
        if not isinstance(pairing, list) or len(pairing) != len(terms):
            raise ConfigError("initial.pairing: expected one index per term")
        for j, p in enumerate(pairing):
            _number(p, f"initial.pairing[{j}]", integer=True, nonneg=True)


def parse_config(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected an object")
    unknown = sorted(set(data) - {"system", "bath", "initial", "evolve"})
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown section")
    try:
        cfg = ScenarioConfig(
            _section(SystemSection, data.get("system"), "system"),
            _section(BathSection, data.get("bath"), "bath"),
            _section(InitialSection, data.get("initial"), "initial"),
            _section(EvolveSection, data.get("evolve"), "evolve"),
        )
    except TypeError as exc:  # pragma: no cover - guarded by the key check
        raise ConfigError(str(exc)) from None
    return _validate(cfg)


def load_config(path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)


# ---------------------------------------------------------------------------
# building runtime objects
# ---------------------------------------------------------------------------


def build_bath(cfg: ScenarioConfig) -> BathModel:
    b = cfg.bath
    return discretize(SpectralDensity(b.alpha, b.s, b.omega_c), b.omega_max, b.n_modes)


def evolution_config(cfg: ScenarioConfig) -> EvolutionConfig:
    e = cfg.evolve
    return EvolutionConfig(e.dt, e.t_max, e.record_stride, e.reduced_path)


def _explicit_state(cfg: ScenarioConfig, n_modes: int) -> tuple[SystemSpec, InitialState]:
    s = cfg.system
    if s.type == "v_atom":
        system = v_atom_system(s.omega1, s.omega2, s.epsilon_L, s.omega_L)
    else:
        system = two_level_system(s.omega1)
    terms = []
    for j, t in enumerate(cfg.initial.terms):
        where = f"initial.terms[{j}]"
        phi_s = np.array([[parse_complex(v, where) for v in row] for row in t["phi_s"]])
        entries = {}
        for e in t["phi_b"]:
            ket = occupation({int(q) - 1: int(n) for q, n in e.get("ket", {}).items()})
            bra = occupation({int(q) - 1: int(n) for q, n in e.get("bra", {}).items()})
            entries[(ket, bra)] = entries.get((ket, bra), 0) + parse_complex(e["c"], where)
        op = FockOperator(entries, int(t.get("max_exc", 2)))
        terms.append(GammaTerm.build(phi_s, op, n_modes, t.get("label", f"term{j}")))
    pairing = tuple(int(p) for p in cfg.initial.pairing) if cfg.initial.pairing is not None else ()
    return system, InitialState(tuple(terms), pairing)


def build_scenario(cfg: ScenarioConfig, bath: BathModel | None = None) -> tuple[SystemSpec, BathModel, InitialState]:
    """System, bath (laser frame for the V-atom) and initial state described by ``cfg``."""
    bath = build_bath(cfg) if bath is None else bath
    i, s = cfg.initial, cfg.system
    if i.preset is None:
        if s.type == "v_atom":
            bath = bath.in_rotating_frame(s.omega_L)
        system, state = _explicit_state(cfg, bath.n_modes)
        return system, bath, state
    amp = lambda name: None if getattr(i, name) is None else parse_complex(getattr(i, name), f"initial.{name}")  # noqa: E731
    kw = {}
    if i.preset == "example1":
        for name in ("A", "B", "C"):
            if amp(name) is not None:
                kw[name] = amp(name)
        if i.sigma is not None:
            kw["sigma"] = i.sigma
        system, state = build_example1(i.kind, bath, k0=i.k0, omega1=s.omega1, omega2=s.omega2,
                                       epsilon_l=s.epsilon_L, omega_l=s.omega_L, **kw)
        return system, bath.in_rotating_frame(s.omega_L), state
    if i.preset == "example2":
        if i.kind == "DC":
            for name in ("A", "B"):
                if amp(name) is not None:
                    kw[name] = amp(name)
        else:
            mapping = {"A": "A1", "B": "B1", "A2": "A2", "B2": "B2", "sigma": "sigma1", "sigma2": "sigma2"}
            for src, dst in mapping.items():
                val = getattr(i, src)
                if val is not None:
                    kw[dst] = parse_complex(val, f"initial.{src}") if src[0] in "AB" else val
            if i.weights is not None:
                kw["weights"] = tuple(float(w) for w in i.weights)
        system, state = build_example2(i.kind, bath, k0=i.k0, omega1=s.omega1, **kw)
        return system, bath, state
    for name in ("A", "B"):
        if amp(name) is not None:
            kw[name] = amp(name)
    if i.sigma is not None:
        kw["sigma"] = i.sigma
    system, state = build_example3(i.kind, bath, k0=i.k0, omega1=s.omega1, **kw)
    return system, bath, state


SWEEP_TARGETS = {
    "omega1": ("system", "omega1"),
    "epsilon_L": ("system", "epsilon_L"),
    "alpha": ("bath", "alpha"),
    "sigma": ("initial", "sigma"),
}


def sweep_values(start: float, stop: float, step: float) -> list[float]:
    """``start, start + step, ...`` up to ``stop`` inclusive (1e-9 relative slack)."""
    if step <= 0:
        raise ConfigError("sweep step must be positive")
    if stop < start:
        raise ConfigError("empty sweep range (to < from)")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(count)]
