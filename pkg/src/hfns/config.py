"""
Run configuration: ``key = value`` lines grouped under ``[section]`` headers.

Example::

    [params]
    nu = 0.1
    alpha = 0.1
    n = 32
    dt = 1e-3
    T = 1.0
    sample_dt = 1e-2

    [initial]
    kind = taylor_green
    amplitude = 1.0

    [forcing]
    kind = single_mode
    k = 1, 0, 0
    amplitude = 1.0
    direction = 0, 1, 0

    [run]
    checks = energy, decay, dissipation, absorbing, h2
    C_h2 = calibrate

``#`` starts a comment.  Unknown sections and keys are rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .exceptions import ConfigError, HorizontalMeanError
from .fields import random_solenoidal, single_mode, taylor_green
from .model import DEALIAS_RULES, Forcing, SimParams
from .spectral import Grid, SpectralVectorField

ALL_CHECKS = ("energy", "decay", "dissipation", "absorbing", "h2", "momentum")
OPTIONAL_CHECKS = ("continuity",)

_SECTIONS = {
    "params": {"nu", "alpha", "L", "n", "dt", "T", "sample_dt", "dealias"},
    "initial": {"kind", "amplitude", "k", "direction", "seed", "spectrum_slope", "cutoff"},
    "forcing": {"kind", "amplitude", "k", "direction"},
    "run": {"out", "checks", "C_h2", "metric_terms", "dissipation_windows", "energy_tol"},
}
_REQUIRED_PARAMS = ("nu", "alpha")
_INITIAL_KINDS = ("zero", "taylor_green", "single_mode", "random_solenoidal")
_FORCING_KINDS = ("none", "single_mode")


@dataclass(frozen=True)
class FieldSpec:
    kind: str
    amplitude: float = 1.0
    k: tuple[int, int, int] | None = None
    direction: tuple[float, float, float] | None = None
    seed: int = 0
    spectrum_slope: float = 5.0 / 3.0
    cutoff: float | None = None

    def build(self, grid: Grid) -> SpectralVectorField:
        if self.kind in ("zero", "none"):
            return SpectralVectorField.zeros(grid)
        if self.kind == "taylor_green":
            return taylor_green(grid, self.amplitude)
        if self.kind == "single_mode":
            return single_mode(grid, self.k, self.amplitude, self.direction)
        if self.kind == "random_solenoidal":
            return random_solenoidal(grid, self.seed, self.spectrum_slope, self.cutoff, self.amplitude)
        raise ValueError(f"unknown field kind {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    params: SimParams
    initial: FieldSpec
    forcing: FieldSpec
    out: Path | None = None
    checks: tuple[str, ...] = ALL_CHECKS
    C_h2: float | None = 1.0  # None: calibrate
    metric_terms: int = 20
    dissipation_windows: tuple[float, ...] = (0.5, 1.0)
    energy_tol: float = 1e-5

    def initial_state(self) -> SpectralVectorField:
        return self.initial.build(self.params.grid)

    def forcing_field(self) -> Forcing:
        return Forcing(self.forcing.build(self.params.grid))


_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")
_HEADER = re.compile(r"^\s*\[\s*([A-Za-z_]+)\s*\]\s*$")


def _tokenize(text: str):
    section = None
    seen: dict[tuple[str, str], int] = {}
    out: dict[str, dict[str, tuple[str, int]]] = {s: {} for s in _SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            section = m.group(1)
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"syntax error, expected 'key = value': {raw.strip()!r}", line=lineno)
        key, value = m.groups()
        if section is None:
            raise ConfigError("key outside of any [section]", key=key, line=lineno)
        if key not in _SECTIONS[section]:
            raise ConfigError(f"unknown key in [{section}]", key=key, line=lineno)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[section, key]})", key=key, line=lineno)
        if value == "":
            raise ConfigError("empty value", key=key, line=lineno)
        seen[section, key] = lineno
        out[section][key] = (value, lineno)
    return out


def _convert(entries, key, conv, default=None, what="a number"):
    if key not in entries:
        return default
    value, lineno = entries[key]
    try:
        return conv(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected {what}, got {value!r}", key=key, line=lineno) from None


def _int(s: str) -> int:
    v = float(s)
    if v != int(v):
        raise ValueError(s)
    return int(v)


def _triple(conv):
    def parse(s: str):
        parts = [x for x in re.split(r"[,\s]+", s.strip("()[] ")) if x]
        if len(parts) != 3:
            raise ValueError(s)
        return tuple(conv(x) for x in parts)

    return parse


def _field_spec(entries, section: str, kinds) -> FieldSpec:
    kind = _convert(entries, "kind", str, default=kinds[0], what="a kind")
    if kind not in kinds:
        value, lineno = entries["kind"]
        raise ConfigError(f"kind must be one of {', '.join(kinds)}", key="kind", line=lineno)
    spec = FieldSpec(
        kind=kind,
        amplitude=_convert(entries, "amplitude", float, 1.0),
        k=_convert(entries, "k", _triple(_int), None, "an integer triple"),
        direction=_convert(entries, "direction", _triple(float), None, "a real triple"),
        seed=_convert(entries, "seed", _int, 0, "an integer"),
        spectrum_slope=_convert(entries, "spectrum_slope", float, 5.0 / 3.0),
        cutoff=_convert(entries, "cutoff", float, None),
    )
    if kind == "single_mode":
        for key in ("k", "direction"):
            if getattr(spec, key) is None:
                raise ConfigError(f"[{section}] single_mode requires '{key}'", key=key)
    return spec


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration; raises :class:`ConfigError`."""
    sec = _tokenize(text)
    params = sec["params"]
    for key in _REQUIRED_PARAMS:
        if key not in params:
            raise ConfigError("required parameter missing from [params]", key=key)
    kw = {
        "nu": _convert(params, "nu", float),
        "alpha": _convert(params, "alpha", float),
        "L": _convert(params, "L", float, 1.0),
        "n": _convert(params, "n", _int, 32, "an integer"),
        "dt": _convert(params, "dt", float, 1e-3),
        "T": _convert(params, "T", float, 1.0),
        "sample_dt": _convert(params, "sample_dt", float, None),
        "dealias": _convert(params, "dealias", str, "two-thirds", "a rule name"),
    }
    n = kw["n"]
    if n < 4 or n % 2:
        raise ConfigError(f"n must be an even integer >= 4, got {n}", key="n", line=params["n"][1])
    if kw["dealias"] not in DEALIAS_RULES:
        raise ConfigError(f"dealias must be one of {DEALIAS_RULES}", key="dealias", line=params["dealias"][1])
    try:
        sim = SimParams(**kw)
    except ValueError as exc:
        msg = str(exc)
        key = msg.split()[0] if msg.split() and msg.split()[0] in kw else None
        line = params[key][1] if key in params else None
        raise ConfigError(msg, key=key, line=line) from None

    initial = _field_spec(sec["initial"], "initial", _INITIAL_KINDS)
    forcing = _field_spec(sec["forcing"], "forcing", _FORCING_KINDS)

    run = sec["run"]
    checks_raw = _convert(run, "checks", str, "all", "a list")
    if checks_raw.strip() in ("all", ""):
        checks = ALL_CHECKS
    elif checks_raw.strip() == "none":
        checks = ()
    else:
        checks = tuple(c.strip() for c in checks_raw.split(",") if c.strip())
        bad = [c for c in checks if c not in ALL_CHECKS + OPTIONAL_CHECKS]
        if bad:
            raise ConfigError(f"unknown check(s) {', '.join(bad)}", key="checks", line=run["checks"][1])
    C_raw = _convert(run, "C_h2", str, "1.0")
    if C_raw == "calibrate":
        C_h2 = None
    else:
        C_h2 = _convert(run, "C_h2", float, 1.0)
        if C_h2 < 0:
            raise ConfigError("C_h2 must be >= 0 or 'calibrate'", key="C_h2", line=run["C_h2"][1])
    metric_terms = _convert(run, "metric_terms", _int, 20, "an integer")
    if metric_terms < 1:
        raise ConfigError("metric_terms must be >= 1", key="metric_terms", line=run["metric_terms"][1])
    windows = _convert(
        run, "dissipation_windows", lambda s: tuple(float(x) for x in s.split(",") if x.strip()), (0.5, 1.0), "a list"
    )
    cfg = RunConfig(
        params=sim,
        initial=initial,
        forcing=forcing,
        out=_convert(run, "out", Path, None, "a path"),
        checks=checks,
        C_h2=C_h2,
        metric_terms=metric_terms,
        dissipation_windows=windows,
        energy_tol=_convert(run, "energy_tol", float, 1e-5),
    )
    # build the named fields now so that mode/obstruction errors surface at parse time
    for section, spec in (("initial", cfg.initial), ("forcing", cfg.forcing)):
        try:
            f = spec.build(sim.grid)
            if section == "forcing":
                Forcing(f)
        except HorizontalMeanError as exc:
            raise ConfigError(str(exc), key=f"{section}.k", line=sec[section].get("k", (None, None))[1]) from None
        except ValueError as exc:
            raise ConfigError(f"[{section}] {exc}", key=f"{section}.kind") from None
    return cfg


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
