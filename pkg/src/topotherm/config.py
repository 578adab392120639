"""Run configuration: flat ``key=value`` files, presets and validation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from enum import Enum
from math import comb

import numpy as np

from .analysis import FillingRule, SweepAxis
from .fitting import FitKind
from .lattice import Boundary, LatticeSpec


class ConfigError(ValueError):
    pass


class Task(str, Enum):
    SPECTRUM = "spectrum"
    GAP = "gap"
    WINDING = "winding"
    QFI = "qfi"
    CFI = "cfi"
    BOUND = "bound"
    SWEEP = "sweep"
    CSTAR = "cstar"
    FIT = "fit"


@dataclass(frozen=True)
class Grid:
    """Either ``lo:hi:n`` (inclusive linspace) or an explicit comma list."""

    text: str

    def values(self) -> np.ndarray:
        t = self.text.strip()
        if not t:
            return np.array([])
        if ":" in t:
            lo, hi, n = t.split(":")
            if int(n) < 1:
                raise ConfigError(f"grid {t!r} has no points")
            return np.linspace(float(lo), float(hi), int(n))
        return np.array([float(v) for v in t.split(",") if v.strip()])

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class RunConfig:
    task: Task = Task.QFI
    L: int | None = None
    N: int | None = None
    filling: FillingRule | None = None
    delta: float = 0.0
    m: float = 0.0
    boundary: Boundary = Boundary.OPEN
    T_min: float = 1e-3
    T_max: float = 10.0
    T_points: int = 201
    axis: SweepAxis | None = None
    delta_grid: Grid | None = None
    m_grid: Grid | None = None
    L_list: Grid | None = None
    D: int | None = None
    rel_tol: float = 1e-9
    shots: int = 1
    fit_kind: FitKind = FitKind.EXP3
    fit_m_min: float | None = None
    fit_m_max: float | None = None
    n_k: int = 256
    n_levels: int | None = None
    energy_scale_nK: float | None = None
    preset: str | None = None
    out: str = "results"
    plot: bool = False
    workers: int = 1

    # -- derived -----------------------------------------------------------
    @property
    def particles(self) -> int:
        """Particle number, from ``N`` or the filling rule."""
        if self.N is not None:
            return self.N
        if self.filling is not None and self.L is not None:
            return self.filling.particles(self.L)
        raise ConfigError("particle number undefined: set N or filling")

    def lattice(self, **override) -> LatticeSpec:
        kw = dict(L=self.L, delta=self.delta, m=self.m, boundary=self.boundary)
        kw.update(override)
        return LatticeSpec(**kw)

    def T_grid(self) -> np.ndarray:
        from .analysis import log_temperature_grid

        return log_temperature_grid(self.T_min, self.T_max, self.T_points)

    def sweep_grid(self) -> np.ndarray:
        grid = self.delta_grid if self.axis is SweepAxis.DELTA else self.m_grid
        return grid.values()

    def to_pairs(self) -> list[tuple[str, str]]:
        """Canonical ``key=value`` pairs, None-valued keys omitted."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, Enum):
                v = v.value
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            out.append((f.name, str(v)))
        return out


PRESETS: dict[str, dict[str, str]] = {
    "fig2a": dict(task="spectrum", L="14", N="6", axis="delta", delta_grid="-1:1:41"),
    "fig2b": dict(task="spectrum", L="14", N="7", axis="delta", delta_grid="-1:1:41"),
    "fig2c": dict(task="spectrum", L="16", N="7", axis="delta", delta_grid="-1:1:41"),
    "fig2d": dict(task="spectrum", L="16", N="8", axis="delta", delta_grid="-1:1:41"),
    "fig3a": dict(task="sweep", L="16", N="7", m="0", axis="delta", delta_grid="-1:1:21"),
    "fig3b": dict(task="sweep", L="16", N="8", m="0", axis="delta", delta_grid="-1:1:21"),
    "fig3c": dict(task="cstar", L_list="8,10,12,14,16", filling="L/2-1", delta_grid="-1:1:21"),
    "fig3d": dict(task="cstar", L_list="8,10,12,14,16", filling="L/2", delta_grid="-1:1:21"),
    "fig4a": dict(task="gap", L="16", N="7", delta="-1", m_grid="0:10:51"),
    "fig4b": dict(task="gap", L="16", N="8", delta="1", m_grid="0:10:51"),
    "fig4c": dict(task="sweep", L="16", N="7", delta="-1", axis="m", m_grid="0.5:10:20"),
    "fig4d": dict(task="sweep", L="16", N="8", delta="1", axis="m", m_grid="0:10:21"),
    "fig5": dict(task="cfi", L="16", N="7", delta="-1", m="10"),
}

_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    raw = raw.strip()
    if key in ("L", "N", "T_points", "D", "shots", "n_k", "n_levels", "workers"):
        return int(raw)
    if key in ("delta", "m", "T_min", "T_max", "rel_tol", "fit_m_min", "fit_m_max", "energy_scale_nK"):
        return float(raw)
    if key == "plot":
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"plot must be a boolean, got {raw!r}")
        return raw.lower() in ("true", "1", "yes")
    if key in ("delta_grid", "m_grid", "L_list"):
        return Grid(raw)
    enum_for = {"task": Task, "filling": FillingRule, "boundary": Boundary, "axis": SweepAxis, "fit_kind": FitKind}
    if key in enum_for:
        try:
            return enum_for[key](raw)
        except ValueError:
            allowed = ", ".join(e.value for e in enum_for[key])
            raise ConfigError(f"{key}={raw!r} not one of: {allowed}") from None
    return raw


def parse_pairs(text: str) -> dict[str, str]:
    """Split flat config text into raw ``key -> value`` strings.

    Several pairs may share one line; ``#`` starts a comment.
    """
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        for token in line.split():
            if "=" not in token:
                raise ConfigError(f"line {lineno}: expected key=value, got {token!r}")
            key, value = token.split("=", 1)
            key = key.strip().replace("-", "_")
            if key not in _FIELD_TYPES:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            pairs[key] = value
    return pairs


def build_config(*layers: dict[str, str]) -> RunConfig:
    """Merge raw layers (later wins), expand any preset underneath, validate."""
    merged: dict[str, str] = {}
    for layer in layers:
        merged.update({k: v for k, v in layer.items() if v is not None})
    preset = merged.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        merged = {**PRESETS[preset], **merged}
    for key in merged:
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
    try:
        values = {k: _coerce(k, str(v)) for k, v in merged.items()}
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def parse_config(text: str = "", flags: dict[str, str] | None = None) -> RunConfig:
    return build_config(parse_pairs(text), flags or {})


def validate(cfg: RunConfig) -> None:
    task = cfg.task
    if cfg.N is not None and cfg.filling is not None and cfg.L is not None:
        if cfg.filling.particles(cfg.L) != cfg.N:
            raise ConfigError(f"N={cfg.N} contradicts filling {cfg.filling.value} at L={cfg.L}")
    if not 0 < cfg.T_min < cfg.T_max:
        raise ConfigError(f"need 0 < T_min < T_max, got {cfg.T_min}, {cfg.T_max}")
    if cfg.T_points < 2:
        raise ConfigError("T_points must be >= 2")
    if not cfg.rel_tol > 0:
        raise ConfigError("rel_tol must be positive")
    if cfg.energy_scale_nK is not None and not cfg.energy_scale_nK > 0:
        raise ConfigError("energy_scale_nK must be positive")
    if cfg.shots < 1 or cfg.workers < 1:
        raise ConfigError("shots and workers must be >= 1")

    needs_model = task in (Task.SPECTRUM, Task.GAP, Task.QFI, Task.CFI, Task.SWEEP, Task.FIT)
    if task is Task.BOUND and cfg.D is None:
        needs_model = True
    if needs_model and cfg.L is None:
        raise ConfigError(f"task={task.value} needs L")
    if cfg.L is not None:
        try:
            cfg.lattice()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if needs_model:
        try:
            cfg.lattice()
            N = cfg.particles
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0 < N < cfg.L:
            raise ConfigError(f"need 0 < N < L, got N={N}, L={cfg.L}")

    def require_grid(name):
        grid = getattr(cfg, name)
        if grid is None:
            raise ConfigError(f"task={task.value} needs {name}")
        try:
            vals = grid.values()
        except ValueError as exc:
            raise ConfigError(f"{name}: {exc}") from None
        if vals.size == 0:
            raise ConfigError(f"{name} is empty")
        return vals

    if task is Task.SWEEP:
        if cfg.axis is None:
            raise ConfigError("task=sweep needs axis (delta or m)")
        vals = require_grid("delta_grid" if cfg.axis is SweepAxis.DELTA else "m_grid")
        _check_axis_values(cfg.axis, vals)
    elif task is Task.SPECTRUM and cfg.axis is not None:
        vals = require_grid("delta_grid" if cfg.axis is SweepAxis.DELTA else "m_grid")
        _check_axis_values(cfg.axis, vals)
    elif task in (Task.GAP, Task.FIT):
        _check_axis_values(SweepAxis.M, require_grid("m_grid"))
        if task is Task.FIT and (cfg.fit_m_min is None or cfg.fit_m_max is None):
            raise ConfigError("task=fit needs an explicit fit window: fit_m_min and fit_m_max")
    elif task is Task.CSTAR:
        Ls = require_grid("L_list")
        if cfg.filling is None:
            raise ConfigError("task=cstar needs filling (L/2-1 or L/2)")
        if np.any(Ls % 2) or np.any(Ls < 4):
            raise ConfigError("L_list entries must be even integers >= 4")
        _check_axis_values(SweepAxis.DELTA, require_grid("delta_grid"))
    elif task is Task.WINDING:
        vals = cfg.delta_grid.values() if cfg.delta_grid is not None else np.array([cfg.delta])
        if np.any(vals == 0):
            raise ConfigError("winding number undefined at delta=0 (gap closes)")
        _check_axis_values(SweepAxis.DELTA, vals)
    elif task is Task.BOUND and cfg.D is not None and cfg.D < 2:
        raise ConfigError("D must be >= 2")


def _check_axis_values(axis: SweepAxis, vals) -> None:
    if axis is SweepAxis.DELTA and np.any(np.abs(vals) > 1):
        raise ConfigError("delta values must lie in [-1, 1]")
    if axis is SweepAxis.M and np.any(vals < 0):
        raise ConfigError("m values must be >= 0")


def hilbert_dimension(cfg: RunConfig) -> int:
    return cfg.D if cfg.D is not None else comb(cfg.L, cfg.particles)


def replace(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, **changes)
