"""Command-line front end.

Examples::

    topotherm --preset fig5 --out results/ --plot
    topotherm --task qfi --L 16 --N 8 --delta 1 --energy-scale-nK 200
    topotherm --config run.cfg --T-points 401
"""

from __future__ import annotations

import argparse
import json
import math
import shutil
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    SweepAxis,
    SweepError,
    cstar_vs_delta,
    gap_vs_m,
    many_body_spectrum,
    sweep_qfi,
)
from .config import ConfigError, RunConfig, Task, build_config, hilbert_dimension, parse_pairs
from .fitting import evaluate, fit_gap_model
from .fock import GaplessError, spectral_gap_and_degeneracy
from .lattice import winding_number
from .metrology import (
    BoundaryMaximumWarning,
    cfi_site_occupation,
    find_optimal_temperature,
    large_D_qfi_bound,
    manifold_qfi_bound,
    optimal_gap_ratio,
    optimal_qfi_bound,
    qfi_thermal,
)
from .tables import PlotHint, ResultTable, plot_csv, read_csv, write_csv
from .thermal import gibbs_ensemble, thermal_site_occupations


def convert_temperature(T, energy_scale_nK):
    """Dimensionless temperature (hopping units) to nanokelvin."""
    if energy_scale_nK is None:
        raise ConfigError("nK output requested but energy_scale_nK is not set")
    if not energy_scale_nK > 0:
        raise ConfigError(f"energy_scale_nK must be positive, got {energy_scale_nK}")
    return np.asarray(T, dtype=float) * energy_scale_nK if np.ndim(T) else float(T) * energy_scale_nK


def _add_nK(table: ResultTable, cfg: RunConfig, source: str) -> ResultTable:
    if cfg.energy_scale_nK is not None:
        table.add_column(f"{source}_nK", float, convert_temperature(table.column(source), cfg.energy_scale_nK))
    return table


# -- tasks -----------------------------------------------------------------

def _task_spectrum(cfg):
    N = cfg.particles
    if cfg.axis is None:
        E = np.sort(many_body_spectrum(cfg.lattice(), N).energies)[: cfg.n_levels]
        return [ResultTable("spectrum", [("level", int), ("energy", float)], list(enumerate(E.tolist())))]
    name = cfg.axis.value
    rows = []
    for v in cfg.sweep_grid():
        E = np.sort(many_body_spectrum(cfg.lattice(**{name: float(v)}), N).energies)[: cfg.n_levels]
        rows += [(float(v), i, e) for i, e in enumerate(E.tolist())]
    hint = PlotHint(name, ["energy"], group="level", scale="linear")
    return [ResultTable("spectrum", [(name, float), ("level", int), ("energy", float)], rows, hint)]


def _task_gap(cfg):
    rows = gap_vs_m(cfg.lattice(), cfg.particles, cfg.m_grid.values(), cfg.rel_tol)
    cols = [("m", float), ("gap", float), ("ground_degeneracy", int), ("excited_degeneracy", int), ("gapless", bool)]
    return [ResultTable("gap", cols, [tuple(r) for r in rows], PlotHint("m", ["gap"], scale="linear"))]


def _task_winding(cfg):
    deltas = cfg.delta_grid.values() if cfg.delta_grid is not None else [cfg.delta]
    rows = [(float(d), winding_number(float(d), cfg.n_k)) for d in deltas]
    return [ResultTable("winding", [("delta", float), ("winding", int)], rows)]


def _optimum_row(kind, opt, excited_deg):
    manifold = manifold_qfi_bound(excited_deg, opt.T_star) if excited_deg else math.nan
    return (kind, opt.T_star, opt.F_star, opt.C_star, opt.delta_T_bound, opt.at_boundary, manifold)


_OPTIMUM_COLS = [
    ("kind", str),
    ("T_star", float),
    ("F_star", float),
    ("C_star", float),
    ("delta_T_bound", float),
    ("at_boundary", bool),
    ("bound_manifold_at_T_star", float),
]


def _task_fisher(cfg):
    with_cfi = cfg.task is Task.CFI
    spectrum = many_body_spectrum(cfg.lattice(), cfg.particles)
    E = spectrum.energies
    try:
        excited = spectral_gap_and_degeneracy(E, cfg.rel_tol).excited_deg
    except GaplessError:
        excited = 0
    T_grid = cfg.T_grid()

    def cfi_at(T):
        return cfi_site_occupation(thermal_site_occupations(spectrum, gibbs_ensemble(spectrum, T)))

    def qfi_at(T):
        return qfi_thermal(gibbs_ensemble(E, T))

    rows = []
    for T in T_grid:
        row = [float(T), qfi_at(T)]
        if with_cfi:
            row.append(cfi_at(T))
        row.append(optimal_qfi_bound(spectrum.D, T))
        row.append(manifold_qfi_bound(excited, T) if excited else math.nan)
        rows.append(tuple(row))
    cols = [("T", float), ("qfi", float)] + ([("cfi", float)] if with_cfi else [])
    cols += [("bound_full_D", float), ("bound_manifold", float)]
    ys = [c for c, _ in cols[1:]]
    fisher = _add_nK(ResultTable("fisher", cols, rows, PlotHint("T", ys)), cfg, "T")

    T_range = (cfg.T_min, cfg.T_max)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryMaximumWarning)
        optima = [_optimum_row("quantum", find_optimal_temperature(qfi_at, T_range, shots=cfg.shots), excited)]
        if with_cfi:
            optima.append(_optimum_row("classical", find_optimal_temperature(cfi_at, T_range, shots=cfg.shots), excited))
    optimum = ResultTable("optimum", list(_OPTIMUM_COLS), optima)
    optimum.add_column("D", int, [spectrum.D] * len(optima))
    optimum.add_column("excited_degeneracy", int, [excited] * len(optima))
    return [fisher, _add_nK(optimum, cfg, "T_star")]


def _task_bound(cfg):
    D = hilbert_dimension(cfg)
    x = optimal_gap_ratio(D)
    rows = [(float(T), optimal_qfi_bound(D, T), large_D_qfi_bound(D, T), x) for T in cfg.T_grid()]
    cols = [("T", float), ("bound_full_D", float), ("bound_large_D_approx", float), ("x", float)]
    table = ResultTable("bound", cols, rows, PlotHint("T", ["bound_full_D", "bound_large_D_approx"]))
    return [_add_nK(table, cfg, "T")]


def _task_sweep(cfg):
    res = sweep_qfi(
        cfg.lattice(), cfg.particles, cfg.axis, cfg.sweep_grid(), cfg.T_grid(), cfg.rel_tol, cfg.workers
    )
    name = res.axis.value
    curve_rows = [
        (float(v), float(T), float(F))
        for v, c in zip(res.values, res.curves)
        for T, F in zip(c.T, c.F)
    ]
    curves = ResultTable("curves", [(name, float), ("T", float), ("qfi", float)], curve_rows,
                         PlotHint("T", ["qfi"], group=name))
    D = len(many_body_spectrum(cfg.lattice(), cfg.particles).energies)
    env_rows = [(float(T), float(F), optimal_qfi_bound(D, T)) for T, F in zip(res.envelope.T, res.envelope.F)]
    env = ResultTable("envelope", [("T", float), ("envelope", float), ("bound_full_D", float)], env_rows,
                      PlotHint("T", ["envelope", "bound_full_D"]))
    opt_rows = []
    for v, opt, gap in zip(res.values, res.optima, res.gaps):
        excited = gap.excited_deg if gap is not None else 0
        opt_rows.append((
            float(v), opt.T_star, opt.F_star, opt.C_star, opt.at_boundary,
            gap.gap if gap is not None else math.nan, excited,
            manifold_qfi_bound(excited, opt.T_star) if excited else math.nan,
        ))
    opt_cols = [(name, float), ("T_star", float), ("F_star", float), ("C_star", float), ("at_boundary", bool),
                ("gap", float), ("excited_degeneracy", int), ("bound_manifold_at_T_star", float)]
    optima = ResultTable("optima", opt_cols, opt_rows, PlotHint(name, ["T_star"], scale="logy"))
    return [_add_nK(curves, cfg, "T"), _add_nK(env, cfg, "T"), _add_nK(optima, cfg, "T_star")]


def _task_cstar(cfg):
    rows = cstar_vs_delta(
        [int(L) for L in cfg.L_list.values()], cfg.filling, cfg.delta_grid.values(),
        (cfg.T_min, cfg.T_max), m=cfg.m, boundary=cfg.boundary,
    )
    cols = [("L", int), ("N", int), ("delta", float), ("T_star", float), ("C_star", float), ("at_boundary", bool)]
    table = ResultTable("cstar", cols, [tuple(r) for r in rows], PlotHint("delta", ["C_star"], group="L", scale="linear"))
    return [_add_nK(table, cfg, "T_star")]


def _task_fit(cfg):
    rows = gap_vs_m(cfg.lattice(), cfg.particles, cfg.m_grid.values(), cfg.rel_tol)
    points = [(r.m, r.gap) for r in rows if not r.gapless]
    model = fit_gap_model(points, cfg.fit_kind, (cfg.fit_m_min, cfg.fit_m_max))
    lo, hi = model.fit_window
    data_rows = [
        (r.m, r.gap, float(evaluate(model.kind, model.params, r.m)) if not r.gapless else math.nan,
         lo <= r.m <= hi and not r.gapless)
        for r in rows
    ]
    data = ResultTable("gap_fit_data", [("m", float), ("gap", float), ("fitted", float), ("in_window", bool)],
                       data_rows, PlotHint("m", ["gap", "fitted"], scale="linear"))
    A, B, C = model.params
    fit = ResultTable(
        "fit",
        [("kind", str), ("A", float), ("B", float), ("C", float), ("residual_rms", float),
         ("m_lo", float), ("m_hi", float), ("n_points", int), ("n_iter", int)],
        [(model.kind.value, A, B, C, model.residual_rms, lo, hi, model.n_points, model.n_iter)],
    )
    return [data, fit]


TASKS = {
    Task.SPECTRUM: _task_spectrum,
    Task.GAP: _task_gap,
    Task.WINDING: _task_winding,
    Task.QFI: _task_fisher,
    Task.CFI: _task_fisher,
    Task.BOUND: _task_bound,
    Task.SWEEP: _task_sweep,
    Task.CSTAR: _task_cstar,
    Task.FIT: _task_fit,
}


def compute_tables(cfg: RunConfig) -> list[ResultTable]:
    return TASKS[cfg.task](cfg)


def run(cfg: RunConfig, timestamp: str | None = None) -> list[Path]:
    """Execute the task and write one CSV (plus optional SVG) per table.

    Files already written are removed if anything fails.
    """
    out = Path(cfg.out)
    created_dir = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "version": __version__,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    prefix = cfg.preset or cfg.task.value
    written: list[Path] = []
    try:
        for table in compute_tables(cfg):
            path = out / f"{prefix}_{table.name}.csv"
            written.append(write_csv(path, table, cfg.to_pairs(), meta))
            if cfg.plot and table.plot is not None:
                written.append(plot_csv(path))
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        if created_dir:
            shutil.rmtree(out, ignore_errors=True)
        raise
    return written


def config_from_csv(path) -> RunConfig:
    """Rebuild the RunConfig echoed in a CSV preamble."""
    _, pairs, _, _, _ = read_csv(path)
    return build_config(pairs)


# -- argument parsing --------------------------------------------------------

_FLAGS = [
    ("--task", "task"), ("--L", "L"), ("--N", "N"), ("--filling", "filling"),
    ("--delta", "delta"), ("--m", "m"), ("--boundary", "boundary"),
    ("--T-min", "T_min"), ("--T-max", "T_max"), ("--T-points", "T_points"),
    ("--axis", "axis"), ("--delta-grid", "delta_grid"), ("--m-grid", "m_grid"), ("--L-list", "L_list"),
    ("--D", "D"), ("--rel-tol", "rel_tol"), ("--shots", "shots"),
    ("--fit-kind", "fit_kind"), ("--fit-m-min", "fit_m_min"), ("--fit-m-max", "fit_m_max"),
    ("--n-k", "n_k"), ("--n-levels", "n_levels"), ("--energy-scale-nK", "energy_scale_nK"),
    ("--preset", "preset"), ("--out", "out"), ("--workers", "workers"),
]


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topotherm",
        description="Rice-Mele quantum thermometer: spectra, Fisher information, sweeps and fits.",
    )
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    for flag, key in _FLAGS:
        extra = {"help": "lo:hi:n or a,b,c; write as --flag=-1:1:21 when the value starts with '-'"} if key.endswith(("_grid", "_list")) else {}
        parser.add_argument(flag, dest=key, metavar=key.upper() if len(key) == 1 else None, **extra)
    parser.add_argument("--plot", action="store_const", const="true", default=None, help="write SVG charts")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def config_from_args(argv=None) -> RunConfig:
    args = make_parser().parse_args(argv)
    file_pairs = parse_pairs(args.config.read_text(encoding="utf-8")) if args.config else {}
    flags = {key: getattr(args, key) for _, key in _FLAGS}
    flags["plot"] = args.plot
    return build_config(file_pairs, flags)


def _error_line(exc: BaseException) -> str:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SweepError):
        payload.update(axis=exc.axis, value=float(exc.value))
    return json.dumps(payload)


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except (ConfigError, OSError) as exc:
        print(_error_line(exc), file=sys.stderr)
        return 2
    try:
        paths = run(cfg)
    except Exception as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


def plot_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="topotherm-plot", description="Redraw SVG charts from CSV tables.")
    parser.add_argument("csv", nargs="+", type=Path)
    args = parser.parse_args(argv)
    for path in args.csv:
        print(plot_csv(path))
    return 0


if __name__ == "__main__":
    sys.exit(main())
