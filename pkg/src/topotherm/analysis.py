"""Parameter sweeps over the Rice-Mele thermometer."""

from __future__ import annotations

import dataclasses
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import NamedTuple, Sequence

import numpy as np

from .fitting import FitKind, FitModel, fit_gap_model  # noqa: F401  (re-export)
from .fock import (
    GapInfo,
    GaplessError,
    ManyBodySpectrum,
    enumerate_basis,
    many_body_energies,
    spectral_gap_and_degeneracy,
)
from .lattice import LatticeSpec, solve_lattice
from .metrology import (
    BoundaryMaximumWarning,
    FisherCurve,
    OptimalPoint,
    find_optimal_temperature,
    qfi_curve,
    qfi_thermal,
)
from .thermal import gibbs_ensemble


class FillingRule(str, Enum):
    BELOW_HALF = "L/2-1"
    HALF = "L/2"

    def particles(self, L: int) -> int:
        return L // 2 - 1 if self is FillingRule.BELOW_HALF else L // 2


class SweepAxis(str, Enum):
    DELTA = "delta"
    M = "m"


class SweepError(RuntimeError):
    def __init__(self, axis, value, cause):
        super().__init__(f"sweep failed at {axis}={value}: {cause}")
        self.axis, self.value = axis, value


@dataclass(frozen=True)
class SweepResult:
    axis: SweepAxis
    values: np.ndarray
    curves: list[FisherCurve]
    envelope: FisherCurve
    optima: list[OptimalPoint]
    gaps: list[GapInfo | None] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)


class CStarRow(NamedTuple):
    L: int
    N: int
    delta: float
    T_star: float
    C_star: float
    at_boundary: bool


class GapRow(NamedTuple):
    m: float
    gap: float
    ground_deg: int
    excited_deg: int
    gapless: bool


def log_temperature_grid(T_lo: float, T_hi: float, n: int) -> np.ndarray:
    if not 0 < T_lo < T_hi:
        raise ValueError(f"need 0 < T_lo < T_hi, got ({T_lo}, {T_hi})")
    if n < 2:
        raise ValueError(f"need at least 2 grid points, got {n}")
    T = np.geomspace(T_lo, T_hi, n)
    T[0], T[-1] = T_lo, T_hi
    return T


def many_body_spectrum(spec: LatticeSpec, N: int) -> ManyBodySpectrum:
    return many_body_energies(solve_lattice(spec), enumerate_basis(spec.L, N))


def envelope(curves: Sequence[FisherCurve]) -> FisherCurve:
    """Pointwise maximum over curves sampled on one shared grid."""
    T = curves[0].T
    for c in curves[1:]:
        if not np.array_equal(c.T, T):
            raise ValueError("envelope needs curves on a shared temperature grid")
    return FisherCurve(T, np.max([c.F for c in curves], axis=0), curves[0].kind)


def optimum_of_spectrum(energies, T_range, rtol=1e-6) -> OptimalPoint:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryMaximumWarning)
        return find_optimal_temperature(
            lambda T: qfi_thermal(gibbs_ensemble(energies, T)), T_range, rtol=rtol
        )


def _sweep_point(value, template, N, axis, T_grid, rel_tol):
    try:
        spec = dataclasses.replace(template, **{axis.value: float(value)})
        spectrum = many_body_spectrum(spec, N)
        curve = qfi_curve(spectrum.energies, T_grid)
        opt = optimum_of_spectrum(spectrum.energies, (T_grid[0], T_grid[-1]))
        try:
            gap = spectral_gap_and_degeneracy(spectrum.energies, rel_tol)
        except GaplessError:
            gap = None
    except Exception as exc:
        raise SweepError(axis.value, value, exc) from exc
    return curve, opt, gap


def sweep_qfi(
    template: LatticeSpec,
    N: int,
    axis: SweepAxis | str,
    grid,
    T_grid,
    rel_tol: float = 1e-9,
    workers: int = 1,
) -> SweepResult:
    """QFI curves, their envelope and per-curve optima along ``delta`` or ``m``.

    Results come back in grid order whatever ``workers`` is.
    """
    axis = SweepAxis(axis)
    values = np.asarray(grid, dtype=float)
    if values.size == 0:
        raise ValueError(f"empty {axis.value} grid")
    T_grid = np.asarray(T_grid, dtype=float)
    job = partial(_sweep_point, template=template, N=N, axis=axis, T_grid=T_grid, rel_tol=rel_tol)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(job, values))
    else:
        out = [job(v) for v in values]
    curves = [c for c, _, _ in out]
    return SweepResult(
        axis=axis,
        values=values,
        curves=curves,
        envelope=envelope(curves),
        optima=[o for _, o, _ in out],
        gaps=[g for _, _, g in out],
        provenance={
            "template": dataclasses.asdict(template),
            "N": N,
            "axis": axis.value,
            "rel_tol": rel_tol,
        },
    )


def cstar_vs_delta(
    L_list,
    filling_rule: FillingRule | str,
    delta_grid,
    T_range,
    m: float = 0.0,
    boundary="open",
) -> list[CStarRow]:
    rule = FillingRule(filling_rule)
    rows = []
    for L in L_list:
        N = rule.particles(L)
        for delta in delta_grid:
            spectrum = many_body_spectrum(LatticeSpec(L, float(delta), m, boundary), N)
            opt = optimum_of_spectrum(spectrum.energies, T_range)
            rows.append(CStarRow(L, N, float(delta), opt.T_star, opt.C_star, opt.at_boundary))
    return rows


def gap_vs_m(template: LatticeSpec, N: int, m_grid, rel_tol: float = 1e-9) -> list[GapRow]:
    rows = []
    for m in m_grid:
        spectrum = many_body_spectrum(dataclasses.replace(template, m=float(m)), N)
        try:
            info = spectral_gap_and_degeneracy(spectrum.energies, rel_tol)
        except GaplessError:
            rows.append(GapRow(float(m), 0.0, spectrum.D, 0, True))
            continue
        rows.append(GapRow(float(m), info.gap, info.ground_deg, info.excited_deg, False))
    return rows
