"""Fisher information for temperature estimation and the optimal-thermometer bound."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .thermal import CanonicalEnsemble, OccupationProfile, gibbs_ensemble

CFI_ZERO = 1e-15
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class FisherKind(str, Enum):
    QUANTUM = "quantum"
    CLASSICAL = "classical"
    BOUND_FULL_D = "bound_full_D"
    BOUND_MANIFOLD = "bound_manifold"


class MeasurementSingularityError(ValueError):
    """An outcome with zero probability still changes with temperature."""


class BoundaryMaximumWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class FisherCurve:
    T: np.ndarray
    F: np.ndarray
    kind: FisherKind = FisherKind.QUANTUM

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        F = np.asarray(self.F, dtype=float)
        if T.shape != F.shape or T.ndim != 1:
            raise ValueError("T and F must be 1-d arrays of equal length")
        if np.any(np.diff(T) <= 0):
            raise ValueError("temperatures must be strictly increasing")
        if np.any(F < 0):
            raise ValueError("Fisher information must be non-negative")
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "kind", FisherKind(self.kind))


@dataclass(frozen=True)
class OptimalPoint:
    T_star: float
    F_star: float
    C_star: float
    delta_T_bound: float
    at_boundary: bool = False


# -- quantum Fisher information ------------------------------------------------

def qfi_thermal(ens: CanonicalEnsemble) -> float:
    """Energy variance over ``T**4``."""
    return ens.energy_variance / ens.T**4


def sld_qfi_matrix(probabilities, drho) -> float:
    """``4 sum_{l,j} p_l |drho_lj|^2 / (p_l + p_j)^2`` in the eigenbasis of rho.

    Pairs with ``p_l + p_j == 0`` are dropped.
    """
    p = np.asarray(probabilities, dtype=float)
    drho = np.asarray(drho)
    denom = (p[:, None] + p[None, :]) ** 2
    num = p[:, None] * np.abs(drho) ** 2
    mask = denom > 0
    return float(4.0 * np.sum(num[mask] / denom[mask]))


def qfi_sld_form(energies, T: float) -> float:
    """Symmetric-logarithmic-derivative sum for a Gibbs state.

    ``d rho/dT`` is diagonal in the energy basis, so the double sum collapses
    to ``sum_l (dp_l/dT)**2 / p_l``.
    """
    ens = gibbs_ensemble(np.asarray(energies, dtype=float), T)
    p = ens.probabilities
    dp = ens.dprob_dT()
    keep = p > 0
    pk, dpk = p[keep], dp[keep]
    # (2p)^2 underflows long before dp/(2p) does
    return math.fsum(4.0 * pk * (dpk / (2.0 * pk)) ** 2)


# -- classical Fisher information --------------------------------------------

def cfi_from_distribution(p, dp_dT) -> float:
    p = np.asarray(p, dtype=float)
    dp = np.asarray(dp_dT, dtype=float)
    negligible = (p < CFI_ZERO) & (np.abs(dp) < CFI_ZERO)
    singular = (p <= 0) & ~negligible
    if np.any(singular):
        idx = np.flatnonzero(singular).tolist()
        raise MeasurementSingularityError(f"outcomes {idx} have p = 0 but dp/dT != 0")
    keep = ~negligible
    return math.fsum(dp[keep] ** 2 / p[keep])


def cfi_site_occupation(profile: OccupationProfile) -> float:
    """Classical Fisher information of one normalized site-occupation readout."""
    return cfi_from_distribution(profile.p, profile.dp_dT)


# -- optimal thermometer -------------------------------------------------------

def _check_dimension(D) -> int:
    if int(D) != D or D < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {D}")
    return int(D)


def gap_ratio_objective(x, D: int):
    """``x^2 e^x (D-1) / (D-1+e^x)^2`` evaluated in log space."""
    x = np.asarray(x, dtype=float)
    a = math.log(D - 1)
    return x**2 * np.exp(a + x - 2.0 * np.logaddexp(a, x))


def optimal_gap_ratio(D: int, tol: float = 1e-12) -> float:
    """Gap-to-temperature ratio ``x`` of the optimal ``D``-level thermometer.

    Solves the stationarity condition ``e^x = (D-1)(2+x)/(x-2)`` on
    ``x > 2`` by bisection.  Written as
    ``x + ln(x-2) - ln(D-1) - ln(x+2) = 0`` the left side is strictly
    increasing, so the root is unique.
    """
    D = _check_dimension(D)
    log_d1 = math.log(D - 1)

    def phi(x):
        return x + math.log(x - 2.0) - log_d1 - math.log(x + 2.0)

    lo, hi = 2.0, max(log_d1, 1.0) + 3.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if phi(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def optimal_qfi_bound(D: int, T: float) -> float:
    D = _check_dimension(D)
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    x = optimal_gap_ratio(D)
    return float(gap_ratio_objective(x, D)) / T**2


def manifold_qfi_bound(excited_deg: int, T: float) -> float:
    """Bound for a thermometer built from the ground state and its first excited manifold."""
    return optimal_qfi_bound(excited_deg + 1, T)


def large_D_qfi_bound(D: int, T: float) -> float:
    return (math.log(D) / (2.0 * T)) ** 2


def optimal_spectrum(D: int, gap: float = 1.0) -> np.ndarray:
    """Unique ground level at 0 plus ``D-1`` degenerate levels at ``gap``."""
    D = _check_dimension(D)
    E = np.full(D, float(gap))
    E[0] = 0.0
    return E


def cramer_rao_bound(F: float, shots: int = 1) -> float:
    """Smallest standard deviation ``1/sqrt(shots * F)`` for an unbiased estimate."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return math.inf if F <= 0 else 1.0 / math.sqrt(shots * F)


def find_optimal_temperature(
    curve_fn: Callable[[float], float],
    T_range: tuple[float, float],
    n_grid: int = 200,
    rtol: float = 1e-6,
    shots: int = 1,
) -> OptimalPoint:
    """Locate ``T* = argmax F(T)`` by a log-spaced scan and golden-section refinement.

    A maximum on either end of the scan returns that end point with
    ``at_boundary=True`` and emits :class:`BoundaryMaximumWarning`.
    """
    T_lo, T_hi = map(float, T_range)
    if not 0 < T_lo < T_hi:
        raise ValueError(f"need 0 < T_lo < T_hi, got {T_range}")
    u = np.linspace(math.log(T_lo), math.log(T_hi), n_grid)
    values = np.array([curve_fn(math.exp(v)) for v in u])
    best = int(np.argmax(values))
    if best in (0, n_grid - 1):
        warnings.warn(
            f"Fisher information maximal at range boundary T={math.exp(u[best]):.6g}",
            BoundaryMaximumWarning,
            stacklevel=2,
        )
        T_star, F_star, at_boundary = math.exp(u[best]), float(values[best]), True
    else:
        f = lambda v: -curve_fn(math.exp(v))  # noqa: E731
        a, b = u[best - 1], u[best + 1]
        c = b - _INV_PHI * (b - a)
        d = a + _INV_PHI * (b - a)
        fc, fd = f(c), f(d)
        # |d log T| ~ relative change in T
        while b - a > rtol:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - _INV_PHI * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, d, fd
                d = a + _INV_PHI * (b - a)
                fd = f(d)
        v = 0.5 * (a + b)
        T_star, F_star = math.exp(v), float(curve_fn(math.exp(v)))
        if F_star < values[best]:
            T_star, F_star = math.exp(u[best]), float(values[best])
        at_boundary = False
    return OptimalPoint(
        T_star=T_star,
        F_star=F_star,
        C_star=F_star * T_star**2,
        delta_T_bound=cramer_rao_bound(F_star, shots),
        at_boundary=at_boundary,
    )


def qfi_curve(energies, T_grid) -> FisherCurve:
    T_grid = np.asarray(T_grid, dtype=float)
    return FisherCurve(T_grid, np.array([qfi_thermal(gibbs_ensemble(energies, T)) for T in T_grid]))
