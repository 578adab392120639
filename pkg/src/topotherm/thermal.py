"""Canonical Gibbs state over a many-body spectrum (``k_B = 1``)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import ManyBodySpectrum

T_FLOOR = 1e-12


@dataclass(frozen=True)
class CanonicalEnsemble:
    T: float
    energies: np.ndarray
    probabilities: np.ndarray
    log_Z: float
    mean_energy: float
    energy_variance: float
    ground_energy: float = 0.0
    mean_excitation: float = 0.0

    @property
    def beta(self) -> float:
        return 1.0 / self.T

    def dprob_dT(self) -> np.ndarray:
        """Exact ``dp_S/dT = p_S (E_S - <H>) / T**2``."""
        e = self.energies - self.ground_energy
        return self.probabilities * (e - self.mean_excitation) / self.T**2


@dataclass(frozen=True)
class OccupationProfile:
    N: int
    mean_n: np.ndarray
    d_mean_n_dT: np.ndarray

    @property
    def p(self) -> np.ndarray:
        """Site occupations normalized into an ``L``-outcome distribution."""
        return self.mean_n / self.N

    @property
    def dp_dT(self) -> np.ndarray:
        return self.d_mean_n_dT / self.N


def _check_temperature(T: float) -> float:
    T = float(T)
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    if T < T_FLOOR:
        raise ValueError(f"temperature {T} below {T_FLOOR} is numerically degenerate")
    return T


def gibbs_ensemble(spectrum: ManyBodySpectrum | np.ndarray, T: float) -> CanonicalEnsemble:
    """Gibbs weights shifted by the ground energy so nothing overflows.

    ``spectrum`` may also be a bare array of energies.
    """
    T = _check_temperature(T)
    E = np.asarray(getattr(spectrum, "energies", spectrum), dtype=float)
    E_min = float(E.min())
    # moments about the ground energy: exact zero variance for flat spectra,
    # and the thermal part of <H> stays resolvable at low T
    e = E - E_min
    w = np.exp(-e / T)
    Z_shift = math.fsum(w)
    p = w / Z_shift
    excitation = math.fsum(p * e)
    var = math.fsum(p * (e - excitation) ** 2)
    return CanonicalEnsemble(
        T=T,
        energies=E,
        probabilities=p,
        log_Z=math.log(Z_shift) - E_min / T,
        mean_energy=E_min + excitation,
        energy_variance=var,
        ground_energy=E_min,
        mean_excitation=excitation,
    )


def thermal_site_occupations(spectrum: ManyBodySpectrum, ens: CanonicalEnsemble) -> OccupationProfile:
    if spectrum.D != len(ens.probabilities):
        raise ValueError(f"spectrum has D={spectrum.D}, ensemble has {len(ens.probabilities)} weights")
    n = ens.probabilities @ spectrum.site_densities
    # centred form of (<n_i H> - <n_i><H>) / T^2
    dn = ens.dprob_dT() @ spectrum.site_densities
    return OccupationProfile(spectrum.N, n, dn)
