"""Fixed-particle-number Fock space of spinless fermions.

The production path composes Slater-determinant energies from orbital
energies.  :func:`dense_many_body_hamiltonian` builds the second-quantized
Hamiltonian in the site-occupation basis and exists only to cross-check that
composition on small systems.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import NamedTuple

import numpy as np

from .lattice import LatticeSpec, SingleParticleSystem, bond_amplitudes, onsite_energies

DEFAULT_MAX_DIM = 10**7
DENSE_MAX_DIM = 10**4


class DimensionError(ValueError):
    """Requested Hilbert space exceeds the configured size cap."""


class GaplessError(ValueError):
    """All levels fall into a single quasi-degenerate manifold."""


@dataclass(frozen=True)
class OccupationBasis:
    """Size-``N`` subsets of ``range(L)`` in lexicographic order, one row each.

    The same subsets label occupied orbitals (free-fermion composition) or
    occupied sites (dense oracle), depending on the caller.
    """

    L: int
    N: int
    states: np.ndarray

    @property
    def D(self) -> int:
        return len(self.states)

    @property
    def filling(self) -> float:
        return self.N / self.L

    def indicator(self) -> np.ndarray:
        """``D x L`` 0/1 matrix, ``[S, k] = 1`` when ``k`` is in subset ``S``."""
        occ = np.zeros((self.D, self.L))
        np.put_along_axis(occ, self.states, 1.0, axis=1)
        return occ


@dataclass(frozen=True)
class ManyBodySpectrum:
    """Slater-determinant energies and site densities, rows in basis order."""

    energies: np.ndarray
    site_densities: np.ndarray
    N: int

    @property
    def D(self) -> int:
        return len(self.energies)

    @property
    def L(self) -> int:
        return self.site_densities.shape[1]


class GapInfo(NamedTuple):
    gap: float
    ground_deg: int
    excited_deg: int
    rel_tol: float


def enumerate_basis(L: int, N: int, max_dim: int = DEFAULT_MAX_DIM) -> OccupationBasis:
    if not 0 < N < L:
        raise ValueError(f"need 0 < N < L, got L={L}, N={N}")
    D = comb(L, N)
    if D > max_dim:
        raise DimensionError(f"C({L},{N}) = {D} exceeds the cap of {max_dim}")
    states = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(L), N)),
        dtype=np.intp,
        count=D * N,
    ).reshape(D, N)
    states.setflags(write=False)
    return OccupationBasis(L, N, states)


def snap_degenerate(energies, tol: float = 1e-12) -> np.ndarray:
    """Replace runs of numerically equal sorted values by their mean.

    Neighbours closer than ``tol * max(1, max|e|)`` count as equal.  This
    makes degenerate Slater determinants bitwise degenerate instead of split
    by eigensolver rounding.
    """
    e = np.array(energies, dtype=float)
    thresh = tol * max(1.0, float(np.abs(e).max()))
    starts = np.r_[0, np.flatnonzero(np.diff(e) > thresh) + 1, len(e)]
    for a, b in zip(starts[:-1], starts[1:]):
        if b - a > 1:
            e[a:b] = e[a:b].mean()
    return e


def many_body_energies(
    sp: SingleParticleSystem, basis: OccupationBasis, degeneracy_tol: float = 1e-12
) -> ManyBodySpectrum:
    if sp.L != basis.L:
        raise ValueError(f"{sp.L} orbitals but basis has L={basis.L}")
    orbital_e = snap_degenerate(sp.energies, degeneracy_tol) if degeneracy_tol else sp.energies
    energies = orbital_e[basis.states].sum(axis=1)
    # n_i^(S) = sum_{k in S} |phi_k(i)|^2
    densities = basis.indicator() @ (sp.orbitals**2).T
    return ManyBodySpectrum(energies, densities, basis.N)


def dense_many_body_hamiltonian(
    spec: LatticeSpec, basis: OccupationBasis, max_dim: int = DENSE_MAX_DIM
) -> np.ndarray:
    """Rice-Mele Hamiltonian as a ``D x D`` matrix in the site-occupation basis.

    Creation operators are ordered by ascending site index, so
    ``c_i^dag c_j`` picks up ``(-1)**n`` with ``n`` the number of occupied
    sites strictly between ``i`` and ``j``.  That also covers the wrap bond of
    a periodic chain.
    """
    if basis.L != spec.L:
        raise ValueError(f"basis L={basis.L} does not match lattice L={spec.L}")
    if basis.D > max_dim:
        raise DimensionError(f"dense oracle limited to D <= {max_dim}, got {basis.D}")
    L = spec.L
    index = {tuple(s): n for n, s in enumerate(basis.states.tolist())}
    eps = onsite_energies(spec)
    bonds = [(b, (b + 1) % L, t) for b, t in enumerate(bond_amplitudes(spec))]
    H = np.zeros((basis.D, basis.D))
    for col, state in enumerate(basis.states.tolist()):
        occupied = set(state)
        H[col, col] = eps[state].sum()
        for a, b, t in bonds:
            if t == 0.0:
                continue
            for src, dst in ((a, b), (b, a)):
                if src not in occupied or dst in occupied:
                    continue
                lo, hi = min(src, dst), max(src, dst)
                n_between = sum(1 for s in state if lo < s < hi)
                target = tuple(sorted(occupied - {src} | {dst}))
                H[index[target], col] += t * (-1.0) ** n_between
    return H


def spectral_gap_and_degeneracy(energies, rel_tol: float = 1e-9) -> GapInfo:
    """Split the lowest levels into quasi-degenerate manifolds.

    Neighbouring sorted levels share a manifold when they differ by less than
    ``rel_tol`` times the full spectral span.  The gap is the difference of
    the mean energies of the two lowest manifolds.
    """
    E = np.sort(np.asarray(energies, dtype=float))
    if len(E) < 2:
        raise ValueError("need at least two levels")
    span = E[-1] - E[0]
    breaks = np.flatnonzero(np.diff(E) >= rel_tol * span) + 1 if span > 0 else []
    if len(breaks) == 0:
        raise GaplessError("all levels lie in a single quasi-degenerate manifold")
    first = breaks[0]
    second = breaks[1] if len(breaks) > 1 else len(E)
    gap = E[first:second].mean() - E[:first].mean()
    return GapInfo(float(gap), int(first), int(second - first), rel_tol)


def lowest_levels(spectrum: ManyBodySpectrum, n: int | None = None) -> np.ndarray:
    E = np.sort(spectrum.energies)
    return E if n is None else E[:n]
