"""Single-particle Rice-Mele chain: hopping matrix, eigenbasis, winding number.

Sites are indexed ``0..L-1``.  Bond ``i`` joins sites ``i`` and ``i+1`` with
amplitude ``1 + (-1)**i * delta`` and site ``i`` carries ``m * (-1)**i``.  With
this origin ``delta = -1`` switches off the even bonds, so in an open chain
sites ``0`` and ``L-1`` decouple and host the edge modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Boundary(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class GapClosingError(ValueError):
    """The Bloch vector vanishes somewhere on the Brillouin zone."""


@dataclass(frozen=True)
class LatticeSpec:
    """Dial settings of the chain (energies in units of the bare hopping)."""

    L: int
    delta: float = 0.0
    m: float = 0.0
    boundary: Boundary = Boundary.OPEN

    def __post_init__(self):
        if isinstance(self.L, bool) or int(self.L) != self.L:
            raise ValueError(f"L must be an integer, got {self.L!r}")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.L < 4 and not (self.L == 2 and self.boundary is Boundary.OPEN):
            raise ValueError(f"L must be >= 4, got {self.L}")
        if self.L % 2:
            raise ValueError(f"L must be even, got {self.L}")
        if not -1.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [-1, 1], got {self.delta}")
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")


@dataclass(frozen=True)
class SingleParticleSystem:
    """Orbital energies (ascending) and orbitals; column ``k`` is orbital ``k``."""

    energies: np.ndarray
    orbitals: np.ndarray

    @property
    def L(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class BlochVector:
    h_x: np.ndarray
    h_y: np.ndarray
    h_z: np.ndarray


def bond_amplitudes(spec: LatticeSpec) -> np.ndarray:
    """Amplitude of every bond, wrap bond ``L-1 -> 0`` last when periodic."""
    n_bonds = spec.L if spec.boundary is Boundary.PERIODIC else spec.L - 1
    parity = np.where(np.arange(n_bonds) % 2 == 0, 1.0, -1.0)
    return 1.0 + parity * spec.delta


def onsite_energies(spec: LatticeSpec) -> np.ndarray:
    return spec.m * np.where(np.arange(spec.L) % 2 == 0, 1.0, -1.0)


def build_single_particle_hamiltonian(spec: LatticeSpec) -> np.ndarray:
    L = spec.L
    H = np.diag(onsite_energies(spec))
    for i, t in enumerate(bond_amplitudes(spec)):
        j = (i + 1) % L
        H[i, j] += t
        H[j, i] += t
    return H


def diagonalize_single_particle(H: np.ndarray, atol: float = 1e-12) -> SingleParticleSystem:
    """Dense symmetric eigendecomposition of a one-body matrix.

    Raises
    ------
    ValueError
        If ``H`` is not square or not symmetric within ``atol``.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if not np.allclose(H, H.T, rtol=0.0, atol=atol):
        raise ValueError("single-particle Hamiltonian is not symmetric")
    energies, orbitals = np.linalg.eigh(H)
    energies.setflags(write=False)
    orbitals.setflags(write=False)
    return SingleParticleSystem(energies, orbitals)


def solve_lattice(spec: LatticeSpec) -> SingleParticleSystem:
    return diagonalize_single_particle(build_single_particle_hamiltonian(spec))


def bloch_vector(k, delta: float, m: float = 0.0) -> BlochVector:
    """Two-band Bloch vector ``h(k)`` of the periodic chain, unit cell of two sites."""
    k = np.asarray(k, dtype=float)
    return BlochVector(
        h_x=1.0 + delta + (1.0 - delta) * np.cos(k),
        h_y=(1.0 - delta) * np.sin(k),
        h_z=np.full_like(k, float(m)),
    )


def winding_number(delta: float, n_k: int = 256) -> int:
    """Winding of ``(h_x, h_y)`` around the origin in the SSH limit.

    The phase increments between neighbouring k-points are wrapped to
    ``(-pi, pi]`` and summed around the closed loop, so the result is an exact
    integer multiple of ``2*pi`` for any gapped loop.

    >>> winding_number(-1.0), winding_number(1.0)
    (1, 0)
    """
    if n_k < 64:
        raise ValueError(f"n_k must be >= 64, got {n_k}")
    if not -1.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [-1, 1], got {delta}")
    if delta == 0.0:
        raise GapClosingError("delta = 0 closes the gap at k = pi; winding undefined")
    k = np.linspace(0.0, 2.0 * np.pi, n_k, endpoint=False)
    h = bloch_vector(k, delta)
    theta = np.arctan2(h.h_y, h.h_x)
    step = np.diff(np.append(theta, theta[0]))
    # wrap to (-pi, pi]
    step = np.pi - np.mod(np.pi - step, 2.0 * np.pi)
    return int(round(step.sum() / (2.0 * np.pi)))
