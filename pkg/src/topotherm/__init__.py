"""Topological quantum thermometry with spinless fermions on a Rice-Mele chain."""

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    Boundary,
    LatticeSpec,
    SingleParticleSystem,
    build_single_particle_hamiltonian,
    diagonalize_single_particle,
    solve_lattice,
    winding_number,
)
from .fock import (  # noqa: E402
    ManyBodySpectrum,
    OccupationBasis,
    dense_many_body_hamiltonian,
    enumerate_basis,
    many_body_energies,
    spectral_gap_and_degeneracy,
)
from .thermal import CanonicalEnsemble, OccupationProfile, gibbs_ensemble, thermal_site_occupations  # noqa: E402
from .metrology import (  # noqa: E402
    FisherCurve,
    OptimalPoint,
    cfi_site_occupation,
    find_optimal_temperature,
    optimal_gap_ratio,
    optimal_qfi_bound,
    qfi_sld_form,
    qfi_thermal,
)
from .analysis import many_body_spectrum, sweep_qfi  # noqa: E402
