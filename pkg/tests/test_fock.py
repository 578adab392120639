import itertools
from math import comb

import numpy as np
import pytest

from topotherm.fock import (
    DimensionError,
    GaplessError,
    dense_many_body_hamiltonian,
    enumerate_basis,
    many_body_energies,
    spectral_gap_and_degeneracy,
)
from topotherm.lattice import LatticeSpec, solve_lattice


def test_basis_small():
    b = enumerate_basis(4, 1)
    assert b.D == 4
    assert b.states.tolist() == [[0], [1], [2], [3]]
    assert enumerate_basis(4, 2).D == 6


def test_basis_half_filled_16():
    b = enumerate_basis(16, 8)
    assert b.D == 12870 == comb(16, 8)
    rows = [tuple(r) for r in b.states.tolist()]
    assert rows == sorted(set(rows))
    assert all(list(r) == sorted(set(r)) for r in rows)


@pytest.mark.parametrize("L, N", [(8, 3), (10, 5), (6, 1)])
def test_each_orbital_appears_binomially_often(L, N):
    ind = enumerate_basis(L, N).indicator()
    np.testing.assert_array_equal(ind.sum(axis=0), comb(L - 1, N - 1))


@pytest.mark.parametrize("N", [0, 4, -1, 5])
def test_basis_rejects_bad_particle_number(N):
    with pytest.raises(ValueError):
        enumerate_basis(4, N)


def test_basis_cap():
    with pytest.raises(DimensionError):
        enumerate_basis(20, 10, max_dim=1000)


def test_single_particle_sector_reproduces_orbitals():
    sp = solve_lattice(LatticeSpec(4, 0.3, 0.2))
    mb = many_body_energies(sp, enumerate_basis(4, 1))
    np.testing.assert_allclose(mb.energies, sp.energies)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        many_body_energies(solve_lattice(LatticeSpec(4)), enumerate_basis(6, 2))


def test_ground_energies_of_dimer_limits(spectrum_cache):
    s = spectrum_cache(16, 7, -1.0, 0.0)
    assert s.energies.min() == pytest.approx(-14.0, abs=1e-12)
    s = spectrum_cache(16, 8, 1.0, 0.0)
    E = np.sort(s.energies)
    assert E[0] == pytest.approx(-16.0, abs=1e-12)
    assert E[1] - E[0] > 1.0


@pytest.mark.parametrize("args", [(16, 7, -1.0, 0.0), (12, 6, 0.3, 1.5), (10, 4, -0.5, 2.0, "periodic")])
def test_site_density_invariants(spectrum_cache, args):
    s = spectrum_cache(*args)
    np.testing.assert_allclose(s.site_densities.sum(axis=1), args[1], atol=1e-10)
    assert s.site_densities.min() >= -1e-12
    assert s.site_densities.max() <= 1 + 1e-12


def test_ground_state_is_lowest_orbitals():
    sp = solve_lattice(LatticeSpec(10, 0.2, 0.7))
    b = enumerate_basis(10, 4)
    mb = many_body_energies(sp, b)
    assert b.states[np.argmin(mb.energies)].tolist() == [0, 1, 2, 3]


def test_dense_two_site():
    H = dense_many_body_hamiltonian(LatticeSpec(2, 0.0, 0.0), enumerate_basis(2, 1))
    np.testing.assert_array_equal(H, [[0.0, 1.0], [1.0, 0.0]])


def test_dense_pairwise_sums():
    spec = LatticeSpec(4, 0.0, 0.0)
    b = enumerate_basis(4, 2)
    e = solve_lattice(spec).energies
    pair_sums = sorted(e[i] + e[j] for i, j in itertools.combinations(range(4), 2))
    np.testing.assert_allclose(np.linalg.eigvalsh(dense_many_body_hamiltonian(spec, b)), pair_sums, atol=1e-12)


def test_dense_hamiltonian_is_symmetric():
    H = dense_many_body_hamiltonian(LatticeSpec(8, 0.4, 1.2, "periodic"), enumerate_basis(8, 3))
    assert H.shape == (56, 56)
    np.testing.assert_array_equal(H, H.T)


def test_jordan_wigner_sign_matters():
    # periodic 4-site, 2 particles: wrap hop passes an occupied site for
    # some states; dropping signs would change the spectrum
    spec = LatticeSpec(4, 0.0, 0.0, "periodic")
    b = enumerate_basis(4, 2)
    H = dense_many_body_hamiltonian(spec, b)
    unsigned = np.abs(H)
    composed = np.sort(many_body_energies(solve_lattice(spec), b).energies)
    np.testing.assert_allclose(np.linalg.eigvalsh(H), composed, atol=1e-12)
    assert not np.allclose(np.linalg.eigvalsh(unsigned), composed, atol=1e-6)


@pytest.mark.parametrize("delta, m", [(0.37, 0.81), (-0.6, 2.0), (1.0, 0.0)])
@pytest.mark.parametrize("boundary", ["open", "periodic"])
def test_dense_oracle_matches_composition_L8_N3(delta, m, boundary):
    spec = LatticeSpec(8, delta, m, boundary)
    b = enumerate_basis(8, 3)
    ed = np.linalg.eigvalsh(dense_many_body_hamiltonian(spec, b))
    composed = np.sort(many_body_energies(solve_lattice(spec), b).energies)
    np.testing.assert_allclose(ed, composed, atol=1e-9)


def test_dense_cap():
    with pytest.raises(DimensionError):
        dense_many_body_hamiltonian(LatticeSpec(16), enumerate_basis(16, 8))


def test_gap_clustering_synthetic():
    info = spectral_gap_and_degeneracy([3.0, 1.0, 1.0 + 1e-13, 0.0, 1.0])
    assert (info.ground_deg, info.excited_deg, info.rel_tol) == (1, 3, 1e-9)
    assert info.gap == pytest.approx(1.0, abs=1e-12)


def test_gapless_signal():
    with pytest.raises(GaplessError):
        spectral_gap_and_degeneracy([1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        spectral_gap_and_degeneracy([1.0])


@pytest.mark.parametrize(
    "L, N, delta, m, gap, excited",
    [
        (16, 7, -1.0, 0.0, 2.0, 14),
        (16, 8, 1.0, 0.0, 4.0, 64),
        (16, 7, -1.0, 2.0, np.sqrt(8) - 2, 7),
        (14, 6, -1.0, 0.0, 2.0, 12),
    ],
)
def test_figure_degeneracies(spectrum_cache, L, N, delta, m, gap, excited):
    info = spectral_gap_and_degeneracy(spectrum_cache(L, N, delta, m).energies, 1e-9)
    assert info.ground_deg == 1
    assert info.excited_deg == excited
    assert info.gap == pytest.approx(gap, abs=1e-9)


@pytest.mark.parametrize("m", [0.0, 1.0, 2.0, 5.0, 10.0])
def test_analytic_gap_laws(spectrum_cache, m):
    top = spectral_gap_and_degeneracy(spectrum_cache(16, 7, -1.0, m).energies)
    assert top.gap == pytest.approx(np.sqrt(4 + m * m) - m, abs=1e-9)
    triv = spectral_gap_and_degeneracy(spectrum_cache(16, 8, 1.0, m).energies)
    assert triv.gap == pytest.approx(2 * np.sqrt(4 + m * m), abs=1e-9)


def test_degenerate_orbitals_give_exactly_degenerate_states(spectrum_cache):
    # two edge zero modes at delta=-1, N=L/2: doubly degenerate ground state
    E = np.sort(spectrum_cache(8, 4, -1.0, 0.0).energies)
    assert E[0] == E[1]
    assert E[2] > E[1] + 1.0


def test_snap_degenerate():
    from topotherm.fock import snap_degenerate

    out = snap_degenerate([-1.0, -1e-16, 2e-16, 3.0])
    assert out[1] == out[2] == pytest.approx(5e-17)
    assert out[0] == -1.0 and out[3] == 3.0
