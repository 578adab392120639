import numpy as np
import pytest
from scipy.optimize import least_squares

from topotherm.analysis import (
    FillingRule,
    SweepError,
    cstar_vs_delta,
    envelope,
    gap_vs_m,
    log_temperature_grid,
    sweep_qfi,
)
from topotherm.fitting import (
    ConvergenceError,
    FitError,
    RankDeficiencyError,
    evaluate,
    fit_gap_model,
    jacobian,
)
from topotherm.lattice import LatticeSpec
from topotherm.metrology import FisherCurve, find_optimal_temperature, optimal_spectrum, qfi_thermal
from topotherm.thermal import gibbs_ensemble

EXP3_REF = (0.76418, 0.64130, 0.13517)
POW3_REF = (0.35598, 1.44097, 1.74417)


def test_log_grid():
    np.testing.assert_allclose(log_temperature_grid(0.01, 1, 3), [0.01, 0.1, 1.0], rtol=1e-15)
    T = log_temperature_grid(1e-3, 1e1, 201)
    assert len(T) == 201
    assert T[0] == 1e-3 and T[-1] == 1e1
    ratio = T[1:] / T[:-1]
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)


@pytest.mark.parametrize("args", [(1.0, 0.5, 3), (0.0, 1.0, 3), (1e-3, 1.0, 1)])
def test_log_grid_rejects(args):
    with pytest.raises(ValueError):
        log_temperature_grid(*args)


def test_envelope_dominates():
    T = np.array([0.1, 0.2, 0.3])
    a = FisherCurve(T, [1.0, 5.0, 2.0])
    b = FisherCurve(T, [3.0, 1.0, 2.5])
    np.testing.assert_array_equal(envelope([a, b]).F, [3.0, 5.0, 2.5])
    with pytest.raises(ValueError):
        envelope([a, FisherCurve(T * 2, [1.0, 1.0, 1.0])])


@pytest.fixture(scope="module")
def fig3b_small():
    T = log_temperature_grid(1e-2, 1e1, 61)
    return sweep_qfi(LatticeSpec(12, 0.0, 0.0), 6, "delta", np.linspace(-1, 1, 9), T)


def test_delta_sweep_envelope(fig3b_small):
    res = fig3b_small
    for c in res.curves:
        assert np.all(res.envelope.F >= c.F)
    assert len(res.optima) == len(res.values) == 9
    assert res.provenance["axis"] == "delta"


def test_delta_sweep_peak_moves(fig3b_small):
    T_star = np.array([o.T_star for o in fig3b_small.optima])
    # away from the gapless midpoint the peak shifts with dimerization
    assert len(set(np.round(T_star, 6))) > 3
    upper = T_star[4:]
    assert np.all(np.diff(upper) > 0)


def test_single_point_sweep():
    T = log_temperature_grid(1e-2, 1e1, 21)
    res = sweep_qfi(LatticeSpec(8, -0.5, 0.0), 3, "m", [1.0], T)
    np.testing.assert_array_equal(res.envelope.F, res.curves[0].F)


def test_sweep_parallel_matches_serial():
    T = log_temperature_grid(1e-2, 1e1, 21)
    grid = [0.0, 1.0, 2.0, 4.0]
    a = sweep_qfi(LatticeSpec(8, -1.0, 0.0), 3, "m", grid, T)
    b = sweep_qfi(LatticeSpec(8, -1.0, 0.0), 3, "m", grid, T, workers=2)
    for ca, cb in zip(a.curves, b.curves):
        np.testing.assert_array_equal(ca.F, cb.F)
    assert [o.T_star for o in a.optima] == [o.T_star for o in b.optima]


def test_sweep_failure_names_the_point():
    T = log_temperature_grid(1e-2, 1e1, 5)
    with pytest.raises(SweepError) as err:
        sweep_qfi(LatticeSpec(8, 0.0, 0.0), 3, "delta", [0.5, 1.5], T)
    assert err.value.value == 1.5


def test_mass_sweep_tunes_T_star():
    T = log_temperature_grid(1e-3, 1e1, 81)
    res = sweep_qfi(LatticeSpec(12, -1.0, 0.0), 5, "m", [0.5, 2.0, 5.0, 10.0], T)
    T_star = [o.T_star for o in res.optima]
    assert np.all(np.diff(T_star) < 0)


def test_cstar_single_L_row_per_delta():
    rows = cstar_vs_delta([8], "L/2-1", [-1.0, 0.0, 1.0], (1e-3, 1e1))
    assert [(r.L, r.N, r.delta) for r in rows] == [(8, 3, -1.0), (8, 3, 0.0), (8, 3, 1.0)]
    for r in rows:
        assert r.C_star > 0


def test_cstar_grows_with_L_topological():
    rows = cstar_vs_delta([8, 10, 12], FillingRule.BELOW_HALF, [-1.0], (1e-3, 1e1))
    assert np.all(np.diff([r.C_star for r in rows]) > 0)


@pytest.mark.parametrize("gap", [0.5, 1.0, 2.0])
def test_ideal_spectrum_cstar_gap_independent(gap):
    E = optimal_spectrum(200, gap)
    ref = find_optimal_temperature(lambda T: qfi_thermal(gibbs_ensemble(optimal_spectrum(200, 1.0), T)), (1e-3, 1e2))
    opt = find_optimal_temperature(lambda T: qfi_thermal(gibbs_ensemble(E, T)), (1e-3, 1e2))
    assert opt.C_star == pytest.approx(ref.C_star, rel=1e-5)


def test_filling_rules():
    assert FillingRule("L/2-1").particles(16) == 7
    assert FillingRule("L/2").particles(16) == 8


def test_gap_vs_m_topological():
    ms = [0.0, 1.0, 2.0, 5.0, 10.0]
    rows = gap_vs_m(LatticeSpec(16, -1.0), 7, ms)
    np.testing.assert_allclose([r.gap for r in rows], np.sqrt(4 + np.square(ms)) - ms, atol=1e-9)
    assert [r.excited_deg for r in rows] == [14, 7, 7, 7, 7]
    assert np.all(np.diff([r.gap for r in rows]) < 0)


def test_gap_vs_m_trivial():
    rows = gap_vs_m(LatticeSpec(16, 1.0), 8, [0.0, 2.0, 4.0])
    np.testing.assert_allclose([r.gap for r in rows], [4.0, 2 * np.sqrt(8), 2 * np.sqrt(20)], atol=1e-9)
    assert np.all(np.diff([r.gap for r in rows]) > 0)
    assert {r.excited_deg for r in rows} == {64}


def test_gap_vs_m_records_gapless():
    rows = gap_vs_m(LatticeSpec(4, 1.0), 2, [0.0])
    assert not rows[0].gapless
    # a single orbital sector with two degenerate states
    rows = gap_vs_m(LatticeSpec(4, -1.0), 1, [0.0])
    assert rows[0].ground_deg == 1


# -- fitting -----------------------------------------------------------------

def synthetic(kind, params, m):
    return np.column_stack([m, evaluate(kind, params, m)])


def test_exp3_recovers_reference_parameters():
    m = np.linspace(0, 10, 50)
    fit = fit_gap_model(synthetic("exp3", EXP3_REF, m), "exp3", (0, 10))
    np.testing.assert_allclose(fit.params, EXP3_REF, atol=1e-6)
    assert fit.residual_rms < 1e-10
    assert fit.fit_window == (0.0, 10.0)


def test_pow3_recovers_reference_parameters():
    m = np.linspace(0.2, 10, 50)
    fit = fit_gap_model(synthetic("pow3", POW3_REF, m), "pow3", (0.2, 10))
    np.testing.assert_allclose(fit.params, POW3_REF, atol=1e-6)
    assert fit.residual_rms < 1e-10


@pytest.mark.parametrize("kind, ref, m", [("exp3", EXP3_REF, np.linspace(0, 10, 50)), ("pow3", POW3_REF, np.linspace(0.2, 10, 50))])
def test_refit_is_idempotent(kind, ref, m):
    pts = synthetic(kind, ref, m)
    first = fit_gap_model(pts, kind, (0, 10))
    again = fit_gap_model(pts, kind, (0, 10), init=first.params)
    np.testing.assert_allclose(again.params, first.params, atol=1e-12, rtol=0)


def test_analytic_jacobians_match_finite_differences():
    m = np.linspace(0.3, 8, 11)
    for kind, p in (("exp3", EXP3_REF), ("pow3", POW3_REF)):
        J = jacobian(kind, p, m)
        for j in range(3):
            dp = np.zeros(3)
            dp[j] = 1e-6
            fd = (evaluate(kind, np.add(p, dp), m) - evaluate(kind, np.subtract(p, dp), m)) / 2e-6
            np.testing.assert_allclose(J[:, j], fd, rtol=1e-7, atol=1e-9)


def test_lm_matches_reference_solver_on_gap_data():
    ms = np.linspace(0, 10, 41)
    rows = gap_vs_m(LatticeSpec(16, -1.0), 7, ms)
    pts = np.array([(r.m, r.gap) for r in rows])
    fit = fit_gap_model(pts, "exp3", (0, 10))
    ref = least_squares(
        lambda p: evaluate("exp3", p, pts[:, 0]) - pts[:, 1], fit.params, method="lm", xtol=1e-15, ftol=1e-15
    )
    np.testing.assert_allclose(fit.params, ref.x, rtol=1e-7)
    assert fit.residual_rms > 0


def test_noisy_fit_close_to_reference():
    rng = np.random.default_rng(3)
    m = np.linspace(0, 10, 60)
    pts = synthetic("exp3", EXP3_REF, m)
    pts[:, 1] += rng.normal(scale=1e-3, size=len(m))
    fit = fit_gap_model(pts, "exp3", (0, 10))
    np.testing.assert_allclose(fit.params, EXP3_REF, rtol=0.05)


def test_fit_window_filters_points():
    m = np.linspace(0, 10, 50)
    fit = fit_gap_model(synthetic("exp3", EXP3_REF, m), "exp3", (2, 8))
    assert fit.n_points == int(np.sum((m >= 2) & (m <= 8)))


def test_fit_errors():
    m = np.linspace(0, 5, 10)
    with pytest.raises(RankDeficiencyError):
        fit_gap_model(np.column_stack([m, np.ones_like(m)]), "exp3", (0, 5))
    with pytest.raises(ValueError):
        fit_gap_model(synthetic("exp3", EXP3_REF, m[:3]), "exp3", (0, 5))
    with pytest.raises(ValueError):
        fit_gap_model(synthetic("pow3", POW3_REF, m + 0.1).tolist() + [[0.0, 1.0]], "pow3", (0, 10))
    with pytest.raises(ConvergenceError) as err:
        fit_gap_model(synthetic("exp3", EXP3_REF, m), "exp3", (0, 5), init=(3.0, 0.1, 0.0), max_iter=1)
    assert len(err.value.last) == 3
    assert issubclass(ConvergenceError, FitError)
