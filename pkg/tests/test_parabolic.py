import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from kirchhoff import NonlinearityParams, ParabolicKirchhoff, SpectralOperator, check_dv_properties, parabolic_solve
from kirchhoff.parabolic import parabolic_rhs, parabolic_second_derivative
from kirchhoff.rates import fit_power_law

from conftest import make_config


def closed_form(t, u0):
    return u0 / np.sqrt(1.0 + 2.0 * u0**2 * t)


def test_rhs_examples():
    op, prm = SpectralOperator([1.0]), NonlinearityParams(1.0, 0.0)
    np.testing.assert_array_equal(parabolic_rhs(0.0, [1.0], op, prm), [-1.0])
    np.testing.assert_array_equal(parabolic_rhs(0.3, [0.0], op, prm), [0.0])
    np.testing.assert_array_equal(parabolic_rhs(1.0, [2.0], op, NonlinearityParams(1.0, 1.0)), [-16.0])
    with pytest.raises(ValueError):
        parabolic_rhs(0.0, [1.0, 2.0], op, prm)


def test_single_mode_closed_form():
    traj = parabolic_solve(make_config(u0=[1.0]), horizon=10.0)
    assert traj.at(1.5)[0] == pytest.approx(0.5, abs=1e-9)
    np.testing.assert_allclose(traj.states[:, 0], closed_form(traj.times, 1.0), rtol=1e-8)


def test_stationary_on_kernel():
    cfg = make_config(eigenvalues=[0.0, 2.0], u0=[1.0, 0.0])
    traj = parabolic_solve(cfg, horizon=100.0)
    np.testing.assert_array_equal(traj.states, np.tile([1.0, 0.0], (traj.times.size, 1)))
    with pytest.raises(ValueError):
        check_dv_properties(traj)


def test_equal_eigenvalues_rotation():
    a, b = 0.6, -0.8
    traj = parabolic_solve(make_config(eigenvalues=[1.0, 1.0], u0=[a, b]), horizon=50.0)
    mag = closed_form(traj.times, 1.0)
    np.testing.assert_allclose(traj.states, np.outer(mag, [a, b]), rtol=1e-8, atol=1e-12)
    assert check_dv_properties(traj).values["dv0_increase_k1"] == 0.0


def test_second_derivative_examples():
    op, prm = SpectralOperator([1.0]), NonlinearityParams(1.0, 0.0)
    np.testing.assert_array_equal(parabolic_second_derivative(0.0, [0.0], op, prm), [0.0])
    np.testing.assert_allclose(parabolic_second_derivative(0.0, [1.0], op, prm), [3.0])


@pytest.mark.parametrize("gamma,p", [(1.0, 0.0), (2.0, 0.5), (1.5, 1.0)])
def test_second_derivative_matches_finite_difference(gamma, p):
    op = SpectralOperator([0.5, 1.0, 3.0])
    prm = NonlinearityParams(gamma, p)
    traj = parabolic_solve(make_config(eigenvalues=op.eigenvalues, u0=[1.0, -0.5, 0.3], gamma=gamma, p=p,
                                       tol=1e-12), horizon=5.0)
    for t in (0.2, 1.0, 3.0):
        exact = parabolic_second_derivative(t, traj.at(t), op, prm)
        errs = []
        for h in (1e-2, 5e-3):
            fd = (parabolic_rhs(t + h, traj.at(t + h), op, prm) - parabolic_rhs(t - h, traj.at(t - h), op, prm)) / (2 * h)
            errs.append(np.max(np.abs(fd - exact)))
        np.testing.assert_allclose(errs[0], 0.0, atol=1e-3 * max(1.0, np.max(np.abs(exact))))
        assert errs[1] < errs[0] / 3.0


def test_dv_single_mode():
    traj = parabolic_solve(make_config(u0=[1.0]))
    rep = check_dv_properties(traj)
    assert rep.passed, rep.summary()
    u_sq, sigma = traj.norms()[:2]
    keep = traj.times >= 1e2
    assert fit_power_law(1 + traj.times[keep], sigma[keep]).exponent == pytest.approx(-1.0, abs=0.05)
    # the identity residual vanishes at t = 0
    assert 0.5 * u_sq[0] + traj.integrals["dv1"][0] - 0.5 * u_sq[0] == 0.0
    assert rep.values["dv3_sup"] >= rep.values["gamma3"] > 0


@pytest.mark.parametrize("preset,gamma,p", [("coercive-uniform", 1.0, 0.0), ("coercive-uniform", 2.0, 1.0),
                                             ("noncoercive-1/k2", 2.0, 0.5), ("noncoercive-1/k2", 1.0, 1.0)])
def test_dv_presets(preset, gamma, p):
    op = SpectralOperator.from_preset(preset, 8)
    traj = parabolic_solve(make_config(eigenvalues=op.eigenvalues, coercive=op.coercive,
                                       u0=1.0 / np.arange(1, 9), gamma=gamma, p=p))
    rep = check_dv_properties(traj)
    assert rep.passed, rep.summary()
    assert rep.values["dv1_relative_residual"] <= 100 * traj.tol
    assert ("dv3_sup" in rep.values) == op.coercive
    for name in ("dv5", "dv6", "dv7"):
        assert rep.values[name + "_tail_fraction"] < 0.05


@settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(1, 4), st.sampled_from([1.0, 2.0]), st.sampled_from([0.0, 0.5, 1.0]), st.integers(0, 2**32 - 1))
def test_dv_random_configs(n, gamma, p, seed):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.1, 3.0, n)
    u0 = rng.uniform(-1.0, 1.0, n)
    u0[0] = 1.0
    traj = parabolic_solve(make_config(eigenvalues=lam, u0=u0, gamma=gamma, p=p, horizon=1e3))
    rep = check_dv_properties(traj)
    assert rep.checks["dv0"] and rep.checks["dv1"] and rep.checks["non_stationary"]


def test_grid_validation():
    with pytest.raises(ValueError):
        parabolic_solve(make_config(), horizon=10.0, times=[0.5, 1.0])
    traj = parabolic_solve(make_config(), horizon=10.0, times=np.linspace(0, 10, 11))
    assert traj.states.shape == (11, 1)


def test_estimator():
    est = ParabolicKirchhoff(eigenvalues=[1.0], horizon=2.0)
    assert clone(est).get_params()["horizon"] == 2.0
    est.fit([1.0])
    assert est.predict(1.5)[0] == pytest.approx(0.5, abs=1e-9)
    assert est.report().passed
    assert est.predict([0.0, 1.5]).shape == (2, 1)
