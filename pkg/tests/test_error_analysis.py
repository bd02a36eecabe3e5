import numpy as np
import pytest

import kirchhoff.error_analysis as ea
from kirchhoff import (
    CorrectorSpec,
    IntegrationError,
    NonlinearityParams,
    SpectralOperator,
    build_error_trajectory,
    energy_D_rho,
    energy_E_rho,
    energy_F_rho,
    h1cip_holds,
    hyperbolic_solve,
    parabolic_solve,
    run_epsilon_sweep,
)
from kirchhoff.hyperbolic import HyperbolicTrajectory
from kirchhoff.parabolic import parabolic_second_derivative

from conftest import make_config


@pytest.fixture(scope="module")
def pair():
    cfg = make_config(eigenvalues=[1.0, 2.0, 4.0], u0=[1.0, 0.5, 0.25], u1=[0.2, 0.0, -0.3],
                      epsilon=1e-2, horizon=1e3)
    hyp = hyperbolic_solve(cfg)
    par = parabolic_solve(cfg)
    return cfg, hyp, par, build_error_trajectory(hyp, par)


def test_self_difference_is_zero():
    cfg = make_config(eigenvalues=[1.0, 3.0], u0=[1.0, 0.5], horizon=100.0)
    par = parabolic_solve(cfg)
    fake = HyperbolicTrajectory(par.times, par.states, par.velocities, np.zeros_like(par.states), cfg,
                                dense=par.dense)
    err = build_error_trajectory(fake, par, CorrectorSpec(cfg.epsilon, cfg.p, np.zeros(2)))
    for arr in (err.rho, err.E_rho, err.F_rho, err.D_rho, *err.r_prime_integrals.values()):
        assert np.all(arr == 0.0)


def test_initial_values(pair):
    cfg, hyp, par, err = pair
    np.testing.assert_array_equal(err.r_vectors[0], 0.0)
    np.testing.assert_allclose(err.r_prime_vectors[0], 0.0, atol=1e-15)
    w0 = CorrectorSpec.from_config(cfg).w0
    np.testing.assert_allclose(err.rho_prime_vectors[0], w0, rtol=1e-15)
    assert err.E_rho[0] == pytest.approx(0.0, abs=1e-30)
    assert err.F_rho[0] == pytest.approx(0.0, abs=1e-30)
    assert err.D_rho[0] == 0.0
    assert energy_F_rho(0.0, err) == err.F_rho[0]


def test_reconstruction_and_monotone_integrals(pair):
    _, hyp, _, err = pair
    assert err.reconstruction_residual() <= 1e-15 * np.max(np.abs(hyp.states))
    for v in err.r_prime_integrals.values():
        assert np.all(np.diff(v) >= 0)


def test_sup_error_attained_at_finite_time(pair):
    _, _, _, err = pair
    total = err.rho[0] + err.rho[1]
    assert np.isfinite(err.sup_error)
    assert np.argmax(total) < total.size - 1
    assert total[-1] < 0.5 * err.sup_error


def test_d_rho_derivative_identity(pair):
    cfg, hyp, par, err = pair
    t, eps, p = err.times, cfg.epsilon, cfg.p
    u = par.at(t)
    upp = np.array([parabolic_second_derivative(ti, ui, cfg.op, cfg.params) for ti, ui in zip(t, u)])
    rho, drho = err.rho_vectors, err.rho_prime_vectors
    rate = (eps * np.sum(drho**2, axis=1) * (1 + t) ** p - eps * (1 + t) ** p * np.sum(upp * rho, axis=1)
            + 0.5 * eps * p * (1 - p) * (1 + t) ** (p - 2) * np.sum(rho**2, axis=1))
    from scipy.integrate import cumulative_trapezoid
    rebuilt = cumulative_trapezoid(rate, t, initial=0.0)
    assert np.max(np.abs(rebuilt - err.D_rho)) <= 1e-3 * np.max(np.abs(err.D_rho))


def test_scalar_energies(pair):
    _, _, _, err = pair
    i = 600
    assert energy_E_rho(err.times[i], err) == pytest.approx(err.E_rho[i])
    assert energy_D_rho(err.times[i], err) == pytest.approx(err.D_rho[i])
    with pytest.raises(ValueError):
        energy_E_rho(2e3, err)


def test_mismatches():
    cfg = make_config(horizon=10.0, epsilon=0.1)
    hyp = hyperbolic_solve(cfg)
    with pytest.raises(ValueError, match="horizon"):
        build_error_trajectory(hyp, parabolic_solve(cfg, horizon=5.0))
    with pytest.raises(ValueError, match="operator"):
        build_error_trajectory(hyp, parabolic_solve(make_config(eigenvalues=[2.0], horizon=10.0)))
    with pytest.raises(ValueError, match="nonlinearity"):
        build_error_trajectory(hyp, parabolic_solve(make_config(gamma=2.0, horizon=10.0)))


def test_h1cip():
    assert h1cip_holds(SpectralOperator([1.0, 2.0]), NonlinearityParams(2.0, 1.0))
    nc = SpectralOperator.from_preset("noncoercive-1/k2", 8)
    assert h1cip_holds(nc, NonlinearityParams(2.0, 0.5))
    assert h1cip_holds(nc, NonlinearityParams(2.0, 5 / 7))
    assert not h1cip_holds(nc, NonlinearityParams(2.0, 1.0))
    assert h1cip_holds(nc, NonlinearityParams(1.0, 1.0))


def test_sweep_coercive_example():
    cfg = make_config(eigenvalues=[1.0, 2.0, 4.0], u0=[1.0, 0.5, 0.25])
    res = run_epsilon_sweep(cfg, [1e-2, 10**-2.5, 1e-3, 10**-3.5])
    assert res.h1cip and not res.failures
    assert 1.7 <= res.fit.exponent <= 2.3
    assert np.all(np.isfinite(res.sup_errors))
    assert res.sup_ratio_spread(2) <= 20


def test_sweep_validation():
    cfg = make_config(horizon=10.0)
    with pytest.raises(ValueError):
        run_epsilon_sweep(cfg, [1e-3, 1e-2, 1e-4])
    with pytest.raises(ValueError):
        run_epsilon_sweep(cfg, [])
    with pytest.raises(ValueError):
        run_epsilon_sweep(make_config(eigenvalues=[0.0], u0=[1.0], horizon=10.0), [1e-2, 1e-3, 1e-4])


def test_sweep_failure_markers(monkeypatch):
    real = ea.hyperbolic_solve

    def flaky(cfg, **kw):
        if cfg.epsilon == 1e-3:
            raise IntegrationError("step size underflow", 1.25)
        return real(cfg, **kw)

    monkeypatch.setattr(ea, "hyperbolic_solve", flaky)
    res = run_epsilon_sweep(make_config(horizon=100.0), [1e-1, 1e-2, 1e-3, 1e-4])
    assert list(res.failures) == [1e-3]
    assert "t=1.25" in res.failures[1e-3]
    assert np.isnan(res.sup_errors[2]) and np.all(np.isfinite(res.sup_errors[[0, 1, 3]]))
    assert res.fit is not None and res.fit.n_samples == 3


def test_well_prepared_data_small_errors():
    # exploratory: without the layer the error is much smaller
    op = SpectralOperator([1.0, 2.0])
    u0 = np.array([1.0, 0.5])
    sigma = float(np.dot(op.eigenvalues, u0**2))
    base = make_config(eigenvalues=op.eigenvalues, u0=u0, epsilon=1e-3, horizon=100.0)
    prepared = base.with_(u1=-sigma * op.eigenvalues * u0)
    par = parabolic_solve(base)
    e_raw = build_error_trajectory(hyperbolic_solve(base), par).sup_error
    e_prep = build_error_trajectory(hyperbolic_solve(prepared), par).sup_error
    assert e_prep < e_raw


def test_polynomial_weight_comparison_is_recorded():
    cfg = make_config(eigenvalues=[1.0, 2.0], u0=[1.0, 0.5], epsilon=1e-2, horizon=1e2)
    res = run_epsilon_sweep(cfg, [1e-2, 5e-3, 2.5e-3])
    assert np.all(np.isfinite(res.h1_poly_integrals)) and np.all(res.h1_poly_integrals > 0)
    assert np.isfinite(res.spread(res.h1_poly_integrals, 2))
