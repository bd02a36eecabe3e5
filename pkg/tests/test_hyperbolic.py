import warnings

import numpy as np
import pytest
from sklearn.base import clone

from kirchhoff import (
    DegenerationWarning,
    HyperbolicKirchhoff,
    SpectralOperator,
    check_apriori_bounds,
    check_decay_estimates,
    compute_apriori_constants,
    conserved_energy_residual,
    empirical_epsilon_threshold,
    energy_D,
    energy_H,
    energy_Q,
    energy_R,
    hyperbolic_solve,
    explicit_epsilon0,
)
from kirchhoff.hyperbolic import energies, hyperbolic_rhs, lower_envelope_constant, mechanical_energy

from conftest import make_config


def test_rhs_examples():
    cfg = make_config(epsilon=1.0)
    du, dv = hyperbolic_rhs(0.0, [0.0], [0.0], cfg)
    assert du[0] == 0.0 and dv[0] == 0.0
    du, dv = hyperbolic_rhs(0.0, [1.0], [0.0], cfg)
    assert du[0] == 0.0 and dv[0] == -1.0
    cfg = make_config(eigenvalues=[0.0], u0=[3.0], epsilon=0.5)
    assert hyperbolic_rhs(0.0, [3.0], [1.0], cfg)[1][0] == -2.0


def test_linear_kernel_mode_closed_form():
    eps = 0.1
    cfg = make_config(eigenvalues=[0.0], u0=[1.0], u1=[1.0], epsilon=eps, horizon=20.0)
    traj = hyperbolic_solve(cfg)
    exact = 1.0 + eps * (1.0 - np.exp(-traj.times / eps))
    assert np.max(np.abs(traj.states[:, 0] - exact)) <= 10 * cfg.tol * 2.0
    assert not traj.degenerate


def test_accelerations_solve_equation():
    cfg = make_config(eigenvalues=[1.0, 2.0], u0=[1.0, 0.5], u1=[0.3, -1.0], gamma=2.0, p=0.5,
                      epsilon=0.01, horizon=50.0)
    traj = hyperbolic_solve(cfg)
    lam = cfg.op.eigenvalues
    sigma = (traj.states**2) @ lam
    res = (cfg.epsilon * traj.accelerations + traj.velocities / (1 + traj.times[:, None]) ** cfg.p
           + sigma[:, None] ** cfg.gamma * lam * traj.states)
    assert np.max(np.abs(res)) <= 1e-12 * max(1.0, np.max(np.abs(traj.velocities)))


def test_conservation_trivial_cases():
    traj = hyperbolic_solve(make_config(eigenvalues=[0.0, 1.0], u0=[1.0, 0.0], horizon=10.0), warn=False)
    assert conserved_energy_residual(traj) == 0.0
    traj = hyperbolic_solve(make_config(horizon=10.0))
    assert traj.integrals["dissipation"][0] == 0.0
    energy = mechanical_energy(traj) + traj.integrals["dissipation"]
    assert energy[0] - energy[0] == 0.0


@pytest.mark.parametrize("gamma,p,eps", [(1.0, 0.0, 1e-3), (2.0, 1.0, 1e-1), (1.0, 0.5, 1e-2)])
def test_conservation_and_monotone_mechanical_energy(gamma, p, eps):
    op = SpectralOperator.from_preset("coercive-uniform", 4)
    cfg = make_config(eigenvalues=op.eigenvalues, u0=[1, 0.5, 1 / 3, 0.25], u1=[0.2, 0, 0, -0.1],
                      gamma=gamma, p=p, epsilon=eps, horizon=1e3)
    traj = hyperbolic_solve(cfg)
    assert conserved_energy_residual(traj) <= 1e3 * cfg.tol
    mech = mechanical_energy(traj)
    assert np.all(np.diff(mech) <= 1e3 * cfg.tol * mech[0])


def test_self_convergence():
    base = make_config(epsilon=1e-3, horizon=10.0)
    ref = hyperbolic_solve(base.with_(tol=1e-12))
    devs = []
    for tol in (1e-9, 1e-10, 1e-11):
        traj = hyperbolic_solve(base.with_(tol=tol), times=ref.times)
        devs.append(np.max(np.abs(traj.states - ref.states)))
    assert devs[0] <= 1e-8
    # deviation shrinks in proportion to the tolerance
    rates = np.diff(np.log(devs)) / np.diff(np.log([1e-9, 1e-10, 1e-11]))
    assert np.all(rates >= 0.8)


def test_energy_examples():
    cfg = make_config(u0=[1.0], u1=[2.0], p=0.7, horizon=1.0)
    traj = hyperbolic_solve(cfg, warn=False)
    assert energy_Q(0.0, traj) == pytest.approx(4.0)
    acc0 = -(2.0 + 1.0) / cfg.epsilon
    assert energy_D(0.0, traj) == pytest.approx(cfg.epsilon * 2.0 * acc0)
    cfg = make_config(u0=[1.0], epsilon=1.0, horizon=1.0)
    traj = hyperbolic_solve(cfg)
    assert energy_H(0.0, traj) == pytest.approx(1.0)
    assert energy_R(0.0, traj) == pytest.approx(1.0)


def test_energies_off_grid_match_samples():
    traj = hyperbolic_solve(make_config(u0=[1.0], u1=[0.5], horizon=100.0))
    e = energies(traj)
    i = 700
    for name, fn in (("Q", energy_Q), ("H", energy_H), ("R", energy_R), ("D", energy_D)):
        assert fn(traj.times[i], traj) == pytest.approx(e[name][i], rel=1e-12)
        mid = 0.5 * (traj.times[i] + traj.times[i + 1])
        lo, hi = sorted((e[name][i], e[name][i + 1]))
        assert lo - 1e-6 * abs(hi) <= fn(mid, traj) <= hi + 1e-6 * abs(hi)
    with pytest.raises(ValueError):
        energy_Q(200.0, traj)


def test_energies_undefined_on_kernel():
    traj = hyperbolic_solve(make_config(eigenvalues=[0.0], u0=[1.0], horizon=1.0), warn=False)
    with pytest.raises(ValueError):
        energy_Q(0.5, traj)


def test_apriori_constants_examples():
    c = compute_apriori_constants(make_config(u0=[1.0], u1=[0.0]))
    assert c.h1 == pytest.approx(4.0)
    assert c.L1 == pytest.approx(38.0)
    assert c.K1 == pytest.approx(40.0)
    assert c.L2 == pytest.approx(160.0)
    assert c.K0 == pytest.approx(80.0)
    with pytest.raises(ValueError):
        compute_apriori_constants(make_config(eigenvalues=[0.0], u0=[1.0]))


@pytest.mark.parametrize("gamma", [1.0, 1.5, 2.0, 3.0])
def test_apriori_constant_relations(gamma):
    cfg = make_config(eigenvalues=[1.0, 2.0, 5.0], u0=[1.0, -0.3, 0.2], u1=[0.5, 0.1, -0.4], gamma=gamma)
    c = compute_apriori_constants(cfg)
    vals = np.array([c.h1, c.h3, c.h4, c.L1, c.L2, c.L3, c.K0, c.K1])
    assert np.all(np.isfinite(vals)) and np.all(vals > 0)
    assert c.K1 == pytest.approx(c.L1 + 1 + c.H1_0)
    lam = cfg.op.eigenvalues
    cross = abs(np.dot(lam * cfg.u0, cfg.u1)) / cfg.sigma0
    assert c.K0 == pytest.approx(np.sqrt(max(4 * c.K1, c.Q1_0) * c.K1) + cross)
    eps0 = explicit_epsilon0(cfg, c)
    assert 0 < eps0 < 1


def test_decay_single_mode():
    traj = hyperbolic_solve(make_config(u0=[1.0], epsilon=1e-3))
    rep = check_decay_estimates(traj)
    assert rep.passed
    assert rep.values["sigma_decay_exponent"] == pytest.approx(-1.0, abs=0.05)
    assert rep.values["D3_sup"] >= 0


def test_decay_noncoercive():
    op = SpectralOperator.from_preset("noncoercive-1/k2", 8)
    cfg = make_config(eigenvalues=op.eigenvalues, coercive=False, u0=1 / np.arange(1, 9), gamma=2.0, p=0.5)
    traj = hyperbolic_solve(cfg)
    rep = check_decay_estimates(traj)
    assert rep.passed
    # slower than the coercive rate (p+1)/gamma but within the upper envelope
    assert rep.values["sigma_decay_exponent"] > -(cfg.p + 1) / cfg.gamma
    assert rep.values["D1_upper_max"] < np.inf and rep.values["D2_sup"] < 10


def test_degeneration_warning_and_threshold():
    cfg = make_config(u0=[1.0], u1=[-10.0], epsilon=1.0, horizon=100.0)
    with pytest.warns(DegenerationWarning):
        traj = hyperbolic_solve(cfg)
    assert traj.degenerate and 0 < traj.degeneration_time < 1
    stopped = hyperbolic_solve(cfg, stop_on_degeneration=True, warn=False)
    assert stopped.times[-1] < cfg.horizon
    thr = empirical_epsilon_threshold(cfg)
    assert thr is not None and thr < 1
    with warnings.catch_warnings():
        warnings.simplefilter("error", DegenerationWarning)
        assert not hyperbolic_solve(cfg.with_(epsilon=thr)).degenerate
    assert explicit_epsilon0(cfg) < thr


def test_lower_envelope_constant():
    assert lower_envelope_constant(make_config(eigenvalues=[0.0], u0=[1.0])) == 0.0
    assert lower_envelope_constant(make_config(u0=[1.0])) == pytest.approx(0.5)


def test_apriori_bounds_below_threshold():
    cfg = make_config(eigenvalues=[1.0, 3.0], u0=[1.0, 0.5], u1=[0.5, -0.5], epsilon=1e-3)
    thr = empirical_epsilon_threshold(cfg)
    assert cfg.epsilon <= thr
    rep = check_apriori_bounds(hyperbolic_solve(cfg))
    assert rep.passed, rep.summary()


def test_estimator():
    est = HyperbolicKirchhoff(eigenvalues=[1.0], epsilon=1e-2, horizon=10.0)
    assert clone(est).get_params()["epsilon"] == 1e-2
    est.fit([1.0], [0.0])
    u = est.predict(1.0)
    assert u.shape == (1,)
    np.testing.assert_array_equal(u, est.trajectory_.at(1.0)[0])
    assert est.report().passed
