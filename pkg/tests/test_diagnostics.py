import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from rnls.diagnostics import (
    classify_blowup,
    closed_form_variance,
    duhamel_variance_bound,
    gaussian_bump_weight,
    localized_variance,
    localized_virial_rhs,
    quadratic_weight,
    record,
    uncertainty_ratio,
    variance_prime,
    virial_rhs,
    virial_rhs_from_record,
)
from rnls.grid import WaveField, gaussian_field
from rnls.groundstate import lift_to_grid, solve_Q_radial
from rnls.integrator import evolve
from rnls.operators import ConstantPower, InhomogeneousPower, OperatorSet, PhysicsParams


def make_params(omega=0.0, lam=1.0, p=3.0, gamma=1.0, kappa=1, n=2, nl=None):
    return PhysicsParams(n=n, omega=omega, gamma=gamma, p=p, kappa=kappa,
                         nonlinearity=nl if nl is not None else ConstantPower(lam))


# ---- record ----------------------------------------------------------------


def test_record_oscillator_gaussian(grid64):
    params = make_params(lam=0.0)
    ops = OperatorSet(grid64, params)
    rec = record(gaussian_field(grid64, 1.0), ops, 0.0)
    assert rec.mass == pytest.approx(1.0, abs=1e-10)
    assert rec.energy == pytest.approx(1.0, abs=1e-9)       # n gamma / 2
    assert rec.angular == 0.0
    assert rec.J == pytest.approx(1.0, abs=1e-9)            # n / (2 gamma)
    assert rec.kinetic == pytest.approx(1.0, abs=1e-9)
    assert rec.boundary_mass <= 1e-12
    assert rec.tail_fraction <= 1e-12


def test_record_vortex_energies(grid128):
    from rnls.experiments import vortex_state

    params = make_params(omega=0.5, lam=0.0)
    ops = OperatorSet(grid128, params)
    for m in (1, 3):
        psi = vortex_state(grid128, 1.0, m)
        rec = record(psi, ops, 0.0)
        assert rec.kinetic == pytest.approx((m + 1) * 1.0, rel=1e-6)
        assert rec.trap == pytest.approx((m + 1) / 2.0, rel=1e-6)
        # ell_Omega = -Omega * m for the normalized vortex
        assert rec.angular == pytest.approx(-0.5 * m, rel=1e-6)


def test_record_free_energy_of_profile(q_profile, grid128):
    params = make_params(lam=1.0)
    ops = OperatorSet(grid128, params)
    rec = record(lift_to_grid(q_profile, grid128), ops, 0.0)
    assert abs(rec.free_energy) <= 1e-5 * rec.kinetic


# ---- variance prime --------------------------------------------------------


def test_variance_prime_real_field(grid64):
    f = WaveField(grid64, random_field(grid64, 1).real.astype(complex))
    assert abs(variance_prime(f)) <= 1e-12


def test_variance_prime_global_phase(q_profile, grid128):
    f = lift_to_grid(q_profile, grid128, theta=1.1)
    assert abs(variance_prime(f)) <= 1e-10


def test_variance_prime_chirp_sign(q_profile, grid128):
    for nu in (0.3, -0.3):
        f = lift_to_grid(q_profile, grid128, nu=nu)
        expected = 4.0 * nu * q_profile.second_moment
        assert variance_prime(f) == pytest.approx(expected, rel=1e-6)


# ---- virial rhs ------------------------------------------------------------


def test_virial_rhs_stationary_gaussian(grid64):
    params = make_params(lam=0.0)
    ops = OperatorSet(grid64, params)
    val = virial_rhs(gaussian_field(grid64, 1.0), ops)
    assert abs(val) <= 1e-8


def test_virial_rhs_critical_identity(grid64):
    # at the critical power: J'' = 4(E - ell) - 4 gamma^2 J as a functional identity
    params = make_params(omega=0.4, lam=1.0)
    ops = OperatorSet(grid64, params)
    f = WaveField(grid64, random_field(grid64, 5))
    rec = record(f, ops, 0.0)
    lhs = virial_rhs_from_record(rec, params)
    rhs = 4.0 * (rec.energy - rec.angular) - 4.0 * params.gamma**2 * rec.J
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-10)


def test_virial_second_difference_cross_check(grid128):
    # centered second differences of measured J match the predicted rhs
    params = make_params(omega=0.5, lam=1.0)
    u0 = gaussian_field(grid128, 1.0, amplitude=1.3)
    state, recs = evolve(u0, params, 0.35, dt=1e-3, callback_every=10)
    ts = np.array([r.t for r in recs])
    js = np.array([r.J for r in recs])
    dt = ts[1] - ts[0]
    assert np.allclose(np.diff(ts), dt, atol=1e-12)
    d2 = (js[2:] - 2 * js[1:-1] + js[:-2]) / dt**2
    pred = np.array([virial_rhs_from_record(r, params) for r in recs[1:-1]])
    scale = np.max(np.abs(pred))
    assert np.max(np.abs(d2 - pred)) <= 1e-4 * scale


# ---- localized virial --------------------------------------------------------


def test_localized_virial_quadratic_weight_matches_plain(grid64):
    params = make_params(omega=0.3, lam=1.0)
    ops = OperatorSet(grid64, params)
    f = WaveField(grid64, random_field(grid64, 9))
    plain = virial_rhs(f, ops)
    local = localized_virial_rhs(f, ops, quadratic_weight())
    assert local == pytest.approx(plain, rel=1e-8, abs=1e-8)


def test_localized_virial_constant_weight_vanishes(grid64):
    params = make_params(lam=1.0)
    ops = OperatorSet(grid64, params)
    f = WaveField(grid64, random_field(grid64, 10))
    zero = np.zeros_like
    from rnls.diagnostics import RadialWeight

    const = RadialWeight(
        f=lambda r: np.ones_like(r),
        d1=lambda r: zero(r), d2=lambda r: zero(r),
        d3=lambda r: zero(r), d4=lambda r: zero(r),
    )
    assert abs(localized_virial_rhs(f, ops, const)) <= 1e-12


def test_localized_virial_bump_stationary(grid128):
    # standing oscillator state: localized variance is constant, the
    # prediction vanishes, and their second differences agree trivially
    params = make_params(lam=0.0)
    rho = gaussian_bump_weight(amplitude=1.0, sigma=2.0)
    from rnls.integrator import Integrator, new_state
    from rnls.operators import OperatorSet

    integ = Integrator(grid128, params)
    state = new_state(gaussian_field(grid128, 1.0), params, 1e-3)
    js, preds = [], []
    for _ in range(3):
        js.append(localized_variance(state.field, rho))
        preds.append(localized_virial_rhs(state.field, integ.ops, rho))
        for _ in range(10):
            integ.step(state)
    d2 = (js[2] - 2 * js[1] + js[0]) / 1e-4
    scale = localized_variance(state.field, rho)
    assert abs(preds[1]) <= 1e-8 * scale
    assert abs(d2 - preds[1]) <= 1e-4 * scale


def test_localized_virial_bump_cross_check(grid128):
    # breathing state: centered second differences of the measured localized
    # variance at cadence spacing match the prediction
    params = make_params(omega=0.0, lam=1.0)
    rho = gaussian_bump_weight(amplitude=1.0, sigma=2.0)
    from rnls.integrator import Integrator, new_state

    integ = Integrator(grid128, params)
    state = new_state(gaussian_field(grid128, 1.0, amplitude=1.2), params, 1e-3)
    sample_dt = 10 * 1e-3
    js, preds = [], []
    for _ in range(25):
        js.append(localized_variance(state.field, rho))
        preds.append(localized_virial_rhs(state.field, integ.ops, rho))
        for _ in range(10):
            integ.step(state)
    js = np.array(js)
    preds = np.array(preds)
    d2 = (js[2:] - 2 * js[1:-1] + js[:-2]) / sample_dt**2
    scale = np.max(np.abs(preds))
    assert np.max(np.abs(d2 - preds[1:-1])) <= 1e-4 * scale


def test_localized_virial_rejects_bad_derivatives(grid64):
    from rnls.diagnostics import RadialWeight
    from rnls.operators import ModelError

    params = make_params(lam=1.0)
    ops = OperatorSet(grid64, params)
    f = WaveField(grid64, random_field(grid64, 11))
    bad = RadialWeight(
        f=lambda r: r**2,
        d1=lambda r: 3.0 * r,  # wrong derivative
        d2=lambda r: 2.0 * np.ones_like(r),
        d3=lambda r: np.zeros_like(r),
        d4=lambda r: np.zeros_like(r),
    )
    with pytest.raises(ModelError):
        localized_virial_rhs(f, ops, bad)


# ---- closed-form variance -----------------------------------------------------


def test_closed_form_equilibrium():
    cf = closed_form_variance(J0=2.0, dJ0=0.0, energy=2.0, angular=0.0, gamma=1.0)
    # J0 = (E - ell)/gamma^2: constant solution, no zero
    assert cf.C == pytest.approx(0.0, abs=1e-14)
    assert not cf.has_zero


def test_closed_form_profile_data(q_profile):
    # profile initial data: E - ell = gamma^2 J0 / 2, dJ0 = 0
    gamma = 1.0
    J0 = q_profile.second_moment
    energy = 0.5 * gamma**2 * J0
    cf = closed_form_variance(J0, 0.0, energy, 0.0, gamma)
    assert cf.has_zero
    assert 0.25 * math.pi / gamma <= cf.t_star <= 0.5 * math.pi / gamma + 1e-9
    assert cf.t_star == pytest.approx(0.5 * math.pi / gamma, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    J0=st.floats(0.05, 50.0),
    dJ0=st.floats(-20.0, 20.0),
    e=st.floats(-30.0, 30.0),
    ell=st.floats(-5.0, 5.0),
    gamma=st.floats(0.2, 4.0),
)
def test_closed_form_satisfies_ode(J0, dJ0, e, ell, gamma):
    cf = closed_form_variance(J0, dJ0, e, ell, gamma)
    ts = np.linspace(0.0, 3.0, 100)
    resid = cf.second_derivative(ts) + 4 * gamma**2 * cf(ts) - 4 * (e - ell)
    scale = 4 * gamma**2 * (abs(cf.C) + abs(cf.offset)) + 4 * abs(e - ell) + 1.0
    assert np.max(np.abs(resid)) <= 1e-12 * scale
    assert cf(0.0) == pytest.approx(J0, rel=1e-12, abs=1e-12)


def test_closed_form_initial_slope():
    cf = closed_form_variance(1.0, 0.7, 3.0, 0.2, 1.3)
    eps = 1e-7
    slope = (cf(eps) - cf(-eps)) / (2 * eps)
    assert slope == pytest.approx(0.7, abs=1e-6)


def test_closed_form_rejects_bad_gamma():
    from rnls.operators import ModelError

    with pytest.raises(ModelError):
        closed_form_variance(1.0, 0.0, 1.0, 0.0, 0.0)


# ---- blowup classification ------------------------------------------------------


def test_classify_profile_data_condition_a(q_profile, grid128):
    params = make_params(omega=0.5, lam=1.0)
    ops = OperatorSet(grid128, params)
    rec = record(lift_to_grid(q_profile, grid128), ops, 0.0)
    verdict = classify_blowup(rec, params)
    assert verdict.condition == "a"
    # window sharpened by dJ0 = 0
    assert verdict.window[0] == pytest.approx(math.pi / 4)
    assert verdict.window[1] == pytest.approx(math.pi / 2)


def test_classify_subthreshold_gaussian_none(grid64):
    params = make_params(omega=0.5, lam=1.0)
    ops = OperatorSet(grid64, params)
    u = gaussian_field(grid64, 1.0, amplitude=0.9)
    verdict = classify_blowup(record(u, ops, 0.0), params)
    assert verdict.condition == "none"


def test_classify_condition_b_synthetic():
    from rnls.diagnostics import DiagnosticsRecord

    params = make_params(lam=1.0)
    # gamma^2 J0/2 = 1 < e = 1.5 <= gamma |dJ0| / 2 = 2
    rec = DiagnosticsRecord(t=0, mass=1, kinetic=1, trap=1, interaction=1,
                            angular=0.0, energy=1.5, free_energy=0, J=2.0, dJ=-4.0)
    verdict = classify_blowup(rec, params)
    assert verdict.condition == "b"


def test_classify_supercritical_chirped_profile(grid128):
    params = make_params(lam=1.0, p=4.0)
    prof = solve_Q_radial(4.0, 1.0, 2)
    ops = OperatorSet(grid128, params)
    u0 = lift_to_grid(prof, grid128, c=2.0, nu=0.3)
    verdict = classify_blowup(record(u0, ops, 0.0), params)
    assert verdict.condition == "c"
    assert verdict.quad_root is not None and verdict.quad_root > 0


def test_classify_condition_d_synthetic():
    from rnls.diagnostics import DiagnosticsRecord

    params = make_params(lam=1.0, p=4.0)
    rec = DiagnosticsRecord(t=0, mass=1, kinetic=1, trap=1, interaction=1,
                            angular=0.5, energy=0.5, free_energy=0, J=3.0, dJ=-1.5)
    verdict = classify_blowup(rec, params)
    assert verdict.condition == "d"
    assert verdict.quad_root == pytest.approx(2.0)  # J0/|dJ0|


def test_classify_subcritical_is_none(grid64):
    params = make_params(lam=1.0, p=2.0)
    ops = OperatorSet(grid64, params)
    rec = record(gaussian_field(grid64, 1.0), ops, 0.0)
    assert classify_blowup(rec, params).condition == "none"


# ---- uncertainty ratio ------------------------------------------------------


def test_uncertainty_equality_case(grid64):
    f = WaveField(grid64, np.exp(-0.5 * grid64.radius_sq).astype(complex))
    assert uncertainty_ratio(f) == pytest.approx(1.0, abs=1e-9)


def test_uncertainty_oscillator_family(grid64):
    for gamma in (0.5, 1.0, 2.0):
        r = uncertainty_ratio(gaussian_field(grid64, gamma))
        assert r == pytest.approx(1.0, abs=1e-9)


def test_uncertainty_profile_above_one(q_profile, grid128):
    r = uncertainty_ratio(lift_to_grid(q_profile, grid128))
    assert r > 1.0 + 1e-4


def test_uncertainty_random_fields_bounded_below(grid64):
    for seed in range(5):
        f = WaveField(grid64, random_field(grid64, seed))
        assert uncertainty_ratio(f) >= 1.0 - 1e-9


# ---- Duhamel bound -----------------------------------------------------------


def test_duhamel_homogeneous_equality(grid128):
    # constant coupling: zero forcing, bound met with equality
    params = make_params(omega=0.3, lam=1.0)
    u0 = gaussian_field(grid128, 1.0, amplitude=1.2)
    state, recs = evolve(u0, params, 1.0, dt=1e-3, callback_every=10)
    rep = duhamel_variance_bound(recs, params)
    assert np.max(np.abs(rep.bound - rep.measured)) <= 1e-4 * recs[0].J
    assert np.max(np.abs(rep.reconstructed - rep.bound)) <= 1e-14


def test_duhamel_inhomogeneous_bound(grid64):
    nl = InhomogeneousPower(lam0=1.0, m=2.0)
    params = make_params(omega=0.2, nl=nl)
    u0 = gaussian_field(grid64, 1.0, amplitude=1.2)
    state, recs = evolve(u0, params, 1.5, dt=1e-3, callback_every=5)
    rep = duhamel_variance_bound(recs, params)
    assert rep.max_violation <= 1e-4                      # J stays under the sinusoid
    assert rep.max_reconstruction_error <= 1e-3           # Duhamel integral recovers J
    forcing = np.array([r.x_grad_lambda_term for r in recs])
    assert np.all(forcing <= 0.0)


def test_variance_law_improves_under_dt_halving(grid64):
    # the closed-form agreement error is splitting-dominated: halving dt
    # shrinks it roughly fourfold
    params = make_params(omega=0.4, lam=1.0)
    u0 = gaussian_field(grid64, 1.0, amplitude=1.2)
    errs = []
    for dt in (2e-3, 1e-3):
        state, recs = evolve(u0, params, 1.5, dt=dt, callback_every=10)
        cf = closed_form_variance(recs[0].J, recs[0].dJ, recs[0].energy,
                                  recs[0].angular, params.gamma)
        ts = np.array([r.t for r in recs])
        js = np.array([r.J for r in recs])
        errs.append(float(np.max(np.abs(js - cf(ts))) / recs[0].J))
    assert errs[1] <= 1e-3
    assert errs[0] / errs[1] >= 2.0


# ---- virial residual column ---------------------------------------------------


def test_fill_virial_residuals(grid64):
    params = make_params(omega=0.2, lam=1.0)
    u0 = gaussian_field(grid64, 1.0, amplitude=1.1)
    state, recs = evolve(u0, params, 0.5, dt=1e-3, callback_every=10)
    residuals = np.array([r.virial_residual for r in recs])
    assert np.all(residuals[:10] == 0.0)
    assert np.max(np.abs(residuals[10:])) <= 1e-2
    assert np.any(residuals[10:] != 0.0)
