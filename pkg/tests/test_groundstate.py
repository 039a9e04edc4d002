import math
import time

import numpy as np
import pytest

from rnls.diagnostics import variance_prime
from rnls.grid import gaussian_field, integrate, l2_norm, make_grid
from rnls.groundstate import (
    CoercivityReport,
    ResolutionError,
    energy_lower_bound_check,
    free_energy_of_profile,
    gn_constant,
    lift_to_grid,
    minimize_energy_constrained,
    ode_residual,
    pohozaev_residuals,
    solve_Q_radial,
)
from rnls.operators import ConstantPower, ModelError, PhysicsParams

TARGET_MASS_SQ = math.pi * 1.86225  # 2d cubic free profile at unit coupling


# ---- free profile ----------------------------------------------------------


def test_profile_mass_constant(q_profile):
    assert abs(q_profile.mass_sq - TARGET_MASS_SQ) <= 1e-4 * TARGET_MASS_SQ


def test_profile_solve_runtime():
    t0 = time.perf_counter()
    solve_Q_radial(3.0, 1.0, 2, mesh_step=1.9e-3)  # distinct key: bypasses the cache
    assert time.perf_counter() - t0 < 5.0


def test_profile_shape_invariants(q_profile):
    q = q_profile.q
    assert q[0] > 0
    assert np.all(q > 0)
    assert np.all(np.diff(q) < 0)
    assert abs(q_profile.dq[0]) == 0.0
    assert q_profile.q[-1] < 1e-10 * q_profile.center_value


def test_ode_residual_interior(q_profile):
    assert np.max(np.abs(ode_residual(q_profile))) <= 1e-8


def test_lambda_scaling_of_mass():
    # |Q_{lam,1}|_2^{4/n} = |Q_{1,1}|_2^{4/n} / lam
    m1 = solve_Q_radial(3.0, 1.0, 2).mass_sq
    m2 = solve_Q_radial(3.0, 2.0, 2).mass_sq
    assert abs(2.0 * m2 - m1) <= 1e-6 * m1


def test_free_energy_vanishes_at_critical(q_profile):
    assert abs(free_energy_of_profile(q_profile)) <= 1e-6 * q_profile.kinetic


def test_pohozaev_residuals_converged(q_profile):
    assert max(pohozaev_residuals(q_profile)) <= 1e-6


def test_pohozaev_detects_off_solution(q_profile):
    from dataclasses import replace

    bad = replace(
        q_profile,
        q=1.01 * q_profile.q,
        dq=1.01 * q_profile.dq,
        mass_sq=1.01**2 * q_profile.mass_sq,
        kinetic=1.01**2 * q_profile.kinetic,
        lpp=1.01**4 * q_profile.lpp,
        second_moment=1.01**2 * q_profile.second_moment,
    )
    assert max(pohozaev_residuals(bad)) >= 1e-3


def test_critical_kinetic_identity(q_profile):
    # |grad Q|^2 = (2 lam n/(n+2)) |Q|_{2+4/n}^{2+4/n}
    n, lam = q_profile.n, q_profile.lam
    rhs = 2.0 * lam * n / (n + 2.0) * q_profile.lpp
    assert abs(q_profile.kinetic - rhs) <= 1e-6 * q_profile.kinetic


def test_supercritical_pohozaev():
    prof = solve_Q_radial(4.0, 1.0, 2)
    assert max(pohozaev_residuals(prof)) <= 1e-6


# ---- sharp constant --------------------------------------------------------


def test_gn_constant_value(q_profile):
    # at p = 3, n = 2 the inverse constant equals the profile mass squared
    gn = gn_constant(q_profile)
    assert abs(gn.inverse_formula - q_profile.mass_sq) <= 1e-10 * q_profile.mass_sq
    assert gn.agreement <= 1e-6


def test_gn_constant_lambda_independence():
    vals = [gn_constant(solve_Q_radial(3.0, lam, 2)).inverse_formula
            for lam in (0.5, 1.0, 3.0)]
    for v in vals[1:]:
        assert abs(v - vals[0]) <= 1e-6 * vals[0]


def test_gn_constant_supercritical_agreement():
    gn = gn_constant(solve_Q_radial(4.0, 1.0, 2))
    assert gn.agreement <= 1e-6


# ---- lift to grid ----------------------------------------------------------


def test_lift_mass(q_profile, grid128):
    f = lift_to_grid(q_profile, grid128, c=1.0)
    mass_sq = integrate(grid128, np.abs(f.values) ** 2).real
    assert abs(mass_sq - q_profile.mass_sq) <= 1e-8 * q_profile.mass_sq


def test_lift_amplitude_scaling(q_profile, grid128):
    f = lift_to_grid(q_profile, grid128, c=2.0)
    mass_sq = integrate(grid128, np.abs(f.values) ** 2).real
    assert mass_sq == pytest.approx(4.0 * q_profile.mass_sq, rel=1e-8)


def test_lift_alpha_preserves_mass(q_profile, grid128):
    f = lift_to_grid(q_profile, grid128, c=1.0, alpha=1.5)
    mass_sq = integrate(grid128, np.abs(f.values) ** 2).real
    assert mass_sq == pytest.approx(q_profile.mass_sq, rel=1e-7)


def test_lift_chirp_variance_prime(q_profile, grid128):
    # quadratic chirp nu drives J'(0) = 4 nu integral |x|^2 Q^2
    nu = 0.5
    f = lift_to_grid(q_profile, grid128, c=1.0, nu=nu)
    expected = 4.0 * nu * q_profile.second_moment
    assert variance_prime(f) == pytest.approx(expected, rel=1e-6)
    assert variance_prime(f) > 0


def test_lift_under_resolution_rejected(q_profile):
    tiny = make_grid(2, 8.0, 8)
    with pytest.raises(ResolutionError):
        lift_to_grid(q_profile, tiny, alpha=4.0)


# ---- constrained minimization ----------------------------------------------


def test_linear_limit_oscillator(grid64):
    params = PhysicsParams(n=2, omega=0.0, gamma=1.0, p=3.0, kappa=1,
                           nonlinearity=ConstantPower(0.0))
    res = minimize_energy_constrained(params, c=1.0, grid=grid64, tol=1e-10)
    assert res.converged
    # I_c = n gamma c^2 / 2 and the multiplier is its negative at mass one
    assert res.energy == pytest.approx(1.0, abs=1e-6)
    assert res.omega == pytest.approx(-1.0, abs=1e-6)
    g = gaussian_field(grid64, 1.0)
    overlap = abs(integrate(grid64, res.field.values * np.conj(g.values)))
    assert overlap == pytest.approx(1.0, abs=1e-6)


def test_linear_limit_rotation_invariant(grid64):
    params = PhysicsParams(n=2, omega=0.5, gamma=1.0, p=3.0, kappa=1,
                           nonlinearity=ConstantPower(0.0))
    res = minimize_energy_constrained(params, c=1.0, grid=grid64, tol=1e-10)
    assert res.converged
    assert res.energy == pytest.approx(1.0, abs=1e-6)


def test_minimizer_mass_exact(grid64):
    params = PhysicsParams(n=2, omega=0.3, gamma=1.0, p=3.0, kappa=1,
                           nonlinearity=ConstantPower(1.0))
    res = minimize_energy_constrained(params, c=1.0, grid=grid64, tol=1e-8)
    assert l2_norm(res.field) == pytest.approx(1.0, abs=1e-12)


def test_energy_trace_monotone(grid64):
    params = PhysicsParams(n=2, omega=0.0, gamma=1.0, p=3.0, kappa=1,
                           nonlinearity=ConstantPower(1.0))
    res = minimize_energy_constrained(params, c=1.0, grid=grid64, tol=1e-8,
                                      keep_trace=True)
    trace = np.array(res.energy_trace)
    assert np.all(np.diff(trace) <= 1e-15 * np.abs(trace[:-1]))


def test_defocusing_always_converges(grid64):
    params = PhysicsParams(n=2, omega=0.4, gamma=1.0, p=3.0, kappa=-1,
                           nonlinearity=ConstantPower(1.0))
    for c in (0.5, 2.0, 5.0):
        res = minimize_energy_constrained(params, c=c, grid=grid64, tol=1e-8)
        assert res.converged
        assert res.energy > 0


def test_focusing_threshold_rejected(grid64, q_profile):
    params = PhysicsParams(n=2, omega=0.0, gamma=1.0, p=3.0, kappa=1,
                           nonlinearity=ConstantPower(1.0))
    with pytest.raises(ModelError):
        minimize_energy_constrained(params, c=1.05 * q_profile.mass, grid=grid64)


def test_fast_rotation_rejected(grid64):
    params = PhysicsParams(n=2, omega=1.5, gamma=1.0, p=3.0, kappa=1,
                           nonlinearity=ConstantPower(1.0))
    with pytest.raises(ModelError):
        minimize_energy_constrained(params, c=0.5, grid=grid64)


# ---- diamagnetic interpolation bound ----------------------------------------


def test_coercivity_equality_on_profile(q_profile, grid128):
    params = PhysicsParams(n=2, omega=0.0, gamma=1.0, p=3.0, kappa=1,
                           nonlinearity=ConstantPower(1.0))
    f = lift_to_grid(q_profile, grid128)
    rep = energy_lower_bound_check(f, params)
    assert isinstance(rep, CoercivityReport)
    assert abs(rep.slack_rel) <= 1e-5  # the profile saturates the bound
    assert rep.slack_rel >= -1e-9


def test_coercivity_strict_on_gaussian(grid64):
    params = PhysicsParams(n=2, omega=0.5, gamma=1.0, p=3.0, kappa=1,
                           nonlinearity=ConstantPower(1.0))
    rep = energy_lower_bound_check(gaussian_field(grid64, 1.0), params)
    assert rep.slack_rel > 1e-3


def test_coercivity_zero_field(grid64):
    params = PhysicsParams(n=2, omega=0.0, gamma=1.0, p=3.0, kappa=1,
                           nonlinearity=ConstantPower(1.0))
    from rnls.grid import WaveField

    rep = energy_lower_bound_check(WaveField(grid64, np.zeros(grid64.points, complex)), params)
    assert rep.lhs == 0.0
    assert rep.rhs == 0.0


def test_profile_save_load(q_profile, tmp_path):
    path = tmp_path / "profile.txt"
    q_profile.save(path)
    r, q = q_profile.load_table(path)
    assert np.array_equal(r, q_profile.r)
    assert np.array_equal(q, q_profile.q)
