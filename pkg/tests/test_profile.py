"""Wave-profile computation: exact seed, continuation, decay, transversality."""

import numpy as np
import pytest

from combust.hugoniot import WaveProblem, classify
from combust.model import default_params
from combust.profile import (NoConnectionError, ProfileOptions,
                             TravelingWaveODE, compute_profile,
                             equilibrium_jacobian, frozen_profile,
                             gamma_from_vectors, transversality_gamma,
                             verify_decay)

S_DEFAULT = 1.5
UM_STRONG = 1.5 + np.sqrt(1.5 ** 2 - 2.0 * 1.5 * 0.5)   # 2.3660...
UM_WEAK = 1.5 - np.sqrt(1.5 ** 2 - 2.0 * 1.5 * 0.5)


def _problem(params, u_minus, s=S_DEFAULT):
    return WaveProblem(u_minus=u_minus, u_plus=0.0, s=s,
                       wave_class=classify(params, u_minus, 0.0, s))


def test_equilibrium_plus_side_closed_form():
    # triangular structure gives {alpha+ - s, 0, -s/d} = {-1.5, 0, -7.5}
    p = default_params()
    ode = TravelingWaveODE(p, _problem(p, UM_STRONG))
    ea = equilibrium_jacobian(ode, "plus")
    assert np.allclose(sorted(ea.eigenvalues.real), [-7.5, -1.5, 0.0], atol=1e-12)
    assert np.max(np.abs(ea.eigenvalues.imag)) < 1e-12
    assert (ea.stable_dim, ea.center_dim, ea.unstable_dim) == (2, 1, 0)


def test_equilibrium_minus_side_signature():
    # burned end of a strong detonation: 2 growing, 1 decaying direction
    p = default_params()
    ode = TravelingWaveODE(p, _problem(p, UM_STRONG))
    ea = equilibrium_jacobian(ode, "minus")
    assert (ea.stable_dim, ea.center_dim, ea.unstable_dim) == (1, 0, 2)
    # fluid rate alpha- - s = u- - s is an exact eigenvalue
    assert np.min(np.abs(ea.eigenvalues.real - (UM_STRONG - 1.5))) < 1e-12


def test_q0_profile_matches_exact_shock(q0_profile):
    exact = 1.5 - 1.5 * np.tanh(0.75 * q0_profile.xi)
    assert np.max(np.abs(q0_profile.u - exact)) < 1e-10


def test_q0_minus_rate_matches_fluid_eigenvalue(q0_profile):
    fits = {(f.component, f.side): f for f in q0_profile.decay.fits}
    fu = fits[("u", "minus")]
    assert fu.rate is not None
    assert fu.rate == pytest.approx(3.0 - 1.5, rel=0.01)


def test_dc_profile_residual_and_endpoints(dc_profile):
    assert dc_profile.residual_max <= 1e-8
    assert dc_profile.endpoint_err <= 1e-6


def test_dc_profile_phase_condition(dc_profile):
    i0 = np.argmin(np.abs(dc_profile.xi))
    assert dc_profile.xi[i0] == 0.0
    assert dc_profile.u[i0] == pytest.approx(0.5 * UM_STRONG, abs=1e-12)


def test_dc_profile_monotonicity_and_bounds(dc_profile):
    # reactant fraction grows monotonically from 0 to 1 across the wave
    assert np.all(np.diff(dc_profile.z) >= -1e-10)
    assert np.all(dc_profile.z >= -1e-9) and np.all(dc_profile.z <= 1.0 + 1e-9)
    # u overshoots u- behind the front (slow reaction mode enters u with a
    # positive weight) but stays inside the ignition-compatible band
    assert np.max(dc_profile.u) > UM_STRONG
    assert np.max(dc_profile.u) < 3.5
    assert np.min(dc_profile.u) > -1e-7


def test_dc_decay_rates_within_5_percent(dc_profile):
    # oracle rates from the equilibrium quadratics:
    #   minus side slow rate: positive root of d m^2 + s m - k phi(u-) = 0
    p = default_params()
    phi_m = p.ignition.phi(UM_STRONG)
    slow_minus = (-1.5 + np.sqrt(1.5 ** 2 + 4 * p.d * p.k * phi_m)) / (2 * p.d)
    targets = {("u", "minus"): slow_minus, ("z", "minus"): slow_minus,
               ("u", "plus"): 1.5, ("z", "plus"): 7.5}
    fits = {(f.component, f.side): f for f in dc_profile.decay.fits}
    for key, goal in targets.items():
        f = fits[key]
        assert f.rate is not None, key
        assert f.rate == pytest.approx(goal, rel=0.05), key
        assert f.rel_err <= 0.05
    assert dc_profile.decay.all_within(0.05)


def test_verify_decay_rerun_consistent(dc_profile):
    rep = verify_decay(dc_profile)
    got = {(f.component, f.side): f.rate for f in rep.fits}
    stored = {(f.component, f.side): f.rate for f in dc_profile.decay.fits}
    assert got == stored


def test_profile_deterministic():
    p = default_params()
    a = compute_profile(_problem(p, UM_STRONG), p)
    b = compute_profile(_problem(p, UM_STRONG), p)
    assert np.array_equal(a.u, b.u) and np.array_equal(a.z, b.z)


def test_profile_grid_doubling_stability(dc_profile):
    p = default_params()
    fine = compute_profile(_problem(p, UM_STRONG), p,
                           ProfileOptions(h=dc_profile.h / 2))
    i0, j0 = np.argmin(np.abs(dc_profile.xi)), np.argmin(np.abs(fine.xi))
    assert abs(dc_profile.u[i0] - fine.u[j0]) < 1e-6
    # stronger: whole-profile agreement on the overlap
    uf, zf, _, _ = fine.interp(dc_profile.xi)
    overlap = np.abs(dc_profile.xi) <= min(dc_profile.x_max, fine.x_max)
    assert np.max(np.abs(dc_profile.u[overlap] - uf[overlap])) < 1e-6
    assert np.max(np.abs(dc_profile.z[overlap] - zf[overlap])) < 1e-6


def test_profile_domain_doubling_stability(dc_profile):
    p = default_params()
    wide = compute_profile(_problem(p, UM_STRONG), p,
                           ProfileOptions(x_max=2 * dc_profile.x_max))
    i0, j0 = np.argmin(np.abs(dc_profile.xi)), np.argmin(np.abs(wide.xi))
    assert abs(dc_profile.u[i0] - wide.u[j0]) < 1e-6
    uw, zw, _, _ = wide.interp(dc_profile.xi)
    assert np.max(np.abs(dc_profile.u - uw)) < 1e-6


def test_weak_detonation_reports_no_connection():
    p = default_params()
    with pytest.raises(NoConnectionError) as ei:
        compute_profile(_problem(p, UM_WEAK), p)
    assert isinstance(ei.value.report, dict)
    assert "reason" in ei.value.report


def test_interp_clamps_to_end_states(dc_profile):
    u, z, y, du = dc_profile.interp(np.array([-1e6, 1e6]))
    assert u == pytest.approx([UM_STRONG, 0.0], abs=1e-12)
    assert z == pytest.approx([0.0, 1.0], abs=1e-12)
    assert np.all(y == 0.0) and np.all(du == 0.0)


def test_frozen_profile_constant():
    p = default_params()
    fp = frozen_profile(p, _problem(p, UM_STRONG), side="plus", x_max=5.0)
    assert np.all(fp.u == 0.0) and np.all(fp.z == 1.0)
    assert fp.residual_max == 0.0


def test_transversality_nonzero(dc_profile):
    g = transversality_gamma(dc_profile)
    assert np.isfinite(g)
    assert abs(g) > 0.1


def test_gamma_sign_flips_with_orientation():
    t = np.array([1.0, 0.0, 0.0])
    a = np.array([0.0, 1.0, 0.0])
    b = np.array([0.0, 0.0, 1.0])
    assert gamma_from_vectors(t, a, b) == pytest.approx(1.0)
    assert gamma_from_vectors(t, -a, b) == pytest.approx(-1.0)
