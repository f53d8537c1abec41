"""End-to-end acceptance battery.

One test per release gate, ordered from end-state algebra to the
nonlinear decay study.  Tolerances are pinned here and only here;
module test files hold the finer-grained development checks.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from combust import evans, evolution, resolvent_green as rg
from combust.hugoniot import WaveProblem, classify, cj_speeds, solve_rh
from combust.model import default_params
from combust.profile import (ProfileOptions, TravelingWaveODE,
                             compute_profile, equilibrium_jacobian,
                             frozen_profile)
from combust.spectral import (SLOW_COEFF_NOTE, SpectralProblem, _mu_fluid,
                              _mu_reaction, limiting_modes,
                              slow_mode_expansion)

from conftest import UM_STRONG, make_problem


@pytest.fixture(scope="module")
def small_q_spectral():
    # strong branch at q = 0.05: u- = s + sqrt(s^2 + 2 s q)
    p = default_params(q=0.05)
    um = 1.5 + np.sqrt(1.5 ** 2 + 2.0 * 1.5 * 0.05)
    return SpectralProblem(compute_profile(make_problem(p, um), p))


@pytest.fixture(scope="module")
def decay_run(dc_profile):
    # slowly-arriving data: algebraic tails feed mass to the front for the
    # whole horizon, the regime the long-time rate statements concern
    spec = evolution.PerturbationSpec(kind="algebraic", e0=1e-3, center=0.0,
                                      width=1.5, u_weight=1.0, z_weight=0.3)
    run = evolution.perturb_and_track(dc_profile, spec, 200.0,
                                      config=evolution.EvolveConfig(
                                          snap_every=1.0))
    assert not run.aborted
    return run


def test_rh_closed_form_equivalence():
    # quadratic flux: the jump condition is u^2/2 - s u = c(s, q, u+),
    # so u- = s +/- sqrt(s^2 + 2 s q + 2 s u+ - u+^2)
    rng = np.random.default_rng(101)
    two_root_cases = 0
    for _ in range(1000):
        s = rng.uniform(0.05, 4.0)
        q = rng.uniform(0.0, 2.0)
        up = rng.uniform(-1.0, 1.0)
        p = default_params(q=q)
        got = sorted(r.u_minus for r in solve_rh(p, up, s))
        disc = s * s + 2.0 * s * q + 2.0 * s * up - up * up
        if abs(disc) <= 1e-9:
            continue                     # tangency: root count is unstable
        if disc < 0.0:
            assert got == []
            continue
        expect = sorted([s - np.sqrt(disc), s + np.sqrt(disc)])
        assert len(got) == 2
        assert abs(got[0] - expect[0]) < 1e-12
        assert abs(got[1] - expect[1]) < 1e-12
        two_root_cases += 1
    assert two_root_cases > 800

    for q in (0.1, 0.25, 0.5, 1.0, 1.7):
        s_det, _ = cj_speeds(default_params(q=q), 0.0)
        assert abs(s_det - 2.0 * q) < 1e-12


def test_equilibrium_spectra():
    p = default_params()
    ode = TravelingWaveODE(p, make_problem(p, UM_STRONG))

    plus = equilibrium_jacobian(ode, "plus")
    # triangular limit: eigenvalues are exactly {alpha+ - s, 0, -s/d}
    expect = sorted([0.0 - 1.5, 0.0, -1.5 / 0.2])
    assert np.max(np.abs(np.sort(plus.eigenvalues.real)
                         - np.array(expect))) < 1e-10
    assert np.max(np.abs(plus.eigenvalues.imag)) < 1e-10

    minus = equilibrium_jacobian(ode, "minus")
    assert (minus.unstable_dim, minus.stable_dim) == (2, 1)
    assert minus.center_dim == 0


def test_profile_fidelity(q0_profile, dc_profile):
    exact = 1.5 - 1.5 * np.tanh(0.75 * q0_profile.xi)
    assert np.max(np.abs(q0_profile.u - exact)) < 1e-10

    assert dc_profile.residual_max < 1e-8
    assert dc_profile.decay is not None
    assert dc_profile.decay.all_within(0.05)

    p = default_params()
    fine = compute_profile(make_problem(p, UM_STRONG), p,
                           ProfileOptions(h=dc_profile.h / 2.0))
    i0 = np.argmin(np.abs(dc_profile.xi))
    j0 = np.argmin(np.abs(fine.xi))
    assert abs(dc_profile.u[i0] - fine.u[j0]) < 1e-6


def test_mode_algebra(dc_spectral):
    sp = dc_spectral
    rng = np.random.default_rng(77)
    lams = (rng.uniform(0.0, 12.0, 1000)
            + 1j * rng.uniform(-12.0, 12.0, 1000))
    for lam in lams:
        for side in ("plus", "minus"):
            m = limiting_modes(sp, side, complex(lam))
            mus = np.sort_complex(np.array([m.mu[k] for k in m.mu]))
            dense = np.sort_complex(
                np.linalg.eigvals(sp.limit_matrix(side, complex(lam))))
            scale = max(1.0, float(np.max(np.abs(dense))))
            assert np.max(np.abs(mus - dense)) < 1e-10 * scale

    # slow-branch Taylor data: linear term exactly 1/s on the reaction
    # branch ahead of the wave, curvature -d/s^3 from implicit
    # differentiation of d mu^2 + s mu - lam = 0 (the -2d/s^3 variant is
    # rejected by the remainder order test and flagged in run reports)
    assert "-2d/s^3" in SLOW_COEFF_NOTE
    failed_order = []
    for side in ("plus", "minus"):
        for m in slow_mode_expansion(sp, side):
            if m.family == "reaction":
                assert m.c1 == 1.0 / sp.s
                assert m.c2 == -sp.d / sp.s ** 3
            # remainder mu - c1 lam - c2 lam^2 must drop third order
            def err(lam):
                mu = limiting_modes(sp, side, lam).mu[m.branch]
                return abs(mu - m.c1 * lam - m.c2 * lam * lam)
            r1 = err(1e-2) / err(1e-3)
            r2 = err(1e-3) / err(1e-4)
            if not (300.0 < r1 < 3000.0 and 300.0 < r2 < 3000.0):
                failed_order.append((side, m.branch, r1, r2))
    assert not failed_order

    # curvature against a direct second difference of the eigenvalue curve
    h = 1e-3
    for side in ("plus", "minus"):
        for m in slow_mode_expansion(sp, side):
            mu_p = limiting_modes(sp, side, h).mu[m.branch]
            mu_m = limiting_modes(sp, side, -h).mu[m.branch]
            c2_fd = (mu_p + mu_m).real / (2.0 * h * h)
            assert abs(c2_fd - m.c2) < 5e-3 * max(1.0, abs(m.c2))


def test_duality_pairing_constant(dc_spectral):
    sp = dc_spectral
    rng = np.random.default_rng(13)
    a, b = -0.75, 0.75
    worst = 0.0
    for _ in range(10):                      # 10 lams x 10 pairs = 100
        lam = complex(rng.uniform(0.05, 2.0), rng.uniform(-2.0, 2.0))

        def rhs(x, W):
            return (sp.assemble(np.array([x]), lam)[0]
                    @ W.reshape(4, 10)).ravel()

        def rhs_adj(x, Wt):
            return (sp.adjoint_assemble(np.array([x]), lam)[0]
                    @ Wt.reshape(4, 10)).ravel()

        W0 = rng.standard_normal((4, 10)) + 1j * rng.standard_normal((4, 10))
        Wt0 = rng.standard_normal((4, 10)) + 1j * rng.standard_normal((4, 10))
        sf = solve_ivp(rhs, (a, b), W0.ravel(), method="DOP853",
                       rtol=1e-13, atol=1e-14, dense_output=True)
        sa = solve_ivp(rhs_adj, (a, b), Wt0.ravel(), method="DOP853",
                       rtol=1e-13, atol=1e-14, dense_output=True)
        assert sf.success and sa.success
        xs = np.linspace(a, b, 13)
        vals = np.empty((13, 10), dtype=complex)
        for i, x in enumerate(xs):
            S = sp.s_matrix(np.array([x]))[0]
            Wf = sf.sol(x).reshape(4, 10)
            Wa = sa.sol(x).reshape(4, 10)
            vals[i] = np.einsum("ki,kl,li->i", np.conj(Wa), S, Wf)
        ref = np.abs(vals[0])
        assert ref.min() > 1e-3              # well-scaled pairings only
        dev = np.max(np.abs(vals - vals[0]) / ref, axis=0)
        worst = max(worst, float(dev.max()))
    assert worst < 1e-8


def test_evans_zero_counting_small_q(small_q_spectral):
    sp = small_q_spectral
    rep = evans.verdict(sp)
    assert rep.verdict == "stable"
    assert rep.origin_winding == 1
    assert rep.outer_winding == 0
    assert rep.outer_winding_2r == 0         # radius doubling
    assert rep.d0_ratio < 1e-6               # D(0) = 0 at contour scale

    machine = evans.get_machine(sp)
    for lam in (0.3 + 0.4j, 1.2 + 0.9j, 0.05 + 1.5j):
        e1 = machine.evaluate(np.array([lam]))[0]
        e2 = machine.evaluate(np.array([np.conj(lam)]))[0]
        v1 = e1.d * np.exp(e1.scale_exponent)
        v2 = e2.d * np.exp(e2.scale_exponent)
        assert abs(v2 - np.conj(v1)) < 1e-10 * abs(v1)

    # node doubling leaves both counts alone
    origin = evans.winding(sp, kind="origin")
    outer = evans.winding(sp, kind="outer")
    origin2 = evans.winding(sp, kind="origin", n0=2 * len(origin.nodes))
    outer2 = evans.winding(sp, kind="outer", n0=2 * len(outer.nodes))
    assert origin.winding == origin2.winding == 1
    assert outer.winding == outer2.winding == 0


def test_planted_instability_detection(dc_spectral):
    planted = evans.plant_instability(dc_spectral, strength=2.0, width=1.0)
    outer = evans.winding(planted, kind="outer")
    assert outer.winding == 1

    machine = evans.get_machine(planted)
    zeros = evans.locate_real_zeros(planted, machine.r0, machine.R)
    assert len(zeros) == 1

    # independent discretized eigensolve, Richardson-extrapolated
    l1 = evans.unstable_spectrum(planted, h=0.02)
    l2 = evans.unstable_spectrum(planted, h=0.01)
    assert len(l1) == 1 and len(l2) == 1
    lam_fd = (4.0 * l2[0] - l1[0]).real / 3.0
    assert abs(zeros[0] - lam_fd) < 1e-3

    # the unplanted operator shows nothing to detect
    assert len(evans.unstable_spectrum(dc_spectral, h=0.02)) == 0


def test_resolvent_structure(dc_spectral):
    # frozen-coefficient self-test against the decoupled closed form
    p = default_params()
    prob = WaveProblem(u_minus=0.0, u_plus=0.0, s=1.5,
                       wave_class=classify(p, 0.0, 0.0, 1.5),
                       z_minus=1.0, z_plus=1.0)
    cc = SpectralProblem(frozen_profile(p, prob, "plus"))
    lam = 1.0 + 0.7j
    sweep = rg.GreenSweep(cc, np.array([lam]), substeps=6)
    nodes = np.array([sweep.node_index(x) for x in np.linspace(-8, 8, 65)])
    vals, _, resid, _, jumps = sweep.kernel(0.325, nodes)
    dx = sweep.xs[nodes] - sweep.xs[sweep.node_index(0.325)]
    mu_fp, mu_fm = _mu_fluid(cc.alpha_plus, lam)
    mu_rp, mu_rm = _mu_reaction(cc.s, cc.d, cc.kphi_plus, lam)
    guu = np.where(dx >= 0, np.exp(mu_fm * dx), np.exp(mu_fp * dx)) \
        / (mu_fm - mu_fp)
    gzz = np.where(dx >= 0, np.exp(mu_rm * dx), np.exp(mu_rp * dx)) \
        / (cc.d * (mu_rm - mu_rp))
    scale = max(np.abs(guu).max(), np.abs(gzz).max())
    assert np.abs(vals[0, :, 0, 0] - guu).max() < 1e-8 * scale
    assert np.abs(vals[0, :, 1, 1] - gzz).max() < 1e-8 * scale
    assert np.abs(vals[0, :, 0, 1]).max() < 1e-8 * scale
    assert np.abs(vals[0, :, 1, 0]).max() < 1e-8 * scale

    # derivative jump at the source: diag(1, 1/d)
    sl = rg.resolvent_kernel(dc_spectral, 1.0 + 0.5j, 0.3)
    expect = np.diag([1.0, 1.0 / dc_spectral.d])
    assert np.abs(sl.jump_matrix - expect).max() < 1e-6
    assert resid[0] < 1e-8

    # translation-pole residue: rank one, x-factor along the wave slope
    pole = rg.pole_structure(dc_spectral)
    assert pole.sigma_ratio < 1e-6
    assert pole.x_cosine > 0.999
    assert pole.y_cosine > 0.999


def test_green_evolution_cross_oracle(dc_profile, dc_spectral):
    g = lambda x: np.exp(-0.5 * (x / 0.2) ** 2)
    cfg = evolution.EvolveConfig(half_width=40.0)
    n_half = int(np.ceil(40.0 / cfg.dx))
    xs = cfg.dx * np.arange(-n_half, n_half + 1)
    f = evolution.Field(xs, g(xs), 0.4 * g(xs))
    traj = evolution.evolve(dc_profile.params, f, 5.0, mode="linearized",
                            profile=dc_profile, config=cfg)
    assert not traj.aborted

    ys = np.arange(-1.6, 1.6 + 1e-9, 0.05)
    ga = rg.apply_green(dc_spectral, [5.0], ys, g(ys), 0.4 * g(ys),
                        xs=np.linspace(-12.0, 12.0, 193))
    assert ga.converged

    from scipy.interpolate import CubicSpline
    su = CubicSpline(xs, traj.final.u)
    sz = CubicSpline(xs, traj.final.z)
    gu = ga.values[0, :, 0].real
    gz = ga.values[0, :, 1].real
    ref = np.trapezoid(np.abs(gu) + np.abs(gz), ga.xs)
    err = np.trapezoid(np.abs(gu - su(ga.xs)) + np.abs(gz - sz(ga.xs)),
                       ga.xs)
    assert err / ref < 0.05


def test_nonlinear_decay_rates(decay_run):
    run = decay_run
    fits = evolution.decay_rates(run, t_lo=10.0)
    problems = []

    e_l2 = fits[2.0].exponent
    if not (-0.35 <= e_l2 <= -0.15):
        problems.append(f"L2 exponent {e_l2:.3f} outside -0.25 +/- 0.1")
    e_inf = fits[np.inf].exponent
    if not (-0.6 <= e_inf <= -0.4):
        problems.append(f"Linf exponent {e_inf:.3f} outside -0.5 +/- 0.1")

    dd = np.max(np.abs(run.delta_dot) * (1.0 + run.ts))
    if not dd < run.e0:
        problems.append(f"|shift rate|(1+t) reaches {dd:.3e}, above E0")

    # limit-free envelope exponent: |delta(2t) - delta(t)| ~ C t^-p keeps
    # the same exponent as |delta(t) - delta(inf)| without estimating the
    # limit (an endpoint proxy biases the fit steep)
    tt, gg = [], []
    for t in (10.0, 14.0, 20.0, 28.0, 40.0, 56.0, 80.0):
        i = int(np.argmin(np.abs(run.ts - t)))
        j = int(np.argmin(np.abs(run.ts - 2.0 * t)))
        gap = abs(run.delta[j] - run.delta[i])
        if gap > 0.0:
            tt.append(run.ts[i])
            gg.append(gap)
    assert len(tt) >= 5
    p_env = np.polyfit(np.log(tt), np.log(gg), 1)[0]
    if not (-0.65 <= p_env <= -0.35):
        problems.append(f"shift envelope exponent {p_env:.3f} outside "
                        "-0.5 +/- 0.15")

    assert not problems, "; ".join(problems)


def test_template_boundedness(decay_run, dc_profile):
    rep = evolution.template_compare(decay_run, dc_profile, t_lo=10.0)
    assert np.isfinite(rep.max_ratio) and rep.max_ratio > 0.0
    assert rep.trend_slope < 0.05            # no upward trend on [10, 200]
    assert rep.outgoing_empty
    assert rep.delta_dot_bound < decay_run.e0
