"""Resolvent and time-kernel checks against brute-force linear algebra.

Oracles: a sparse finite-difference solve of (L - lam) g = delta_y for
the frequency kernel, scipy's sparse matrix exponential for the time
kernel, a 16-point circle quadrature for the origin residue, and closed
forms on a constant-coefficient problem.  The transported kernel must
agree with all of them and satisfy the structural identities (jump,
conjugation, decay, analyticity, duality, adjoint symmetry) on its own.
"""

import time

import numpy as np
import pytest
import scipy.sparse as sps
import scipy.sparse.linalg as spla

import combust.resolvent_green as rg
from combust.evans import discretize_linearized_operator
from combust.hugoniot import WaveProblem, classify
from combust.model import default_params
from combust.profile import frozen_profile
from combust.spectral import SpectralProblem, _mu_fluid, _mu_reaction

LAM0 = 1.0 + 0.5j


def fd_grid(problem, h):
    X = problem.profile.x_max
    N = int(round(2 * X / h)) - 1
    return -X + h * np.arange(1, N + 1)


def fd_resolvent(problem, lam, y, h):
    """Sparse-LU solve of (L_h - lam) g = delta_y, both source components."""
    xs = fd_grid(problem, h)
    N = len(xs)
    L = discretize_linearized_operator(problem, h)
    iy = int(np.argmin(np.abs(xs - y)))
    A = (L.astype(complex)
         - lam * sps.identity(2 * N, format="csc", dtype=complex)).tocsc()
    lu = spla.splu(A)
    G = np.zeros((N, 2, 2), dtype=complex)
    for j in range(2):
        rhs = np.zeros(2 * N, dtype=complex)
        rhs[iy + j * N] = 1.0 / h
        g = lu.solve(rhs)
        G[:, 0, j] = g[:N]
        G[:, 1, j] = g[N:]
    return xs, G, iy


def fd_heat(problem, ts, y, h):
    """e^{L_h t} delta_y columns via the sparse matrix exponential."""
    xs = fd_grid(problem, h)
    N = len(xs)
    L = discretize_linearized_operator(problem, h)
    iy = int(np.argmin(np.abs(xs - y)))
    out = np.zeros((len(ts), N, 2, 2))
    for j in range(2):
        rhs = np.zeros(2 * N)
        rhs[iy + j * N] = 1.0 / h
        for i, t in enumerate(ts):
            g = spla.expm_multiply(L * t, rhs)
            out[i, :, 0, j] = g[:N]
            out[i, :, 1, j] = g[N:]
    return xs, out


@pytest.fixture(scope="module")
def fd_pair(dc_spectral):
    xs, G, iy = fd_resolvent(dc_spectral, LAM0, 0.0, 0.025)
    sl = rg.resolvent_kernel(dc_spectral, LAM0, 0.0, xs=xs)
    assert len(sl.xs) == len(xs)
    return sl, G


@pytest.fixture(scope="module")
def pole(dc_spectral):
    return rg.pole_structure(dc_spectral)


@pytest.fixture(scope="module")
def cc_spectral():
    # both end states pinned to the burned-side rest point: an honest
    # constant-coefficient problem with kphi = 0 and decoupled blocks
    p = default_params()
    prob = WaveProblem(u_minus=0.0, u_plus=0.0, s=1.5,
                       wave_class=classify(p, 0.0, 0.0, 1.5),
                       z_minus=1.0, z_plus=1.0)
    return SpectralProblem(frozen_profile(p, prob, "plus"))


# -- structural identities ----------------------------------------------


def test_jump_is_inverse_diffusion(fd_pair, dc_spectral):
    sl, _ = fd_pair
    expect = np.diag([1.0, 1.0 / dc_spectral.d])
    assert np.abs(sl.jump_matrix - expect).max() < 1e-10
    assert sl.jump_residual < 1e-12
    assert sl.match_sigma_min > 0.3


def test_matches_finite_difference_solve(fd_pair):
    sl, G = fd_pair
    err = np.abs(sl.values - G).max() / np.abs(G).max()
    assert err < 2e-3


def test_finite_difference_converges_to_kernel(dc_spectral):
    # second-order scheme: quartering h must shrink the gap ~16x
    errs = []
    for h in (0.05, 0.0125):
        xs, G, _ = fd_resolvent(dc_spectral, LAM0, 0.0, h)
        sl = rg.resolvent_kernel(dc_spectral, LAM0, 0.0, xs=xs)
        errs.append(np.abs(sl.values - G).max() / np.abs(G).max())
    assert errs[0] / errs[1] > 10.0


def test_constant_coefficient_closed_form(cc_spectral):
    # decoupled scalar kernels: exp(mu_dec (x-y)) / W on each side
    lam = 1.0 + 0.7j
    sweep = rg.GreenSweep(cc_spectral, np.array([lam]), substeps=6)
    nodes = np.array([sweep.node_index(x) for x in np.linspace(-8, 8, 65)])
    y = 0.325
    vals, dvals, resid, _, jumps = sweep.kernel(y, nodes)
    dx = sweep.xs[nodes] - sweep.xs[sweep.node_index(y)]

    sp = cc_spectral
    mu_fp, mu_fm = _mu_fluid(sp.alpha_plus, lam)
    mu_rp, mu_rm = _mu_reaction(sp.s, sp.d, sp.kphi_plus, lam)
    guu = np.where(dx >= 0, np.exp(mu_fm * dx), np.exp(mu_fp * dx)) \
        / (mu_fm - mu_fp)
    gzz = np.where(dx >= 0, np.exp(mu_rm * dx), np.exp(mu_rp * dx)) \
        / (sp.d * (mu_rm - mu_rp))
    dguu = np.where(dx >= 0, mu_fm * np.exp(mu_fm * dx),
                    mu_fp * np.exp(mu_fp * dx)) / (mu_fm - mu_fp)
    scale = max(np.abs(guu).max(), np.abs(gzz).max())

    assert np.abs(vals[0, :, 0, 0] - guu).max() < 1e-8 * scale
    assert np.abs(vals[0, :, 1, 1] - gzz).max() < 1e-8 * scale
    assert np.abs(dvals[0, :, 0, 0] - dguu).max() < 1e-8 * np.abs(dguu).max()
    # the blocks do not couple
    assert np.abs(vals[0, :, 0, 1]).max() < 5e-9 * scale
    assert np.abs(vals[0, :, 1, 0]).max() < 5e-9 * scale
    assert np.abs(jumps[0] - np.diag([1.0, 1.0 / sp.d])).max() < 1e-10
    assert resid[0] < 1e-12


def test_near_spectrum_raises(dc_spectral):
    # lam inside the matching floor: the translation eigenvalue sits at 0
    with pytest.raises(rg.ResolventError):
        rg.resolvent_kernel(dc_spectral, 1e-13 + 0j, 0.0,
                            xs=np.array([0.0]))


def test_conjugate_symmetry(dc_spectral):
    sweep = rg.GreenSweep(dc_spectral, np.array([LAM0, np.conj(LAM0)]))
    nodes = np.arange(sweep.node_index(-10.0), sweep.node_index(10.0), 40)
    vals = sweep.kernel(0.0, nodes)[0]
    scale = np.abs(vals).max()
    assert np.abs(vals[1] - np.conj(vals[0])).max() < 1e-13 * scale


def test_far_field_decay_rate(fd_pair, dc_spectral):
    sl, _ = fd_pair
    sp = dc_spectral
    mask = (sl.xs > 5.0) & (sl.xs < 15.0)
    slope = np.polyfit(sl.xs[mask],
                       np.log(np.abs(sl.values[mask, 0, 0])), 1)[0]
    mf = _mu_fluid(sp.alpha_plus, LAM0)
    mr = _mu_reaction(sp.s, sp.d, sp.kphi_plus, LAM0)
    slowest = max(mf[1].real, mr[1].real)
    assert abs(slope - slowest) < 1e-3 * abs(slowest)


def test_substep_self_convergence(dc_spectral):
    # transport refinement floor: factor-6 substepping reaches 1e-8
    xs = np.linspace(-10.0, 10.0, 81)
    s2 = rg.resolvent_kernel(dc_spectral, LAM0, 0.0, xs=xs, substeps=2)
    s6 = rg.resolvent_kernel(dc_spectral, LAM0, 0.0, xs=xs, substeps=6)
    s12 = rg.resolvent_kernel(dc_spectral, LAM0, 0.0, xs=xs, substeps=12)
    scale = np.abs(s12.values).max()
    assert np.abs(s2.values - s12.values).max() < 1e-7 * scale
    assert np.abs(s6.values - s12.values).max() < 1e-8 * scale


def test_analytic_in_lambda(dc_spectral):
    # Cauchy-Riemann: real-direction and imaginary-direction derivatives
    # of the kernel entries agree
    eps = 1e-3
    lams = LAM0 + np.array([eps, -eps, 1j * eps, -1j * eps])
    sweep = rg.GreenSweep(dc_spectral, lams)
    nodes = np.array([sweep.node_index(x) for x in (-4.0, -1.0, 0.5, 3.0)])
    vals = sweep.kernel(0.0, nodes)[0]
    dre = (vals[0] - vals[1]) / (2 * eps)
    dim = (vals[2] - vals[3]) / (2j * eps)
    assert np.abs(dre - dim).max() < 1e-3 * np.abs(dre).max()


def test_kernel_conjugate_transpose_solves_adjoint(dc_spectral):
    # G(x0, y)^H as a function of y solves the adjoint system at
    # conj(lam); checked with five-point stencils on a y-line
    lam = LAM0
    sweep = rg.GreenSweep(dc_spectral, np.array([lam]), substeps=4)
    node_obs = np.array([sweep.node_index(1.7)])
    dlt = 0.025                       # two grid nodes: stencils stay exact
    ys = -0.9 + dlt * np.arange(-2, 3)
    H = np.stack([sweep.kernel(y, node_obs)[0][0, 0].conj().T for y in ys])
    ysn = np.array([sweep.xs[sweep.node_index(y)] for y in ys])
    assert np.abs(np.diff(ysn) - dlt).max() < 1e-12

    c = dc_spectral.coefficients(np.array([ysn[2]]))
    alpha, beta = float(c.alpha[0]), float(c.beta[0])
    kphi, kdphi = float(c.kphi[0]), float(c.kdphi_z[0])
    q, d, s = dc_spectral.q, dc_spectral.d, dc_spectral.s
    Hc = H[2]
    d1 = (H[0] - 8 * H[1] + 8 * H[3] - H[4]) / (12 * dlt)
    d2 = (-H[0] + 16 * H[1] - 30 * H[2] + 16 * H[3] - H[4]) / (12 * dlt ** 2)
    lb = np.conj(lam)
    res_u = d2[0] + alpha * d1[0] + q * kdphi * Hc[0] - kdphi * Hc[1] \
        - lb * Hc[0]
    res_z = d * d2[1] - s * d1[1] + beta * d1[0] + q * kphi * Hc[0] \
        - kphi * Hc[1] - lb * Hc[1]
    scale = (abs(lb) + 1) * np.abs(Hc).max() \
        + np.abs(d2).max() * max(1.0, d) \
        + np.abs(d1).max() * (abs(alpha) + abs(beta) + s)
    assert np.abs(res_u).max() < 1e-6 * scale
    assert np.abs(res_z).max() < 1e-6 * scale


def test_duality_pairing_constant(dc_spectral):
    # for any forward solution W at lam and adjoint solution Wt at
    # conj(lam), the bilinear form Wt^H S(x) W is constant in x
    sp = dc_spectral
    rng = np.random.default_rng(20260814)
    n_tr = 100
    r = 3.0 * np.sqrt(rng.uniform(0.0, 1.0, n_tr))
    th = 2.0 * np.pi * rng.uniform(0.0, 1.0, n_tr)
    lams = r * np.exp(1j * th)
    x0 = rng.uniform(-8.0, 7.25, n_tr)
    length = rng.uniform(0.25, 0.75, n_tr)

    def draw(shape):
        v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    W = draw((n_tr, 4))
    Wt = draw((n_tr, 4))

    def pairing(x, Wt, W):
        return np.einsum("ni,nij,nj->n", Wt.conj(), sp.s_matrix(x), W)

    g0 = pairing(x0, Wt, W)
    for _ in range(6):                # reject accidentally tiny pairings
        bad = np.abs(g0) < 0.05
        if not bad.any():
            break
        W[bad] = draw((int(bad.sum()), 4))
        Wt[bad] = draw((int(bad.sum()), 4))
        g0 = pairing(x0, Wt, W)
    assert np.abs(g0).min() >= 0.05

    t_start = time.time()
    a1, aa1 = sp.a1, sp.adjoint_a1
    nsteps = 1024
    h = (length / nsteps)[:, None]
    lamc = lams[:, None, None]
    lamb = np.conj(lams)[:, None, None]
    worst = 0.0
    for j in range(nsteps):
        xa = x0 + j * h[:, 0]
        xm = xa + 0.5 * h[:, 0]
        xb = xa + h[:, 0]

        def rk4(V, Ma, Mm, Mb):
            k1 = np.einsum("nij,nj->ni", Ma, V)
            k2 = np.einsum("nij,nj->ni", Mm, V + 0.5 * h * k1)
            k3 = np.einsum("nij,nj->ni", Mm, V + 0.5 * h * k2)
            k4 = np.einsum("nij,nj->ni", Mb, V + h * k3)
            return V + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

        W = rk4(W, sp.a0_batch(xa) + lamc * a1,
                sp.a0_batch(xm) + lamc * a1,
                sp.a0_batch(xb) + lamc * a1)
        Wt = rk4(Wt, sp.adjoint_a0_batch(xa) + lamb * aa1,
                 sp.adjoint_a0_batch(xm) + lamb * aa1,
                 sp.adjoint_a0_batch(xb) + lamb * aa1)
        if (j + 1) % 128 == 0:
            g = pairing(xb, Wt, W)
            worst = max(worst, float(np.max(np.abs(g - g0) / np.abs(g0))))
    assert worst < 1e-8
    assert time.time() - t_start < 10.0


# -- translation pole -----------------------------------------------------


def test_pole_structure_rank_one(pole):
    assert pole.sigma_ratio < 1e-8
    assert pole.x_cosine > 0.999999
    assert pole.y_cosine > 0.999999


def test_pole_amplitude_matches_mass_rule(pole):
    assert abs(pole.c_est - pole.c_expected) < 1e-5 * abs(pole.c_expected)


def test_mass_constant_value(dc_spectral):
    pr = dc_spectral.profile.problem
    q = dc_spectral.profile.params.q
    jump = (pr.u_plus + q * pr.z_plus) - (pr.u_minus + q * pr.z_minus)
    c = rg.mass_constant(dc_spectral)
    assert abs(c - 1.0 / jump) < 1e-14
    assert abs(c - (-0.5358983848622454)) < 1e-12


def test_residue_circle_quadrature(dc_spectral):
    # independent residue: -mean of lam_k G_k over a 16-point circle is
    # spectrally accurate for the contour integral -(1/2 pi i) oint G dlam
    rho = rg.get_machine(dc_spectral).r0 / 10.0
    lams = rho * np.exp(2j * np.pi * np.arange(16) / 16)
    sweep = rg.GreenSweep(dc_spectral, lams)
    xs = np.linspace(-6.0, 6.0, 13)
    ys = np.array([0.0, 1.7])
    nodes = np.array([sweep.node_index(x) for x in xs])
    ps = rg.pole_structure(dc_spectral, xs=xs, ys=ys)
    for j, y in enumerate(ys):
        vals = sweep.kernel(y, nodes)[0]
        res = -np.mean(lams[:, None, None, None] * vals, axis=0)
        assert np.abs(res.imag).max() < 1e-8
        dev = np.abs(res.real - ps.matrix[:, j]).max()
        assert dev < 1e-6 * np.abs(ps.matrix).max()


# -- bounded adjoint zero mode ---------------------------------------------


def test_adjoint_zero_mode_is_mass_covector(dc_spectral):
    # for a conservative flux the bounded adjoint mode is exactly the
    # constant covector c (1, q); the sweeps must find it on their own
    mode = rg.bounded_adjoint_mode(dc_spectral)
    c = rg.mass_constant(dc_spectral)
    q = dc_spectral.q
    assert np.abs(mode.values - np.array([c, c * q])).max() < 1e-8 * abs(c)
    assert np.abs(mode.dvalues).max() < 1e-8 * abs(c)
    assert mode.intersect_sigma < 1e-10
    assert mode.sigma_next > 0.5
    assert rg.bounded_adjoint_mode(dc_spectral) is mode   # cached


def test_adjoint_families_structure(dc_spectral):
    ys = np.linspace(-30.0, 30.0, 121)
    fam = rg.adjoint_families(dc_spectral, ys)
    mode = rg.bounded_adjoint_mode(dc_spectral)
    pi = mode.interp(ys)
    q = dc_spectral.q
    c = abs(mode.c)
    # burned-side fluid characteristic runs into the front: it carries
    # the whole mode, which annihilates the reaction direction (-q, 1)
    lf = fam["f-"][0]
    assert abs(lf @ np.array([-q, 1.0])) < 1e-10 * c
    assert abs(lf[1] / lf[0] - q) < 1e-8
    # the two unburned-side pieces recombine to the full mode
    assert np.abs(fam["f+"] + fam["r+"] - pi).max() < 1e-12 * c


# -- excited translation term --------------------------------------------


def test_errfn_basics():
    assert rg.errfn(0.0) == 0.5
    assert abs(rg.errfn(8.0) - 1.0) < 1e-15
    assert rg.errfn(-8.0) < 1e-15
    z = np.linspace(-3, 3, 101)
    assert np.all(np.diff(rg.errfn(z)) > 0)


def test_excited_term_limits(dc_spectral):
    mode = rg.bounded_adjoint_mode(dc_spectral)
    c = abs(mode.c)
    # before any characteristic reaches the front nothing is absorbed
    early = rg.excited_term(dc_spectral, np.array([-2.0, 3.0]), 1e-4)
    assert np.abs(early).max() < 1e-12
    # by late time the whole impulse has been absorbed: e -> pi
    ys = np.linspace(-50.0, 50.0, 201)
    late = rg.excited_term(dc_spectral, ys, 500.0)
    assert np.abs(late - mode.interp(ys)).max() < 1e-6 * c
    # the absorbed fraction is a fraction: componentwise in [0, 1]
    for t in (1.0, 5.0, 25.0):
        e = rg.excited_term(dc_spectral, ys, t)
        frac = e / mode.interp(ys)
        assert frac.min() > -1e-12 and frac.max() < 1.0 + 1e-12
    with pytest.raises(ValueError):
        rg.excited_term(dc_spectral, ys, 0.0)


def test_predicted_shift_tends_to_mass_rule(dc_spectral):
    ys = np.linspace(-60.0, 60.0, 481)
    u0 = np.exp(-ys ** 2)
    z0 = np.zeros_like(ys)
    M = np.trapezoid(u0, ys)
    c = rg.mass_constant(dc_spectral)
    limit = -c * M
    assert limit > 0.0
    deltas = [rg.predicted_shift(dc_spectral, ys, u0, z0, t)
              for t in (1.0, 10.0, 100.0, 1000.0)]
    assert np.all(np.diff(deltas) > -1e-12)     # monotone approach
    assert abs(deltas[-1] - limit) < 1e-8 * limit


def test_convected_gaussian_is_normalized():
    xs = np.linspace(-40.0, 80.0, 4001)
    k = rg.convected_gaussian(xs, 4.0, speed=1.5, nu=0.2)
    assert abs(np.trapezoid(k, xs) - 1.0) < 1e-12
    assert abs(xs[np.argmax(k)] - 6.0) < 0.05


# -- time-domain kernel ---------------------------------------------------


def test_time_kernel_matches_heat_semigroup(dc_spectral):
    ts = [0.5, 1.0]
    tg = rg.time_green_kernel(dc_spectral, ts, 0.0)
    assert tg.converged and tg.est_error < 1e-4
    xs_fd, ref = fd_heat(dc_spectral, ts, 0.0, 0.025)
    idx = np.array([np.argmin(np.abs(xs_fd - x)) for x in tg.xs])
    for i in range(len(ts)):
        scale = np.abs(ref[i]).max()
        assert np.abs(tg.values[i] - ref[i][idx]).max() < 5e-3 * scale


def test_time_kernel_long_time_projects(dc_spectral):
    # everything but the translation pole decays diffusively
    xs = np.linspace(-8.0, 8.0, 33)
    tg = rg.time_green_kernel(dc_spectral, [20.0], 0.0, xs=xs)
    ps = rg.pole_structure(dc_spectral, xs=xs, ys=np.array([0.0]))
    dev = np.abs(tg.values[0] - ps.matrix[:, 0]).max()
    assert dev < 0.03
    assert np.abs(ps.matrix).max() > 0.5   # the limit is not trivial


def test_time_kernel_conserves_mass(dc_spectral):
    # (1, q) integrates the conserved quantity: every kernel column
    # must hold its source mass at all times
    q = dc_spectral.q
    xs = np.linspace(-14.0, 14.0, 225)
    tg = rg.time_green_kernel(dc_spectral, [0.5, 1.0], 0.0, xs=xs, tol=2e-5)
    assert tg.converged
    for j, expect in ((0, 1.0), (1, q)):
        masses = [np.trapezoid(tg.values[i, :, 0, j]
                               + q * tg.values[i, :, 1, j], tg.xs)
                  for i in range(2)]
        assert abs(masses[0] - expect) < 1e-4
        assert abs(masses[1] - masses[0]) < 1e-6


def test_green_split_consistency(dc_spectral):
    # the excited part approaches the pole projection and carries
    # essentially all of the kernel by t = 20
    xs = np.linspace(-8.0, 8.0, 65)
    gs = rg.green_function(dc_spectral, [20.0], 0.0, xs=xs)
    assert gs.converged
    assert np.abs(gs.total - (gs.excited + gs.tilde)).max() \
        < 1e-15 * np.abs(gs.total).max()
    assert np.abs(gs.tilde).max() < 0.05 * np.abs(gs.excited).max()
    ps = rg.pole_structure(dc_spectral, xs=xs, ys=np.array([0.0]))
    dev = np.abs(gs.excited[0] - ps.matrix[:, 0]).max()
    assert dev < 0.02 * np.abs(ps.matrix).max()


def test_faster_decay_directions(dc_spectral):
    # with the pole removed, pairing the source slot against (-q, 1)
    # (or observing the reactant row on the burned side) must decay at
    # least a half power faster than the kernel itself
    q = dc_spectral.q
    ts = np.array([1.0, 1.6, 2.56, 4.096])
    gs = rg.green_function(dc_spectral, ts, -6.0,
                           xs=np.linspace(-24.0, 8.0, 257))
    assert gs.converged
    Gt = gs.tilde
    m_all = np.abs(Gt).max(axis=(1, 2, 3))
    m_dir = np.abs(Gt @ np.array([-q, 1.0])).max(axis=(1, 2))
    mask = gs.xs <= 0.0
    m_row = np.abs(Gt[:, mask, 1, :]).max(axis=(1, 2))
    m_all_neg = np.abs(Gt[:, mask]).max(axis=(1, 2, 3))

    lt = np.log(ts)
    sl_all = np.polyfit(lt, np.log(m_all), 1)[0]
    sl_dir = np.polyfit(lt, np.log(m_dir), 1)[0]
    sl_row = np.polyfit(lt, np.log(m_row), 1)[0]
    sl_all_neg = np.polyfit(lt, np.log(m_all_neg), 1)[0]
    assert abs(sl_all + 0.5) < 0.25            # diffusive window
    assert sl_dir <= sl_all - 0.5 + 0.15
    assert sl_row <= sl_all_neg - 0.5 + 0.15


def test_delta_recovery_small_time(dc_spectral):
    # semigroup identity: applying the kernel at tiny t returns the data
    ys = np.arange(-4.0, 4.0 + 1e-9, 0.0125)
    g = np.exp(-ys ** 2 / (2 * 1.5 ** 2))
    ga = rg.apply_green(dc_spectral, [1e-3], ys, g, g,
                        xs=np.arange(-5.0, 5.0 + 1e-9, 0.025),
                        tol=2e-3, reach=1.5)
    assert ga.converged
    gx = np.exp(-ga.xs ** 2 / (2 * 1.5 ** 2))
    ref = np.trapezoid(np.abs(gx), ga.xs)
    for comp in (0, 1):
        err = np.trapezoid(np.abs(ga.values[0, :, comp] - gx), ga.xs)
        assert err < 0.02 * ref
