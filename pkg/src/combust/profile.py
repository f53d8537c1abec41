"""Traveling-wave profiles as heteroclinic connections in (u, z, z').

After one integration of the wave ODE, profiles solve the 3-dimensional
first-order system

    u' = f(u,z) - f(u-,0) - q d y - s q z - s (u - u-)
    z' = y
    y' = (-s y + k phi(u) z) / d

connecting the burned equilibrium (u-, 0, 0) at -infinity to the unburned
(u+, 1, 0) at +infinity.  The connection is computed by collocation on two
glued half-intervals (so that the interior phase condition u(0) = (u-+u+)/2
and the boundary subspace projections all enter as two-point boundary
conditions) and continued in the heat release q from the explicit
nonreactive (q = 0) viscous-shock seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_bvp, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import eig, qr

from .hugoniot import WaveKind, WaveProblem, classify, solve_rh
from .model import ModelParams

log = logging.getLogger(__name__)


class NoConnectionError(RuntimeError):
    """Continuation stalled or collocation failed to converge.

    Carries a structured report; expected (not exceptional) for wave classes
    whose connections do not exist at the requested parameters.
    """

    def __init__(self, report: Dict):
        super().__init__(report.get("reason", "no connection"))
        self.report = report


@dataclass(frozen=True)
class TravelingWaveODE:
    params: ModelParams
    problem: WaveProblem

    def rhs(self, w: np.ndarray) -> np.ndarray:
        """Vector field; w = (u, z, y), vectorized over trailing axes."""
        p, pr = self.params, self.problem
        u, z, y = w[0], w[1], w[2]
        fx = p.flux
        du = (fx.f(u, z) - fx.f(pr.u_minus, pr.z_minus)
              - p.q * p.d * y - self.problem.s * p.q * z
              - pr.s * (u - pr.u_minus))
        dz = y
        dy = (-pr.s * y + p.k * p.ignition.phi(u) * z) / p.d
        return np.stack([np.asarray(du, dtype=float),
                         np.asarray(dz, dtype=float),
                         np.asarray(dy, dtype=float)])

    def jac(self, w: np.ndarray) -> np.ndarray:
        """Jacobian of rhs; shape (3, 3) or (3, 3, m) for batched w."""
        p, pr = self.params, self.problem
        u, z = np.asarray(w[0], dtype=float), np.asarray(w[1], dtype=float)
        fx = p.flux
        one = np.ones_like(u)
        J = np.array([
            [fx.f_u(u, z) - pr.s * one, fx.f_z(u, z) - pr.s * p.q * one, -p.q * p.d * one],
            [0 * one, 0 * one, one],
            [p.k * p.ignition.dphi(u) * z / p.d, p.k * p.ignition.phi(u) / p.d,
             -pr.s / p.d * one],
        ])
        return J


@dataclass(frozen=True)
class EquilibriumAnalysis:
    side: str                 # "minus" or "plus"
    jacobian: np.ndarray      # 3x3
    eigenvalues: np.ndarray   # sorted by real part, ascending
    right_vectors: np.ndarray  # columns match eigenvalues
    left_vectors: np.ndarray   # columns match eigenvalues (vl^H J = w vl^H)
    stable_dim: int
    unstable_dim: int
    center_dim: int


def equilibrium_jacobian(ode: TravelingWaveODE, side: str) -> EquilibriumAnalysis:
    pr = ode.problem
    if side == "minus":
        w0 = np.array([pr.u_minus, pr.z_minus, 0.0])
    elif side == "plus":
        w0 = np.array([pr.u_plus, pr.z_plus, 0.0])
    else:
        raise ValueError("side must be 'minus' or 'plus'")
    J = ode.jac(w0).astype(float)
    evals, vl, vr = eig(J, left=True, right=True)
    order = np.argsort(evals.real)
    evals, vl, vr = evals[order], vl[:, order], vr[:, order]
    tol = 1e-10 * max(1.0, float(np.max(np.abs(J))))
    re = evals.real
    return EquilibriumAnalysis(
        side=side, jacobian=J, eigenvalues=evals,
        right_vectors=vr, left_vectors=vl,
        stable_dim=int(np.sum(re < -tol)),
        unstable_dim=int(np.sum(re > tol)),
        center_dim=int(np.sum(np.abs(re) <= tol)),
    )


@dataclass(frozen=True)
class ProfileOptions:
    h: float = 0.0125            # output grid spacing
    tail_tol: float = 1e-8       # e^{-rate X_max} < tail_tol sets the half-width
    bvp_tol: float = 1e-8        # collocation tolerance of the final solve
    cont_tol: float = 1e-6       # collocation tolerance of continuation steps
    max_nodes: int = 400000
    dq0: float = 0.125           # initial continuation step in q
    dq_min: float = 1e-4
    x_max: Optional[float] = None  # override the tail-rate rule


@dataclass
class DecayFit:
    component: str       # "u" or "z"
    side: str            # "minus" or "plus"
    rate: Optional[float]          # fitted e^{-rate |xi|} rate; None if unfit
    target: Optional[float]        # closest equilibrium rate
    rel_err: Optional[float]
    n_points: int


@dataclass
class DecayReport:
    fits: List[DecayFit]

    def max_rel_err(self) -> float:
        errs = [f.rel_err for f in self.fits if f.rel_err is not None]
        return max(errs) if errs else np.nan

    def all_within(self, tol: float) -> bool:
        fitted = [f for f in self.fits if f.rate is not None]
        return bool(fitted) and all(f.rel_err is not None and f.rel_err <= tol
                                    for f in fitted)


@dataclass
class Profile:
    """Discretized heteroclinic orbit on a uniform symmetric grid."""

    params: ModelParams
    problem: WaveProblem
    xi: np.ndarray
    u: np.ndarray
    z: np.ndarray
    y: np.ndarray            # z'
    du: np.ndarray           # u', from the vector field (exact on the orbit)
    x_max: float
    h: float
    residual_max: float
    endpoint_err: float
    decay: Optional[DecayReport] = None
    gamma: Optional[float] = None
    opts: Optional[ProfileOptions] = None
    _splines: Optional[Tuple] = field(default=None, repr=False, compare=False)

    @property
    def s(self) -> float:
        return self.problem.s

    def _ensure_splines(self):
        if self._splines is None:
            object.__setattr__  # noqa: B018 (documenting non-frozen mutation)
            self._splines = tuple(
                CubicSpline(self.xi, arr, bc_type="natural")
                for arr in (self.u, self.z, self.y, self.du)
            )

    def interp(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(u, z, z', u') at arbitrary x, clamped to end states outside the grid."""
        self._ensure_splines()
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.xi[0], self.xi[-1])
        su, sz, sy, sdu = self._splines
        u, z, y, du = su(xc), sz(xc), sy(xc), sdu(xc)
        left = x < self.xi[0]
        right = x > self.xi[-1]
        pr = self.problem
        if np.any(left) or np.any(right):
            u = np.where(left, pr.u_minus, np.where(right, pr.u_plus, u))
            z = np.where(left, pr.z_minus, np.where(right, pr.z_plus, z))
            y = np.where(left | right, 0.0, y)
            du = np.where(left | right, 0.0, du)
        return u, z, y, du

    def ode(self) -> TravelingWaveODE:
        return TravelingWaveODE(self.params, self.problem)


def frozen_profile(params: ModelParams, problem: WaveProblem, side: str,
                   x_max: float = 20.0, h: float = 0.0125) -> Profile:
    """Constant 'profile' pinned at one end state (constant-coefficient tests)."""
    n = int(round(x_max / h))
    xi = np.linspace(-n * h, n * h, 2 * n + 1)
    if side == "plus":
        u0, z0 = problem.u_plus, problem.z_plus
    else:
        u0, z0 = problem.u_minus, problem.z_minus
    zeros = np.zeros_like(xi)
    return Profile(params=params, problem=problem, xi=xi,
                   u=np.full_like(xi, u0), z=np.full_like(xi, z0),
                   y=zeros.copy(), du=zeros.copy(),
                   x_max=n * h, h=h, residual_max=0.0, endpoint_err=0.0)


def _slowest_rates(params: ModelParams, problem: WaveProblem) -> Tuple[float, float]:
    """Slowest approach rates (minus side, plus side) from equilibrium spectra."""
    ode = TravelingWaveODE(params, problem)
    em = equilibrium_jacobian(ode, "minus")
    ep = equilibrium_jacobian(ode, "plus")
    un = em.eigenvalues.real[em.eigenvalues.real > 1e-12]
    st = -ep.eigenvalues.real[ep.eigenvalues.real < -1e-12]
    if un.size == 0 or st.size == 0:
        raise NoConnectionError({"reason": "equilibrium signature admits no connection",
                                 "minus_unstable": int(un.size),
                                 "plus_stable": int(st.size)})
    return float(np.min(un)), float(np.min(st))


def _x_max_for(params: ModelParams, problem: WaveProblem, opts: ProfileOptions) -> float:
    if opts.x_max is not None:
        return float(opts.x_max)
    rm, rp = _slowest_rates(params, problem)
    need = np.log(1.0 / opts.tail_tol) / min(rm, rp)
    # round up to a grid multiple for a clean symmetric output grid
    return float(np.ceil(need / opts.h / 8.0) * opts.h * 8.0)


def _strong_branch_u_minus(params: ModelParams, u_plus: float, s: float,
                           near: Optional[float]) -> float:
    roots = solve_rh(params, u_plus, s)
    if not roots:
        raise NoConnectionError({"reason": "no end state solves the jump condition",
                                 "q": params.q, "s": s})
    cand = [r.u_minus for r in roots]
    if near is None:
        return max(cand)  # strong branch has the larger u-
    return min(cand, key=lambda um: abs(um - near))


def _real_left_vector(ea: EquilibriumAnalysis, idx: int) -> np.ndarray:
    v = ea.left_vectors[:, idx]
    if np.max(np.abs(v.imag)) > 1e-9 * np.max(np.abs(v)):
        raise NoConnectionError({
            "reason": "complex boundary eigenvalue; projection conditions not implemented "
                      "for spiral equilibria",
            "eigenvalue": complex(ea.eigenvalues[idx])})
    v = v.real
    return v / np.linalg.norm(v)


def _solve_once(params: ModelParams, problem: WaveProblem, X: float,
                seed_t: np.ndarray, seed_Y: np.ndarray, tol: float,
                max_nodes: int):
    """One collocation solve on the glued half-intervals t in [0,1]:
    Y = (w(-X t), w(X t)).  Returns the scipy result."""
    ode = TravelingWaveODE(params, problem)
    em = equilibrium_jacobian(ode, "minus")
    ep = equilibrium_jacobian(ode, "plus")
    # minus side: remove the stable component of the deviation at -X
    ls = _real_left_vector(em, int(np.argmin(em.eigenvalues.real)))
    # plus side: remove the center (equilibrium-line) component at +X
    ic = int(np.argmin(np.abs(ep.eigenvalues.real)))
    lc = _real_left_vector(ep, ic)
    E_minus = np.array([problem.u_minus, problem.z_minus, 0.0])
    E_plus = np.array([problem.u_plus, problem.z_plus, 0.0])
    u_mid = 0.5 * (problem.u_minus + problem.u_plus)

    def fun(t, Y):
        dL = -X * ode.rhs(Y[0:3])
        dR = X * ode.rhs(Y[3:6])
        return np.vstack([dL, dR])

    def fun_jac(t, Y):
        m = Y.shape[1]
        J = np.zeros((6, 6, m))
        J[0:3, 0:3] = -X * ode.jac(Y[0:3])
        J[3:6, 3:6] = X * ode.jac(Y[3:6])
        return J

    def bc(ya, yb):
        return np.concatenate([
            ya[0:3] - ya[3:6],                 # continuity at xi = 0
            [ls @ (yb[0:3] - E_minus)],        # approach along unstable manifold
            [lc @ (yb[3:6] - E_plus)],         # converge to E+ itself, not a shift
            [ya[0] - u_mid],                   # phase condition u(0) = midpoint
        ])

    def bc_jac(ya, yb):
        dya = np.zeros((6, 6))
        dyb = np.zeros((6, 6))
        dya[0:3, 0:3] = np.eye(3)
        dya[0:3, 3:6] = -np.eye(3)
        dyb[3, 0:3] = ls
        dyb[4, 3:6] = lc
        dya[5, 0] = 1.0
        return dya, dyb

    return solve_bvp(fun, bc, seed_t, seed_Y, tol=tol, max_nodes=max_nodes,
                     fun_jac=fun_jac, bc_jac=bc_jac, verbose=0)


def _q0_seed(problem: WaveProblem, X: float, n: int = 801):
    """Exact nonreactive viscous-shock seed for u plus a smooth ramp for z."""
    t = np.linspace(0.0, 1.0, n)
    a = 0.5 * (problem.u_minus - problem.u_plus)
    m = 0.5 * (problem.u_minus + problem.u_plus)
    xiL, xiR = -X * t, X * t
    Y = np.empty((6, n))
    r = 0.5  # generic ramp rate; Newton refines it away
    for rows, xi in ((slice(0, 3), xiL), (slice(3, 6), xiR)):
        u = m - a * np.tanh(0.5 * a * xi)
        zz = 1.0 / (1.0 + np.exp(-r * xi))
        yy = r * zz * (1.0 - zz)
        Y[rows] = np.vstack([u, zz, yy])
    return t, Y


def _resample(sol, problem: WaveProblem, params: ModelParams, X: float,
              opts: ProfileOptions) -> Profile:
    n = int(round(X / opts.h))
    xi = np.linspace(-n * opts.h, n * opts.h, 2 * n + 1)
    t_of = np.abs(xi) / X
    YL = sol.sol(t_of)[0:3]
    YR = sol.sol(t_of)[3:6]
    w = np.where(xi[None, :] <= 0.0, YL, YR)
    ode = TravelingWaveODE(params, problem)
    rhs = ode.rhs(w)
    # collocation residual via the dense-output derivative of the solver
    dL = -sol.sol(t_of, 1)[0:3] / X
    dR = sol.sol(t_of, 1)[3:6] / X
    dw = np.where(xi[None, :] <= 0.0, dL, dR)
    residual = float(np.max(np.abs(dw - rhs)))
    E_minus = np.array([problem.u_minus, problem.z_minus])
    E_plus = np.array([problem.u_plus, problem.z_plus])
    endpoint_err = max(float(np.max(np.abs(w[0:2, 0] - E_minus))),
                       float(np.max(np.abs(w[0:2, -1] - E_plus))))
    return Profile(params=params, problem=problem, xi=xi,
                   u=w[0], z=w[1], y=w[2], du=rhs[0],
                   x_max=n * opts.h, h=opts.h,
                   residual_max=residual, endpoint_err=endpoint_err, opts=opts)


def compute_profile(problem: WaveProblem, params: ModelParams,
                    opts: Optional[ProfileOptions] = None) -> Profile:
    """Heteroclinic connection by continuation in q from the q = 0 seed.

    The wave speed s and the unburned state u+ stay fixed along the path;
    u-(q) follows the jump-condition root branch containing the target.
    Raises NoConnectionError with a structured report when continuation
    stalls or the requested branch cannot be matched.
    """
    opts = opts or ProfileOptions()
    if not problem.admissible(params):
        raise NoConnectionError({
            "reason": "end states violate the ignition-placement hypotheses",
            "u_minus": problem.u_minus, "u_plus": problem.u_plus})

    q_target = params.q
    s, u_plus = problem.s, problem.u_plus

    # continuation path in q, walked adaptively
    q = 0.0
    params_q = replace(params, q=0.0)
    um_q = _strong_branch_u_minus(params_q, u_plus, s, near=problem.u_minus)
    problem_q = WaveProblem(u_minus=um_q, u_plus=u_plus, s=s,
                            wave_class=classify(params_q, um_q, u_plus, s))
    X = _x_max_for(params_q, problem_q, opts)
    seed_t, seed_Y = _q0_seed(problem_q, X)
    sol = _solve_once(params_q, problem_q, X, seed_t, seed_Y,
                      tol=(opts.bvp_tol if q_target == 0.0 else opts.cont_tol),
                      max_nodes=opts.max_nodes)
    if sol.status != 0:
        raise NoConnectionError({"reason": "collocation failed at the q=0 seed",
                                 "solver_message": sol.message})

    dq = min(opts.dq0, max(q_target, opts.dq0)) if q_target > 0 else 0.0
    while q < q_target:
        q_next = min(q_target, q + dq)
        params_next = replace(params, q=q_next)
        try:
            um_next = _strong_branch_u_minus(params_next, u_plus, s, near=um_q)
        except NoConnectionError:
            um_next = None
        ok = False
        if um_next is not None:
            problem_next = WaveProblem(
                u_minus=um_next, u_plus=u_plus, s=s,
                wave_class=classify(params_next, um_next, u_plus, s))
            X_next = _x_max_for(params_next, problem_next, opts)
            # reseed from the previous solution, rescaling the half-width
            t_new = np.linspace(0.0, 1.0, max(sol.x.size, 201))
            stretch = np.clip(t_new * X_next / X, 0.0, 1.0)
            Y_new = sol.sol(stretch)
            # beyond the previous domain, clamp to end states
            outside = t_new * X_next / X > 1.0
            if np.any(outside):
                Y_new[:, outside] = np.array(
                    [problem_next.u_minus, problem_next.z_minus, 0.0,
                     problem_next.u_plus, problem_next.z_plus, 0.0])[:, None]
            tol = opts.bvp_tol if q_next == q_target else opts.cont_tol
            sol_try = _solve_once(params_next, problem_next, X_next,
                                  t_new, Y_new, tol=tol, max_nodes=opts.max_nodes)
            ok = sol_try.status == 0
        if ok:
            q, params_q, um_q, problem_q, X, sol = (
                q_next, params_next, um_next, problem_next, X_next, sol_try)
            dq = min(dq * 1.5, q_target - q if q_target > q else dq)
            log.debug("continuation reached q=%.6g (u-=%.12g)", q, um_q)
        else:
            dq *= 0.5
            if dq < opts.dq_min:
                raise NoConnectionError({
                    "reason": "continuation stalled",
                    "q_reached": q, "q_target": q_target,
                    "last_step": dq})

    if abs(um_q - problem.u_minus) > 1e-6 * max(1.0, abs(problem.u_minus)):
        raise NoConnectionError({
            "reason": "continuation landed on a different root branch",
            "u_minus_requested": problem.u_minus, "u_minus_reached": um_q})

    prof = _resample(sol, problem_q, params_q, X, opts)
    prof.decay = verify_decay(prof)
    return prof


def _fit_tail(xi: np.ndarray, amp: np.ndarray, side: str) -> Tuple[Optional[float], int]:
    """Log-linear fit of a decaying tail; returns (rate, n_points)."""
    # usable band: above arithmetic noise, below the nonlinear region
    mask = (amp > 1e-12) & (amp < 1e-3)
    if side == "minus":
        mask &= xi < 0
    else:
        mask &= xi > 0
    idx = np.where(mask)[0]
    if idx.size < 8:
        return None, int(idx.size)
    # outermost contiguous run
    splits = np.where(np.diff(idx) > 1)[0]
    if splits.size:
        idx = idx[:splits[0] + 1] if side == "minus" else idx[splits[-1] + 1:]
    if idx.size < 8:
        return None, int(idx.size)
    x, la = xi[idx], np.log(amp[idx])
    slope = np.polyfit(x, la, 1)[0]
    rate = slope if side == "minus" else -slope
    return float(rate), int(idx.size)


def verify_decay(profile: Profile) -> DecayReport:
    """Fit exponential approach rates on each tail and compare against the
    equilibrium eigenvalues (each fit is matched to its closest candidate)."""
    ode = profile.ode()
    pr = profile.problem
    fits: List[DecayFit] = []
    for side, ends in (("minus", (pr.u_minus, pr.z_minus)),
                       ("plus", (pr.u_plus, pr.z_plus))):
        ea = equilibrium_jacobian(ode, side)
        if side == "minus":
            cands = ea.eigenvalues.real[ea.eigenvalues.real > 1e-12]
        else:
            cands = -ea.eigenvalues.real[ea.eigenvalues.real < -1e-12]
        for comp, arr, end in (("u", profile.u, ends[0]), ("z", profile.z, ends[1])):
            rate, npts = _fit_tail(profile.xi, np.abs(arr - end), side)
            if rate is None or cands.size == 0:
                fits.append(DecayFit(comp, side, None, None, None, npts))
                continue
            target = float(cands[np.argmin(np.abs(cands - rate))])
            fits.append(DecayFit(comp, side, rate, target,
                                 abs(rate - target) / abs(target), npts))
    return DecayReport(fits=fits)


def gamma_from_vectors(t0: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Signed volume of the (tangent, minus-manifold, plus-manifold) triple."""
    return float(np.linalg.det(np.column_stack([t0, a, b])))


def _transport_plane(ode: TravelingWaveODE, profile: Profile,
                     basis: np.ndarray, x_from: float, x_to: float) -> np.ndarray:
    """Transport a 2-plane (3x2 basis) along the profile by the variational
    equation, QR-renormalizing in chunks to tame exponential growth."""

    def rhs(x, V):
        w = np.array(profile.interp(x))
        # interp returns (u, z, z', u'); the state for jac is (u, z, z')
        state = np.array([w[0], w[1], w[2]])
        J = ode.jac(state)
        return (J @ V.reshape(3, 2)).ravel()

    n_chunks = max(1, int(np.ceil(abs(x_to - x_from) / 2.0)))
    xs = np.linspace(x_from, x_to, n_chunks + 1)
    V = basis.copy()
    for a, b in zip(xs[:-1], xs[1:]):
        sol = solve_ivp(rhs, (a, b), V.ravel(), method="DOP853",
                        rtol=1e-10, atol=1e-13)
        if not sol.success:
            raise RuntimeError("manifold transport failed: %s" % sol.message)
        V = sol.y[:, -1].reshape(3, 2)
        if not np.all(np.isfinite(V)):
            raise FloatingPointError("manifold transport produced NaN")
        V, _ = qr(V, mode="economic")
    return V


def _plane_vector_orthogonal_to(P: np.ndarray, t0: np.ndarray) -> np.ndarray:
    """Unit vector in the plane spanned by columns of P, orthogonal to t0."""
    B = P - np.outer(t0, t0 @ P)
    # pick the better-conditioned residual direction
    norms = np.linalg.norm(B, axis=0)
    v = B[:, int(np.argmax(norms))]
    v = v / np.linalg.norm(v)
    # deterministic sign: first coordinate of largest magnitude positive
    lead = np.argmax(np.abs(v))
    return v if v[lead] > 0 else -v


def transversality_gamma(profile: Profile) -> float:
    """Angle measure between the unstable manifold at -infinity and the
    stable manifold at +infinity, both transported to xi = 0.

    gamma = det [t0, a, b] with t0 the unit profile tangent at 0 and a, b
    unit vectors of each transported plane orthogonal to t0.  Nonzero gamma
    indicates a transversal connection.
    """
    ode = profile.ode()
    em = equilibrium_jacobian(ode, "minus")
    ep = equilibrium_jacobian(ode, "plus")
    iu = np.where(em.eigenvalues.real > 1e-12)[0]
    ist = np.where(ep.eigenvalues.real < -1e-12)[0]
    if iu.size != 2 or ist.size != 2:
        raise ValueError("transversality defined for 2-dim unstable/stable pairs "
                         "(signature %d/%d)" % (iu.size, ist.size))

    def real_basis(vecs: np.ndarray) -> np.ndarray:
        cols = []
        j = 0
        while j < vecs.shape[1]:
            v = vecs[:, j]
            if np.max(np.abs(v.imag)) > 1e-10 * np.max(np.abs(v)):
                cols.extend([v.real, v.imag])
                j += 2  # conjugate partner spans the same real plane
            else:
                cols.append(v.real)
                j += 1
        B = np.column_stack(cols)[:, :2]
        Bq, _ = qr(B, mode="economic")
        return Bq

    Pm = _transport_plane(ode, profile, real_basis(em.right_vectors[:, iu]),
                          -profile.x_max, 0.0)
    Pp = _transport_plane(ode, profile, real_basis(ep.right_vectors[:, ist]),
                          profile.x_max, 0.0)

    u0, z0, y0, du0 = (float(v) for v in profile.interp(0.0))
    t0 = np.array([du0, y0, float(ode.rhs(np.array([u0, z0, y0]))[2])])
    t0 = t0 / np.linalg.norm(t0)
    a = _plane_vector_orthogonal_to(Pm, t0)
    b = _plane_vector_orthogonal_to(Pp, t0)
    return gamma_from_vectors(t0, a, b)
