"""Evans function: decaying-solution bases, zero counting, verdicts.

D(lambda) is the determinant, at the matching point x = 0, of two
solutions decaying at +infinity against two decaying at -infinity.
Zeros in the right half-plane are eigenvalues of the linearized
operator.  The two 2-planes are transported as single bivectors on the
second exterior power (see steppers), which removes the fast/slow
stiffness contrast, and the boundary data is built analytically in
lambda so argument counts along contours are meaningful.

The absolute size of D is a convention; evaluations carry a mantissa
together with a real exponent relative to the normalization point
lambda_ref = r0, where the boundary bases are scaled to unit
determinant.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .profile import transversality_gamma
from .spectral import SpectralProblem, _mu_fluid, _mu_reaction, limiting_modes
from .steppers import (build_ladder, compound2_mult, lift2, pairing,
                       reconstruct_plane, sweep, wedge2)

log = logging.getLogger(__name__)

# branch selection: decaying directions at +inf are the stable branches,
# at -inf the unstable ones
SELECTED = {"plus": ("f-", "r-"), "minus": ("f+", "r+")}
OTHER = {"plus": ("f+", "r+"), "minus": ("f-", "r-")}

# ladder policy: the RK4 phase error ~ (rate*h)^5/120 per step is fine for
# argument counting, but resolving D(0) = 0 against the small-circle scale
# needs the h/8 ladder; high frequencies get h/4 for phase accuracy
FINE_LADDER_ABOVE = 20.0
XFINE_LADDER_BELOW = 0.05


class SplittingError(RuntimeError):
    """lambda sits outside the region of consistent hyperbolic splitting."""


class ContourError(RuntimeError):
    """Argument accumulation along a contour could not be trusted."""


@dataclass
class BoundaryBases:
    lam: complex
    plus: np.ndarray             # (4, 2) decaying directions at +X
    minus: np.ndarray            # (4, 2) decaying directions at -X
    mu_plus: Dict[str, complex]
    mu_minus: Dict[str, complex]
    splitting_ok: bool
    collision: bool


@dataclass
class EvansEvaluation:
    lam: complex
    d: complex                   # mantissa, O(1) away from zeros
    scale_exponent: float        # log-scale relative to lambda_ref convention
    ladder: str                  # "coarse" or "fine"
    basis_angle: Optional[float] = None     # smallest angle between planes
    decomposability: Optional[float] = None

    @property
    def value(self) -> complex:
        if abs(self.scale_exponent) > 690.0:
            return complex(np.inf) if self.scale_exponent > 0 else 0.0
        return self.d * np.exp(self.scale_exponent)


@dataclass
class ContourResult:
    kind: str
    radius: float
    r0: float
    nodes: np.ndarray            # lam values in traversal order
    d_mantissa: np.ndarray
    exponents: np.ndarray
    total_arg: float
    winding: int
    min_dip: float               # smallest |D| dip relative to neighbors
    n_evals: int


@dataclass
class StabilityReport:
    verdict: str                 # "stable" | "unstable" | "indeterminate"
    outer_winding: int
    outer_winding_2r: int
    origin_winding: int
    d_prime0: complex
    gamma: float
    d0_ratio: float              # |D(0)| over typical |D| on the r0 circle
    reasons: List[str] = field(default_factory=list)
    contours: Dict[str, ContourResult] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# radii and region checks


def default_radii(sp: SpectralProblem) -> Tuple[float, float]:
    """(R, r0): outer contour radius from the high-frequency regime,
    indentation radius inside the analyticity disk at the origin."""
    alpha_hat_minus = sp.alpha_minus + sp.s
    R = 1.2 * max(1.0, alpha_hat_minus ** 2, sp.s ** 2 / sp.d)
    r0 = 1e-2 * min(1.0, sp.kphi_minus if sp.kphi_minus > 0 else 1.0,
                    sp.s ** 2 / sp.d)
    return R, r0


def analyticity_disk(sp: SpectralProblem) -> float:
    """Radius of a disk about 0 free of branch points of all mode curves."""
    cands = []
    for side in ("plus", "minus"):
        alpha, _, kphi = sp.side_scalars(side)
        cands.append(abs(alpha) ** 2 / 4.0)
        cands.append(sp.s ** 2 / (4.0 * sp.d) + kphi)
    return 0.5 * min(cands)


# ---------------------------------------------------------------------------
# boundary bases (vector level, diagnostics and spec'd API)


def boundary_bases(problem: SpectralProblem, lam: complex) -> BoundaryBases:
    """Decaying eigenvector pairs at the two ends, phase-fixed in lambda.

    Each vector is normalized by the coordinate that is largest at the
    reference point, so along contours the basis varies continuously.
    Near an eigenvalue collision inside a pair the individual vectors
    lose meaning; the pair subspace is then rebuilt from the analytic
    bivector and flagged.
    """
    machine = get_machine(problem)
    out = {}
    collision = False
    splitting_ok = True
    mus = {}
    for side in ("plus", "minus"):
        modes = limiting_modes(problem, side, lam)
        mus[side] = dict(modes.mu)
        if (modes.stable_count, modes.unstable_count) != (2, 2):
            splitting_ok = False
        sel = SELECTED[side]
        pairgap = abs(modes.mu[sel[0]] - modes.mu[sel[1]])
        if pairgap < 1e-8 * max(1.0, abs(lam)):
            collision = True
            w0 = machine.init_wedges(side, np.array([lam]))[0]
            basis, _ = reconstruct_plane(w0)
        else:
            cols = []
            for branch in sel:
                v = modes.vectors[branch]
                idx = machine.phase_index[side][branch]
                if abs(v[idx]) < 1e-13 * np.max(np.abs(v)):
                    raise SplittingError(
                        f"phase-fixing coordinate vanished for {branch} at "
                        f"lambda = {lam}")
                cols.append(v / v[idx])
            basis = np.column_stack(cols)
        out[side] = basis
    if not splitting_ok and abs(lam) > analyticity_disk(problem):
        raise SplittingError(
            f"lambda = {lam} has no consistent splitting and lies outside "
            "the analyticity disk about the origin")
    return BoundaryBases(lam=lam, plus=out["plus"], minus=out["minus"],
                         mu_plus=mus["plus"], mu_minus=mus["minus"],
                         splitting_ok=splitting_ok, collision=collision)


# ---------------------------------------------------------------------------
# the machine: ladders, analytic boundary bivectors, batch evaluation


class EvansMachine:
    """Holds precomputed transport ladders and normalization for one wave."""

    def __init__(self, problem: SpectralProblem):
        self.sp = problem
        prof = problem.profile
        self.x_max = prof.x_max
        self.h = prof.h
        n = int(round(self.x_max / self.h))
        if abs(n * self.h - self.x_max) > 1e-12:
            n = max(1, n)
        self.xs = {
            "minus": np.linspace(-self.x_max, 0.0, n + 1),
            "plus": np.linspace(self.x_max, 0.0, n + 1),
        }
        self.R, self.r0 = default_radii(problem)
        self.lam_ref = complex(self.r0)
        self._ladders: Dict[Tuple[str, str], object] = {}

        # analytic flattening: the transported wedges grow like
        # exp(X e1_minus(lam)) and exp(-X e1_plus(lam)), where e1 is the
        # closed-form sum of the selected branch rates.  Dividing the
        # pairing by exp(g), g = X (e1_minus - e1_plus), is legitimate
        # (the factor is zero-free and analytic off the negative real
        # axis, real on the real axis), and it keeps |D| and arg D O(1)
        # along contours.  Without it the raw pairing runs through
        # hundreds of e-folds of magnitude and of phase, which aliases
        # the argument refinement and wrecks difference quotients at
        # the origin.
        self._g_ref = complex(self._growth_shift(
            np.array([self.lam_ref]))[0])

        # fixed reference bivectors: wedge of the selected eigenvector
        # pair at lambda_ref (real there, since lambda_ref > 0 is real)
        self.w_ref: Dict[str, np.ndarray] = {}
        self.phase_index: Dict[str, Dict[str, int]] = {}
        for side in ("plus", "minus"):
            modes = limiting_modes(problem, side, self.lam_ref)
            V = np.column_stack([modes.vectors[b] for b in SELECTED[side]])
            if np.max(np.abs(V.imag)) > 1e-10:
                raise RuntimeError("reference bases unexpectedly complex")
            self.w_ref[side] = wedge2(V.real.astype(float))
            self.phase_index[side] = {
                b: int(np.argmax(np.abs(modes.vectors[b])))
                for b in SELECTED[side]}

        # unit-determinant normalization at lambda_ref
        self._init_norm = {"plus": 1.0, "minus": 1.0}
        for side in ("plus", "minus"):
            raw = self.init_wedges(side, np.array([self.lam_ref]))[0]
            self._init_norm[side] = float(np.linalg.norm(raw))

        # exponent convention: E = 0 at lambda_ref
        self._exp_ref = 0.0
        ev = self.evaluate(np.array([self.lam_ref]))[0]
        self._exp_ref = ev.scale_exponent

    # -- pieces -----------------------------------------------------------

    def _growth_shift(self, lams: np.ndarray) -> np.ndarray:
        """Closed-form exponent g(lam) divided out of the raw pairing."""
        lams = np.asarray(lams, dtype=complex)
        out = np.zeros(lams.shape, dtype=complex)
        for side, sign in (("minus", 1.0), ("plus", -1.0)):
            alpha, _, kphi = self.sp.side_scalars(side)
            mf = _mu_fluid(alpha, lams)
            mr = _mu_reaction(self.sp.s, self.sp.d, kphi, lams)
            pick = 0 if side == "minus" else 1  # (f+, r+) grow, (f-, r-) decay
            out += sign * self.x_max * (mf[pick] + mr[pick])
        return out

    def _matrix_fn(self, x, lam):
        return lift2(self.sp.assemble(x, lam))

    def _ladder(self, side: str, level: str):
        key = (side, level)
        if key not in self._ladders:
            xs = self.xs[side]
            refine = {"coarse": 1, "fine": 4, "xfine": 8}[level]
            if refine > 1:
                xs = np.linspace(xs[0], xs[-1], (len(xs) - 1) * refine + 1)
            self._ladders[key] = build_ladder(self._matrix_fn, xs)
        return self._ladders[key]

    @staticmethod
    def _level_of(lams: np.ndarray) -> np.ndarray:
        a = np.abs(lams)
        out = np.full(len(lams), "coarse", dtype=object)
        out[a > FINE_LADDER_ABOVE] = "fine"
        out[a < XFINE_LADDER_BELOW] = "xfine"
        return out

    def init_wedges(self, side: str, lams: np.ndarray) -> np.ndarray:
        """Analytic boundary bivectors: Lambda^2(q(A)) applied to the
        reference bivector, q annihilating the non-selected branches.

        q(z) = z^2 - e1 z + e2 uses only the closed-form non-selected
        eigenvalue branches, which are analytic on the contour region,
        so the result continues analytically even through eigenvalue
        collisions inside the selected pair.
        """
        lams = np.asarray(lams, dtype=complex)
        alpha, _, kphi = self.sp.side_scalars(side)
        mf_p, mf_m = _mu_fluid(alpha, lams)
        mr_p, mr_m = _mu_reaction(self.sp.s, self.sp.d, kphi, lams)
        if side == "plus":            # annihilate the growing branches
            m1, m2 = mf_p, mr_p
        else:                         # annihilate the decaying branches
            m1, m2 = mf_m, mr_m
        e1 = m1 + m2
        e2 = m1 * m2
        A = (self.sp.limit_matrix(side, 0.0)[None, :, :]
             + lams[:, None, None] * self.sp.a1)
        qA = (A @ A - e1[:, None, None] * A
              + e2[:, None, None] * np.eye(4))
        w = np.einsum("npq,q->np", compound2_mult(qA), self.w_ref[side])
        return w / self._init_norm[side]

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, lams: np.ndarray, diagnostics: bool = False,
                 level: Optional[str] = None) -> List[EvansEvaluation]:
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        if level is None:
            levels = self._level_of(lams)
        else:
            levels = np.full(len(lams), level, dtype=object)
        out: List[Optional[EvansEvaluation]] = [None] * len(lams)
        for level in ("coarse", "fine", "xfine"):
            mask = levels == level
            if not np.any(mask):
                continue
            grp = lams[mask]
            ends = {}
            expos = {}
            for side in ("plus", "minus"):
                w0 = self.init_wedges(side, grp)
                ladder = self._ladder(side, level)
                ends[side], expos[side] = sweep(ladder, w0, grp)
            g = self._growth_shift(grp) - self._g_ref
            d = pairing(ends["minus"], ends["plus"]) * np.exp(-1j * g.imag)
            expo = expos["minus"] + expos["plus"] - g.real - self._exp_ref
            idxs = np.nonzero(mask)[0]
            for j, i in enumerate(idxs):
                ev = EvansEvaluation(lam=complex(grp[j]), d=complex(d[j]),
                                     scale_exponent=float(expo[j]),
                                     ladder=level)
                if diagnostics:
                    bm, sm = reconstruct_plane(ends["minus"][j])
                    bp, sp_ = reconstruct_plane(ends["plus"][j])
                    # smallest principal angle: 0 means a shared direction,
                    # i.e. an eigenvalue
                    smax = np.linalg.svd(bm.conj().T @ bp, compute_uv=False)
                    ev.basis_angle = float(np.arccos(np.clip(np.max(smax),
                                                             -1.0, 1.0)))
                    ev.decomposability = float(max(sm, sp_))
                out[i] = ev
        return out  # type: ignore[return-value]


def get_machine(problem: SpectralProblem) -> EvansMachine:
    m = getattr(problem, "_evans_machine", None)
    if m is None:
        m = EvansMachine(problem)
        problem._evans_machine = m
    return m


def evans_eval(problem: SpectralProblem, lam: complex,
               diagnostics: bool = True) -> EvansEvaluation:
    """Single-point Evans evaluation with conditioning diagnostics."""
    return get_machine(problem).evaluate(np.array([lam]),
                                         diagnostics=diagnostics)[0]


# ---------------------------------------------------------------------------
# contours and winding


def _outer_path(R: float, r0: float) -> Tuple[Callable, np.ndarray]:
    """Closed boundary of {r0 < |lam| < R, Re lam > 0}, counterclockwise.

    Pieces (parameter t in [0, 4)): right semicircle of radius R going
    up, imaginary axis down to the indentation, right indentation
    semicircle of radius r0 (clockwise around the excluded origin),
    imaginary axis back down to -iR.
    """
    lr = np.log(R / r0)

    def path(t):
        t = np.asarray(t, dtype=float)
        lam = np.empty(t.shape, dtype=complex)
        p0 = t < 1.0
        p1 = (t >= 1.0) & (t < 2.0)
        p2 = (t >= 2.0) & (t < 3.0)
        p3 = t >= 3.0
        th = -np.pi / 2 + np.pi * t[p0]
        lam[p0] = R * np.exp(1j * th)
        lam[p1] = 1j * R * np.exp(-lr * (t[p1] - 1.0))
        th = np.pi / 2 - np.pi * (t[p2] - 2.0)
        lam[p2] = r0 * np.exp(1j * th)
        lam[p3] = -1j * r0 * np.exp(lr * (t[p3] - 3.0))
        return lam

    t0 = np.concatenate([np.linspace(0.0, 1.0, 49, endpoint=False),
                         np.linspace(1.0, 2.0, 49, endpoint=False),
                         np.linspace(2.0, 3.0, 25, endpoint=False),
                         np.linspace(3.0, 4.0, 49, endpoint=False)])
    return path, t0


def _circle_path(radius: float,
                 center: complex = 0.0) -> Tuple[Callable, np.ndarray]:
    def path(t):
        t = np.asarray(t, dtype=float)
        return center + radius * np.exp(2j * np.pi * t)

    return path, np.linspace(0.0, 1.0, 33, endpoint=False)


def _accumulate(machine: EvansMachine, path: Callable, t_nodes: np.ndarray,
                period: Optional[float], max_nodes: int = 4096,
                dip_tol: float = 1e-8) -> Tuple[np.ndarray, np.ndarray,
                                                np.ndarray, float, float, int]:
    """Refine nodes until adjacent argument increments are below pi/2.

    period None means an open path; otherwise the path is closed with
    path(t + period) = path(t) and the wrap-around increment counts.
    """
    closed = period is not None
    ts = np.sort(np.asarray(t_nodes, dtype=float))
    evs = machine.evaluate(path(ts))
    d = np.array([e.d for e in evs])
    ex = np.array([e.scale_exponent for e in evs])
    n_evals = len(ts)

    while True:
        if np.any(d == 0.0):
            raise ContourError(
                "D vanishes exactly at a contour node; the contour passes "
                "through a zero (change the indentation radius)")
        dd = np.concatenate([d, d[:1]]) if closed else d
        ll = np.log(np.abs(d)) + ex
        ll = np.concatenate([ll, ll[:1]]) if closed else ll
        dargs = np.angle(dd[1:] * np.conj(dd[:-1]))
        # refine on phase for the winding, and on magnitude continuity:
        # a jump of many e-folds between neighbors means the phase data
        # is aliased no matter what np.angle reports
        bad = np.nonzero((np.abs(dargs) > 0.5 * np.pi)
                         | (np.abs(ll[1:] - ll[:-1]) > 2.0))[0]
        if len(bad) == 0:
            break
        t_next = np.concatenate([ts[1:], [ts[0] + period]]) if closed \
            else ts[1:]
        mids = 0.5 * (ts[bad] + t_next[bad])
        widths = t_next[bad] - ts[bad]
        if len(ts) + len(mids) > max_nodes or np.min(widths) < 1e-9:
            raise ContourError(
                "argument refinement exhausted; the contour passes too "
                "close to a zero of D (change the indentation radius)")
        if closed:
            mids = np.mod(mids, period)
        evs = machine.evaluate(path(mids))
        n_evals += len(mids)
        ts = np.concatenate([ts, mids])
        d = np.concatenate([d, [e.d for e in evs]])
        ex = np.concatenate([ex, [e.scale_exponent for e in evs]])
        order = np.argsort(ts)
        ts, d, ex = ts[order], d[order], ex[order]

    dd = np.concatenate([d, d[:1]]) if closed else d
    total = float(np.sum(np.angle(dd[1:] * np.conj(dd[:-1]))))

    # a-posteriori zero-proximity check: a node sitting in a deep local
    # valley of |D| (far below both neighbors) marks a near-hit zero
    logd = np.log(np.abs(d)) + ex
    if closed:
        nb = np.minimum(np.roll(logd, 1), np.roll(logd, -1))
        min_dip = float(np.exp(np.min(logd - nb)))
    elif len(logd) > 2:
        nb = np.minimum(logd[:-2], logd[2:])
        min_dip = float(np.exp(np.min(logd[1:-1] - nb)))
    else:
        min_dip = 1.0
    min_dip = min(min_dip, 1.0)
    if min_dip < dip_tol:
        raise ContourError(
            f"|D| dips by a factor {min_dip:.2e} on the contour; it passes "
            "through a zero (change the indentation radius)")
    return path(ts), d, ex, total, min_dip, n_evals


def winding(problem: SpectralProblem, kind: str = "outer",
            R: Optional[float] = None, r0: Optional[float] = None,
            n0: Optional[int] = None) -> ContourResult:
    """Argument-principle zero count over a default contour.

    kind "outer": boundary of the right-half-plane region between the
    indentation r0 and radius R; kind "origin": circle |lam| = r0.
    """
    machine = get_machine(problem)
    Rd, r0d = machine.R, machine.r0
    R = Rd if R is None else float(R)
    r0 = r0d if r0 is None else float(r0)
    if kind == "outer":
        path, t0 = _outer_path(R, r0)
        period = 4.0
    elif kind == "origin":
        if r0 > analyticity_disk(problem):
            raise ValueError(
                "origin circle radius exceeds the analyticity disk")
        path, t0 = _circle_path(r0)
        period = 1.0
    else:
        raise ValueError("kind must be 'outer' or 'origin'")
    if n0 is not None:
        t0 = np.linspace(0.0, period, int(n0), endpoint=False)
    nodes, d, ex, total, min_dip, n_evals = _accumulate(
        machine, path, t0, period=period)
    w = total / (2.0 * np.pi)
    wi = int(np.round(w))
    if abs(w - wi) > 0.05:
        raise ContourError(
            f"accumulated argument {total:.6f} is not within 0.05 of an "
            "integer multiple of 2 pi; refine the contour")
    return ContourResult(kind=kind, radius=R, r0=r0, nodes=nodes,
                         d_mantissa=d, exponents=ex, total_arg=total,
                         winding=wi, min_dip=min_dip, n_evals=n_evals)


def accumulate_arg(problem: SpectralProblem,
                   lams: Sequence[complex]) -> float:
    """Total continuous argument change of D along a polyline of lams.

    Refines between consecutive waypoints until increments are < pi/2;
    path independence of the result is an analyticity check.
    """
    machine = get_machine(problem)
    lams = np.asarray(lams, dtype=complex)
    total = 0.0
    for a, b in zip(lams[:-1], lams[1:]):
        def seg(t, a=a, b=b):
            return a + (b - a) * np.asarray(t)
        _, _, _, piece, _, _ = _accumulate(
            machine, seg, np.linspace(0.0, 1.0, 9), period=None)
        total += piece
    return total


# ---------------------------------------------------------------------------
# origin data: D(0), D'(0)


def d_prime_zero(problem: SpectralProblem,
                 r0: Optional[float] = None) -> complex:
    """Central-difference D'(0) from the two real-axis points +-r0."""
    machine = get_machine(problem)
    r = machine.r0 if r0 is None else float(r0)
    if r > analyticity_disk(problem):
        raise ValueError("r0 exceeds the analyticity disk about the origin")
    evs = machine.evaluate(np.array([r, -r], dtype=complex))
    vp = evs[0].d * np.exp(evs[0].scale_exponent)
    vm = evs[1].d * np.exp(evs[1].scale_exponent)
    return (vp - vm) / (2.0 * r)


# ---------------------------------------------------------------------------
# verdict


def verdict(problem: SpectralProblem, gamma: Optional[float] = None,
            gamma_tol: float = 1e-8,
            dprime_tol: float = 1e-8) -> StabilityReport:
    """Full stability decision by zero counting plus origin analysis.

    stable: no zeros in the right half-plane off the origin, and the
    origin carries exactly the simple translation zero.  Conflicting
    counts between R and 2R, or a degenerate connection (gamma = 0),
    yield "indeterminate".
    """
    machine = get_machine(problem)
    reasons: List[str] = []
    if gamma is None:
        gamma = transversality_gamma(problem.profile)

    origin = winding(problem, kind="origin")
    outer = winding(problem, kind="outer")
    outer2 = winding(problem, kind="outer", R=2.0 * machine.R)

    ev0 = machine.evaluate(np.array([0.0 + 0.0j]))[0]
    logd_circle = np.log(np.abs(origin.d_mantissa)) + origin.exponents
    typical = float(np.exp(np.median(logd_circle)))
    d0 = abs(ev0.d) * np.exp(ev0.scale_exponent)
    d0_ratio = d0 / typical if typical > 0 else np.inf

    dp0 = d_prime_zero(problem)

    contours = {"origin": origin, "outer": outer, "outer_2R": outer2}
    if abs(gamma) < gamma_tol:
        reasons.append("transversality coefficient gamma vanishes; the "
                       "translation zero cannot be certified simple")
        return StabilityReport("indeterminate", outer.winding, outer2.winding,
                               origin.winding, dp0, gamma, d0_ratio, reasons,
                               contours)
    if outer.winding != outer2.winding:
        reasons.append(f"zero count changed when doubling the radius "
                       f"({outer.winding} vs {outer2.winding})")
        return StabilityReport("indeterminate", outer.winding, outer2.winding,
                               origin.winding, dp0, gamma, d0_ratio, reasons,
                               contours)
    if abs(dp0) <= dprime_tol:
        reasons.append("|D'(0)| is numerically zero; origin zero may be "
                       "multiple")
        return StabilityReport("indeterminate", outer.winding, outer2.winding,
                               origin.winding, dp0, gamma, d0_ratio, reasons,
                               contours)
    if outer.winding == 0 and origin.winding == 1:
        label = "stable"
        reasons.append("no right-half-plane zeros away from the origin; "
                       "simple translation zero at the origin")
    elif outer.winding > 0:
        label = "unstable"
        reasons.append(f"{outer.winding} right-half-plane zero(s) away "
                       "from the origin")
    else:
        label = "indeterminate"
        reasons.append(f"unexpected origin count {origin.winding}")
    return StabilityReport(label, outer.winding, outer2.winding,
                           origin.winding, dp0, gamma, d0_ratio, reasons,
                           contours)


# ---------------------------------------------------------------------------
# real-axis zero localization and synthetic instability


def locate_real_zeros(problem: SpectralProblem, a: float, b: float,
                      n: int = 512, tol: float = 1e-8) -> List[float]:
    """Zeros of D on the real interval [a, b] by sign scanning.

    D is real on the real axis (conjugation symmetry); brackets are
    shrunk by batched 8-point subdivision.
    """
    machine = get_machine(problem)
    roots = []

    def dvals(xs, level=None):
        evs = machine.evaluate(xs.astype(complex), level=level)
        vals = np.array([e.d for e in evs])
        if np.max(np.abs(vals.imag)) > 1e-6 * np.max(np.abs(vals)):
            raise RuntimeError("D not real on the real axis")
        return vals.real

    def shrink(lo, hi, flo, fhi, level):
        while hi - lo > tol:
            grid = np.linspace(lo, hi, 9)
            full = np.concatenate([[flo], dvals(grid[1:-1], level), [fhi]])
            j = int(np.nonzero(full[:-1] * full[1:] < 0)[0][0])
            lo, hi = grid[j], grid[j + 1]
            flo, fhi = full[j], full[j + 1]
        return lo, hi, flo, fhi

    xs = np.linspace(a, b, n)
    fs = dvals(xs)
    for i in np.nonzero(fs[:-1] * fs[1:] < 0)[0]:
        lo, hi, flo, fhi = shrink(xs[i], xs[i + 1], fs[i], fs[i + 1], None)
        # polish: the bracket moves slightly when the transport error
        # drops, so re-bracket around the coarse root on the fine ladder
        w = max(100 * tol, 5e-3)
        lo, hi = max(a, lo - w), min(b, hi + w)
        flo, fhi = dvals(np.array([lo, hi]), "fine")
        if flo * fhi < 0:
            lo, hi, _, _ = shrink(lo, hi, flo, fhi, "fine")
        roots.append(0.5 * (lo + hi))
    return roots


def plant_instability(problem: SpectralProblem, strength: float = 2.0,
                      width: float = 1.0) -> SpectralProblem:
    """Same wave, with L -> L + g I for a localized bump g >= 0.

    Strong enough g pushes an eigenvalue into the right half-plane,
    giving a synthetic unstable test case with identical far-field
    structure.
    """
    def g(x):
        x = np.asarray(x, dtype=float)
        return strength * np.exp(-((x / width) ** 2))

    return SpectralProblem(profile=problem.profile, extra_potential=g)


def discretize_linearized_operator(problem: SpectralProblem,
                                   h: float) -> sparse.csr_matrix:
    """Sparse finite-difference matrix of the linearized operator.

    Dirichlet conditions at +-x_max; block layout (u then z).  Serves
    as a brute-force oracle for eigenvalues claimed by the Evans
    machinery.
    """
    sp = problem
    X = sp.profile.x_max
    N = int(round(2 * X / h)) - 1
    x = -X + h * np.arange(1, N + 1)
    c = sp.coefficients(x)
    g = (np.asarray(sp.extra_potential(x))
         if sp.extra_potential is not None else np.zeros(N))
    inv_h2 = 1.0 / h ** 2
    inv_2h = 1.0 / (2.0 * h)

    def d2():
        return sparse.diags([inv_h2 * np.ones(N - 1),
                             -2.0 * inv_h2 * np.ones(N),
                             inv_h2 * np.ones(N - 1)], [-1, 0, 1])

    def ddx_of(coefs):
        # centered conservative derivative: row j gets
        # (coefs[j+1] v[j+1] - coefs[j-1] v[j-1]) / 2h
        return sparse.diags([-coefs[:-1] * inv_2h, coefs[1:] * inv_2h],
                            [-1, 1])

    # u equation: u'' - (alpha u)' - (beta z)' + q k phi'(u) zbar u
    #             + q k phi(u) z + g u
    L_uu = d2() - ddx_of(c.alpha) + sparse.diags(sp.q * c.kdphi_z + g)
    L_uz = -ddx_of(c.beta) + sparse.diags(sp.q * c.kphi)
    # z equation: d z'' + s z' - k phi'(u) zbar u - (k phi(u) - g) z
    D1 = sparse.diags([-np.ones(N - 1) * inv_2h, np.ones(N - 1) * inv_2h],
                      [-1, 1])
    L_zu = sparse.diags(-c.kdphi_z)
    L_zz = sp.d * d2() + sp.s * D1 + sparse.diags(-c.kphi + g)
    return sparse.bmat([[L_uu, L_uz], [L_zu, L_zz]], format="csr")


def unstable_spectrum(problem: SpectralProblem, h: float = 0.02,
                      k: int = 10, sigma: float = 0.8,
                      re_tol: float = 1e-4) -> np.ndarray:
    """Right-half-plane eigenvalues of the discretized operator."""
    L = discretize_linearized_operator(problem, h)
    vals = spla.eigs(L, k=k, sigma=sigma, return_eigenvectors=False)
    vals = vals[vals.real > re_tol]
    return np.sort_complex(vals)
