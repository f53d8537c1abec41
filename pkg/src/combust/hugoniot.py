"""End-state algebra: jump conditions, wave classification, sonic speeds.

A traveling wave connecting (u-, z- = 0) to (u+, z+ = 1) at speed s > 0 must
satisfy the jump condition

    f(u+, 1) - f(u-, 0) = s q + s (u+ - u-),

obtained by integrating the conservative form of the model across the wave.
Waves are classified by comparing the characteristic speeds
alpha_hat_pm = f_u(u_pm, z_pm) against s.  The degenerate (sonic) boundary
cases are the Chapman-Jouguet waves, where two root branches merge.

Also implemented: the burned-phase pressure law of a two-phase gamma-law
mixture, whose intersection with the Rayleigh line reproduces the same
root-counting picture for the full gas-dynamical system.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .model import ModelParams

# classification tolerance band: |alpha_hat - s| below this is reported CJ
CJ_BAND = 1e-8


class WaveKind(enum.Enum):
    STRONG_DETONATION = "StrongDetonation"
    WEAK_DETONATION = "WeakDetonation"
    WEAK_DEFLAGRATION = "WeakDeflagration"
    STRONG_DEFLAGRATION = "StrongDeflagration"
    CJ_DETONATION = "ChapmanJouguetDetonation"
    CJ_DEFLAGRATION = "ChapmanJouguetDeflagration"


@dataclass(frozen=True)
class WaveClass:
    kind: WaveKind
    alpha_hat_minus: float  # f_u(u-, 0)
    alpha_hat_plus: float   # f_u(u+, 1)

    def __str__(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class WaveProblem:
    """End states, speed, and classification of one candidate wave."""

    u_minus: float
    u_plus: float
    s: float
    wave_class: WaveClass
    z_minus: float = 0.0
    z_plus: float = 1.0

    def rh_residual(self, params: ModelParams) -> float:
        fx = params.flux
        return float(
            fx.f(self.u_plus, self.z_plus) - fx.f(self.u_minus, self.z_minus)
            - self.s * params.q * (self.z_plus - self.z_minus)
            - self.s * (self.u_plus - self.u_minus)
        )

    def admissible(self, params: ModelParams) -> bool:
        """End states compatible with the ignition hypotheses."""
        ign = params.ignition
        return (
            ign.u_i <= self.u_minus <= ign.u_sup
            and not (ign.u_i <= self.u_plus <= ign.u_sup)
            and self.s > 0
        )


@dataclass(frozen=True)
class RHRoot:
    u_minus: float
    wave_class: WaveClass
    rh_residual: float
    admissible: bool


def classify(params: ModelParams, u_minus: float, u_plus: float, s: float) -> WaveClass:
    """Classification by strict inequalities, with a CJ tolerance band.

    Sonic contact on either side (|alpha_hat - s| < CJ_BAND * max(1,|s|))
    reports the CJ variant; detonation vs deflagration is then resolved by
    compression direction u- > u+ (convex flux).
    """
    fx = params.flux
    am = float(fx.f_u(u_minus, 0.0))
    ap = float(fx.f_u(u_plus, 1.0))
    band = CJ_BAND * max(1.0, abs(s))
    if abs(am - s) < band or abs(ap - s) < band:
        kind = WaveKind.CJ_DETONATION if u_minus > u_plus else WaveKind.CJ_DEFLAGRATION
    elif am > s > ap:
        kind = WaveKind.STRONG_DETONATION
    elif s > am and s > ap:
        kind = WaveKind.WEAK_DETONATION
    elif am > s and ap > s:
        kind = WaveKind.WEAK_DEFLAGRATION
    else:  # ap > s > am
        kind = WaveKind.STRONG_DEFLAGRATION
    return WaveClass(kind=kind, alpha_hat_minus=am, alpha_hat_plus=ap)


def _rh_mismatch(params: ModelParams, u_plus: float, s: float):
    """Jump-condition mismatch as a function of u-. Concave for convex f."""
    fx = params.flux
    q = params.q

    def g(um):
        return (fx.f(u_plus, 1.0) - fx.f(um, 0.0) - s * q - s * (u_plus - um))

    return g


def solve_rh(params: ModelParams, u_plus: float, s: float,
             n_scan: int = 2048) -> List[RHRoot]:
    """All real roots u- of the jump condition, classified.

    Roots are located by sign-change bracketing on a working-domain grid and
    polished by Brent's method; a tangency (double) root is detected via the
    critical points of the mismatch.  Convexity of f guarantees at most two
    roots, but the scan does not assume it.  Inadmissible roots (end states
    violating the ignition-placement hypotheses) are returned flagged.
    """
    if not s > 0:
        raise ValueError("wave speed must be positive (s=%g)" % s)
    fx = params.flux
    g = _rh_mismatch(params, u_plus, s)
    grid = np.linspace(fx.u_lo, fx.u_hi, n_scan + 1)
    vals = np.array([g(u) for u in grid])
    scale = max(1.0, float(np.max(np.abs(vals))))

    roots: List[float] = []
    for i in range(n_scan):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(float(brentq(g, a, b, xtol=1e-14, rtol=8.9e-16)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))

    # tangency roots: critical points of g where |g| ~ 0 but no sign change
    dg = lambda um: s - float(fx.f_u(um, 0.0))
    dvals = np.array([dg(u) for u in grid])
    for i in range(n_scan):
        if dvals[i] == 0.0 or dvals[i] * dvals[i + 1] < 0:
            uc = float(brentq(dg, grid[i], grid[i + 1], xtol=1e-14, rtol=8.9e-16)) \
                if dvals[i] != 0.0 else float(grid[i])
            if abs(g(uc)) <= 1e-10 * scale and all(abs(uc - r) > 1e-7 for r in roots):
                roots.append(uc)

    # dedupe (brackets sharing an endpoint can double-report)
    roots.sort()
    unique: List[float] = []
    for r in roots:
        if not unique or abs(r - unique[-1]) > 1e-9 * max(1.0, abs(r)):
            unique.append(r)

    out = []
    for um in unique:
        wc = classify(params, um, u_plus, s)
        prob = WaveProblem(u_minus=um, u_plus=u_plus, s=s, wave_class=wc)
        out.append(RHRoot(
            u_minus=um,
            wave_class=wc,
            rh_residual=prob.rh_residual(params),
            admissible=prob.admissible(params),
        ))
    return out


def cj_speeds(params: ModelParams, u_plus: float) -> Tuple[Optional[float], Optional[float]]:
    """Sonic (Chapman-Jouguet) speeds: (detonation s_*, deflagration s^*).

    At a CJ speed the jump condition and the tangency condition
    f_u(u-, 0) = s hold simultaneously; eliminating s gives a scalar
    equation in u-.  Roots with u- > u+ belong to the detonation branch,
    u- < u+ to the deflagration branch; branches with no positive-speed
    root are reported as None.  The nonreactive limit q = 0 is degenerate
    (two-root structure for every s > 0) and reports s_* = 0.
    """
    fx = params.flux
    q = params.q
    if q == 0.0:
        return 0.0, None

    def tangency(um):
        s = float(fx.f_u(um, 0.0))
        return (fx.f(u_plus, 1.0) - fx.f(um, 0.0) - s * q - s * (u_plus - um))

    grid = np.linspace(fx.u_lo, fx.u_hi, 2049)
    vals = np.array([tangency(u) for u in grid])
    roots: List[float] = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0:
            roots.append(float(brentq(tangency, grid[i], grid[i + 1],
                                      xtol=1e-14, rtol=8.9e-16)))

    s_det: Optional[float] = None
    s_defl: Optional[float] = None
    for um in roots:
        s = float(fx.f_u(um, 0.0))
        if s <= 0:
            continue
        if um > u_plus:
            s_det = s if s_det is None else min(s_det, s)
        elif um < u_plus:
            s_defl = s if s_defl is None else max(s_defl, s)
    return s_det, s_defl


@dataclass(frozen=True)
class GammaLawMixture:
    """Two-phase gamma-law state algebra (unburned phase 1, burned phase 2)."""

    Gamma1: float      # Gruneisen constant, unburned
    Gamma2: float      # Gruneisen constant, burned
    c1: float = 1.0    # specific heat, unburned
    c2: float = 1.0    # specific heat, burned
    tau_plus: float = 1.0   # unburned specific volume
    p_plus: float = 1.0     # unburned pressure
    q: float = 0.5          # heat release

    def __post_init__(self):
        for name in ("Gamma1", "Gamma2", "c1", "c2", "tau_plus"):
            if not getattr(self, name) > 0:
                raise ValueError("%s must be positive" % name)


def mixture_hugoniot(mix: GammaLawMixture, tau: float) -> float:
    """Burned-phase pressure P-(tau) on the shifted jump locus.

    P-(tau) = ((tau+/Gamma1 - (tau - tau+)/2) p+ + q)
              / (tau/Gamma2 - (tau - tau+)/2)
    """
    num = (mix.tau_plus / mix.Gamma1 - 0.5 * (tau - mix.tau_plus)) * mix.p_plus + mix.q
    den = tau / mix.Gamma2 - 0.5 * (tau - mix.tau_plus)
    if den <= 0:
        raise ValueError("singular point of the pressure law: denominator %g <= 0 at tau=%g"
                         % (den, tau))
    return num / den


def standard_structure(mix: GammaLawMixture) -> bool:
    """True iff the weak/strong pair structure of the scalar model persists:
    p+ (1 - Gamma2/Gamma1) < q Gamma2 / tau+."""
    return mix.p_plus * (1.0 - mix.Gamma2 / mix.Gamma1) < mix.q * mix.Gamma2 / mix.tau_plus


def rayleigh_intersections(mix: GammaLawMixture, s: float,
                           tau_max_factor: float = 3.0) -> List[float]:
    """Intersections of P-(tau) with the Rayleigh line of slope -s^2 through
    (tau+, p+): sorted roots of P-(tau) + s^2 (tau - tau+) - p+ = 0."""

    def h(tau):
        return mixture_hugoniot(mix, tau) + s ** 2 * (tau - mix.tau_plus) - mix.p_plus

    # valid branch: tau > 0 with positive pressure-law denominator
    lo = 1e-9
    if 1.0 / mix.Gamma2 - 0.5 < 0:  # denominator can vanish at large tau
        tau_sing = 0.5 * mix.tau_plus / (0.5 - 1.0 / mix.Gamma2)
        hi = min(tau_max_factor * mix.tau_plus, 0.999 * tau_sing)
    else:
        hi = tau_max_factor * mix.tau_plus
    grid = np.linspace(lo, hi, 4097)
    vals = np.array([h(t) for t in grid])
    roots: List[float] = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0:
            roots.append(float(brentq(h, grid[i], grid[i + 1], xtol=1e-13)))
    return sorted(roots)
