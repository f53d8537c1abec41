"""Scalar reactive model definition: flux, ignition function, constants.

The model couples a lumped fluid variable u and a reactant mass fraction z:

    u_t + f(u,z)_x = b u_xx + q k phi(u) z
    z_t            = d z_xx -   k phi(u) z

with b = 1 fixed by scaling.  Everything downstream (end-state algebra,
wave profiles, spectral machinery, time stepping) consumes the immutable
containers defined here.  Fluxes and ignition functions are closed-form
analytic objects registered by name so that derivatives are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import qmc

ArrayLike = np.ndarray  # scalars are accepted everywhere via np.asarray


@dataclass(frozen=True)
class FluxSpec:
    """Closed-form flux f(u,z) with exact partial derivatives.

    All evaluators are vectorized over u, z.  Second mixed partials are
    carried because coefficient derivatives along a profile need the chain
    rule (alpha' = f_uu u' + f_uz z', beta' = f_uz u' + f_zz z').
    """

    name: str
    f: Callable[[ArrayLike, ArrayLike], ArrayLike]
    f_u: Callable[[ArrayLike, ArrayLike], ArrayLike]
    f_z: Callable[[ArrayLike, ArrayLike], ArrayLike]
    f_uu: Callable[[ArrayLike, ArrayLike], ArrayLike]
    f_uz: Callable[[ArrayLike, ArrayLike], ArrayLike]
    f_zz: Callable[[ArrayLike, ArrayLike], ArrayLike]
    u_lo: float = -10.0  # working domain for u (convexity is sampled here)
    u_hi: float = 10.0


def _burgers(coupling: float = 0.0) -> FluxSpec:
    # f = u^2/2 + coupling * z * u; coupling = 0 is the reference flux.
    # f_u = u + c z is positive only for u > 0, so the declared working
    # domain starts at the unburned level rather than spanning both signs.
    c = float(coupling)
    return FluxSpec(
        name="burgers" if c == 0.0 else "burgers_coupled",
        u_lo=0.0, u_hi=10.0,
        f=lambda u, z: 0.5 * np.asarray(u) ** 2 + c * np.asarray(z) * np.asarray(u),
        f_u=lambda u, z: np.asarray(u) + c * np.asarray(z),
        f_z=lambda u, z: c * np.asarray(u) + 0.0 * np.asarray(z),
        f_uu=lambda u, z: np.ones_like(np.asarray(u, dtype=float) + np.asarray(z, dtype=float)),
        f_uz=lambda u, z: c * np.ones_like(np.asarray(u, dtype=float) + np.asarray(z, dtype=float)),
        f_zz=lambda u, z: np.zeros_like(np.asarray(u, dtype=float) + np.asarray(z, dtype=float)),
    )


def _linear() -> FluxSpec:
    # f = u: violates f_uu > 0, kept for validate() negative tests
    return FluxSpec(
        name="linear",
        f=lambda u, z: np.asarray(u, dtype=float) + 0.0 * np.asarray(z),
        f_u=lambda u, z: np.ones_like(np.asarray(u, dtype=float) + np.asarray(z, dtype=float)),
        f_z=lambda u, z: np.zeros_like(np.asarray(u, dtype=float) + np.asarray(z, dtype=float)),
        f_uu=lambda u, z: np.zeros_like(np.asarray(u, dtype=float) + np.asarray(z, dtype=float)),
        f_uz=lambda u, z: np.zeros_like(np.asarray(u, dtype=float) + np.asarray(z, dtype=float)),
        f_zz=lambda u, z: np.zeros_like(np.asarray(u, dtype=float) + np.asarray(z, dtype=float)),
    )


FLUXES: Dict[str, Callable[..., FluxSpec]] = {
    "burgers": lambda **kw: _burgers(0.0),
    "burgers_coupled": lambda coupling=0.1, **kw: _burgers(coupling),
    "linear": lambda **kw: _linear(),
}


@dataclass(frozen=True)
class IgnitionFn:
    """Bump-type ignition cutoff phi(u).

    phi vanishes identically outside (u_i, u_sup), is strictly positive
    inside, and is C^1 with phi'(u_i) = phi'(u_sup) = 0.  Default shape:

        phi(u) = amplitude * 16 * ((u - u_i)(u_sup - u))^2 / (u_sup - u_i)^4

    normalized so the midpoint value equals `amplitude`.
    """

    u_i: float = 0.5      # lower ignition threshold
    u_sup: float = 3.5    # upper ignition threshold
    amplitude: float = 1.0

    def phi(self, u: ArrayLike) -> ArrayLike:
        u = np.asarray(u, dtype=float)
        w = self.u_sup - self.u_i
        g = (u - self.u_i) * (self.u_sup - u)
        inside = (u > self.u_i) & (u < self.u_sup)
        val = self.amplitude * 16.0 * g * g / w ** 4
        return np.where(inside, val, 0.0)

    def dphi(self, u: ArrayLike) -> ArrayLike:
        u = np.asarray(u, dtype=float)
        w = self.u_sup - self.u_i
        g = (u - self.u_i) * (self.u_sup - u)
        dg = (self.u_sup - u) - (u - self.u_i)
        inside = (u > self.u_i) & (u < self.u_sup)
        val = self.amplitude * 32.0 * g * dg / w ** 4
        return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class State:
    """A pointwise (u, z) pair. z in [0,1] is monitored, not enforced."""

    u: float
    z: float

    def physical(self) -> bool:
        return 0.0 <= self.z <= 1.0


@dataclass(frozen=True)
class ModelParams:
    q: float = 0.5                    # heat release
    k: float = 1.0                    # reaction rate, > 0
    d: float = 0.2                    # reactant diffusion, > 0
    b: float = 1.0                    # fluid diffusion, fixed to 1 by scaling
    flux: FluxSpec = field(default_factory=_burgers)
    ignition: IgnitionFn = field(default_factory=IgnitionFn)


def default_params(**overrides) -> ModelParams:
    """The reference configuration: f = u^2/2, q=0.5, k=1, d=0.2,
    ignition interval (0.5, 3.5).  A flux may be given by registry name."""
    fx = overrides.get("flux")
    if isinstance(fx, str):
        overrides["flux"] = FLUXES[fx]()
    return ModelParams(**overrides)


def eval_flux(params: ModelParams, u: float, z: float) -> Tuple[float, float, float, float]:
    """Flux value and partials (f, f_u, f_z, f_uu) at a point.

    Rejects u outside the declared working domain.
    """
    fx = params.flux
    uu = np.asarray(u, dtype=float)
    if np.any(uu < fx.u_lo) or np.any(uu > fx.u_hi):
        raise ValueError(
            "flux working domain violated: u=%r outside [%g, %g]" % (u, fx.u_lo, fx.u_hi)
        )
    out = (fx.f(u, z), fx.f_u(u, z), fx.f_z(u, z), fx.f_uu(u, z))
    if np.isscalar(u) and np.isscalar(z):
        return tuple(float(v) for v in out)
    return out


def eval_ignition(params: ModelParams, u: float) -> Tuple[float, float]:
    """Ignition value and derivative (phi, phi'); exactly 0 outside support."""
    if np.isscalar(u):
        return (float(params.ignition.phi(u)), float(params.ignition.dphi(u)))
    return (params.ignition.phi(u), params.ignition.dphi(u))


@dataclass
class ValidationReport:
    violations: List[str] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return not self.violations


def validate(params: ModelParams, n_samples: int = 1000, seed: int = 0) -> ValidationReport:
    """Sampled hypothesis check: constants, convexity, derivative consistency.

    Report-only; an empty violation list means the instance is admissible.
    """
    rep = ValidationReport()
    if not params.k > 0:
        rep.violations.append("k > 0 fails (k=%g)" % params.k)
    if not params.d > 0:
        rep.violations.append("d > 0 fails (d=%g)" % params.d)
    if params.b != 1.0:
        rep.violations.append("b = 1 fails (b=%g)" % params.b)
    ign = params.ignition
    if not ign.u_i < ign.u_sup:
        rep.violations.append("u_i < u^i fails (%g >= %g)" % (ign.u_i, ign.u_sup))
        return rep  # sampling below assumes an ordered interval

    rng = np.random.default_rng(seed)
    fx = params.flux
    # low-discrepancy samples of the open working rectangle (u_lo,u_hi)x(0,1)
    pts = qmc.Halton(d=2, scramble=True, seed=seed).random(n_samples)
    w = fx.u_hi - fx.u_lo
    us = fx.u_lo + w * (1e-9 + (1.0 - 2e-9) * pts[:, 0])
    zs = pts[:, 1]
    fu = np.asarray(fx.f_u(us, zs))
    fuu = np.asarray(fx.f_uu(us, zs))
    # convexity hypotheses hold where sampled; report the worst offender
    bad = us[fu <= 0]
    if bad.size:
        rep.violations.append("f_u>0 fails (e.g. u=%.6g)" % bad[0])
    bad = us[fuu <= 0]
    if bad.size:
        rep.violations.append("f_uu>0 fails (e.g. u=%.6g)" % bad[0])

    # supplied derivatives must match central differences of f
    h = 1e-6 * max(1.0, fx.u_hi - fx.u_lo)
    us_in = np.clip(us, fx.u_lo + h, fx.u_hi - h)
    fd_u = (np.asarray(fx.f(us_in + h, zs)) - np.asarray(fx.f(us_in - h, zs))) / (2 * h)
    fd_z = (np.asarray(fx.f(us_in, zs + h)) - np.asarray(fx.f(us_in, zs - h))) / (2 * h)
    scale = 1.0 + np.abs(np.asarray(fx.f(us_in, zs)))
    if np.max(np.abs(fd_u - np.asarray(fx.f_u(us_in, zs))) / scale) > 1e-5:
        rep.violations.append("f_u inconsistent with finite differences of f")
    if np.max(np.abs(fd_z - np.asarray(fx.f_z(us_in, zs))) / scale) > 1e-5:
        rep.violations.append("f_z inconsistent with finite differences of f")

    # ignition: zero outside, positive inside, C^1 at thresholds
    w = ign.u_sup - ign.u_i
    outside = np.concatenate([[ign.u_i, ign.u_sup],
                              rng.uniform(ign.u_i - 2 * w, ign.u_i, 50),
                              rng.uniform(ign.u_sup, ign.u_sup + 2 * w, 50)])
    if np.any(ign.phi(outside) != 0.0) or np.any(ign.dphi(outside) != 0.0):
        rep.violations.append("phi or phi' nonzero outside ignition support")
    inside = rng.uniform(ign.u_i + 1e-9 * w, ign.u_sup - 1e-9 * w, 200)
    if np.any(ign.phi(inside) <= 0.0):
        rep.violations.append("phi not strictly positive inside (u_i, u^i)")
    eps = 1e-7 * w
    if abs(float(ign.phi(ign.u_i + eps))) > 1e-10 or abs(float(ign.phi(ign.u_sup - eps))) > 1e-10:
        rep.violations.append("phi not continuous at thresholds")
    if abs(float(ign.dphi(ign.u_i + eps))) > 1e-5 or abs(float(ign.dphi(ign.u_sup - eps))) > 1e-5:
        rep.violations.append("phi' does not vanish at thresholds")
    return rep


def params_from_config(block: dict) -> ModelParams:
    """Build ModelParams from a config model block.

    Expected shape:
        {"flux": {"name": "burgers"|"burgers_coupled"|"linear", "coupling": real},
         "q":, "k":, "d":, "b":,
         "ignition": {"u_i":, "u_sup":, "amplitude":}}
    Unknown keys are rejected with a path-precise diagnostic.
    """
    from .cli import ConfigError  # deferred to avoid an import cycle

    allowed = {"flux", "q", "k", "d", "b", "ignition"}
    for key in block:
        if key not in allowed:
            raise ConfigError("model.%s: unknown key" % key)
    flux_block = dict(block.get("flux", {"name": "burgers"}))
    flux_name = flux_block.pop("name", "burgers")
    if flux_name not in FLUXES:
        raise ConfigError("model.flux.name: unknown flux %r (have %s)"
                          % (flux_name, sorted(FLUXES)))
    for key in flux_block:
        if key not in ("coupling",):
            raise ConfigError("model.flux.%s: unknown key" % key)
    flux = FLUXES[flux_name](**flux_block)

    ign_block = dict(block.get("ignition", {}))
    for key in ign_block:
        if key not in ("u_i", "u_sup", "amplitude"):
            raise ConfigError("model.ignition.%s: unknown key" % key)
    ignition = IgnitionFn(**{k: float(v) for k, v in ign_block.items()})

    kwargs = {}
    for key in ("q", "k", "d", "b"):
        if key in block:
            kwargs[key] = float(block[key])
    return ModelParams(flux=flux, ignition=ignition, **kwargs)
