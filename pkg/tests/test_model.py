"""Flux/ignition evaluation and parameter validation."""

import numpy as np
import pytest

from combust.model import (FLUXES, IgnitionFn, ModelParams, default_params,
                           eval_flux, eval_ignition, validate)


def test_default_params_values():
    p = default_params()
    assert (p.q, p.k, p.d, p.b) == (0.5, 1.0, 0.2, 1.0)
    assert (p.ignition.u_i, p.ignition.u_sup) == (0.5, 3.5)
    assert p.flux.name == "burgers"


def test_eval_flux_burgers_closed_form():
    p = default_params()
    assert eval_flux(p, 2.0, 0.0) == pytest.approx((2.0, 2.0, 0.0, 1.0), abs=0)
    assert eval_flux(p, 0.5, 1.0) == pytest.approx((0.125, 0.5, 0.0, 1.0), abs=0)
    u = np.array([0.0, 0.7, 2.0, 3.2])
    z = np.array([0.3, 1.0, 0.5, 0.0])
    f, f_u, f_z, f_uu = eval_flux(p, u, z)
    assert np.allclose(f, 0.5 * u * u, rtol=0, atol=0)
    assert np.allclose(f_u, u, rtol=0, atol=0)
    assert np.allclose(f_z, 0.0, rtol=0, atol=0)
    assert np.allclose(f_uu, 1.0, rtol=0, atol=0)


def test_eval_flux_coupled_example():
    p = default_params(flux="burgers_coupled")
    f, f_u, f_z, f_uu = eval_flux(p, 1.0, 1.0)
    assert (f, f_u, f_z, f_uu) == pytest.approx((0.6, 1.1, 0.1, 1.0), abs=1e-15)


def test_eval_flux_domain_guard():
    p = default_params()
    with pytest.raises(ValueError):
        eval_flux(p, 1e4, 0.0)


def test_ignition_bump_midpoint_unit():
    # amplitude normalization: phi peaks at exactly 1 at the midpoint
    p = default_params()
    phi, dphi = eval_ignition(p, 2.0)
    assert phi == pytest.approx(1.0, abs=0)
    assert dphi == pytest.approx(0.0, abs=1e-15)


def test_ignition_zero_outside_and_c1():
    p = default_params()
    for u in (-1.0, 0.0, 0.5, 3.5, 4.0):
        phi, dphi = eval_ignition(p, u)
        assert phi == 0.0
        assert dphi == 0.0
    # C1 across thresholds: finite differences straddling u_i and u_sup
    for u0 in (0.5, 3.5):
        eps = 1e-7
        phi_m, _ = eval_ignition(p, u0 - eps)
        phi_p, _ = eval_ignition(p, u0 + eps)
        assert abs(phi_p - phi_m) < 1e-12


def test_ignition_closed_form_interior():
    ig = IgnitionFn(u_i=0.5, u_sup=3.5, amplitude=1.0)
    u = np.linspace(0.6, 3.4, 37)
    w = 3.5 - 0.5
    expect = 16.0 * ((u - 0.5) * (3.5 - u)) ** 2 / w ** 4
    assert np.allclose(ig.phi(u), expect, rtol=1e-14)
    # derivative against central differences
    h = 1e-6
    fd = (ig.phi(u + h) - ig.phi(u - h)) / (2 * h)
    assert np.allclose(ig.dphi(u), fd, rtol=0, atol=5e-9)


def test_ignition_derivative_consistency_randomized():
    rng = np.random.default_rng(42)
    ig = IgnitionFn(u_i=0.3, u_sup=2.9, amplitude=1.7)
    u = rng.uniform(-1.0, 4.0, size=200)
    h = 1e-6
    fd = (ig.phi(u + h) - ig.phi(u - h)) / (2 * h)
    # skip points within h of the thresholds where phi is only C1
    mask = (np.abs(u - 0.3) > 1e-5) & (np.abs(u - 2.9) > 1e-5)
    assert np.allclose(ig.dphi(u)[mask], fd[mask], rtol=1e-6, atol=1e-7)


def test_validate_default_admissible():
    rep = validate(default_params())
    assert rep.admissible
    assert rep.violations == []


def test_validate_rejects_bad_parameters():
    assert not validate(default_params(k=-1.0)).admissible
    assert not validate(default_params(d=0.0)).admissible
    p = default_params()
    bad_ig = ModelParams(q=p.q, k=p.k, d=p.d, b=p.b, flux=p.flux,
                         ignition=IgnitionFn(u_i=2.0, u_sup=1.0))
    assert not validate(bad_ig).admissible


def test_validate_rejects_nonconvex_flux():
    p = default_params()
    lin = ModelParams(q=p.q, k=p.k, d=p.d, b=p.b, flux=FLUXES["linear"](),
                      ignition=p.ignition)
    rep = validate(lin)
    assert not rep.admissible
    assert any("convex" in v or "f_uu" in v for v in rep.violations)


def test_coupled_flux_partials_fd():
    p = default_params(flux="burgers_coupled")
    rng = np.random.default_rng(7)
    u = rng.uniform(0.1, 4.0, size=50)
    z = rng.uniform(0.0, 1.0, size=50)
    f, f_u, f_z, _ = eval_flux(p, u, z)
    h = 1e-6
    fu_fd = (eval_flux(p, u + h, z)[0] - eval_flux(p, u - h, z)[0]) / (2 * h)
    fz_fd = (eval_flux(p, u, z + h)[0] - eval_flux(p, u, z - h)[0]) / (2 * h)
    assert np.allclose(f_u, fu_fd, rtol=1e-7, atol=1e-8)
    assert np.allclose(f_z, fz_fd, rtol=1e-7, atol=1e-8)
