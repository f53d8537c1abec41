"""Command-line front end: JSON configs in, CSV/JSON artifacts out.

Every subcommand resolves one config (file plus flag overrides), runs a
module pipeline, and writes artifacts named {command}_{hash}.{csv,json}
where the hash digests the fully resolved config.  Reports echo that
config, so a report can be re-run byte-identically.

Exit codes: 0 success, 1 numerical failure (diagnosed on stderr),
2 config or usage error.
"""

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import __version__
from .model import ModelParams, params_from_config, validate as validate_params
from .hugoniot import WaveProblem, classify, cj_speeds, solve_rh
from .profile import (NoConnectionError, Profile, ProfileOptions,
                      TravelingWaveODE, compute_profile, transversality_gamma,
                      verify_decay)
from .spectral import (ADJOINT_RATE_NOTE, BRANCHES, SLOW_COEFF_NOTE,
                       SpectralProblem, WEDGE_NOTE, dispersion,
                       limiting_modes)
from .evans import (ContourError, SplittingError, verdict as evans_verdict,
                    winding as evans_winding)
from .resolvent_green import (EXCITED_SPEED_NOTE, ResolventError,
                              apply_green, green_function, resolvent_kernel)
from . import evolution as ev


class ConfigError(ValueError):
    """Config rejected; message carries the dotted path of the offense."""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # return-code dispatch needs errors as exceptions, not sys.exit
    def error(self, message):
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# config handling


_PROBLEM_KEYS = {"u_plus", "u_minus", "s", "z_minus", "z_plus"}
_PROFILE_KEYS = {"h", "x_max", "tail_tol"}
_CONTOUR_KEYS = {"R", "r0", "n0"}
_EVOLVE_KEYS = {"dx", "cfl", "dt_rule", "domain_rule", "half_width",
                "snap_every", "x_stride", "e0_max"}
_PERT_KEYS = {"kind", "e0", "center", "width", "u_weight", "z_weight",
              "cutoff"}


def _reject_unknown(block: dict, allowed: set, path: str) -> None:
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


def load_config(path: Optional[str]) -> dict:
    """Parse and structurally check a config file; {} when absent."""
    if path is None:
        raw = {}
    else:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    _reject_unknown(raw, {"model", "problem", "numerics", "run"}, "config")
    numerics = raw.get("numerics", {})
    _reject_unknown(numerics, {"profile", "contour", "evolve"}, "numerics")
    _reject_unknown(numerics.get("profile", {}), _PROFILE_KEYS,
                    "numerics.profile")
    _reject_unknown(numerics.get("contour", {}), _CONTOUR_KEYS,
                    "numerics.contour")
    _reject_unknown(numerics.get("evolve", {}), _EVOLVE_KEYS,
                    "numerics.evolve")
    _reject_unknown(raw.get("problem", {}), _PROBLEM_KEYS, "problem")
    run = raw.get("run", {})
    _reject_unknown(run, {"perturbation"}, "run")
    _reject_unknown(run.get("perturbation", {}), _PERT_KEYS,
                    "run.perturbation")
    return raw


def resolve_config(raw: dict, overrides: Dict[str, object]) -> dict:
    """Fill defaults and apply flag overrides; the result is echoed in
    reports and hashed into artifact names."""
    cfg = {
        "model": dict(raw.get("model", {})),
        "problem": {"u_plus": 0.0, "z_minus": 0.0, "z_plus": 1.0},
        "numerics": {
            "profile": {"h": 0.0125},
            "contour": {},
            "evolve": {},
        },
        "run": {"perturbation": {"kind": "gaussian", "e0": 1e-3,
                                 "center": 0.0, "width": 1.0,
                                 "u_weight": 1.0, "z_weight": 0.0}},
    }
    cfg["problem"].update(raw.get("problem", {}))
    numerics = raw.get("numerics", {})
    for sub in ("profile", "contour", "evolve"):
        cfg["numerics"][sub].update(numerics.get(sub, {}))
    cfg["run"]["perturbation"].update(
        raw.get("run", {}).get("perturbation", {}))
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = cfg
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
    return cfg


def build_params(cfg: dict) -> ModelParams:
    return params_from_config(cfg["model"])


def _strong_root(params: ModelParams, u_plus: float, s: float) -> float:
    roots = [r for r in solve_rh(params, u_plus, s)
             if r.admissible and r.u_minus > u_plus]
    if not roots:
        raise ConfigError(
            f"problem: no admissible burned state for s={s:g}, "
            f"u_plus={u_plus:g}")
    return max(r.u_minus for r in roots)


def build_problem(params: ModelParams, cfg: dict) -> WaveProblem:
    pb = cfg["problem"]
    u_plus = float(pb["u_plus"])
    z_minus = float(pb["z_minus"])
    z_plus = float(pb["z_plus"])
    s = pb.get("s")
    u_minus = pb.get("u_minus")
    if s is None and u_minus is None:
        raise ConfigError("problem.s: required (or give problem.u_minus)")
    if u_minus is None:
        u_minus = _strong_root(params, u_plus, float(s))
    if s is None:
        fx = params.flux
        gap = (u_minus + params.q * z_minus) - (u_plus + params.q * z_plus)
        if gap == 0.0:
            raise ConfigError("problem: equal end-state masses leave the "
                              "speed undetermined")
        s = (float(fx.f(u_minus, z_minus)) - float(fx.f(u_plus, z_plus))) \
            / gap
    s = float(s)
    u_minus = float(u_minus)
    return WaveProblem(u_minus=u_minus, u_plus=u_plus, s=s,
                       wave_class=classify(params, u_minus, u_plus, s),
                       z_minus=z_minus, z_plus=z_plus)


def profile_options(cfg: dict) -> ProfileOptions:
    blk = cfg["numerics"]["profile"]
    kwargs = {"h": float(blk.get("h", 0.0125))}
    if blk.get("x_max") is not None:
        kwargs["x_max"] = float(blk["x_max"])
    if blk.get("tail_tol") is not None:
        kwargs["tail_tol"] = float(blk["tail_tol"])
    return ProfileOptions(**kwargs)


def evolve_config(cfg: dict) -> ev.EvolveConfig:
    blk = dict(cfg["numerics"]["evolve"])
    if "half_width" in blk and blk["half_width"] is not None:
        blk["half_width"] = float(blk["half_width"])
    return ev.EvolveConfig(**blk)


# ---------------------------------------------------------------------------
# artifacts


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(outdir: str, command: str, cfg: dict, header: List[str],
              rows: List[tuple]) -> str:
    path = os.path.join(outdir, f"{command}_{config_hash(cfg)}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _provenance() -> dict:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(
        int(epoch) if epoch else int(datetime.now(timezone.utc).timestamp()),
        tz=timezone.utc)
    return {
        "version": __version__,
        "timestamp": when.isoformat(),
        "arithmetic": {"float": "IEEE-754 binary64",
                       "eps": float(np.finfo(np.float64).eps)},
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _jsonable(float(obj.real)),
                "im": _jsonable(float(obj.imag))}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None   # keep reports strict JSON
    return obj


# standing formula-deviation notes, repeated on every report that touches
# the affected quantity
_REPORT_NOTES = {
    "modes": (SLOW_COEFF_NOTE, ADJOINT_RATE_NOTE),
    "dispersion": (WEDGE_NOTE,),
    "evans": (SLOW_COEFF_NOTE,),
    "winding": (SLOW_COEFF_NOTE,),
    "verdict": (SLOW_COEFF_NOTE,),
    "resolvent": (ADJOINT_RATE_NOTE,),
    "green": (ADJOINT_RATE_NOTE, EXCITED_SPEED_NOTE),
    "evolve": (EXCITED_SPEED_NOTE,),
}


def write_report(outdir: str, command: str, cfg: dict, results: dict,
                 warnings: List[str]) -> str:
    path = os.path.join(outdir, f"{command}_{config_hash(cfg)}.json")
    report = {
        "command": command,
        "config": cfg,
        "results": _jsonable(results),
        "provenance": _provenance(),
        "warnings": list(warnings) + list(_REPORT_NOTES.get(command, ())),
    }
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# profile artifact round trip


def write_profile_artifact(profile: Profile, outdir: str,
                           cfg: dict) -> Tuple[str, str]:
    rows = list(zip(profile.xi, profile.u, profile.z, profile.y))
    csv_path = write_csv(outdir, "profile", cfg, ["xi", "u", "z", "y"], rows)
    decay = verify_decay(profile) if profile.decay is None else profile.decay
    gamma = profile.gamma
    if gamma is None:
        gamma = transversality_gamma(profile)
    pr = profile.problem
    results = {
        "s": pr.s, "u_minus": pr.u_minus, "u_plus": pr.u_plus,
        "z_minus": pr.z_minus, "z_plus": pr.z_plus,
        "wave_kind": pr.wave_class.kind.value,
        "x_max": profile.x_max, "h": profile.h,
        "residual_max": profile.residual_max,
        "endpoint_err": profile.endpoint_err,
        "gamma": gamma,
        "decay": [{"component": f.component, "side": f.side,
                   "rate": f.rate, "target": f.target,
                   "rel_err": f.rel_err, "n_points": f.n_points}
                  for f in decay.fits],
    }
    json_path = write_report(outdir, "profile", cfg, results, [])
    return csv_path, json_path


def load_profile_artifact(csv_path: str, params: ModelParams) -> Profile:
    """Rebuild a Profile from the CSV plus its JSON sidecar."""
    side_path = os.path.splitext(csv_path)[0] + ".json"
    try:
        with open(side_path) as fh:
            side = json.load(fh)["results"]
    except FileNotFoundError:
        raise ConfigError(f"profile sidecar not found: {side_path}")
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    xi, u, z, y = data.T
    problem = WaveProblem(
        u_minus=float(side["u_minus"]), u_plus=float(side["u_plus"]),
        s=float(side["s"]),
        wave_class=classify(params, float(side["u_minus"]),
                            float(side["u_plus"]), float(side["s"])),
        z_minus=float(side["z_minus"]), z_plus=float(side["z_plus"]))
    # u' is a pointwise function of the state on the orbit
    du = TravelingWaveODE(params, problem).rhs(np.stack([u, z, y]))[0]
    return Profile(params=params, problem=problem, xi=xi, u=u, z=z, y=y,
                   du=du, x_max=float(side["x_max"]), h=float(side["h"]),
                   residual_max=float(side["residual_max"]),
                   endpoint_err=float(side["endpoint_err"]),
                   gamma=float(side["gamma"]))


def _get_profile(args, params: ModelParams, cfg: dict) -> Profile:
    if getattr(args, "profile", None):
        return load_profile_artifact(args.profile, params)
    problem = build_problem(params, cfg)
    return compute_profile(problem, params, profile_options(cfg))


# ---------------------------------------------------------------------------
# subcommands


def _contour_kwargs(cfg: dict) -> dict:
    blk = cfg["numerics"]["contour"]
    out = {}
    if blk.get("R") is not None:
        out["R"] = float(blk["R"])
    if blk.get("r0") is not None:
        out["r0"] = float(blk["r0"])
    if blk.get("n0") is not None:
        out["n0"] = int(blk["n0"])
    return out


def cmd_validate(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    rep = validate_params(params)
    results = {"admissible": rep.admissible, "violations": rep.violations}
    path = write_report(outdir, "validate", cfg, results,
                        list(rep.violations))
    print(path)
    return 0 if rep.admissible else 1


def cmd_rh(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    pb = cfg["problem"]
    if pb.get("s") is None:
        raise ConfigError("problem.s: required")
    s = float(pb["s"])
    u_plus = float(pb["u_plus"])
    roots = solve_rh(params, u_plus, s)
    rows = [(s, r.u_minus, r.wave_class.kind.value, r.rh_residual,
             r.admissible) for r in roots]
    csv_path = write_csv(outdir, "rh", cfg,
                         ["s", "u_minus", "class", "rh_residual",
                          "admissible"], rows)
    results = {"n_roots": len(roots),
               "roots": [{"u_minus": r.u_minus,
                          "class": r.wave_class.kind.value,
                          "rh_residual": r.rh_residual,
                          "admissible": r.admissible} for r in roots]}
    print(csv_path)
    print(write_report(outdir, "rh", cfg, results, []))
    return 0


def cmd_cj(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    u_plus = float(cfg["problem"]["u_plus"])
    s_det, s_def = cj_speeds(params, u_plus)
    results = {"u_plus": u_plus, "s_detonation": s_det,
               "s_deflagration": s_def}
    print(write_report(outdir, "cj", cfg, results, []))
    return 0


def cmd_profile(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    problem = build_problem(params, cfg)
    profile = compute_profile(problem, params, profile_options(cfg))
    csv_path, json_path = write_profile_artifact(profile, outdir, cfg)
    print(csv_path)
    print(json_path)
    return 0


def cmd_modes(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    profile = _get_profile(args, params, cfg)
    sp = SpectralProblem(profile)
    lams = np.linspace(args.lam_min, args.lam_max, args.n) \
        + 1j * args.lam_imag
    rows = []
    for side in ("minus", "plus"):
        for lam in lams:
            ms = limiting_modes(sp, side, complex(lam))
            row = [side, lam.real, lam.imag,
                   ms.stable_count, ms.unstable_count]
            for key in BRANCHES:
                mu = ms.mu[key]
                row += [mu.real, mu.imag]
            rows.append(tuple(row))
    header = ["side", "re_lam", "im_lam", "n_stable", "n_unstable"]
    for key in BRANCHES:
        tag = key.replace("+", "p").replace("-", "m")
        header += [f"re_mu_{tag}", f"im_mu_{tag}"]
    csv_path = write_csv(outdir, "modes", cfg, header, rows)
    results = {"n_lambda": int(args.n), "sides": ["minus", "plus"]}
    print(csv_path)
    print(write_report(outdir, "modes", cfg, results, []))
    return 0


def cmd_dispersion(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    profile = _get_profile(args, params, cfg)
    sp = SpectralProblem(profile)
    xi = np.linspace(-args.xi_max, args.xi_max, args.n)
    curves = dispersion(sp, xi)
    names = ["f_minus", "f_plus", "r_plus", "r_minus"]
    rows = []
    for i, x in enumerate(xi):
        row = [x]
        for name in names:
            val = curves.curves[name][i]
            row += [val.real, val.imag]
        rows.append(tuple(row))
    header = ["xi"]
    for name in names:
        header += [f"re_{name}", f"im_{name}"]
    csv_path = write_csv(outdir, "dispersion", cfg, header, rows)
    warnings = []
    if not curves.containment_ok:
        warnings.append("dispersion curves escape the predicted wedge")
    results = {"eta1": curves.eta1, "eta2": curves.eta2,
               "containment_ok": curves.containment_ok}
    print(csv_path)
    print(write_report(outdir, "dispersion", cfg, results, warnings))
    return 0


def _report_from_stability(rep) -> dict:
    return {
        "verdict": rep.verdict,
        "outer_winding": rep.outer_winding,
        "outer_winding_2r": rep.outer_winding_2r,
        "origin_winding": rep.origin_winding,
        "d_prime0": complex(rep.d_prime0),
        "gamma": rep.gamma,
        "d0_ratio": rep.d0_ratio,
        "reasons": list(rep.reasons),
        "contours": {name: {"kind": c.kind, "radius": c.radius, "r0": c.r0,
                            "winding": c.winding, "total_arg": c.total_arg,
                            "min_dip": c.min_dip, "n_evals": c.n_evals}
                     for name, c in rep.contours.items()},
    }


def cmd_evans(args, cfg: dict, outdir: str) -> int:
    if not getattr(args, "profile", None):
        raise ConfigError("profile required: pass --profile "
                          "(CSV artifact of the profile command)")
    params = build_params(cfg)
    profile = load_profile_artifact(args.profile, params)
    sp = SpectralProblem(profile)
    rep = evans_verdict(sp)
    outer = rep.contours["outer"]
    rows = [(lam.real, lam.imag, d.real, d.imag, ex)
            for lam, d, ex in zip(outer.nodes, outer.d_mantissa,
                                  outer.exponents)]
    csv_path = write_csv(outdir, "evans", cfg,
                         ["re_lam", "im_lam", "re_d", "im_d",
                          "scale_exponent"], rows)
    print(csv_path)
    print(write_report(outdir, "evans", cfg, _report_from_stability(rep),
                       list(rep.reasons)))
    return 0


def cmd_winding(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    profile = _get_profile(args, params, cfg)
    sp = SpectralProblem(profile)
    kwargs = _contour_kwargs(cfg)
    if args.R is not None:
        kwargs["R"] = args.R
    if args.r0 is not None:
        kwargs["r0"] = args.r0
    if args.nodes is not None:
        kwargs["n0"] = args.nodes
    res = evans_winding(sp, kind=args.kind, **kwargs)
    results = {"kind": res.kind, "radius": res.radius, "r0": res.r0,
               "winding": res.winding, "total_arg": res.total_arg,
               "min_dip": res.min_dip, "n_evals": res.n_evals}
    print(write_report(outdir, "winding", cfg, results, []))
    return 0


def cmd_verdict(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    profile = _get_profile(args, params, cfg)
    sp = SpectralProblem(profile)
    rep = evans_verdict(sp)
    print(write_report(outdir, "verdict", cfg, _report_from_stability(rep),
                       list(rep.reasons)))
    return 0 if rep.verdict != "indeterminate" else 1


def cmd_resolvent(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    profile = _get_profile(args, params, cfg)
    sp = SpectralProblem(profile)
    lam = complex(args.lam_re, args.lam_im)
    sl = resolvent_kernel(sp, lam, args.y)
    rows = []
    for i, x in enumerate(sl.xs):
        row = [x]
        for comp in range(2):
            for src in range(2):
                g = sl.values[i, comp, src]
                row += [g.real, g.imag]
        rows.append(tuple(row))
    header = ["x"]
    for comp in "uz":
        for src in "uz":
            header += [f"re_G_{comp}{src}", f"im_G_{comp}{src}"]
    csv_path = write_csv(outdir, "resolvent", cfg, header, rows)
    results = {"lam": lam, "y": args.y, "n_x": len(sl.xs),
               "jump_residual": sl.jump_residual,
               "match_sigma_min": sl.match_sigma_min}
    print(csv_path)
    print(write_report(outdir, "resolvent", cfg, results, []))
    return 0


def _check_evolution(sp: SpectralProblem, profile: Profile,
                     t_final: float) -> dict:
    """Linearized evolution vs kernel application on shared gaussian data."""
    from scipy.interpolate import CubicSpline

    def g(x):
        return np.exp(-0.5 * (x / 0.2) ** 2)

    half = max(profile.x_max + 6.0, profile.x_max + 2.0 * t_final)
    ecfg = ev.EvolveConfig(half_width=half)
    n_half = int(np.ceil(half / ecfg.dx))
    xs = ecfg.dx * np.arange(-n_half, n_half + 1)
    f = ev.Field(xs, g(xs), 0.4 * g(xs))
    traj = ev.evolve(profile.params, f, t_final, mode="linearized",
                     profile=profile, config=ecfg)
    ys = np.arange(-1.6, 1.6 + 1e-9, 0.05)
    ga = apply_green(sp, [t_final], ys, g(ys), 0.4 * g(ys),
                     xs=np.linspace(-12.0, 12.0, 193))
    su = CubicSpline(xs, traj.final.u)
    sz = CubicSpline(xs, traj.final.z)
    gu = ga.values[0, :, 0].real
    gz = ga.values[0, :, 1].real
    ref = float(np.trapezoid(np.abs(gu) + np.abs(gz), ga.xs))
    err = float(np.trapezoid(np.abs(gu - su(ga.xs))
                             + np.abs(gz - sz(ga.xs)), ga.xs))
    rel = err / ref if ref > 0 else math.inf
    return {"t": t_final, "l1_reference": ref, "l1_error": err,
            "rel_l1": rel, "tolerance": 0.05, "converged": ga.converged,
            "pass": bool(rel < 0.05 and ga.converged)}


def cmd_green(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    profile = _get_profile(args, params, cfg)
    sp = SpectralProblem(profile)
    ts = [float(t) for t in args.t.split(",")]
    sample = green_function(sp, ts, args.y)
    rows = []
    for it, t in enumerate(sample.ts):
        for ix, x in enumerate(sample.xs):
            row = [t, x]
            for comp in range(2):
                for src in range(2):
                    row.append(sample.total[it, ix, comp, src])
            for comp in range(2):
                for src in range(2):
                    row.append(sample.excited[it, ix, comp, src])
            rows.append(tuple(row))
    header = ["t", "x"]
    for tag in ("G", "E"):
        for comp in "uz":
            for src in "uz":
                header.append(f"{tag}_{comp}{src}")
    csv_path = write_csv(outdir, "green", cfg, header, rows)
    warnings = []
    if not sample.converged:
        warnings.append("contour quadrature did not reach its tolerance")
    results = {"ts": list(sample.ts), "y": args.y,
               "n_contour": sample.n_contour,
               "est_error": sample.est_error,
               "converged": sample.converged}
    if args.check_evolution:
        chk = _check_evolution(sp, profile, args.T)
        results["check_evolution"] = chk
        if not chk["pass"]:
            warnings.append("evolution cross-check failed its 5% gate")
    print(csv_path)
    print(write_report(outdir, "green", cfg, results, warnings))
    return 0


def _perturbation_from(args, cfg: dict, run_cfg: ev.EvolveConfig):
    blk = dict(cfg["run"]["perturbation"])
    if args.perturbation is not None:
        blk["kind"] = args.perturbation
    if args.E0 is not None:
        blk["e0"] = args.E0
    if blk["kind"] == "file":
        if not args.init_file:
            raise ConfigError("run.perturbation: kind 'file' needs "
                              "--init-file (CSV with columns x,u,z)")
        data = np.loadtxt(args.init_file, delimiter=",", skiprows=1)

        def from_file(xs):
            u0 = np.interp(xs, data[:, 0], data[:, 1], left=0.0, right=0.0)
            z0 = np.interp(xs, data[:, 0], data[:, 2], left=0.0, right=0.0)
            return u0, z0

        return from_file, blk
    spec = ev.PerturbationSpec(
        kind=blk["kind"], e0=float(blk["e0"]), center=float(blk["center"]),
        width=float(blk["width"]), u_weight=float(blk["u_weight"]),
        z_weight=float(blk["z_weight"]),
        cutoff=None if blk.get("cutoff") is None else float(blk["cutoff"]))
    return spec, blk


def cmd_evolve(args, cfg: dict, outdir: str) -> int:
    params = build_params(cfg)
    profile = _get_profile(args, params, cfg)
    run_cfg = evolve_config(cfg)
    if args.snap_every is not None:
        from dataclasses import replace
        run_cfg = replace(run_cfg, snap_every=args.snap_every)
    spec, blk = _perturbation_from(args, cfg, run_cfg)
    cfg["run"]["perturbation"] = blk       # echo resolved perturbation
    run = ev.perturb_and_track(profile, spec, args.T, config=run_cfg)

    from scipy.interpolate import CubicSpline
    su = CubicSpline(run.xs, run.steady[0])
    sz = CubicSpline(run.xs, run.steady[1])
    rows = []
    for j, t in enumerate(run.ts):
        ub = su(run.xs_ds - run.delta[j])
        zb = sz(run.xs_ds - run.delta[j])
        for i, x in enumerate(run.xs_ds):
            rows.append((t, x,
                         ub[i] + run.U_ds[j, i, 0],
                         zb[i] + run.U_ds[j, i, 1],
                         run.U_ds[j, i, 0], run.U_ds[j, i, 1]))
    csv_path = write_csv(outdir, "evolve", cfg,
                         ["t", "x", "u", "z", "U_u", "U_z"], rows)

    fits = ev.decay_rates(run)
    template = ev.template_compare(run, profile)
    warnings = []
    if run.aborted:
        warnings.append("run aborted on norm blow-up; trajectory is partial")
    if not run.delta_reliable.all():
        warnings.append("some shift fits were flat and reused the previous "
                        "value")
    results = {
        "e0": run.e0, "T": args.T, "dt": run.dt, "aborted": run.aborted,
        "ts": list(run.ts), "delta": list(run.delta),
        "delta_dot": list(run.delta_dot),
        "delta_reliable": [bool(b) for b in run.delta_reliable],
        "norms": {"L1": list(run.norms[1.0]), "L2": list(run.norms[2.0]),
                  "Linf": list(run.norms[np.inf])},
        "zeta_final": float(run.zeta[-1]),
        "fits": {str(p): {"exponent": f.exponent, "intercept": f.intercept,
                          "t_window": list(f.t_window),
                          "n_points": f.n_points, "truncated": f.truncated}
                 for p, f in fits.items()},
        "template": {"max_ratio": template.max_ratio,
                     "trend_slope": template.trend_slope,
                     "delta_dot_bound": template.delta_dot_bound,
                     "outgoing_empty": template.outgoing_empty,
                     "excluded_nodes": template.excluded_nodes},
    }
    print(csv_path)
    print(write_report(outdir, "evolve", cfg, results, warnings))
    return 0


# ---------------------------------------------------------------------------
# parameter sweep


def _sweep_point(payload: Tuple[str, str, float]) -> dict:
    cfg_blob, axis, value = payload
    cfg = json.loads(cfg_blob)
    row = {"value": value, "verdict": "", "re_dprime0": math.nan,
           "im_dprime0": math.nan, "gamma": math.nan,
           "outer_winding": -1, "origin_winding": -1, "error": ""}
    try:
        if axis == "s":
            cfg["problem"]["s"] = value
        else:
            cfg["model"][axis] = value
        cfg["problem"].pop("u_minus", None)   # re-solve the burned state
        params = build_params(cfg)
        problem = build_problem(params, cfg)
        profile = compute_profile(problem, params, profile_options(cfg))
        rep = evans_verdict(SpectralProblem(profile))
        row.update(verdict=rep.verdict, re_dprime0=rep.d_prime0.real,
                   im_dprime0=rep.d_prime0.imag, gamma=rep.gamma,
                   outer_winding=rep.outer_winding,
                   origin_winding=rep.origin_winding)
    except Exception as exc:                 # recorded, not fatal
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args, cfg: dict, outdir: str) -> int:
    if args.points < 1:
        raise ConfigError("sweep: empty range (need at least one point)")
    if args.max < args.min:
        raise ConfigError("sweep: unsortable range (min > max)")
    values = np.linspace(args.min, args.max, args.points)
    cfg["run"]["sweep"] = {"axis": args.axis, "min": args.min,
                           "max": args.max, "points": args.points}
    blob = json.dumps(cfg, sort_keys=True)
    payloads = [(blob, args.axis, float(v)) for v in values]

    threads = os.environ.get("COMBUST_THREADS")
    n_workers = int(threads) if threads else (os.cpu_count() or 1)
    n_workers = max(1, min(n_workers, len(payloads)))
    if n_workers > 1:
        import multiprocessing as mp
        with mp.get_context("fork").Pool(n_workers) as pool:
            rows = pool.map(_sweep_point, payloads)
    else:
        rows = [_sweep_point(p) for p in payloads]

    header = [args.axis, "verdict", "re_dprime0", "im_dprime0", "gamma",
              "outer_winding", "origin_winding", "error"]
    csv_rows = [(r["value"], r["verdict"], r["re_dprime0"], r["im_dprime0"],
                 r["gamma"], r["outer_winding"], r["origin_winding"],
                 r["error"]) for r in rows]
    csv_path = write_csv(outdir, "sweep", cfg, header, csv_rows)
    n_failed = sum(1 for r in rows if r["error"])
    warnings = [f"{n_failed} of {len(rows)} sweep points failed"] \
        if n_failed else []
    results = {"axis": args.axis, "values": [r["value"] for r in rows],
               "verdicts": [r["verdict"] for r in rows],
               "n_failed": n_failed, "rows": rows}
    print(csv_path)
    print(write_report(outdir, "sweep", cfg, results, warnings))
    return 0


# ---------------------------------------------------------------------------
# dispatcher


def _build_parser() -> _Parser:
    parser = _Parser(prog="combust",
                     description="Traveling combustion-wave laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default=".", help="artifact directory")

    p = sub.add_parser("validate", help="check a model config")
    common(p)

    p = sub.add_parser("rh", help="jump-condition roots at one speed")
    common(p)
    p.add_argument("--s", type=float, help="wave speed override")
    p.add_argument("--u-plus", type=float, help="unburned state override")

    p = sub.add_parser("cj", help="sonic (tangency) speeds")
    common(p)

    p = sub.add_parser("profile", help="compute a traveling-wave profile")
    common(p)

    for name, help_ in (("modes", "far-field spatial modes over a grid"),
                        ("dispersion", "essential-spectrum curves")):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--profile", help="profile CSV artifact")
        if name == "modes":
            p.add_argument("--lam-min", type=float, default=0.0)
            p.add_argument("--lam-max", type=float, default=2.0)
            p.add_argument("--lam-imag", type=float, default=0.0)
            p.add_argument("--n", type=int, default=41)
        else:
            p.add_argument("--xi-max", type=float, default=8.0)
            p.add_argument("--n", type=int, default=201)

    p = sub.add_parser("evans", help="Evans function over the outer contour")
    common(p)
    p.add_argument("--profile", help="profile CSV artifact (required)")

    p = sub.add_parser("winding", help="argument-principle zero count")
    common(p)
    p.add_argument("--profile", help="profile CSV artifact")
    p.add_argument("--kind", choices=("outer", "origin"), default="outer")
    p.add_argument("--R", type=float, help="outer radius")
    p.add_argument("--r0", type=float, help="origin indentation radius")
    p.add_argument("--nodes", type=int, help="initial contour nodes")

    p = sub.add_parser("verdict", help="full stability decision")
    common(p)
    p.add_argument("--profile", help="profile CSV artifact")

    p = sub.add_parser("resolvent", help="resolvent kernel slice")
    common(p)
    p.add_argument("--profile", help="profile CSV artifact")
    p.add_argument("--lam-re", type=float, default=1.0)
    p.add_argument("--lam-im", type=float, default=0.0)
    p.add_argument("--y", type=float, default=0.0)

    p = sub.add_parser("green", help="time-domain kernel sample")
    common(p)
    p.add_argument("--profile", help="profile CSV artifact")
    p.add_argument("--t", default="1.0", help="comma-separated times")
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--check-evolution", action="store_true",
                   help="cross-check the kernel against linearized evolution")
    p.add_argument("--T", type=float, default=5.0,
                   help="horizon of the evolution cross-check")

    p = sub.add_parser("evolve", help="nonlinear perturbation run")
    common(p)
    p.add_argument("--profile", help="profile CSV artifact")
    p.add_argument("--perturbation", choices=("gaussian", "bump", "file"))
    p.add_argument("--E0", type=float, help="weighted amplitude")
    p.add_argument("--T", type=float, default=30.0)
    p.add_argument("--snap-every", type=float)
    p.add_argument("--init-file", help="CSV x,u,z for kind 'file'")

    p = sub.add_parser("sweep", help="parameter sweep of the verdict")
    common(p)
    p.add_argument("--axis", choices=("q", "k", "d", "s"), required=True)
    p.add_argument("--min", type=float, required=True)
    p.add_argument("--max", type=float, required=True)
    p.add_argument("--points", type=int, required=True)

    return parser


_COMMANDS = {
    "validate": cmd_validate,
    "rh": cmd_rh,
    "cj": cmd_cj,
    "profile": cmd_profile,
    "modes": cmd_modes,
    "dispersion": cmd_dispersion,
    "evans": cmd_evans,
    "winding": cmd_winding,
    "verdict": cmd_verdict,
    "resolvent": cmd_resolvent,
    "green": cmd_green,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
}

_OVERRIDE_MAP = {
    "s": "problem.s",
    "u_plus": "problem.u_plus",
    "E0": "run.perturbation.e0",
}


def dispatch(argv: List[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        raw = load_config(getattr(args, "config", None))
        overrides = {}
        for attr, dotted in _OVERRIDE_MAP.items():
            if getattr(args, attr, None) is not None:
                overrides[dotted] = getattr(args, attr)
        cfg = resolve_config(raw, overrides)
        outdir = args.out
        os.makedirs(outdir, exist_ok=True)
        return _COMMANDS[args.command](args, cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NoConnectionError, ContourError, SplittingError, ResolventError,
            RuntimeError, ValueError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
