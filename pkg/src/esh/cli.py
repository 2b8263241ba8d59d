"""Command-line front end.

Subcommands cover the common workflows: criticality coefficients of the
amplitude expansion (with an optional parameter sweep), branch
continuation from a localized seed or a saved profile, linear stability
of a profile, time integration with a step-size study, interior
wavenumber measurement and the pattern/flat energy balance point.

A JSON config file may supply any long-option value; explicit flags win
over the config, which wins over built-in defaults.  Every output file
carries provenance comments (tool version, merged options, timestamp).
Exit codes: 0 success, 1 failed run, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import io as eio
from .continuation import (
    ContinuationOptions,
    EventType,
    continue_branch,
    continue_rung,
    detect_bifurcations,
    localized_seed,
)
from .diagnostics import interior_wavenumber, maxwell_study
from .errors import EshError, InvalidSeed, StallError
from .evolve import EvolveConfig, Scheme, run
from .grid import Grid
from .model import ModelParams
from .normal_form import normal_form_report, q2_of
from .stability import compute_spectrum
from .steady import newton_stationary, newton_travelling


class UsageError(EshError):
    """Missing or malformed command-line value."""


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file with default option values")


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """flags > config file > defaults"""
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise EshError(f"{args.config}: config must be a JSON object")
        cfg = loaded
    out = {}
    for key, default in defaults.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            out[key] = flag_val
        elif key in cfg:
            out[key] = cfg[key]
        else:
            out[key] = default
    return out


def _provenance(command: str, opt: dict) -> list:
    echo = json.dumps({k: opt[k] for k in sorted(opt)}, default=str)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return [f"esh {__version__}", f"command: {command}",
            f"options: {echo}", f"written: {stamp}"]


def _require(opt: dict, key: str, command: str):
    if opt[key] is None:
        raise UsageError(f"{command} needs --{key.replace('_', '-')}")
    return opt[key]


def _parse_range(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"range must look like lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"non-numeric range bound in {text!r}")
    if hi <= lo:
        raise UsageError(f"empty range {text!r}")
    return lo, hi


# --------------------------------------------------------------------------
# nf


def _cmd_nf(args: argparse.Namespace) -> int:
    opt = _merged(args, {
        "b": 1.8, "alpha": 0.0, "beta": 0.0, "json": False,
        "surface": False, "slice": "beta=0", "alpha_range": "-2:20",
        "samples": 441, "out": None,
    })
    if opt["surface"]:
        return _nf_surface(args, opt)
    rep = normal_form_report(opt["b"], opt["alpha"], opt["beta"])
    if opt["json"]:
        print(json.dumps(rep.to_dict(), indent=2))
        return 0
    print(f"b={rep.b} alpha={rep.alpha} beta={rep.beta}")
    print(f"q1={rep.q1:+.6f}  q2={rep.q2:+.6f}  p2={rep.p2:+.6f}")
    print(f"q3={rep.q3:+.6f}  q4={rep.q4:+.6f}")
    print(f"regime: {rep.regime.value}")
    if rep.mu_maxwell is not None:
        print(f"energy-balance offset: {rep.mu_maxwell:+.6g}")
    return 0


def _nf_surface(args: argparse.Namespace, opt: dict) -> int:
    """Sweep the cubic criticality coefficient along a slice of the
    gradient-coefficient plane; its sign changes locate the codimension-2
    curve."""
    mode = str(opt["slice"]).replace(" ", "")
    lo, hi = _parse_range(str(opt["alpha_range"]))
    n = int(opt["samples"])
    if n < 2:
        raise UsageError("--samples must be at least 2")
    b = float(opt["b"])
    alphas = np.linspace(lo, hi, n)
    if mode == "beta=0":
        betas = np.zeros_like(alphas)
    elif mode == "variational":
        betas = 2.0 * alphas
    else:
        raise UsageError(f"unknown slice {opt['slice']!r} "
                         "(choose beta=0 or variational)")
    rows = [(a, bt, q2_of(b, a, bt)) for a, bt in zip(alphas, betas)]
    lines = [f"# nf-surface b={b:.17g} slice={mode}"]
    lines += [f"# {s}" for s in _provenance("nf", opt)]
    lines.append("alpha,beta,q2")
    lines += [f"{a:.17g},{bt:.17g},{q:.17g}" for a, bt, q in rows]
    text = "\n".join(lines) + "\n"
    if opt["out"]:
        with open(opt["out"], "w") as fh:
            fh.write(text)
        signs = np.sign([q for _, _, q in rows])
        flips = int(np.count_nonzero(signs[:-1] != signs[1:]))
        print(f"{n} samples, {flips} sign changes -> {opt['out']}")
    else:
        sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------
# continue


def _cmd_continue(args: argparse.Namespace) -> int:
    opt = _merged(args, {
        "r": None, "b": 1.8, "alpha": 0.0, "beta": 0.0,
        "length": 32.0 * np.pi, "n": 512, "branch": None, "phi": None,
        "resume": None, "direction": -1, "folds": 4, "ds0": 0.02,
        "ds_max": 0.3, "max_points": 3000, "detect": False, "stride": 5,
        "rungs": False, "out": "branch.csv", "profiles_dir": None,
        "final_profile": None,
    })
    prov = _provenance("continue", opt)
    label = "custom"
    phi = 0.0
    if opt["branch"] is not None:
        if opt["branch"] not in ("L0", "L1"):
            raise UsageError("--branch must be L0 or L1")
        label = opt["branch"]
        phi = 0.0 if label == "L0" else np.pi
    if opt["phi"] is not None:
        phi = float(opt["phi"])

    if opt["resume"]:
        field, p, c = eio.load_profile(opt["resume"])
        if opt["r"] is not None:
            p = p.with_r(float(opt["r"]))
        even = bool(np.max(np.abs(field.values
                                  - field.grid.reflect(field.values))) < 1e-8)
        if c == 0.0 and even:
            state = newton_stationary(field, p, enforce_even=True)
        else:
            state = newton_travelling(field, c, field, p)
    else:
        r = _require(opt, "r", "continue")
        grid = Grid(length=float(opt["length"]), n=int(opt["n"]))
        p = ModelParams(r=float(r), b=float(opt["b"]),
                        alpha=float(opt["alpha"]), beta=float(opt["beta"]))
        seed = localized_seed(grid, p.r, phi=phi)
        state = newton_stationary(seed, p, enforce_even=True)

    copts = ContinuationOptions(
        ds0=float(opt["ds0"]), ds_max=float(opt["ds_max"]),
        max_folds=int(opt["folds"]) or None,
        max_points=int(opt["max_points"]))
    status = 0
    try:
        branch = continue_branch(state, p, direction=int(opt["direction"]),
                                 opts=copts, label=label)
    except StallError as exc:
        if exc.branch is None or len(exc.branch.points) < 2:
            raise
        print(f"warning: {exc}", file=sys.stderr)
        branch = exc.branch
        status = 1
    if opt["detect"] or opt["rungs"]:
        branch = detect_bifurcations(branch, stride=int(opt["stride"]))
    eio.save_branch(opt["out"], branch, comments=prov)
    n_folds = branch.metadata.get("fold_count", 0)
    print(f"{len(branch.points)} points, {n_folds} folds, "
          f"stopped: {branch.metadata.get('stop_reason')}")
    for i in branch.events():
        pt = branch.points[i]
        print(f"  {pt.event.value:9s} r={pt.r:+.6f} norm={pt.l2norm:.4f}")

    if opt["profiles_dir"]:
        os.makedirs(opt["profiles_dir"], exist_ok=True)
        for j, i in enumerate(branch.fold_indices):
            pt = branch.points[i]
            dest = os.path.join(opt["profiles_dir"],
                                f"{branch.label}_fold{j}.csv")
            eio.save_profile(dest, pt.state.u, p.with_r(pt.r),
                             c=pt.state.c, comments=prov)
    if opt["rungs"]:
        status = max(status, _emit_rungs(branch, opt["out"], prov))
    if opt["final_profile"]:
        last = branch.points[-1]
        eio.save_profile(opt["final_profile"], last.state.u,
                         p.with_r(last.r), c=last.state.c, comments=prov)
    return status


def _emit_rungs(branch, out_path: str, prov) -> int:
    stem, ext = os.path.splitext(out_path)
    pitchforks = [i for i in branch.events()
                  if branch.points[i].event is EventType.PITCHFORK]
    if not pitchforks:
        print("no symmetry-breaking events found; no rungs to follow")
        return 0
    status = 0
    for j, ev in enumerate(pitchforks):
        for sign, tag in ((1, "p"), (-1, "m")):
            try:
                rung = continue_rung(branch, ev, sign=sign)
            except (EshError, InvalidSeed) as exc:
                print(f"warning: rung {j}{tag} failed: {exc}",
                      file=sys.stderr)
                status = 1
                continue
            dest = f"{stem}_rung{j}{tag}{ext or '.csv'}"
            eio.save_branch(dest, rung, comments=prov)
            cs = np.abs(rung.cs)
            print(f"  rung {j}{tag}: {len(rung.points)} points, "
                  f"max |c|={cs.max():.3e}, end |c|={cs[-1]:.3e} -> {dest}")
    return status


# --------------------------------------------------------------------------
# stability


def _cmd_stability(args: argparse.Namespace) -> int:
    opt = _merged(args, {"profile": None, "n_eigs": 64, "out": None,
                         "modes": 0, "modes_prefix": None})
    path = _require(opt, "profile", "stability")
    prov = _provenance("stability", opt)
    field, p, c = eio.load_profile(path)
    if c == 0.0:
        state = newton_stationary(field, p)
    else:
        state = newton_travelling(field, c, field, p)
    spec = compute_spectrum(state, p, n_eigs=int(opt["n_eigs"]))
    m_r, m_c, n_r, n_c = spec.counts
    print(f"unstable counts: symmetric real={m_r} symmetric complex={m_c} "
          f"antisymmetric real={n_r} antisymmetric complex={n_c}")
    print(f"rightmost eigenvalue: {spec.rightmost:+.6e}")
    if opt["out"]:
        eio.save_spectrum(opt["out"], spec, comments=prov)
    n_modes = int(opt["modes"])
    if n_modes > 0:
        prefix = opt["modes_prefix"] or "mode"
        kept = len(spec.parities)
        for j in range(min(n_modes, kept)):
            vec = spec.eigenfunctions[j]
            eio.save_profile(f"{prefix}_mode{j}_re.csv",
                             field.with_values(vec.real), p, c=state.c,
                             comments=prov)
            if np.max(np.abs(vec.imag)) > 0.0:
                eio.save_profile(f"{prefix}_mode{j}_im.csv",
                                 field.with_values(vec.imag), p, c=state.c,
                                 comments=prov)
    return 0


# --------------------------------------------------------------------------
# evolve


def _cmd_evolve(args: argparse.Namespace) -> int:
    opt = _merged(args, {
        "profile": None, "t_end": 10.0, "dt": 0.1, "scheme": "etdrk4",
        "stride": 10, "out": None, "final_profile": None,
        "spacetime_out": None, "dt_study": False,
    })
    path = _require(opt, "profile", "evolve")
    prov = _provenance("evolve", opt)
    field, p, _ = eio.load_profile(path)
    scheme = Scheme(opt["scheme"])
    if opt["dt_study"]:
        return _dt_study(field, p, scheme, float(opt["t_end"]),
                         float(opt["dt"]))
    cfg = EvolveConfig(dt=float(opt["dt"]), t_end=float(opt["t_end"]),
                       scheme=scheme, record_stride=int(opt["stride"]))
    traj = run(field, p, cfg)
    if traj.blowup_time is not None:
        print(f"solution lost finiteness near t={traj.blowup_time:.3f}")
        if opt["out"]:
            eio.save_monitors(opt["out"], traj, comments=prov)
        return 1
    norm = traj.monitors["norm"][-1]
    print(f"reached t={traj.monitor_times[-1]:.3f}, norm={norm:.6f}")
    if opt["out"]:
        eio.save_monitors(opt["out"], traj, comments=prov)
    if opt["spacetime_out"]:
        eio.save_spacetime(opt["spacetime_out"], traj, comments=prov)
    if opt["final_profile"]:
        eio.save_profile(opt["final_profile"], traj.final_state, p,
                         comments=prov)
    return 0


def _dt_study(field, p, scheme: Scheme, t_end: float, dt0: float) -> int:
    """Self-convergence of the time stepper against a dt0/32 reference,
    printing the observed order between successive halvings."""
    from .campaigns import scheme_order_study

    study = scheme_order_study(field, p, scheme, t_end=t_end, dt0=dt0)
    for dt, err in zip(study.dts, study.errors):
        print(f"dt={dt:<10.5g} err={err:.6e}")
    for dt, order in zip(study.dts[1:], study.orders):
        print(f"order at dt={dt:<10.5g} {order:.3f}")
    print(f"least-squares order: {study.ls_order:.3f}")
    return 0


# --------------------------------------------------------------------------
# wavenumber / maxwell


def _cmd_wavenumber(args: argparse.Namespace) -> int:
    opt = _merged(args, {"profile": None})
    path = _require(opt, "profile", "wavenumber")
    field, _, _ = eio.load_profile(path)
    k = interior_wavenumber(field)
    if k is None:
        print("no interior pattern")
    else:
        print(f"{k:.8f}")
    return 0


def _cmd_maxwell(args: argparse.Namespace) -> int:
    opt = _merged(args, {"b": 1.8, "r_hi": -0.15, "r_lo": -0.42})
    mp = maxwell_study(ModelParams(r=float(opt["r_hi"]), b=float(opt["b"])),
                       r_hi=float(opt["r_hi"]), r_lo=float(opt["r_lo"]))
    print(f"r={mp.r:.8f}  k={mp.k:.8f}")
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="esh",
        description="localized patterns in an extended pattern-forming "
                    "model: continuation, stability, time stepping")
    ap.add_argument("--version", action="version",
                    version=f"esh {__version__}")
    subs = ap.add_subparsers(dest="command", required=True)

    s = subs.add_parser("nf", help="amplitude-equation coefficients")
    s.add_argument("--b", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--json", action="store_true", default=None)
    s.add_argument("--surface", action="store_true", default=None,
                   help="sweep the cubic coefficient along a plane slice")
    s.add_argument("--slice", choices=("beta=0", "variational"))
    s.add_argument("--alpha-range", dest="alpha_range",
                   help="sweep bounds lo:hi")
    s.add_argument("--samples", type=int)
    s.add_argument("--out")
    _add_common(s)
    s.set_defaults(func=_cmd_nf)

    s = subs.add_parser("continue", help="trace a branch from a localized seed")
    s.add_argument("--r", type=float)
    s.add_argument("--b", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--length", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--branch", choices=("L0", "L1"),
                   help="seed phase: L0 peak-centered, L1 trough-centered")
    s.add_argument("--phi", type=float)
    s.add_argument("--resume", help="seed from a saved profile")
    s.add_argument("--direction", type=int, choices=(-1, 1))
    s.add_argument("--folds", "--max-folds", dest="folds", type=int,
                   help="stop after this many folds (0 = unlimited)")
    s.add_argument("--ds0", type=float)
    s.add_argument("--ds-max", dest="ds_max", type=float)
    s.add_argument("--max-points", dest="max_points", type=int)
    s.add_argument("--detect", action="store_true", default=None,
                   help="annotate with spectra and secondary bifurcations")
    s.add_argument("--stride", type=int)
    s.add_argument("--rungs", action="store_true", default=None,
                   help="follow drifting branches from symmetry-breaking "
                        "events (implies --detect)")
    s.add_argument("--out")
    s.add_argument("--profiles-dir", dest="profiles_dir",
                   help="directory for fold profile snapshots")
    s.add_argument("--final-profile", dest="final_profile")
    _add_common(s)
    s.set_defaults(func=_cmd_continue)

    s = subs.add_parser("stability", help="spectrum of a saved profile")
    s.add_argument("--profile")
    s.add_argument("--n-eigs", dest="n_eigs", type=int)
    s.add_argument("--out")
    s.add_argument("--modes", type=int,
                   help="save this many leading eigenfunctions")
    s.add_argument("--modes-prefix", dest="modes_prefix")
    _add_common(s)
    s.set_defaults(func=_cmd_stability)

    s = subs.add_parser("evolve", help="time-integrate a saved profile")
    s.add_argument("--profile")
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--scheme", choices=[sch.value for sch in Scheme])
    s.add_argument("--stride", type=int)
    s.add_argument("--dt-study", dest="dt_study", action="store_true",
                   default=None,
                   help="report temporal self-convergence orders")
    s.add_argument("--out")
    s.add_argument("--spacetime-out", dest="spacetime_out")
    s.add_argument("--final-profile", dest="final_profile")
    _add_common(s)
    s.set_defaults(func=_cmd_evolve)

    s = subs.add_parser("wavenumber",
                        help="interior wavenumber of a saved profile")
    s.add_argument("--profile")
    _add_common(s)
    s.set_defaults(func=_cmd_wavenumber)

    s = subs.add_parser("maxwell",
                        help="pattern/flat energy balance parameter")
    s.add_argument("--b", type=float)
    s.add_argument("--r-hi", dest="r_hi", type=float)
    s.add_argument("--r-lo", dest="r_lo", type=float)
    _add_common(s)
    s.set_defaults(func=_cmd_maxwell)

    return ap


def _merge_range_values(argv: Sequence[str]) -> list:
    """Join range flags with their value so leading minus signs survive
    argparse (e.g. --alpha-range -2:20)."""
    out, i = [], 0
    argv = list(argv)
    while i < len(argv):
        tok = argv[i]
        if tok == "--alpha-range" and i + 1 < len(argv):
            out.append(tok + "=" + argv[i + 1])
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = ap.parse_args(_merge_range_values(argv))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except EshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
