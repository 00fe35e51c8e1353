"""Command-line entry point: ``nvdnp <command> ...``.

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.
Reports go to stdout (or ``--out``); warnings and errors go to stderr.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import io as nio
from .bootstrap import bootstrap_amplitude, enhancement_with_ci, scale_to_model
from .config import get_sample, load_config, load_samples
from .diffusion import DiffusionGrid, RadialGeometry, diffusion_buildup
from .dnp import (
    dnp_spectrum, enhanced_polarization, fit_buildup, recovery_correction_factor,
    recovery_time_for_factor, simulate_buildup, thermal_polarization,
)
from .ensemble import LineshapeParams, default_grid, synthesize_odmr
from .errors import CapacityError, InputError, NumericalError
from .plan import (
    PlanDefaults, compile_timeline, execute_plan, parse_plan, physics_for_sample, sweep_mw,
)
from .seeding import derive_seed
from .signal import (
    BiexpParams, echo_envelope, fit_biexponential, fit_scaling_factor, fit_t1_small_flip,
    moving_average, small_flip_series, synthesize_echo_train, synthesize_fid,
)
from .spin_model import FirstShellConfig, lines_for_shell

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


# --- helpers -----------------------------------------------------------------

def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _config(args):
    cfg = load_config(args.config)
    nv = cfg.nv
    if getattr(args, "field", None) is not None:
        nv = replace(nv, B=args.field)
    lineshape = cfg.lineshape
    if getattr(args, "fwhm", None) is not None or getattr(args, "profile", None):
        lineshape = LineshapeParams(args.profile or lineshape.profile,
                                    args.fwhm if args.fwhm is not None else lineshape.fwhm)
    span = args.span if getattr(args, "span", None) is not None else cfg.grid_span
    points = args.points if getattr(args, "points", None) is not None else cfg.grid_points
    return replace(cfg, nv=nv, lineshape=lineshape, grid_span=span, grid_points=points)


def _sample(args):
    return get_sample(args.sample, args.samples)


def _odmr(cfg, p, branch, on_coarse):
    grid = default_grid(cfg.nv, branch, cfg.grid_span, cfg.grid_points)
    return synthesize_odmr(p, cfg.nv, cfg.site_tensors, cfg.lineshape, grid, branch, on_coarse)


def _p_label(p):
    return f"{p:g}".replace(".", "p")


def _resolve_plan(name):
    path = Path(name)
    if path.is_file():
        return path.read_text(encoding="utf-8"), str(path)
    stem = path.name.removesuffix(".plan")
    packaged = resources.files("nvdnp").joinpath("plans").joinpath(stem + ".plan")
    if packaged.is_file():
        return packaged.read_text(encoding="utf-8"), f"packaged:{stem}"
    raise InputError(f"plan file not found: {name}")


def _sweep_freqs(spec):
    try:
        a, b, n = spec.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise InputError(f"--sweep expects START:STOP:N in GHz, got {spec!r}") from exc


def _antisymmetry_residual(spec, center):
    """max |S(f0 + d) + S(f0 - d)| / max |S| over offsets present in the grid."""
    f, s = spec.mw_frequencies, spec.signal
    peak = np.max(np.abs(s))
    if peak == 0:
        return 0.0
    d = f - center
    mirrored = np.interp(center - d, f, s, left=np.nan, right=np.nan)
    ok = np.isfinite(mirrored)
    return float(np.max(np.abs(s[ok] + mirrored[ok])) / peak)


def _verify_dnp(odmr, spec, tol):
    """Zero-integral check always; antisymmetry check when the ODMR input is
    mirror-symmetric about the grid center."""
    center = float(np.mean(odmr.frequencies[[0, -1]]))
    l_peak = np.max(np.abs(odmr.intensities))
    l_mirror = np.interp(2 * center - odmr.frequencies, odmr.frequencies, odmr.intensities)
    symmetric = l_peak == 0 or np.max(np.abs(odmr.intensities - l_mirror)) <= 1e-12 * l_peak
    scale = np.trapezoid(np.abs(spec.signal), spec.mw_frequencies)
    integral = np.trapezoid(spec.signal, spec.mw_frequencies)
    rel = abs(integral) / scale if scale > 0 else 0.0
    print(f"verify: relative integral {rel:.3e}", file=sys.stderr)
    if rel > 1e-4:
        raise NumericalError(f"DNP spectrum integral is not zero ({rel:.3e} of its L1 norm)")
    if symmetric:
        resid = _antisymmetry_residual(spec, center)
        print(f"verify: antisymmetry residual about {center!r} GHz: {resid:.3e}", file=sys.stderr)
        if resid > tol:
            raise NumericalError(f"antisymmetry check failed: {resid:.3e} > {tol:g}")
    else:
        print("verify: ODMR input is not mirror-symmetric; antisymmetry check skipped",
              file=sys.stderr)


# --- commands ------------------------------------------------------------------

def cmd_lines(args):
    cfg = _config(args)
    if not 0 <= args.k <= len(cfg.site_tensors):
        raise CapacityError(f"--k must be between 0 and {len(cfg.site_tensors)}, got {args.k}")
    sites = cfg.site_tensors[: args.k]
    lines = lines_for_shell(cfg.nv, FirstShellConfig(tuple(sites)), branches=tuple(args.branch))
    report = {
        "k": args.k, "B_T": cfg.nv.B,
        "lines": [{"frequency_GHz": ln.frequency, "amplitude": ln.amplitude,
                   "branch": ln.branch} for ln in lines],
    }
    _emit(nio.dumps_json(report), args.out)


def cmd_odmr(args):
    cfg = _config(args)
    if len(args.p) > 1 and args.out in (None, "-"):
        raise InputError("several --p values need --out DIR")
    for p in args.p:
        spec = _odmr(cfg, p, args.branch, args.on_coarse)
        if len(args.p) == 1:
            _emit(nio.write_spectrum(None, spec), args.out)
        else:
            nio.ensure_dir(args.out)
            nio.write_spectrum(Path(args.out) / f"odmr_p{_p_label(p)}.csv", spec)


def cmd_dnp_sweep(args):
    cfg = _config(args)
    if args.sample:
        sample = _sample(args)
        cfg = replace(cfg, nv=replace(cfg.nv, B=sample.B))
        p = sample.p
    elif args.p is not None:
        p = args.p
    else:
        raise InputError("give --sample or --p")
    odmr = _odmr(cfg, p, args.branch, args.on_coarse)
    nu_n = cfg.nv.nuclear_larmor_mhz if args.nu_n is None else args.nu_n
    spec = dnp_spectrum(odmr, nu_n, args.scale)
    if args.normalize:
        spec = spec.normalized()
    if args.sample:
        spec.metadata["sample"] = args.sample
    if args.verify:
        _verify_dnp(odmr, spec, args.verify_tol)
    _emit(nio.write_dnp(None, spec), args.out)


def cmd_fit(args):
    if args.kind == "buildup":
        curve = nio.read_buildup(args.input)
        fit = fit_buildup(curve, baseline=args.baseline)
        report = {"kind": "buildup", "input": str(args.input), **fit.as_dict()}
    elif args.kind == "echo":
        train = nio.read_echo_train(args.input)
        t, env = echo_envelope(train)
        y = env.real
        if args.window:
            y = moving_average(y, args.window, train.tau)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fit = fit_biexponential(y, t)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        report = {"kind": "echo", "input": str(args.input), "window_s": args.window,
                  **fit.as_dict(),
                  "T2_ms": [fit.T2_1 * 1e3, fit.T2_2 * 1e3],
                  "T2_ci_ms": [fit.T2_1_ci * 1e3, fit.T2_2_ci * 1e3]}
    elif args.kind == "t1":
        meta, _, a = nio.read_csv(args.input, ["time_s", "signal"])
        theta = args.theta_deg if args.theta_deg is not None else meta.get("theta_deg")
        if theta is None:
            raise InputError("flip angle unknown: pass --theta-deg")
        t = a[:, 0]
        tau = args.tau if args.tau is not None else float(t[1] - t[0]) if t.size > 1 else 0.0
        fit = fit_t1_small_flip(a[:, 1], np.deg2rad(theta), tau)
        report = {"kind": "t1", "input": str(args.input), "theta_deg": theta, "tau_s": tau,
                  **fit.as_dict()}
    else:  # fid scaling
        if not args.model:
            raise InputError("fit fid needs --model FILE")
        target = nio.read_fid(args.input)
        model = nio.read_fid(args.model)
        if target.samples.shape != model.samples.shape:
            raise InputError("target and model FIDs differ in length")
        fit = fit_scaling_factor(target, model, component=args.component)
        report = {"kind": "fid", "input": str(args.input), "model": str(args.model),
                  "component": args.component, "scale": fit.scale, "stderr": fit.stderr,
                  "ci_halfwidth": fit.ci_halfwidth, "dof": fit.dof}
    _emit(nio.dumps_json(report), args.out)


def cmd_bootstrap(args):
    store, manifest, model = nio.read_store(args.directory)
    if model is None:
        raise InputError(f"{args.directory}: manifest names no model FID")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = bootstrap_amplitude(store, scale_to_model(model, args.component), args.resamples,
                                  args.seed, args.workers, ci_method=args.ci_method)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    report = {"directory_blocks": len(store), "seed": args.seed, "thermal": res.as_dict()}
    hp = args.hp_amplitude if args.hp_amplitude is not None else manifest.get("hp_amplitude")
    corr = args.correction if args.correction is not None else manifest.get("correction_factor", 1.0)
    if hp is not None:
        enh = enhancement_with_ci(float(hp), res, float(corr), mode=args.mode)
        report["enhancement"] = {**enh.as_dict(), "hp_amplitude": float(hp),
                                 "correction_factor": float(corr)}
    _emit(nio.dumps_json(report), args.out)


def cmd_simulate(args):
    text, source = _resolve_plan(args.plan)
    cfg = _config(args)
    ast = parse_plan(text)
    timeline = compile_timeline(ast, PlanDefaults(saturation_spacing=cfg.saturation_spacing))
    sample = _sample(args)
    overrides = {}
    if args.noise is not None:
        overrides["noise_sigma"] = args.noise
    physics = physics_for_sample(sample, cfg, **overrides)
    out = nio.ensure_dir(args.out)
    if args.timeline:
        (out / "timeline.json").write_text(timeline.to_json(), encoding="utf-8")
    if args.sweep:
        freqs = physics.dnp.mw_frequencies if args.sweep == "grid" else _sweep_freqs(args.sweep)
        spec = sweep_mw(timeline, sample, physics, freqs, args.seed, args.workers)
        if not np.any(spec.signal):
            warnings.warn("sweep produced an all-zero signal (no acquisition after a pulse?)")
        spec = spec.normalized()
        spec.metadata.update({"plan": source, "seed": args.seed})
        nio.write_dnp(out / "dnp_sweep.csv", spec)
        manifest = {"format": "nvdnp-sim/1", "plan": source, "sample": sample.label,
                    "seed": args.seed, "sweep": "dnp_sweep.csv", "n_points": int(freqs.size)}
    else:
        acqs = execute_plan(timeline, sample, physics, args.seed)
        if not acqs:
            warnings.warn("plan has no acquire statement; nothing written")
        entries = []
        for a in acqs:
            name = f"acq_{a.index:04d}.csv"
            fid = replace(a.fid, metadata={"t_start_s": a.t_start, "amplitude": a.amplitude,
                                           "phase_deg": a.phase_deg})
            nio.write_fid(out / name, fid)
            entries.append({"index": a.index, "file": name, "t_start_s": a.t_start,
                            "amplitude": a.amplitude, "mw_frequency_GHz": a.mw_frequency,
                            "phase_deg": a.phase_deg})
        manifest = {"format": "nvdnp-sim/1", "plan": source, "sample": sample.label,
                    "seed": args.seed, "duration_s": timeline.duration, "acquisitions": entries}
    (out / "manifest.json").write_text(nio.dumps_json(manifest), encoding="utf-8")


def cmd_synth(args):
    seed = args.seed
    if args.kind == "buildup":
        T = args.t_dnp if args.t_dnp is not None else _sample(args).T_DNP
        t_end = args.t_end if args.t_end is not None else 5 * T
        times = np.linspace(0.0, t_end, args.n_points)
        curve = simulate_buildup(T, args.p_max, times, args.noise,
                                 derive_seed(seed, "synth", "buildup"))
        if args.noise > 0:
            curve.sigma = np.full(times.size, args.noise)
        curve.metadata.update({"T_DNP_s": T, "P_max": args.p_max, "noise": args.noise,
                               "seed": seed})
        _emit(nio.write_buildup(None, curve), args.out)
    elif args.kind == "echo":
        if args.t2 is not None:
            t2 = args.t2
        else:
            t2 = [v * 1e-3 for v in _sample(args).extra["T2_ms"]]
        params = BiexpParams(args.a1, t2[0], args.a2, t2[1])
        train = synthesize_echo_train(params, args.tau, args.n_echoes, args.points_per_echo,
                                      args.dwell, args.noise, derive_seed(seed, "synth", "echo"))
        train.metadata.update({"T2_s": list(t2), "A": [args.a1, args.a2], "seed": seed})
        _emit(nio.write_echo_train(None, train), args.out)
    elif args.kind == "t1":
        series = small_flip_series(args.amplitude, np.deg2rad(args.theta_deg), args.tau, args.t1,
                                   args.n_points, args.noise, derive_seed(seed, "synth", "t1"))
        t = args.tau * np.arange(args.n_points)
        meta = {"theta_deg": args.theta_deg, "T1_s": args.t1, "seed": seed}
        _emit(nio.write_csv(None, ["time_s", "signal"], zip(t, series), meta), args.out)
    else:  # store
        if args.out in (None, "-"):
            raise InputError("synth store needs --out DIR")
        cfg = load_config(args.config)
        dwell, n = cfg.fid_dwell, args.n_points
        model = synthesize_fid(1.0, cfg.fid_t2star, n_points=n, dwell=dwell).samples
        blocks = [
            synthesize_fid(args.amplitude, cfg.fid_t2star, noise_sigma=args.noise,
                           seed=derive_seed(seed, "synth", "store", i), n_points=n,
                           dwell=dwell).samples
            for i in range(args.blocks)
        ]
        extra = {"seed": seed, "true_amplitude": args.amplitude, "noise_sigma": args.noise}
        if args.hp_amplitude is not None:
            extra["hp_amplitude"] = args.hp_amplitude
        if args.correction is not None:
            extra["correction_factor"] = args.correction
        nio.write_store(args.out, blocks, dwell, model, extra=extra)


def cmd_table1(args):
    cfg = load_config(args.config)
    temperature = args.temperature if args.temperature is not None else cfg.temperature
    rows = []
    for label, s in sorted(load_samples(args.samples).items()):
        p_th = thermal_polarization(s.B, temperature, cfg.nv.gamma_n, args.convention)
        p_enh = 100 * enhanced_polarization(s.enhancement, p_th)
        printed = s.extra.get("P_enh_percent_printed")
        row = {"label": label, "p": s.p, "T_DNP_s": s.T_DNP, "T1n_s": s.T1n,
               "enhancement": s.enhancement, "P_thermal": p_th, "P_enh_percent": p_enh,
               "P_enh_percent_printed": printed}
        if printed is not None:
            decimals = len(printed.split(".")[1]) if "." in printed else 0
            row["within_last_digit"] = bool(abs(p_enh - float(printed)) <= 10.0 ** -decimals
                                            + 1e-12)
        factor = s.extra.get("thermal_correction_factor")
        if factor is not None:
            t_rec = recovery_time_for_factor(factor, s.T1n)
            row["correction_factor"] = factor
            row["t_rec_s"] = t_rec
            row["t_rec_over_T1n"] = t_rec / s.T1n
            row["correction_roundtrip"] = recovery_correction_factor(t_rec, s.T1n)
        rows.append(row)
    report = {"temperature_K": temperature, "convention": args.convention, "B_T": cfg.nv.B,
              "rows": rows}
    _emit(nio.dumps_json(report), args.out)


def cmd_diffusion(args):
    geometry = RadialGeometry(args.r_inner, args.r_outer, args.source_width)
    grid = DiffusionGrid(args.cells, args.dt, args.t_end, args.scheme)
    rows = []
    for D in args.d_sd:
        curve = diffusion_buildup(D, args.t1, geometry, grid, args.source_rate)
        row = {"D_sd_nm2_per_s": D, "final_bulk": float(curve.polarization[-1])}
        if np.ptp(curve.polarization) > 0:
            fit = fit_buildup(curve, baseline="free")
            row.update({"T_eff_s": fit.T_DNP, "T_eff_ci_s": fit.T_DNP_ci})
        rows.append(row)
        if args.curves:
            nio.ensure_dir(args.curves)
            nio.write_buildup(Path(args.curves) / f"diffusion_D{_p_label(D)}.csv", curve)
    _emit(nio.dumps_json({"T1n_s": args.t1, "scheme": args.scheme, "rows": rows}), args.out)


# --- parser ------------------------------------------------------------------

def _add_physics(p):
    p.add_argument("--config", help="physics configuration JSON (default: packaged)")
    p.add_argument("--field", type=float, help="field magnitude in T")
    p.add_argument("--fwhm", type=float, help="line width in MHz")
    p.add_argument("--profile", choices=("lorentzian", "gaussian"))
    p.add_argument("--span", type=float, help="grid span in GHz")
    p.add_argument("--points", type=int, help="grid points")


def _add_samples(p, required=False):
    p.add_argument("--sample", required=required, help="sample label, e.g. D1")
    p.add_argument("--samples", help="sample registry JSON (default: packaged)")


def build_parser():
    ap = argparse.ArgumentParser(prog="nvdnp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lines", help="transition lines for k occupied first-shell sites")
    _add_physics(p)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--branch", nargs="+", default=["+1", "-1"], choices=("+1", "-1"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_lines)

    p = sub.add_parser("odmr", help="composite ODMR spectrum vs enrichment")
    _add_physics(p)
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.add_argument("--branch", default="+1", choices=("+1", "-1"))
    p.add_argument("--on-coarse", default="error", choices=("error", "warn", "ignore"))
    p.add_argument("--out", help="CSV path, or a directory when several --p are given")
    p.set_defaults(func=cmd_odmr)

    p = sub.add_parser("dnp-sweep", help="DNP spectrum from the ODMR lineshape")
    _add_physics(p)
    _add_samples(p)
    p.add_argument("--p", type=float)
    p.add_argument("--branch", default="+1", choices=("+1", "-1"))
    p.add_argument("--nu-n", type=float, help="nuclear Larmor frequency in MHz (default from B)")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--normalize", action="store_true", help="scale to max |signal| = 1")
    p.add_argument("--verify", action="store_true", help="check antisymmetry about the center")
    p.add_argument("--verify-tol", type=float, default=1e-9)
    p.add_argument("--on-coarse", default="error", choices=("error", "warn", "ignore"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_dnp_sweep)

    p = sub.add_parser("fit", help="fit buildup, echo, small-flip T1 or FID scale data")
    p.add_argument("kind", choices=("buildup", "echo", "t1", "fid"))
    p.add_argument("input")
    p.add_argument("--baseline", default="fixed", choices=("fixed", "free"))
    p.add_argument("--window", type=float, help="moving-average window in s (echo)")
    p.add_argument("--theta-deg", type=float)
    p.add_argument("--tau", type=float, help="pulse spacing in s (t1)")
    p.add_argument("--model", help="model FID CSV (fid)")
    p.add_argument("--component", default="real", choices=("real", "complex"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bootstrap", help="bootstrap thermal amplitude and enhancement")
    p.add_argument("directory")
    p.add_argument("--resamples", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--mode", default="auto", choices=("auto", "symmetric", "asymmetric"))
    p.add_argument("--ci-method", default="normal", choices=("normal", "percentile"))
    p.add_argument("--component", default="real", choices=("real", "complex"))
    p.add_argument("--hp-amplitude", type=float)
    p.add_argument("--correction", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("simulate", help="run a plan file against the forward model")
    _add_physics(p)
    _add_samples(p, required=True)
    p.add_argument("plan", help="plan path or packaged plan name (cw_dnp, thermal, ...)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sweep", help="START:STOP:N in GHz, or 'grid' for the sample's DNP grid")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--noise", type=float, help="FID noise sigma per quadrature")
    p.add_argument("--timeline", action="store_true", help="also write timeline.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synth", help="synthesize input data for the fitters")
    p.add_argument("kind", choices=("buildup", "echo", "t1", "store"))
    _add_samples(p)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--t-dnp", type=float)
    p.add_argument("--p-max", type=float, default=1.0)
    p.add_argument("--t-end", type=float)
    p.add_argument("--n-points", type=int, default=50)
    p.add_argument("--t2", type=float, nargs=2, help="T2_1 T2_2 in s")
    p.add_argument("--a1", type=float, default=0.5)
    p.add_argument("--a2", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=40e-6)
    p.add_argument("--n-echoes", type=int, default=500)
    p.add_argument("--points-per-echo", type=int, default=32)
    p.add_argument("--dwell", type=float, default=0.5e-6)
    p.add_argument("--theta-deg", type=float, default=10.12)
    p.add_argument("--t1", type=float, default=13.08)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--blocks", type=int, default=64)
    p.add_argument("--hp-amplitude", type=float)
    p.add_argument("--correction", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("table1", help="enhancement to absolute polarization per sample")
    _add_samples(p)
    p.add_argument("--config")
    p.add_argument("--temperature", type=float)
    p.add_argument("--convention", default="high_temperature_no_half",
                   choices=("high_temperature_no_half", "tanh_half"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("diffusion", help="radial spin-diffusion buildup vs D_sd")
    p.add_argument("--d-sd", type=float, nargs="+", default=[0.25, 1.0, 4.0, 16.0])
    p.add_argument("--t1", type=float, default=300.0)
    p.add_argument("--r-inner", type=float, default=1.0)
    p.add_argument("--r-outer", type=float, default=10.0)
    p.add_argument("--source-width", type=float, default=0.5)
    p.add_argument("--source-rate", type=float, default=1.0)
    p.add_argument("--cells", type=int, default=90)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--t-end", type=float, default=600.0)
    p.add_argument("--scheme", default="implicit", choices=("implicit", "explicit"))
    p.add_argument("--curves", help="directory for per-D buildup CSVs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diffusion)
    return ap


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    previous = warnings.showwarning
    warnings.showwarning = _show_warning
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(f"diagnostics: {nio.dumps_json(diag).strip()}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        return EXIT_OK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        warnings.showwarning = previous
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
