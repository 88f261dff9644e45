"""Command line entry point: ``slitwave {single,double,visibility,converge,compare} CONFIG``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (NoFringeError, QuadratureError, compare_to_experiment,
                       convergence_study, fit_coherence_degree, local_extrema,
                       read_trace_csv, visibility)
from .config import DEFAULT_LADDER, ConfigError, RunConfig, parse_config
from .diffraction import (intensity_double, intensity_single, slit_amplitudes)
from .output import profile_csv, profile_svg, report_json, write_files

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_IO = 0, 2, 3, 4

SUBCOMMANDS = ("single", "double", "visibility", "converge", "compare")


def _derived(cfg: RunConfig) -> dict:
    beam = cfg.beam_params()
    out = {"k_per_m": beam.k, "wavelength_m": beam.wavelength, "energy_J": beam.energy}
    coh = cfg.coherence_params()
    if coh is not None:
        out["coherence"] = {"c1": coh.c1, "c2": coh.c2, "lambda_t": coh.lambda_t,
                            "alpha_overlap": coh.alpha_overlap}
    if cfg.is_double:
        out["center_distance_m"] = cfg.slit_geometry().center_distance
    return out


def _shape_metrics(profile) -> dict:
    s, v = profile.s, profile.intensity
    maxima, minima = local_extrema(v)
    i = int(np.argmax(v))
    return {"center_s_m": float(s[i]), "i_max": float(v[i]),
            "maxima_s_m": [float(x) for x in s[maxima]],
            "minima_s_m": [float(x) for x in s[minima]]}


def _fringe_dict(rep) -> dict:
    return {"i_max": rep.i_max, "i_min": rep.i_min, "visibility": rep.visibility,
            "s_max_m": rep.s_max, "s_min_m": rep.s_min_loc, "minimum_choice": rep.side}


def _profile(cfg: RunConfig, sub: str, threads):
    geometry = cfg.slit_geometry()
    args = (cfg.detector_scan(), geometry, cfg.beam_params())
    if sub == "single" or not geometry.is_double:
        if sub == "double":
            raise ConfigError("double needs geometry.a2_m and geometry.d_m", "geometry")
        return intensity_single(*args, cfg.truncation_params(), threads)
    coh = cfg.coherence_params()
    if coh is None:
        raise ConfigError("a double-slit run needs the coherence section", "coherence")
    return intensity_double(*args, coh, cfg.truncation_params(), threads)


def _trace(cfg: RunConfig, override, base: Path):
    exp = cfg.experiment
    path = override or (exp.trace_csv if exp else None)
    if path is None:
        raise ConfigError("compare needs experiment.trace_csv or --trace", "experiment.trace_csv")
    p = Path(path)
    if not override and not p.is_absolute():
        p = base / p
    text = p.read_text(encoding="utf-8")
    try:
        return read_trace_csv(text, shift=exp.shift_m if exp else 0.0,
                              background=exp.background if exp else 0.0)
    except ValueError as exc:
        raise ConfigError(f"trace {p}: {exc}", "experiment.trace_csv") from None


def run(sub: str, cfg: RunConfig, base: Path = Path("."), threads=None, trace_path=None):
    """Compute one subcommand; returns ``(profile, metrics, trace)``."""
    trace = None
    if sub in ("single", "double", "visibility"):
        profile = _profile(cfg, sub, threads)
        metrics = _shape_metrics(profile)
        if sub == "visibility":
            metrics["fringe"] = _fringe_dict(visibility(profile))
        elif sub == "double":
            try:
                metrics["fringe"] = _fringe_dict(visibility(profile))
            except NoFringeError:
                metrics["fringe"] = None
    elif sub == "converge":
        ladder = cfg.truncation.ladder or DEFAULT_LADDER
        coh = cfg.coherence_params() if cfg.is_double else None
        if cfg.is_double and coh is None:
            raise ConfigError("a double-slit run needs the coherence section", "coherence")
        rep = convergence_study(cfg.detector_scan(), cfg.slit_geometry(), cfg.beam_params(),
                                coh, ladder, cfg.truncation.tail_tolerance, threads)
        profile = rep.final_profile
        metrics = _shape_metrics(profile)
        metrics["convergence"] = {"ladder": [list(x) for x in rep.ladder],
                                  "changes": rep.changes, "raw_changes": rep.raw_changes,
                                  "converged": rep.converged,
                                  "tail_tolerance": rep.tail_tolerance, "metric": rep.metric}
    elif sub == "compare":
        trace = _trace(cfg, trace_path, base)
        profile = _profile(cfg, "compare", threads)
        exp = cfg.experiment
        opts = {} if exp is None else {"fit_scale": exp.fit_scale, "fit_shift": exp.fit_shift,
                                       "shift_window": tuple(exp.shift_window_m),
                                       "shift_step": exp.shift_step_m}
        cmp = compare_to_experiment(profile, trace, **opts)
        metrics = _shape_metrics(profile)
        metrics["comparison"] = {"scale": cmp.scale, "shift_m": cmp.shift, "sse": cmp.sse,
                                 "n_points": cmp.n_points,
                                 "residuals": [float(r) for r in cmp.residuals]}
        try:
            metrics["trace_visibility"] = _fringe_dict(visibility(trace))
        except (NoFringeError, ValueError):
            metrics["trace_visibility"] = None
        coh = cfg.coherence_params()
        if cfg.is_double and coh is not None:
            psi1, psi2 = slit_amplitudes(profile.s, cfg.slit_geometry(), cfg.beam_params(),
                                         cfg.detector_scan(), cfg.truncation_params(), threads)
            fit = fit_coherence_degree(profile.s, psi1, psi2, coh, trace)
            metrics["lambda_t_fit"] = {"lambda_t": fit.lambda_t, "scale": fit.scale,
                                       "sse": fit.sse}
    else:
        raise ConfigError(f"unknown subcommand {sub!r}")
    return profile, metrics, trace


def _fail(code: int, kind: str, message: str, field=None) -> int:
    err = {"status": "error", "error": kind, "exit_code": code, "message": message}
    if field:
        err["field"] = field
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slitwave",
                                description="Neutron single/double-slit diffraction model.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("config", help="JSON run configuration")
    p.add_argument("--csv", help="profile CSV path (overrides outputs.csv)")
    p.add_argument("--svg", help="SVG plot path (overrides outputs.svg)")
    p.add_argument("--report", help="JSON report path (overrides outputs.report)")
    p.add_argument("--trace", help="measured trace CSV for compare")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads over detector points (default: all cores)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg_path = Path(args.config)
    try:
        text = cfg_path.read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(EXIT_IO, "io_error", f"cannot read config: {exc}")
    if args.threads is not None and args.threads < 1:
        return _fail(EXIT_CONFIG, "config_error", "--threads must be >= 1", "threads")
    try:
        cfg = parse_config(text)
        base = cfg_path.parent
        profile, metrics, trace = run(args.subcommand, cfg, base, args.threads, args.trace)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config_error", str(exc), exc.field)
    except NoFringeError as exc:
        return _fail(EXIT_COMPUTE, "no_fringe", str(exc))
    except (QuadratureError, ValueError, ArithmeticError) as exc:
        return _fail(EXIT_COMPUTE, "computation_error", str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, "io_error", str(exc))

    def target(flag, configured, suffix):
        if flag:
            return Path(flag)
        if configured:
            p = Path(configured)
            return p if p.is_absolute() else base / p
        return base / f"{cfg_path.stem}.{args.subcommand}{suffix}" if suffix else None

    csv_path = target(args.csv, cfg.outputs.csv, ".csv")
    report_path = target(args.report, cfg.outputs.report, ".json")
    svg_path = target(args.svg, cfg.outputs.svg, None)
    report = {"subcommand": args.subcommand, "version": __version__,
              "config": cfg.to_dict(), "derived": _derived(cfg), "metrics": metrics,
              "artifacts": {"csv": str(csv_path), "report": str(report_path),
                            "svg": str(svg_path) if svg_path else None}}
    files = {csv_path: profile_csv(profile), report_path: report_json(report)}
    if svg_path:
        files[svg_path] = profile_svg(profile, trace, title=f"slitwave {args.subcommand}")
    try:
        written = write_files(files)
    except OSError as exc:
        return _fail(EXIT_IO, "io_error", str(exc))
    print(json.dumps({"status": "ok", "artifacts": written}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
