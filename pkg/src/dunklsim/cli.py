"""Command-line front end.

    dunklsim run <config.json>       execute the configured experiment
    dunklsim describe <config.json>  print derived quantities and warnings
    dunklsim validate <config.json>  check axioms and model assumptions

Outputs land in the run's output directory: one CSV per experiment (17
significant digits), summary.json with the headline numbers, and
manifest.json listing every file written.  Files are written atomically
(temp file + rename).

Exit codes: 0 success, 1 unwritable output, 2 invalid config or failed
validation, 3 solver failure.

The output directory comes from --output-dir if given, else the
DUNKLSIM_OUTPUT_DIR environment variable, else the config's run block.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .brownian import TimeGrid, batch_increments
from .config import ExperimentConfig, _cir_constants, load_config
from .errors import ConfigError, DunklSimError, FitError, SolverError
from .mc import (RATE_THRESHOLD, chamber_exit, cir_mean_check, fit_order,
                 increment_scaling, negative_moments, strong_error)
from .model import lipschitz_scale, moment_threshold, validate_assumptions
from .roots import validate_axioms
from .scheme import run_batch, truncation_level


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(out_dir: str, name: str, header: tuple[str, ...], rows) -> int:
    lines = [",".join(header)]
    count = 0
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
        count += 1
    _atomic_write(os.path.join(out_dir, name), "\n".join(lines) + "\n")
    return count


def _write_json(out_dir: str, name: str, obj) -> None:
    _atomic_write(os.path.join(out_dir, name),
                  json.dumps(obj, indent=2, default=_jsonable) + "\n")


def _try_fit(curve):
    try:
        f = fit_order(curve)
        return {"slope": f.slope, "intercept": f.intercept,
                "half_width": f.half_width}
    except FitError:
        return None


def _run_experiment(cfg: ExperimentConfig, out_dir: str,
                    threads: int) -> tuple[dict, list[tuple[str, int]], bool]:
    """Execute cfg's experiment; returns (results, files-with-row-counts, ok)."""
    m = cfg.model
    s = cfg.scheme
    seed = cfg.master_seed
    files: list[tuple[str, int]] = []
    ok = True

    if cfg.kind == "simulate":
        sch = s.resolve(cfg.n)
        inc = batch_increments(m.brownian_dim, cfg.n, m.T, seed,
                               np.arange(cfg.M))
        res = run_batch(m, sch, inc, record_flags=True)
        times = TimeGrid(cfg.n, m.T).times

        def rows():
            for pid in range(cfg.M):
                for step in range(cfg.n + 1):
                    yield (pid, step, times[step], *res.states[pid, step],
                           res.in_chamber[pid, step])

        header = ("path_id", "step", "t",
                  *(f"x_{i}" for i in range(m.dim)), "in_chamber")
        files.append(("paths.csv", _write_csv(out_dir, "paths.csv", header, rows())))
        results = {"exited_paths": int(res.exited.sum()),
                   "M": cfg.M, "n": cfg.n}

    elif cfg.kind == "convergence":
        curve = strong_error(m, s.theta, cfg.n_list, cfg.n_ref, cfg.M, seed,
                             variant=s.variant, c=s.c,
                             solver_tol=s.solver_tol, threads=threads)
        rows = [(n, e, se, curve.M, curve.n_ref)
                for n, e, se in zip(curve.n_values, curve.rms_errors,
                                    curve.std_errors)]
        files.append(("convergence.csv",
                      _write_csv(out_dir, "convergence.csv",
                                 ("n", "rms_sup_error", "std_error", "M", "n_ref"),
                                 rows)))
        results = {"fit": _try_fit(curve), "variant": curve.variant,
                   "M": curve.M, "n_ref": curve.n_ref}

    elif cfg.kind == "moments":
        rep = negative_moments(m, cfg.params["p"], s.theta, cfg.n, cfg.M, seed,
                               pathwise_sup=cfg.params["pathwise_sup"],
                               solver_tol=s.solver_tol, threads=threads)

        def rows():
            for ri in range(rep.estimates.shape[0]):
                for j, t in enumerate(rep.times):
                    yield (ri, t, rep.p, rep.estimates[ri, j], rep.std_errors[ri, j])

        files.append(("moments.csv",
                      _write_csv(out_dir, "moments.csv",
                                 ("root_index", "t", "p", "estimate", "std_error"),
                                 rows())))
        results = {"p": rep.p, "max_estimate": rep.max_estimate, "M": rep.M}
        if rep.sup_estimates is not None:
            results["sup_estimates"] = rep.sup_estimates
            results["sup_std_errors"] = rep.sup_std_errors

    elif cfg.kind == "increments":
        rep = increment_scaling(m, s.theta, cfg.n, cfg.M, cfg.params["lags"],
                                seed, solver_tol=s.solver_tol, threads=threads)
        rows = [(lag, e, se) for lag, e, se in
                zip(rep.lags, rep.estimates, rep.std_errors)]
        files.append(("increments.csv",
                      _write_csv(out_dir, "increments.csv",
                                 ("lag", "mean_square_increment", "std_error"),
                                 rows)))
        results = {"slope": rep.slope, "M": rep.M, "n": rep.n}

    elif cfg.kind == "chamber-exit":
        rep = chamber_exit(m, s.theta, s.c, cfg.n_list, cfg.M, seed,
                           variant=s.variant, solver_tol=s.solver_tol,
                           threads=threads)
        rows = [(n, f, lo, hi) for n, f, lo, hi in
                zip(rep.n_values, rep.fractions, rep.ci_low, rep.ci_high)]
        files.append(("exit.csv",
                      _write_csv(out_dir, "exit.csv",
                                 ("n", "exit_fraction", "ci_low", "ci_high"),
                                 rows)))
        results = {"counts": list(rep.counts), "decay_slope": rep.decay_slope,
                   "M": rep.M}

    elif cfg.kind == "cir-check":
        k0, sigma0, lam0, xi0, T = _cir_constants(m)
        rep = cir_mean_check(k0, sigma0, lam0, xi0, T, s.theta, cfg.n, cfg.M,
                             seed, solver_tol=s.solver_tol, threads=threads)
        files.append(("cir.csv",
                      _write_csv(out_dir, "cir.csv",
                                 ("mc_mean", "std_error", "ode_mean", "z_score",
                                  "n", "M"),
                                 [(rep.mc_mean, rep.std_error, rep.ode_mean,
                                   rep.z_score, rep.n, rep.M)])))
        results = {"mc_mean": rep.mc_mean, "std_error": rep.std_error,
                   "ode_mean": rep.ode_mean, "z_score": rep.z_score}

    elif cfg.kind == "validate":
        ax = validate_axioms(m.rs)
        rep = validate_assumptions(m, sample_count=cfg.params["samples"],
                                   tol=cfg.params["tol"])
        results = _validation_dict(ax, rep)
        ok = ax.passed and rep.all_ok()

    else:  # pragma: no cover - kinds are closed by the config parser
        raise ConfigError([f"unhandled experiment kind {cfg.kind!r}"])

    return results, files, ok


def _validation_dict(ax, rep) -> dict:
    def cr(c):
        return {"status": c.status, "worst": c.worst, "samples": c.samples,
                "detail": c.detail}

    return {
        "axioms": {
            "passed": ax.passed,
            "no_parallel_pass": ax.no_parallel_pass,
            "reflection_pass": ax.reflection_pass,
            "worst_reflection_residual": ax.worst_reflection_residual,
        },
        "assumptions": {
            "drift_regular": cr(rep.drift_regular),
            "sigma_regular": cr(rep.sigma_regular),
            "strength_dominates_noise": cr(rep.strength_dominates_noise),
            "drift_alignment": cr(rep.drift_alignment),
            "pairing_identity": cr(rep.pairing_identity),
            "alignment_bound": rep.alignment_bound,
        },
        "passed": ax.passed and rep.all_ok(),
    }


def _resolve_output_dir(cfg: ExperimentConfig, flag: str | None) -> str:
    if flag:
        return flag
    env = os.environ.get("DUNKLSIM_OUTPUT_DIR")
    if env:
        return env
    return cfg.output_dir


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out_dir = _resolve_output_dir(cfg, args.output_dir)
    threads = args.threads if args.threads is not None else cfg.threads

    os.makedirs(out_dir, exist_ok=True)
    probe = os.path.join(out_dir, ".write-probe")
    with open(probe, "w") as fh:
        fh.write("")
    os.remove(probe)

    started = datetime.now(timezone.utc).isoformat()
    results, files, ok = _run_experiment(cfg, out_dir, threads)

    summary = {"kind": cfg.kind, "master_seed": cfg.master_seed,
               "results": results, "config": cfg.raw}
    _write_json(out_dir, "summary.json", summary)
    manifest = {
        "tool": "dunklsim",
        "version": __version__,
        "kind": cfg.kind,
        "master_seed": cfg.master_seed,
        "started_at": started,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "config": cfg.raw,
        "outputs": [{"path": name, "rows": rows} for name, rows in files]
                   + [{"path": "summary.json", "rows": None}],
    }
    _write_json(out_dir, "manifest.json", manifest)

    for name, rows in files:
        print(f"wrote {os.path.join(out_dir, name)} ({rows} rows)")
    print(f"wrote {os.path.join(out_dir, 'summary.json')}")
    print(f"wrote {os.path.join(out_dir, 'manifest.json')}")
    if not ok:
        print("validation failed; see summary.json", file=sys.stderr)
        return 2
    return 0


def cmd_describe(args) -> int:
    cfg = load_config(args.config)
    m = cfg.model
    s = cfg.scheme
    L = lipschitz_scale(m)
    p_star = moment_threshold(m)
    sigma_sup = m.sigma.bar_sup(m.T)

    print(f"root system        : dimension {m.dim}, {m.rs.n_roots} positive "
          f"roots in {m.rs.n_orbits} orbit(s)")
    print(f"horizon            : T = {m.T:g}")
    print(f"start point        : {tuple(round(v, 12) for v in m.xi)}")
    print(f"scheme             : {s.variant} theta-EM, theta = {s.theta:g}")
    print(f"repulsion scale L  : {L:.17g}")
    print(f"diffusion size sup : {sigma_sup:.17g}"
          + (" (declared bound)" if m.sigma.bar_declared else ""))
    if p_star == float("inf"):
        print("moment threshold   : infinite (no diffusion)")
    else:
        print(f"moment threshold   : {p_star:.17g}"
              + (" (conservative: uses the declared diffusion bound)"
                 if m.sigma.bar_declared else ""))

    grids = list(cfg.n_list or ())
    if cfg.n is not None and cfg.n not in grids:
        grids.append(cfg.n)
    if cfg.n_ref is not None and cfg.n_ref not in grids:
        grids.append(cfg.n_ref)
    for n in sorted(grids):
        line = f"grid n = {n:<8d}: dt = {m.T / n:.17g}"
        if s.variant == "truncated":
            eps = truncation_level(m, s.resolve(n))
            line += f", cap level = {eps:.17g}"
        print(line)

    need = RATE_THRESHOLD[s.variant]
    if p_star <= need:
        print(f"warning: moment threshold {p_star:g} <= {need:g}; the "
              f"{s.variant} scheme's strong-rate guarantee does not cover "
              "this model")
    return 0


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    m = cfg.model
    ax = validate_axioms(m.rs)
    rep = validate_assumptions(m, sample_count=args.samples, tol=args.tol)

    print(f"axioms                    : {'PASS' if ax.passed else 'FAIL'} "
          f"(worst reflection residual {ax.worst_reflection_residual:.3g})")
    for label, check in (("drift regularity", rep.drift_regular),
                         ("diffusion regularity", rep.sigma_regular),
                         ("repulsion dominates noise", rep.strength_dominates_noise),
                         ("drift chamber alignment", rep.drift_alignment),
                         ("weighted pairing identity", rep.pairing_identity)):
        tag = {"pass": "PASS", "sampled-pass": "PASS (sampled)",
               "fail": "FAIL"}[check.status]
        print(f"{label:<26}: {tag} ({check.detail})")
    overall = ax.passed and rep.all_ok()
    print(f"overall                   : {'PASS' if overall else 'FAIL'}")
    return 0 if overall else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dunklsim",
        description="Simulation lab for repelling particle systems in a Weyl chamber.")
    parser.add_argument("--version", action="version",
                        version=f"dunklsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the experiment in a config file")
    p_run.add_argument("config", help="path to a JSON config")
    p_run.add_argument("--output-dir", default=None,
                       help="override the output directory")
    p_run.add_argument("--threads", type=int, default=None,
                       help="override the thread budget (results never depend on it)")
    p_run.set_defaults(func=cmd_run)

    p_desc = sub.add_parser("describe",
                            help="print derived quantities without running")
    p_desc.add_argument("config", help="path to a JSON config")
    p_desc.set_defaults(func=cmd_describe)

    p_val = sub.add_parser("validate",
                           help="check root-system axioms and model assumptions")
    p_val.add_argument("config", help="path to a JSON config")
    p_val.add_argument("--samples", type=int, default=256,
                       help="interior sample points for the identity check")
    p_val.add_argument("--tol", type=float, default=1e-8,
                       help="relative tolerance for the identity check")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for line in exc.problems:
            print(f"config error - {line}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except DunklSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"output failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
