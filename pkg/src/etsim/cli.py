"""Command-line interface.

Subcommands:
  run            simulate one config; write trace CSV, metrics JSON, figures
  validate       evaluate the schedule inequalities for a config
  analyze        spectral condition + asymptotic covariance as JSON
  mc-bias        Monte Carlo bias decay study
  mc-normality   Monte Carlo check of the scaled-error covariance
  sweep          vary the threshold exponent; tabulate rate vs error

All file outputs land in --outdir (or $ETSIM_OUTPUT_DIR, default
./etsim_output). Exit status is 0 on success; failures print a single
machine-readable error JSON object and exit nonzero.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import metrics as metrics_mod
from .asymptotics import asymptotic_covariance, spectral_condition
from .config import MODES, SimConfig, load_config
from .errors import ParseError, SimulationError
from .estimators import run_simulation
from .schedules import validate as validate_schedule

__all__ = ["main"]

DEFAULT_OUTDIR = "etsim_output"


def _outdir(args) -> Path:
    path = args.outdir or os.environ.get("ETSIM_OUTPUT_DIR") or DEFAULT_OUTDIR
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> SimConfig:
    cfg = load_config(args.config)
    overrides = {}
    for name in ("seed", "mode", "horizon", "stride"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = cfg.with_(**overrides)
    for notice in cfg.notices:
        print(f"note: {notice}")
    return cfg


def _write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")
    return path


def _write_rows(path: Path, header: list[str], rows) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_run(args) -> int:
    cfg = _load(args)
    report = validate_schedule(cfg.schedule)
    for msg in report.messages:
        print(f"warning: {msg}")
    trace = run_simulation(cfg)
    out = _outdir(args)
    base = cfg.name

    manifest: list[Path] = []
    manifest.append(trace.write_csv(out / f"{base}_trace.csv"))

    mreport = metrics_mod.build_report(trace, report)
    steps = np.arange(trace.horizon + 1)
    manifest.append(_write_rows(
        out / f"{base}_consensus_dev.csv", ["step", "value"],
        zip(steps.tolist(), trace.consensus_dev.max(axis=1).tolist())))
    avg = trace.average_estimates()
    manifest.append(_write_rows(
        out / f"{base}_avg_estimates.csv",
        ["step"] + [f"coord_{k}" for k in range(avg.shape[1])],
        [[int(t), *row] for t, row in zip(trace.steps.tolist(), avg.tolist())]))
    if trace.centralized_error is not None:
        manifest.append(_write_rows(
            out / f"{base}_centralized_error.csv", ["step", "value"],
            zip(steps.tolist(), trace.centralized_error.tolist())))

    if not args.no_figures:
        from .plots import render_trace_figures
        manifest.extend(render_trace_figures(trace, out, prefix=base))

    payload = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "condition_report": report.to_dict(),
        "summary": trace.summary(),
        "metrics": mreport.to_dict(),
        "artifacts": [str(p) for p in manifest],
    }
    metrics_path = _write_json(out / f"{base}_metrics.json", payload)
    manifest.append(metrics_path)

    stats = mreport.communication
    print(f"run complete: mode={cfg.mode} seed={cfg.seed} T={cfg.horizon} "
          f"({trace.duration:.2f}s)")
    print(f"final error norms: "
          + ", ".join(f"{e:.4g}" for e in mreport.final_error_norms))
    print(f"communication rate: {stats.communication_rate:.4%} "
          f"(+{trace.forced_broadcasts} forced initial broadcasts)")
    for p in manifest:
        print(f"wrote {p}")
    return 0


def _cmd_validate(args) -> int:
    cfg = _load(args)
    report = validate_schedule(cfg.schedule)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
        return 0
    s = cfg.schedule
    print(f"schedule: a={s.a} b={s.b} tau1={s.tau1} tau2={s.tau2} "
          f"rho={list(s.rho)} epsilon1={s.epsilon1} (rho0={s.rho0})")
    flags = [
        ("gain exponent relations", report.assumption4_ok),
        ("bias removal (rho0 > tau1 - tau2)", report.unbiased_ok),
        ("a.s. boundedness (rho0 > 0.5 - tau2)", report.bounded_ok),
        ("interval growth (rho0 < tau1 - 1/(2+eps1))", report.sparse_trigger_ok),
    ]
    for label, ok in flags:
        print(f"  [{'ok' if ok else 'VIOLATED'}] {label}")
    print(f"  consensus decay exponents certified below "
          f"{report.consensus_tau0_sup:.6g}")
    print(f"  centralized-approximation exponents certified below "
          f"{report.approx_tau0_sup:.6g}")
    for msg in report.messages:
        print(f"  note: {msg}")
    return 0


def _cmd_analyze(args) -> int:
    cfg = _load(args)
    net = cfg.build_network()
    sys_ = cfg.build_system()
    gain = args.gain if args.gain is not None else cfg.centralized_gain
    spectral = spectral_condition(net, sys_, cfg.schedule, t_max=args.t_max,
                                  allow_disconnected=args.allow_disconnected)
    covariance = asymptotic_covariance(sys_, gain)
    print(json.dumps({
        "spectral_condition": spectral.to_dict(),
        "asymptotic_covariance": covariance.to_dict(),
    }, indent=2))
    return 0


def _cmd_mc_bias(args) -> int:
    cfg = _load(args)
    checkpoints = None
    if args.checkpoints:
        checkpoints = [int(c) for c in args.checkpoints.split(",")]
    started = time.perf_counter()
    study = metrics_mod.monte_carlo_bias(cfg, args.runs, checkpoints,
                                         base_seed=args.seed)
    duration = time.perf_counter() - started
    for msg in study.warnings:
        print(f"warning: {msg}")
    out = _outdir(args)
    rows = [[int(cp), i, float(study.mean_error_norms[k, i])]
            for k, cp in enumerate(study.checkpoints)
            for i in range(study.mean_error_norms.shape[1])]
    manifest = [
        _write_rows(out / f"{cfg.name}_bias.csv",
                    ["checkpoint", "agent", "mean_error_norm"], rows),
        _write_json(out / f"{cfg.name}_bias.json", {
            "config": cfg.to_dict(), "study": study.to_dict(),
            "duration_seconds": duration,
        }),
    ]
    if not args.no_figures:
        from .plots import render_bias_figure
        manifest.append(render_bias_figure(study, out, prefix=cfg.name))
    print(f"bias study: {study.n_runs} runs, {duration:.1f}s")
    for k, cp in enumerate(study.checkpoints):
        worst = study.mean_error_norms[k].max()
        print(f"  t={int(cp):>7d}  worst ||mean error|| = {worst:.5g}")
    for p in manifest:
        print(f"wrote {p}")
    return 0


def _cmd_mc_normality(args) -> int:
    cfg = _load(args)
    sys_ = cfg.build_system()
    study = metrics_mod.monte_carlo_normality(
        sys_, a_c=args.gain, t_eval=args.t_eval, n_runs=args.runs,
        base_seed=args.seed if args.seed is not None else cfg.seed)
    out = _outdir(args)
    manifest = [_write_json(out / f"{cfg.name}_normality.json", {
        "config": cfg.to_dict(), "study": study.to_dict(),
    })]
    if not args.no_figures:
        from .plots import render_normality_figure
        manifest.append(render_normality_figure(
            study, study.scaled_errors, out, prefix=cfg.name))
    print(f"normality study: {study.n_runs} runs at t={study.t_eval}, "
          f"gain {study.gain}")
    print(f"relative covariance error: {study.rel_error:.4f}")
    for p in manifest:
        print(f"wrote {p}")
    return 0


def _parse_grid(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ParseError("grid must be start:stop:step, e.g. 0.3:0.9:0.1")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ParseError("grid needs step > 0 and stop >= start")
    count = int(round((stop - start) / step))
    values = [start + k * step for k in range(count + 1)]
    return [round(v, 12) for v in values if v <= stop + 1e-12]


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    grid = _parse_grid(args.rho)
    rows = []
    for rho in grid:
        sched = dataclasses.replace(cfg.schedule, rho=(rho,) * cfg.n_agents)
        sweep_cfg = cfg.with_(schedule=sched, mode="event_triggered")
        trace = run_simulation(sweep_cfg)
        stats = metrics_mod.communication_stats(trace)
        rows.append({
            "rho": rho,
            "communication_rate": stats.communication_rate,
            "mean_final_error": float(trace.error_norms[-1].mean()),
            "max_final_error": float(trace.error_norms[-1].max()),
        })
    out = _outdir(args)
    manifest = [
        _write_rows(out / f"{cfg.name}_sweep.csv",
                    ["rho", "communication_rate", "mean_final_error",
                     "max_final_error"],
                    [[r["rho"], r["communication_rate"],
                      r["mean_final_error"], r["max_final_error"]]
                     for r in rows]),
        _write_json(out / f"{cfg.name}_sweep.json",
                    {"config": cfg.to_dict(), "rows": rows}),
    ]
    if not args.no_figures:
        from .plots import render_sweep_figure
        manifest.append(render_sweep_figure(rows, out, prefix=cfg.name))
    print(f"{'rho':>6} {'comm rate':>12} {'mean error':>12} {'max error':>12}")
    for r in rows:
        print(f"{r['rho']:>6.3g} {r['communication_rate']:>12.4%} "
              f"{r['mean_final_error']:>12.5g} {r['max_final_error']:>12.5g}")
    for p in manifest:
        print(f"wrote {p}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etsim",
        description="Event-triggered distributed parameter estimation "
                    "simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_outdir=True):
        p.add_argument("--config", required=True,
                       help="JSON config path or bundled name "
                            "(e.g. paper_sec4.json)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        if with_outdir:
            p.add_argument("--outdir", default=None,
                           help="output directory (default $ETSIM_OUTPUT_DIR "
                                f"or ./{DEFAULT_OUTDIR})")
            p.add_argument("--no-figures", action="store_true",
                           help="skip figure rendering")

    p = sub.add_parser("run", help="simulate one configuration")
    common(p)
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("validate", help="evaluate the schedule inequalities")
    common(p, with_outdir=False)
    p.add_argument("--json", action="store_true", help="print raw JSON")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("analyze",
                       help="spectral condition and asymptotic covariance")
    common(p, with_outdir=False)
    p.add_argument("--t-max", type=int, default=10 ** 6)
    p.add_argument("--gain", type=float, default=None,
                   help="centralized gain a_c (default from config)")
    p.add_argument("--allow-disconnected", action="store_true")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("mc-bias", help="Monte Carlo bias decay study")
    common(p)
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("--checkpoints", default=None,
                   help="comma-separated steps, e.g. 50,500,5000")
    p.set_defaults(func=_cmd_mc_bias)

    p = sub.add_parser("mc-normality",
                       help="scaled-error covariance vs prediction")
    common(p)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--t-eval", type=int, default=2000)
    p.add_argument("--gain", type=float, default=2.0)
    p.set_defaults(func=_cmd_mc_normality)

    p = sub.add_parser("sweep",
                       help="threshold-exponent sweep: rate vs error")
    common(p)
    p.add_argument("--rho", required=True, help="grid start:stop:step")
    p.add_argument("--horizon", type=int, default=None)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SimulationError as exc:
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}))
        return 1


if __name__ == "__main__":
    sys.exit(main())
