"""Command line: antenna design, scenario runs, seed sweeps and reports.

Exit codes: 0 success, 2 invalid input, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from . import siw_design
from .config import ConfigError, build_simulation, load_config
from .network import SimulationError
from .traffic import read_metrics_csv, write_csv

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
OUT_DIR_ENV = "SIWVANET_OUT_DIR"


def default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV, "siwvanet_out")


def _yaml(data) -> str:
    return yaml.safe_dump(data, sort_keys=False)


# -- design ------------------------------------------------------------------


def cmd_design(args) -> int:
    try:
        substrate = siw_design.SubstrateSpec(args.eps_r, args.tan_delta, args.h_mm)
        design = siw_design.design_antenna(
            args.f0_ghz, args.delta_ghz, substrate, args.via_d_mm, args.pitch_mm, args.eps_eff
        )
    except siw_design.ConstraintViolation as exc:
        print(f"error: constraint '{exc.constraint}' violated: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: invalid design input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out) if args.out else Path(args.out_dir or default_out_dir()) / "antenna_spec.yaml"
    out.parent.mkdir(parents=True, exist_ok=True)
    data = design.to_dict()
    out.write_text(_yaml(data), "utf-8")
    c = design.cavity
    print(f"cavity a = {c.a:.6f} mm, d = {c.d_len:.6f} mm")
    print(f"f0 = {c.f0_ghz:.6f} GHz, fc = {c.fc_ghz:.6f} GHz, f0 - fc = {(c.f0_hz - c.fc_hz) / 1e6:.3f} MHz")
    print(f"vias: d/dp = {design.vias.diameter_pitch_ratio:.3f}, d/lambda0 = {design.vias.diameter_wavelength_ratio:.4f}, "
          f"{len(design.vias.positions)} vias")
    m = design.meander
    print(f"meander: total {m.total_length:.3f} mm, long {m.long_section:.3f} mm, "
          f"short {m.short_section:.3f} mm, width {m.slot_width:.3f} mm")
    print(f"wrote {out}")
    return EXIT_OK


# -- run ---------------------------------------------------------------------


def execute(config_ref: str, out_dir: Path, seed=None) -> dict:
    """Run one scenario and write metrics.csv, gaps.csv and summary.yaml."""
    cfg, base = load_config(config_ref)
    sim = build_simulation(cfg, base, seed)
    result = sim.run(cfg.window_s)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(result.series, out_dir / "metrics.csv", out_dir / "gaps.csv")
    summary = {"seed": sim.sched.seed, "duration_s": cfg.duration_s, **result.summary}
    summary["flows"] = [
        {"id": f.flow_id, "src": f.src, "dst": f.dst, "start_s": f.start, "stop_s": f.stop} for f in sim.flows
    ]
    (out_dir / "summary.yaml").write_text(_yaml(summary), "utf-8")
    return summary


def cmd_run(args) -> int:
    out_dir = Path(args.out_dir or default_out_dir())
    try:
        summary = execute(args.config, out_dir, args.seed)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SimulationError, AssertionError) as exc:
        print(f"error: simulation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(_yaml(summary), end="")
    return EXIT_OK


# -- sweep -------------------------------------------------------------------


def _sweep_one(job):
    config_ref, out_dir, seed = job
    try:
        return seed, execute(config_ref, Path(out_dir), seed), None
    except (ConfigError, SimulationError, AssertionError) as exc:
        return seed, None, f"{type(exc).__name__}: {exc}"


def aggregate(rows: list) -> dict:
    out = {}
    for key in ("pdr", "mean_delay_s"):
        values = [r[key] for r in rows if r.get(key) is not None]
        out[key] = {
            "mean": statistics.fmean(values) if values else None,
            "stddev": statistics.pstdev(values) if values else None,
            "n": len(values),
        }
    return out


def cmd_sweep(args) -> int:
    seeds = [int(s) for chunk in args.seeds for s in str(chunk).split(",") if s != ""]
    if not seeds:
        print("error: at least one seed required", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        load_config(args.config)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    root = Path(args.out_dir or default_out_dir())
    root.mkdir(parents=True, exist_ok=True)
    jobs = [(args.config, str(root / f"run_{i:03d}_seed_{s}"), s) for i, s in enumerate(seeds)]
    workers = args.jobs or min(len(jobs), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]

    rows, failed = [], []
    for (_, run_dir, _), (seed, summary, err) in zip(jobs, results):
        if err is not None:
            failed.append((seed, err))
            continue
        rows.append({"run": Path(run_dir).name, "seed": seed, "pdr": summary["pdr"], "mean_delay_s": summary["mean_delay_s"]})
    agg = aggregate(rows)
    with (root / "aggregate.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "seed", "pdr", "mean_delay_s"])
        for r in rows:
            w.writerow([r["run"], r["seed"], f"{r['pdr']:.6f}", "" if r["mean_delay_s"] is None else f"{r['mean_delay_s']:.6f}"])
        for stat in ("mean", "stddev"):
            vals = [agg[k][stat] for k in ("pdr", "mean_delay_s")]
            w.writerow([stat, "", *("" if v is None else f"{v:.6f}" for v in vals)])
    print(_yaml({"runs": len(rows), "failed": len(failed), "aggregate": agg}), end="")
    for seed, err in failed:
        print(f"error: seed {seed}: {err}", file=sys.stderr)
    return EXIT_RUNTIME if failed else EXIT_OK


# -- report ------------------------------------------------------------------


def report(run_dir: Path) -> dict:
    rows = read_metrics_csv(run_dir / "metrics.csv")
    gaps = read_metrics_csv(run_dir / "gaps.csv") if (run_dir / "gaps.csv").exists() else []
    sent = sum(int(r["sent"]) for r in rows)
    delivered = sum(int(r["delivered"]) for r in rows)
    lost = sum(int(r["lost"]) for r in rows)
    goodput = [float(r["goodput_bps"]) for r in rows]
    mac = [float(r["mac_throughput_bps"]) for r in rows]
    return {
        "windows": len(rows),
        "sent": sent,
        "delivered": delivered,
        "lost": lost,
        "pdr": delivered / sent if sent else 0.0,
        "peak_goodput_bps": max(goodput, default=0.0),
        "median_mac_throughput_bps": statistics.median(mac) if mac else 0.0,
        "peak_mac_throughput_bps": max(mac, default=0.0),
        "gaps": [{"start_s": float(g["start_s"]), "duration_s": float(g["duration_s"])} for g in gaps],
    }


def cmd_report(args) -> int:
    root = Path(args.out_dir or default_out_dir())
    if (root / "aggregate.csv").exists():
        print((root / "aggregate.csv").read_text("utf-8"), end="")
        return EXIT_OK
    if not (root / "metrics.csv").exists():
        print(f"error: no metrics.csv or aggregate.csv in {root}", file=sys.stderr)
        return EXIT_VALIDATION
    print(_yaml(report(root)), end="")
    return EXIT_OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="siwvanet", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="synthesize the SIW cavity antenna and write an antenna spec")
    d.add_argument("--f0-ghz", type=float, default=2.4)
    d.add_argument("--delta-ghz", type=float, default=0.7, help="f0 - fc")
    d.add_argument("--eps-r", type=float, default=2.2)
    d.add_argument("--tan-delta", type=float, default=0.0009)
    d.add_argument("--h-mm", type=float, default=1.575)
    d.add_argument("--via-d-mm", type=float, default=siw_design.DEFAULT_VIA_DIAMETER_MM)
    d.add_argument("--pitch-mm", type=float, default=siw_design.DEFAULT_VIA_PITCH_MM)
    d.add_argument("--eps-eff", type=float, default=None, help="meander medium (default: eps-r)")
    d.add_argument("--out", default=None, help="antenna spec path (default: <out-dir>/antenna_spec.yaml)")
    d.add_argument("--out-dir", default=None)
    d.set_defaults(func=cmd_design)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("--config", required=True, help="YAML scenario file or preset name (paper_scenario)")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out-dir", default=None)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a scenario over several seeds")
    s.add_argument("--config", required=True)
    s.add_argument("--seeds", nargs="+", required=True, help="seed list, space or comma separated")
    s.add_argument("--out-dir", default=None)
    s.add_argument("--jobs", type=int, default=None)
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="summarize a run or sweep directory")
    rp.add_argument("--out-dir", default=None)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
