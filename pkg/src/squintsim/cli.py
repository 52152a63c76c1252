"""Command-line harness: closed-form analysis, single runs, and sweeps.

Subcommands:

* ``analyze``: print (and optionally save) the closed-form predictions.
* ``simulate``: run one link simulation, writing a JSON report plus
  per-tone and constellation CSVs.
* ``sweep``: run a grid of (N, theta, BW) cells into one CSV, cells
  distributed over a process pool sized by ``SQUINTSIM_WORKERS``.

Exit codes: 0 success, 2 configuration error, 3 runtime failure. All
outputs are deterministic for a fixed seed (wall time goes to stderr,
never into the report files).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, analytic
from .combine import PHASE_SUM
from .config import ExperimentConfig, parse_config_file
from .dsp import derive_seed
from .errors import ConfigError, SquintSimError
from .txrx import SimReport, run_ofdm, run_single_carrier

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_FLAG_KEYS = {
    "n": "n",
    "theta_deg": "theta_deg",
    "bw": "bw",
    "snr_db": "snr_db",
    "carriers": "carriers",
    "cp_num": "cp_num",
    "combiner": "combiner",
    "seed": "seed",
    "out": "out",
    "format": "format",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="squintsim",
        description="Beam-squint analysis and link simulation for wideband phased arrays",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("analyze", "closed-form array analysis"),
        ("simulate", "run one link simulation"),
        ("sweep", "run a grid of simulations"),
    ):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--n", type=int, help="number of array elements")
        p.add_argument("--theta-deg", dest="theta_deg", type=float, help="steering angle, degrees")
        p.add_argument("--bw", type=float, help="fractional signal bandwidth")
        p.add_argument("--snr-db", dest="snr_db", help="per-channel SNR in dB, or 'inf'")
        p.add_argument("--carriers", type=int, help="OFDM subcarrier count (omit for single carrier)")
        p.add_argument("--cp-num", dest="cp_num", type=int, help="cyclic prefix numerator k in k/M")
        p.add_argument("--combiner", choices=("ps", "idft", "reduced"), help="spatial combiner")
        p.add_argument("--seed", type=int, help="base RNG seed")
        p.add_argument("--out", help="output path stem")
        p.add_argument("--format", choices=("csv", "json"), help="sweep output format")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    raw = parse_config_file(args.config) if args.config else {}
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            raw[key] = value if isinstance(value, str) else str(value)
    return ExperimentConfig(raw)


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _report_dict(report) -> dict:
    def convert(value):
        if dataclasses.is_dataclass(value):
            return {k: convert(v) for k, v in dataclasses.asdict(value).items()}
        if isinstance(value, (tuple, list)):
            return [convert(v) for v in value]
        if isinstance(value, np.generic):
            return value.item()
        return value

    return {k: convert(v) for k, v in dataclasses.asdict(report).items()}


def cmd_analyze(cfg: ExperimentConfig) -> int:
    report = analytic.report(cfg.array, cfg["bw"], cfg["carriers"])
    if report.coherent_bw is None:
        raise ConfigError(
            "analysis is undefined at broadside steering (theta = 0): "
            "coherent bandwidth and null positions are unbounded"
        )
    payload = {"config": cfg.echo(), "version": __version__, "analytic": _report_dict(report)}
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    out = cfg["out"]
    if out != "report":
        with open(f"{out}.json", "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _run_point(cfg: ExperimentConfig) -> SimReport:
    ofdm = cfg.ofdm
    if ofdm is not None:
        report = run_ofdm(cfg.array, cfg.signal, ofdm, cfg["snr_db"], cfg.combiner)
    else:
        report = run_single_carrier(cfg.array, cfg.signal, cfg["snr_db"], cfg.combiner)
    report.config = cfg.echo()
    return report


def _write_simulate_outputs(report: SimReport, out: str) -> list[str]:
    written = []
    payload = {
        "config": report.config,
        "version": __version__,
        "overall_evm_db": report.overall_evm_db,
        "overall_ssir_db": report.overall_ssir_db,
        "analytic": _report_dict(report.analytic),
    }
    path = f"{out}.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    if report.per_tone is not None:
        path = f"{out}_tones.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tone", "evm_db", "ssir_db"])
            for tone in report.per_tone:
                writer.writerow(
                    [tone.tone_index, f"{tone.evm_db:.6f}", f"{tone.ssir_db:.6f}"]
                )
        written.append(path)
    path = f"{out}_constellation.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im", "ref_re", "ref_im"])
        for rx, ref in report.constellation:
            writer.writerow(
                [f"{rx.real:.9f}", f"{rx.imag:.9f}", f"{ref.real:.9f}", f"{ref.imag:.9f}"]
            )
    written.append(path)
    return written


def cmd_simulate(cfg: ExperimentConfig) -> int:
    start = time.monotonic()
    report = _run_point(cfg)
    for path in _write_simulate_outputs(report, cfg["out"]):
        print(path)
    print(
        f"evm {report.overall_evm_db:.2f} dB, ssir {report.overall_ssir_db:.2f} dB "
        f"({time.monotonic() - start:.1f} s)",
        file=sys.stderr,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _sweep_cell(payload: tuple) -> tuple[int, float | None, float | None, str]:
    index, values = payload
    try:
        report = _run_point(ExperimentConfig(values))
        return index, report.overall_ssir_db, report.overall_evm_db, ""
    except SquintSimError as exc:
        return index, None, None, f"{type(exc).__name__}: {exc}"


def sweep_cells(cfg: ExperimentConfig) -> list[dict]:
    """Expand the sweep grid into per-cell configs, row-major over
    (N, theta, BW), each with a seed derived from the base seed and the
    cell index."""
    axes = cfg.sweep_axes
    if axes is None:
        raise ConfigError("sweep requires at least one sweep_* axis")
    ns, thetas, bws = axes
    base = cfg.echo()
    for key in ("sweep_n", "sweep_theta_deg", "sweep_bw"):
        base.pop(key, None)
    cells = []
    index = 0
    for n in ns:
        for theta in thetas:
            for bw in bws:
                values = dict(base)
                values.update(
                    n=str(n),
                    theta_deg=str(theta),
                    bw=str(bw),
                    seed=str(derive_seed(cfg["seed"], index)),
                )
                cells.append(values)
                index += 1
    return cells


def cmd_sweep(cfg: ExperimentConfig) -> int:
    start = time.monotonic()
    cells = sweep_cells(cfg)
    workers = int(os.environ.get("SQUINTSIM_WORKERS", "1"))
    results: list[tuple] = [None] * len(cells)
    jobs = list(enumerate(cells))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, ssir, evm, error in pool.map(_sweep_cell, jobs):
                results[index] = (ssir, evm, error)
    else:
        for job in jobs:
            index, ssir, evm, error = _sweep_cell(job)
            results[index] = (ssir, evm, error)
    rows = []
    for values, (ssir, evm, error) in zip(cells, results):
        rows.append(
            {
                "n_elements": int(values["n"]),
                "theta_deg": float(values["theta_deg"]),
                "bw_frac": float(values["bw"]),
                "ssir_db": ssir,
                "evm_db": evm,
                "error": error,
            }
        )
        if error:
            print(f"cell {values['n']}/{values['theta_deg']}: {error}", file=sys.stderr)
    out = cfg["out"]
    if cfg["format"] == "json":
        path = f"{out}.json"
        with open(path, "w") as fh:
            json.dump(
                {"config": cfg.echo(), "version": __version__, "cells": rows},
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")
    else:
        path = f"{out}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n_elements", "theta_deg", "bw_frac", "ssir_db", "evm_db"])
            for row in rows:
                writer.writerow(
                    [
                        row["n_elements"],
                        row["theta_deg"],
                        row["bw_frac"],
                        "" if row["ssir_db"] is None else f"{row['ssir_db']:.6f}",
                        "" if row["evm_db"] is None else f"{row['evm_db']:.6f}",
                    ]
                )
    print(path)
    print(f"{len(rows)} cells ({time.monotonic() - start:.1f} s)", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        return cmd_sweep(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SquintSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
