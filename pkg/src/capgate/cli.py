"""Command-line interface.

Subcommands: estimate, decide, simulate, batch, synth. Exit codes:
0 success, 1 data/assessment error (machine-readable JSON on stderr),
2 usage error. Randomized commands record their seed in the emitted
manifest; CAPGATE_THREADS caps simulation parallelism (0 = auto).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

from . import __version__
from .batch import ingest, run_batch, write_assessments_csv, write_report_json
from .capability import (
    CapabilityEstimate,
    SpecLimits,
    estimate_cpk,
    se_plugin,
    summarize,
)
from .errors import CapgateError, ParseError
from .resampling import BootstrapConfig
from .rules import (
    CostSensitive,
    Deterministic,
    FailureProbability,
    LowerConfidenceBound,
    boundary_acceptance,
    decide,
    rule_label,
)
from .simulate import (
    SimGrid,
    acceptance_surface,
    boundary_calibration,
    grid_manifest,
    table1_rows,
    table2_rows,
    thread_count,
    write_cells_csv,
    write_manifest,
)
from .synth import SynthSpec, synth_dataset, write_records_csv

__all__ = ["main", "run_main", "build_parser"]


# list-flag parsers raise ValueError so argparse reports a usage error (exit 2)
def _parse_float_list(text: str) -> tuple[float, ...]:
    values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    if not values:
        raise ValueError(f"expected comma-separated numbers, got {text!r}")
    return values


def _parse_int_list(text: str) -> tuple[int, ...]:
    values = tuple(int(tok) for tok in text.split(",") if tok.strip())
    if not values:
        raise ValueError(f"expected comma-separated integers, got {text!r}")
    return values


def _parse_cpk_spec(text: str) -> tuple[float, ...]:
    """Either 'lo:hi:step' or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected lo:hi:step, got {text!r}")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0 or hi < lo:
            raise ValueError(f"bad range {text!r}")
        out = []
        k = 0
        while True:
            v = round(lo + k * step, 12)
            if v > hi + 1e-12:
                break
            out.append(v)
            k += 1
        return tuple(out)
    return _parse_float_list(text)


def _read_values(path: str) -> list[float]:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            tok = line.strip()
            if not tok or tok.startswith("#"):
                continue
            try:
                values.append(float(tok))
            except ValueError:
                raise ParseError(f"unparseable value {tok!r}", line=line_no) from None
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="capgate",
        description="Risk-calibrated process-capability approval toolkit",
    )
    p.add_argument("--version", action="version", version=f"capgate {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="capability estimate from a sample file")
    est.add_argument("--input", required=True, help="text file, one value per line")
    est.add_argument("--lsl", type=float, required=True)
    est.add_argument("--usl", type=float, required=True)
    est.add_argument("--format", choices=("json", "csv"), default="json")
    est.add_argument("--out", default=None, help="output file (default stdout)")

    dec = sub.add_parser("decide", help="apply one approval rule to a sample")
    dec.add_argument("--input", required=True, help="text file, one value per line")
    dec.add_argument("--lsl", type=float, required=True)
    dec.add_argument("--usl", type=float, required=True)
    dec.add_argument("--c0", type=float, default=1.33)
    rule = dec.add_mutually_exclusive_group(required=True)
    rule.add_argument("--deterministic", action="store_true")
    rule.add_argument("--lcb", type=float, metavar="GAMMA")
    rule.add_argument("--alpha", type=float, metavar="ALPHA")
    rule.add_argument("--lambda", dest="lam", type=float, metavar="LAMBDA")
    dec.add_argument("--format", choices=("json", "csv"), default="json")
    dec.add_argument("--out", default=None)

    sim = sub.add_parser("simulate", help="Monte Carlo operating characteristics")
    preset = sim.add_mutually_exclusive_group()
    preset.add_argument(
        "--table1", action="store_true", help="lambda / alpha / k calibration table"
    )
    preset.add_argument(
        "--table2",
        action="store_true",
        help="boundary expected-loss comparison (n=32, B=12000)",
    )
    preset.add_argument(
        "--boundary",
        action="store_true",
        help="boundary acceptance vs Phi(-k) (n=500, B=20000)",
    )
    sim.add_argument("--cpk", type=_parse_cpk_spec, default=None,
                     help="grid: lo:hi:step or comma list")
    sim.add_argument("--n", type=_parse_int_list, default=None,
                     help="comma list of sample sizes")
    sim.add_argument("--lambdas", type=_parse_float_list, default=None,
                     help="comma list of cost ratios")
    sim.add_argument("--c0", type=float, default=1.33)
    sim.add_argument("--half-width", type=float, default=4.0)
    sim.add_argument("--B", type=int, default=10_000, help="replications per cell")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output directory")

    bat = sub.add_parser("batch", help="multi-dimension approval report")
    bat.add_argument("--input", required=True, help="long-form measurement CSV")
    bat.add_argument("--c0", type=float, default=1.33)
    bat.add_argument("--lambdas", type=_parse_float_list,
                     default=(1.0, 2.0, 5.0, 10.0, 20.0, 50.0))
    bat.add_argument("--level", type=float, default=0.05, help="normality test level")
    bat.add_argument("--b-boot", type=int, default=1000)
    bat.add_argument("--seed", type=int, default=0)
    bat.add_argument("--format", choices=("json", "csv"), default="json")
    bat.add_argument("--out", required=True, help="report JSON path")

    syn = sub.add_parser("synth", help="generate a synthetic measurement dataset")
    syn.add_argument("--dims", type=int, default=200)
    syn.add_argument("--n", type=int, default=32)
    syn.add_argument("--frac-nonnormal", type=float, default=0.35)
    syn.add_argument("--frac-below", type=float, default=0.5)
    syn.add_argument("--near-frac", type=float, default=0.2)
    syn.add_argument("--near-band", type=float, default=0.1)
    syn.add_argument("--c0", type=float, default=1.33)
    syn.add_argument("--lsl", type=float, default=-4.0)
    syn.add_argument("--usl", type=float, default=4.0)
    syn.add_argument("--log-s", type=float, default=1.0)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--out", required=True, help="dataset CSV path")
    return p


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")


def _estimate_payload(args) -> dict:
    values = _read_values(args.input)
    limits = SpecLimits(args.lsl, args.usl)
    summary = summarize(values)
    cpk_hat = estimate_cpk(summary, limits)
    return {
        "n": summary.n,
        "mean": summary.mean,
        "sd": summary.sd,
        "lsl": limits.lsl,
        "usl": limits.usl,
        "cpk_hat": cpk_hat,
        "se": se_plugin(cpk_hat, summary.n),
    }


def _cmd_estimate(args) -> int:
    payload = _estimate_payload(args)
    if args.format == "json":
        _emit(json.dumps(payload, indent=2), args.out)
    else:
        keys = list(payload)
        _emit(
            ",".join(keys) + "\n" + ",".join(repr(payload[k]) for k in keys), args.out
        )
    return 0


def _rule_from_args(args):
    if args.deterministic:
        return Deterministic()
    if args.lcb is not None:
        return LowerConfidenceBound(args.lcb)
    if args.alpha is not None:
        return FailureProbability(args.alpha)
    return CostSensitive(args.lam)


def _cmd_decide(args) -> int:
    payload = _estimate_payload(args)
    rule = _rule_from_args(args)
    estimate = CapabilityEstimate(
        cpk_hat=payload["cpk_hat"], se=payload["se"], n=payload["n"]
    )
    decision = decide(rule, estimate, args.c0)
    alpha = boundary_acceptance(decision.k)
    out = {
        "rule": rule_label(rule),
        "c0": args.c0,
        # the calibration triple: any rule reduces to (lambda, alpha, k)
        "lambda": (1.0 - alpha) / alpha,
        "alpha": alpha,
        "k": decision.k,
        "accept": decision.accept,
        "margin": decision.margin,
        "effective_threshold": decision.effective_threshold,
        "p_fail": decision.p_fail,
        "estimate": payload,
    }
    if args.format == "json":
        _emit(json.dumps(out, indent=2), args.out)
    else:
        flat = {k: v for k, v in out.items() if k != "estimate"} | payload
        keys = list(flat)
        _emit(",".join(keys) + "\n" + ",".join(str(flat[k]) for k in keys), args.out)
    return 0


def _write_csv_rows(path, header, rows) -> None:
    import csv as _csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _cmd_simulate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    manifest = {"seed": args.seed, "command": "simulate"}
    if args.table1:
        rows = table1_rows()
        _write_csv_rows(
            os.path.join(args.out, "table1.csv"),
            ["lambda", "alpha", "k"],
            [(lam, alpha, k) for lam, alpha, k in rows],
        )
        manifest["preset"] = "table1"
    elif args.table2:
        rows = table2_rows(base_seed=args.seed)
        _write_csv_rows(
            os.path.join(args.out, "table2.csv"),
            ["lambda", "el_det", "el_cal", "reduction_pct"],
            [(r.lam, r.el_det, r.el_cal, r.reduction_pct) for r in rows],
        )
        manifest["preset"] = "table2"
        manifest["n"] = 32
        manifest["replications"] = 12_000
    elif args.boundary:
        rows = boundary_calibration(base_seed=args.seed)
        _write_csv_rows(
            os.path.join(args.out, "boundary.csv"),
            ["k", "p_acc", "mc_se", "target"],
            [(r.k, r.p_acc, r.mc_se, r.target) for r in rows],
        )
        manifest["preset"] = "boundary"
        manifest["n"] = 500
        manifest["replications"] = 20_000
    else:
        grid_kwargs = {
            "c0": args.c0,
            "half_width_t": args.half_width,
            "replications_b": args.B,
            "base_seed": args.seed,
        }
        if args.cpk:
            grid_kwargs["cpk_true_values"] = args.cpk
        if args.n:
            grid_kwargs["n_values"] = args.n
        if args.lambdas:
            grid_kwargs["lambda_values"] = args.lambdas
        grid = SimGrid(**grid_kwargs)
        rules = [Deterministic()] + [CostSensitive(lam) for lam in grid.lambda_values]
        surface = acceptance_surface(grid, rules, threads=thread_count())
        write_cells_csv(surface.records, os.path.join(args.out, "cells.csv"))
        _write_csv_rows(
            os.path.join(args.out, "contour05.csv"),
            ["n", "rule", "cpk_at_half_acceptance"],
            [
                (n, label, "" if v is None else v)
                for (n, label), v in sorted(surface.contours.items())
            ],
        )
        manifest.update(grid_manifest(grid, rules))
        manifest["threads"] = thread_count()
    write_manifest(os.path.join(args.out, "manifest.json"), manifest)
    return 0


def _cmd_batch(args) -> int:
    records = ingest(args.input)
    lambdas = args.lambdas
    cfg = BootstrapConfig(b_boot=args.b_boot, seed=args.seed)
    report = run_batch(records, args.c0, lambdas, cfg, level=args.level)
    import datetime

    write_report_json(
        report,
        args.out,
        extra_config={
            "input": args.input,
            "package_version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        },
    )
    if args.format == "csv":
        stem, _ = os.path.splitext(args.out)
        write_assessments_csv(report.assessments, stem + ".assessments.csv")
    return 0


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        n_dims=args.dims,
        n_per_dim=args.n,
        frac_nonnormal=args.frac_nonnormal,
        frac_below=args.frac_below,
        near_frac=args.near_frac,
        near_band=args.near_band,
        c0=args.c0,
        limits=SpecLimits(args.lsl, args.usl),
        log_sd_s=args.log_s,
    )
    records = synth_dataset(spec, args.seed)
    write_records_csv(records, args.out)
    manifest = {"seed": args.seed, "command": "synth", "spec": asdict(spec)}
    write_manifest(args.out + ".manifest.json", manifest)
    return 0


_COMMANDS = {
    "estimate": _cmd_estimate,
    "decide": _cmd_decide,
    "simulate": _cmd_simulate,
    "batch": _cmd_batch,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already reported the usage error
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except CapgateError as exc:
        json.dump(
            {"error": type(exc).__name__, "message": str(exc)}, sys.stderr
        )
        sys.stderr.write("\n")
        return 1


def run_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run_main()
