"""Command-line interface.

Subcommands:
  theory        analytic sweep of the branch-averaged inequality test
  circuit       gate-level sweep with seeded shot sampling (optionally
                through the device-noise pipeline via --device)
  report        render a sweep CSV into plot-ready data files or a table,
                with figure PNGs alongside
  check-errors  print the accumulated gate error and total gate time of a
                reference circuit under a calibration file

Flags override values from an optional key = value config file (--config).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness, report
from .channels import PhaseConvention
from .circuits import build_dephased_circuit, build_depolarized_circuit
from .devicenoise import accumulate_gate_error, load_params, total_gate_time


def _add_common_sweep_args(p: argparse.ArgumentParser, default_mode: str):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--noise", choices=["deph", "depo"])
    p.add_argument("--control",
                   help="comma list of plus|mixed|alpha=<x> (default plus)")
    p.add_argument("--w-grid", dest="grid", help="visibility grid a:b:s")
    p.add_argument("--theta", type=float)
    p.add_argument("--eta", type=float, choices=[0.5, 1.0])
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.set_defaults(mode=default_mode)


_CONFIG_ALIASES = {"w_grid": "grid"}


def _merge_config(args: argparse.Namespace, keys: list[str]) -> dict:
    """File values fill in only where the CLI left a flag unset."""
    merged: dict[str, str | None] = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "config", None):
        from_file = harness.load_config(args.config)
        for k, v in from_file.items():
            k = k.replace("-", "_")
            k = _CONFIG_ALIASES.get(k, k)
            if k not in merged:
                raise ValueError(f"unknown config key {k!r}")
            if merged[k] is None:
                merged[k] = v
    return merged


def _build_config(args: argparse.Namespace) -> harness.SweepConfig:
    keys = ["noise", "control", "grid", "theta", "eta", "shots", "seed",
            "rounds", "device", "rate_mode", "out", "mode"]
    m = _merge_config(args, keys)
    noise = m["noise"] or "deph"
    control = m["control"] or "plus"
    grid_spec = m["grid"] or "0:1:0.1"
    mode = m["mode"]
    if mode != "analytic" and m["device"]:
        mode = "circuit+devicenoise"
    cfg = harness.SweepConfig(
        noise=noise,
        controls=tuple(c.strip() for c in str(control).split(",")),
        grid=harness.parse_grid(str(grid_spec)),
        theta=float(m["theta"]) if m["theta"] is not None else 0.0,
        eta=float(m["eta"]) if m["eta"] is not None else 0.5,
        shots=int(m["shots"]) if m["shots"] is not None else 10_000,
        seed=int(m["seed"]) if m["seed"] is not None else 0,
        rounds=int(m["rounds"]) if m["rounds"] is not None else 1,
        mode=mode,
        device=m["device"],
        rate_mode=m["rate_mode"] or "as-printed",
    )
    return cfg


def _run_sweep_command(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    records, failures = harness.run_sweep(cfg)
    text = harness.emit_csv(records)
    out = getattr(args, "out", None)
    if out is None and args.config:
        out = harness.load_config(args.config).get("out")
    if out:
        Path(out).write_text(text)
        print(f"wrote {len(records)} records to {out}")
    else:
        sys.stdout.write(text)
    for f in failures:
        print(f"FAILED point control={f.control} visibility={f.visibility}: "
              f"{f.error}", file=sys.stderr)
    return 1 if failures else 0


def _report_command(args: argparse.Namespace) -> int:
    records = harness.parse_csv(Path(args.infile).read_text())
    out_dir = Path(args.out_dir)
    stem = Path(args.infile).stem
    if args.emit == "gnuplot":
        written = report.emit_gnuplot(records, out_dir, stem=stem)
        for p in written:
            print(f"wrote {p}")
    else:
        sys.stdout.write(report.emit_table(records))
    if args.figures:
        for p in report.render_figures(records, out_dir, stem=stem):
            print(f"wrote {p}")
    return 0


def _check_errors_command(args: argparse.Namespace) -> int:
    params = load_params(args.device)
    conv = PhaseConvention()
    if args.circuit == "fig3":
        circ = build_dephased_circuit(0.5, 0.0, "+", conv, measure_basis="y")
    else:
        circ = build_depolarized_circuit(0.5, 0.0, "+", conv,
                                         measure_basis="y")
    gamma = accumulate_gate_error(circ, params)
    t = total_gate_time(circ, params)
    print(f"circuit:            {args.circuit}")
    print(f"expanded CNOTs:     {circ.expanded_cnot_count()}")
    print(f"expanded singles:   {circ.expanded_single_count()}")
    print(f"gate error total:   {gamma:.6f}  ({100 * gamma:.2f}%)")
    print(f"total gate time:    {t:.1f} ns")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="steermet",
        description="Metrological steering tests with superposed noisy "
                    "phase shifts")
    sub = parser.add_subparsers(dest="command", required=True)

    p_theory = sub.add_parser("theory", help="analytic sweep")
    _add_common_sweep_args(p_theory, "analytic")

    p_circ = sub.add_parser("circuit", help="gate-level sweep")
    _add_common_sweep_args(p_circ, "circuit")
    p_circ.add_argument("--shots", type=int)
    p_circ.add_argument("--seed", type=int)
    p_circ.add_argument("--rounds", type=int)
    p_circ.add_argument("--device", help="calibration params file")
    p_circ.add_argument("--rate-mode", dest="rate_mode",
                        choices=["as-printed", "standard"])

    p_rep = sub.add_parser("report", help="render a sweep CSV")
    p_rep.add_argument("--in", dest="infile", required=True)
    p_rep.add_argument("--emit", choices=["gnuplot", "table"],
                       default="table")
    p_rep.add_argument("--out-dir", default=".")
    p_rep.add_argument("--no-figures", dest="figures", action="store_false")

    p_chk = sub.add_parser("check-errors",
                           help="error and timing bookkeeping of a circuit")
    p_chk.add_argument("--circuit", choices=["fig3", "appendix"],
                       required=True)
    p_chk.add_argument("--device", required=True)

    args = parser.parse_args(argv)
    if args.command in ("theory", "circuit"):
        return _run_sweep_command(args)
    if args.command == "report":
        return _report_command(args)
    return _check_errors_command(args)


if __name__ == "__main__":
    raise SystemExit(main())
