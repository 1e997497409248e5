"""Command-line experiment runner.

Usage::

    normflow run --config exp.cfg [--out DIR] [--seed N] [--jobs K]
    normflow sweep --config exp.cfg --axis NAME --values v1,v2,... [--out DIR] [--jobs K]
    normflow --list-experiments

Exit codes: 0 when every claim passes, 2 when a claim fails, 1 on error.

Config files are YAML (comments with ``#``)::

    experiment: flow          # flow | decomposed | rate-fit | aluthge-limit |
                              # gradient-check | shift-poisson | sawtooth | sweep
    seed: 7
    t_end: 100
    phi:
      name: haagerup          # aluthge | haagerup | power | left_only
      domain: [0, 3]          # or "auto": the singular-value range of the start
      # alpha: 2              # for power;  f: "x + log(1 + x)" for left_only
      # custom: {phi1: "x^2", phi2: "0"}   instead of name
      # class: C1             # C0 | CL | C1
    initial:
      kind: jordan            # jordan(lam, n, y0) | random(n, box) | normal(n, box)
      lam: 0.5                # triangular-random(n, box) | shift-truncation(weights, m)
      n: 2                    # matrix(rows) | or  file: path/to/matrix.txt
      y0: 1
    ctrl: {rtol: 1.0e-8, atol: 1.0e-10, normality_tol: 1.0e-8, settle_steps: 10}
    params: {}                # experiment specific, see normflow.experiments
    output_dir: runs/flow

A sweep config uses ``experiment: sweep`` plus
``sweep: {experiment: NAME, axis: NAME, values: [...], jobs: K}``.

Expression grammar for ``custom`` pairs and ``left_only``: numbers, the
variable ``x``, constants ``e`` and ``pi``, the operators ``+ - * /`` and
``**`` (or ``^``), parentheses, and the functions ``log``, ``exp``,
``sqrt`` and ``pow(a, b)``.  Example: ``"pow(x, 1.5) + log(1 + x)"``.

Matrix files hold a header line with n, then n rows of n entries written
as ``re+imj``.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import experiments as ex
from .errors import NormflowError


def _parse_values(text: str) -> list:
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            v = float(tok)
        except ValueError:
            raise NormflowError(f"--values: {tok!r} is not a number") from None
        vals.append(int(v) if v.is_integer() and "." not in tok and "e" not in tok.lower() else v)
    return vals


def list_experiments() -> str:
    lines = []
    for name, (_, desc, crit) in ex.EXPERIMENTS.items():
        lines.append(f"{name}: {desc} (acceptance {', '.join(map(str, crit))})")
        lines.append("  claims: " + ", ".join(ex.CLAIM_REGISTRY[name]))
    lines.append("sweep: runs one of the above over a list of values of one config field")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="normflow", description="Matrix flow experiments.")
    ap.add_argument("--list-experiments", action="store_true", help="print the experiment and claim registry")
    sub = ap.add_subparsers(dest="command")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True)
    common.add_argument("--out", default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--jobs", type=int, default=1)
    sub.add_parser("run", parents=[common], help="run one experiment")
    sw = sub.add_parser("sweep", parents=[common], help="run an experiment over several values")
    sw.add_argument("--axis", required=True)
    sw.add_argument("--values", required=True)
    return ap


def _summary(report) -> str:
    lines = [f"{report.experiment}: status={report.status} residual={report.terminal_residual:.3g} "
             f"time={report.wall_time:.2f}s"]
    for c in report.claims:
        lines.append(f"  [{c['result']}] {c['id']}: {json.dumps(c['value'])}")
    if report.error:
        lines.append(f"  error: {report.error}")
    return "\n".join(lines)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.list_experiments:
        print(list_experiments())
        return 0
    if args.command is None:
        ap.print_help()
        return 1
    try:
        cfg = ex.load_config(args.config)
        if args.seed is not None:
            cfg = ex.override_seed(cfg, args.seed)
        if args.command == "run":
            if cfg["experiment"] == "sweep":
                cfg["sweep"]["jobs"] = args.jobs
            report = ex.run(cfg, args.out)
            print(_summary(report))
            return report.exit_code
        values = _parse_values(args.values)
        if cfg["experiment"] == "sweep":
            cfg = {**cfg, "experiment": cfg["sweep"]["experiment"]}
        reports = ex.sweep(cfg, args.axis, values, args.out, jobs=args.jobs)
        for v, r in zip(values, reports):
            print(f"{args.axis}={v}")
            print(_summary(r))
        if any(r.status == "error" for r in reports):
            return 1
        return 0 if all(r.passed for r in reports) else 2
    except NormflowError as exc:
        print(f"normflow: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
