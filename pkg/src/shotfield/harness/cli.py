"""Command-line entry point ``shotfield``."""

from __future__ import annotations

import argparse
import json
import sys

from .. import _accel
from ..fredholm import higher_order_vanishing
from ..pointproc import dpp_build, kernel_l2_integral
from ..shotnoise import centralize_scale
from .config import ConfigError, load_config
from .experiment import dpp_fredholm, limit_law, run_experiment, simulate_lambda
from .report import load_report, summarize, write_outputs


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_sweep(args) -> int:
    cfg = _load(args)
    log = None if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    result = run_experiment(cfg, threads=args.threads, log=log)
    out = write_outputs(result, args.out)
    print(summarize(result.report))
    print(f"outputs written to {out}")
    return 1 if (args.assert_checks and not result.passed) else 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    idx = args.lambda_index
    if not 0 <= idx < len(cfg.lambdas):
        raise ConfigError(f"lambda index {idx} out of range")
    raw, counts = simulate_lambda(cfg, idx, args.threads, replicates=args.replicates)
    lam = cfg.lambdas[idx]
    tilde = centralize_scale(raw, lam, cfg.law, cfg.response)
    writer = sys.stdout
    writer.write("lambda,replicate_id,z_index,I,I_tilde\n")
    for k in range(raw.shape[0]):
        for j in range(raw.shape[1]):
            writer.write(f"{lam!r},{k},{j},{raw[k, j]!r},{tilde[k, j]!r}\n")
    return 0


def cmd_theory(args) -> int:
    cfg = _load(args)
    out = {"limit": limit_law(cfg).to_dict()}
    if cfg.process == "dpp":
        out["dpp"] = []
        for lam in cfg.lambdas:
            model = dpp_build(lam, cfg.eps, cfg.window)
            out["dpp"].append({**model.to_dict(), "kernel_l2_over_lambda": kernel_l2_integral(model) / lam})
    print(json.dumps(out, indent=2))
    return 0


def cmd_fredholm(args) -> int:
    cfg = _load(args)
    if cfg.process != "dpp":
        raise ConfigError("the fredholm command needs a DPP config")
    rows = []
    for lam in cfg.lambdas:
        g = cfg.law.scaling_g(lam) if args.scaled else 1.0
        rows.append({"lambda": lam, **dpp_fredholm(cfg, lam, order=args.order, scale=g)})
    if args.vanishing:
        table = higher_order_vanishing(cfg.eps, cfg.window, cfg.law, cfg.query, cfg.response,
                                       cfg.lambdas, order=args.order or cfg.tests.nystrom_order)
        print(json.dumps({"operators": rows, "higher_order": table}, indent=2))
    else:
        print(json.dumps({"operators": rows}, indent=2))
    return 0


def cmd_report(args) -> int:
    report = load_report(args.path)
    print(summarize(report))
    return 1 if (args.assert_checks and not report["passed"]) else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shotfield",
                                description="Shot-noise field simulation and limit-law verification.")
    p.add_argument("--version", action="version", version="shotfield 0.1.0 (" + _accel.backend_name() + ")")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", required=True, help="YAML or JSON experiment config")
        if seed:
            sp.add_argument("--seed", type=int, help="override the master seed")

    sp = sub.add_parser("sweep", help="run all intensities, write outputs and checks")
    common(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--assert", dest="assert_checks", action="store_true",
                    help="exit nonzero when any check fails")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("simulate", help="print replicate field values for one intensity as CSV")
    common(sp)
    sp.add_argument("--lambda-index", type=int, default=0)
    sp.add_argument("--replicates", type=int)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("theory", help="print limit-law quantities as JSON")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_theory)

    sp = sub.add_parser("fredholm", help="Fredholm determinant diagnostics for a DPP config")
    common(sp, seed=False)
    sp.add_argument("--order", type=int, help="Gauss-Legendre nodes per panel")
    sp.add_argument("--scaled", action="store_true", help="use xi / g(lambda) (centred field)")
    sp.add_argument("--vanishing", action="store_true", help="also print the n >= 2 table")
    sp.set_defaults(func=cmd_fredholm)

    sp = sub.add_parser("report", help="summarise an existing report.json")
    sp.add_argument("path", help="report.json or the sweep output directory")
    sp.add_argument("--assert", dest="assert_checks", action="store_true")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
