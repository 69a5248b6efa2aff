"""Command-line entry point.

Subcommands:
  run <config>          run a case, write history/VTK/manifest outputs
  convergence <config>  grid-refinement study (config needs K_list)
  audit <config>        run without file outputs, report audits only

Config files are YAML mappings of CaseConfig fields (see
esflow.harness.CaseConfig).  Exit status is nonzero when any audit fails.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import harness, operators


def _parser():
    ap = argparse.ArgumentParser(prog="esflow")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "convergence", "audit"):
        sp = sub.add_parser(name)
        sp.add_argument("config")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out-dir", default=None)
        sp.add_argument("--dump-operators", action="store_true",
                        help="write P, Q, D matrices of the run's order")
        sp.add_argument("--dump-av", action="store_true",
                        help="include sensor/viscosity fields in VTK dumps")
    return ap


def _dump_operators(p, out_dir):
    ops = operators.get_ops(p).base
    os.makedirs(out_dir, exist_ok=True)
    for name, mat in (("P", np.diag(ops.P)), ("Q", ops.Q), ("D", ops.D)):
        np.savetxt(os.path.join(out_dir, f"operator_{name}_p{p}.txt"), mat)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    cfg = harness.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out_dir is not None:
        cfg.out_dir = args.out_dir
    if args.dump_operators:
        _dump_operators(cfg.p, cfg.out_dir)

    if args.command == "convergence":
        k_list = getattr(cfg, "K_list", None)
        if not k_list:
            print("config must set K_list for a convergence study",
                  file=sys.stderr)
            return 2
        out_csv = os.path.join(cfg.out_dir, "convergence.csv")
        rows = harness.convergence_study(cfg, k_list, out_csv=out_csv)
        for r in rows:
            print("p={p} K={K} Linf={Linf:.6e} rate={rate_Linf} "
                  "L2={L2:.6e} rate={rate_L2}".format(**{
                      **r,
                      "rate_Linf": (f"{r['rate_Linf']:.2f}"
                                    if r["rate_Linf"] != "" else "-"),
                      "rate_L2": (f"{r['rate_L2']:.2f}"
                                  if r["rate_L2"] != "" else "-")}))
        print(f"wrote {out_csv}")
        return 0

    write = args.command == "run"
    res = harness.run_case(cfg, write_outputs=write, dump_av=args.dump_av)
    for name, audit in res.audits.items():
        verdict = "PASS" if audit.get("pass", True) else "FAIL"
        detail = " ".join(f"{k}={v:.3e}" if isinstance(v, float) else ""
                          for k, v in audit.items() if k != "pass")
        print(f"audit {name}: {verdict} {detail}")
    if res.errors:
        print(" ".join(f"{k}={v:.6e}" for k, v in res.errors.items()))
    if write:
        print(f"outputs in {cfg.out_dir}")
    return 0 if res.audits_pass else 1


if __name__ == "__main__":
    sys.exit(main())
