"""Command-line front end.

    noclick simulate --config A --out out/A [--seed N] [--exact]
    noclick reconstruct --config A --data out/A/dataset.csv --out out/A
    noclick validate [--scenario B]
    noclick run-all [--out out] [--jobs 4]
    noclick dump-config [--out reference.json]
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io
from .reconstruct import ReconstructionError
from .scenarios import (SCENARIO_NAMES, ConfigError, load_config, reconstruct_experiment,
                        reference_doc, simulate_experiment, truth_of, write_reconstruction,
                        write_simulation)
from .validate import run_checks

def _config(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, exact=args.exact, output_dir=args.out)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    exp = simulate_experiment(cfg)
    files = write_simulation(exp, cfg.output_dir)
    print(f"{cfg.name}: wrote {', '.join(files)} to {cfg.output_dir}")
    return 0


def _report(cfg, data, result) -> int:
    write_reconstruction(cfg, data, result, cfg.output_dir)
    line = (f"{cfg.name}: iterations={result.iterations} converged={result.converged} "
            f"fit_residual={result.fit_residual:.3e}")
    if result.fidelity_vs_truth is not None:
        line += f" 1-F={1.0 - result.fidelity_vs_truth:.3e}"
    print(line, flush=True)
    if result.model_mismatch:
        print(f"{cfg.name}: error: model mismatch, fitted curve misses the data "
              f"(max relative deviation {result.fit_residual:.3g}); increase n_max",
              file=sys.stderr)
        return 3
    return 0


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    data = io.read_dataset(args.data)
    truth = truth_of(cfg)
    result = reconstruct_experiment(cfg, data, truth)
    return _report(cfg, data, result)


def cmd_validate(args) -> int:
    if args.scenario is not None and args.scenario not in SCENARIO_NAMES:
        raise ConfigError(f"unknown scenario {args.scenario!r}; choose from {', '.join(SCENARIO_NAMES)}")
    results = run_checks(args.scenario)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def _run_one(spec, out, seed, exact):
    cfg = load_config(spec)
    cfg = cfg.with_overrides(seed=seed, exact=exact, output_dir=Path(out) / cfg.name)
    exp = simulate_experiment(cfg)
    write_simulation(exp, cfg.output_dir)
    result = reconstruct_experiment(cfg, exp.dataset, exp.truth)
    return cfg, exp.dataset, result


def cmd_run_all(args) -> int:
    out = Path(args.out or "out")
    if args.config:
        names = [args.config]
    else:
        names = args.scenarios or list(SCENARIO_NAMES)
    jobs = [(n, out, args.seed, args.exact) for n in names]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            runs = list(pool.map(_run_one, *zip(*jobs)))
    else:
        runs = [_run_one(*j) for j in jobs]
    status = 0
    for cfg, data, result in runs:
        status = max(status, _report(cfg, data, result))
    return status


def cmd_dump_config(args) -> int:
    doc = reference_doc()
    if args.out:
        io.write_json(args.out, doc)
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="noclick", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_config=True):
        sp.add_argument("--config", required=need_config,
                        help="config JSON path or shipped scenario name (A, B, C, D)"
                        + ("" if need_config else "; runs only this config"))
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--exact", action="store_true",
                        help="use analytic probabilities as frequencies")

    sp = sub.add_parser("simulate", help="write a synthetic dataset and the analytic curve")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("reconstruct", help="reconstruct the distribution from a dataset file")
    common(sp)
    sp.add_argument("--data", required=True, help="dataset CSV (eta,trials,no_clicks,freq)")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("validate", help="run the built-in oracle checks")
    sp.add_argument("--scenario", default=None, help="restrict to one scenario's checks")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("run-all", help="simulate and reconstruct every shipped scenario")
    common(sp, need_config=False)
    sp.add_argument("--jobs", type=int, default=1, help="scenarios run in parallel")
    sp.add_argument("--scenarios", nargs="*", default=None, help="subset of scenario names")
    sp.set_defaults(func=cmd_run_all)

    sp = sub.add_parser("dump-config", help="print the reference config with every default")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_dump_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ReconstructionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
