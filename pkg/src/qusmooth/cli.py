"""Command-line interface: run, validate, estimate, correlators, report.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import json
import sys
from pathlib import Path

from .config import ExperimentConfig
from .dynamics import ConfigError, NumericalFailure


def _load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    overrides = {
        "master_seed": args.seed,
        "output_dir": args.out,
        "threads": args.threads,
    }
    if args.combos:
        overrides["combos"] = (
            "all27" if args.combos == "all27" else args.combos.split(",")
        )
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    return ExperimentConfig.from_dict(data)


def _add_common(sub):
    sub.add_argument("--config", metavar="PATH", help="JSON configuration file")
    sub.add_argument("--seed", type=int, metavar="N", help="master seed override")
    sub.add_argument(
        "--combos", metavar="LIST", help="comma-separated dOdVdW names or 'all27'"
    )
    sub.add_argument("--out", metavar="DIR", help="output directory override")
    sub.add_argument("--threads", type=int, metavar="N", help="worker processes")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qusmooth",
        description=(
            "Monitored-qubit trajectory simulation and retrodictive estimation "
            "under matched or mismatched assumptions about the unobserved channel"
        ),
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
        ("run", "full sweep: powers, correlators, report, manifest"),
        ("validate", "check a configuration without running"),
        ("estimate", "project the computational cost of a configuration"),
        ("correlators", "record correlators and classification only"),
        ("report", "rebuild report.json from an existing output directory"),
    ):
        sub = subs.add_parser(name, help=desc)
        _add_common(sub)
        if name == "report":
            sub.add_argument("--in", dest="indir", metavar="DIR", required=True)

    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError, json.JSONDecodeError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    try:
        return _dispatch(args, cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except NumericalFailure as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


def _dispatch(args, cfg: ExperimentConfig) -> int:
    from . import pipeline

    if args.command == "validate":
        cfg.validate()
        print("configuration valid")
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        return 0

    if args.command == "estimate":
        est = cfg.estimate()
        print(json.dumps(est, indent=2, sort_keys=True))
        if not est["within_budget"]:
            print("estimate exceeds the configured budget", file=sys.stderr)
        return 0

    if args.command == "run":
        outdir = pipeline.run(cfg, progress=lambda msg: print(msg, flush=True))
        print(f"outputs in {outdir}")
        return 0

    if args.command == "correlators":
        from .correlation import classification_matrix, correlator_suite

        outdir = Path(cfg.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        suite = correlator_suite(
            cfg.model_params(),
            cfg.ss_window,
            cfg.n_correlator_trajectories,
            cfg.master_seed,
            tau_max=cfg.tau_max,
            n_tau=cfg.n_tau,
            psi0=cfg.psi0(),
        )
        pipeline._write_correlators_csv(outdir / "correlators.csv", suite)
        print(json.dumps(classification_matrix(suite), indent=2, sort_keys=True))
        print(f"outputs in {outdir}")
        return 0

    if args.command == "report":
        indir = Path(args.indir)
        manifest_path = indir / "manifest.json"
        window = cfg.ss_window
        seed = cfg.master_seed
        if manifest_path.exists():
            with open(manifest_path) as fh:
                manifest = json.load(fh)
            window = tuple(manifest["config"]["ss_window"])
            seed = manifest["config"]["master_seed"]
        report = pipeline.rebuild_report(
            indir, window, n_boot=cfg.bootstrap_resamples, seed=seed
        )
        with open(indir / "report.json", "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
        print(f"report.json rebuilt in {indir}")
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
