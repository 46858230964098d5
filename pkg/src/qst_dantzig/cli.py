"""``qst`` command line: simulate, estimate, sweep, pack, check.

Exit codes: 0 ok, 1 failed checks, 2 configuration error, 3 I/O error,
4 estimator returned without converging.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import checks, experiments
from .estimators import ESTIMATORS, ConfigError, EstimatorConfig, SolverConfig
from .manifests import ManifestError, load_manifest
from .measurement import DatasetFormatError, noiseless_dataset, read_jsonl, simulate_dataset, to_csv, write_jsonl
from .pauli import InvalidStateError, ResourceLimitError
from .states import DensityMatrix, DomainError, build_packing, random_state

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_IO, EXIT_NONCONVERGED = 0, 1, 2, 3, 4


class CLIError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


def _threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, int(args.threads))
    env = os.environ.get("QST_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CLIError(f"QST_THREADS must be an integer, got {env!r}", EXIT_CONFIG) from None
    return 1


def _out_path(args, name: str | None, default: str) -> Path:
    p = Path(name or default)
    if not p.is_absolute() and getattr(args, "output_dir", None):
        p = Path(args.output_dir) / p
    return p


def _write(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _manifest(kind: str, args) -> dict:
    try:
        man = load_manifest(kind, args.manifest)
    except OSError as exc:
        raise CLIError(f"cannot read manifest {args.manifest}: {exc}", EXIT_IO) from None
    except ManifestError as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from None
    if getattr(args, "seed", None) is not None and kind in ("simulate", "pack"):
        man = {**man, "seed": int(args.seed)}
    return man


def _read_state(path) -> DensityMatrix:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CLIError(f"cannot read state file {path}: {exc}", EXIT_IO) from None
    try:
        if str(path).endswith(".bin"):
            return DensityMatrix.from_bytes(raw)
        return DensityMatrix.from_json(raw.decode())
    except (InvalidStateError, ValueError) as exc:
        raise CLIError(f"state file {path} is not a valid density matrix: {exc}", EXIT_IO) from None


def cmd_simulate(args) -> int:
    man = _manifest("simulate", args)
    noiseless = man.get("noiseless", False)
    if not noiseless and "K" not in man:
        raise CLIError("simulate manifest needs K unless noiseless is true", EXIT_CONFIG)
    if noiseless and "K" in man:
        raise CLIError("noiseless datasets take no K", EXIT_CONFIG)
    try:
        if "state_file" in man:
            rho = _read_state(man["state_file"])
        else:
            rho = random_state(2 ** man["b"], man["r"], seed=man["seed"], equal_spectrum=man.get("equal_spectrum", False))
        if noiseless:
            ds = noiseless_dataset(rho, man["n"], seed=man["seed"])
        else:
            ds = simulate_dataset(rho, man["n"], man["K"], seed=man["seed"])
    except (ValueError, ResourceLimitError) as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from None
    out = _out_path(args, man.get("output"), "dataset.jsonl")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        write_jsonl(ds, out)
    except OSError as exc:
        raise CLIError(f"cannot write {out}: {exc}", EXIT_IO) from None
    if man.get("state_output"):
        _write(_out_path(args, man["state_output"], ""), rho.to_json() + "\n")
    if man.get("csv_output"):
        _write(_out_path(args, man["csv_output"], ""), to_csv(ds))
    print(f"m={ds.m} n={ds.n} K={ds.K} seed={ds.seed} rho_hash={ds.rho_hash} -> {out}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    man = _manifest("estimate", args)
    try:
        ds = read_jsonl(man["dataset"])
    except OSError as exc:
        raise CLIError(f"cannot read dataset {man['dataset']}: {exc}", EXIT_IO) from None
    except DatasetFormatError as exc:
        raise CLIError(f"corrupted dataset {man['dataset']}: {exc}", EXIT_IO) from None
    try:
        cfg = EstimatorConfig(
            epsilon=man.get("epsilon", "auto"),
            C1=man.get("C1", 4.0),
            t=man.get("t"),
            feas_tol=man.get("feas_tol", 0.02),
            objective=man["estimator"],
            solver=SolverConfig(**{k: (tuple(v) if k == "smoothing" else v) for k, v in man.get("solver", {}).items()}),
        ).validate()
    except ConfigError as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from None
    sol = ESTIMATORS[cfg.objective](ds, cfg)
    out = _out_path(args, man.get("output"), "solution.json")
    _write(out, json.dumps(sol.to_json_dict()) + "\n")
    status = "converged" if sol.converged else "NOT converged"
    print(
        f"{cfg.objective}: eps={sol.epsilon:.4e} g={sol.constraint_value:.4e} "
        f"objective={sol.objective_value:.6g} iterations={sol.iterations} {status} -> {out}"
    )
    return EXIT_OK if sol.converged else EXIT_NONCONVERGED


def cmd_sweep(args) -> int:
    man = _manifest("sweep", args)
    try:
        experiments.swept_axis(man["grid"])
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from None
    out = args.output_dir or man.get("output_dir") or "."
    seeds = man["seeds"]
    if getattr(args, "seed", None) is not None and isinstance(seeds, int):
        man = {**man, "seeds": list(range(int(args.seed), int(args.seed) + seeds))}
    try:
        res = experiments.run_sweep(man, output_dir=out, threads=_threads(args))
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from None
    except OSError as exc:
        raise CLIError(f"cannot write sweep outputs to {out}: {exc}", EXIT_IO) from None
    n = len(res["results"])
    print(f"{n} trials -> {res['output_dir']}/trials.csv, rates.json, summary.md")
    for est, fits in res["fits"].items():
        for metric, fit in fits.items():
            if "slope" in fit:
                print(f"  {est} {metric}: slope {fit['slope']:+.3f} (stderr {fit['stderr']:.3f})")
    return EXIT_OK


def cmd_pack(args) -> int:
    man = _manifest("pack", args)
    p = np.inf if man["p"] == "inf" else float(man["p"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            inst = build_packing(
                2 ** man["b"],
                man["r"],
                man["n"],
                man["K"],
                p=p,
                target_count=man["count"],
                c1=man.get("c1", 0.25),
                seed=man.get("seed", 0),
                c_sep=man.get("c_sep", 1.0),
                budget=man.get("budget", 10_000),
                spread_trials=man.get("spread_trials", 100_000),
            )
        except (ValueError, DomainError, ResourceLimitError) as exc:
            raise CLIError(str(exc), EXIT_CONFIG) from None
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    out = _out_path(args, man.get("output"), "packing.json")
    _write(out, json.dumps(inst.to_json_dict()) + "\n")
    print(
        f"{len(inst.states)} states, kappa={inst.kappa:.4g}, min_pairwise_distance={inst.min_pairwise_distance:.4g}, "
        f"achieved_constant={inst.achieved_constant:.4g}, v_quality={inst.v_quality:.4f} -> {out}"
    )
    return EXIT_OK


def cmd_check(args) -> int:
    names = args.suite or None
    if names:
        unknown = set(names) - set(checks.SUITES)
        if unknown:
            raise CLIError(f"unknown suites {sorted(unknown)}; available: {sorted(checks.SUITES)}", EXIT_CONFIG)
    results = checks.run_checks(names)
    print(checks.format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the manifest seed")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads (env QST_THREADS)")
    common.add_argument("--output-dir", default=argparse.SUPPRESS, help="directory for output files")

    parser = argparse.ArgumentParser(prog="qst", description="Pauli tomography simulation and Dantzig estimation.", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (
        ("simulate", cmd_simulate, "simulate a measurement dataset"),
        ("estimate", cmd_estimate, "estimate a state from a dataset"),
        ("sweep", cmd_sweep, "run a rate sweep"),
        ("pack", cmd_pack, "build a packing instance"),
    ):
        sp = sub.add_parser(name, help=helptext, parents=[common])
        sp.add_argument("manifest", help="JSON manifest")
        sp.set_defaults(func=fn)
    sp = sub.add_parser("check", help="run the property battery", parents=[common])
    sp.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    sp.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    for name in ("seed", "threads", "output_dir"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"qst {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
