"""Command-line front end.

Subcommands:

* ``run``       solver trials on synthetic instances -> trajectory CSV + JSON
* ``raic``      sampled invertibility certificate -> report CSV + JSON
* ``validate``  Monte Carlo validator battery -> CSV + JSON, exit 1 on failure
* ``theory``    constants, sample complexity, and the error-bound table
* ``generate``  write a Gaussian matrix or sparse signal to file

Every subcommand is deterministic under ``--seed``.  Flags override the JSON
config file given with ``--config``, which overrides built-in defaults.  The
environment variable ``BITSENSE_THREADS`` caps trial parallelism (default 1).

Exit codes: 0 success, 1 validation/assertion or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import biht, core, montecarlo, raic, theory
from .rng import SeedSpec, derive_seed


def _threads() -> int:
    raw = os.environ.get("BITSENSE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _trial_map(fn, tasks):
    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def _resolve(args, config, defaults):
    """Merged settings: CLI flag > config file entry > default."""
    merged = dict(defaults)
    for key in defaults:
        if key in config:
            merged[key] = type(defaults[key])(config[key]) if defaults[key] is not None else config[key]
    for key in defaults:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
    return merged


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# run


def _run_one_trial(task):
    n, k, m, iters, eta, trial_seed = task
    x = core.random_sparse_unit(n, k, derive_seed(trial_seed, 0))
    A = core.gaussian_matrix(m, n, derive_seed(trial_seed, 1))
    b = core.sign_measure(A, x.values)
    config = biht.BIHTConfig(k=k, max_iters=iters, eta=eta, init=derive_seed(trial_seed, 2))
    return biht.run_biht(A, b, config, truth=x)


def cmd_run(args) -> int:
    settings = _resolve(
        args,
        _load_config(args.config),
        {
            "n": 200,
            "k": 5,
            "m": 5000,
            "trials": 25,
            "iters": 15,
            "eta": math.sqrt(2.0 * math.pi),
            "seed": 0,
        },
    )
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = SeedSpec(settings["seed"])
    tasks = [
        (
            settings["n"],
            settings["k"],
            settings["m"],
            settings["iters"],
            settings["eta"],
            derive_seed(base, i),
        )
        for i in range(settings["trials"])
    ]
    trajectories = _trial_map(_run_one_trial, tasks)

    biht.write_trajectory_csv(out / "trajectory.csv", trajectories)
    finals = [traj.error_ds[-1] for traj in trajectories]
    worst_slack = min(
        (
            traj.lemma1_rhs[t] - traj.error_ds[t]
            for traj in trajectories
            for t in range(1, len(traj.iterates))
        ),
        default=float("nan"),
    )
    _write_json(
        out / "summary.json",
        {
            **{key: settings[key] for key in ("n", "k", "m", "trials", "iters", "eta", "seed")},
            "final_mean_d_s": float(np.mean(finals)),
            "final_max_d_s": float(np.max(finals)),
            "min_error_bound_slack": worst_slack,
        },
    )
    return 0


# ---------------------------------------------------------------------------
# raic


def cmd_raic(args) -> int:
    settings = _resolve(
        args,
        _load_config(args.config),
        {
            "n": 200,
            "k": 5,
            "m": 5000,
            "delta": 0.01,
            "pairs": 500,
            "small_pairs": None,  # certifier default: one fifth of pairs
            "max_j": None,
            "seed": 0,
        },
    )
    if settings["pairs"] < 1:
        print("error: --pairs must be >= 1", file=sys.stderr)
        return 2
    if not (0.0 < settings["delta"] < 1.0):
        print("error: --delta must lie in (0, 1)", file=sys.stderr)
        return 2
    max_j = int(settings["max_j"]) if settings["max_j"] is not None else settings["k"]
    small = int(settings["small_pairs"]) if settings["small_pairs"] is not None else None
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = SeedSpec(settings["seed"])
    A = core.gaussian_matrix(settings["m"], settings["n"], derive_seed(base, 0))
    report = raic.raic_certify(
        A,
        settings["k"],
        settings["delta"],
        settings["pairs"],
        max_j,
        derive_seed(base, 1),
        num_small=small,
    )
    report.to_csv(out / "raic_report.csv")
    report.to_json(out / "raic_summary.json")
    return 0


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    settings = _resolve(args, _load_config(args.config), {"seed": 0})
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = montecarlo.run_validator_suite(
        SeedSpec(settings["seed"]), break_sgn_zero=args.break_sgn_zero
    )
    montecarlo.write_validator_csv(out / "validators.csv", rows)
    _write_json(
        out / "validators.json",
        {
            "n_validators": len(rows),
            "n_failed": sum(1 for r in rows if not r.passed),
            "failed": [r.name for r in rows if not r.passed],
        },
    )
    failed = [r for r in rows if not r.passed]
    if failed:
        for r in failed:
            print(
                f"FAIL {r.name}: estimate={r.estimate!r} theory={r.theory!r} z={r.z!r}",
                file=sys.stderr,
            )
        return 1
    return 0


# ---------------------------------------------------------------------------
# theory


def cmd_theory(args) -> int:
    settings = _resolve(
        args,
        _load_config(args.config),
        {"epsilon": 0.1, "rho": 0.1, "k": 5, "n": 1000},
    )
    try:
        m = theory.sample_complexity(
            settings["epsilon"], settings["rho"], settings["k"], settings["n"]
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    u = theory.constants()
    print("name,value")
    for name in ("a", "b", "c", "c1", "c2"):
        print(f"{name},{getattr(u, name)!r}")
    print(f"m,{m}")
    print()
    print("t,epsilon_t,closed_form")
    for t in range(21):
        print(
            f"{t},{theory.epsilon_recurrence(settings['epsilon'], t)!r},"
            f"{theory.closed_form_bound(settings['epsilon'], t)!r}"
        )
    return 0


# ---------------------------------------------------------------------------
# generate


def cmd_generate(args) -> int:
    settings = _resolve(
        args,
        _load_config(args.config),
        {"n": 200, "k": 5, "m": 5000, "seed": 0},
    )
    base = SeedSpec(settings["seed"])
    if args.what == "matrix":
        data = core.gaussian_matrix(settings["m"], settings["n"], derive_seed(base, 0)).entries
    else:
        data = core.random_sparse_unit(settings["n"], settings["k"], derive_seed(base, 1)).values
        data = data.reshape(1, -1)
    if args.format == "csv":
        core.save_matrix_csv(args.out, data)
    else:
        core.save_matrix_binary(args.out, data)
    return 0


# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its entries")
    p.add_argument("--seed", type=int, help="base seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bitsense",
        description="One-bit compressed sensing: solver runs, invertibility "
        "certification, Monte Carlo validation, and theory tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run solver trials and write trajectories")
    _add_common(p_run)
    p_run.add_argument("--n", type=int, help="signal dimension")
    p_run.add_argument("--k", type=int, help="sparsity")
    p_run.add_argument("--m", type=int, help="measurement count")
    p_run.add_argument("--trials", type=int, help="number of independent trials")
    p_run.add_argument("--iters", type=int, help="solver iterations per trial")
    p_run.add_argument("--eta", type=float, help="step size (default sqrt(2 pi))")
    p_run.add_argument("--output-dir", default=".", help="directory for output files")
    p_run.set_defaults(func=cmd_run)

    p_raic = sub.add_parser("raic", help="sampled invertibility certificate")
    _add_common(p_raic)
    p_raic.add_argument("--n", type=int)
    p_raic.add_argument("--k", type=int)
    p_raic.add_argument("--m", type=int)
    p_raic.add_argument("--delta", type=float, help="resolution of the certificate")
    p_raic.add_argument("--pairs", type=int, help="sampled vector pairs")
    p_raic.add_argument("--small-pairs", dest="small_pairs", type=int,
                        help="pairs forced below the small-distance threshold")
    p_raic.add_argument("--max-j", dest="max_j", type=int,
                        help="cap on |J| (default k; 2k probes the wider restriction)")
    p_raic.add_argument("--output-dir", default=".")
    p_raic.set_defaults(func=cmd_raic)

    p_val = sub.add_parser("validate", help="run the Monte Carlo validator battery")
    _add_common(p_val)
    p_val.add_argument("--output-dir", default=".")
    p_val.add_argument("--break-sgn-zero", action="store_true",
                       help="fault injection: corrupt the sign convention so the "
                            "mismatch validators must fail (self-test)")
    p_val.set_defaults(func=cmd_validate)

    p_theory = sub.add_parser("theory", help="print constants and bound tables")
    _add_common(p_theory)
    p_theory.add_argument("--epsilon", type=float)
    p_theory.add_argument("--rho", type=float)
    p_theory.add_argument("--k", type=int)
    p_theory.add_argument("--n", type=int)
    p_theory.set_defaults(func=cmd_theory)

    p_gen = sub.add_parser("generate", help="write a matrix or signal to file")
    _add_common(p_gen)
    p_gen.add_argument("--what", choices=("matrix", "signal"), required=True)
    p_gen.add_argument("--out", required=True, help="output path")
    p_gen.add_argument("--format", choices=("csv", "bin"), default="csv")
    p_gen.add_argument("--n", type=int)
    p_gen.add_argument("--k", type=int)
    p_gen.add_argument("--m", type=int)
    p_gen.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:  # domain violation
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
