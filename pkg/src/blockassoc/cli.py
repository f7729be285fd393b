"""Unified command-line front end.

Every subcommand reads the core JSON schemas, prints a human-readable
summary, optionally writes a full report as JSON, and exits with
0 = PASS, 1 = VIOLATION, 2 = INCONCLUSIVE, 3 = input or usage error.
All randomness flows from the single --seed flag; the report embeds the
resolved configuration so deterministic runs are byte-reproducible
(timestamps are isolated in one metadata field).
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .checkers import (
    gaussian_block_association,
    id_process_support_check,
    id_sufficient_conditions,
    l_superadditivity_check,
    levy_support_equivalence,
    mixed_derivative_check,
)
from .core import ERROR, INCONCLUSIVE, PASS, VIOLATION, TimeGrid, Verdict
from .io import (
    load_covfun,
    load_distribution,
    load_levy,
    load_matrix,
    load_triplet,
    load_ma_model,
    parse_blocks,
    parse_source,
    read_json,
)
from .limits import run_clt_experiment, run_invariance_check
from .mctest import (
    HpsReport,
    McConfig,
    SmoothFunction,
    exact_discrete_association_witness,
    exact_discrete_block_association_witness,
    hps_formula_verify,
    mc_block_association_test,
    mc_negative_block_association_test,
    mc_weak_block_association_test,
    replay_witness,
)
from .simulate import rng_for

EXIT_CODES = {PASS: 0, VIOLATION: 1, INCONCLUSIVE: 2, ERROR: 3}


def _report(args: argparse.Namespace, payload: dict) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None}
    return {
        "tool": "blockassoc",
        "version": __version__,
        "config": config,
        **payload,
        "metadata": {"timestamp": datetime.now(timezone.utc).isoformat()},
    }


def _emit(args, payload: dict, status: str) -> int:
    report = _report(args, payload)
    text = json.dumps(report, indent=2, sort_keys=True, default=_jsonable)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if getattr(args, "format", "table") == "json" or not out:
        pass
    print(f"status: {status}")
    for key in ("verdict", "report"):
        if key in payload and isinstance(payload[key], dict):
            _print_table(payload[key])
    return EXIT_CODES[status]


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")

def _print_table(d: dict, indent: str = "  "):
    for k, v in d.items():
        if isinstance(v, dict):
            print(f"{indent}{k}:")
            _print_table(v, indent + "  ")
        else:
            text = json.dumps(v, default=_jsonable)
            if len(text) > 100:
                text = text[:97] + "..."
            print(f"{indent}{k}: {text}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_check_gaussian(args) -> int:
    sigma = load_matrix(args.sigma)
    blocks = parse_blocks(args.blocks, sigma.dim)
    verdict = gaussian_block_association(sigma, blocks)
    return _emit(args, {"verdict": verdict.to_dict()}, verdict.status)


def cmd_check_id(args) -> int:
    triplet = load_triplet(args.triplet)
    blocks = parse_blocks(args.blocks, triplet.dim)
    verdict = id_sufficient_conditions(triplet, blocks)
    return _emit(args, {"verdict": verdict.to_dict()}, verdict.status)


def cmd_check_support(args) -> int:
    nu = load_levy(args.levy)
    blocks = parse_blocks(args.blocks, nu.dim)
    via_pairs, via_support = levy_support_equivalence(nu, blocks)
    status = PASS if (via_pairs and via_support) else INCONCLUSIVE
    payload = {
        "verdict": {
            "status": status,
            "evidence": {
                "via_pair_projections": via_pairs,
                "via_support_set": via_support,
            },
            "statistics": {"atoms": len(nu)},
        }
    }
    return _emit(args, payload, status)


def cmd_check_covfun(args) -> int:
    K = load_covfun(args.covfun)
    times = [float(t) for t in args.times.split(",")]
    if args.mixed_derivative:
        verdict = mixed_derivative_check(K, [t for t in times if t > 0], h=args.step)
    else:
        verdict = l_superadditivity_check(K, times)
    return _emit(args, {"verdict": verdict.to_dict()}, verdict.status)


def cmd_oracle(args) -> int:
    dist = load_distribution(args.dist)
    if args.blocks:
        blocks = parse_blocks(args.blocks, dist.dim)
        ok, witness = exact_discrete_block_association_witness(dist, blocks, budget=args.budget)
    else:
        ok, witness = exact_discrete_association_witness(dist, budget=args.budget)
    verdict = Verdict(PASS if ok else VIOLATION, evidence=witness or {},
                      statistics={"exact": True, "support_size": len(dist)})
    return _emit(args, {"verdict": verdict.to_dict()}, verdict.status)


def cmd_mc_test(args) -> int:
    source = parse_source(args.source)
    blocks = parse_blocks(args.blocks, source.dim)
    cfg = McConfig(n_samples=args.n, n_pairs=args.m, alpha_sig=args.alpha, seed=args.seed)
    test = {
        "block": mc_block_association_test,
        "weak": mc_weak_block_association_test,
        "negative": mc_negative_block_association_test,
    }[args.mode]
    verdict = test(source, blocks, cfg)
    return _emit(args, {"verdict": verdict.to_dict()}, verdict.status)


def cmd_simulate(args) -> int:
    source = parse_source(args.source)
    data = source.sample(args.count, rng_for(args.seed, 0))
    header = ",".join(f"x{i+1}" for i in range(data.shape[1]))
    if args.out.endswith(".npy"):
        np.save(args.out, data)
    else:
        np.savetxt(args.out, data, delimiter=",", header=header, comments="")
    meta = {
        "source": source.spec(),
        "seed": args.seed,
        "streams": 1,
        "count": int(data.shape[0]),
        "dim": int(data.shape[1]),
    }
    with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    # the data file owns args.out; report only to stdout
    quiet = argparse.Namespace(**{**vars(args), "out": None})
    return _emit(quiet, {"report": meta}, PASS)


def cmd_hps_verify(args) -> int:
    triplet = load_triplet(args.triplet)
    rng = rng_for(args.seed, 10)
    psi1 = SmoothFunction.random_tanh(triplet.dim, rng)
    psi2 = SmoothFunction.random_tanh(triplet.dim, rng)
    report = hps_formula_verify(
        triplet, psi1, psi2, n_samples=args.n, n_nodes=args.nodes, seed=args.seed
    )
    status = PASS if report.agree else VIOLATION
    payload = {"report": report.to_dict()}
    if not report.agree:
        payload["report"]["witness"] = {"psi1": psi1.params, "psi2": psi2.params}
    return _emit(args, payload, status)


def cmd_clt(args) -> int:
    model = load_ma_model(args.model)
    if args.times:
        times = [float(t) for t in args.times.split(",")]
        report = run_invariance_check(
            model, n=args.n, times=times, reps=args.reps, seed=args.seed,
            override_hypothesis=args.override_hypothesis,
        )
    else:
        report = run_clt_experiment(
            model, n=args.n, reps=args.reps, seed=args.seed,
            override_hypothesis=args.override_hypothesis,
        )
    status = PASS if report.passed else VIOLATION
    return _emit(args, {"report": report.to_dict()}, status)


def cmd_replay(args) -> int:
    data = read_json(args.witness)
    witness = data
    # accept either a bare witness or a full report with an embedded one
    for key in ("verdict", "evidence", "witness"):
        if isinstance(witness, dict) and key in witness:
            witness = witness[key]
    if not isinstance(witness, dict) or "functions" not in witness:
        print("error: file contains no replayable violation witness", file=sys.stderr)
        return 3
    verdict = replay_witness(witness, seed=args.seed)
    return _emit(args, {"verdict": verdict.to_dict()}, verdict.status)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="blockassoc",
        description="Checkers, samplers and Monte Carlo testers for association "
        "between blocks of multivariate stochastic processes.",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--out", help="write the full JSON report to this path")
        p.add_argument("--format", choices=["json", "csv", "table"], default="table")
        return p

    p = add("check-gaussian", cmd_check_gaussian, "exact Gaussian block-association check")
    p.add_argument("--sigma", required=True, help="covariance matrix JSON (file or inline)")
    p.add_argument("--blocks", required=True, help="partition: JSON lists, 'singleton' or 'single'")

    p = add("check-id", cmd_check_id, "sufficient conditions for an ID vector")
    p.add_argument("--triplet", required=True, help="triplet JSON: drift, gaussian, levy")
    p.add_argument("--blocks", required=True)

    p = add("check-support", cmd_check_support, "jump-measure support condition, both routes")
    p.add_argument("--levy", required=True, help='jump measure JSON {"atoms": [...]}')
    p.add_argument("--blocks", required=True)

    p = add("check-covfun", cmd_check_covfun, "rectangle / mixed-derivative covariance check")
    p.add_argument("--covfun", required=True, help="covariance function JSON spec")
    p.add_argument("--times", required=True, help="comma-separated time list")
    p.add_argument("--mixed-derivative", action="store_true")
    p.add_argument("--step", type=float, default=1e-3, help="finite-difference step")

    p = add("oracle", cmd_oracle, "exact association oracle on a finite discrete law")
    p.add_argument("--dist", required=True, help="distribution JSON: support, probs")
    p.add_argument("--blocks", help="optional partition for the block variant")
    p.add_argument("--budget", type=int, default=50_000)

    p = add("mc-test", cmd_mc_test, "Monte Carlo association falsification test")
    p.add_argument("--source", required=True,
                   help="source spec JSON (file/inline) or 'brownian-antithetic'")
    p.add_argument("--blocks", required=True)
    p.add_argument("--mode", choices=["block", "weak", "negative"], default="block")
    p.add_argument("--n", type=int, default=100_000, help="sample count")
    p.add_argument("--m", type=int, default=200, help="function-pair count")
    p.add_argument("--alpha", type=float, default=0.01, help="familywise significance")
    p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("simulate", help="write a sample batch with sidecar metadata")
    p.set_defaults(func=cmd_simulate)
    p.add_argument("--format", choices=["json", "csv", "table"], default="table")
    p.add_argument("--source", required=True)
    p.add_argument("--count", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="output path (.csv or .npy)")

    p = add("hps-verify", cmd_hps_verify, "verify the covariance interpolation identity")
    p.add_argument("--triplet", required=True)
    p.add_argument("--n", type=int, default=100_000, help="samples per quadrature node")
    p.add_argument("--nodes", type=int, default=8, help="Gauss-Legendre nodes")
    p.add_argument("--seed", type=int, default=42)

    p = add("clt", cmd_clt, "partial-sum limit experiment for a Gaussian MA model")
    p.add_argument("--model", required=True, help="MA model JSON: innovation_cov, thetas")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--times", help="comma-separated times in (0,1]; runs the invariance check")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--override-hypothesis", action="store_true",
                   help="run even if the weak block-association certificate fails")

    p = add("replay", cmd_replay, "re-evaluate a recorded violation witness")
    p.add_argument("witness", help="witness JSON (or a report containing one)")
    p.add_argument("--seed", type=int, help="override the recorded seed")

    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the contract says 3
        return 0 if exc.code == 0 else 3
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
