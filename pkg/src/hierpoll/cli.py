"""Batch command-line front end.

Subcommands cover dominance certification of channel files, the two canned
benchmark experiments, grid solving, simulation, capacity and divergence
reports, and EM parameter estimation. Every command is deterministic given
--seed and emits byte-stable CSV bodies (metadata in '#' comments) or JSON.
Exit code 0 means every verification the command ran has passed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .channels import approximate_blackwell_chain, lecam_deficiency
from .errors import HierPollError
from .estimate import em_fit, load_observations
from .fileio import (
    chain_to_dict,
    load_channel,
    load_model,
    render_table,
    standard_meta,
    write_output,
)
from .infotheory import channel_divergences, shannon_capacity
from .pomdp import (
    value_iteration,
    verify_myopic_bound,
)
from .presets import (
    example1_model,
    example2_parts,
    example2_polynomials,
    intent_weight_audit,
)
from .pomdp import PollingModel
from .sim import (
    FixedPolicy,
    GridPolicy,
    MyopicPolicy,
    estimate_cost,
    l1_components,
    l2_components,
    uniform_belief,
)
from .stochastic import is_hurwitz, polynomial_quotient, eval_matrix_polynomial


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=os.cpu_count(),
                   help="worker cap; results are independent of it")


def _rho_list(text: str) -> list[float]:
    vals = [float(t) for t in text.split(",") if t.strip() != ""]
    for v in vals:
        if not 0.0 <= v < 1.0:
            raise argparse.ArgumentTypeError(f"rho {v} outside [0, 1)")
    return vals


def _pair_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0] % (2 ** 31))


# ------------------------------------------------------------------ commands
def cmd_dominance(args) -> int:
    channels = [load_channel(f) for f in args.channels]
    if len(channels) < 2:
        print("error: need at least two channel files", file=sys.stderr)
        return 2
    n = len(channels)

    def deficiency(pair):
        i, j = pair
        return i, j, lecam_deficiency(channels[j], channels[i], tol=args.tol).delta

    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    with ThreadPoolExecutor(max_workers=args.threads) as ex:
        results = list(ex.map(deficiency, pairs))
    pairwise = np.zeros((n, n))
    for i, j, d in results:
        pairwise[i, j] = d
    chain = approximate_blackwell_chain(channels, tol=args.tol)
    certified = chain.is_certified(args.cert_tol)
    for u, d in enumerate(chain.deficiencies):
        mark = "certified" if d <= args.cert_tol else "NOT certified"
        print(f"# O({u + 1}) >= O({u + 2}): deficiency {d:.3e} ({mark})",
              file=sys.stderr)
    report = {
        "meta": standard_meta({"channels": args.channels, "tol": args.tol}, args.seed),
        "pairwise_deficiency": pairwise.tolist(),
        "chain": chain_to_dict(chain),
        "certified": certified,
    }
    if args.format == "json":
        write_output(json.dumps(report, indent=2) + "\n", args.out)
    else:
        rows = [(i + 1, j + 1, pairwise[i, j]) for i in range(n) for j in range(n) if i != j]
        write_output(render_table(("dominating", "dominated", "deficiency"), rows,
                                  "csv", report["meta"]), args.out)
    return 0 if certified else 1


RESULT_COLUMNS = ("rho", "metric", "value", "stderr", "runs", "horizon", "seed")


def cmd_example1(args) -> int:
    meta_src = {"cmd": "example1", "rho": args.rho_list, "grid_m": args.grid_m,
                "runs": args.runs, "horizon": args.horizon}
    ok = True
    rows = []
    pi0 = uniform_belief(3)
    for rho in args.rho_list:
        model = example1_model(rho)
        report = verify_myopic_bound(model, args.grid_m, tol=args.vi_tol)
        print(f"# rho={rho}: chain deficiencies {['%.2e' % d for d in report.deficiencies]}, "
              f"myopic bound: {len(report.violations)} violations on "
              f"{report.grid_points}-point grid (M={args.grid_m})", file=sys.stderr)
        ok &= report.holds
        gvf = value_iteration(model, args.grid_m, tol=args.vi_tol)
        j_bar, j_opt = l1_components(model, args.grid_m, args.runs, args.horizon,
                                     args.seed, pi0, gvf=gvf)
        value = (j_bar.mean - j_opt.mean) / j_opt.mean
        stderr = float(np.hypot(j_bar.stderr, j_opt.stderr) / j_opt.mean)
        rows.append((rho, "L1", value, stderr, args.runs, args.horizon, args.seed))
    text = render_table(RESULT_COLUMNS, rows, args.format,
                        standard_meta(meta_src, args.seed))
    write_output(text, args.out)
    return 0 if ok else 1


def cmd_example2(args) -> int:
    meta_src = {"cmd": "example2", "rho": args.rho_list, "states": args.states,
                "pairs": args.pairs, "runs": args.runs, "horizon": args.horizon}
    total, deviation, _ = intent_weight_audit()
    print(f"# weight audit: printed sum = {total} (deviation {deviation:.4e}); "
          f"normalized before use", file=sys.stderr)
    polys = example2_polynomials()
    degrees = [p.degree for p in polys]
    all_hurwitz = all(is_hurwitz(p) for p in polys)
    print(f"# deflation audit: degrees f_1..f_5 = {degrees}, "
          f"all convex Hurwitz: {all_hurwitz}", file=sys.stderr)
    quotients = [polynomial_quotient(polys[u + 1], polys[u]) for u in range(4)]
    ok = all_hurwitz
    pi0 = np.zeros(args.states)
    pi0[0] = 1.0

    def run_pair(p):
        P, B, channels, costs = example2_parts(args.states, [args.seed, p],
                                               ctilde_weight=args.ctilde_weight)
        residual = 0.0
        for u in range(4):
            garbling = eval_matrix_polynomial(quotients[u], B).entries
            diff = channels[u + 1].matrix.entries - channels[u].matrix.entries @ garbling
            residual = max(residual, float(np.abs(diff).sum(axis=1).max()))
        losses = []
        for rho in args.rho_list:
            model = PollingModel(P=P, channels=channels, costs=costs, rho=rho)
            j_bar, j_tilde = l2_components(model, args.runs, args.horizon,
                                           _pair_seed(args.seed, p), pi0=pi0)
            losses.append(((j_bar.mean - j_tilde.mean) / j_tilde.mean,
                           float(np.hypot(j_bar.stderr, j_tilde.stderr) / j_tilde.mean)))
        return residual, losses

    with ThreadPoolExecutor(max_workers=args.threads) as ex:
        results = list(ex.map(run_pair, range(args.pairs)))
    worst_residual = max(r for r, _ in results)
    print(f"# chain audit: worst quotient-garbling residual over {args.pairs} "
          f"draws = {worst_residual:.3e}", file=sys.stderr)
    ok &= worst_residual <= 1e-6
    values = np.array([[v for v, _ in losses] for _, losses in results])
    errors = np.array([[e for _, e in losses] for _, losses in results])
    rows = [(rho, "L2", float(values[:, k].mean()),
             float(np.sqrt((errors[:, k] ** 2).sum()) / args.pairs),
             args.runs, args.horizon, args.seed)
            for k, rho in enumerate(args.rho_list)]
    text = render_table(RESULT_COLUMNS, rows, args.format,
                        standard_meta(meta_src, args.seed))
    write_output(text, args.out)
    return 0 if ok else 1


def cmd_solve(args) -> int:
    model, payload = load_model(args.config)
    gvf = value_iteration(model, args.grid_m, tol=args.vi_tol)
    cols = tuple(f"pi_{i + 1}" for i in range(model.n_states)) + ("value", "action")
    rows = [tuple(pt) + (float(v), int(a))
            for pt, v, a in zip(gvf.points, gvf.values, gvf.policy)]
    meta = standard_meta({"cmd": "solve", "config": payload, "grid_m": args.grid_m},
                         args.seed)
    meta["sweeps"] = gvf.sweeps
    write_output(render_table(cols, rows, args.format, meta), args.out)
    return 0 if gvf.converged else 1


def _make_policy(name: str, model, grid_m: int, vi_tol: float):
    if name == "myopic":
        return MyopicPolicy()
    if name.startswith("fixed:"):
        return FixedPolicy(int(name.split(":", 1)[1]))
    if name == "grid":
        return GridPolicy(value_iteration(model, grid_m, tol=vi_tol))
    raise HierPollError(f"unknown policy {name!r}")


def cmd_simulate(args) -> int:
    model, payload = load_model(args.config)
    pi0 = (uniform_belief(model.n_states) if args.pi0 is None
           else np.asarray([float(t) for t in args.pi0.split(",")]))
    policy = _make_policy(args.policy, model, args.grid_m, args.vi_tol)
    est = estimate_cost(model, policy, pi0, args.horizon, args.runs, args.seed)
    meta = standard_meta({"cmd": "simulate", "config": payload,
                          "policy": args.policy, "runs": args.runs,
                          "horizon": args.horizon}, args.seed)
    rows = [(est.mean, est.stderr, est.runs, est.horizon, est.seed,
             est.truncation_bias)]
    write_output(render_table(("mean", "stderr", "runs", "horizon", "seed",
                               "truncation_bias"), rows, args.format, meta), args.out)
    return 0


def cmd_capacity(args) -> int:
    rows = []
    for f in args.channels:
        cap, _ = shannon_capacity(load_channel(f), tol=args.tol)
        rows.append((f, cap))
    meta = standard_meta({"cmd": "capacity", "channels": args.channels}, args.seed)
    write_output(render_table(("channel", "capacity_bits"), rows, args.format, meta),
                 args.out)
    return 0


def cmd_renyi(args) -> int:
    ch = load_channel(args.channel)
    alphas = [float(t) for t in args.alphas.split(",")]
    div = channel_divergences(ch, alphas)
    rows = []
    for i in range(div.shape[0]):
        for j in range(div.shape[1]):
            if i == j:
                continue
            for a, alpha in enumerate(alphas):
                rows.append((f"{i + 1}-{j + 1}", alpha, float(div[i, j, a])))
    meta = standard_meta({"cmd": "renyi", "channel": args.channel,
                          "alphas": alphas}, args.seed)
    write_output(render_table(("pair", "alpha", "divergence"), rows, args.format,
                              meta), args.out)
    return 0


def cmd_estimate(args) -> int:
    data = load_observations(args.data)
    est = em_fit(data, X=args.states, max_iter=args.max_iter, tol=args.tol,
                 seed=args.seed)
    meta = standard_meta({"cmd": "estimate", "data": args.data,
                          "states": args.states, "max_iter": args.max_iter},
                         args.seed)
    if args.format == "json":
        payload = {"meta": meta,
                   "transition": est.transition.entries.tolist(),
                   "emission": est.emission.entries.tolist(),
                   "log_likelihoods": est.log_likelihoods.tolist(),
                   "iterations": est.iterations,
                   "converged": est.converged}
        write_output(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        meta["transition"] = json.dumps(est.transition.entries.tolist())
        meta["emission"] = json.dumps(est.emission.entries.tolist())
        meta["converged"] = est.converged
        rows = list(enumerate(est.log_likelihoods))
        write_output(render_table(("iteration", "log_likelihood"), rows, "csv",
                                  meta), args.out)
    trace_ok = bool(np.all(np.diff(est.log_likelihoods) >= -1e-8))
    return 0 if trace_ok else 1


# -------------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hierpoll",
        description="Adaptive polling of hierarchical networks: dominance "
                    "certification, belief-grid planning, loss metrics, and "
                    "parameter estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dominance", help="certify a dominance chain from channel files")
    p.add_argument("channels", nargs="+", help="channel JSON/CSV files, most informative first")
    p.add_argument("--tol", type=float, default=1e-9, help="LP pivot tolerance")
    p.add_argument("--cert-tol", type=float, default=1e-7,
                   help="deficiency below which a step counts as certified")
    _add_common(p)
    p.set_defaults(func=cmd_dominance)

    p = sub.add_parser("example1", help="three-state benchmark: myopic-vs-optimal loss sweep")
    p.add_argument("--rho-list", type=_rho_list,
                   default=[round(0.1 * k, 1) for k in range(10)])
    p.add_argument("--grid-m", type=int, default=60)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--vi-tol", type=float, default=1e-8)
    _add_common(p)
    p.set_defaults(func=cmd_example1)

    p = sub.add_parser("example2", help="large randomized benchmark: proxy-bound loss sweep")
    p.add_argument("--rho-list", type=_rho_list,
                   default=[round(0.1 * k, 1) for k in range(10)])
    p.add_argument("--states", type=int, default=20)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--ctilde-weight", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=cmd_example2)

    p = sub.add_parser("solve", help="value iteration on a model config")
    p.add_argument("--config", required=True)
    p.add_argument("--grid-m", type=int, default=60)
    p.add_argument("--vi-tol", type=float, default=1e-8)
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="Monte Carlo cost estimate on a model config")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", default="myopic", help="myopic | fixed:U | grid")
    p.add_argument("--grid-m", type=int, default=60)
    p.add_argument("--vi-tol", type=float, default=1e-8)
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--horizon", type=int, default=100)
    p.add_argument("--pi0", default=None, help="comma-separated initial belief")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("capacity", help="channel capacities in bits")
    p.add_argument("channels", nargs="+")
    p.add_argument("--tol", type=float, default=1e-10)
    _add_common(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("renyi", help="all-pairs row divergences of a channel")
    p.add_argument("channel")
    p.add_argument("--alphas", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    _add_common(p)
    p.set_defaults(func=cmd_renyi)

    p = sub.add_parser("estimate", help="EM fit of (P, B) from an observation dataset")
    p.add_argument("data")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p)
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HierPollError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
