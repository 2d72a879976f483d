"""Command-line surface.

Subcommands: simulate, sweep, surface, importance, estimate, analytic,
surrogate, baseline.  Exit codes: 0 success, 1 validation error, 2 io error.
Randomized subcommands take --seed; when omitted a seed is generated and
printed so the run can be reproduced.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from math import comb

import numpy as np

from .errors import InputError, VnomError
from .experiments import SweepSpec, gamma_surface, run_sweep
from .graph import Partition
from .importance import (ScreeningThresholds, estimate_rates, run_importance_trials,
                         screen_partitions)
from .kidney_egg import (KidneyEggParams, Simplex3, content_pmf_from_conditionals,
                         content_score_pmf, context_score_pmf, empirical_score_pmfs,
                         sample_kidney_egg, tv_distance)
from .metrics import chance_baseline, evaluate_ranking
from .nomination import GAMMA_GRID_DEFAULT, rank_candidates
from . import io as vio


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (validation) instead of 2 on bad usage."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_seed(parser):
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed; generated and printed when omitted")


def _resolve_seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(48)
        print(f"seed: {args.seed}")
    return args.seed


def _parse_gammas(text: str):
    if text == "grid":
        return GAMMA_GRID_DEFAULT
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise InputError(f"malformed gamma list {text!r}") from None


def _parse_int_list(text: str):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise InputError(f"malformed integer list {text!r}") from None


def _write_or_print(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def build_parser() -> _Parser:
    parser = _Parser(prog="vnom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="one model sample plus a nomination report",
                         parents=[], add_help=True)
    _model_flags(sim, with_m=True)
    sim.add_argument("--gamma", type=float, default=0.5)
    sim.add_argument("--top", type=int, default=10, help="ranked prefix length to print")
    sim.add_argument("--save-graph", default=None, help="write the sampled graph here")
    _add_seed(sim)

    sw = sub.add_parser("sweep", help="Monte Carlo sweep over m with derived m'")
    sw.add_argument("--n", type=int, default=184)
    sw.add_argument("--p0", type=float, default=0.6)
    sw.add_argument("--p1", type=float, default=0.2)
    sw.add_argument("--p2", type=float, default=0.2)
    sw.add_argument("--s1", type=float, default=0.4,
                    help="red-edge rate inside the block; s2 is pinned to p2")
    sw.add_argument("--m-list", default="4,8,12,16,20,24,28,32,36,40")
    sw.add_argument("--m-prime-ratio", type=float, default=0.25)
    sw.add_argument("--m-prime-list", default=None,
                    help="explicit m' per m, overrides --m-prime-ratio")
    sw.add_argument("--gammas", default="0,0.5,1")
    sw.add_argument("--replicates", type=int, default=1000)
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out", default=None)
    sw.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_seed(sw)

    su = sub.add_parser("surface", help="truncated-AP surface over (y, gamma)")
    _model_flags(su, with_m=True)
    su.add_argument("--y-max", type=int, default=3)
    su.add_argument("--gammas", default="grid")
    su.add_argument("--replicates", type=int, default=1000)
    su.add_argument("--out", default=None)
    su.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_seed(su)

    imp = sub.add_parser("importance",
                         help="screen partitions of a topic graph and run trials")
    imp.add_argument("--graph", required=True, help="topic-graph file")
    imp.add_argument("--m", type=int, default=10)
    imp.add_argument("--m-prime", type=int, default=5)
    imp.add_argument("--tau-rho", type=float, default=0.1)
    imp.add_argument("--tau-p", type=float, default=0.2)
    imp.add_argument("--attempts", type=int, default=100_000)
    imp.add_argument("--bins", type=float, default=0.1, help="bin width on both axes")
    imp.add_argument("--gammas", default="0,0.5,1")
    imp.add_argument("--replicates", type=int, default=10,
                     help="instantiations per accepted partition")
    imp.add_argument("--max-partitions", type=int, default=None,
                     help="run trials on at most this many accepted partitions")
    imp.add_argument("--unweighted-profiles", action="store_true",
                     help="weight every edge equally in topic profiles")
    imp.add_argument("--workers", type=int, default=1)
    imp.add_argument("--out", default=None)
    imp.add_argument("--partitions-out", default=None,
                     help="also write the raw per-partition table here (csv)")
    imp.add_argument("--rates-out", default=None,
                     help="also write MRR binned by estimated edge rates (csv)")
    imp.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_seed(imp)

    est = sub.add_parser("estimate", help="edge-rate estimates from a graph + partition")
    est.add_argument("--graph", required=True, help="attributed-graph file")
    est.add_argument("--red", default=None,
                     help="comma-separated red vertex ids (default: the graph's truth)")

    an = sub.add_parser("analytic", help="exact score PMFs and MC-vs-analytic distances")
    _model_flags(an, with_m=True)
    an.add_argument("--samples", type=int, default=0,
                    help="empirical samples for TV distances (0 = analytic only)")
    an.add_argument("--out", default=None)
    an.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_seed(an)

    sur = sub.add_parser("surrogate", help="generate a synthetic topic-graph corpus")
    sur.add_argument("--n", type=int, default=184)
    sur.add_argument("--k", type=int, default=32)
    sur.add_argument("--density", type=float, default=0.05)
    sur.add_argument("--group-size", type=int, default=44)
    sur.add_argument("--group-density", type=float, default=0.62)
    sur.add_argument("--tilt", type=float, default=0.5)
    sur.add_argument("--concentration", type=float, default=150.0)
    sur.add_argument("--mean-extra-messages", type=float, default=1.0)
    sur.add_argument("--out", required=True)
    _add_seed(sur)

    base = sub.add_parser("baseline", help="chance value of a metric")
    base.add_argument("--candidates", type=int, required=True)
    base.add_argument("--reds", type=int, required=True)
    base.add_argument("--criterion", choices=("s_at_1", "mrr", "map", "ap_y"),
                      required=True)
    base.add_argument("--y", type=int, default=None)
    base.add_argument("--mc-samples", type=int, default=100_000)
    _add_seed(base)

    return parser


def _model_flags(parser, with_m: bool):
    parser.add_argument("--n", type=int, default=184)
    if with_m:
        parser.add_argument("--m", type=int, default=40)
        parser.add_argument("--m-prime", type=int, default=10)
    parser.add_argument("--p0", type=float, default=0.6)
    parser.add_argument("--p1", type=float, default=0.2)
    parser.add_argument("--p2", type=float, default=0.2)
    parser.add_argument("--s0", type=float, default=0.4)
    parser.add_argument("--s1", type=float, default=0.4)
    parser.add_argument("--s2", type=float, default=0.2)


def _params_from(args) -> KidneyEggParams:
    return KidneyEggParams(args.n, args.m, args.m_prime,
                           Simplex3(args.p0, args.p1, args.p2),
                           Simplex3(args.s0, args.s1, args.s2))


def _cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    params = _params_from(args)
    sample_seed, tie_seed = np.random.SeedSequence(seed).spawn(2)
    g = sample_kidney_egg(params, sample_seed)
    ranking = rank_candidates(g, args.gamma, tie_seed)
    report = evaluate_ranking(ranking, g.red_candidates())
    doc = {
        "seed": seed,
        "params": {"n": params.n, "m": params.m, "m_prime": params.m_prime,
                   "p": list(params.p.as_array()), "s": list(params.s.as_array())},
        "gamma": args.gamma,
        "edges": g.num_edges,
        "top": [{"vertex": int(v), "score": float(s), "truth_red": bool(g.truth[v] == 1)}
                for v, s in zip(ranking.ordered[:args.top], ranking.scores[:args.top])],
        "report": {"s_at_1": report.s_at_1, "rr": report.rr, "ap": report.ap},
    }
    if args.save_graph:
        vio.write_attributed_graph(g, args.save_graph, {"seed": seed})
        doc["graph_file"] = args.save_graph
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    p = Simplex3(args.p0, args.p1, args.p2)
    s2 = args.p2  # the sweep design pins the green-content rate across the graph
    s = Simplex3(1.0 - args.s1 - s2, args.s1, s2)
    spec = SweepSpec(
        n=args.n, p=p, s=s,
        m_values=_parse_int_list(args.m_list),
        gamma_grid=_parse_gammas(args.gammas),
        replicates=args.replicates,
        master_seed=seed,
        m_prime_ratio=None if args.m_prime_list else args.m_prime_ratio,
        m_prime_values=_parse_int_list(args.m_prime_list) if args.m_prime_list else None,
        enforce_s2_eq_p2=True,
    )
    result = run_sweep(spec, n_workers=args.workers)
    text = (vio.sweep_to_csv(result) if args.format == "csv"
            else vio.sweep_to_json(result))
    _write_or_print(text, args.out)
    return 0


def _cmd_surface(args) -> int:
    seed = _resolve_seed(args)
    params = _params_from(args)
    result = gamma_surface(params, _parse_gammas(args.gammas), args.y_max,
                           args.replicates, seed)
    config = {"n": params.n, "m": params.m, "m_prime": params.m_prime,
              "p": list(params.p.as_array()), "s": list(params.s.as_array()),
              "y_max": args.y_max, "replicates": args.replicates, "seed": seed}
    text = (vio.surface_to_csv(result, config) if args.format == "csv"
            else vio.surface_to_json(result, config))
    _write_or_print(text, args.out)
    return 0


def _cmd_importance(args) -> int:
    seed = _resolve_seed(args)
    g = vio.read_topic_graph(args.graph)
    thresholds = ScreeningThresholds(args.tau_rho, args.tau_p)
    weighted = not args.unweighted_profiles
    screening = screen_partitions(g, args.m, thresholds, args.attempts,
                                  np.random.SeedSequence(entropy=seed, spawn_key=(1,)),
                                  weighted=weighted)
    config = {"graph": args.graph, "m": args.m, "m_prime": args.m_prime,
              "tau_rho": args.tau_rho, "tau_p": args.tau_p,
              "attempts": args.attempts, "bin_width": args.bins,
              "gammas": args.gammas, "replicates": args.replicates,
              "weighted_profiles": weighted, "seed": seed,
              "max_partitions": args.max_partitions}
    if screening.n_accepted == 0:
        print(json.dumps({"accepted": 0, "attempts": screening.attempts,
                          "acceptance_rate": 0.0,
                          "note": "no partition passed both thresholds"}, indent=2))
        return 0
    accepted = screening.accepted
    if args.max_partitions is not None:
        accepted = accepted[:args.max_partitions]
    trials = run_importance_trials(
        g, accepted, args.m_prime, _parse_gammas(args.gammas), args.replicates,
        np.random.SeedSequence(entropy=seed, spawn_key=(2,)),
        bin_width=args.bins, n_workers=args.workers)
    text = (vio.trials_to_csv(screening, trials, config) if args.format == "csv"
            else vio.trials_to_json(screening, trials, config))
    _write_or_print(text, args.out)
    if args.partitions_out:
        with open(args.partitions_out, "w", encoding="utf-8") as fh:
            fh.write(vio.partitions_to_csv(trials, config))
    if args.rates_out:
        with open(args.rates_out, "w", encoding="utf-8") as fh:
            fh.write(vio.rate_bins_csv(trials, config))
    return 0


def _cmd_estimate(args) -> int:
    g = vio.read_attributed_graph(args.graph)
    if args.red is not None:
        red_ids = _parse_int_list(args.red)
    else:
        red_ids = g.red_set()
    part = Partition(g.n, np.asarray(red_ids))
    est = estimate_rates(g, part)
    print(json.dumps({"p1_hat": est.p1, "p2_hat": est.p2,
                      "s1_hat": est.s1, "s2_hat": est.s2,
                      "m": part.num_red, "n": g.n}, indent=2, sort_keys=True))
    return 0


def _cmd_analytic(args) -> int:
    params = _params_from(args)
    tables = {
        ("context", "green"): context_score_pmf(params, 2),
        ("context", "red"): context_score_pmf(params, 1),
        ("content", "green"): content_score_pmf(params, 2),
        ("content", "red"): content_score_pmf(params, 1),
        ("content_mixture", "green"): content_pmf_from_conditionals(params, 2),
        ("content_mixture", "red"): content_pmf_from_conditionals(params, 1),
    }
    config = {"n": params.n, "m": params.m, "m_prime": params.m_prime,
              "p": list(params.p.as_array()), "s": list(params.s.as_array()),
              "samples": args.samples}
    tv_rows = []
    if args.samples > 0:
        seed = _resolve_seed(args)
        config["seed"] = seed
        empirical = empirical_score_pmfs(params, args.samples, seed)
        for cls in ("green", "red"):
            for kind in ("context", "content"):
                tv = tv_distance(empirical[cls][kind], tables[(kind, cls)])
                tv_rows.append((kind, cls, tv))
    if args.format == "csv":
        text = vio.pmf_table_csv(tables, tv_rows, config)
    else:
        doc = {"meta": {"kind": "analytic", "config": config},
               "data": {
                   "pmfs": {f"{stat}/{cls}": pmf.probs.tolist()
                            for (stat, cls), pmf in tables.items()},
                   "tv": [{"statistic": s, "vertex_class": c, "value": v}
                          for s, c, v in tv_rows],
               }}
        text = json.dumps(doc, indent=2, sort_keys=True)
    _write_or_print(text, args.out)
    return 0


def _cmd_surrogate(args) -> int:
    seed = _resolve_seed(args)
    g = vio.generate_surrogate(args.n, args.k, args.density,
                               group_size=args.group_size,
                               group_density=args.group_density,
                               tilt=args.tilt,
                               concentration=args.concentration,
                               mean_extra_messages=args.mean_extra_messages,
                               seed=seed)
    meta = {"seed": seed, "n": args.n, "k": args.k, "density": args.density,
            "group_size": args.group_size, "group_density": args.group_density,
            "tilt": args.tilt, "concentration": args.concentration,
            "mean_extra_messages": args.mean_extra_messages}
    vio.write_topic_graph(g, args.out, {"config": json.dumps(meta, sort_keys=True)})
    print(f"wrote {args.out}: n={g.n} edges={g.num_edges} topics={g.k_topics}")
    return 0


def _cmd_baseline(args) -> int:
    # the Monte Carlo fallback is the only randomized path
    needs_mc = (args.candidates >= 1 and 1 <= args.reds <= args.candidates
                and comb(args.candidates, args.reds) > 10 ** 6)
    if needs_mc and args.seed is None:
        _resolve_seed(args)
    seed = args.seed if args.seed is not None else 0
    value = chance_baseline(args.candidates, args.reds, args.criterion, args.y,
                            mc_samples=args.mc_samples, seed=seed)
    print(json.dumps({"criterion": args.criterion, "candidates": args.candidates,
                      "reds": args.reds, "y": args.y,
                      "value": value.value, "exact": value.exact}, indent=2,
                     sort_keys=True))
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "surface": _cmd_surface,
    "importance": _cmd_importance,
    "estimate": _cmd_estimate,
    "analytic": _cmd_analytic,
    "surrogate": _cmd_surrogate,
    "baseline": _cmd_baseline,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except VnomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
