"""Command-line front end.

Exit status: 0 success, 1 experiment-level failure, 2 usage or parameter
error. Every run prints a banner with the resolved configuration; pass
``--no-timestamp`` to drop its timestamp line so outputs are byte-stable.
Settings come from flags, then the ``--config`` INI file (one section per
subcommand), then built-in defaults.
"""

from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import json
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .adversary import (bipartition_adversary, capped_bipartition_adversary, greedy_cut_adversary,
                        random_budget_adversary)
from .digraph import degree_stats, generate_random_digraph, read_digraph, write_digraph
from .hamiltonicity import SolverBudget, exact_hamilton, ghouila_houri_cycle, validate_cycle
from .regularity import (build_regularity_digraph, equitable_partition, is_regular_pair, read_partition,
                         reduced_hamilton_cycle)
from .seeding import derive_seed

log = logging.getLogger("dires")

RANDOMIZED = {"gen", "delete", "pipeline", "resilience", "census", "walkprob"}


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _levels(text: str) -> list[int]:
    if ":" in text:
        lo, hi = (int(t) for t in text.split(":"))
        return list(range(lo, hi + 1))
    return _ints(text)


def _default_jobs() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    top = argparse.ArgumentParser(prog="dires", description="Resilience of random digraphs: experiments.",
                                  formatter_class=fmt)
    top.add_argument("--version", action="version", version=f"dires {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with one section per subcommand")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp banner line")
    common.add_argument("--jobs", type=int, default=_default_jobs(), help="worker processes")
    sub = top.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common], formatter_class=fmt)

    g = add("gen", "sample D(n, p) and write it in the digraph format")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)

    s = add("stats", "degree statistics of a digraph file")
    s.add_argument("--in", dest="inp", required=True)

    d = add("delete", "apply an adversary and write the survivor")
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--adversary", choices=["random", "bipartition", "greedy_cut", "capped_bipartition"],
                   default="random")
    d.add_argument("--alpha", type=float, help="budget floor((1/2 - alpha) deg)")
    d.add_argument("--level", type=int, help="absolute per-vertex budget")
    d.add_argument("--seed", type=int)
    d.add_argument("--out", required=True)

    v = add("solve", "decide Hamiltonicity")
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--solver", choices=["exact", "gh"], default="exact")
    v.add_argument("--time-limit", type=float, default=60.0)
    v.add_argument("--node-limit", type=int, default=5_000_000)

    r = add("regularity", "audit a pair or a whole partition")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--A", help="comma-separated vertices of A (pair audit)")
    r.add_argument("--B", help="comma-separated vertices of B (pair audit)")
    r.add_argument("--partition", help="partition file (partition audit)")
    r.add_argument("--k", type=int, default=20, help="parts for a fresh equitable partition")
    r.add_argument("--eps", type=float, default=0.01)
    r.add_argument("--scale", type=float, default=1.0, help="the p in (eps, p)-regular")
    r.add_argument("--delta", type=float, default=0.0, help="density threshold for arcs of R")
    r.add_argument("--mode", choices=["exhaustive", "sampled"], default="sampled")
    r.add_argument("--probes", type=int, default=500)
    r.add_argument("--significance", type=float)
    r.add_argument("--seed", type=int, default=0)

    from .pipeline.config import DEFAULT
    pp = add("pipeline", "run the four-stage construction on D(n, p) after an adversary")
    pp.add_argument("--n", type=int, default=3000)
    pp.add_argument("--p", type=float, default=0.15)
    pp.add_argument("--alpha", type=float, default=0.3, help="adversary budget parameter")
    pp.add_argument("--seed", type=int)
    pp.add_argument("--seeds", type=int, default=1, help="consecutive master seeds starting at --seed")
    pp.add_argument("--profile", choices=["default", "desk"], default="default")
    for key, val in DEFAULT.as_dict().items():
        if key == "alpha":
            key = "cfg_alpha"
        flag = "--" + key.replace("_", "-")
        typ = int if isinstance(val, int) and not isinstance(val, bool) else float
        pp.add_argument(flag, dest=f"cfg__{key}", type=typ, default=None, help=f"override (default profile: {val})")
    pp.add_argument("--trace", help="JSONL trace of every path arc (single seed)")
    pp.add_argument("--out", help="JSONL with one result record per seed")

    rs = add("resilience", "bracket the local resilience of D(n, p)")
    rs.add_argument("--n", type=int, required=True)
    rs.add_argument("--p", type=float, required=True)
    rs.add_argument("--trials", type=int, default=10)
    rs.add_argument("--seed", type=int)
    rs.add_argument("--adversaries", default="random,bipartition,greedy_cut")
    rs.add_argument("--levels", help="lo:hi or a list; default 0..ceil(0.8 np)")
    rs.add_argument("--time-limit", type=float, default=60.0)
    rs.add_argument("--node-limit", type=int, default=5_000_000)
    rs.add_argument("--out", required=True, help="summary CSV")
    rs.add_argument("--records", help="JSONL of every trial")
    rs.add_argument("--timings", action="store_true", help="include runtimes in the trial records")

    c = add("census", "probabilistic-lemma censuses and Chernoff checks")
    c.add_argument("--kind", choices=["badset", "degree", "absorbing", "chernoff"], required=True)
    c.add_argument("--n", type=int, default=5000)
    c.add_argument("--p", type=float, default=0.1)
    c.add_argument("--seed", type=int)
    c.add_argument("--seeds", type=int, default=1)
    c.add_argument("--c", type=float, default=0.2, help="badset: |Y| = ceil(c n)")
    c.add_argument("--eps", type=float, default=0.1)
    c.add_argument("--samples", type=int, default=50)
    c.add_argument("--ell", type=int, help="degree: part size (default n/20)")
    c.add_argument("--s", type=int, default=50, help="absorbing: |S| = |T|")
    c.add_argument("--beta", type=float, default=0.2)
    c.add_argument("--chernoff-kind", choices=["i", "ii", "iii", "iv"], default="iii")
    c.add_argument("--x", type=float, help="chernoff kind iv threshold")
    c.add_argument("--out", help="JSONL with one record per seed")

    w = add("walkprob", "hit probabilities of consecutive random forward steps")
    w.add_argument("--lemma", choices=["two", "three", "four", "two_upper", "three_upper", "all"], default="all")
    w.add_argument("--trials", type=int, default=10_000)
    w.add_argument("--seed", type=int)
    w.add_argument("--out", help="JSONL with one record per lemma")
    # Bare options get a short help string so the formatter still prints their default.
    for parser in sub.choices.values():
        for action in parser._actions:
            if action.help is None:
                action.help = "required" if action.required else action.dest.replace("_", " ")
    return top


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    pre.add_argument("command", nargs="?")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cp = configparser.ConfigParser()
    if not cp.read(known.config, encoding="utf-8"):
        raise UsageError(f"cannot read config file {known.config}")
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in subs.choices.items():
        if not cp.has_section(name):
            continue
        by_key = {}
        for a in sp._actions:
            for o in a.option_strings:
                by_key[o.lstrip("-").replace("-", "_")] = a
        defaults = {}
        for key, raw in cp.items(name):
            a = by_key.get(key.replace("-", "_"))
            if a is None:
                raise UsageError(f"config [{name}]: unknown key {key}")
            if isinstance(a, argparse._StoreTrueAction):
                defaults[a.dest] = cp.getboolean(name, key)
            else:
                try:
                    defaults[a.dest] = a.type(raw) if a.type else raw
                except ValueError as e:
                    raise UsageError(f"config [{name}] {key}: {e}") from None
                if a.choices and defaults[a.dest] not in a.choices:
                    raise UsageError(f"config [{name}] {key}: {raw!r} not in {list(a.choices)}")
            a.required = False
        sp.set_defaults(**defaults)


def _banner(args, resolved: dict) -> None:
    print(f"# dires {__version__} {args.command}")
    print("# config: " + json.dumps(resolved, sort_keys=True, default=str))
    if "seed" in resolved:
        print(f"# master seed: {resolved['seed']}")
    if not args.no_timestamp:
        print(f"# timestamp: {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}")


def _resolved(args) -> dict:
    skip = {"command", "config", "no_timestamp"}
    return {k: v for k, v in vars(args).items() if k not in skip and not k.startswith("cfg__")}


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise UsageError(msg)


def _cmd_gen(args) -> int:
    _check(args.n >= 1 and 0 <= args.p <= 1, "need n >= 1 and 0 <= p <= 1")
    _banner(args, _resolved(args))
    D = generate_random_digraph(args.n, args.p, args.seed)
    write_digraph(D, args.out)
    print(f"wrote {args.out}: n={D.n} m={D.m}")
    return 0


def _cmd_stats(args) -> int:
    _banner(args, _resolved(args))
    D = read_digraph(args.inp)
    s = degree_stats(D)
    print(json.dumps({"n": D.n, "m": D.m, "min_out": s.min_out, "min_in": s.min_in,
                      "max_out": s.max_out, "max_in": s.max_in,
                      "mean_out": float(np.mean(s.out_degrees)) if D.n else 0.0}, sort_keys=True))
    return 0


def _cmd_delete(args) -> int:
    D = read_digraph(args.inp)
    needs_budget = args.adversary in ("random", "greedy_cut")
    if needs_budget:
        _check((args.alpha is None) != (args.level is None), "give exactly one of --alpha and --level")
    if args.adversary == "capped_bipartition":
        _check(args.level is not None, "capped_bipartition needs --level")
    _banner(args, _resolved(args))
    if args.adversary == "random":
        out = random_budget_adversary(D, alpha=args.alpha, seed=args.seed, level=args.level)
    elif args.adversary == "greedy_cut":
        out = greedy_cut_adversary(D, alpha=args.alpha, seed=args.seed, level=args.level)
    elif args.adversary == "bipartition":
        out = bipartition_adversary(D, seed=args.seed)
    else:
        out = capped_bipartition_adversary(D, args.level, seed=args.seed)
    write_digraph(out.surviving, args.out)
    print(json.dumps({"deleted": out.deleted, "max_fraction": round(out.max_fraction, 6),
                      "surviving_arcs": out.surviving.m}, sort_keys=True))
    return 0


def _cmd_solve(args) -> int:
    D = read_digraph(args.inp)
    _banner(args, _resolved(args))
    if args.solver == "gh":
        c = ghouila_houri_cycle(D)
        print("cycle: " + " ".join(map(str, c.order)))
        return 0
    res = exact_hamilton(D, SolverBudget(time_limit=args.time_limit, node_limit=args.node_limit))
    if res.status == "cycle":
        assert validate_cycle(D, res.cycle).ok
        print("cycle: " + " ".join(map(str, res.cycle.order)))
        return 0
    if res.is_hamiltonian is False:
        print(f"none: {res.reason}")
        return 0
    print(f"unknown: {res.reason}")
    return 1


def _cmd_regularity(args) -> int:
    D = read_digraph(args.inp)
    _banner(args, _resolved(args))
    if args.A or args.B:
        _check(bool(args.A and args.B), "a pair audit needs both --A and --B")
        v = is_regular_pair(D, _ints(args.A), _ints(args.B), args.eps, args.scale, args.mode, args.probes,
                            args.seed, args.significance)
        print(json.dumps({"regular": v.regular, "density": str(v.density), "mode": v.mode,
                          "witness": v.witness}, sort_keys=True))
        return 0
    P = read_partition(args.partition) if args.partition else equitable_partition(D, args.k, args.seed)
    R = build_regularity_digraph(D, P, args.delta, args.eps, args.mode, args.scale, args.probes,
                                 args.seed, args.significance)
    rc = reduced_hamilton_cycle(R, P.k)
    print(json.dumps({"k": P.k, "ell": P.ell, "arcs": len(R.arcs), "cycle": rc.cycle,
                      "peeled": rc.peeled, "reason": rc.reason}, sort_keys=True))
    return 0 if rc.ok else 1


def _pipeline_one(task):
    n, p, alpha, seed, cfg_dict, trace = task
    from .pipeline.config import PipelineConfig
    from .pipeline.stages import run_pipeline
    cfg = PipelineConfig(**cfg_dict)
    D = generate_random_digraph(n, p, derive_seed(seed, "graph"))
    Dp = random_budget_adversary(D, alpha=alpha, seed=derive_seed(seed, "adversary")).surviving
    res = run_pipeline(D, Dp, p, cfg, seed=seed, trace=trace)
    rec = {"seed": seed, **res.as_dict()}
    return rec, res.trace


def _cmd_pipeline(args) -> int:
    from .pipeline.config import PROFILES
    from .pipeline.stages import write_trace
    from .resilience import _map
    over = {k[5:]: v for k, v in vars(args).items() if k.startswith("cfg__") and v is not None}
    if "cfg_alpha" in over:
        over["alpha"] = over.pop("cfg_alpha")
    cfg = PROFILES[args.profile].with_overrides(**over)
    _check(args.seeds >= 1, "--seeds must be positive")
    _check(not (args.trace and args.seeds > 1), "--trace needs a single seed")
    _check(0 < args.alpha <= 0.5, "--alpha must lie in (0, 1/2]")
    _banner(args, {**_resolved(args), "constants": cfg.as_dict()})
    tasks = [(args.n, args.p, args.alpha, args.seed + i, cfg.as_dict(), bool(args.trace)) for i in range(args.seeds)]
    results = _map(_pipeline_one, tasks, args.jobs)
    ok = 0
    lines = []
    for rec, trace in results:
        ok += rec["ok"]
        status = "hamilton cycle" if rec["ok"] else f"failed at stage {rec['failure']['stage']}: {rec['failure']['hypothesis']}"
        print(f"seed {rec['seed']}: {status}")
        lines.append(json.dumps(rec, sort_keys=True))
        if args.trace:
            write_trace(trace, args.trace)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    print(f"success {ok}/{len(results)}")
    return 0 if ok == len(results) else 1


def _cmd_resilience(args) -> int:
    from .resilience import ADVERSARIES, estimate_resilience, write_records, write_summary
    advs = [a.strip() for a in args.adversaries.split(",") if a.strip()]
    _check(all(a in ADVERSARIES for a in advs) and advs, f"adversaries must come from {ADVERSARIES}")
    _check(args.n >= 2 and 0 <= args.p <= 1 and args.trials >= 1, "need n >= 2, 0 <= p <= 1, trials >= 1")
    _banner(args, _resolved(args))
    est = estimate_resilience(args.n, args.p, advs, SolverBudget(time_limit=args.time_limit, node_limit=args.node_limit),
                              _levels(args.levels) if args.levels else None, args.trials, args.seed, args.jobs)
    write_summary(est.levels, args.out)
    if args.records:
        write_records(est.records, args.records, include_runtime=args.timings)
    print(json.dumps({"lower": est.lower, "upper": est.upper, "np": est.np, "inconclusive": est.inconclusive,
                      "notes": list(est.notes)}, sort_keys=True))
    return 1 if est.inconclusive else 0


def _census_one(task):
    from . import resilience as rz
    kind, a, seed = task
    if kind == "chernoff":
        t = rz.empirical_tail(a["n"], a["p"], a["chernoff_kind"], a["eps"] if a["chernoff_kind"] != "iv" else None,
                              a["x"], a["samples"], seed)
        return {"seed": seed, "frequency": t.frequency, "bound": t.bound, "sigma": t.sigma, "respected": t.respected}
    D = generate_random_digraph(a["n"], a["p"], derive_seed(seed, "graph"))
    if kind == "badset":
        c = rz.bad_set_census(D, a["c"], a["eps"], a["samples"], seed, a["p"])
        return {"seed": seed, "max": c.max_size, "bound": c.bound, "respected": c.respected}
    if kind == "degree":
        c = rz.degree_excess_census(D, a["ell"] or a["n"] // 20, a["samples"], seed, a["p"])
        return {"seed": seed, "max_i": max(c.clause_i), "max_ii": max(c.clause_ii), "bound_i": c.bound_i,
                "bound_ii": c.bound_ii, "respected": c.respected}
    S, T = rz.random_absorbing_instance(a["n"], a["s"], seed)
    cnt = rz.absorbing_pair_census(D, S, T)
    bound = a["beta"] * a["s"] * a["p"] ** 2 * a["n"]
    return {"seed": seed, "count": cnt, "bound": bound, "respected": cnt < bound}


def _cmd_census(args) -> int:
    from .resilience import _map
    _check(args.n >= 1 and 0 <= args.p <= 1 and args.seeds >= 1, "need n >= 1, 0 <= p <= 1, seeds >= 1")
    if args.kind == "chernoff" and args.chernoff_kind == "iv":
        _check(args.x is not None, "kind iv needs --x")
    _banner(args, _resolved(args))
    a = vars(args)
    recs = _map(_census_one, [(args.kind, a, args.seed + i) for i in range(args.seeds)], args.jobs)
    lines = [json.dumps(r, sort_keys=True) for r in recs]
    for line in lines:
        print(line)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    ok = sum(r["respected"] for r in recs)
    print(f"respected {ok}/{len(recs)}")
    return 0


def _cmd_walkprob(args) -> int:
    from .pipeline.walks import LEMMAS, estimate_walk_probabilities
    _check(args.trials >= 1, "--trials must be positive")
    _banner(args, _resolved(args))
    lemmas = LEMMAS if args.lemma == "all" else (args.lemma,)
    lines, ok = [], True
    for lm in lemmas:
        e = estimate_walk_probabilities(lm, args.trials, args.seed)
        ok &= e.respected
        lines.append(json.dumps({"lemma": lm, "empirical": e.empirical, "bound": e.bound, "sigma": e.sigma,
                                 "kind": e.kind, "respected": e.respected, "components": e.components,
                                 "sizes": e.sizes}, sort_keys=True))
    for line in lines:
        print(line)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0 if ok else 1


COMMANDS = {"gen": _cmd_gen, "stats": _cmd_stats, "delete": _cmd_delete, "solve": _cmd_solve,
            "regularity": _cmd_regularity, "pipeline": _cmd_pipeline, "resilience": _cmd_resilience,
            "census": _cmd_census, "walkprob": _cmd_walkprob}


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    level = os.environ.get("DIRES_LOG", "error").lower()
    logging.basicConfig(level={"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(level, logging.ERROR),
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:
        return int(e.code or 0)
    if args.command in RANDOMIZED and getattr(args, "seed", None) is None:
        print(f"error: {args.command} is randomized and requires --seed", file=sys.stderr)
        return 2
    if args.jobs < 1:
        print("error: --jobs must be positive", file=sys.stderr)
        return 2
    log.info("running %s", args.command)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
