"""Command-line front end.

Exit codes: 0 success, 2 bad arguments, 3 input could not be loaded,
4 stage input missing or stale, 1 any other module error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .evaluation import DEFAULT_AUC_SAMPLES, evaluate, grid_sweep
from .network import (
    EdgeFileError,
    PurifyThresholds,
    load_network,
    purify,
    save_network,
    split,
    stats,
)
from .pipeline import ExperimentConfig, RunDir, StageError, dump_json, run_analysis, run_experiment
from .recommender import hybrid_similarity, recommend
from .similarity import DEFAULT_C, write_scores
from .synthgen import SynthConfig, generate

log = logging.getLogger("csnfilter")

EXIT_ERROR, EXIT_LOAD, EXIT_STAGE = 1, 3, 4


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _grid(text):
    vals = _floats(text)
    if len(vals) != 2 or vals[0] > vals[1]:
        raise argparse.ArgumentTypeError("--grid takes 'lo,hi' with lo <= hi")
    return vals


# --------------------------------------------------------------------------
# commands


def cmd_synth(args):
    cfg = SynthConfig(args.users, args.items, args.out_degree, args.items_per_user, args.rho,
                      args.reciprocity, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_network(generate(cfg), out / "social.tsv", out / "behavior.tsv")
    dump_json(out / "synth.json", cfg.to_dict())
    print(out)


def cmd_stats(args):
    st = asdict(stats(load_network(args.social, args.behavior)))
    if args.out:
        dump_json(args.out, st)
    print(json.dumps(st, indent=2, sort_keys=True))


def cmd_purify(args):
    net = purify(load_network(args.social, args.behavior), PurifyThresholds.parse(args.thresholds))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_network(net, out / "social.tsv", out / "behavior.tsv")
    dump_json(out / "stats.json", asdict(stats(net)))
    print(out)


def cmd_split(args):
    net = load_network(args.social, args.behavior)
    rd = RunDir.create(args.out, net, split(net, args.ratio, args.seed))
    print(rd.path)


def _open_run(args):
    rd = RunDir(args.run)
    net, sp_ = rd.load_split()
    pref, infl, hit = rd.similarities(sp_, args.kind, args.c)
    return rd, net, sp_, pref, infl, hit


def cmd_simmat(args):
    rd, net, sp_, pref, infl, hit = _open_run(args)
    print(f"{args.kind}: {'cached' if hit else 'computed'}")
    if args.export:
        paths = [rd / f"sim_{args.kind}.tsv", rd / "sim_preference.tsv"]
        write_scores(paths[0], infl, net.user_ids)
        write_scores(paths[1], pref, net.user_ids)
        rd.record_outputs(*paths, stage="simmat")


def cmd_recommend(args):
    rd, net, sp_, pref, infl, _ = _open_run(args)
    L = args.L[0]
    lists = recommend(sp_.train, hybrid_similarity(pref, infl, args.alpha, args.beta), L)
    p = rd / "recommendations.tsv"
    lists.write(p, net.user_ids, net.item_ids)
    rd.record_outputs(p, stage="recommend")
    print(p)


def cmd_evaluate(args):
    rd, net, sp_, pref, infl, _ = _open_run(args)
    reps = evaluate(sp_, pref, infl, args.alpha, args.beta, args.L, args.kind, args.auc_samples)
    p = rd / "evaluation.json"
    dump_json(p, [r.to_dict() for r in reps])
    rd.record_outputs(p, stage="evaluate")
    print(json.dumps([r.to_dict() for r in reps], indent=2, sort_keys=True))


def cmd_sweep(args):
    rd, net, sp_, pref, infl, _ = _open_run(args)
    lo, hi = args.grid
    g = grid_sweep(sp_, args.kind, (lo, hi), (lo, hi), args.step, args.L, args.c, args.auc_samples,
                   preference=pref, influence_matrix=infl, workers=args.workers)
    paths = [rd / f"grid_{args.kind}.csv", rd / f"summary_{args.kind}.json"]
    g.write_csv(paths[0])
    g.write_summary(paths[1])
    rd.record_outputs(*paths, stage="sweep")
    print(paths[0])


def cmd_analyze(args):
    rd, net, sp_, pref, infl, _ = _open_run(args)
    want = {"curve": args.curve, "ego": args.ego, "hist": args.hist}
    if not any(want.values()):
        want = dict.fromkeys(want, True)
    res = run_analysis(rd, net, sp_, pref, infl, args.kind, args.alpha, args.beta, args.L[0],
                       args.bins, args.influence_value, **want)
    paths = [v for k, v in res.items() if k in ("curve", "ego", "ego_graph", "hist")]
    rd.record_outputs(*paths, stage="analyze")
    for p in paths:
        print(p)


def cmd_run(args):
    cfg = ExperimentConfig.load(args.config)
    if args.out:
        cfg.out = args.out
    if args.workers:
        cfg.workers = args.workers
    print(run_experiment(cfg))


# --------------------------------------------------------------------------
# parser


def build_parser():
    ap = argparse.ArgumentParser(prog="csnfilter", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def inputs(p):
        p.add_argument("--social", required=True, help="social edge list (source<TAB>target)")
        p.add_argument("--behavior", required=True, help="behavior edge list (user<TAB>item)")

    def run_opts(p, point=True):
        p.add_argument("--run", required=True, help="run directory created by `split`")
        p.add_argument("--kind", choices=["rwr", "lin", "lout"], default="rwr")
        p.add_argument("--c", type=float, default=DEFAULT_C, help="RWR continuation probability")
        p.add_argument("--L", type=_ints, default=[10], help="list length(s), comma separated")
        p.add_argument("--workers", type=int, default=1, help="worker threads")
        if point:
            p.add_argument("--alpha", type=float, default=1.0)
            p.add_argument("--beta", type=float, default=1.0)

    p = sub.add_parser("synth", help="generate a synthetic coupled network")
    p.add_argument("--users", type=int, default=500)
    p.add_argument("--items", type=int, default=1000)
    p.add_argument("--out-degree", type=float, default=8.0)
    p.add_argument("--items-per-user", type=float, default=12.0)
    p.add_argument("--rho", type=float, default=0.8)
    p.add_argument("--reciprocity", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="dataset statistics as JSON")
    inputs(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("purify", help="iterated degree filtering")
    inputs(p)
    p.add_argument("--thresholds", default="1,26,7,7",
                   help="min_out,min_in,min_user_items,min_item_users")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_purify)

    p = sub.add_parser("split", help="random train/test split into a run directory")
    inputs(p)
    p.add_argument("--ratio", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("simmat", help="compute and cache similarity matrices")
    run_opts(p, point=False)
    p.add_argument("--export", action="store_true", help="also write score TSVs")
    p.set_defaults(func=cmd_simmat)

    p = sub.add_parser("recommend", help="top-L lists for one (alpha, beta)")
    run_opts(p)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", help="metrics for one (alpha, beta)")
    run_opts(p)
    p.add_argument("--auc-samples", type=int, default=DEFAULT_AUC_SAMPLES)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="metrics over an (alpha, beta) grid")
    run_opts(p, point=False)
    p.add_argument("--grid", type=_grid, default=[0.0, 4.0], help="lo,hi for both exponents")
    p.add_argument("--step", type=float, default=0.2)
    p.add_argument("--auc-samples", type=int, default=DEFAULT_AUC_SAMPLES)
    p.set_defaults(func=cmd_sweep, L=[10, 20, 50])

    p = sub.add_parser("analyze", help="influence/preference curve, ego network, degree histogram")
    run_opts(p)
    p.add_argument("--curve", action="store_true")
    p.add_argument("--ego", action="store_true")
    p.add_argument("--hist", action="store_true")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--influence-value", choices=["received", "exerted"], default="received")
    p.set_defaults(func=cmd_analyze, alpha=0.0)

    p = sub.add_parser("run", help="full experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the config's output directory")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_run)
    return ap


def _module_of(exc):
    tb = exc.__traceback__
    mod = type(exc).__module__
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("csnfilter."):
            mod = name
        tb = tb.tb_next
    return mod


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (FileNotFoundError, EdgeFileError) as e:
        print(f"error [{_module_of(e)}] load: {e}", file=sys.stderr)
        return EXIT_LOAD
    except StageError as e:
        print(f"error [{_module_of(e)}] {args.command}: {e}", file=sys.stderr)
        return EXIT_STAGE
    except (ValueError, RuntimeError, OSError) as e:
        print(f"error [{_module_of(e)}] {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
