"""Command-line front end.

One subcommand per pipeline stage plus small utilities: parse a formula,
evaluate robustness on a saved trajectory, optimize a single spec,
generate the skip-gram dataset, train embeddings and controllers,
query similarity tables, print parameter-count tables, run the whole
pipeline, and benchmark the kernel backends.
"""

import argparse
import logging
import sys

import numpy as np

from . import __version__, bench
from .embedding import (derive_seed, generate_dataset, load_dataset,
                        load_embedding, save_dataset, save_embedding,
                        train_skipgram)
from .logic.ast import formula_dim, horizon, pretty
from .logic.parse import parse
from .logic.semantics import robustness, satisfies
from .pipeline import (ExperimentConfig, PipelineError, build_system,
                       report_similarities, run_pipeline, _similarity_text)
from .policy import (SpecEncoding, TrainConfig, count_params, evaluate,
                     load_policy, save_policy, train, train_one_by_one)
from .trajopt import OptConfig, optimize


def _load_traj(path):
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        data = np.loadtxt(path, ndmin=2)
    return data


def _save_traj(path, states, controls=None):
    with open(path, "w") as fh:
        for t in range(states.shape[0]):
            cells = [repr(float(v)) for v in np.atleast_1d(states[t])]
            if controls is not None and t < controls.shape[0]:
                cells += [repr(float(v)) for v in np.atleast_1d(controls[t])]
            fh.write(",".join(cells) + "\n")


def _config(args):
    if getattr(args, "config", None):
        return ExperimentConfig.from_json(args.config)
    return ExperimentConfig()


def cmd_parse(args):
    f = parse(args.formula, dim=args.dim)
    print(pretty(f))
    print("dim=%d horizon=%d" % (formula_dim(f), horizon(f)))
    return 0


def cmd_robustness(args):
    states = _load_traj(args.trajectory)
    f = parse(args.formula, dim=states.shape[1])
    rho = robustness(f, states, t=args.t)
    print(repr(rho))
    print("satisfied" if satisfies(f, states, t=args.t) else "violated")
    return 0


def cmd_optimize(args):
    cfg = _config(args)
    dyn, rmap, sampler, _ = build_system(cfg)
    f = parse(args.formula, dim=dyn.n)
    if args.x0 is not None:
        x0 = np.array(args.x0, dtype=np.float64)
    else:
        x0 = sampler(np.random.default_rng(args.seed))
    ocfg = OptConfig(T=args.T, beta=args.beta, iters=args.iters,
                     lr=args.lr, restarts=args.restarts,
                     vicinity=args.vicinity, seed=args.seed)
    res = optimize(f, x0, dyn, ocfg, init_box=getattr(sampler, "box", None))
    print("robustness %r (smooth %r) after %d iterations, restart %d"
          % (res.robustness, res.smooth_robustness, res.iterations,
             res.restart))
    if args.out:
        _save_traj(args.out, res.trajectory.states, res.controls)
        print("trajectory written to %s" % args.out)
    return 0 if res.success else 1


def cmd_gen_dataset(args):
    cfg = _config(args)
    dyn, rmap, sampler, specs = build_system(cfg)
    emb = cfg.section("embedding")
    ocfg = OptConfig(T=cfg.section("system")["T"], **emb["optimizer"])
    records = generate_dataset(
        specs, dyn, sampler, P=emb["P"], n_ite=emb["n_ite"], opt_cfg=ocfg,
        seed=derive_seed(cfg.master_seed, "dataset"), cap=emb["cap"],
        workers=args.workers)
    save_dataset(records, args.out,
                 header="config_hash=%s seed=%d" % (cfg.config_hash,
                                                    cfg.master_seed))
    print("%d records -> %s" % (len(records), args.out))
    return 0


def cmd_train_embed(args):
    cfg = _config(args)
    _, _, _, specs = build_system(cfg)
    emb = cfg.section("embedding")
    records = load_dataset(args.dataset)
    model, losses = train_skipgram(
        records, M=len(specs), N=emb["N"], epochs=emb["epochs"],
        lr=emb["lr"], seed=derive_seed(cfg.master_seed, "embed"))
    save_embedding(model, args.out,
                   header="config_hash=%s seed=%d" % (cfg.config_hash,
                                                      cfg.master_seed))
    print("loss %r -> %r over %d epochs; embedding -> %s"
          % (losses[0], losses[-1], len(losses), args.out))
    return 0


def cmd_similar(args):
    cfg = _config(args)
    _, _, _, specs = build_system(cfg)
    model = load_embedding(args.embedding)
    queries = args.query if args.query else None
    rows = report_similarities(model, specs, queries,
                               k=min(args.k, len(specs) - 1))
    sys.stdout.write(_similarity_text(rows))
    return 0


def _train_config(cfg, seed=None):
    ctl = cfg.section("controller")
    return TrainConfig(
        T=cfg.section("system")["T"], epochs=ctl["epochs"], n_b=ctl["n_b"],
        L=ctl["L"], lr=ctl["lr"], mode=ctl["mode"], beta=ctl["beta"],
        n_h=ctl["n_h"], n_layers=ctl["n_layers"],
        seed=derive_seed(cfg.master_seed, "controller") if seed is None
        else seed,
        eval_every=ctl["eval_every"], eval_n=ctl["eval_n"])


def cmd_train_controller(args):
    cfg = _config(args)
    dyn, rmap, sampler, specs = build_system(cfg)
    tcfg = _train_config(cfg)
    header = "config_hash=%s seed=%d" % (cfg.config_hash, cfg.master_seed)
    if args.encoding == "one-by-one":
        policies, logs = train_one_by_one(specs, dyn, sampler, tcfg)
        for i, (p, tl) in enumerate(zip(policies, logs)):
            save_policy(p, "%s_%d.txt" % (args.out_prefix, i),
                        encoding_kind="none", header=header)
            tl.save_csv("%s_%d.csv" % (args.out_prefix, i), header=header)
        print("%d controllers -> %s_*.txt" % (len(policies), args.out_prefix))
        return 0
    model = load_embedding(args.embedding) if args.encoding == "stl2vec" \
        else None
    enc = SpecEncoding(args.encoding, len(specs), model)
    policy, tl = train(specs, enc, dyn, sampler, tcfg)
    save_policy(policy, args.out_prefix + ".txt",
                encoding_kind=args.encoding, header=header)
    tl.save_csv(args.out_prefix + ".csv", header=header)
    final = tl.rows[-1][tl.columns.index("mean_robustness")]
    print("final mean robustness %r; checkpoint -> %s.txt"
          % (final, args.out_prefix))
    return 0


def cmd_eval(args):
    cfg = _config(args)
    dyn, rmap, sampler, specs = build_system(cfg)
    if args.encoding == "one-by-one":
        policies = []
        for i in range(len(specs)):
            p, _ = load_policy("%s_%d.txt" % (args.policy, i))
            policies.append(p)
        enc = SpecEncoding("none", len(specs))
        means, grand = evaluate(policies, specs, enc, dyn, sampler,
                                args.n, cfg.section("system")["T"],
                                seed=args.seed)
    else:
        policy, kind = load_policy(args.policy)
        model = load_embedding(args.embedding) if kind == "stl2vec" else None
        enc = SpecEncoding(kind, len(specs), model)
        means, grand = evaluate(policy, specs, enc, dyn, sampler,
                                args.n, cfg.section("system")["T"],
                                seed=args.seed)
    for name, v in zip(specs.names, means):
        print("%-40s %+0.4f" % (name, v))
    print("mean robustness %+0.4f over %d initial states" % (grand, args.n))
    return 0


def cmd_params(args):
    for method in ("proposed", "A1", "A2", "A3"):
        val = count_params(args.M, args.N, args.n, args.m, args.n_h,
                           args.n_layers, method, true_count=args.true_count)
        print("%-9s %d" % (method, val))
    return 0


def cmd_pipeline(args):
    cfg = _config(args)
    try:
        artifacts = run_pipeline(cfg, args.out, workers=args.workers)
    except PipelineError as err:
        print("pipeline failed in %s" % err, file=sys.stderr)
        return 1
    print("%d artifacts -> %s" % (len(artifacts), args.out))
    return 0


def cmd_bench_kernels(args):
    bench.main(lengths=tuple(args.lengths), window=args.window,
               reps=args.reps)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="stl2vec",
        description="STL robustness, spec embeddings and LSTM controllers")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="echo the parsed formula")
    p.add_argument("formula")
    p.add_argument("--dim", type=int, default=None)
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("robustness", help="robustness on a saved trajectory")
    p.add_argument("formula")
    p.add_argument("trajectory", help="CSV/whitespace file, one state per row")
    p.add_argument("--t", type=int, default=0)
    p.set_defaults(fn=cmd_robustness)

    p = sub.add_parser("optimize", help="maximize robustness of one spec")
    p.add_argument("formula")
    p.add_argument("--config")
    p.add_argument("--x0", type=float, nargs="+")
    p.add_argument("--T", type=int, default=20)
    p.add_argument("--beta", type=float, default=10.0)
    p.add_argument("--iters", type=int, default=150)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--vicinity", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the optimized trajectory here")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("gen-dataset", help="optimize all specs, emit records")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(fn=cmd_gen_dataset)

    p = sub.add_parser("train-embed", help="fit skip-gram embeddings")
    p.add_argument("--config")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train_embed)

    p = sub.add_parser("similar", help="nearest specs by cosine similarity")
    p.add_argument("--config")
    p.add_argument("--embedding", required=True)
    p.add_argument("--query", type=int, nargs="*")
    p.add_argument("--k", type=int, default=4)
    p.set_defaults(fn=cmd_similar)

    p = sub.add_parser("train-controller", help="fit the LSTM controller")
    p.add_argument("--config")
    p.add_argument("--encoding", required=True,
                   choices=["stl2vec", "integer", "onehot", "one-by-one"])
    p.add_argument("--embedding", help="needed for --encoding stl2vec")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(fn=cmd_train_controller)

    p = sub.add_parser("eval", help="mean robustness of a saved controller")
    p.add_argument("--config")
    p.add_argument("--policy", required=True,
                   help="checkpoint path (prefix for one-by-one)")
    p.add_argument("--encoding", default="auto",
                   help="'one-by-one' to load per-spec checkpoints")
    p.add_argument("--embedding")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("params", help="parameter-count table")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n-h", type=int, required=True)
    p.add_argument("--n-layers", type=int, required=True)
    p.add_argument("--true-count", action="store_true")
    p.set_defaults(fn=cmd_params)

    p = sub.add_parser("pipeline", help="run every stage into a directory")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("bench-kernels", help="time numpy vs compiled kernels")
    p.add_argument("--lengths", type=int, nargs="+",
                   default=[200, 2000, 20000])
    p.add_argument("--window", type=int, default=20)
    p.add_argument("--reps", type=int, default=20)
    p.set_defaults(fn=cmd_bench_kernels)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ValueError, OSError) as err:
        print("error: %s" % err, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
