"""End-to-end experiment orchestration.

A JSON config with sections system / regions / specs / embedding /
controller / seeds drives the full run: optimize trajectories and build
the skip-gram dataset, train the embedding, train controllers for the
requested encodings, then render similarity tables and training-curve
plots.  Every artifact carries the config hash and master seed in a
comment header so runs can be told apart after the fact.
"""

import csv
import hashlib
import json
import logging
import os
import time
from contextlib import contextmanager

import numpy as np

from . import __version__
from .dynamics import Integrator1D, Unicycle
from .embedding import (derive_seed, generate_dataset, nearest,
                        save_dataset, save_embedding, train_skipgram)
from .logic.parse import parse
from .logic.ast import pretty
from .policy import (SpecEncoding, TrainConfig, save_policy, train,
                     train_one_by_one)
from .trajopt import OptConfig
from .world import RegionMap, build_small_specs, build_specs, make_sampler

log = logging.getLogger(__name__)

DEFAULTS = {
    "system": {"dynamics": "unicycle", "T": 20},
    "regions": {},
    "specs": {"which": "small"},
    "embedding": {
        "N": 8, "epochs": 1000, "lr": 0.5, "P": 2, "n_ite": 1, "cap": 20,
        "optimizer": {"iters": 120, "lr": 0.15, "beta": 10.0,
                      "restarts": 3, "vicinity": 0.1},
    },
    "controller": {
        "encodings": ["stl2vec"], "epochs": 300, "n_b": 4, "L": 3,
        "lr": 0.01, "mode": "exact", "beta": 10.0, "n_h": 16,
        "n_layers": 1, "eval_every": 5, "eval_n": 30,
    },
    "seeds": {"master": 0},
    "similar": {"queries": None, "k": 4},
}


def _merge(base, extra):
    out = dict(base)
    for key, val in (extra or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


class ExperimentConfig:
    """Validated run configuration with stable hashing."""

    SECTIONS = ("system", "regions", "specs", "embedding", "controller",
                "seeds", "similar")

    def __init__(self, data=None):
        data = data or {}
        unknown = set(data) - set(self.SECTIONS)
        if unknown:
            raise ValueError("unknown config sections: %s" % sorted(unknown))
        self.data = _merge(DEFAULTS, data)
        if self.data["system"]["dynamics"] not in ("unicycle", "integrator"):
            raise ValueError("dynamics must be unicycle or integrator")
        if "master" not in self.data["seeds"]:
            raise ValueError("seeds section needs a master entry")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls(json.load(fh))

    def section(self, name):
        return self.data[name]

    @property
    def master_seed(self):
        return int(self.data["seeds"]["master"])

    @property
    def config_hash(self):
        text = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")


class PipelineError(RuntimeError):
    """Failure wrapped with the stage it happened in."""

    def __init__(self, stage, message):
        super().__init__("stage %r: %s" % (stage, message))
        self.stage = stage


@contextmanager
def _stage(name):
    t0 = time.perf_counter()
    log.info("stage %s started", name)
    try:
        yield
    except PipelineError:
        raise
    except Exception as err:
        raise PipelineError(name, str(err)) from err
    log.info("stage %s done in %.1fs", name, time.perf_counter() - t0)


def build_system(cfg):
    """(dynamics, region map, sampler, spec set) from the config."""
    sys_cfg = cfg.section("system")
    kwargs = {}
    for key in ("u_min", "u_max"):
        if key in sys_cfg:
            kwargs[key] = np.asarray(sys_cfg[key], dtype=np.float64)
    if sys_cfg["dynamics"] == "unicycle":
        dyn = Unicycle(**kwargs)
    else:
        dyn = Integrator1D(**kwargs)

    reg_cfg = cfg.section("regions")
    reg_kwargs = {"x0_lo": reg_cfg.get("x0_lo"),
                  "x0_hi": reg_cfg.get("x0_hi"),
                  "theta0": reg_cfg.get("theta0", 0.0)}
    if "boxes" in reg_cfg:
        reg_kwargs["regions"] = {int(k): tuple(float(x) for x in v)
                                 for k, v in reg_cfg["boxes"].items()}
    rmap = RegionMap(**reg_kwargs)
    sampler = make_sampler(rmap)
    if sampler.n != dyn.n:
        # trim the map's start box to the state dimension and drop the
        # heading; keeps the integrator usable with the same config shape
        from .world import BoxSampler
        sampler = BoxSampler(rmap.x0_lo[:dyn.n], rmap.x0_hi[:dyn.n],
                             theta0=None)

    spec_cfg = cfg.section("specs")
    which = spec_cfg.get("which", "small")
    if which == "custom":
        texts = spec_cfg.get("formulas") or []
        if not texts:
            raise ValueError("custom spec selection needs a formulas list")
        from .embedding import SpecSet
        specs = SpecSet([parse(t, dim=dyn.n) for t in texts], list(texts))
    elif which == "small":
        specs = build_small_specs(rmap)
    else:
        specs = build_specs(rmap, tuple(which) if isinstance(which, list)
                            else which)
    return dyn, rmap, sampler, specs


def report_similarities(model, specs, queries=None, k=4):
    """Rows (query name, [(neighbor name, cosine), ...]) for each query.

    Queries default to every spec; self matches are excluded by the
    nearest-neighbor search.
    """
    if not np.any(model.W_in):
        raise ValueError("model looks untrained (all-zero embeddings)")
    if queries is None:
        queries = range(len(specs))
    rows = []
    for q in queries:
        hits = nearest(model, q, k)
        rows.append((specs.names[q],
                     [(specs.names[j], sim) for j, sim in hits]))
    return rows


def _similarity_text(rows):
    lines = []
    for name, hits in rows:
        lines.append(name)
        for rank, (other, sim) in enumerate(hits, start=1):
            lines.append("  %d. %-40s %+0.4f" % (rank, other, sim))
    return "\n".join(lines) + "\n"


def _write_trajectories(path, runs, dyn, header):
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write("# %s\n" % line)
        state_cols = ["x%d" % (d + 1) for d in range(dyn.n)]
        ctrl_cols = ["u%d" % (d + 1) for d in range(dyn.m)]
        fh.write(",".join(["spec", "iteration", "t"] + state_cols + ctrl_cols)
                 + "\n")
        for i, it, res in runs:
            states = res.trajectory.states
            controls = res.controls
            # re-simulation guard: dumped controls must reproduce states
            resim = dyn.simulate(states[0], controls)
            if not np.allclose(resim.states, states, atol=1e-12, rtol=0.0):
                raise ValueError("trajectory for spec %d does not re-simulate"
                                 % i)
            for t in range(states.shape[0]):
                cells = [str(i), str(it), str(t)]
                cells += [repr(float(v)) for v in states[t]]
                if t < controls.shape[0]:
                    cells += [repr(float(v)) for v in controls[t]]
                else:
                    cells += [""] * dyn.m
                fh.write(",".join(cells) + "\n")


def _plot_training(paths, out_png):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from .policy import TrainingLog

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, path in paths.items():
        tl = TrainingLog.load_csv(path)
        ax.plot(tl.column("epoch"), tl.column("mean_robustness"), label=label)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean exact robustness")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def _plot_embed_loss(losses, out_png):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(1, len(losses) + 1), losses)
    ax.set_xlabel("epoch")
    ax.set_ylabel("summed cross-entropy")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def run_pipeline(cfg, outdir, workers=None):
    """Execute all stages; returns {artifact name: path}.

    Stage failures raise PipelineError tagged with the stage name;
    artifacts written before the failure are left in place.
    """
    os.makedirs(outdir, exist_ok=True)
    seed = cfg.master_seed
    header = "stl2vec %s\nconfig_hash=%s seed=%d" % (
        __version__, cfg.config_hash, seed)
    artifacts = {}

    def path(name):
        artifacts[name] = os.path.join(outdir, name)
        return artifacts[name]

    cfg.save(path("config.json"))

    with _stage("world"):
        dyn, rmap, sampler, specs = build_system(cfg)
        with open(path("specs.txt"), "w") as fh:
            for line in header.splitlines():
                fh.write("# %s\n" % line)
            for i, (f, name) in enumerate(zip(specs.specs, specs.names)):
                fh.write("%d\t%s\t%s\n" % (i, name, pretty(f)))

    emb_cfg = cfg.section("embedding")
    with _stage("dataset"):
        opt_cfg = OptConfig(T=cfg.section("system")["T"],
                            **emb_cfg["optimizer"])
        records, runs = generate_dataset(
            specs, dyn, sampler, P=emb_cfg["P"], n_ite=emb_cfg["n_ite"],
            opt_cfg=opt_cfg, seed=derive_seed(seed, "dataset"),
            cap=emb_cfg["cap"], workers=workers, return_trajectories=True)
        if not records:
            raise ValueError("dataset came out empty")
        save_dataset(records, path("dataset.tsv"), header=header)
        _write_trajectories(path("trajectories.csv"), runs, dyn, header)

    with _stage("embedding"):
        model, losses = train_skipgram(
            records, M=len(specs), N=emb_cfg["N"], epochs=emb_cfg["epochs"],
            lr=emb_cfg["lr"], seed=derive_seed(seed, "embed"))
        save_embedding(model, path("embedding.txt"), header=header)
        with open(path("embed_loss.csv"), "w") as fh:
            for line in header.splitlines():
                fh.write("# %s\n" % line)
            fh.write("epoch,loss\n")
            for ep, val in enumerate(losses, start=1):
                fh.write("%d,%r\n" % (ep, val))

    with _stage("similarities"):
        sim_cfg = cfg.section("similar")
        k = min(sim_cfg.get("k", 4), len(specs) - 1)
        rows = report_similarities(model, specs, sim_cfg.get("queries"), k)
        with open(path("similarities.csv"), "w", newline="") as fh:
            for line in header.splitlines():
                fh.write("# %s\n" % line)
            writer = csv.writer(fh)  # spec names may contain commas
            writer.writerow(["query", "rank", "neighbor", "cosine"])
            for name, hits in rows:
                for rank, (other, sim) in enumerate(hits, start=1):
                    writer.writerow([name, rank, other, repr(sim)])
        with open(path("similarities.txt"), "w") as fh:
            for line in header.splitlines():
                fh.write("# %s\n" % line)
            fh.write(_similarity_text(rows))

    ctl_cfg = cfg.section("controller")
    logs = {}
    with _stage("controller"):
        base = TrainConfig(
            T=cfg.section("system")["T"], epochs=ctl_cfg["epochs"],
            n_b=ctl_cfg["n_b"], L=ctl_cfg["L"], lr=ctl_cfg["lr"],
            mode=ctl_cfg["mode"], beta=ctl_cfg["beta"], n_h=ctl_cfg["n_h"],
            n_layers=ctl_cfg["n_layers"], seed=derive_seed(seed, "controller"),
            eval_every=ctl_cfg["eval_every"], eval_n=ctl_cfg["eval_n"])
        for kind in ctl_cfg["encodings"]:
            if kind == "one-by-one":
                policies, sublogs = train_one_by_one(specs, dyn, sampler, base)
                for i, (p, tl) in enumerate(zip(policies, sublogs)):
                    save_policy(p, path("controller_one-by-one_%d.txt" % i),
                                encoding_kind="none", header=header)
                    tl.save_csv(path("train_one-by-one_%d.csv" % i),
                                header=header)
                logs["one-by-one"] = artifacts["train_one-by-one_0.csv"]
                continue
            enc = SpecEncoding(kind, len(specs),
                               model if kind == "stl2vec" else None)
            policy, tl = train(specs, enc, dyn, sampler, base)
            save_policy(policy, path("controller_%s.txt" % kind),
                        encoding_kind=kind, header=header)
            tl.save_csv(path("train_%s.csv" % kind), header=header)
            logs[kind] = artifacts["train_%s.csv" % kind]

    with _stage("plots"):
        if logs:
            _plot_training(logs, path("training_curves.png"))
        _plot_embed_loss(losses, path("embed_loss.png"))

    with open(path("manifest.json"), "w") as fh:
        json.dump({"config_hash": cfg.config_hash, "seed": seed,
                   "version": __version__,
                   "artifacts": sorted(artifacts)}, fh, indent=2)
        fh.write("\n")
    return artifacts
