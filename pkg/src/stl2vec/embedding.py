"""Spec embeddings: robustness-closeness dataset plus skip-gram training.

Dataset generation optimizes a trajectory for each center spec, scores
every other spec on that trajectory, and keeps the P closest by absolute
robustness difference as the center's context.  Specs whose robustness
on the trajectory coincides exactly are interchangeable for a rank slot,
so each tie group contributes one slot and every choice of
representatives becomes its own record (capped to keep pathological ties
bounded).  The skip-gram is the classic two-matrix model trained with
softmax and cross-entropy; rows of W_in are the spec vectors.
"""

import hashlib
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .accel import worker_count
from .logic.semantics import robustness
from .trajopt import optimize

log = logging.getLogger("stl2vec")


@dataclass
class SpecSet:
    specs: list
    names: list = None

    def __post_init__(self):
        self.specs = list(self.specs)
        if len(self.specs) < 2:
            raise ValueError("need at least 2 specifications")
        if self.names is None:
            self.names = ["phi_%d" % (i + 1) for i in range(len(self.specs))]
        self.names = list(self.names)
        if len(self.names) != len(self.specs):
            raise ValueError("names and specs must align")

    def __len__(self):
        return len(self.specs)

    def __getitem__(self, i):
        return self.specs[i]


@dataclass(frozen=True)
class SkipGramRecord:
    center: int
    context: tuple
    rho_center: float = 0.0
    rho_context: tuple = ()

    def __post_init__(self):
        if len(self.context) == 0:
            raise ValueError("context must be nonempty")
        if self.center in self.context:
            raise ValueError("context must exclude the center")
        if len(set(self.context)) != len(self.context):
            raise ValueError("context indices must be distinct")


def expand_records(center, rho, P, cap=20):
    """Records for one optimized trajectory from the full robustness tuple.

    ``rho`` holds the robustness of every spec (center included) on the
    center's optimized trajectory.  Candidates j != center are ranked by
    (|rho_j - rho_center|, rho_j, j); candidates with exactly equal
    distance and robustness form one group that fills a single context
    slot, and the cartesian product over the first min(P, groups) groups
    yields the records.  If there are fewer groups than P, the remaining
    slots are filled with the closest not-yet-chosen candidates.  At most
    ``cap`` records are returned, in lexicographic representative order.
    """
    rho = np.asarray(rho, dtype=np.float64)
    M = rho.shape[0]
    if not 1 <= P <= M - 1:
        raise ValueError("need 1 <= P <= M-1")
    d = np.abs(rho - rho[center])
    order = sorted((j for j in range(M) if j != center),
                   key=lambda j: (d[j], rho[j], j))
    groups = []
    for j in order:
        if groups and d[j] == d[groups[-1][0]] and rho[j] == rho[groups[-1][0]]:
            groups[-1].append(j)
        else:
            groups.append([j])
    take = min(P, len(groups))
    records = []
    for combo in itertools.product(*groups[:take]):
        context = list(combo)
        if len(context) < P:
            chosen = set(context)
            context += [j for j in order if j not in chosen][:P - len(context)]
        records.append(SkipGramRecord(center, tuple(context), float(rho[center]),
                                      tuple(float(rho[j]) for j in context)))
        if len(records) >= cap:
            break
    return records


def derive_seed(master, *parts):
    """Stable per-task seed from the master seed and task coordinates."""
    text = ":".join([str(master)] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2 ** 32)


def _dataset_task(args):
    (i, it, f, dyn, sampler, P, opt_cfg, seed, cap, keep_failures,
     all_specs) = args
    from dataclasses import replace
    rng = np.random.default_rng(seed)
    x0 = sampler(rng)
    cfg = replace(opt_cfg, seed=seed)
    box = getattr(sampler, "box", None)
    try:
        res = optimize(f, x0, dyn, cfg, init_box=box)
    except Exception as err:  # noqa: BLE001 - skip is the documented contract
        log.warning("optimizer failed for spec %d iteration %d: %s", i, it, err)
        return [], None
    if not keep_failures and not res.success:
        log.info("discarding failed run for spec %d iteration %d (rho=%g)",
                 i, it, res.robustness)
        return [], None
    rho = np.array([robustness(g, res.trajectory) for g in all_specs])
    return expand_records(i, rho, P, cap=cap), (i, it, res)


def generate_dataset(specs, dyn, sampler, P, n_ite, opt_cfg, seed=0, cap=20,
                     keep_failures=True, workers=None,
                     return_trajectories=False):
    """Skip-gram records for every (spec, iteration) pair.

    ``sampler`` is a callable rng -> initial state; if it exposes a
    ``box`` attribute the vicinity restarts are clipped to it.  Tasks get
    seeds derived from (seed, spec index, iteration) so results do not
    depend on scheduling, and records are merged in (spec, iteration)
    order.  With ``return_trajectories`` the optimized runs come back as
    a second list of (spec index, iteration, OptResult).
    """
    M = len(specs)
    if not 1 <= P <= M - 1:
        raise ValueError("need 1 <= P <= M-1")
    tasks = [(i, it, specs[i], dyn, sampler, P, opt_cfg,
              derive_seed(seed, i, it), cap, keep_failures, list(specs.specs))
             for i in range(M) for it in range(n_ite)]
    nworkers = worker_count(workers or 1)
    if nworkers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            chunks = list(pool.map(_dataset_task, tasks))
    else:
        chunks = [_dataset_task(t) for t in tasks]
    records = []
    runs = []
    for recs, run in chunks:
        records.extend(recs)
        if run is not None:
            runs.append(run)
    if return_trajectories:
        return records, runs
    return records


def save_dataset(records, path, header=None):
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write("# %s\n" % line)
        for r in records:
            fh.write("%d\t%s\t%s\t%s\n" % (
                r.center,
                ",".join(str(k) for k in r.context),
                repr(r.rho_center),
                ",".join(repr(v) for v in r.rho_context)))


def load_dataset(path):
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            center, ctx, rc, rctx = line.split("\t")
            records.append(SkipGramRecord(
                int(center), tuple(int(k) for k in ctx.split(",")),
                float(rc), tuple(float(v) for v in rctx.split(","))))
    return records


@dataclass
class EmbeddingModel:
    W_in: np.ndarray
    W_out: np.ndarray

    def __post_init__(self):
        self.W_in = np.asarray(self.W_in, dtype=np.float64)
        self.W_out = np.asarray(self.W_out, dtype=np.float64)
        if self.W_in.shape[1] != self.W_out.shape[0]:
            raise ValueError("W_in is MxN and W_out NxM; dims disagree")
        if self.W_in.shape[0] != self.W_out.shape[1]:
            raise ValueError("W_in and W_out disagree on vocabulary size")

    @property
    def M(self):
        return self.W_in.shape[0]

    @property
    def N(self):
        return self.W_in.shape[1]

    def embed(self, i):
        if not 0 <= i < self.M:
            raise IndexError("spec index %d out of range [0, %d)" % (i, self.M))
        return self.W_in[i].copy()


def init_model(M, N, seed=0):
    rng = np.random.default_rng(seed)
    lim = 0.5 / N
    return EmbeddingModel(rng.uniform(-lim, lim, size=(M, N)),
                          rng.uniform(-lim, lim, size=(N, M)))


def _softmax_rows(logits):
    mx = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - mx)
    return e / e.sum(axis=1, keepdims=True)


def train_skipgram(records, M, N, epochs=100, lr=0.05, seed=0, batch_size=None):
    """Fit the embedding model; returns (model, per-epoch summed loss).

    Full-batch gradient descent by default (``batch_size`` switches to
    seeded shuffled minibatches).  The update direction is the mean
    cross-entropy gradient over records, so duplicating the dataset
    leaves the parameter trajectory unchanged while the reported summed
    loss doubles.
    """
    records = list(records)
    if not records:
        raise ValueError("empty dataset")
    model = init_model(M, N, seed=seed)
    centers = np.array([r.center for r in records])
    contexts = np.array([r.context for r in records])  # (R, P)
    if centers.max() >= M or contexts.max() >= M:
        raise ValueError("record index outside the spec set")
    rng = np.random.default_rng(derive_seed(seed, "shuffle"))
    losses = []
    for _ in range(epochs):
        if batch_size is None:
            batches = [np.arange(len(records))]
        else:
            perm = rng.permutation(len(records))
            batches = [perm[k:k + batch_size]
                       for k in range(0, len(records), batch_size)]
        total = 0.0
        for idx in batches:
            total += _skipgram_batch(model, centers[idx], contexts[idx], lr)
        if not np.isfinite(total):
            raise FloatingPointError("skip-gram loss diverged (non-finite)")
        losses.append(total)
    return model, losses


def _skipgram_batch(model, centers, contexts, lr):
    R, P = contexts.shape
    Z = model.W_in[centers]                    # (R, N)
    logits = Z @ model.W_out                   # (R, M)
    probs = _softmax_rows(logits)
    # cross-entropy gradient wrt logits, all P context targets at once
    dlogits = probs * P
    loss = 0.0
    rows = np.arange(R)
    for p in range(P):
        tgt = contexts[:, p]
        np.add.at(dlogits, (rows, tgt), -1.0)
        loss += -np.sum(np.log(probs[rows, tgt] + 1e-300))
    dlogits /= R
    dW_out = Z.T @ dlogits
    dZ = dlogits @ model.W_out.T
    dW_in = np.zeros_like(model.W_in)
    np.add.at(dW_in, centers, dZ)
    model.W_out -= lr * dW_out
    model.W_in -= lr * dW_in
    return float(loss)


def cosine_similarity(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity of a zero vector")
    return float(a @ b / (na * nb))


def nearest(model, i, k):
    """k most cosine-similar specs to spec i, descending, ties to lower index."""
    if not 1 <= k <= model.M - 1:
        raise ValueError("need 1 <= k <= M-1")
    zi = model.embed(i)
    sims = [(j, cosine_similarity(zi, model.W_in[j]))
            for j in range(model.M) if j != i]
    sims.sort(key=lambda t: (-t[1], t[0]))
    return sims[:k]


def save_embedding(model, path, header=None):
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write("# %s\n" % line)
        fh.write("%d %d\n" % (model.M, model.N))
        for row in model.W_in:
            # repr of a python float round-trips exactly
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_embedding(path):
    """Read back a W_in matrix; W_out is not persisted (zeros)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh
                 if ln.strip() and not ln.startswith("#")]
    M, N = (int(v) for v in lines[0].split())
    if len(lines) != M + 1:
        raise ValueError("embedding file has %d rows, header says %d"
                         % (len(lines) - 1, M))
    W_in = np.array([[float(v) for v in ln.split()] for ln in lines[1:]])
    if W_in.shape != (M, N):
        raise ValueError("embedding rows do not match the %dx%d header" % (M, N))
    return EmbeddingModel(W_in, np.zeros((N, M)))
