"""Recurrent control policy shared across specifications.

One LSTM stack maps s_t = [x_t, z] (state plus a per-spec encoding
vector z) to bounded controls through a tanh squash of a linear readout,
u = u_min + (u_max - u_min)/2 * (tanh(W2 h_t) + 1).  Training rolls out
a minibatch of specs from L initial states each, all rows at once as
(B, .) matrix nodes, takes the mean robustness over rows as the (negated)
loss and backpropagates through time into the weights.  Evaluation uses
a plain-numpy twin of the rollout.
"""

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import diffsem, graph
from .embedding import derive_seed
from .logic.ast import horizon
from .logic.semantics import Trajectory, robustness
from .optim import Adam


@dataclass
class SpecEncoding:
    """How a spec index is presented to the controller.

    kind "stl2vec" uses rows of a trained embedding model, "integer"
    feeds the raw 1-based index as one scalar, "onehot" the standard
    basis vector, and "none" gives a zero-length encoding for per-spec
    controllers.
    """

    kind: str
    M: int
    model: object = None

    def __post_init__(self):
        kinds = ("stl2vec", "integer", "onehot", "none")
        if self.kind not in kinds:
            raise ValueError("encoding kind must be one of %r" % (kinds,))
        if self.kind == "stl2vec":
            if self.model is None:
                raise ValueError("stl2vec encoding needs an embedding model")
            if self.model.M != self.M:
                raise ValueError("embedding model covers %d specs, need %d"
                                 % (self.model.M, self.M))

    @property
    def dim(self):
        if self.kind == "stl2vec":
            return self.model.N
        if self.kind == "integer":
            return 1
        if self.kind == "onehot":
            return self.M
        return 0

    def vector(self, i):
        if not 0 <= i < self.M:
            raise IndexError("spec index %d out of range" % i)
        if self.kind == "stl2vec":
            return self.model.embed(i)
        if self.kind == "integer":
            return np.array([float(i + 1)])
        if self.kind == "onehot":
            out = np.zeros(self.M)
            out[i] = 1.0
            return out
        return np.zeros(0)


class LstmPolicy:
    """Stacked LSTM with a bounded linear readout.

    Gate blocks are ordered (input, forget, cell, output) along the 4*N_h
    axis.  Weights are uniform in [-1/sqrt(N_h), 1/sqrt(N_h)] with the
    forget-gate bias lifted to 1.0.  The readout has no bias so zero
    weights give exactly the midpoint control.
    """

    def __init__(self, n_in, n_h, n_layers, m, u_min, u_max, seed=0):
        if n_layers < 1 or n_h < 1:
            raise ValueError("need at least one layer and one hidden unit")
        self.n_in = n_in
        self.n_h = n_h
        self.n_layers = n_layers
        self.m = m
        self.u_min = np.asarray(u_min, dtype=np.float64)
        self.u_max = np.asarray(u_max, dtype=np.float64)
        if self.u_min.shape != (m,) or self.u_max.shape != (m,):
            raise ValueError("input bounds must have shape (%d,)" % m)
        if not np.all(self.u_min < self.u_max):
            raise ValueError("u_min must be strictly below u_max")
        rng = np.random.default_rng(seed)
        lim = 1.0 / np.sqrt(n_h)
        self.Wx = []
        self.Wh = []
        self.b = []
        for layer in range(n_layers):
            d_in = n_in if layer == 0 else n_h
            self.Wx.append(graph.leaf(rng.uniform(-lim, lim, (d_in, 4 * n_h))))
            self.Wh.append(graph.leaf(rng.uniform(-lim, lim, (n_h, 4 * n_h))))
            bias = np.zeros(4 * n_h)
            bias[n_h:2 * n_h] = 1.0
            self.b.append(graph.leaf(bias))
        self.W2 = graph.leaf(rng.uniform(-lim, lim, (n_h, m)))

    @property
    def params(self):
        out = []
        for layer in range(self.n_layers):
            out += [self.Wx[layer], self.Wh[layer], self.b[layer]]
        out.append(self.W2)
        return out

    def zero_state(self, B):
        h = [graph.constant(np.zeros((B, self.n_h))) for _ in range(self.n_layers)]
        c = [graph.constant(np.zeros((B, self.n_h))) for _ in range(self.n_layers)]
        return h, c

    def step(self, hc, s):
        """One graph-mode step: (hidden, cell) lists and (B, n_in) input."""
        h, c = hc
        nh = self.n_h
        inp = s
        new_h, new_c = [], []
        for layer in range(self.n_layers):
            gates = graph.add_rowvec(
                graph.add(graph.matmul(inp, self.Wx[layer]),
                          graph.matmul(h[layer], self.Wh[layer])),
                self.b[layer])
            gi = graph.sigmoid(graph.slice_cols(gates, 0, nh))
            gf = graph.sigmoid(graph.slice_cols(gates, nh, 2 * nh))
            gg = graph.tanh(graph.slice_cols(gates, 2 * nh, 3 * nh))
            go = graph.sigmoid(graph.slice_cols(gates, 3 * nh, 4 * nh))
            cn = graph.add(graph.mul(gf, c[layer]), graph.mul(gi, gg))
            hn = graph.mul(go, graph.tanh(cn))
            new_h.append(hn)
            new_c.append(cn)
            inp = hn
        u = graph.scale_shift(graph.tanh(graph.matmul(inp, self.W2)),
                              (self.u_max - self.u_min) / 2.0,
                              (self.u_min + self.u_max) / 2.0)
        return u, (new_h, new_c)

    # numpy twin of step(), for evaluation rollouts
    def zero_state_np(self, B):
        h = [np.zeros((B, self.n_h)) for _ in range(self.n_layers)]
        c = [np.zeros((B, self.n_h)) for _ in range(self.n_layers)]
        return h, c

    def step_np(self, hc, s):
        h, c = hc
        nh = self.n_h
        inp = s
        for layer in range(self.n_layers):
            gates = inp @ self.Wx[layer].value + h[layer] @ self.Wh[layer].value \
                + self.b[layer].value
            gi = graph._expit(gates[:, 0:nh])
            gf = graph._expit(gates[:, nh:2 * nh])
            gg = np.tanh(gates[:, 2 * nh:3 * nh])
            go = graph._expit(gates[:, 3 * nh:4 * nh])
            c[layer] = gf * c[layer] + gi * gg
            h[layer] = go * np.tanh(c[layer])
            inp = h[layer]
        u = np.tanh(inp @ self.W2.value) * (self.u_max - self.u_min) / 2.0 \
            + (self.u_min + self.u_max) / 2.0
        return u, (h, c)


def policy_step(policy, hidden, s):
    """Single-vector convenience wrapper around the numpy step.

    ``hidden`` is None for a fresh rollout; returns (u, new hidden).
    """
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (policy.n_in,):
        raise ValueError("input has length %d, policy expects %d"
                         % (s.shape[0], policy.n_in))
    if hidden is None:
        hidden = policy.zero_state_np(1)
    u, hidden = policy.step_np(hidden, s[None, :])
    return u[0], hidden


def rollout(policy, dyn, x0, z, T):
    """Closed-loop numpy rollout from one initial state."""
    x0 = np.asarray(x0, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    states = np.empty((T + 1, dyn.n))
    controls = np.empty((T, dyn.m))
    states[0] = x0
    hidden = policy.zero_state_np(1)
    for t in range(T):
        s = np.concatenate([states[t], z])[None, :]
        u, hidden = policy.step_np(hidden, s)
        controls[t] = u[0]
        states[t + 1] = dyn.step(states[t][None, :], u)[0]
    return Trajectory(states, controls)


def rollout_batch_np(policy, dyn, x0s, zs, T):
    """Closed-loop rollout of many rows at once; returns (B, T+1, n)."""
    B = x0s.shape[0]
    states = np.empty((T + 1, B, dyn.n))
    states[0] = x0s
    hidden = policy.zero_state_np(B)
    for t in range(T):
        s = np.concatenate([states[t], zs], axis=1)
        u, hidden = policy.step_np(hidden, s)
        states[t + 1] = dyn.step(states[t], u)
    return np.moveaxis(states, 0, 1)


def make_batches(M, n_b, rng):
    """Shuffled spec batches: floor(M/n_b) of them, remainder on the last."""
    if not 1 <= n_b <= M:
        raise ValueError("need 1 <= batch size <= M")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    perm = rng.permutation(M)
    count = M // n_b
    batches = [list(perm[k * n_b:(k + 1) * n_b]) for k in range(count)]
    leftover = list(perm[count * n_b:])
    if leftover:
        batches[-1].extend(leftover)
    return [[int(i) for i in b] for b in batches]


@dataclass
class TrainConfig:
    T: int = 20
    epochs: int = 100
    n_b: int = 8        # specs per minibatch
    L: int = 3          # initial states per batch
    lr: float = 0.01
    mode: str = "exact"  # robustness mode for the loss
    beta: float = 10.0   # used when mode == "smooth"
    n_h: int = 32
    n_layers: int = 2
    seed: int = 0
    eval_every: int = 10
    eval_n: int = 30


@dataclass
class TrainingLog:
    columns: list
    rows: list = field(default_factory=list)

    def append(self, row):
        if len(row) != len(self.columns):
            raise ValueError("row length does not match columns")
        self.rows.append(list(row))

    def column(self, name):
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def save_csv(self, path, header=None):
        # spec names can contain commas, so let csv handle the quoting
        with open(path, "w", newline="") as fh:
            if header:
                for line in header.splitlines():
                    fh.write("# %s\n" % line)
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_cell(v) for v in row])

    @classmethod
    def load_csv(cls, path):
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(
                ln for ln in fh if not ln.startswith("#")) if r]
        log = cls(rows[0])
        for cells in rows[1:]:
            log.append([int(cells[0])] + [float(v) for v in cells[1:]])
        return log


def _cell(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def evaluate(policy, specs, encoding, dyn, sampler, n_init, T, seed=0):
    """Per-spec mean exact robustness over fresh initial states.

    Returns (per-spec means, grand mean).  Accepts one shared policy or
    a list of per-spec policies (the one-by-one baseline).
    """
    rng = np.random.default_rng(seed)
    x0s = np.stack([sampler(rng) for _ in range(n_init)])
    policies = policy if isinstance(policy, (list, tuple)) else None
    means = np.empty(len(specs))
    for i, f in enumerate(specs.specs):
        p = policies[i] if policies is not None else policy
        z = encoding.vector(i)
        zs = np.tile(z, (n_init, 1))
        states = rollout_batch_np(p, dyn, x0s, zs, T)
        vals = [robustness(f, states[r]) for r in range(n_init)]
        means[i] = np.mean(vals)
    return means, float(np.mean(means))


def _eval_fixed(policy, specs, encoding, dyn, x0s, T, policies=None):
    means = np.empty(len(specs))
    for i, f in enumerate(specs.specs):
        p = policies[i] if policies is not None else policy
        z = encoding.vector(i)
        zs = np.tile(z, (x0s.shape[0], 1))
        states = rollout_batch_np(p, dyn, x0s, zs, T)
        means[i] = np.mean([robustness(f, states[r])
                            for r in range(x0s.shape[0])])
    return means


def train(specs, encoding, dyn, sampler, cfg):
    """Fit one policy for the whole spec set; returns (policy, log).

    The log holds one row per evaluation epoch: epoch, wall_seconds,
    mean_robustness, then one exact-robustness column per spec, measured
    on a fixed held-out set of cfg.eval_n initial states.
    """
    M = len(specs)
    for f in specs.specs:
        if horizon(f) > cfg.T:
            raise ValueError("spec horizon %d exceeds T=%d" % (horizon(f), cfg.T))
    policy = LstmPolicy(dyn.n + encoding.dim, cfg.n_h, cfg.n_layers, dyn.m,
                        dyn.u_min, dyn.u_max, seed=derive_seed(cfg.seed, "init"))
    opt = Adam(policy.params, lr=cfg.lr)
    rng = np.random.default_rng(derive_seed(cfg.seed, "train"))
    eval_rng = np.random.default_rng(derive_seed(cfg.seed, "eval"))
    eval_x0s = np.stack([sampler(eval_rng) for _ in range(cfg.eval_n)])
    enc_vectors = np.stack([encoding.vector(i) for i in range(M)]) \
        if encoding.dim > 0 else np.zeros((M, 0))

    log = TrainingLog(["epoch", "wall_seconds", "mean_robustness"]
                      + ["rho_%s" % name for name in specs.names])
    t0 = time.perf_counter()

    def log_eval(epoch):
        means = _eval_fixed(policy, specs, encoding, dyn, eval_x0s, cfg.T)
        log.append([epoch, time.perf_counter() - t0, float(np.mean(means))]
                   + [float(v) for v in means])

    log_eval(0)
    for epoch in range(1, cfg.epochs + 1):
        for batch in make_batches(M, cfg.n_b, rng):
            x0s = np.stack([sampler(rng) for _ in range(cfg.L)])
            _train_batch(policy, opt, specs, enc_vectors, dyn, batch, x0s, cfg)
        if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
            log_eval(epoch)
    return policy, log


def _train_batch(policy, opt, specs, enc_vectors, dyn, batch, x0s, cfg):
    """One gradient step on a (specs x initial states) rollout block."""
    L = x0s.shape[0]
    B = len(batch) * L
    rows_x0 = np.repeat(enc_vectors[batch], L, axis=0)  # (B, enc)
    starts = np.tile(x0s, (len(batch), 1))              # (B, n)
    zc = graph.constant(rows_x0) if rows_x0.shape[1] > 0 else None

    x = graph.constant(starts)
    hc = policy.zero_state(B)
    states = [x]
    for _ in range(cfg.T):
        s = graph.concat_cols([x, zc]) if zc is not None else x
        u, hc = policy.step(hc, s)
        x = dyn.step_nodes(x, u)
        states.append(x)

    parts = []
    for k, i in enumerate(batch):
        vec = diffsem.robustness_node(specs[i], states, t=0,
                                      rows=(k * L, (k + 1) * L),
                                      mode=cfg.mode, beta=cfg.beta)
        parts.append(graph.vsum(vec))
    loss = graph.scale_shift(graph.sum_list(parts), -1.0 / B)
    try:
        graph.backward(loss)
    except graph.NonFiniteError as err:
        raise graph.NonFiniteError(
            "training diverged on batch %r: %s" % (batch, err)) from err
    opt.step()
    opt.zero_grad()
    return float(loss.value)


def train_one_by_one(specs, dyn, sampler, cfg):
    """A3 baseline: an independent policy per spec; returns (policies, logs)."""
    policies = []
    logs = []
    none_enc = SpecEncoding("none", 2)  # M unused for the zero encoding
    for i, f in enumerate(specs.specs):
        sub = _SingleSpecSet(f, specs.names[i])
        sub_cfg = _replace_seed(cfg, derive_seed(cfg.seed, "one", i))
        p, log = train(sub, none_enc, dyn, sampler, sub_cfg)
        policies.append(p)
        logs.append(log)
    return policies, logs


class _SingleSpecSet:
    """Tiny stand-in so train() can run a one-spec library."""

    def __init__(self, f, name):
        self.specs = [f]
        self.names = [name]

    def __len__(self):
        return 1

    def __getitem__(self, i):
        return self.specs[i]


def _replace_seed(cfg, seed):
    from dataclasses import replace
    return replace(cfg, seed=seed, n_b=1)


def count_params(M, N, n, m, n_h, n_layers, method, true_count=False):
    """Trainable-parameter totals for the four encoding approaches.

    The default mode reproduces the published comparison formulas, which
    count only input-to-gate and readout weights (no recurrent weights or
    biases) and, for the one-hot row, no readout at all.  true_count
    instead counts every parameter the implementation trains.
    """
    if min(M, N, n, m, n_h, n_layers) <= 0:
        raise ValueError("all size arguments must be positive")
    if not true_count:
        if method == "proposed":
            return M * N + 4 * n_h * n_layers * (n + N) + 4 * n_h * n_layers * m
        if method == "A1":
            return 4 * n_h * n_layers * n + 4 * n_h * n_layers * m
        if method == "A2":
            return 4 * n_h * n_layers * (n + M)
        if method == "A3":
            return M * (4 * n_h * n_layers * n + 4 * n_h * n_layers * m)
        raise ValueError("method must be proposed, A1, A2 or A3")

    def lstm_total(n_in):
        total = 0
        for layer in range(n_layers):
            d_in = n_in if layer == 0 else n_h
            total += 4 * n_h * (d_in + n_h) + 4 * n_h  # Wx, Wh, bias
        return total + n_h * m                          # readout

    if method == "proposed":
        return M * N + lstm_total(n + N)
    if method == "A1":
        return lstm_total(n + 1)
    if method == "A2":
        return lstm_total(n + M)
    if method == "A3":
        return M * lstm_total(n)
    raise ValueError("method must be proposed, A1, A2 or A3")


# -- checkpoint I/O ------------------------------------------------------

def save_policy(policy, path, encoding_kind="none", header=None):
    names = []
    for layer in range(policy.n_layers):
        names += [("Wx%d" % layer, policy.Wx[layer].value),
                  ("Wh%d" % layer, policy.Wh[layer].value),
                  ("b%d" % layer, policy.b[layer].value)]
    names.append(("W2", policy.W2.value))
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write("# %s\n" % line)
        fh.write("stl2vec-policy v1\n")
        fh.write("encoding %s\n" % encoding_kind)
        fh.write("dims n_in %d n_h %d layers %d m %d\n"
                 % (policy.n_in, policy.n_h, policy.n_layers, policy.m))
        fh.write("u_min %s\n" % " ".join(repr(float(v)) for v in policy.u_min))
        fh.write("u_max %s\n" % " ".join(repr(float(v)) for v in policy.u_max))
        for name, arr in names:
            fh.write("param %s %s\n" % (name, " ".join(str(d) for d in arr.shape)))
            fh.write(" ".join(repr(float(v)) for v in arr.ravel()) + "\n")


def load_policy(path):
    """Rebuild a policy from a checkpoint; returns (policy, encoding kind)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    if not lines or lines[0] != "stl2vec-policy v1":
        raise ValueError("not a v1 policy checkpoint: %r" % path)
    kind = lines[1].split()[1]
    dims = lines[2].split()
    n_in, n_h, n_layers, m = (int(dims[k]) for k in (2, 4, 6, 8))
    u_min = np.array([float(v) for v in lines[3].split()[1:]])
    u_max = np.array([float(v) for v in lines[4].split()[1:]])
    policy = LstmPolicy(n_in, n_h, n_layers, m, u_min, u_max, seed=0)
    idx = 5
    params = {}
    while idx < len(lines):
        head = lines[idx].split()
        if head[0] != "param":
            raise ValueError("malformed checkpoint line: %r" % lines[idx])
        shape = tuple(int(v) for v in head[2:])
        vals = np.array([float(v) for v in lines[idx + 1].split()]).reshape(shape)
        params[head[1]] = vals
        idx += 2
    for layer in range(n_layers):
        policy.Wx[layer].value = params["Wx%d" % layer]
        policy.Wh[layer].value = params["Wh%d" % layer]
        policy.b[layer].value = params["b%d" % layer]
    policy.W2.value = params["W2"]
    return policy, kind
