"""Open-loop robustness maximization over bounded control sequences.

Maximizes the smooth robustness of a formula by Adam ascent on unbounded
parameters theta, squashed into the input box through
u = u_min + (u_max - u_min)/2 * (tanh(theta) + 1) so feasibility holds by
construction.  Several restarts are run: the first from mid-range
controls (theta = 0), the rest from Gaussian theta and an initial state
resampled in the vicinity ball of x0.  The reported solution is the best
iterate ever seen across all restarts, ranked by exact (not smooth)
robustness; every iterate's exact score is evaluated so improvements
are never lost to a late smooth-objective dip.
"""

from dataclasses import dataclass

import numpy as np

from . import diffsem, graph
from .logic.ast import TrueFormula, horizon
from .logic.semantics import TRUE_ROBUSTNESS, Trajectory, robustness
from .optim import Adam


@dataclass
class OptConfig:
    T: int = 20
    beta: float = 10.0
    iters: int = 150
    lr: float = 0.1
    restarts: int = 3
    vicinity: float = 0.1
    threshold: float = 0.0  # exact robustness above this counts as success
    stop_at: float = None   # early-stop level; None runs every iteration
    seed: int = 0


@dataclass
class OptResult:
    controls: np.ndarray
    trajectory: Trajectory
    robustness: float
    smooth_robustness: float
    iterations: int
    restart: int
    success: bool


def resample_vicinity(x0, eps, rng, box=None):
    """Uniform draw from the Euclidean ball of radius eps around x0.

    With ``box`` = (lo, hi) the sample is clipped back into the initial
    state set.  eps = 0 returns x0 unchanged.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if eps < 0:
        raise ValueError("vicinity radius must be nonnegative")
    if eps == 0:
        return x0.copy()
    d = x0.shape[0]
    direction = rng.standard_normal(d)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        direction = np.zeros(d)
        direction[0] = 1.0
        norm = 1.0
    r = eps * rng.random() ** (1.0 / d)
    out = x0 + direction / norm * r
    if box is not None:
        out = np.clip(out, box[0], box[1])
    return out


def _squash_np(theta, u_min, u_max):
    return np.tanh(theta) * (u_max - u_min) / 2.0 + (u_min + u_max) / 2.0


def _rollout_states(dyn, start, u_node, T):
    x = graph.constant(start[None, :])
    states = [x]
    for t in range(T):
        x = dyn.step_nodes(x, graph.slice_rows(u_node, t, t + 1))
        states.append(x)
    return states


def _smooth_score(f, dyn, start, controls, cfg):
    u = graph.constant(controls)  # already squashed, forward pass only
    states = _rollout_states(dyn, start, u, cfg.T)
    vec = diffsem.robustness_node(f, states, mode="smooth", beta=cfg.beta)
    return float(vec.value[0])


def optimize(f, x0, dyn, cfg, init_box=None):
    """Best-effort solution of max over controls of rho^f on the rollout."""
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (dyn.n,):
        raise ValueError("x0 shape %s, expected (%d,)" % (x0.shape, dyn.n))
    if cfg.T < horizon(f):
        raise ValueError("horizon %d exceeds T=%d" % (horizon(f), cfg.T))

    if isinstance(f, TrueFormula):
        u = _squash_np(np.zeros((cfg.T, dyn.m)), dyn.u_min, dyn.u_max)
        traj = dyn.simulate(x0, u)
        return OptResult(u, traj, TRUE_ROBUSTNESS, TRUE_ROBUSTNESS, 0, 0, True)

    rng = np.random.default_rng(cfg.seed)
    scale = (dyn.u_max - dyn.u_min) / 2.0
    shift = (dyn.u_min + dyn.u_max) / 2.0

    best = None  # (exact rob, controls, start, iteration, restart)
    failures = []
    for restart in range(cfg.restarts):
        if restart == 0:
            theta0 = np.zeros((cfg.T, dyn.m))
            start = x0.copy()
        else:
            theta0 = rng.standard_normal((cfg.T, dyn.m)) * 0.5
            start = resample_vicinity(x0, cfg.vicinity, rng, box=init_box)
        try:
            best = _ascend(f, start, dyn, cfg, theta0, scale, shift, restart, best)
        except graph.NonFiniteError as err:
            failures.append((restart, err))
            continue
        if cfg.stop_at is not None and best is not None and best[0] > cfg.stop_at:
            break
    if best is None:
        raise graph.NonFiniteError(
            "all %d restarts failed numerically: %r" % (cfg.restarts, failures))

    rob, u, start, iters, restart = best
    traj = dyn.simulate(start, u)
    smooth_rob = _smooth_score(f, dyn, start, u, cfg)
    return OptResult(u, traj, rob, smooth_rob, iters, restart,
                     rob > cfg.threshold)


def _ascend(f, start, dyn, cfg, theta0, scale, shift, restart, best):
    theta = graph.leaf(theta0.copy())
    opt = Adam([theta], lr=cfg.lr)

    for it in range(cfg.iters + 1):
        u_np = _squash_np(theta.value, dyn.u_min, dyn.u_max)
        traj = dyn.simulate(start, u_np)
        rob = robustness(f, traj)
        if best is None or rob > best[0]:
            best = (rob, u_np, start.copy(), it, restart)
        if it == cfg.iters:
            break
        if cfg.stop_at is not None and best[0] > cfg.stop_at:
            break
        u = graph.scale_shift(graph.tanh(theta), scale, shift)
        states = _rollout_states(dyn, start, u, cfg.T)
        vec = diffsem.robustness_node(f, states, mode="smooth", beta=cfg.beta)
        loss = graph.neg(graph.vsum(vec))
        graph.backward(loss)
        opt.step()
        opt.zero_grad()
    return best
