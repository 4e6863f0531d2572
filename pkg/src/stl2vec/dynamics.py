"""Discrete-time control systems with graph-compatible step functions.

Every model exposes the same update twice: ``step`` on plain arrays
(vectorized over a batch of rows) and ``step_nodes`` on (B, n)/(B, m)
graph nodes, written with the same elementwise operations in the same
order so both paths produce bitwise-identical states.
"""

import numpy as np

from . import graph
from .logic.semantics import Trajectory


class DynamicsModel:
    """Base: subclasses set n, m, u_min, u_max and the two step forms."""

    n = None
    m = None

    def __init__(self, u_min, u_max):
        self.u_min = np.asarray(u_min, dtype=np.float64)
        self.u_max = np.asarray(u_max, dtype=np.float64)
        if self.u_min.shape != (self.m,) or self.u_max.shape != (self.m,):
            raise ValueError("input bounds must have shape (%d,)" % self.m)
        if not np.all(self.u_min < self.u_max):
            raise ValueError("u_min must be strictly below u_max")

    def step(self, x, u):
        raise NotImplementedError

    def step_nodes(self, x, u):
        raise NotImplementedError

    def _check(self, x, u):
        if x.shape[-1] != self.n:
            raise ValueError("state dim %d, expected %d" % (x.shape[-1], self.n))
        if u.shape[-1] != self.m:
            raise ValueError("input dim %d, expected %d" % (u.shape[-1], self.m))

    def simulate(self, x0, controls):
        """Roll controls (T, m) out from x0 and return the Trajectory."""
        x0 = np.asarray(x0, dtype=np.float64)
        controls = np.asarray(controls, dtype=np.float64)
        states = np.empty((controls.shape[0] + 1, self.n))
        states[0] = x0
        for t in range(controls.shape[0]):
            states[t + 1] = self.step(states[t][None, :], controls[t][None, :])[0]
        return Trajectory(states, controls)


class Integrator1D(DynamicsModel):
    """x' = x + u with one bounded input; the smallest useful testbed."""

    n = 1
    m = 1

    def __init__(self, u_min=(-1.0,), u_max=(1.0,)):
        super().__init__(u_min, u_max)

    def step(self, x, u):
        self._check(x, u)
        return x + u

    def step_nodes(self, x, u):
        return graph.add(x, u)


class Unicycle(DynamicsModel):
    """Nonholonomic unicycle on (q_x, q_y, theta) driven by (v, omega).

    Update: q_x' = q_x + v sin(theta), q_y' = q_y + v cos(theta),
    theta' = theta + omega.  Note x advances with sin and y with cos, so
    theta = 0 points along +y.
    """

    n = 3
    m = 2

    def __init__(self, u_min=(0.0, -0.5), u_max=(1.0, 0.5)):
        super().__init__(u_min, u_max)

    def step(self, x, u):
        self._check(x, u)
        out = np.empty_like(x)
        th = x[..., 2]
        out[..., 0] = x[..., 0] + u[..., 0] * np.sin(th)
        out[..., 1] = x[..., 1] + u[..., 0] * np.cos(th)
        out[..., 2] = th + u[..., 1]
        return out

    def step_nodes(self, x, u):
        th = graph.getcol(x, 2)
        v = graph.getcol(u, 0)
        qx = graph.add(graph.getcol(x, 0), graph.mul(v, graph.sin(th)))
        qy = graph.add(graph.getcol(x, 1), graph.mul(v, graph.cos(th)))
        th2 = graph.add(th, graph.getcol(u, 1))
        return graph.stack_cols([qx, qy, th2])
