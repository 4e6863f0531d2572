"""Region map, spec libraries and the case-study vehicle model."""

import numpy as np
import pytest

from stl2vec.dynamics import Integrator1D, Unicycle
from stl2vec.logic.ast import horizon
from stl2vec.logic.semantics import Trajectory, robustness
from stl2vec.world import (
    REGIONS, BoxSampler, RegionMap, build_small_specs, build_specs,
    make_sampler,
)


def test_region_coordinates():
    assert REGIONS == {
        1: (3.0, 5.0, 7.0, 9.0),
        2: (3.0, 5.0, 3.0, 5.0),
        3: (7.0, 9.0, 3.0, 5.0),
        4: (7.0, 9.0, 7.0, 9.0),
    }
    rmap = RegionMap()
    assert rmap.region(2) == (3.0, 5.0, 3.0, 5.0)
    assert np.array_equal(rmap.x0_lo, [0.0, 0.0])
    assert np.array_equal(rmap.x0_hi, [0.7, 0.7])
    assert rmap.theta0 == 0.0


def test_subregions_tile_each_region():
    rmap = RegionMap()
    for i in range(1, 5):
        xlo, xhi, ylo, yhi = rmap.region(i)
        quads = [rmap.subregion(i, j) for j in range(1, 5)]
        for q in quads:
            assert q[1] - q[0] == 1.0 and q[3] - q[2] == 1.0
        # quadrant layout: 1 lower-left, 2 lower-right, 3 upper-left, 4 upper-right
        assert quads[0] == (xlo, xlo + 1, ylo, ylo + 1)
        assert quads[1] == (xlo + 1, xhi, ylo, ylo + 1)
        assert quads[2] == (xlo, xlo + 1, ylo + 1, yhi)
        assert quads[3] == (xlo + 1, xhi, ylo + 1, yhi)
    with pytest.raises(ValueError):
        rmap.subregion(1, 5)
    with pytest.raises(ValueError):
        rmap.subregion(1, 0)


def test_subregion_centers():
    rmap = RegionMap()
    assert np.array_equal(rmap.subregion_center(2, 1), [3.5, 3.5])
    assert np.array_equal(rmap.subregion_center(1, 4), [4.5, 8.5])
    assert np.array_equal(rmap.subregion_center(3, 2), [8.5, 3.5])


def _at(point):
    # single-state trajectory for robustness probes
    state = np.array([point[0], point[1], 0.0])
    return Trajectory(state[None, :], np.zeros((0, 2)))


def test_region_formula_margins():
    rmap = RegionMap()
    # center of a 1x1 quadrant sits 0.5 from every face
    f = rmap.subregion_formula(2, 1)
    assert robustness(f, _at([3.5, 3.5])) == 0.5
    # center of a full 2x2 region sits 1.0 from every face
    g = rmap.region_formula(1)
    assert robustness(g, _at([4.0, 8.0])) == 1.0
    # outside by 1 in x: negative by that margin
    assert robustness(f, _at([2.0, 3.5])) == -1.0


def test_library_counts():
    rmap = RegionMap()
    assert len(build_specs(rmap, "full")) == 369
    assert len(build_specs(rmap, "training")) == 194
    assert len(build_specs(rmap, ("a",))) == 16
    assert len(build_specs(rmap, ("a", "d"))) == 32
    assert len(build_specs(rmap, ("b",))) == 96
    assert len(build_specs(rmap, ("c",))) == 144
    assert len(build_specs(rmap, ("e1", "f"))) == 2
    with pytest.raises(ValueError):
        build_specs(rmap, "medium")
    with pytest.raises(ValueError):
        build_specs(rmap, ("a", "z"))


def test_training_library_composition():
    rmap = RegionMap()
    lib = build_specs(rmap, "training")
    names = lib.names
    assert sum(1 for n in names if n.startswith("F Reg(")
               and "|" not in n and "&" not in n) == 16
    assert sum(1 for n in names if "|" in n and n.startswith("F Reg(")) == 96
    c_names = [n for n in names if n.startswith("F[0,10]")]
    assert len(c_names) == 80  # five published region pairs, 16 each
    for i1, i3 in [(1, 3), (2, 1), (2, 3), (2, 4), (4, 3)]:
        present = [n for n in c_names
                   if n.startswith("F[0,10] Reg(%d," % i1)
                   and "F[11,20] Reg(%d," % i3 in n]
        assert len(present) == 16, (i1, i3)
    assert "FG Reg(1,1) | FG Reg(3,2)" in names
    assert "F Reg(4,4) & (!Reg(4,4) U Reg(2,3))" in names


def test_all_specs_fit_the_episode():
    rmap = RegionMap()
    lib = build_specs(rmap, "full")
    assert max(horizon(f) for f in lib.specs) == 20


def test_small_library_layout():
    rmap = RegionMap()
    lib = build_small_specs(rmap)
    assert len(lib) == 12
    assert lib.names[:8] == ["F Reg(2,%d)" % j for j in range(1, 5)] \
        + ["F Reg(3,%d)" % j for j in range(1, 5)]
    # all four disjunctions share the same near branch
    assert lib.names[8:] == ["F Reg(3,%d) | F Reg(2,2)" % k
                             for k in range(1, 5)]
    with pytest.raises(ValueError):
        build_small_specs(rmap, regions=(3, 3))


def test_small_library_far_branch_orientation():
    # with regions swapped in the argument the near/far split is unchanged:
    # region 2 is closer to the origin than region 3
    rmap = RegionMap()
    a = build_small_specs(rmap, regions=(2, 3))
    b = build_small_specs(rmap, regions=(3, 2))
    assert a.names == b.names


def test_box_sampler():
    s = BoxSampler(np.array([0.0, 0.0]), np.array([0.7, 0.7]), theta0=0.0)
    assert s.n == 3
    lo, hi = s.box
    assert np.array_equal(lo, [0.0, 0.0, 0.0])
    assert np.array_equal(hi, [0.7, 0.7, 0.0])
    rng = np.random.default_rng(2)
    draws = np.stack([s(rng) for _ in range(200)])
    assert draws.shape == (200, 3)
    assert np.all(draws[:, :2] >= 0.0) and np.all(draws[:, :2] <= 0.7)
    assert np.all(draws[:, 2] == 0.0)
    # seeded reproducibility
    again = np.stack([s(np.random.default_rng(2)) for _ in range(1)])
    assert np.array_equal(draws[0], again[0])


def test_make_sampler_uses_map_fields():
    rmap = RegionMap(x0_lo=np.array([0.1, 0.2]), x0_hi=np.array([0.3, 0.4]),
                     theta0=0.5)
    s = make_sampler(rmap)
    assert np.array_equal(s.lo, [0.1, 0.2])
    assert np.array_equal(s.hi, [0.3, 0.4])
    assert s.theta0 == 0.5


# -- case-study dynamics -------------------------------------------------

def test_unicycle_step_examples():
    dyn = Unicycle()
    assert (dyn.n, dyn.m) == (3, 2)
    assert np.array_equal(dyn.u_min, [0.0, -0.5])
    assert np.array_equal(dyn.u_max, [1.0, 0.5])
    # heading 0 points along +y
    out = dyn.step(np.array([[0.0, 0.0, 0.0]]), np.array([[1.0, 0.0]]))
    assert np.array_equal(out, [[0.0, 1.0, 0.0]])
    # heading pi/2 points along +x
    out = dyn.step(np.array([[0.0, 0.0, np.pi / 2]]), np.array([[1.0, 0.0]]))
    assert np.allclose(out, [[1.0, 0.0, np.pi / 2]], atol=1e-15)
    # turning only changes heading
    out = dyn.step(np.array([[0.0, 0.0, 0.0]]), np.array([[0.0, 0.3]]))
    assert np.allclose(out, [[0.0, 0.0, 0.3]])


def test_unicycle_batch_and_node_paths_agree():
    from stl2vec import graph
    dyn = Unicycle()
    rng = np.random.default_rng(5)
    x = rng.normal(size=(4, 3))
    u = rng.uniform([0.0, -0.5], [1.0, 0.5], size=(4, 2))
    batch = dyn.step(x, u)
    for r in range(4):
        assert np.array_equal(batch[r], dyn.step(x[r][None, :], u[r][None, :])[0])
    nodes = dyn.step_nodes(graph.constant(x), graph.constant(u))
    assert np.array_equal(nodes.value, batch)


def test_simulate_rolls_stepwise():
    dyn = Unicycle()
    rng = np.random.default_rng(6)
    x0 = np.array([0.2, 0.3, 0.0])
    controls = rng.uniform([0.0, -0.5], [1.0, 0.5], size=(6, 2))
    traj = dyn.simulate(x0, controls)
    assert traj.states.shape == (7, 3)
    assert np.array_equal(traj.states[0], x0)
    for t in range(6):
        ref = dyn.step(traj.states[t][None, :], controls[t][None, :])[0]
        assert np.array_equal(traj.states[t + 1], ref)


def test_integrator_is_cumulative_sum():
    dyn = Integrator1D()
    controls = np.array([[0.5], [-0.25], [1.0]])
    traj = dyn.simulate(np.array([0.1]), controls)
    assert np.allclose(traj.states[:, 0], [0.1, 0.6, 0.35, 1.35])


def test_dynamics_validation():
    dyn = Unicycle()
    with pytest.raises(ValueError):
        dyn.step(np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        dyn.step(np.zeros((1, 3)), np.zeros((1, 3)))
    with pytest.raises(ValueError):
        Unicycle(u_min=(1.0, 0.0), u_max=(0.5, 0.5))
    with pytest.raises(ValueError):
        Integrator1D(u_min=(0.0, 0.0), u_max=(1.0,))
