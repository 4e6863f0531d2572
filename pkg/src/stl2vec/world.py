"""Case-study map, initial-state sampling and the spec-template library.

Four 2x2 regions sit at the corners of a 12x12 workspace; each splits
into four 1x1 quadrant sub-regions Reg(i, j) with j = 1 lower-left,
2 lower-right, 3 upper-left, 4 upper-right.  The vehicle starts in the
box X0 = [0, 0.7]^2 with heading 0.  Spec templates (a)..(f) enumerate
reach, disjunctive-reach, sequenced-reach, stabilization and
until-guarded tasks over the sub-regions; the full library has 369
specs and the reduced training library 194.
"""

from dataclasses import dataclass, field

import numpy as np

from .embedding import SpecSet
from .logic.ast import (And, Not, Or, Until, Interval, always, eventually,
                        rect_region)

REGIONS = {
    1: (3.0, 5.0, 7.0, 9.0),
    2: (3.0, 5.0, 3.0, 5.0),
    3: (7.0, 9.0, 3.0, 5.0),
    4: (7.0, 9.0, 7.0, 9.0),
}


@dataclass
class RegionMap:
    regions: dict = field(default_factory=lambda: dict(REGIONS))
    x0_lo: np.ndarray = None
    x0_hi: np.ndarray = None
    theta0: float = 0.0

    def __post_init__(self):
        if self.x0_lo is None:
            self.x0_lo = np.array([0.0, 0.0])
        if self.x0_hi is None:
            self.x0_hi = np.array([0.7, 0.7])
        self.x0_lo = np.asarray(self.x0_lo, dtype=np.float64)
        self.x0_hi = np.asarray(self.x0_hi, dtype=np.float64)

    def region(self, i):
        return self.regions[i]

    def subregion(self, i, j):
        """Coordinates of quadrant j of region i (1x1 squares)."""
        xlo, xhi, ylo, yhi = self.regions[i]
        mx = (xlo + xhi) / 2.0
        my = (ylo + yhi) / 2.0
        if j == 1:
            return (xlo, mx, ylo, my)
        if j == 2:
            return (mx, xhi, ylo, my)
        if j == 3:
            return (xlo, mx, my, yhi)
        if j == 4:
            return (mx, xhi, my, yhi)
        raise ValueError("sub-region index must be 1..4, got %r" % (j,))

    def subregion_center(self, i, j):
        xlo, xhi, ylo, yhi = self.subregion(i, j)
        return np.array([(xlo + xhi) / 2.0, (ylo + yhi) / 2.0])

    def region_formula(self, i, dim=3):
        return rect_region(*self.regions[i], dim=dim,
                           label="Reg%d" % i)

    def subregion_formula(self, i, j, dim=3):
        return rect_region(*self.subregion(i, j), dim=dim,
                           label="Reg(%d,%d)" % (i, j))


@dataclass
class BoxSampler:
    """Uniform initial states: position in [lo, hi], fixed heading.

    Callable rng -> state; the ``box`` attribute (full state bounds) is
    what vicinity resampling clips against.  theta0=None drops the
    heading component for systems whose state is just the position.
    """

    lo: np.ndarray
    hi: np.ndarray
    theta0: float = 0.0

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)

    @property
    def n(self):
        return self.lo.shape[0] + (0 if self.theta0 is None else 1)

    @property
    def box(self):
        if self.theta0 is None:
            return (self.lo.copy(), self.hi.copy())
        return (np.append(self.lo, self.theta0),
                np.append(self.hi, self.theta0))

    def __call__(self, rng):
        pos = rng.uniform(self.lo, self.hi)
        if self.theta0 is None:
            return pos
        return np.append(pos, self.theta0)


def make_sampler(rmap):
    return BoxSampler(rmap.x0_lo, rmap.x0_hi, rmap.theta0)


def _f_reach(rmap, i, j):
    return eventually(0, 20, rmap.subregion_formula(i, j))


def _fg_stay(rmap, i, j):
    return eventually(0, 15, always(0, 5, rmap.subregion_formula(i, j)))


_C_PAIRS_TRAINING = [(1, 3), (2, 1), (2, 3), (2, 4), (4, 3)]


def build_specs(rmap, which="full"):
    """Spec library over the region map.

    ``which`` is "full" (369 specs, templates (a)-(f)), "training" (the
    194-spec reduced library: all of (a) and (b), template (c) only for
    the five published (i1, i3) pairs, one (e) spec and (f)), "small"
    (12 specs over two regions for quick runs), or a tuple of template
    letters drawn from "abcdef".
    """
    if which == "small":
        return build_small_specs(rmap)
    if which == "full":
        templates = ("a", "b", "c", "d", "e", "f")
        c_pairs = None
    elif which == "training":
        templates = ("a", "b", "c", "e1", "f")
        c_pairs = _C_PAIRS_TRAINING
    elif isinstance(which, (tuple, list)):
        templates = tuple(which)
        c_pairs = None
    else:
        raise ValueError("unknown spec selection %r" % (which,))

    specs = []
    names = []

    def add(f, name):
        specs.append(f)
        names.append(name)

    for tpl in templates:
        if tpl == "a":
            for i in range(1, 5):
                for j in range(1, 5):
                    add(_f_reach(rmap, i, j), "F Reg(%d,%d)" % (i, j))
        elif tpl == "b":
            for i1 in range(1, 5):
                for j1 in range(1, 5):
                    for i2 in range(1, i1):
                        for j2 in range(1, 5):
                            add(Or(_f_reach(rmap, i1, j1), _f_reach(rmap, i2, j2)),
                                "F Reg(%d,%d) | F Reg(%d,%d)" % (i1, j1, i2, j2))
        elif tpl == "c":
            pairs = c_pairs
            if pairs is None:
                pairs = [(i1, i3) for i1 in range(1, 5) for i3 in range(2, 5)
                         if i1 != i3]
            for i1, i3 in pairs:
                for j1 in range(1, 5):
                    for j2 in range(1, 5):
                        add(And(eventually(0, 10, rmap.subregion_formula(i1, j1)),
                                eventually(11, 20, rmap.subregion_formula(i3, j2))),
                            "F[0,10] Reg(%d,%d) & F[11,20] Reg(%d,%d)"
                            % (i1, j1, i3, j2))
        elif tpl == "d":
            for i in range(1, 5):
                for j in range(1, 5):
                    add(_fg_stay(rmap, i, j), "FG Reg(%d,%d)" % (i, j))
        elif tpl == "e":
            for i1 in range(1, 5):
                for j1 in range(1, 5):
                    for i2 in range(1, i1):
                        for j2 in range(1, 5):
                            add(Or(_fg_stay(rmap, i1, j1), _fg_stay(rmap, i2, j2)),
                                "FG Reg(%d,%d) | FG Reg(%d,%d)"
                                % (i1, j1, i2, j2))
        elif tpl == "e1":
            add(Or(_fg_stay(rmap, 1, 1), _fg_stay(rmap, 3, 2)),
                "FG Reg(1,1) | FG Reg(3,2)")
        elif tpl == "f":
            guard = Until(Interval(0, 20),
                          Not(rmap.subregion_formula(4, 4)),
                          rmap.subregion_formula(2, 3))
            add(And(_f_reach(rmap, 4, 4), guard),
                "F Reg(4,4) & (!Reg(4,4) U Reg(2,3))")
        else:
            raise ValueError("unknown template %r" % (tpl,))
    return SpecSet(specs, names)


def build_small_specs(rmap, regions=(2, 3), near_quadrant=2):
    """Reduced 12-spec library: all (a) reach specs over two regions plus
    four (b) disjunctions pairing each quadrant of the farther region with
    one shared quadrant of the nearer one.

    The shared near branch makes the disjunctions' optimal trajectories
    coincide, so their robustness values tie and the skip-gram records
    form one dense family.  With the defaults the near branch is
    Reg(2,2), whose approach corridor from X0 also keeps the runner-up
    context spec consistent across random draws.
    """
    near = min(regions, key=lambda i: np.linalg.norm(
        np.array(rmap.regions[i]).reshape(2, 2).mean(axis=1)))
    far = max(regions, key=lambda i: np.linalg.norm(
        np.array(rmap.regions[i]).reshape(2, 2).mean(axis=1)))
    if near == far:
        raise ValueError("regions must differ in distance from the origin")
    specs = []
    names = []
    for i in sorted(regions):
        for j in range(1, 5):
            specs.append(_f_reach(rmap, i, j))
            names.append("F Reg(%d,%d)" % (i, j))
    for k in range(1, 5):
        specs.append(Or(_f_reach(rmap, far, k), _f_reach(rmap, near, near_quadrant)))
        names.append("F Reg(%d,%d) | F Reg(%d,%d)" % (far, k, near, near_quadrant))
    return SpecSet(specs, names)
