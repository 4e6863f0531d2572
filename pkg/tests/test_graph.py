"""Tape correctness: values, gradients, extrema routing, Adam updates."""

import numpy as np
import pytest

from stl2vec import graph
from stl2vec.graph import (
    Node, NonFiniteError, add, add_rowvec, affine_rows, backward, concat_cols,
    constant, cos, exp, getcol, grad_check, hard_max, hard_min, leaf, matmul,
    mul, neg, scale_shift, sigmoid, sin, slice_cols, slice_rows, smooth_max,
    smooth_min, stack_cols, sub, sum_list, tanh, vmax_many, vmin_many,
    vsmooth_max, vsmooth_min, vsum,
)
from stl2vec.optim import Adam


def test_scalar_arithmetic_values_and_grads():
    a = leaf(3.0)
    b = leaf(-2.0)
    y = mul(add(a, b), a)  # (a+b)*a
    assert y.value == 3.0
    backward(y)
    assert a.grad == 2 * 3.0 + (-2.0)
    assert b.grad == 3.0


def test_operator_sugar():
    a = leaf(2.0)
    b = leaf(5.0)
    assert (a + b).value == 7.0
    assert (a + 1.0).value == 3.0
    assert (a * b).value == 10.0
    assert (a * 4.0).value == 8.0
    assert (-a).value == -2.0
    assert (b - a).value == 3.0
    assert (b - 0.5).value == 4.5


def test_leaf_coerces_to_float64():
    n = leaf([1, 2, 3])
    assert isinstance(n.value, np.ndarray)
    assert n.value.dtype == np.float64
    c = constant((1.5, 2.5))
    assert c.op == "const"
    assert c.value.dtype == np.float64
    assert "Node" in repr(n) and "Node" in repr(leaf(1.0))


def test_diamond_accumulates():
    x = leaf(4.0)
    y = add(mul(x, x), x)  # x^2 + x
    backward(y)
    assert x.grad == 2 * 4.0 + 1.0


def test_repeated_backward_is_bitwise_stable():
    rng = np.random.default_rng(7)
    W = leaf(rng.normal(size=(3, 4)))
    x = constant(rng.normal(size=(2, 3)))
    y = vsum(tanh(matmul(x, W)))
    backward(y)
    g1 = W.grad.copy()
    backward(y)  # grads reset inside backward, so a rerun matches exactly
    assert np.array_equal(g1, W.grad)


def test_long_chain_is_iterative():
    # 5000 chained adds would blow the recursion limit if toposort recursed
    x = leaf(0.0)
    y = x
    for _ in range(5000):
        y = add(y, constant(1.0))
    assert y.value == 5000.0
    backward(y)
    assert x.grad == 1.0


def test_nonfinite_value_raises():
    with pytest.raises(NonFiniteError):
        Node(float("nan"))
    with pytest.raises(NonFiniteError):
        Node(np.array([1.0, np.inf]))
    with np.errstate(over="ignore"):
        with pytest.raises(NonFiniteError):
            exp(leaf(1000.0))


def test_nonfinite_gradient_raises():
    # value stays ~1.0 but the two branches push 1e308 each into neg's grad
    x = leaf(-5e-309)
    b = neg(x)
    y = add(mul(b, constant(1e308)), mul(b, constant(1e308)))
    assert np.isfinite(y.value)
    with pytest.raises(NonFiniteError):
        backward(y)


def test_backward_needs_scalar():
    with pytest.raises(ValueError):
        backward(leaf([1.0, 2.0]))


def test_empty_extrema_raise():
    for op in (hard_max, hard_min, vmax_many, vmin_many, sum_list):
        with pytest.raises(ValueError):
            op([])
    for op in (smooth_max, smooth_min, vsmooth_max, vsmooth_min):
        with pytest.raises(ValueError):
            op([], 1.0)
        with pytest.raises(ValueError):
            op([leaf(1.0)], 0.0)
        with pytest.raises(ValueError):
            op([leaf(1.0)], -2.0)


def test_hard_extrema_route_to_first_winner():
    a, b, c = leaf(1.0), leaf(5.0), leaf(5.0)
    y = hard_max([a, b, c])
    assert y.value == 5.0
    backward(y)
    assert (a.grad, b.grad, c.grad) == (None, 1.0, None)

    a, b, c = leaf(-2.0), leaf(-2.0), leaf(3.0)
    y = hard_min([a, b, c])
    assert y.value == -2.0
    backward(y)
    assert (a.grad, b.grad, c.grad) == (1.0, None, None)


def test_vector_extrema_route_per_element():
    a = leaf([1.0, 5.0, 2.0])
    b = leaf([1.0, 3.0, 9.0])
    y = vmax_many([a, b])
    assert np.array_equal(y.value, [1.0, 5.0, 9.0])
    backward(vsum(y))
    # tie at element 0 goes to the first argument
    assert np.array_equal(a.grad, [1.0, 1.0, 0.0])
    assert np.array_equal(b.grad, [0.0, 0.0, 1.0])

    a = leaf([1.0, 5.0, 2.0])
    b = leaf([1.0, 3.0, 9.0])
    y = vmin_many([a, b])
    assert np.array_equal(y.value, [1.0, 3.0, 2.0])
    backward(vsum(y))
    assert np.array_equal(a.grad, [1.0, 0.0, 1.0])
    assert np.array_equal(b.grad, [0.0, 1.0, 0.0])


def test_smooth_extrema_bounds():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = rng.integers(2, 7)
        beta = float(rng.uniform(0.5, 30.0))
        vals = rng.normal(scale=3.0, size=m)
        hi = smooth_max([leaf(v) for v in vals], beta).value
        lo = smooth_min([leaf(v) for v in vals], beta).value
        assert vals.max() <= hi <= vals.max() + np.log(m) / beta + 1e-12
        assert vals.min() - np.log(m) / beta - 1e-12 <= lo <= vals.min()


def test_smooth_extrema_large_beta_no_overflow():
    vals = [900.0, 1000.0, 999.5]
    hi = smooth_max([leaf(v) for v in vals], 1e6)
    lo = smooth_min([leaf(v) for v in vals], 1e6)
    assert abs(hi.value - 1000.0) < 1e-5
    assert abs(lo.value - 900.0) < 1e-5
    backward(hi)  # weights must be finite too


def test_vector_smooth_matches_scalar_smooth():
    rng = np.random.default_rng(3)
    for _ in range(20):
        arr = rng.normal(size=(3, 5))
        beta = float(rng.uniform(1.0, 20.0))
        vec = vsmooth_max([leaf(row) for row in arr], beta).value
        for j in range(5):
            ref = smooth_max([leaf(v) for v in arr[:, j]], beta).value
            assert abs(vec[j] - ref) < 1e-12
        vec = vsmooth_min([leaf(row) for row in arr], beta).value
        for j in range(5):
            ref = smooth_min([leaf(v) for v in arr[:, j]], beta).value
            assert abs(vec[j] - ref) < 1e-12


def test_sigmoid_is_stable_at_extremes():
    assert sigmoid(leaf(1000.0)).value == 1.0
    assert sigmoid(leaf(-1000.0)).value == 0.0
    arr = sigmoid(leaf([-800.0, 0.0, 800.0])).value
    assert np.array_equal(arr, [0.0, 0.5, 1.0])


def test_grad_mlp_block():
    rng = np.random.default_rng(11)
    for _ in range(5):
        W = leaf(rng.normal(size=(3, 4)))
        b = leaf(rng.normal(size=4))
        x = constant(rng.normal(size=(2, 3)))

        def build():
            h = tanh(add_rowvec(matmul(x, W), b))
            return vsum(sigmoid(h))

        assert grad_check(build, [W, b]) < 1e-5


def test_grad_trig_and_scale():
    rng = np.random.default_rng(12)
    for _ in range(5):
        a = leaf(rng.normal(size=(2, 3)))

        def build():
            return vsum(mul(sin(a), cos(scale_shift(a, 0.5, 0.25))))

        assert grad_check(build, [a]) < 1e-5


def test_grad_slicing_ops():
    rng = np.random.default_rng(13)
    for _ in range(5):
        a = leaf(rng.normal(size=(4, 6)))

        def build():
            left = slice_cols(a, 0, 3)
            right = slice_cols(a, 3, 6)
            top = slice_rows(a, 0, 2)
            col = getcol(a, 1)
            y = vsum(mul(left, right)) + vsum(tanh(top))
            return add(y, vsum(exp(scale_shift(col, 0.1))))

        assert grad_check(build, [a]) < 1e-5


def test_grad_concat_and_stack():
    rng = np.random.default_rng(14)
    for _ in range(5):
        a = leaf(rng.normal(size=(3, 2)))
        b = leaf(rng.normal(size=(3, 4)))

        def build():
            cat = concat_cols([a, b])
            cols = stack_cols([getcol(cat, j) for j in (0, 2, 5)])
            return vsum(tanh(cols))

        assert grad_check(build, [a, b]) < 1e-5


def test_grad_affine_rows():
    rng = np.random.default_rng(15)
    c = rng.normal(size=3)
    for _ in range(5):
        x = leaf(rng.normal(size=(5, 3)))

        def build():
            v = affine_rows(x, 1, 4, c, 0.7)
            return vsum(sin(v))

        assert grad_check(build, [x]) < 1e-5


def test_grad_smooth_extrema():
    rng = np.random.default_rng(16)
    for _ in range(5):
        xs = [leaf(float(v)) for v in rng.normal(size=4)]
        vs = [leaf(rng.normal(size=5)) for _ in range(3)]
        beta = float(rng.uniform(2.0, 12.0))

        def build():
            s = add(smooth_max(xs, beta), smooth_min(xs, beta))
            v = add(vsum(vsmooth_max(vs, beta)), vsum(vsmooth_min(vs, beta)))
            return add(s, v)

        assert grad_check(build, xs + vs) < 1e-4


def test_grad_hard_extrema_away_from_ties():
    rng = np.random.default_rng(17)
    for _ in range(5):
        xs = [leaf(float(v)) for v in rng.normal(scale=5.0, size=4)]

        def build():
            return add(hard_max(xs), mul(hard_min(xs), constant(0.5)))

        assert grad_check(build, xs) < 1e-5


def test_grad_sum_list_and_sub_neg():
    rng = np.random.default_rng(18)
    for _ in range(5):
        xs = [leaf(float(v)) for v in rng.normal(size=6)]

        def build():
            return sub(sum_list(xs), neg(xs[0]))

        assert grad_check(build, xs) < 1e-5


# -- Adam ----------------------------------------------------------------

def _adam_ref(p0, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    # independent restatement of the bias-corrected update
    p = np.array(p0, dtype=np.float64, copy=True)
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    for t, g in enumerate(grads, start=1):
        g = np.asarray(g, dtype=np.float64)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        p = p - lr * (m / (1.0 - b1 ** t)) / (np.sqrt(v / (1.0 - b2 ** t)) + eps)
    return p


def test_adam_zero_gradient_leaves_parameter():
    p = leaf(np.array([1.0, -2.0]))
    opt = Adam([p], lr=0.5)
    opt.step([np.zeros(2)])
    assert np.array_equal(p.value, [1.0, -2.0])
    opt.step()  # grad slot is None, treated as zero
    assert np.array_equal(p.value, [1.0, -2.0])


def test_adam_constant_gradient_steps_by_lr():
    # with a constant gradient mhat=g and vhat=g^2, so each step is
    # lr*g/(|g|+eps): five steps from 1.0 at lr=0.1 land on 0.5
    p = leaf(1.0)
    opt = Adam([p], lr=0.1)
    for _ in range(5):
        opt.step([1.0])
    assert abs(p.value - 0.5) < 1e-8

    q = leaf(0.5)
    opt = Adam([q], lr=0.01)
    opt.step([3.0])
    assert abs(q.value - 0.49) < 1e-9


def test_adam_matches_reference_recurrence():
    rng = np.random.default_rng(21)
    for _ in range(10):
        p0 = rng.normal(size=(3, 2))
        grads = [rng.normal(size=(3, 2)) for _ in range(7)]
        lr = float(rng.uniform(0.001, 0.3))
        p = leaf(p0.copy())
        opt = Adam([p], lr=lr)
        for g in grads:
            opt.step([g])
        ref = _adam_ref(p0, grads, lr)
        assert np.max(np.abs(p.value - ref)) < 1e-12


def test_adam_scalar_matches_reference():
    rng = np.random.default_rng(22)
    for _ in range(10):
        p0 = float(rng.normal())
        grads = [float(rng.normal()) for _ in range(6)]
        p = leaf(p0)
        opt = Adam([p], lr=0.05)
        for g in grads:
            opt.step([g])
        ref = _adam_ref(p0, grads, 0.05)
        assert abs(p.value - float(ref)) < 1e-12


def test_adam_uses_grad_slots_from_backward():
    p = leaf(2.0)
    y = mul(p, p)
    backward(y)  # dy/dp = 4
    opt = Adam([p], lr=0.1)
    opt.step()
    ref = _adam_ref(2.0, [4.0], 0.1)
    assert abs(p.value - float(ref)) < 1e-12
    opt.zero_grad()
    assert p.grad is None


def test_adam_shape_mismatch_raises():
    p = leaf(np.zeros((2, 2)))
    opt = Adam([p], lr=0.1)
    with pytest.raises(ValueError):
        opt.step([np.zeros(3)])


def test_graph_module_check_finite_flag_exists():
    assert graph.CHECK_FINITE is True
