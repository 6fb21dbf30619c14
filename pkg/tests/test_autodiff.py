"""Gradient and contract tests for the tensor engine.

Every differentiable op is checked against central finite differences
(h = 1e-5, 64-bit). The finite-difference oracle only ever evaluates
forward passes, so it is independent of the adjoints under test.
"""

import numpy as np
import pytest

from csirope import autodiff as ad
from csirope.autodiff import (
    ContractError,
    DegenerateReductionError,
    ShapeError,
    Tensor,
    backward,
    numerical_gradient,
)


def rel_err(a, b):
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-12)
    return np.abs(a - b).max() / denom


def check_grads(build, tensors, tol=1e-6, h=1e-5):
    """Compare analytic grads of scalar build() against finite differences."""
    for t in tensors:
        t.zero_grad()
    out = build()
    backward(out)
    numeric = numerical_gradient(build, tensors, h=h)
    for t, num in zip(tensors, numeric):
        assert t.grad is not None, "missing gradient"
        assert rel_err(t.grad, num) < tol, f"grad mismatch for {t!r}"


# ---------------------------------------------------------------- elementwise


def test_sin_identity_case():
    x = Tensor([0.0], requires_grad=True)
    y = ad.sin(x)
    assert y.data[0] == 0.0
    backward(ad.reductions("sum", y))
    assert x.grad[0] == pytest.approx(1.0)


def test_sqr_values_and_grad():
    x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
    y = ad.sqr(x)
    np.testing.assert_allclose(y.data, [1.0, 4.0, 9.0])
    backward(y.sum())
    np.testing.assert_allclose(x.grad, [2.0, 4.0, 6.0])


def test_mul_values_and_grads():
    a = Tensor([2.0], requires_grad=True)
    b = Tensor([3.0], requires_grad=True)
    y = a * b
    assert y.data[0] == 6.0
    backward(y.sum())
    assert a.grad[0] == 3.0
    assert b.grad[0] == 2.0


@pytest.mark.parametrize("op", ["add", "sub", "mul"])
def test_binary_ops_random_grads(op):
    rng = np.random.default_rng(7)
    a = Tensor(rng.normal(size=(4, 5)), requires_grad=True)
    b = Tensor(rng.normal(size=(4, 5)), requires_grad=True)
    check_grads(lambda: ad.elementwise(op, a, b).sum(), [a, b])


@pytest.mark.parametrize("op", ["neg", "sin", "cos", "exp", "sqr", "relu"])
def test_unary_ops_random_grads(op):
    rng = np.random.default_rng(8)
    a = Tensor(rng.normal(size=(3, 7)) + 0.1, requires_grad=True)
    check_grads(lambda: ad.elementwise(op, a).sum(), [a])


def test_trailing_singleton_broadcast():
    rng = np.random.default_rng(9)
    a = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    b = Tensor(rng.normal(size=(4, 1)), requires_grad=True)
    y = a * b
    assert y.shape == (4, 3)
    check_grads(lambda: (a * b).sum(), [a, b])


def test_scalar_broadcast():
    a = Tensor(np.ones((2, 2)), requires_grad=True)
    y = a * 3.0 + 1.0
    np.testing.assert_allclose(y.data, 4.0)
    backward(y.sum())
    np.testing.assert_allclose(a.grad, 3.0)


def test_broadcast_rejects_leading_singleton():
    a = Tensor(np.ones((3, 4)))
    b = Tensor(np.ones((1, 4)))
    with pytest.raises(ShapeError) as err:
        ad.add(a, b)
    assert "(3, 4)" in str(err.value) and "(1, 4)" in str(err.value)


def test_broadcast_rejects_rank_mismatch():
    with pytest.raises(ShapeError):
        ad.add(Tensor(np.ones((3, 4))), Tensor(np.ones(4)))


# ---------------------------------------------------------------- matmul


def test_matmul_identity():
    x = np.arange(6.0).reshape(2, 3)
    y = ad.matmul(Tensor(np.eye(2)), Tensor(x))
    np.testing.assert_array_equal(y.data, x)


def test_matmul_small_case():
    y = ad.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[1.0], [1.0]]))
    np.testing.assert_array_equal(y.data, [[3.0], [7.0]])


def test_matmul_grad_matches_finite_differences():
    rng = np.random.default_rng(10)
    a = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
    check_grads(lambda: ad.matmul(a, b).sum(), [a, b])


def test_matmul_inner_extent_mismatch():
    with pytest.raises(ShapeError):
        ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))


def test_bmm_matches_loop_and_grads():
    rng = np.random.default_rng(11)
    a = Tensor(rng.normal(size=(5, 3, 4)), requires_grad=True)
    b = Tensor(rng.normal(size=(5, 4, 2)), requires_grad=True)
    y = ad.bmm(a, b)
    expect = np.stack([a.data[i] @ b.data[i] for i in range(5)])
    np.testing.assert_allclose(y.data, expect)
    check_grads(lambda: ad.bmm(a, b).sum(), [a, b])


# ---------------------------------------------------------------- reductions


def test_mean_trivial():
    assert ad.reductions("mean", Tensor([1.0, 2.0, 3.0])).item() == pytest.approx(2.0)


def test_std_constant_is_zero():
    assert ad.reductions("std", Tensor([5.0, 5.0, 5.0, 5.0])).item() == 0.0


def test_std_single_element_rejected():
    with pytest.raises(DegenerateReductionError):
        ad.reductions("std", Tensor([1.0]))


@pytest.mark.parametrize("op", ["sum", "mean", "std"])
@pytest.mark.parametrize("axis", [None, 0, 1, -1])
def test_reduction_grads(op, axis):
    rng = np.random.default_rng(12)
    a = Tensor(rng.normal(size=(4, 6)), requires_grad=True)
    check_grads(lambda: ad.reductions(op, a, axis).sum(), [a], tol=1e-5)


def test_std_population_divisor():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    got = ad.reductions("std", Tensor(x)).item()
    assert got == pytest.approx(np.sqrt(((x - x.mean()) ** 2).mean()))


# ---------------------------------------------------------------- softmax / layernorm


def test_softmax_symmetry_and_stability():
    np.testing.assert_allclose(ad.softmax_lastaxis(Tensor([0.0, 0.0])).data, [0.5, 0.5])
    np.testing.assert_allclose(
        ad.softmax_lastaxis(Tensor([1000.0, 1000.0])).data, [0.5, 0.5]
    )


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(13)
    y = ad.softmax_lastaxis(Tensor(rng.normal(size=(8, 5)) * 10))
    np.testing.assert_allclose(y.data.sum(axis=-1), 1.0, atol=1e-12)


def test_softmax_grad():
    rng = np.random.default_rng(14)
    a = Tensor(rng.normal(size=(3, 5)), requires_grad=True)
    w = rng.normal(size=(3, 5))  # fixed projection so the scalar sees all outputs
    check_grads(lambda: (ad.softmax_lastaxis(a) * w).sum(), [a], tol=1e-5)


def test_layernorm_constant_row_zeros():
    d = 6
    y = ad.layernorm(Tensor(np.full((2, d), 3.0)), Tensor(np.ones(d)), Tensor(np.zeros(d)))
    np.testing.assert_allclose(y.data, 0.0, atol=1e-6)


def test_layernorm_row_mean_near_zero():
    rng = np.random.default_rng(15)
    d = 16
    y = ad.layernorm(
        Tensor(rng.normal(size=(4, d))), Tensor(np.ones(d)), Tensor(np.zeros(d))
    )
    assert np.abs(y.data.mean(axis=-1)).max() < 1e-10


def test_layernorm_grads():
    rng = np.random.default_rng(16)
    d = 5
    a = Tensor(rng.normal(size=(3, d)), requires_grad=True)
    gain = Tensor(rng.normal(size=d), requires_grad=True)
    bias = Tensor(rng.normal(size=d), requires_grad=True)
    w = rng.normal(size=(3, d))
    check_grads(lambda: (ad.layernorm(a, gain, bias) * w).sum(), [a, gain, bias], tol=1e-4)


# ---------------------------------------------------------------- structural ops


def test_getitem_grad_scatters():
    a = Tensor(np.arange(12.0).reshape(3, 4), requires_grad=True)
    y = a[(slice(None), np.array([0, 2]))]
    assert y.shape == (3, 2)
    backward(y.sum())
    expect = np.zeros((3, 4))
    expect[:, [0, 2]] = 1.0
    np.testing.assert_array_equal(a.grad, expect)


def test_getitem_duplicate_indices_accumulate():
    a = Tensor(np.arange(4.0), requires_grad=True)
    y = a[np.array([1, 1, 2])]
    backward(y.sum())
    np.testing.assert_array_equal(a.grad, [0.0, 2.0, 1.0, 0.0])


def test_reshape_transpose_concat_expand_grads():
    rng = np.random.default_rng(17)
    a = Tensor(rng.normal(size=(2, 6)), requires_grad=True)
    b = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    c = Tensor(rng.normal(size=(1, 4)), requires_grad=True)

    def build():
        x = ad.reshape(a, (3, 4))
        y = ad.transpose(ad.transpose(b))
        z = ad.expand(c, (3, 4))
        return (ad.concat([x, y, z], axis=0) * 0.5).sum()

    check_grads(build, [a, b, c])


def test_expand_rejects_non_singleton():
    with pytest.raises(ShapeError):
        ad.expand(Tensor(np.ones((2, 3))), (4, 3))


# ---------------------------------------------------------------- backward contract


def test_backward_square_sum():
    x = Tensor([1.0, 2.0], requires_grad=True)
    backward(ad.sqr(x).sum())
    np.testing.assert_array_equal(x.grad, [2.0, 4.0])


def test_backward_requires_scalar_root():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ContractError):
        backward(ad.sqr(x))


def test_disconnected_leaf_has_no_grad():
    x = Tensor([1.0], requires_grad=True)
    y = Tensor([2.0], requires_grad=True)
    backward(ad.sqr(x).sum())
    assert x.grad is not None
    assert y.grad is None


def test_gradient_accumulates_across_uses():
    x = Tensor([3.0], requires_grad=True)
    single = Tensor([3.0], requires_grad=True)
    backward((x * 2.0 + x * 2.0).sum())
    backward((single * 2.0).sum())
    np.testing.assert_allclose(x.grad, 2.0 * single.grad)


def test_no_grad_graph_produces_no_tape():
    a = Tensor(np.ones(3))
    b = Tensor(np.ones(3))
    y = a * b + a
    assert y._parents == ()
    assert not y.requires_grad


def test_graph_dump_lists_nodes_in_topo_order():
    x = Tensor([1.0], requires_grad=True)
    y = (ad.sin(x) * 2.0).sum()
    dump = ad.graph_dump(y)
    lines = dump.splitlines()
    assert lines[-1].startswith(f"#{len(lines) - 1} sum")
    assert any("sin" in line for line in lines)
    assert any("leaf" in line for line in lines)


def test_backward_visits_each_node_once_via_value():
    # f(x) = sum((x + x)^2) = 4 sum(x^2); double-visiting any node breaks this
    x = Tensor([1.0, -2.0], requires_grad=True)
    s = x + x
    backward(ad.sqr(s).sum())
    np.testing.assert_allclose(x.grad, 8.0 * x.data)


def test_determinism_bitwise():
    def run():
        rng = np.random.default_rng(123)
        a = Tensor(rng.normal(size=(6, 6)), requires_grad=True)
        b = Tensor(rng.normal(size=(6, 6)), requires_grad=True)
        out = ad.softmax_lastaxis(ad.matmul(a, b))
        loss = ad.sqr(out).sum()
        backward(loss)
        return loss.item(), a.grad.copy(), b.grad.copy()

    l1, ga1, gb1 = run()
    l2, ga2, gb2 = run()
    assert l1 == l2
    assert np.array_equal(ga1, ga2)
    assert np.array_equal(gb1, gb2)


# ---------------------------------------------------------------- bulk fd sweep


def test_gradient_sweep_100_random_instances():
    """Every differentiable op, >= 100 random instances total, rel err < 1e-4."""
    rng = np.random.default_rng(99)
    specs = []
    for trial in range(13):
        m, k, n = rng.integers(2, 5, size=3)
        specs.extend(
            [
                ("add", (m, k)),
                ("sub", (m, k)),
                ("mul", (m, k)),
                ("neg", (m, k)),
                ("sin", (m, k)),
                ("cos", (m, k)),
                ("exp", (m, k)),
                ("sqr", (m, k)),
                ("matmul", (m, k, n)),
                ("sum", (m, k)),
                ("mean", (m, k)),
                ("std", (m, k)),
                ("softmax", (m, k)),
                ("layernorm", (m, k)),
            ]
        )
    assert len(specs) >= 100
    for op, dims in specs:
        if op == "matmul":
            m, k, n = dims
            a = Tensor(rng.normal(size=(m, k)), requires_grad=True)
            b = Tensor(rng.normal(size=(k, n)), requires_grad=True)
            check_grads(lambda: ad.matmul(a, b).sum(), [a, b], tol=1e-4)
        elif op in ("add", "sub", "mul"):
            a = Tensor(rng.normal(size=dims), requires_grad=True)
            b = Tensor(rng.normal(size=dims), requires_grad=True)
            check_grads(lambda: ad.elementwise(op, a, b).sum(), [a, b], tol=1e-4)
        elif op in ("neg", "sin", "cos", "exp", "sqr"):
            a = Tensor(rng.normal(size=dims), requires_grad=True)
            check_grads(lambda: ad.elementwise(op, a).sum(), [a], tol=1e-4)
        elif op in ("sum", "mean", "std"):
            a = Tensor(rng.normal(size=dims), requires_grad=True)
            axis = [None, 0, 1][int(rng.integers(3))]
            check_grads(lambda: ad.reductions(op, a, axis).sum(), [a], tol=1e-4)
        elif op == "softmax":
            a = Tensor(rng.normal(size=dims), requires_grad=True)
            w = rng.normal(size=dims)
            check_grads(lambda: (ad.softmax_lastaxis(a) * w).sum(), [a], tol=1e-4)
        elif op == "layernorm":
            d = dims[1]
            a = Tensor(rng.normal(size=dims), requires_grad=True)
            gain = Tensor(rng.normal(size=d), requires_grad=True)
            bias = Tensor(rng.normal(size=d), requires_grad=True)
            w = rng.normal(size=dims)
            check_grads(
                lambda: (ad.layernorm(a, gain, bias) * w).sum(),
                [a, gain, bias],
                tol=1e-4,
            )
