import numpy as np
import pytest

from oracles import finite_diff_grad, rel_err
from prereqgraph import autodiff as ad
from prereqgraph.autodiff import AdamState, Tensor, adam_step, backward
from prereqgraph.errors import DimensionError


def grad_check(build_loss, shapes, seed, tol=1e-5, h=1e-5):
    """Compare analytic grads of a scalar loss against central differences
    for every input tensor."""
    rng = np.random.default_rng(seed)
    values = [rng.standard_normal(s) for s in shapes]
    tensors = [Tensor(v, requires_grad=True) for v in values]
    loss = build_loss(*tensors)
    backward(loss)
    for k, v in enumerate(values):
        def f(perturbed, k=k):
            args = [Tensor(values[i]) for i in range(len(values))]
            args[k] = Tensor(perturbed)
            return build_loss(*args).item()

        numeric = finite_diff_grad(f, v, h=h)
        assert rel_err(tensors[k].grad, numeric) < tol


def test_matmul_identity_forward_and_grad():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    out = ad.matmul(Tensor(np.eye(2)), x)
    np.testing.assert_array_equal(out.values, x.values)
    backward(ad.tensor_sum(out))
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_matmul_hand_fixture():
    a = Tensor([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    b = Tensor([[7.0, 8.0], [9.0, 10.0], [11.0, 12.0]])
    np.testing.assert_array_equal(
        ad.matmul(a, b).values, [[58.0, 64.0], [139.0, 154.0]]
    )


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
        ad.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))


@pytest.mark.parametrize("seed", range(5))
def test_matmul_gradients_match_finite_differences(seed):
    grad_check(
        lambda a, b: ad.tensor_sum(ad.elementwise_mul(ad.matmul(a, b), ad.matmul(a, b))),
        [(4, 5), (5, 3)],
        seed,
    )


@pytest.mark.parametrize(
    "op", [ad.relu, ad.sigmoid, ad.exp, ad.transpose],
    ids=["relu", "sigmoid", "exp", "transpose"],
)
@pytest.mark.parametrize("seed", range(3))
def test_unary_gradients(op, seed):
    # offset away from relu kinks
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((3, 4)) + 0.3
    x = Tensor(base, requires_grad=True)
    loss = ad.tensor_sum(ad.elementwise_mul(op(x), op(x)))
    backward(loss)

    def f(v):
        t = Tensor(v)
        return ad.tensor_sum(ad.elementwise_mul(op(t), op(t))).item()

    assert rel_err(x.grad, finite_diff_grad(f, base)) < 1e-5


def test_sigmoid_at_zero():
    assert ad.sigmoid(Tensor([[0.0]])).item() == 0.5


def test_relu_negative_is_flat():
    x = Tensor([[-3.0]], requires_grad=True)
    out = ad.relu(x)
    assert out.item() == 0.0
    backward(ad.tensor_sum(out))
    assert x.grad[0, 0] == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_binary_op_gradients(seed):
    for op in (ad.add, ad.sub, ad.elementwise_mul):
        grad_check(lambda a, b, op=op: ad.tensor_sum(ad.exp(op(a, b))), [(3, 3), (3, 3)], seed)


def test_concat_rows_roundtrip_and_grad():
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(2 * np.ones((1, 3)), requires_grad=True)
    out = ad.concat_rows([a, b])
    assert out.shape == (3, 3)
    backward(ad.tensor_sum(ad.elementwise_mul(out, out)))
    np.testing.assert_allclose(a.grad, 2 * np.ones((2, 3)))
    np.testing.assert_allclose(b.grad, 4 * np.ones((1, 3)))


def test_gather_pairs_grad_accumulates_duplicates():
    x = Tensor(np.arange(9.0).reshape(3, 3), requires_grad=True)
    out = ad.gather_pairs(x, [0, 0, 2], [1, 1, 2])
    np.testing.assert_array_equal(out.values[:, 0], [1.0, 1.0, 8.0])
    backward(ad.tensor_sum(out))
    assert x.grad[0, 1] == 2.0
    assert x.grad[2, 2] == 1.0


def test_diamond_graph_accumulates_gradients():
    # loss = sum((x + x) * x) = 2 * sum(x^2): grad must be 4x
    x = Tensor([[3.0]], requires_grad=True)
    shared = ad.add(x, x)
    loss = ad.tensor_sum(ad.elementwise_mul(shared, x))
    backward(loss)
    assert x.grad[0, 0] == pytest.approx(12.0)


def test_ops_do_not_mutate_inputs(rng):
    a_vals = rng.standard_normal((3, 3))
    b_vals = rng.standard_normal((3, 3))
    a, b = Tensor(a_vals.copy()), Tensor(b_vals.copy())
    for out in (ad.matmul(a, b), ad.add(a, b), ad.elementwise_mul(a, b),
                ad.relu(a), ad.sigmoid(a), ad.transpose(a)):
        assert out is not a
    np.testing.assert_array_equal(a.values, a_vals)
    np.testing.assert_array_equal(b.values, b_vals)


# --- gaussian sampling -------------------------------------------------------

def test_gaussian_sample_zero_noise_limit():
    mu = Tensor(np.linspace(-1, 1, 12).reshape(3, 4))
    log_sigma = Tensor(np.full((3, 4), -40.0))
    z = ad.gaussian_sample(mu, log_sigma, seed=3)
    np.testing.assert_allclose(z.values, mu.values, atol=1e-15)


def test_gaussian_sample_deterministic_per_seed():
    mu = Tensor(np.zeros((2, 2)))
    ls = Tensor(np.zeros((2, 2)))
    z1 = ad.gaussian_sample(mu, ls, seed=9)
    z2 = ad.gaussian_sample(mu, ls, seed=9)
    np.testing.assert_array_equal(z1.values, z2.values)
    z3 = ad.gaussian_sample(mu, ls, seed=10)
    assert not np.array_equal(z1.values, z3.values)


def test_gaussian_sample_grad_wrt_mu_is_one():
    mu_vals = np.zeros((2, 3))
    mu = Tensor(mu_vals, requires_grad=True)
    ls = Tensor(np.full((2, 3), -0.5), requires_grad=True)
    backward(ad.tensor_sum(ad.gaussian_sample(mu, ls, seed=4)))
    np.testing.assert_allclose(mu.grad, np.ones((2, 3)))

    def f(v):
        return ad.tensor_sum(
            ad.gaussian_sample(Tensor(v), Tensor(np.full((2, 3), -0.5)), seed=4)
        ).item()

    assert rel_err(np.ones((2, 3)), finite_diff_grad(f, mu_vals)) < 1e-7


def test_gaussian_sample_grad_wrt_log_sigma():
    ls_vals = np.full((2, 2), 0.3)
    mu = Tensor(np.zeros((2, 2)))
    ls = Tensor(ls_vals, requires_grad=True)
    backward(ad.tensor_sum(ad.gaussian_sample(mu, ls, seed=11)))

    def f(v):
        return ad.tensor_sum(ad.gaussian_sample(mu, Tensor(v), seed=11)).item()

    assert rel_err(ls.grad, finite_diff_grad(f, ls_vals)) < 1e-6


# --- adam --------------------------------------------------------------------

def test_adam_zero_gradient_is_a_no_op():
    p = Tensor(np.ones((2, 2)), requires_grad=True)
    state = AdamState([p], lr=0.1)
    adam_step([p], state)
    np.testing.assert_array_equal(p.values, np.ones((2, 2)))


def test_adam_first_step_size():
    # constant gradient 1, lr 0.1: first step is -0.1 / (1 + eps) ~ -0.1
    p = Tensor([[0.0]], requires_grad=True)
    p.grad[...] = 1.0
    state = AdamState([p], lr=0.1)
    adam_step([p], state)
    assert p.values[0, 0] == pytest.approx(-0.1, abs=1e-8)
    assert p.grad[0, 0] == 0.0  # grads zeroed after the step


def test_adam_minimizes_quadratic(rng):
    p = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
    state = AdamState([p], lr=0.05)
    for _ in range(500):
        loss = ad.tensor_sum(ad.elementwise_mul(p, p))
        backward(loss)
        adam_step([p], state)
    assert ad.tensor_sum(ad.elementwise_mul(p, p)).item() < 1e-6


def test_seeded_glorot_is_reproducible():
    w1 = ad.glorot(5, 7, np.random.default_rng(2))
    w2 = ad.glorot(5, 7, np.random.default_rng(2))
    np.testing.assert_array_equal(w1.values, w2.values)
    limit = np.sqrt(6.0 / 12.0)
    assert np.abs(w1.values).max() <= limit
