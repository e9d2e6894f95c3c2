"""Minimal dense-matrix reverse-mode autodiff plus Adam.

Everything is a 2-D float64 matrix; scalars live in 1x1 tensors. The tape
is implicit: each op-produced tensor remembers its parents and a backward
closure, and backward() walks the graph once in reverse topological order.
Sized for graphs of a few thousand nodes; no broadcasting, no GPU.
"""

from __future__ import annotations

import numpy as np

from prereqgraph.errors import DimensionError


class Tensor:
    """A matrix with an attached gradient buffer.

    Gradients accumulate (sum) into ``grad`` during backward; ops never
    mutate their inputs' values.
    """

    def __init__(self, values, requires_grad: bool = False):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 0:
            values = values.reshape(1, 1)
        elif values.ndim == 1:
            values = values.reshape(-1, 1)
        elif values.ndim != 2:
            raise DimensionError(f"tensors are 2-D, got shape {values.shape}")
        self.values = values
        self.grad = np.zeros_like(values)
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def item(self) -> float:
        if self.values.size != 1:
            raise DimensionError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.values[0, 0])

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _result(values, parents, backward_fn) -> Tensor:
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite values produced by an operation")
    out = Tensor(values, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def constant(values) -> Tensor:
    return Tensor(values, requires_grad=False)


def _check_same_shape(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} do not conform")
    out_values = a.values @ b.values

    def backward(grad):
        if a.requires_grad:
            a.grad += grad @ b.values.T
        if b.requires_grad:
            b.grad += a.values.T @ grad

    return _result(out_values, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "add")

    def backward(grad):
        if a.requires_grad:
            a.grad += grad
        if b.requires_grad:
            b.grad += grad

    return _result(a.values + b.values, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "sub")

    def backward(grad):
        if a.requires_grad:
            a.grad += grad
        if b.requires_grad:
            b.grad -= grad

    return _result(a.values - b.values, (a, b), backward)


def elementwise_mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape(a, b, "elementwise_mul")

    def backward(grad):
        if a.requires_grad:
            a.grad += grad * b.values
        if b.requires_grad:
            b.grad += grad * a.values

    return _result(a.values * b.values, (a, b), backward)


def transpose(a: Tensor) -> Tensor:
    def backward(grad):
        if a.requires_grad:
            a.grad += grad.T

    return _result(a.values.T, (a,), backward)


def scalar_mul(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def backward(grad):
        if a.requires_grad:
            a.grad += c * grad

    return _result(c * a.values, (a,), backward)


def add_scalar(a: Tensor, c: float) -> Tensor:
    def backward(grad):
        if a.requires_grad:
            a.grad += grad

    return _result(a.values + float(c), (a,), backward)


def concat_rows(tensors: list[Tensor]) -> Tensor:
    if not tensors:
        raise DimensionError("concat_rows: empty input")
    cols = tensors[0].shape[1]
    for t in tensors:
        if t.shape[1] != cols:
            raise DimensionError(
                f"concat_rows: column counts differ ({t.shape} vs (*, {cols}))"
            )
    sizes = [t.shape[0] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(grad):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                t.grad += grad[lo:hi]

    return _result(np.vstack([t.values for t in tensors]), tensors, backward)


def relu(a: Tensor) -> Tensor:
    # relu'(0) defined as 0
    mask = a.values > 0.0

    def backward(grad):
        if a.requires_grad:
            a.grad += grad * mask

    return _result(np.where(mask, a.values, 0.0), (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    x = a.values
    out_values = np.empty_like(x)
    pos = x >= 0
    out_values[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out_values[~pos] = ex / (1.0 + ex)

    def backward(grad):
        if a.requires_grad:
            a.grad += grad * out_values * (1.0 - out_values)

    return _result(out_values, (a,), backward)


def exp(a: Tensor) -> Tensor:
    out_values = np.exp(a.values)

    def backward(grad):
        if a.requires_grad:
            a.grad += grad * out_values

    return _result(out_values, (a,), backward)


def log(a: Tensor) -> Tensor:
    def backward(grad):
        if a.requires_grad:
            a.grad += grad / a.values

    return _result(np.log(a.values), (a,), backward)


def tensor_sum(a: Tensor) -> Tensor:
    def backward(grad):
        if a.requires_grad:
            a.grad += grad[0, 0]

    return _result(np.array([[a.values.sum()]]), (a,), backward)


def gather_pairs(a: Tensor, rows, cols) -> Tensor:
    """Select entries a[rows[k], cols[k]] into a column vector."""
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    if rows.shape != cols.shape or rows.ndim != 1:
        raise DimensionError("gather_pairs: rows/cols must be equal-length 1-D")

    def backward(grad):
        if a.requires_grad:
            np.add.at(a.grad, (rows, cols), grad[:, 0])

    return _result(a.values[rows, cols].reshape(-1, 1), (a,), backward)


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    # gradient passes through strictly inside (lo, hi), zero where clipped
    mask = (a.values > lo) & (a.values < hi)

    def backward(grad):
        if a.requires_grad:
            a.grad += grad * mask

    return _result(np.clip(a.values, lo, hi), (a,), backward)


def scale_cols(a: Tensor, s: Tensor) -> Tensor:
    """Multiply column j of a by s[0, j]; s is a 1 x cols tensor."""
    if s.shape != (1, a.shape[1]):
        raise DimensionError(f"scale_cols: scale shape {s.shape} vs matrix {a.shape}")

    def backward(grad):
        if a.requires_grad:
            a.grad += grad * s.values
        if s.requires_grad:
            s.grad += (grad * a.values).sum(axis=0, keepdims=True)

    return _result(a.values * s.values, (a, s), backward)


def gaussian_sample(mu: Tensor, log_sigma: Tensor, seed: int) -> Tensor:
    """Reparameterized sample z = mu + exp(log_sigma) * eps, eps ~ N(0, I).

    eps is drawn once from the seed and treated as a constant, so identical
    seeds give identical samples and gradients flow to mu and log_sigma.
    """
    _check_same_shape(mu, log_sigma, "gaussian_sample")
    eps = np.random.default_rng(seed).standard_normal(mu.shape)
    sigma = np.exp(log_sigma.values)

    def backward(grad):
        if mu.requires_grad:
            mu.grad += grad
        if log_sigma.requires_grad:
            log_sigma.grad += grad * sigma * eps

    return _result(mu.values + sigma * eps, (mu, log_sigma), backward)


def backward(loss: Tensor):
    """Run reverse-mode accumulation from a 1x1 loss tensor."""
    if loss.values.size != 1:
        raise DimensionError(f"backward() expects a scalar loss, got {loss.shape}")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            stack.append((parent, False))
    loss.grad[...] = 1.0
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)


def glorot(rows: int, cols: int, rng: np.random.Generator) -> Tensor:
    """Glorot/Xavier uniform initialization for a trainable weight."""
    limit = np.sqrt(6.0 / (rows + cols))
    return Tensor(rng.uniform(-limit, limit, size=(rows, cols)), requires_grad=True)


class AdamState:
    """Adam moments for an ordered list of parameters."""

    def __init__(self, params: list[Tensor], lr: float = 0.01, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.values) for p in params]
        self.v = [np.zeros_like(p.values) for p in params]


def adam_step(params: list[Tensor], state: AdamState):
    """One bias-corrected Adam update; zeroes every gradient afterwards."""
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, m, v in zip(params, state.m, state.v):
        g = p.grad
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.values = p.values - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        p.zero_grad()
