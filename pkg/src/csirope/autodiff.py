"""Dense real-valued tensors with reverse-mode automatic differentiation.

The engine is deliberately small: 64-bit numpy storage, a tape built by the
ops themselves, and a single `backward` that walks the tape in reverse
topological order exactly once. It is sufficient to express a small
transformer encoder-decoder, rotary phase construction, and the frequency
controller, and nothing more.

Broadcast rule for binary elementwise ops (documented contract):
  * identical shapes are always accepted;
  * a 0-d scalar tensor (or a plain Python number) combines with any shape;
  * otherwise both operands must have the same rank, all axes must match
    except a trailing block of axes on which exactly one operand has
    extent 1. The reduced operand's gradient is summed over those axes.
Anything else raises :class:`ShapeError` naming both shapes. Richer
broadcasting must be spelled out with :func:`expand`.

Determinism: no op uses threads or nondeterministic reductions, so two runs
over identical inputs produce bit-identical outputs and gradients. The
process-wide determinism flag carried in run manifests therefore costs
nothing to honor here.

Tensors are immutable after creation except for their `grad` accumulator.
A graph instance is confined to one worker.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Operand shapes violate an op's shape contract."""


class ContractError(ValueError):
    """An op precondition (other than shapes) was violated."""


class DegenerateReductionError(ContractError):
    """Reduction asked for a statistic that needs more elements."""


def _as_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    return arr


class Tensor:
    """A dense float64 array plus an optional gradient accumulator.

    `requires_grad` marks leaves that should receive gradients; results of
    ops inherit it from their inputs. After `backward(root)` every
    requires_grad leaf reachable from `root` holds the SUM of all path
    contributions in `grad` (accumulation, never overwrite).
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "op")

    def __init__(self, values, requires_grad: bool = False):
        self.data = _as_array(values)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None
        self.op = "leaf"

    # -- graph plumbing ----------------------------------------------------

    @classmethod
    def _result(cls, data, parents, backward, op):
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = any(p.requires_grad for p in parents)
        out.grad = None
        out.op = op
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            # no requires_grad leaves upstream: no gradient work, no tape
            out._parents = ()
            out._backward = None
        return out

    def _accumulate(self, contribution: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += contribution

    def zero_grad(self):
        self.grad = None

    # -- conveniences --------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.data.shape}")
        return float(self.data.reshape(()))

    def __float__(self) -> float:
        return self.item()

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    def reshape(self, shape):
        return reshape(self, shape)

    def transpose(self, axes=None):
        return transpose(self, axes)

    def sum(self, axis=None):
        return reductions("sum", self, axis)

    def mean(self, axis=None):
        return reductions("mean", self, axis)

    def std(self, axis=None):
        return reductions("std", self, axis)


def _wrap(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


# -- broadcast contract ------------------------------------------------------


def _broadcast_shapes(sa: tuple, sb: tuple) -> tuple:
    """Validate the trailing-singleton broadcast rule; return result shape."""
    if sa == sb:
        return sa
    if sa == ():
        return sb
    if sb == ():
        return sa
    if len(sa) != len(sb):
        raise ShapeError(f"rank mismatch outside broadcast rule: {sa} vs {sb}")
    diff = [i for i in range(len(sa)) if sa[i] != sb[i]]
    # differing axes must be a contiguous suffix, all owned as 1s by one operand
    if diff != list(range(diff[0], len(sa))):
        raise ShapeError(f"shapes not broadcastable by trailing-1 rule: {sa} vs {sb}")
    if not (all(sa[i] == 1 for i in diff) or all(sb[i] == 1 for i in diff)):
        raise ShapeError(f"shapes not broadcastable by trailing-1 rule: {sa} vs {sb}")
    return tuple(max(x, y) for x, y in zip(sa, sb))


def _reduce_to(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    if grad.shape == shape:
        return grad
    if shape == ():
        return np.asarray(grad.sum())
    axes = tuple(i for i in range(len(shape)) if shape[i] == 1 and grad.shape[i] != 1)
    return grad.sum(axis=axes, keepdims=True)


# -- elementwise ops ---------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _broadcast_shapes(a.shape, b.shape)
    out_data = a.data + b.data

    def backward(out):
        g = out.grad
        if a.requires_grad:
            a._accumulate(_reduce_to(g, a.shape))
        if b.requires_grad:
            b._accumulate(_reduce_to(g, b.shape))

    return Tensor._result(out_data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _broadcast_shapes(a.shape, b.shape)
    out_data = a.data - b.data

    def backward(out):
        g = out.grad
        if a.requires_grad:
            a._accumulate(_reduce_to(g, a.shape))
        if b.requires_grad:
            b._accumulate(_reduce_to(-g, b.shape))

    return Tensor._result(out_data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _broadcast_shapes(a.shape, b.shape)
    out_data = a.data * b.data

    def backward(out):
        g = out.grad
        if a.requires_grad:
            a._accumulate(_reduce_to(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_reduce_to(g * a.data, b.shape))

    return Tensor._result(out_data, (a, b), backward, "mul")


def neg(a) -> Tensor:
    a = _wrap(a)

    def backward(out):
        if a.requires_grad:
            a._accumulate(-out.grad)

    return Tensor._result(-a.data, (a,), backward, "neg")


def sin(a) -> Tensor:
    a = _wrap(a)

    def backward(out):
        if a.requires_grad:
            a._accumulate(out.grad * np.cos(a.data))

    return Tensor._result(np.sin(a.data), (a,), backward, "sin")


def cos(a) -> Tensor:
    a = _wrap(a)

    def backward(out):
        if a.requires_grad:
            a._accumulate(-out.grad * np.sin(a.data))

    return Tensor._result(np.cos(a.data), (a,), backward, "cos")


def exp(a) -> Tensor:
    a = _wrap(a)
    out_data = np.exp(a.data)

    def backward(out):
        if a.requires_grad:
            a._accumulate(out.grad * out.data)

    return Tensor._result(out_data, (a,), backward, "exp")


def sqr(a) -> Tensor:
    a = _wrap(a)

    def backward(out):
        if a.requires_grad:
            a._accumulate(out.grad * 2.0 * a.data)

    return Tensor._result(a.data * a.data, (a,), backward, "sqr")


def relu(a) -> Tensor:
    # not part of the minimal kind set, but the backbone MLP needs one
    # nonlinearity that is cheap and has a trivial adjoint
    a = _wrap(a)
    out_data = np.maximum(a.data, 0.0)

    def backward(out):
        if a.requires_grad:
            a._accumulate(out.grad * (a.data > 0.0))

    return Tensor._result(out_data, (a,), backward, "relu")


_UNARY = {"neg": neg, "sin": sin, "cos": cos, "exp": exp, "sqr": sqr, "relu": relu}
_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(op: str, a, b=None) -> Tensor:
    """Dispatch by op kind: {add, sub, mul, neg, sin, cos, exp, sqr, relu}."""
    if op in _UNARY:
        if b is not None:
            raise ContractError(f"elementwise {op!r} is unary")
        return _UNARY[op](a)
    if op in _BINARY:
        if b is None:
            raise ContractError(f"elementwise {op!r} is binary")
        return _BINARY[op](a, b)
    raise ContractError(f"unknown elementwise op {op!r}")


# -- matrix products ---------------------------------------------------------


def matmul(a, b) -> Tensor:
    """2-D matrix product [m,k] @ [k,n] -> [m,n]."""
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    out_data = a.data @ b.data

    def backward(out):
        g = out.grad
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return Tensor._result(out_data, (a, b), backward, "matmul")


def bmm(a, b) -> Tensor:
    """Batched matrix product [B,m,k] @ [B,k,n] -> [B,m,n]."""
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim != 3 or b.data.ndim != 3:
        raise ShapeError(f"bmm needs 3-D operands, got {a.shape} @ {b.shape}")
    if a.shape[0] != b.shape[0] or a.shape[2] != b.shape[1]:
        raise ShapeError(f"bmm extents differ: {a.shape} @ {b.shape}")
    out_data = np.matmul(a.data, b.data)

    def backward(out):
        g = out.grad
        if a.requires_grad:
            a._accumulate(np.matmul(g, b.data.transpose(0, 2, 1)))
        if b.requires_grad:
            b._accumulate(np.matmul(a.data.transpose(0, 2, 1), g))

    return Tensor._result(out_data, (a, b), backward, "bmm")


# -- reductions ---------------------------------------------------------------


def reductions(op: str, a, axis=None) -> Tensor:
    """sum / mean / std over all elements or one axis.

    std is the population standard deviation (divisor n); it needs at least
    two reduced elements.
    """
    a = _wrap(a)
    if axis is not None:
        axis = int(axis)
        if not -a.data.ndim <= axis < a.data.ndim:
            raise ShapeError(f"axis {axis} out of range for shape {a.shape}")
        axis = axis % a.data.ndim
        n = a.shape[axis]
    else:
        n = a.data.size

    if op == "sum":
        out_data = a.data.sum(axis=axis)

        def backward(out):
            if not a.requires_grad:
                return
            g = out.grad
            if axis is None:
                a._accumulate(np.broadcast_to(g, a.shape).copy())
            else:
                a._accumulate(np.broadcast_to(np.expand_dims(g, axis), a.shape).copy())

        return Tensor._result(out_data, (a,), backward, "sum")

    if op == "mean":
        out_data = a.data.mean(axis=axis)

        def backward(out):
            if not a.requires_grad:
                return
            g = out.grad / n
            if axis is None:
                a._accumulate(np.broadcast_to(g, a.shape).copy())
            else:
                a._accumulate(np.broadcast_to(np.expand_dims(g, axis), a.shape).copy())

        return Tensor._result(out_data, (a,), backward, "mean")

    if op == "std":
        if n < 2:
            raise DegenerateReductionError(f"std needs >= 2 elements, got {n}")
        mu = a.data.mean(axis=axis, keepdims=True)
        centered = a.data - mu
        out_data = np.sqrt((centered * centered).mean(axis=axis))

        def backward(out):
            if not a.requires_grad:
                return
            if axis is None:
                g = np.asarray(out.grad)
                s = out_data
            else:
                g = np.expand_dims(out.grad, axis)
                s = np.expand_dims(out_data, axis)
            # d std / d x_i = (x_i - mu) / (n * std); define 0 at std == 0
            denom = n * np.where(s > 0.0, s, 1.0)
            a._accumulate(np.where(s > 0.0, g * centered / denom, 0.0))

        return Tensor._result(out_data, (a,), backward, "std")

    raise ContractError(f"unknown reduction {op!r}")


# -- normalizations -----------------------------------------------------------


def softmax_lastaxis(a) -> Tensor:
    """Rows of the last axis sum to 1; stabilized by max-subtraction."""
    a = _wrap(a)
    if a.data.ndim == 0 or a.shape[-1] < 1:
        raise ShapeError(f"softmax needs a last axis of length >= 1, got {a.shape}")
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def backward(out):
        if not a.requires_grad:
            return
        g = out.grad
        y = out.data
        gy = g * y
        a._accumulate(gy - y * gy.sum(axis=-1, keepdims=True))

    return Tensor._result(out_data, (a,), backward, "softmax")


def layernorm(a, gain, bias, eps: float = 1e-5) -> Tensor:
    """Per-row (last axis) zero mean, unit variance, then affine gain/bias."""
    a, gain, bias = _wrap(a), _wrap(gain), _wrap(bias)
    d = a.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError(
            f"layernorm gain/bias must match last axis {d}: {gain.shape}, {bias.shape}"
        )
    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out_data = xhat * gain.data + bias.data

    def backward(out):
        g = out.grad
        if gain.requires_grad:
            gain._accumulate((g * xhat).reshape(-1, d).sum(axis=0))
        if bias.requires_grad:
            bias._accumulate(g.reshape(-1, d).sum(axis=0))
        if a.requires_grad:
            gx = g * gain.data
            a._accumulate(
                inv
                * (
                    gx
                    - gx.mean(axis=-1, keepdims=True)
                    - xhat * (gx * xhat).mean(axis=-1, keepdims=True)
                )
            )

    return Tensor._result(out_data, (a, gain, bias), backward, "layernorm")


# -- structural ops ------------------------------------------------------------


def reshape(a, shape) -> Tensor:
    a = _wrap(a)
    if isinstance(shape, (int, np.integer)):
        shape = (int(shape),)
    else:
        shape = tuple(int(s) for s in shape)
    out_data = a.data.reshape(shape)

    def backward(out):
        if a.requires_grad:
            a._accumulate(out.grad.reshape(a.shape))

    return Tensor._result(out_data, (a,), backward, "reshape")


def transpose(a, axes=None) -> Tensor:
    a = _wrap(a)
    if axes is None:
        axes = tuple(reversed(range(a.data.ndim)))
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out_data = a.data.transpose(axes)

    def backward(out):
        if a.requires_grad:
            a._accumulate(out.grad.transpose(inverse))

    return Tensor._result(out_data, (a,), backward, "transpose")


def getitem(a, key) -> Tensor:
    """Basic/fancy indexing; gradient scatter-adds into the source."""
    a = _wrap(a)
    out_data = a.data[key]
    if not isinstance(out_data, np.ndarray):
        out_data = np.asarray(out_data)

    def backward(out):
        if a.requires_grad:
            g = np.zeros_like(a.data)
            np.add.at(g, key, out.grad)
            a._accumulate(g)

    return Tensor._result(out_data.copy(), (a,), backward, "getitem")


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    if not tensors:
        raise ContractError("concat of zero tensors")
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(out):
        g = out.grad
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(g[tuple(idx)])

    return Tensor._result(out_data, tuple(tensors), backward, "concat")


def expand(a, shape) -> Tensor:
    """Explicit broadcast of singleton axes to `shape` (same rank required)."""
    a = _wrap(a)
    shape = tuple(int(s) for s in shape)
    if len(shape) != a.data.ndim:
        raise ShapeError(f"expand needs same rank: {a.shape} -> {shape}")
    for have, want in zip(a.shape, shape):
        if have != want and have != 1:
            raise ShapeError(f"expand only grows singleton axes: {a.shape} -> {shape}")
    out_data = np.broadcast_to(a.data, shape).copy()
    axes = tuple(i for i in range(len(shape)) if a.shape[i] == 1 and shape[i] != 1)

    def backward(out):
        if a.requires_grad:
            a._accumulate(out.grad.sum(axis=axes, keepdims=True) if axes else out.grad)

    return Tensor._result(out_data, (a,), backward, "expand")


# -- backward pass -------------------------------------------------------------


def _topo_order(root: Tensor) -> list:
    """Iterative DFS post-order over the tape reachable from root."""
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Tensor):
    """Populate grads of every requires_grad node reachable from a scalar root."""
    if root.data.size != 1:
        raise ContractError(f"backward root must be scalar, got shape {root.shape}")
    if not root.requires_grad:
        return
    order = _topo_order(root)
    root._accumulate(np.ones_like(root.data))
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node)


def graph_dump(root: Tensor) -> str:
    """Text dump of the compute graph in topological order, for diagnostics."""
    order = _topo_order(root)
    ids = {id(n): i for i, n in enumerate(order)}
    lines = []
    for i, n in enumerate(order):
        parents = ",".join(str(ids[id(p)]) for p in n._parents)
        lines.append(f"#{i} {n.op} shape={n.data.shape} parents=[{parents}] grad={'yes' if n.requires_grad else 'no'}")
    return "\n".join(lines)


# -- finite-difference oracle ----------------------------------------------------


def numerical_gradient(fn, tensors, h: float = 1e-5):
    """Central finite differences of a scalar function, one entry at a time.

    `fn` must evaluate the forward pass from scratch (reading the tensors'
    current data) and return a float. Entries are perturbed in place and
    restored; the oracle never touches the tape, so it stays independent of
    the adjoints it is used to check.
    """
    grads = []
    for t in tensors:
        flat = t.data.reshape(-1)
        g = np.zeros(flat.size)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(fn())
            flat[i] = orig - h
            fm = float(fn())
            flat[i] = orig
            g[i] = (fp - fm) / (2.0 * h)
        grads.append(g.reshape(t.shape))
    return grads
