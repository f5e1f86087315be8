"""Reverse-mode automatic differentiation over small dense matrices.

Every value is a rank-2 float64 numpy array wrapped in a :class:`Tensor`.
Operations record closures that compute vector-Jacobian products, forming an
implicit tape: the graph of ``parents`` links.  :func:`gradient` walks that
graph once in reverse topological order and accumulates gradients, which is
all that is needed to differentiate an unrolled Euler integration.

Conventions:

* rank 2 only; helpers promote scalars to (1, 1) and vectors to (1, n) rows
* binary broadcasting is restricted to a row vector (1, k) against (B, k) or
  a column vector (B, 1) against (B, k); anything else raises
* a node with ``needs_grad=False`` records no closure, so constant subtrees
  cost one array op and nothing at backward time

A tensor is single-owner while the graph is under construction; completed
forward values are never mutated and may be read concurrently.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy.special import expit

Arrayish = Union[float, int, Sequence, np.ndarray]

__all__ = [
    "Tensor",
    "constant",
    "leaf",
    "add",
    "sub",
    "mul",
    "matmul",
    "sigmoid",
    "tanh",
    "sigmoid_array",
    "exp",
    "log",
    "neg",
    "scale",
    "tsum",
    "mean",
    "reshape",
    "gradient",
]


def _as_matrix(value: Arrayish) -> np.ndarray:
    """Coerce to a rank-2 float64 array; scalars -> (1,1), vectors -> (1,n)."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    if arr.ndim == 2:
        return arr
    raise ValueError(f"rank {arr.ndim} tensor not supported, max rank is 2 (shape {arr.shape})")


class Tensor:
    """One node of the computation graph.

    Attributes:
        value: the forward value, a (rows, cols) float64 array.
        op: short op name, for debugging.
        parents: input nodes, empty for leaves and constants.
        needs_grad: whether a backward pass must visit this node.
        grad: gradient buffer used transiently by :func:`gradient`.
    """

    __slots__ = ("value", "op", "parents", "_vjp", "needs_grad", "grad")

    def __init__(
        self,
        value: np.ndarray,
        op: str = "const",
        parents: tuple = (),
        vjp: Optional[Callable] = None,
        needs_grad: bool = False,
    ):
        self.value = value
        self.op = op
        self.parents = parents
        self._vjp = vjp
        self.needs_grad = needs_grad
        self.grad = None

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Tensor(op={self.op!r}, shape={self.value.shape}, needs_grad={self.needs_grad})"

    # operator sugar; scalars route through scale()
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other) -> "Tensor":
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __neg__(self) -> "Tensor":
        return neg(self)


def constant(value: Arrayish) -> Tensor:
    """Wrap a value that never needs a gradient."""
    return Tensor(_as_matrix(value), op="const")


def leaf(value: Arrayish) -> Tensor:
    """Wrap a trainable value; gradients will be collected for it."""
    return Tensor(_as_matrix(value), op="leaf", needs_grad=True)


def _node(value: np.ndarray, op: str, parents: tuple, vjp: Callable) -> Tensor:
    """Record an op result, skipping the closure when no parent tracks gradients."""
    if any(p.needs_grad for p in parents):
        return Tensor(value, op=op, parents=parents, vjp=vjp, needs_grad=True)
    return Tensor(value, op=op)


def _check_broadcast(op: str, sa: tuple, sb: tuple) -> None:
    """Permit equal shapes, row (1,k) vs (B,k), and column (B,1) vs (B,k)."""
    if sa == sb:
        return
    if sa[1] == sb[1] and (sa[0] == 1 or sb[0] == 1):
        return
    if sa[0] == sb[0] and (sa[1] == 1 or sb[1] == 1):
        return
    raise ValueError(f"{op}: shapes {sa} and {sb} are neither equal nor row/column-broadcastable")


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum an upstream gradient back down to the broadcast input's shape."""
    if grad.shape == shape:
        return grad
    if shape[0] == 1 and grad.shape[0] != 1:
        grad = grad.sum(axis=0, keepdims=True)
    if shape[1] == 1 and grad.shape[1] != 1:
        grad = grad.sum(axis=1, keepdims=True)
    return grad


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("add", a.shape, b.shape)
    out = a.value + b.value

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(out, "add", (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("sub", a.shape, b.shape)
    out = a.value - b.value

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _node(out, "sub", (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_broadcast("mul", a.shape, b.shape)
    out = a.value * b.value

    def vjp(g):
        return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)

    return _node(out, "mul", (a, b), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: inner dims disagree, {a.shape} @ {b.shape}")
    out = a.value @ b.value

    def vjp(g):
        return g @ b.value.T, a.value.T @ g

    return _node(out, "matmul", (a, b), vjp)


def sigmoid_array(x: np.ndarray) -> np.ndarray:
    """Overflow-safe logistic function on a plain array."""
    return expit(x)


def sigmoid(a: Tensor) -> Tensor:
    s = expit(a.value)

    def vjp(g):
        return (g * s * (1.0 - s),)

    return _node(s, "sigmoid", (a,), vjp)


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.value)

    def vjp(g):
        return (g * (1.0 - t * t),)

    return _node(t, "tanh", (a,), vjp)


def exp(a: Tensor) -> Tensor:
    e = np.exp(a.value)

    def vjp(g):
        return (g * e,)

    return _node(e, "exp", (a,), vjp)


def log(a: Tensor) -> Tensor:
    out = np.log(a.value)

    def vjp(g):
        return (g / a.value,)

    return _node(out, "log", (a,), vjp)


def neg(a: Tensor) -> Tensor:
    def vjp(g):
        return (-g,)

    return _node(-a.value, "neg", (a,), vjp)


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a python scalar (constant, not a graph node)."""
    c = float(c)

    def vjp(g):
        return (g * c,)

    return _node(a.value * c, "scale", (a,), vjp)


def tsum(a: Tensor, axis: Optional[int] = None) -> Tensor:
    """Sum all entries (axis=None -> (1,1)) or along one axis, keeping rank 2."""
    if axis is None:
        out = a.value.sum().reshape(1, 1)
    elif axis in (0, 1):
        out = a.value.sum(axis=axis, keepdims=True)
    else:
        raise ValueError(f"sum: axis must be None, 0, or 1, got {axis}")
    in_shape = a.shape

    def vjp(g):
        return (np.broadcast_to(g, in_shape).copy(),)

    return _node(out, "sum", (a,), vjp)


def mean(a: Tensor) -> Tensor:
    """Mean over all entries, as a (1,1) tensor."""
    return scale(tsum(a), 1.0 / a.value.size)


def reshape(a: Tensor, shape: tuple) -> Tensor:
    if int(np.prod(shape)) != a.value.size:
        raise ValueError(f"reshape: cannot view {a.shape} as {shape}")
    out = a.value.reshape(shape)
    in_shape = a.shape

    def vjp(g):
        return (g.reshape(in_shape),)

    return _node(out, "reshape", (a,), vjp)


def gradient(loss: Tensor, wrt: Iterable[Tensor]) -> list:
    """Reverse-mode gradients of a scalar loss with respect to given tensors.

    Walks the graph once in reverse topological order.  Tensors in ``wrt``
    that the loss does not depend on get an exact zero gradient of their own
    shape.  Raises if the loss is not a single number.
    """
    wrt = list(wrt)
    if loss.value.size != 1:
        raise ValueError(f"gradient: loss must be scalar, got shape {loss.shape}")

    # iterative post-order over grad-tracking nodes only
    order: list = []
    seen: set = set()
    stack: list = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.needs_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))

    keep = {id(t) for t in wrt}
    loss.grad = np.ones_like(loss.value)
    for node in reversed(order):
        g = node.grad
        if g is None or node._vjp is None:
            continue
        for parent, pg in zip(node.parents, node._vjp(g)):
            if not parent.needs_grad:
                continue
            if parent.grad is None:
                parent.grad = pg
            else:
                parent.grad = parent.grad + pg
        if id(node) not in keep:
            node.grad = None  # free transient buffers as we go

    grads = []
    for t in wrt:
        grads.append(t.grad if t.grad is not None else np.zeros_like(t.value))
        t.grad = None
    return grads
