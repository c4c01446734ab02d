"""Reverse-mode differentiation tape over float64 numpy arrays.

A Tape records primitive ops in creation order (operands always precede
users, so the list is already topological); backward() walks the recorded
nodes once in reverse, pushing vector-Jacobian products into parents.
Arrays are at most 2-D. Values are treated as immutable once recorded.
"""

import numpy as np

from ..errors import ContractError, ShapeError


def _as_array(value):
    a = np.asarray(value, dtype=np.float64)
    if a.ndim > 2:
        raise ShapeError(f"tape values are at most 2-D, got shape {a.shape}")
    return a


def _unbroadcast(g, shape):
    # collapse a broadcasted gradient back to `shape`
    g = np.asarray(g, dtype=np.float64)
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


class Node:
    __slots__ = ("tape", "value", "parents", "vjps", "requires_grad", "index")

    def __init__(self, tape, value, parents=(), vjps=(), requires_grad=False):
        self.tape = tape
        self.value = value
        self.parents = parents
        self.vjps = vjps
        self.requires_grad = requires_grad
        self.index = len(tape._nodes)
        tape._nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    @property
    def T(self):
        return transpose(self)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul_t(self, other)

    def __rmatmul__(self, other):
        return matmul_t(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __repr__(self):
        return f"Node(shape={self.value.shape}, grad={self.requires_grad})"


class Tape:
    def __init__(self):
        self._nodes = []

    def __len__(self):
        return len(self._nodes)

    def leaf(self, value):
        """Tracked input; backward() reports a gradient for it."""
        return Node(self, _as_array(value), requires_grad=True)

    def constant(self, value):
        return Node(self, _as_array(value), requires_grad=False)


def _coerce(a, b):
    if isinstance(a, Node) and isinstance(b, Node):
        if a.tape is not b.tape:
            raise ContractError("operands live on different tapes")
        return a, b
    if isinstance(a, Node):
        return a, a.tape.constant(b)
    if isinstance(b, Node):
        return b.tape.constant(a), b
    raise ContractError("tape op needs at least one Node operand")


def _binary(a, b, out, vjp_a, vjp_b):
    return Node(
        a.tape, out, (a, b), (vjp_a, vjp_b), a.requires_grad or b.requires_grad
    )


def _unary(a, out, vjp):
    return Node(a.tape, out, (a,), (vjp,), a.requires_grad)


def add(a, b):
    a, b = _coerce(a, b)
    sa, sb = a.value.shape, b.value.shape
    return _binary(
        a, b, a.value + b.value,
        lambda g: _unbroadcast(g, sa),
        lambda g: _unbroadcast(g, sb),
    )


def sub(a, b):
    a, b = _coerce(a, b)
    sa, sb = a.value.shape, b.value.shape
    return _binary(
        a, b, a.value - b.value,
        lambda g: _unbroadcast(g, sa),
        lambda g: _unbroadcast(-g, sb),
    )


def mul(a, b):
    a, b = _coerce(a, b)
    av, bv = a.value, b.value
    return _binary(
        a, b, av * bv,
        lambda g: _unbroadcast(g * bv, av.shape),
        lambda g: _unbroadcast(g * av, bv.shape),
    )


def matmul_t(a, b):
    """Tape-recorded matrix/vector product (1-D and 2-D operands)."""
    a, b = _coerce(a, b)
    av, bv = a.value, b.value
    if av.ndim == 0 or bv.ndim == 0:
        raise ShapeError("matmul needs vectors or matrices, got a scalar")
    if av.shape[-1] != bv.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {av.shape} @ {bv.shape}")
    if av.ndim == 2 and bv.ndim == 2:
        vjps = (lambda g: g @ bv.T, lambda g: av.T @ g)
    elif av.ndim == 2 and bv.ndim == 1:
        vjps = (lambda g: np.outer(g, bv), lambda g: av.T @ g)
    elif av.ndim == 1 and bv.ndim == 2:
        vjps = (lambda g: bv @ g, lambda g: np.outer(av, g))
    else:
        vjps = (lambda g: g * bv, lambda g: g * av)
    return Node(
        a.tape, av @ bv, (a, b), vjps, a.requires_grad or b.requires_grad
    )


def transpose(a):
    if not isinstance(a, Node):
        raise ContractError("transpose needs a Node")
    if a.value.ndim != 2:
        raise ShapeError("transpose is defined for 2-D values")
    return _unary(a, a.value.T, lambda g: np.asarray(g).T)


def relu(a):
    # pre-activation exactly 0 counts as inactive
    state = a.value > 0.0
    return _unary(a, np.where(state, a.value, 0.0), lambda g: g * state)


def leaky_relu(a, slope):
    mult = np.where(a.value > 0.0, 1.0, slope)
    return _unary(a, a.value * mult, lambda g: g * mult)


def absolute(a):
    # pre-activation exactly 0 takes the positive branch
    sign = np.where(a.value >= 0.0, 1.0, -1.0)
    return _unary(a, a.value * sign, lambda g: g * sign)


def vsum(a):
    shape = a.value.shape
    return _unary(
        a, np.asarray(a.value.sum()), lambda g: np.full(shape, float(g))
    )


def sumsq(a):
    v = a.value
    return _unary(a, np.asarray((v * v).sum()), lambda g: (2.0 * float(g)) * v)


def norm2(a):
    """Euclidean norm of a vector / Frobenius norm of a matrix.

    Gradient at the origin is defined as 0 (a valid subgradient), so exact
    fixtures with zero residual stay finite.
    """
    v = a.value
    n = float(np.sqrt((v * v).sum()))
    denom = n if n > 0.0 else 1.0
    return _unary(a, np.asarray(n), lambda g: (float(g) / denom) * v)


def dot(a, b):
    return vsum(mul(a, b))


def backward(tape, root):
    """Gradient of scalar `root` w.r.t. every tracked leaf of `tape`.

    Returns {leaf Node: gradient array}; leaves that do not reach root get
    zeros. Each recorded node is visited at most once.
    """
    if not isinstance(root, Node) or root.tape is not tape:
        raise ContractError("root is not recorded on this tape")
    if root.value.size != 1:
        raise ContractError(f"backward needs a scalar root, got shape {root.value.shape}")
    grads = {root.index: np.ones_like(root.value)}
    leaf_grads = {}
    for node in reversed(tape._nodes[: root.index + 1]):
        g = grads.pop(node.index, None)
        if g is None or not node.requires_grad:
            continue
        if not node.parents:
            leaf_grads[node] = g
            continue
        for parent, vjp in zip(node.parents, node.vjps):
            if not parent.requires_grad:
                continue
            contribution = vjp(g)
            if parent.index in grads:
                grads[parent.index] = grads[parent.index] + contribution
            else:
                grads[parent.index] = contribution
    result = {}
    for node in tape._nodes:
        if node.requires_grad and not node.parents:
            result[node] = leaf_grads.get(node, np.zeros(node.value.shape))
    return result
