"""Reverse-mode automatic differentiation on an append-only tape.

Nodes hold numpy arrays; a scalar is the 0-d case. Elementwise nodes cache
their local partial derivatives at construction, so the backward pass is a
single reverse sweep of multiply-and-accumulate.

The module-level functions (``exp``, ``minimum``, ``where`` ...) dispatch on
their arguments: given a :class:`Tensor` they record a node, given plain
numbers or arrays they fall through to numpy. Model code written against
these functions therefore runs unchanged with or without a tape, and both
paths compute bitwise-identical forward values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np


class Op(enum.Enum):
    CONSTANT = "constant"
    VARIABLE = "variable"
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"
    NEG = "neg"
    EXP = "exp"
    LOG = "log"
    POW = "pow"
    SQRT = "sqrt"
    ABS = "abs"
    RELU = "relu"
    TANH = "tanh"
    SOFTPLUS = "softplus"
    MIN = "min"
    MAX = "max"
    STOP_GRADIENT = "stop_gradient"
    SUM = "sum"
    MEAN = "mean"
    # array plumbing
    MATMUL = "matmul"
    WHERE = "where"
    GETITEM = "getitem"
    RESHAPE = "reshape"
    STACK = "stack"


class DomainError(ValueError):
    """An operation was applied outside its mathematical domain."""

    def __init__(self, op: Op, node_id: int, detail: str):
        super().__init__(f"{op.value} at node {node_id}: {detail}")
        self.op = op
        self.node_id = node_id


_ARITY = {
    Op.CONSTANT: 0, Op.VARIABLE: 0,
    Op.ADD: 2, Op.SUB: 2, Op.MUL: 2, Op.DIV: 2, Op.MIN: 2, Op.MAX: 2,
    Op.MATMUL: 2, Op.WHERE: 2,
    Op.NEG: 1, Op.EXP: 1, Op.LOG: 1, Op.POW: 1, Op.SQRT: 1, Op.ABS: 1,
    Op.RELU: 1, Op.TANH: 1, Op.SOFTPLUS: 1, Op.STOP_GRADIENT: 1,
    Op.SUM: 1, Op.MEAN: 1, Op.GETITEM: 1, Op.RESHAPE: 1,
}


@dataclass(frozen=True, eq=False)
class DiffNode:
    id: int
    value: np.ndarray
    op: Op
    parents: tuple[int, ...]
    local_partials: tuple[Any, ...]
    immediate: Any = None
    requires_grad: bool = False


def _sigmoid(x):
    return np.exp(-np.logaddexp(0.0, -x))


def _forward(op: Op, xs: list[np.ndarray], imm, node_id: int):
    """Value and cached local partials for one node."""
    if op is Op.ADD:
        return xs[0] + xs[1], (1.0, 1.0)
    if op is Op.SUB:
        return xs[0] - xs[1], (1.0, -1.0)
    if op is Op.MUL:
        return xs[0] * xs[1], (xs[1], xs[0])
    if op is Op.DIV:
        if np.any(xs[1] == 0):
            raise DomainError(op, node_id, "division by zero")
        out = xs[0] / xs[1]
        return out, (1.0 / xs[1], -out / xs[1])
    if op is Op.NEG:
        return -xs[0], (-1.0,)
    if op is Op.EXP:
        out = np.exp(xs[0])
        return out, (out,)
    if op is Op.LOG:
        if np.any(xs[0] <= 0):
            raise DomainError(op, node_id, "log of non-positive value")
        return np.log(xs[0]), (1.0 / xs[0],)
    if op is Op.POW:
        p = float(imm)
        return np.power(xs[0], p), (p * np.power(xs[0], p - 1.0),)
    if op is Op.SQRT:
        if np.any(xs[0] < 0):
            raise DomainError(op, node_id, "sqrt of negative value")
        out = np.sqrt(xs[0])
        with np.errstate(divide="ignore"):
            d = np.where(out > 0, 0.5 / np.where(out > 0, out, 1.0), np.inf)
        return out, (d,)
    if op is Op.ABS:
        return np.abs(xs[0]), (np.sign(xs[0]),)
    if op is Op.RELU:
        return np.maximum(xs[0], 0.0), ((xs[0] > 0).astype(float),)
    if op is Op.TANH:
        out = np.tanh(xs[0])
        return out, (1.0 - out * out,)
    if op is Op.SOFTPLUS:
        return np.logaddexp(0.0, xs[0]), (_sigmoid(xs[0]),)
    if op is Op.MIN:
        pick = (xs[0] <= xs[1]).astype(float)
        return np.minimum(xs[0], xs[1]), (pick, 1.0 - pick)
    if op is Op.MAX:
        pick = (xs[0] >= xs[1]).astype(float)
        return np.maximum(xs[0], xs[1]), (pick, 1.0 - pick)
    if op is Op.WHERE:
        cond = np.asarray(imm, dtype=bool)
        return np.where(cond, xs[0], xs[1]), (cond.astype(float), (~cond).astype(float))
    if op is Op.STOP_GRADIENT:
        value = xs[0] if imm is None else np.asarray(imm, dtype=float)
        return value, (0.0,)
    if op is Op.SUM:
        return np.sum(xs[0], axis=imm), (1.0,)
    if op is Op.MEAN:
        n = xs[0].size if imm is None else np.prod([xs[0].shape[a] for a in np.atleast_1d(imm)])
        return np.mean(xs[0], axis=imm), (1.0 / n,)
    if op is Op.MATMUL:
        return np.matmul(xs[0], xs[1]), (xs[1], xs[0])
    if op is Op.GETITEM:
        return xs[0][imm], (1.0,)
    if op is Op.RESHAPE:
        return np.reshape(xs[0], imm), (1.0,)
    if op is Op.STACK:
        return np.stack(xs, axis=imm), (1.0,) * len(xs)
    raise ValueError(f"unsupported op {op}")


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _is_basic_index(idx) -> bool:
    idx = idx if isinstance(idx, tuple) else (idx,)
    return all(isinstance(i, (int, np.integer, slice)) or i is None or i is Ellipsis for i in idx)


class Graph:
    """Append-only computation tape.

    Parents always precede their children, so insertion order is a valid
    topological order and the backward pass is a reverse scan.
    """

    def __init__(self):
        self.nodes: list[DiffNode] = []
        self.variable_ids: list[int] = []

    def __len__(self):
        return len(self.nodes)

    def apply(self, op: Op, inputs: Sequence[int] = (), immediate=None) -> int:
        """Append one node computed from existing nodes and return its id."""
        inputs = tuple(int(i) for i in inputs)
        arity = _ARITY.get(op)
        if op is Op.STACK:
            if not inputs:
                raise TypeError("stack needs at least one input")
        elif arity is None or len(inputs) != arity:
            raise TypeError(f"{op.value} takes {arity} inputs, got {len(inputs)}")
        for i in inputs:
            if not 0 <= i < len(self.nodes):
                raise KeyError(f"unknown node id {i}")
        node_id = len(self.nodes)
        if op in (Op.CONSTANT, Op.VARIABLE):
            value = np.array(immediate, dtype=float)
            node = DiffNode(node_id, value, op, (), (), requires_grad=op is Op.VARIABLE)
            if op is Op.VARIABLE:
                self.variable_ids.append(node_id)
        else:
            xs = [self.nodes[i].value for i in inputs]
            value, partials = _forward(op, xs, immediate, node_id)
            requires = op is not Op.STOP_GRADIENT and any(self.nodes[i].requires_grad for i in inputs)
            node = DiffNode(node_id, np.asarray(value, dtype=float), op, inputs, partials, immediate, requires)
        self.nodes.append(node)
        return node_id

    def constant(self, value) -> "Tensor":
        return Tensor(self, self.apply(Op.CONSTANT, immediate=value))

    def variable(self, value) -> "Tensor":
        return Tensor(self, self.apply(Op.VARIABLE, immediate=value))

    def value(self, node_id: int) -> np.ndarray:
        return self.nodes[node_id].value

    def lift(self, x) -> "Tensor":
        if isinstance(x, Tensor):
            if x.graph is not self:
                raise ValueError("tensor belongs to a different graph")
            return x
        return self.constant(x)


def _vjp(node: DiffNode, g: np.ndarray, parents: list[DiffNode]):
    """Gradient contributions of ``g`` (w.r.t. node) to each parent."""
    op = node.op
    if op is Op.MATMUL:
        a, b = node.local_partials[1], node.local_partials[0]
        ga = np.matmul(g, np.swapaxes(b, -1, -2)) if b.ndim > 1 else np.multiply.outer(g, b)
        gb = np.matmul(np.swapaxes(a, -1, -2), g) if a.ndim > 1 else np.multiply.outer(a, g)
        return [_unbroadcast(ga, parents[0].value.shape), _unbroadcast(gb, parents[1].value.shape)]
    if op in (Op.SUM, Op.MEAN):
        shape = parents[0].value.shape
        if node.immediate is not None:
            g = np.expand_dims(g, node.immediate)
        return [np.broadcast_to(g * node.local_partials[0], shape)]
    if op is Op.GETITEM:
        out = np.zeros(parents[0].value.shape)
        if _is_basic_index(node.immediate):
            out[node.immediate] += g
        else:
            np.add.at(out, node.immediate, g)
        return [out]
    if op is Op.RESHAPE:
        return [np.reshape(g, parents[0].value.shape)]
    if op is Op.STACK:
        return list(np.moveaxis(g, node.immediate, 0))
    return [_unbroadcast(g * d, p.value.shape) for d, p in zip(node.local_partials, parents)]


def backward(graph: Graph, output: int) -> dict[int, np.ndarray]:
    """Gradient of a scalar node w.r.t. every variable of the graph.

    Returns a map from variable id to an array shaped like the variable;
    variables the output does not depend on get zeros.
    """
    output = int(output)
    out_node = graph.nodes[output]
    if out_node.value.size != 1:
        raise ValueError(f"output node {output} is not scalar (shape {out_node.value.shape})")
    grads: dict[int, np.ndarray] = {output: np.ones_like(out_node.value)}
    nodes = graph.nodes
    for node in reversed(nodes[: output + 1]):
        g = grads.pop(node.id, None)
        if g is None or not node.requires_grad:
            continue
        if node.op is Op.VARIABLE:
            grads[node.id] = g
            continue
        parents = [nodes[p] for p in node.parents]
        for p, contrib in zip(parents, _vjp(node, g, parents)):
            if not p.requires_grad:
                continue
            if p.id in grads:
                grads[p.id] = grads[p.id] + contrib
            else:
                grads[p.id] = np.array(contrib, dtype=float)
    return {
        v: np.array(grads[v], dtype=float).reshape(nodes[v].value.shape) if v in grads
        else np.zeros_like(nodes[v].value)
        for v in graph.variable_ids
    }


class Tensor:
    """Handle to a node of a :class:`Graph` with arithmetic operators."""

    __slots__ = ("graph", "id")
    __array_ufunc__ = None

    def __init__(self, graph: Graph, node_id: int):
        self.graph = graph
        self.id = node_id

    @property
    def value(self) -> np.ndarray:
        return self.graph.nodes[self.id].value

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        node = self.graph.nodes[self.id]
        return f"Tensor(id={self.id}, op={node.op.value}, shape={self.shape})"

    def _op(self, op, *others, immediate=None):
        ids = [self.id] + [self.graph.lift(o).id for o in others]
        return Tensor(self.graph, self.graph.apply(op, ids, immediate))

    def _rop(self, op, other):
        return Tensor(self.graph, self.graph.apply(op, [self.graph.lift(other).id, self.id]))

    def __add__(self, o): return self._op(Op.ADD, o)
    def __radd__(self, o): return self._rop(Op.ADD, o)
    def __sub__(self, o): return self._op(Op.SUB, o)
    def __rsub__(self, o): return self._rop(Op.SUB, o)
    def __mul__(self, o): return self._op(Op.MUL, o)
    def __rmul__(self, o): return self._rop(Op.MUL, o)
    def __truediv__(self, o): return self._op(Op.DIV, o)
    def __rtruediv__(self, o): return self._rop(Op.DIV, o)
    def __matmul__(self, o): return self._op(Op.MATMUL, o)
    def __rmatmul__(self, o): return self._rop(Op.MATMUL, o)
    def __neg__(self): return self._op(Op.NEG)

    def __pow__(self, p):
        if isinstance(p, Tensor):
            raise TypeError("exponent must be a constant")
        return self._op(Op.POW, immediate=float(p))

    def __getitem__(self, idx):
        return self._op(Op.GETITEM, immediate=idx)

    def reshape(self, *shape):
        shape = shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape
        return self._op(Op.RESHAPE, immediate=tuple(shape))

    def sum(self, axis=None):
        return self._op(Op.SUM, immediate=axis)

    def mean(self, axis=None):
        return self._op(Op.MEAN, immediate=axis)


# -- dispatching functions ---------------------------------------------------

def value_of(x) -> np.ndarray:
    """Numeric value of a tensor or array-like."""
    return x.value if isinstance(x, Tensor) else np.asarray(x, dtype=float)


def _graph_of(*xs) -> Graph | None:
    for x in xs:
        if isinstance(x, Tensor):
            return x.graph
    return None


def _unary(op: Op, fn: Callable):
    def f(x):
        if isinstance(x, Tensor):
            return x._op(op)
        return fn(np.asarray(x, dtype=float))
    f.__name__ = op.value
    return f


exp = _unary(Op.EXP, np.exp)
log = _unary(Op.LOG, np.log)
sqrt = _unary(Op.SQRT, np.sqrt)
absolute = _unary(Op.ABS, np.abs)
tanh = _unary(Op.TANH, np.tanh)
relu = _unary(Op.RELU, lambda x: np.maximum(x, 0.0))
softplus = _unary(Op.SOFTPLUS, lambda x: np.logaddexp(0.0, x))


def _binary(op: Op, fn: Callable):
    def f(x, y):
        g = _graph_of(x, y)
        if g is None:
            return fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return g.lift(x)._op(op, y)
    f.__name__ = op.value
    return f


minimum = _binary(Op.MIN, np.minimum)
maximum = _binary(Op.MAX, np.maximum)


def stop_gradient(x):
    """Pass the value forward and block the gradient."""
    if isinstance(x, Tensor):
        return x._op(Op.STOP_GRADIENT)
    return np.asarray(x, dtype=float)


def indicator(x, test: Callable[[np.ndarray], np.ndarray]):
    """Float indicator ``test(value(x))`` whose gradient is zero."""
    flag = np.asarray(test(value_of(x)), dtype=float)
    if isinstance(x, Tensor):
        return Tensor(x.graph, x.graph.apply(Op.STOP_GRADIENT, [x.id], immediate=flag))
    return flag


def where(cond, x, y):
    """Select elementwise by a constant boolean mask."""
    cond = np.asarray(cond, dtype=bool)
    g = _graph_of(x, y)
    if g is None:
        return np.where(cond, np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return g.lift(x)._op(Op.WHERE, y, immediate=cond)


def sum(x, axis=None):  # noqa: A001
    if isinstance(x, Tensor):
        return x.sum(axis)
    return np.sum(x, axis=axis)


def mean(x, axis=None):
    if isinstance(x, Tensor):
        return x.mean(axis)
    return np.mean(x, axis=axis)


def matmul(x, y):
    g = _graph_of(x, y)
    if g is None:
        return np.matmul(x, y)
    return g.lift(x)._op(Op.MATMUL, y)


def stack(xs: Sequence, axis: int = 0):
    g = _graph_of(*xs)
    if g is None:
        return np.stack([np.asarray(x, dtype=float) for x in xs], axis=axis)
    ids = [g.lift(x).id for x in xs]
    return Tensor(g, g.apply(Op.STACK, ids, immediate=axis))


def reshape(x, shape):
    if isinstance(x, Tensor):
        return x.reshape(tuple(shape))
    return np.reshape(x, shape)


def norm(x, axis=-1):
    """Euclidean norm along ``axis`` with a zero gradient at the origin."""
    sq = sum(x * x, axis=axis)
    positive = value_of(sq) > 0
    return where(positive, sqrt(where(positive, sq, 1.0)), 0.0)


# -- finite-difference oracle ---------------------------------------------

class GradientCheckError(AssertionError):
    def __init__(self, coordinate: int, error: float, tolerance: float):
        super().__init__(f"coordinate {coordinate}: relative error {error:.3e} exceeds {tolerance:.1e}")
        self.coordinate = coordinate
        self.error = error


def ad_gradient(builder: Callable, point) -> np.ndarray:
    graph = Graph()
    x = graph.variable(np.asarray(point, dtype=float))
    out = builder(x)
    return backward(graph, out.id)[x.id]


def fd_gradient(builder: Callable, point, eps: float) -> np.ndarray:
    """Central differences of ``builder`` evaluated on plain arrays."""
    point = np.asarray(point, dtype=float)
    grad = np.zeros_like(point)
    flat = grad.reshape(-1)
    for k in range(point.size):
        up = point.copy().reshape(-1)
        dn = point.copy().reshape(-1)
        up[k] += eps
        dn[k] -= eps
        f_up = float(np.asarray(builder(up.reshape(point.shape))))
        f_dn = float(np.asarray(builder(dn.reshape(point.shape))))
        flat[k] = (f_up - f_dn) / (2 * eps)
    return grad


def relative_errors(ad: np.ndarray, fd: np.ndarray) -> np.ndarray:
    return np.abs(ad - fd) / np.maximum(1.0, np.abs(ad))


def check_gradients(builder: Callable, point, eps: float = 1e-5, tolerance: float | None = None) -> float:
    """Max relative error between reverse-mode and central-difference gradients.

    ``builder`` maps a point (a :class:`Tensor` or a plain array) to a scalar.
    With ``tolerance`` set, raises :class:`GradientCheckError` naming the
    worst coordinate when the error exceeds it.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    errors = relative_errors(ad_gradient(builder, point), fd_gradient(builder, point, eps)).reshape(-1)
    worst = int(np.argmax(errors)) if errors.size else 0
    err = float(errors[worst]) if errors.size else 0.0
    if tolerance is not None and err > tolerance:
        raise GradientCheckError(worst, err, tolerance)
    return err
