"""
Dense float64 tensors with a reverse-mode automatic differentiation graph.

Every operation on a :class:`Tensor` that has at least one input requiring
gradients records a node holding its parents and a closure mapping the
output gradient to the input gradients.  :func:`backward` walks those nodes
in reverse topological order, accumulates gradients into the leaves and
consumes the graph.

Graphs are thread-confined; the grad-enabled switch (:func:`no_grad`) is
thread-local so that independent graphs can be built on different threads.
"""

import contextlib
import threading

import numpy as np

from moedistill import exception

_state = threading.local()


def is_grad_enabled():
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """Evaluate without recording graph nodes (teacher signals, inference)."""
    previous = is_grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


def _check_finite(data, op):
    if not np.isfinite(data).all():
        raise exception.NonFiniteValue(op=op)


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape)
                 if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _broadcast_shape(op, *shapes):
    try:
        return np.broadcast_shapes(*shapes)
    except ValueError:
        raise exception.ShapeMismatch(op=op, shapes=list(shapes))


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class Tensor(object):
    """A row-major float64 array plus its autodiff graph handle."""

    # Makes ``ndarray <op> Tensor`` defer to the Tensor reflected operators.
    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, name=None):
        data = np.asarray(data, dtype=np.float64)
        _check_finite(data, name or "tensor")
        self.data = data
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._leaf = True
        self._parents = ()
        self._backward = None
        self._op = None
        self._consumed = False

    @classmethod
    def from_op(cls, data, parents, backward, op):
        """Wrap the result of `op`, recording a graph node when needed."""
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        _check_finite(out.data, op)
        out.grad = None
        out.name = None
        out._leaf = False
        out._op = op
        out._consumed = False
        out.requires_grad = (is_grad_enabled() and
                             any(p.requires_grad for p in parents))
        if out.requires_grad:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return self._leaf

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    def backward(self):
        backward(self)

    def __repr__(self):
        return "Tensor(shape=%s, op=%s, requires_grad=%s)" % (
            self.shape, self._op, self.requires_grad)

    def __len__(self):
        return self.shape[0]

    # Arithmetic

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        n = self.size if axis is None else self.shape[axis]
        return tsum(self, axis=axis, keepdims=keepdims) / float(n)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a.shape, b.shape)

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), _backward, "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a.shape, b.shape)

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), _backward, "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a.shape, b.shape)

    def _backward(g):
        return (_unbroadcast(g * b.data, a.shape),
                _unbroadcast(g * a.data, b.shape))

    return Tensor.from_op(a.data * b.data, (a, b), _backward, "mul")


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("div", a.shape, b.shape)

    def _backward(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return Tensor.from_op(a.data / b.data, (a, b), _backward, "div")


def matmul(a, b):
    """Batched ``a @ b`` over the last two axes, broadcasting batch axes."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise exception.ShapeMismatch(op="matmul", shapes=[a.shape, b.shape])
    _broadcast_shape("matmul", a.shape[:-2], b.shape[:-2])

    def _backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor.from_op(np.matmul(a.data, b.data), (a, b), _backward,
                          "matmul")


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)

    def _backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor.from_op(a.data.sum(axis=axis, keepdims=keepdims), (a,),
                          _backward, "sum")


def reshape(a, shape):
    a = as_tensor(a)
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise exception.ShapeMismatch(op="reshape", shapes=[a.shape, shape])

    def _backward(g):
        return (g.reshape(a.shape),)

    return Tensor.from_op(data, (a,), _backward, "reshape")


def transpose(a, axes=None):
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))

    def _backward(g):
        return (g.transpose(inverse),)

    return Tensor.from_op(a.data.transpose(axes), (a,), _backward,
                          "transpose")


def getitem(a, index):
    """Basic and advanced indexing; repeated indices accumulate gradients."""
    a = as_tensor(a)

    def _backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        return (full,)

    return Tensor.from_op(a.data[index], (a,), _backward, "getitem")


def _topological(root):
    """Nodes reachable from `root` through tracked edges, parents first."""
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
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss, leaves=None):
    """Accumulate d(loss)/d(leaf) into every reachable leaf's ``grad``.

    When `leaves` is given their gradients are reset to zeros first, so a
    leaf with no path to the loss ends with an exactly-zero gradient.
    """
    if loss.ndim != 0:
        raise exception.NonScalarLoss(shape=loss.shape)
    if loss._consumed:
        raise exception.GraphConsumed()
    for leaf in leaves or ():
        leaf.zero_grad()
    if not loss.requires_grad:
        return

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological(loss)):
        g = grads.pop(id(node), None)
        if node._leaf:
            if g is not None:
                node.grad = g.copy() if node.grad is None else node.grad + g
            continue
        if g is not None:
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
        node._parents = ()
        node._backward = None
        node._consumed = True
