"""Dense float64 tensors with tape-style reverse-mode differentiation.

Every operation returns a new :class:`Tensor` that remembers its inputs and a
closure mapping the output adjoint to input adjoints. The graph is rebuilt on
each forward pass; :func:`backward` walks it once in reverse topological order.

Only what the coordinate networks here need is provided: matrix products,
broadcast bias addition, elementwise products, ``sin``/``cos``/``relu``,
concatenation along the last axis, reductions and the MSE loss.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ShapeError

DTYPE = np.float64


class Tensor:
    """A float64 array plus the bookkeeping needed for reverse-mode AD.

    Tensors are treated as immutable values: operations never modify their
    inputs. Optimizers replace ``data`` wholesale between forward passes.
    """

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, *, op: str = "leaf",
                 parents: tuple["Tensor", ...] = (), backward_fn=None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self.op = op
        self._parents = parents
        self._backward = backward_fn

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return not self._parents

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op!r}{flag})"

    def __add__(self, other):
        return add(self, _as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return hadamard(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents: tuple[Tensor, ...], op: str,
          backward_fn: Callable[[np.ndarray], tuple]) -> Tensor:
    needs = any(p.requires_grad for p in parents)
    return Tensor(data, needs, op=op, parents=parents if needs else (),
                  backward_fn=backward_fn if needs else None)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    # sum out leading axes and axes that were size 1 in the operand
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _same_shape(a: Tensor, b: Tensor, opname: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{opname}: shape mismatch {a.shape} vs {b.shape}")


# ---------------------------------------------------------------------------
# operations


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of ``a`` (r x k) and ``b`` (k x c)."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = a.data @ b.data

    def back(g):
        return (g @ b.data.T if a.requires_grad else None,
                a.data.T @ g if b.requires_grad else None)

    return _node(out, (a, b), "matmul", back)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map ``x @ weight.T + bias`` with ``weight`` stored as (out, in).

    Equivalent to ``add(matmul(x, transpose(weight)), bias)`` but recorded as a
    single node, which saves a transpose copy per step in training loops.
    """
    if x.data.ndim != 2 or weight.data.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"linear: input {x.shape} does not match weight {weight.shape}")
    out = x.data @ weight.data.T
    if bias is not None:
        if bias.shape != (weight.shape[0],):
            raise ShapeError(f"linear: bias {bias.shape} does not match weight {weight.shape}")
        out += bias.data
        parents = (x, weight, bias)
    else:
        parents = (x, weight)

    def back(g):
        gx = g @ weight.data if x.requires_grad else None
        gw = g.T @ x.data if weight.requires_grad else None
        if bias is None:
            return gx, gw
        return gx, gw, (np.ones(g.shape[0]) @ g if bias.requires_grad else None)

    return _node(out, parents, "linear", back)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose: expected a matrix, got shape {a.shape}")
    return _node(a.data.T.copy(), (a,), "transpose", lambda g: (g.T,))


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum with numpy broadcasting (used for bias rows)."""
    try:
        out = a.data + b.data
    except ValueError:
        raise ShapeError(f"add: cannot broadcast {a.shape} with {b.shape}") from None
    return _node(out, (a, b), "add",
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Tensor, b: Tensor) -> Tensor:
    try:
        out = a.data - b.data
    except ValueError:
        raise ShapeError(f"sub: cannot broadcast {a.shape} with {b.shape}") from None
    return _node(out, (a, b), "sub",
                 lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)))


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of two tensors of identical shape."""
    _same_shape(a, b, "hadamard")
    out = a.data * b.data

    def back(g):
        return (g * b.data if a.requires_grad else None,
                g * a.data if b.requires_grad else None)

    return _node(out, (a, b), "hadamard", back)


def hadamard_all(factors: Sequence[Tensor]) -> Tensor:
    """Left fold of :func:`hadamard` over ``factors`` (at least one)."""
    if not factors:
        raise ValueError("hadamard_all needs at least one factor")
    out = factors[0]
    for f in factors[1:]:
        out = hadamard(out, f)
    return out


def scale(a: Tensor, c: float) -> Tensor:
    return _node(a.data * c, (a,), "scale", lambda g: (g * c,))


def sin(x: Tensor) -> Tensor:
    return _node(np.sin(x.data), (x,), "sin", lambda g: (g * np.cos(x.data),))


def cos(x: Tensor) -> Tensor:
    return _node(np.cos(x.data), (x,), "cos", lambda g: (-g * np.sin(x.data),))


def relu(x: Tensor) -> Tensor:
    # subgradient at exactly 0 is 0
    mask = x.data > 0
    return _node(x.data * mask, (x,), "relu", lambda g: (g * mask,))


_UNARY = {"sin": sin, "cos": cos, "relu": relu}


def apply_unary(kind: str, x: Tensor) -> Tensor:
    """Apply ``sin``, ``cos`` or ``relu`` elementwise."""
    try:
        fn = _UNARY[kind]
    except KeyError:
        raise ValueError(f"unknown unary op {kind!r}; expected one of {sorted(_UNARY)}") from None
    return fn(x)


def concat(parts: Sequence[Tensor]) -> Tensor:
    """Concatenate along the last axis."""
    if not parts:
        raise ValueError("concat needs at least one tensor")
    lead = parts[0].shape[:-1]
    for p in parts[1:]:
        if p.shape[:-1] != lead:
            raise ShapeError(f"concat: leading shapes differ {parts[0].shape} vs {p.shape}")
    out = np.concatenate([p.data for p in parts], axis=-1)
    bounds = np.cumsum([0] + [p.shape[-1] for p in parts])

    def back(g):
        return tuple(g[..., lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]))

    return _node(out, tuple(parts), "concat", back)


def tensor_sum(a: Tensor) -> Tensor:
    """Sum of all entries as a 0-d tensor."""
    return _node(np.array(a.data.sum()), (a,), "sum",
                 lambda g: (np.full(a.shape, float(g)),))


def mean(a: Tensor) -> Tensor:
    n = a.size
    return _node(np.array(a.data.sum() / n), (a,), "mean",
                 lambda g: (np.full(a.shape, float(g) / n),))


def mse_loss(pred: Tensor, target) -> Tensor:
    """Mean of squared differences; ``target`` is treated as a constant."""
    target = _as_tensor(target)
    _same_shape(pred, target, "mse_loss")
    diff = pred.data - target.data
    n = diff.size
    out = np.array(np.dot(diff.reshape(-1), diff.reshape(-1)) / n)

    def back(g):
        gp = (2.0 * float(g) / n) * diff
        return gp, (-gp if target.requires_grad else None)

    return _node(out, (pred, target), "mse", back)


# ---------------------------------------------------------------------------
# reverse pass


def topological_order(root: Tensor) -> list[Tensor]:
    """Nodes reachable from ``root``, each listed after all of its inputs."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
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
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Tensor) -> dict[int, np.ndarray]:
    """Propagate d(root)/d(node) to every leaf that requires a gradient.

    ``root`` must hold a single element. Leaf gradients are *assigned* (not
    accumulated) to ``leaf.grad``, so repeating the call on the same graph
    gives identical results. Returns a map from ``id(leaf)`` to its gradient.
    """
    if root.size != 1:
        raise ShapeError(f"backward needs a scalar root, got shape {root.shape}")
    grads: dict[int, np.ndarray] = {id(root): np.ones(root.shape)}
    leaves: dict[int, np.ndarray] = {}
    for node in reversed(topological_order(root)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.is_leaf:
            if node.requires_grad:
                node.grad = g
                leaves[id(node)] = g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            prev = grads.get(id(parent))
            grads[id(parent)] = pg if prev is None else prev + pg
    return leaves


def grads_for(params: Iterable[Tensor], root: Tensor) -> list[np.ndarray]:
    """Run :func:`backward` and return gradients aligned with ``params``.

    Parameters the root does not depend on get zero gradients.
    """
    params = list(params)
    got = backward(root)
    return [got.get(id(p), np.zeros(p.shape)) for p in params]


def finite_diff_grad(f: Callable[[list[np.ndarray]], float], params: Sequence[np.ndarray],
                     h: float = 1e-6) -> list[np.ndarray]:
    """Central-difference gradient of a scalar function of several arrays.

    ``f`` receives the full list of arrays; each coordinate is perturbed by
    ``+h`` and ``-h`` in turn and restored afterwards.
    """
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h}")
    work = [np.array(p, dtype=DTYPE, copy=True) for p in params]
    out = []
    for arr in work:
        g = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f(work)
            flat[i] = orig - h
            fm = f(work)
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * h)
        out.append(g)
    return out


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1.0) -> float:
    """Largest elementwise ``|a - n| / max(|a|, |n|, floor)``.

    The floor keeps gradients that are near zero from being judged on the
    finite-difference round-off alone (about ``eps * |f| / h``).
    """
    a = np.asarray(analytic, dtype=DTYPE)
    n = np.asarray(numeric, dtype=DTYPE)
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    diff = np.abs(a - n)
    # both exactly zero counts as agreement
    ratio = np.divide(diff, denom, out=np.zeros_like(diff), where=denom > 0)
    return float(np.max(ratio))
