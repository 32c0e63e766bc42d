"""Tensor and Tape.

Operations on Tensors always compute their values. When one of the operands requires a gradient
and a Tape is active on the current thread, the operation is also recorded on that tape with a
function mapping the output gradient to operand gradients. Recording order is a topological
order, so Tape.backward replays the record in reverse.
"""
import threading
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from apparelmotion.nn.exceptions import ShapeMismatchException, TapeConsumedException

Operand = Union["Tensor", np.ndarray, float, int]
BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_tape_stack = threading.local()


class Tensor:
    """A float64 array with an optional gradient buffer."""

    __array_ufunc__ = None

    def __init__(self, value: Any, requires_grad: bool = False, name: Optional[str] = None):
        self.value = np.array(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def __len__(self) -> int:
        return len(self.value)

    def item(self) -> float:
        return float(self.value)

    def numpy(self) -> np.ndarray:
        """A copy of the value detached from any tape."""
        return np.array(self.value)

    def accumulate(self, grad: np.ndarray) -> None:
        if grad.shape != self.value.shape:
            raise ShapeMismatchException(
                f"gradient shape {grad.shape} does not match value shape {self.value.shape}"
            )
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += grad

    def __add__(self, other: Operand) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Operand) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: Operand) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Operand) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: Operand) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Operand) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: Operand) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other: Operand) -> "Tensor":
        return div(other, self)

    def __neg__(self) -> "Tensor":
        return mul(self, -1.0)

    def __matmul__(self, other: Operand) -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, key: Any) -> "Tensor":
        return getitem(self, key)


class Tape:
    """Records differentiable operations for one forward pass.

    Usage:
        with Tape() as tape:
            loss = model(...)
        tape.backward(loss)
    """

    def __init__(self) -> None:
        self._records: List[Tuple[Tensor, Tuple[Tensor, ...], BackwardFn]] = []
        self._consumed = False

    def __enter__(self) -> "Tape":
        _active_tapes().append(self)
        return self

    def __exit__(self, *exc_info: Any) -> None:
        _active_tapes().pop()

    def __len__(self) -> int:
        return len(self._records)

    def record(self, output: Tensor, inputs: Tuple[Tensor, ...], backward_fn: BackwardFn) -> None:
        self._records.append((output, inputs, backward_fn))

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(x) into x.grad for every leaf x requiring a gradient. Leaves are
        tensors which were not produced by an operation recorded on this tape."""
        if self._consumed:
            raise TapeConsumedException("backward was already called on this tape; call reset()")
        if loss.value.size != 1:
            raise ShapeMismatchException(f"backward needs a scalar loss, got shape {loss.shape}")
        self._consumed = True
        produced = {id(output) for output, _, _ in self._records}
        grads = {id(loss): np.ones_like(loss.value)}
        for output, inputs, backward_fn in reversed(self._records):
            output_grad = grads.pop(id(output), None)
            if output_grad is None:
                continue
            for tensor, grad in zip(inputs, backward_fn(output_grad)):
                if grad is None or not tensor.requires_grad:
                    continue
                if id(tensor) not in produced:
                    tensor.accumulate(grad)
                elif id(tensor) in grads:
                    grads[id(tensor)] = grads[id(tensor)] + grad
                else:
                    grads[id(tensor)] = grad
        if id(loss) not in produced and loss.requires_grad:
            loss.accumulate(np.ones_like(loss.value))

    def reset(self) -> None:
        self._records = []
        self._consumed = False


def _active_tapes() -> List[Tape]:
    if not hasattr(_tape_stack, "tapes"):
        _tape_stack.tapes = []
    return _tape_stack.tapes


def active_tape() -> Optional[Tape]:
    tapes = _active_tapes()
    return tapes[-1] if tapes else None


def as_tensor(value: Operand) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def make_result(value: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFn) -> Tensor:
    """Wrap value as the output of an operation on inputs, recording it when needed."""
    requires_grad = any(tensor.requires_grad for tensor in inputs)
    result = Tensor(value, requires_grad=requires_grad)
    tape = active_tape()
    if requires_grad and tape is not None:
        tape.record(result, tuple(inputs), backward_fn)
    return result


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum grad over the axes numpy broadcasting added to reach grad.shape from shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(a: Tensor, b: Tensor, op_name: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as ve:
        raise ShapeMismatchException(
            f"{op_name}: shapes {a.shape} and {b.shape} are incompatible"
        ) from ve


def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    return make_result(
        a.value + b.value,
        (a, b),
        lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)),
    )


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    return make_result(
        a.value - b.value,
        (a, b),
        lambda g: (unbroadcast(g, a.shape), unbroadcast(-g, b.shape)),
    )


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    return make_result(
        a.value * b.value,
        (a, b),
        lambda g: (unbroadcast(g * b.value, a.shape), unbroadcast(g * a.value, b.shape)),
    )


def div(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")
    return make_result(
        a.value / b.value,
        (a, b),
        lambda g: (
            unbroadcast(g / b.value, a.shape),
            unbroadcast(-g * a.value / (b.value * b.value), b.shape),
        ),
    )


def matmul(x: Operand, w: Operand) -> Tensor:
    """x (..., D_in) @ w (D_in, D_out)."""
    x, w = as_tensor(x), as_tensor(w)
    if w.ndim != 2 or x.ndim < 1 or x.shape[-1] != w.shape[0]:
        raise ShapeMismatchException(f"matmul: shapes {x.shape} and {w.shape} are incompatible")

    def backward(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        grad_x = g @ w.value.T
        grad_w = x.value.reshape(-1, w.shape[0]).T @ g.reshape(-1, w.shape[1])
        return grad_x, grad_w

    return make_result(x.value @ w.value, (x, w), backward)


def getitem(x: Tensor, key: Any) -> Tensor:
    """Basic or advanced indexing; the gradient scatters back with np.add.at so repeated
    indices accumulate."""

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        grad = np.zeros_like(x.value)
        np.add.at(grad, key, g)
        return (grad,)

    return make_result(x.value[key], (x,), backward)
