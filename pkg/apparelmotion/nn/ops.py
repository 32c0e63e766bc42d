"""Differentiable primitives beyond the arithmetic defined with Tensor."""
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.special import expit

from apparelmotion.nn.exceptions import ShapeMismatchException
from apparelmotion.nn.tensor import (
    Operand,
    Tensor,
    add,
    as_tensor,
    div,
    getitem,
    make_result,
    matmul,
    mul,
    sub,
    unbroadcast,
)

Axis = Optional[Union[int, Tuple[int, ...]]]

__all__ = [
    "Tensor",
    "abs",
    "add",
    "broadcast_to",
    "clip",
    "concat",
    "dense",
    "div",
    "gather",
    "getitem",
    "log",
    "matmul",
    "max_pool",
    "mean",
    "mul",
    "neighborhood_max",
    "norm",
    "relu",
    "reshape",
    "segment_max",
    "sigmoid",
    "softmax",
    "sparse_matmul",
    "square",
    "sub",
    "sum",
    "weighted_sum",
]


def relu(x: Operand) -> Tensor:
    x = as_tensor(x)
    return make_result(np.maximum(x.value, 0.0), (x,), lambda g: (g * (x.value > 0.0),))


def sigmoid(x: Operand) -> Tensor:
    """
    >>> float(sigmoid(0.0).value)
    0.5
    """
    x = as_tensor(x)
    s = expit(x.value)
    return make_result(s, (x,), lambda g: (g * s * (1.0 - s),))


def log(x: Operand) -> Tensor:
    x = as_tensor(x)
    return make_result(np.log(x.value), (x,), lambda g: (g / x.value,))


def abs(x: Operand) -> Tensor:  # pylint: disable=redefined-builtin
    x = as_tensor(x)
    return make_result(np.abs(x.value), (x,), lambda g: (g * np.sign(x.value),))


def square(x: Operand) -> Tensor:
    x = as_tensor(x)
    return make_result(x.value * x.value, (x,), lambda g: (2.0 * g * x.value,))


def clip(x: Operand, low: float, high: float) -> Tensor:
    x = as_tensor(x)
    inside = (x.value >= low) & (x.value <= high)
    return make_result(np.clip(x.value, low, high), (x,), lambda g: (g * inside,))


def norm(x: Operand, axis: int = -1) -> Tensor:
    """Euclidean norm along axis. The gradient at a zero vector is taken as zero."""
    x = as_tensor(x)
    length = np.sqrt(np.sum(x.value * x.value, axis=axis))

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        safe = np.where(length > 0.0, length, 1.0)
        scale = np.where(length > 0.0, g / safe, 0.0)
        return (np.expand_dims(scale, axis) * x.value,)

    return make_result(length, (x,), backward)


# pylint: disable=redefined-builtin
def sum(x: Operand, axis: Axis = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return make_result(np.sum(x.value, axis=axis, keepdims=keepdims), (x,), backward)


def mean(x: Operand, axis: Axis = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    total = sum(x, axis=axis, keepdims=keepdims)
    count = x.value.size // max(total.value.size, 1) if x.value.size else 1
    return mul(total, 1.0 / count)


def softmax(x: Operand, axis: int = -1) -> Tensor:
    """Softmax with max subtraction, so adding a constant along axis leaves it unchanged.

    >>> softmax(np.zeros(3)).value.tolist() == [1 / 3] * 3
    True
    """
    x = as_tensor(x)
    if x.shape[axis] < 1:
        raise ShapeMismatchException(f"softmax over an empty axis of shape {x.shape}")
    shifted = x.value - np.max(x.value, axis=axis, keepdims=True)
    exp = np.exp(shifted)
    s = exp / np.sum(exp, axis=axis, keepdims=True)
    return make_result(
        s, (x,), lambda g: (s * (g - np.sum(g * s, axis=axis, keepdims=True)),)
    )


def concat(tensors: Sequence[Operand], axis: int = -1) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    values = [p.value for p in parts]
    try:
        value = np.concatenate(values, axis=axis)
    except ValueError as ve:
        raise ShapeMismatchException(
            f"concat: shapes {[v.shape for v in values]} do not agree off axis {axis}"
        ) from ve
    splits = np.cumsum([v.shape[axis] for v in values])[:-1]
    return make_result(value, parts, lambda g: tuple(np.split(g, splits, axis=axis)))


def max_pool(x: Operand, axis: int = 0) -> Tensor:
    """Max over axis (removed). The gradient goes to the first maximal entry."""
    x = as_tensor(x)
    if x.shape[axis] < 1:
        raise ShapeMismatchException(f"max_pool over an empty axis of shape {x.shape}")
    winner = np.expand_dims(np.argmax(x.value, axis=axis), axis)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        grad = np.zeros_like(x.value)
        np.put_along_axis(grad, winner, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return make_result(np.max(x.value, axis=axis), (x,), backward)


def broadcast_to(x: Operand, shape: Tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    try:
        value = np.broadcast_to(x.value, shape).copy()
    except ValueError as ve:
        raise ShapeMismatchException(f"can not broadcast {x.shape} to {shape}") from ve
    return make_result(value, (x,), lambda g: (unbroadcast(g, x.shape),))


def reshape(x: Operand, shape: Tuple[int, ...]) -> Tensor:
    x = as_tensor(x)
    try:
        value = x.value.reshape(shape)
    except ValueError as ve:
        raise ShapeMismatchException(f"can not reshape {x.shape} to {shape}") from ve
    return make_result(value, (x,), lambda g: (g.reshape(x.shape),))


def gather(x: Operand, indices: np.ndarray) -> Tensor:
    """Rows of x selected by indices (axis 0)."""
    return getitem(as_tensor(x), np.asarray(indices, dtype=np.int64))


def segment_max(values: Operand, segment_ids: np.ndarray, num_segments: int) -> Tensor:
    """Per-segment channelwise max of rows of values (E, D) into (num_segments, D).

    A segment with no rows is the zero vector. The gradient of each output entry goes to the
    first row attaining the max.
    """
    values = as_tensor(values)
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    if values.ndim != 2 or len(segment_ids) != len(values):
        raise ShapeMismatchException(
            f"segment_max: values {values.shape} and segment ids {segment_ids.shape} disagree"
        )
    num_rows, width = values.shape
    out = np.full((num_segments, width), -np.inf)
    np.maximum.at(out, segment_ids, values.value)
    empty = np.isneginf(out)
    out[empty] = 0.0
    rows = np.broadcast_to(np.arange(num_rows)[:, None], values.shape)
    candidates = np.where(values.value == out[segment_ids], rows, num_rows)
    first = np.full((num_segments, width), num_rows)
    np.minimum.at(first, segment_ids, candidates)

    def backward(g: np.ndarray) -> Tuple[np.ndarray]:
        grad = np.zeros_like(values.value)
        hit = first < num_rows
        channels = np.broadcast_to(np.arange(width)[None, :], first.shape)
        np.add.at(grad, (first[hit], channels[hit]), g[hit])
        return (grad,)

    return make_result(out, (values,), backward)


def neighborhood_max(
    features: Operand,
    adjacency: np.ndarray,
    message: Optional[Callable[[Tensor, Tensor], Tensor]] = None,
) -> Tensor:
    """For every node i, the channelwise max over directed edges (i, j) of message(H_i, H_j).

    Args:
        features: (N, D) node features H
        adjacency: (E, 2) directed (center, neighbor) pairs
        message: edge function of (center features, neighbor features); defaults to the
            neighbor features

    Returns:
        (N, D') node features; nodes without neighbors get the zero vector
    """
    features = as_tensor(features)
    adjacency = np.asarray(adjacency, dtype=np.int64).reshape(-1, 2)
    centers = gather(features, adjacency[:, 0])
    neighbors = gather(features, adjacency[:, 1])
    messages = neighbors if message is None else message(centers, neighbors)
    return segment_max(messages, adjacency[:, 0], len(features))


def weighted_sum(weights: Operand, values: Operand) -> Tensor:
    """out_i = sum_j weights_ij values_ij for weights (N, J) and values (N, J, D)."""
    weights, values = as_tensor(weights), as_tensor(values)
    if values.ndim != 3 or weights.shape != values.shape[:2]:
        raise ShapeMismatchException(
            f"weighted_sum: weights {weights.shape} and values {values.shape} disagree"
        )
    return make_result(
        np.einsum("nj,njd->nd", weights.value, values.value),
        (weights, values),
        lambda g: (
            np.einsum("nd,njd->nj", g, values.value),
            weights.value[:, :, None] * g[:, None, :],
        ),
    )


def sparse_matmul(matrix: sparse.spmatrix, x: Operand) -> Tensor:
    """Constant sparse (M, N) matrix times x (N, D)."""
    x = as_tensor(x)
    if matrix.shape[1] != x.shape[0]:
        raise ShapeMismatchException(
            f"sparse_matmul: shapes {matrix.shape} and {x.shape} are incompatible"
        )
    matrix = sparse.csr_matrix(matrix)
    transposed = sparse.csr_matrix(matrix.T)
    return make_result(
        np.asarray(matrix @ x.value), (x,), lambda g: (np.asarray(transposed @ g),)
    )


def dense(x: Operand, weights: Operand, bias: Optional[Operand] = None) -> Tensor:
    """x (..., D_in) @ weights (D_in, D_out) + bias (D_out,)."""
    out = matmul(x, weights)
    if bias is None:
        return out
    return add(out, bias)
