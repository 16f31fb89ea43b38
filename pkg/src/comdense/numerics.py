"""Dense-layer primitives and gradient checking.

Every operation here is written against plain numpy arrays and returns
gradients derived by hand; nothing in the package relies on automatic
differentiation.  Conventions:

* ``affine_forward(W, b, x)`` computes ``y = W @ x + b`` for a single
  column vector ``x``; the batched model code calls the same math through
  matmul on stacked rows.
* Dropout is inverted dropout: surviving activations are scaled by
  ``1 / (1 - rate)`` at training time so inference needs no rescaling.
* ``bce_with_logits`` evaluates binary cross entropy in its numerically
  stable logit form and also returns the gradient with respect to the
  logits, since the two are always consumed together.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def affine_forward(W: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Return ``W @ x + b`` for weight ``W`` of shape (m, n) and input ``x`` of shape (n,)."""
    W = np.asarray(W)
    b = np.asarray(b)
    x = np.asarray(x)
    if W.ndim != 2:
        raise ValueError(f"weight must be 2-d, got shape {W.shape}")
    if x.shape != (W.shape[1],):
        raise ValueError(f"input shape {x.shape} does not match weight shape {W.shape}")
    if b.shape != (W.shape[0],):
        raise ValueError(f"bias shape {b.shape} does not match weight shape {W.shape}")
    return W @ x + b


def affine_backward(W: np.ndarray, x: np.ndarray, dy: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of an affine layer given upstream ``dy``.

    Returns ``(dW, db, dx)`` where ``dW = dy outer x``, ``db = dy`` and
    ``dx = W.T @ dy``.
    """
    W = np.asarray(W)
    x = np.asarray(x)
    dy = np.asarray(dy)
    if dy.shape != (W.shape[0],):
        raise ValueError(f"upstream gradient shape {dy.shape} does not match weight shape {W.shape}")
    dW = np.outer(dy, x)
    db = dy.copy()
    dx = W.T @ dy
    return dW, db, dx


def relu(x: np.ndarray) -> np.ndarray:
    """Elementwise max(x, 0)."""
    return np.maximum(np.asarray(x), 0.0)


def relu_backward(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Gradient through relu evaluated at pre-activation ``x``.

    The subgradient at exactly zero is taken as zero.
    """
    x = np.asarray(x)
    dy = np.asarray(dy)
    return np.where(x > 0.0, dy, 0.0)


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(np.asarray(x))


def tanh_backward(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    t = np.tanh(np.asarray(x))
    return np.asarray(dy) * (1.0 - t * t)


# Registered activations, keyed by the name used in model configs.  Each
# entry maps to (forward, backward-at-preactivation).
ACTIVATIONS: dict[str, tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray, np.ndarray], np.ndarray]]] = {
    "relu": (relu, relu_backward),
    "tanh": (tanh, tanh_backward),
}


def sigmoid(x):
    """Numerically stable logistic function for scalars or arrays.

    Large positive and large negative inputs are handled on separate
    branches so ``exp`` never overflows.
    """
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    pos = arr >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out


def dropout(x: np.ndarray, rate: float, rng: np.random.Generator | None, training: bool) -> tuple[np.ndarray, np.ndarray]:
    """Inverted dropout.

    Returns ``(y, mask)`` where ``y = x * mask``.  At training time each
    element survives with probability ``1 - rate`` and the mask holds
    ``1 / (1 - rate)`` on survivors, zero elsewhere, so ``E[y] = x``.  In
    inference mode (or at rate 0 the mask is effectively identity) the
    input passes through unchanged.
    """
    x = np.asarray(x)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ValueError("training-mode dropout requires a random generator")
    keep = rng.random(x.shape) >= rate
    mask = keep.astype(x.dtype) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(mask: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Gradient through dropout is the same mask applied to ``dy``."""
    return np.asarray(dy) * np.asarray(mask)


def bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross entropy over logits, plus the logit gradient.

    Uses the stable rewrite ``max(z, 0) - z * y + log(1 + exp(-|z|))`` so
    logits of either sign and large magnitude stay finite.  The returned
    gradient is ``(sigmoid(z) - y) / N`` with ``N`` the element count,
    matching the mean reduction.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if z.shape != y.shape:
        raise ValueError(f"logit shape {z.shape} does not match target shape {y.shape}")
    per_elem = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    loss = float(per_elem.mean())
    dlogits = (sigmoid(z) - y) / z.size
    return loss, dlogits


def finite_diff_check(
    f: Callable[[np.ndarray], float],
    x: np.ndarray,
    analytic_grad: np.ndarray,
    eps: float = 1e-5,
) -> float:
    """Compare an analytic gradient against central finite differences.

    ``f`` maps a point with the shape of ``x`` to a scalar.  For every
    coordinate the numeric derivative ``(f(x + eps e_i) - f(x - eps e_i))
    / (2 eps)`` is compared to ``analytic_grad`` and the maximum relative
    error ``|a - n| / max(|a|, |n|, 1e-8)`` is returned.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(analytic_grad, dtype=np.float64)
    if grad.shape != x.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match point shape {x.shape}")
    worst = 0.0
    for idx in np.ndindex(x.shape):
        plus = x.copy()
        minus = x.copy()
        plus[idx] += eps
        minus[idx] -= eps
        numeric = (f(plus) - f(minus)) / (2.0 * eps)
        analytic = grad[idx]
        denom = max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def glorot_uniform(
    shape: tuple[int, ...],
    rng: np.random.Generator,
    dtype=np.float64,
    fans: tuple[int, int] | None = None,
) -> np.ndarray:
    """Glorot/Xavier uniform init: U(-a, a) with ``a = sqrt(6 / (fan_in + fan_out))``.

    For a 2-d shape (m, n) the fans default to m and n.  Stacked weight
    tensors (one matrix per relation) pass ``fans`` explicitly so each
    slice is scaled like a single matrix rather than like the whole stack.
    """
    if len(shape) < 2:
        raise ValueError(f"glorot init needs at least 2 dimensions, got shape {shape}")
    if fans is None:
        fans = (shape[0], int(np.prod(shape[1:])))
    limit = np.sqrt(6.0 / (fans[0] + fans[1]))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)
