"""Adam optimizer applied densely to every model tensor.

Moment buffers mirror the Parameters layout tensor by tensor, keyed by
the canonical tensor names, so optimizer state serializes with the same
manifest scheme as the model itself.  Updates are dense: embedding rows
that received zero gradient in a step still decay their moments, which
keeps trajectories independent of batch composition bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Parameters


@dataclass
class AdamHyper:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def validate(self) -> None:
        # Zero is allowed: it freezes parameters, which tests use to pin
        # down early-stopping behaviour.
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate!r}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {b!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon!r}")


class AdamState:
    """First/second moment buffers per tensor plus the step counter."""

    def __init__(self, params: Parameters):
        self.t = 0
        self.m = {name: np.zeros_like(arr) for name, arr in params.named_tensors()}
        self.v = {name: np.zeros_like(arr) for name, arr in params.named_tensors()}


def adam_update_array(
    theta: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    hyper: AdamHyper,
) -> None:
    """One bias-corrected Adam update, in place, for a single tensor.

    m and v are updated first; theta then moves by
    -lr * m_hat / (sqrt(v_hat) + eps) with m_hat = m / (1 - beta1^t) and
    v_hat = v / (1 - beta2^t).
    """
    m *= hyper.beta1
    m += (1.0 - hyper.beta1) * grad
    v *= hyper.beta2
    v += (1.0 - hyper.beta2) * np.square(grad)
    m_hat = m / (1.0 - hyper.beta1**t)
    v_hat = v / (1.0 - hyper.beta2**t)
    theta -= hyper.learning_rate * m_hat / (np.sqrt(v_hat) + hyper.epsilon)


def adam_step(params: Parameters, grads: Parameters, state: AdamState, hyper: AdamHyper) -> None:
    """Advance the step counter and update every tensor in place.

    Gradients must be finite and shape-matched to the parameters; a
    violation raises ValueError naming the offending tensor.
    """
    state.t += 1
    grad_map = dict(grads.named_tensors())
    for name, theta in params.named_tensors():
        if name not in grad_map:
            raise ValueError(f"gradient missing for tensor {name!r}")
        g = grad_map[name]
        if g.shape != theta.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {name!r} shape {theta.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient in tensor {name!r}")
        adam_update_array(theta, g, state.m[name], state.v[name], state.t, hyper)
