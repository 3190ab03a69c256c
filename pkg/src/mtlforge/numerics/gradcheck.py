from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward, no_grad


def numeric_grad(fn: Callable[..., Tensor], inputs: Sequence[Tensor], h: float = 1e-3) -> list[np.ndarray]:
    """Central-difference gradient of the scalar ``fn(*inputs)`` w.r.t. every input."""
    out = []
    with no_grad():
        for t in inputs:
            g = np.zeros_like(t.data)
            flat = t.data.reshape(-1)
            gflat = g.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = fn(*inputs).item()
                flat[i] = orig - h
                down = fn(*inputs).item()
                flat[i] = orig
                gflat[i] = (up - down) / (2 * h)
            out.append(g)
    return out


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|, floor), one number per tensor.

    Scaling by the largest entry rather than entry by entry keeps the measure
    meaningful where a true derivative crosses zero: there the O(h**2)
    truncation error of central differences dominates any per-entry ratio.
    """
    if not analytic.size:
        return 0.0
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), floor)
    return float(np.abs(analytic - numeric).max() / scale)


def check_gradients(fn: Callable[..., Tensor], inputs: Sequence[Tensor], h: float = 1e-3) -> float:
    """Largest relative error between backprop and central differences over all inputs."""
    for t in inputs:
        t.grad = None
    backward(fn(*inputs))
    numeric = numeric_grad(fn, inputs, h)
    return max(relative_error(t.grad if t.grad is not None else np.zeros_like(t.data), n)
               for t, n in zip(inputs, numeric))
