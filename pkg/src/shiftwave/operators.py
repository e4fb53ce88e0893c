"""Discrete spatial operators on uniform 1-D grids.

All edge closures extend the field beyond the grid: by its edge value
(``"constant"``) or by reflection (``"mirror"``, local operator only).
"""

from __future__ import annotations

import numpy as np


def convolve(u: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Discrete ``J * u`` with the field extended by its edge values."""
    half = (weights.size - 1) // 2
    padded = np.concatenate((np.full(half, u[0]), u, np.full(half, u[-1])))
    return np.convolve(padded, weights, mode="valid")


def nonlocal_op(u: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return convolve(u, weights) - u


def laplacian(u: np.ndarray, h: float, edge: str = "constant") -> np.ndarray:
    out = np.empty_like(u)
    out[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
    if edge == "mirror":
        out[0] = 2.0 * (u[1] - u[0])
        out[-1] = 2.0 * (u[-2] - u[-1])
    else:
        out[0] = u[1] - u[0]
        out[-1] = u[-2] - u[-1]
    return out / (h * h)


def backward_diff(u: np.ndarray, h: float) -> np.ndarray:
    """Upwind derivative for transport toward +z; zero at the left edge."""
    out = np.empty_like(u)
    out[0] = 0.0
    out[1:] = (u[1:] - u[:-1]) / h
    return out


def dispersal(u: np.ndarray, d: float, weights: np.ndarray | None, h: float, edge: str = "constant") -> np.ndarray:
    """``d*N[u]`` for a kernel weight vector, or ``d*u''`` when ``weights`` is None."""
    if weights is None:
        return d * laplacian(u, h, edge)
    return d * nonlocal_op(u, weights)


def weights_mgf(weights: np.ndarray, h: float, lam):
    half = (weights.size - 1) // 2
    offsets = h * np.arange(-half, half + 1)
    lam = np.asarray(lam, dtype=float)
    return np.exp(np.multiply.outer(lam, offsets)) @ weights
