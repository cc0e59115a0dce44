from __future__ import annotations

import math

import numpy as np


def uniform_grid(x_lo: float, x_hi: float, step: float) -> np.ndarray:
    """Uniform grid covering [x_lo, x_hi] with an even number of intervals no wider than ``step``."""
    intervals = max(2, math.ceil((x_hi - x_lo) / step))
    intervals += intervals % 2
    return np.linspace(x_lo, x_hi, intervals + 1)


def count_sign_changes(values: np.ndarray, rel_floor: float = 1e-9) -> int:
    values = np.asarray(values, dtype=float)
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale == 0.0:
        return 0
    signs = np.sign(values[np.abs(values) > rel_floor * scale])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def first_derivative(f: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite-difference derivative on a uniform grid (one-sided at the ends)."""
    f = np.asarray(f, dtype=float)
    if f.size < 6:
        raise ValueError("need at least 6 samples for fourth-order stencils")
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / 12.0
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / 12.0
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / 12.0
    d[-1] = (25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]) / 12.0
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / 12.0
    return d / h


def second_derivative(f: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite-difference second derivative on a uniform grid."""
    f = np.asarray(f, dtype=float)
    if f.size < 6:
        raise ValueError("need at least 6 samples for fourth-order stencils")
    d = np.empty_like(f)
    d[2:-2] = (-f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]) / 12.0
    edge0 = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0
    edge1 = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0
    d[0] = edge0 @ f[:6]
    d[1] = edge1 @ f[:6]
    d[-1] = edge0 @ f[::-1][:6]
    d[-2] = edge1 @ f[::-1][:6]
    return d / (h * h)


def grid_step(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    step = (x[-1] - x[0]) / (x.size - 1)
    if not np.allclose(np.diff(x), step, rtol=1e-9, atol=1e-12 * max(1.0, abs(x[-1]))):
        raise ValueError("grid is not uniform")
    return float(step)
