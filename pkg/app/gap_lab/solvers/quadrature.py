from __future__ import annotations

from typing import Callable, Union

import numpy as np
from scipy.integrate import simpson

from app.gap_lab.core.errors import ShapeError

SampledFunction = tuple[np.ndarray, np.ndarray]
Weight = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, None]


def simpson_integral(values: np.ndarray, x: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    if values.shape != x.shape:
        raise ShapeError("values and grid differ in shape", values=values.shape, grid=x.shape)
    return float(simpson(values, x=x))


def _weight_values(weight: Weight, x: np.ndarray) -> np.ndarray:
    if weight is None:
        return np.ones_like(x)
    if callable(weight):
        return np.asarray(weight(x), dtype=float) * np.ones_like(x)
    w = np.asarray(weight, dtype=float)
    if w.shape != x.shape:
        raise ShapeError("weight samples do not match the grid", weight=w.shape, grid=x.shape)
    return w


def weighted_inner_product(f: SampledFunction, g: SampledFunction, weight: Weight = None) -> float:
    """Composite-Simpson value of the integral of weight * f * g over the shared grid."""
    xf, vf = (np.asarray(a, dtype=float) for a in f)
    xg, vg = (np.asarray(a, dtype=float) for a in g)
    if xf.shape != xg.shape or not np.array_equal(xf, xg):
        raise ShapeError("f and g are sampled on different grids", f_points=xf.size, g_points=xg.size)
    if vf.shape != xf.shape or vg.shape != xg.shape:
        raise ShapeError("samples do not match their grid", f=vf.shape, g=vg.shape, grid=xf.shape)
    return simpson_integral(_weight_values(weight, xf) * vf * vg, xf)
