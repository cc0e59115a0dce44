"""Airy functions, their zeros and the half-line Airy eigenfunctions.

Ai and Bi are evaluated without special-function libraries. On |x| <= 12 a
table of anchor values every 0.5 is built once by re-centred Taylor series
of y'' = x y, seeded from the Maclaurin values at 0; any point in that range
is then one short Taylor step from its nearest anchor. Ai on x > 0 is
recessive going right, so its anchors are propagated leftwards from the
asymptotic value at x = 12. Outside |x| <= 12 the standard asymptotic
expansions are summed with a fixed number of terms.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache

import numpy as np
from scipy.optimize import bisect

from app.gap_lab.core.errors import RangeError, require_range
from app.gap_lab.models.schemas import AiryValue, AiryZeros, HalfLineEigenfunction
from app.gap_lab.solvers.quadrature import simpson_integral
from app.gap_lab.utils.math_utils import uniform_grid

logger = logging.getLogger(__name__)

X_MIN = -200.0
X_MAX = 100.0  # Bi overflows past ~104
SERIES_LIMIT = 12.0
ANCHOR_STEP = 0.5
TAYLOR_TERMS = 40
ASYMPTOTIC_TERMS = 30
ZERO_SCAN_STEP = 0.125
ZERO_XTOL = 1e-12
MAX_ZEROS = 50
DEFAULT_GRID_STEP = 1.0 / 256.0

AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))
BI0 = 1.0 / (3.0 ** (1.0 / 6.0) * math.gamma(2.0 / 3.0))
BIP0 = 3.0 ** (1.0 / 6.0) / math.gamma(1.0 / 3.0)


def _taylor_step(center: np.ndarray, h: np.ndarray, y0: np.ndarray, dy0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Advance solutions of y'' = x y from ``center`` by ``h`` (all arrays broadcast)."""
    c_prev2 = np.zeros_like(y0)  # c_{n-1} for the recurrence start
    c_prev = y0
    c_cur = dy0
    y = y0 + dy0 * h
    dy = dy0.copy()
    power = h.copy()  # h**n for n = 1
    for n in range(0, TAYLOR_TERMS):
        # c_{n+2} = (center * c_n + c_{n-1}) / ((n + 1)(n + 2))
        c_next = (center * c_prev + c_prev2) / ((n + 1.0) * (n + 2.0))
        dy = dy + (n + 2.0) * c_next * power
        power = power * h
        y = y + c_next * power
        c_prev2, c_prev, c_cur = c_prev, c_cur, c_next
    return y, dy


def _march(x_from: float, y0: float, dy0: float, steps: int, step: float) -> tuple[np.ndarray, np.ndarray]:
    ys = [y0]
    dys = [dy0]
    x = x_from
    for _ in range(steps):
        y, dy = _taylor_step(np.array([x]), np.array([step]), np.array([ys[-1]]), np.array([dys[-1]]))
        ys.append(float(y[0]))
        dys.append(float(dy[0]))
        x += step
    return np.array(ys), np.array(dys)


@lru_cache(maxsize=1)
def _series_coefficients() -> tuple[np.ndarray, np.ndarray]:
    u = np.empty(ASYMPTOTIC_TERMS)
    u[0] = 1.0
    for k in range(1, ASYMPTOTIC_TERMS):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
    v = u.copy()
    for k in range(1, ASYMPTOTIC_TERMS):
        v[k] = -(6 * k + 1) / (6 * k - 1) * u[k]
    return u, v


def _asymptotic_positive(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    u, v = _series_coefficients()
    zeta = (2.0 / 3.0) * x**1.5
    inv = 1.0 / zeta
    powers = inv[None, :] ** np.arange(ASYMPTOTIC_TERMS)[:, None]
    alt = (-1.0) ** np.arange(ASYMPTOTIC_TERMS)[:, None]
    su_alt = np.sum(alt * u[:, None] * powers, axis=0)
    sv_alt = np.sum(alt * v[:, None] * powers, axis=0)
    su = np.sum(u[:, None] * powers, axis=0)
    sv = np.sum(v[:, None] * powers, axis=0)
    q = x**0.25
    decay = np.exp(-zeta) / (2.0 * math.sqrt(math.pi))
    growth = np.exp(zeta) / math.sqrt(math.pi)
    return decay / q * su_alt, -q * decay * sv_alt, growth / q * su, q * growth * sv


def _asymptotic_negative(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    u, v = _series_coefficients()
    z = -x
    zeta = (2.0 / 3.0) * z**1.5
    inv = 1.0 / zeta
    half = ASYMPTOTIC_TERMS // 2
    k = np.arange(half)[:, None]
    sign = (-1.0) ** k
    even = inv[None, :] ** (2 * k)
    odd = inv[None, :] ** (2 * k + 1)
    ue = np.sum(sign * u[0 : 2 * half : 2, None] * even, axis=0)
    uo = np.sum(sign * u[1 : 2 * half : 2, None] * odd, axis=0)
    ve = np.sum(sign * v[0 : 2 * half : 2, None] * even, axis=0)
    vo = np.sum(sign * v[1 : 2 * half : 2, None] * odd, axis=0)
    chi = zeta - math.pi / 4.0
    c, s = np.cos(chi), np.sin(chi)
    q = z**0.25
    root_pi = math.sqrt(math.pi)
    ai = (c * ue + s * uo) / (root_pi * q)
    aip = q * (s * ve - c * vo) / root_pi
    bi = (-s * ue + c * uo) / (root_pi * q)
    bip = q * (c * ve + s * vo) / root_pi
    return ai, aip, bi, bip


@lru_cache(maxsize=1)
def _anchor_table() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    steps = int(round(SERIES_LIMIT / ANCHOR_STEP))
    nodes = ANCHOR_STEP * np.arange(-steps, steps + 1)

    ai_left, aip_left = _march(0.0, AI0, AIP0, steps, -ANCHOR_STEP)
    bi_left, bip_left = _march(0.0, BI0, BIP0, steps, -ANCHOR_STEP)
    bi_right, bip_right = _march(0.0, BI0, BIP0, steps, ANCHOR_STEP)

    ai12, aip12, _, _ = _asymptotic_positive(np.array([SERIES_LIMIT]))
    ai_down, aip_down = _march(SERIES_LIMIT, float(ai12[0]), float(aip12[0]), steps, -ANCHOR_STEP)
    ai_right, aip_right = ai_down[::-1], aip_down[::-1]

    ai = np.concatenate([ai_left[::-1], ai_right[1:]])
    aip = np.concatenate([aip_left[::-1], aip_right[1:]])
    bi = np.concatenate([bi_left[::-1], bi_right[1:]])
    bip = np.concatenate([bip_left[::-1], bip_right[1:]])
    # the exact Maclaurin values win at the origin
    ai[steps], aip[steps] = AI0, AIP0
    logger.debug("airy anchor table built: %d nodes on [-%g, %g]", nodes.size, SERIES_LIMIT, SERIES_LIMIT)
    return nodes, ai, aip, bi, bip


def _check_range(x: np.ndarray) -> None:
    if x.size and (not np.all(np.isfinite(x)) or x.min() < X_MIN or x.max() > X_MAX):
        bad = x[~np.isfinite(x) | (x < X_MIN) | (x > X_MAX)][0]
        raise RangeError(
            f"x={bad} outside admissible interval [{X_MIN}, {X_MAX}]", value=float(bad), low=X_MIN, high=X_MAX
        )


def evaluate_airy_grid(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised (Ai, Ai', Bi, Bi') on an array of real arguments."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_range(x)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    bi = np.empty_like(x)
    bip = np.empty_like(x)

    mid = np.abs(x) <= SERIES_LIMIT
    if mid.any():
        nodes, t_ai, t_aip, t_bi, t_bip = _anchor_table()
        xm = x[mid]
        idx = np.clip(np.rint((xm - nodes[0]) / ANCHOR_STEP).astype(int), 0, nodes.size - 1)
        center = nodes[idx]
        h = xm - center
        both_y = np.concatenate([t_ai[idx], t_bi[idx]])
        both_dy = np.concatenate([t_aip[idx], t_bip[idx]])
        y, dy = _taylor_step(np.tile(center, 2), np.tile(h, 2), both_y, both_dy)
        m = xm.size
        ai[mid], bi[mid] = y[:m], y[m:]
        aip[mid], bip[mid] = dy[:m], dy[m:]

    pos = x > SERIES_LIMIT
    if pos.any():
        ai[pos], aip[pos], bi[pos], bip[pos] = _asymptotic_positive(x[pos])

    neg = x < -SERIES_LIMIT
    if neg.any():
        ai[neg], aip[neg], bi[neg], bip[neg] = _asymptotic_negative(x[neg])

    return ai, aip, bi, bip


def eval_airy(x: float) -> AiryValue:
    ai, aip, bi, bip = evaluate_airy_grid(np.array([x], dtype=float))
    return AiryValue(x=float(x), ai=float(ai[0]), ai_prime=float(aip[0]), bi=float(bi[0]), bi_prime=float(bip[0]))


def airy_ai(x: np.ndarray | float) -> np.ndarray:
    return evaluate_airy_grid(x)[0]


def airy_table(x_min: float, x_max: float, step: float) -> dict[str, np.ndarray]:
    if step <= 0:
        raise RangeError("step must be > 0", step=step)
    if x_min >= x_max:
        raise RangeError("x_min must be < x_max", x_min=x_min, x_max=x_max)
    count = int(math.floor((x_max - x_min) / step + 1e-9)) + 1
    x = x_min + step * np.arange(count)
    ai, aip, bi, bip = evaluate_airy_grid(x)
    return {"x": x, "ai": ai, "ai_prime": aip, "bi": bi, "bi_prime": bip, "wronskian": ai * bip - aip * bi}


@lru_cache(maxsize=8)
def _zeros_cached(K: int) -> tuple[float, ...]:
    scan = np.arange(0.0, -(K + 2) * 3.0 - ZERO_SCAN_STEP, -ZERO_SCAN_STEP)
    values = airy_ai(scan)
    found: list[float] = []
    for i in range(scan.size - 1):
        if values[i] == 0.0:
            found.append(-float(scan[i]))
        elif values[i] * values[i + 1] < 0.0:
            root = bisect(lambda s: float(airy_ai(s)[0]), float(scan[i + 1]), float(scan[i]), xtol=ZERO_XTOL, maxiter=200)
            found.append(-root)
        if len(found) == K:
            break
    if len(found) < K:
        raise RangeError(f"only {len(found)} Airy zeros found on the scan interval", requested=K)
    return tuple(found)


def airy_zeros(K: int) -> AiryZeros:
    require_range("K", K, 1, MAX_ZEROS)
    return AiryZeros(a=_zeros_cached(int(K)))


def half_line_eigenfunction(k: int, X_max: float, step: float = DEFAULT_GRID_STEP) -> HalfLineEigenfunction:
    """v_k(x) = Ai(x - a_k) / |Ai'(-a_k)| sampled on [0, X_max].

    The norm uses d/dx(Ai'^2 - x Ai^2) = -Ai^2, so the integral of Ai^2 over
    (-a_k, inf) is Ai'(-a_k)^2.
    """
    require_range("k", k, 1, MAX_ZEROS)
    a_k = airy_zeros(k).a[-1]
    if X_max < a_k + 10.0:
        raise RangeError(f"X_max={X_max} must be >= a_k + 10 = {a_k + 10.0:.6f}", k=k, X_max=X_max)
    x = uniform_grid(0.0, X_max, step)
    norm_constant = abs(eval_airy(-a_k).ai_prime)
    values = np.zeros_like(x)
    # Ai < 1e-280 past X_MAX
    inside = x - a_k <= X_MAX
    values[inside] = airy_ai(x[inside] - a_k) / norm_constant
    return HalfLineEigenfunction(k=k, eigenvalue=a_k, x=x, values=values, norm_constant=norm_constant)


def airy_moment(k: int, X_max: float, step: float = DEFAULT_GRID_STEP) -> float:
    """Integral of x v_k^2 over [0, X_max]; tends to (2/3) a_k."""
    v = half_line_eigenfunction(k, X_max, step)
    return simpson_integral(v.x * v.values**2, v.x)


def model_integral(X_max: float, step: float = DEFAULT_GRID_STEP, *, second: int = 2, first: int = 1) -> float:
    """Integral of x (v_2^2 - v_1^2) over [0, X_max]; equals (2/3)(a_2 - a_1)."""
    a = airy_zeros(max(first, second)).a
    if X_max < a[second - 1] + 30.0:
        raise RangeError(f"X_max={X_max} must be >= a_{second} + 30", X_max=X_max)
    v2 = half_line_eigenfunction(second, X_max, step)
    v1 = half_line_eigenfunction(first, X_max, step)
    return simpson_integral(v2.x * (v2.values**2 - v1.values**2), v2.x)
