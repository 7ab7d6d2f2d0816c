"""Generalized trigonometric kernels s_delta and c_delta.

s_delta(t) is sinh(t sqrt(delta))/sqrt(delta) for delta > 0, sin(t sqrt(-delta))/sqrt(-delta)
for delta < 0 and t for delta = 0. c_delta is its derivative. Both accept scalars or
numpy arrays and broadcast like numpy ufuncs.
"""
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

# Below this |delta t^2| the truncated Taylor series is exact to machine precision
SERIES_CUTOFF = 1e-4


def _unwrap(value: np.ndarray, *inputs) -> ArrayLike:
    if all(np.ndim(x) == 0 for x in inputs):
        return float(value)
    return value


def s_delta(delta: ArrayLike, t: ArrayLike) -> ArrayLike:
    """Generalized sine, continuous across delta = 0"""
    d, tt = np.broadcast_arrays(np.asarray(delta, dtype=float), np.asarray(t, dtype=float))
    x = d * tt * tt
    out = np.empty_like(x)

    small = np.abs(x) < SERIES_CUTOFF
    pos = (~small) & (d > 0)
    neg = (~small) & (d < 0)

    xs = x[small]
    out[small] = tt[small] * (1.0 + xs / 6.0 * (1.0 + xs / 20.0 * (1.0 + xs / 42.0 * (1.0 + xs / 72.0))))
    if pos.any():
        k = np.sqrt(d[pos])
        out[pos] = np.sinh(k * tt[pos]) / k
    if neg.any():
        k = np.sqrt(-d[neg])
        out[neg] = np.sin(k * tt[neg]) / k

    return _unwrap(out, delta, t)


def c_delta(delta: ArrayLike, t: ArrayLike) -> ArrayLike:
    """Generalized cosine, continuous across delta = 0"""
    d, tt = np.broadcast_arrays(np.asarray(delta, dtype=float), np.asarray(t, dtype=float))
    x = d * tt * tt
    out = np.empty_like(x)

    small = np.abs(x) < SERIES_CUTOFF
    pos = (~small) & (d > 0)
    neg = (~small) & (d < 0)

    xs = x[small]
    out[small] = 1.0 + xs / 2.0 * (1.0 + xs / 12.0 * (1.0 + xs / 30.0 * (1.0 + xs / 56.0)))
    if pos.any():
        out[pos] = np.cosh(np.sqrt(d[pos]) * tt[pos])
    if neg.any():
        out[neg] = np.cos(np.sqrt(-d[neg]) * tt[neg])

    return _unwrap(out, delta, t)


def s_delta_prime(delta: ArrayLike, t: ArrayLike) -> ArrayLike:
    return c_delta(delta, t)


def c_delta_prime(delta: ArrayLike, t: ArrayLike) -> ArrayLike:
    return np.multiply(delta, s_delta(delta, t))


def cosine_quotient(delta: ArrayLike, t: ArrayLike) -> ArrayLike:
    """(c_delta(t) - 1)/delta, with limit t^2/2 at delta = 0.

    Uses c - 1 = 2 delta s_delta(t/2)^2, which has no cancellation near delta = 0.
    """
    half = s_delta(delta, np.multiply(t, 0.5))
    return np.multiply(2.0, np.square(half)) if np.ndim(half) else 2.0 * half * half
