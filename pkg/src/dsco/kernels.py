"""Hot numeric kernels.

Every kernel exists in two flavours: a pure-numpy implementation and a
numba ``@njit`` compilation of the same source.  Set ``DSCO_DISABLE_NUMBA=1``
to force the numpy path (useful for debugging and for the kernel benchmark).
"""

import os

import numpy as np

NUMBA_ENABLED = os.environ.get("DSCO_DISABLE_NUMBA", "0") != "1"

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False


def _softplus_neg_sum(z):
    """sum_l log(1 + exp(-z_l)), overflow-safe."""
    total = 0.0
    for i in range(z.shape[0]):
        t = -z[i]
        if t > 0.0:
            total += t + np.log1p(np.exp(-t))
        else:
            total += np.log1p(np.exp(t))
    return total


def _sigmoid_neg(z, out):
    """out_l = sigma(-z_l) = 1 / (1 + exp(z_l)), overflow-safe."""
    for i in range(z.shape[0]):
        v = z[i]
        if v >= 0.0:
            e = np.exp(-v)
            out[i] = e / (1.0 + e)
        else:
            out[i] = 1.0 / (1.0 + np.exp(v))
    return out


def _sigmoid_prod(z, out):
    """out_l = sigma(z_l) * sigma(-z_l), the logistic Hessian weight."""
    for i in range(z.shape[0]):
        e = np.exp(-abs(z[i]))
        s = e / (1.0 + e)
        out[i] = s * (1.0 - s)
    return out


def _sumsq(r):
    total = 0.0
    for i in range(r.shape[0]):
        total += r[i] * r[i]
    return total


def _l1_box_shrink_sum(a, m, theta):
    """sum_k min(m, max(0, a_k - theta)) for the l1-ball/box projection."""
    total = 0.0
    for i in range(a.shape[0]):
        v = a[i] - theta
        if v < 0.0:
            v = 0.0
        elif v > m:
            v = m
        total += v
    return total


# numpy fallbacks (vectorized; the loop form above is what numba compiles)

def _softplus_neg_sum_np(z):
    return float(np.sum(np.maximum(-z, 0.0) + np.log1p(np.exp(-np.abs(z)))))


def _sigmoid_neg_np(z, out):
    t = -z
    np.copyto(out, np.exp(np.minimum(t, 0.0)) / (1.0 + np.exp(-np.abs(t))))
    return out


def _sigmoid_prod_np(z, out):
    e = np.exp(-np.abs(z))
    s = e / (1.0 + e)
    np.copyto(out, s * (1.0 - s))
    return out


def _sumsq_np(r):
    return float(np.dot(r, r))


def _l1_box_shrink_sum_np(a, m, theta):
    return float(np.sum(np.clip(a - theta, 0.0, m)))


if NUMBA_ENABLED:
    softplus_neg_sum = njit(cache=True)(_softplus_neg_sum)
    sigmoid_neg = njit(cache=True)(_sigmoid_neg)
    sigmoid_prod = njit(cache=True)(_sigmoid_prod)
    sumsq = njit(cache=True)(_sumsq)
    l1_box_shrink_sum = njit(cache=True)(_l1_box_shrink_sum)
else:
    softplus_neg_sum = _softplus_neg_sum_np
    sigmoid_neg = _sigmoid_neg_np
    sigmoid_prod = _sigmoid_prod_np
    sumsq = _sumsq_np
    l1_box_shrink_sum = _l1_box_shrink_sum_np


def project_l1_box(v, radius, box):
    """Euclidean projection of v onto {||y||_1 <= radius, ||y||_inf <= box}.

    Separable after reduction to magnitudes: y_k = sign(v_k) * min(box,
    max(0, |v_k| - theta)) with theta >= 0 found by bisection so that the
    l1 budget holds.
    """
    a = np.abs(v)
    clipped = np.minimum(a, box)
    if clipped.sum() <= radius + 1e-15:
        return np.sign(v) * clipped
    if radius <= 0.0:
        return np.zeros_like(v)
    lo, hi = 0.0, float(a.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if l1_box_shrink_sum(a, box, mid) > radius:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    theta = 0.5 * (lo + hi)
    return np.sign(v) * np.clip(a - theta, 0.0, box)
