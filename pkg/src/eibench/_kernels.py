"""Hot numeric kernels: per-row invariance measures and Huber line fits.

Every kernel has two implementations with identical semantics:

* a pure-numpy version (suffix ``_np``), always available, and
* a numba ``@njit`` version compiled at import time.

The dispatched names (``row_top``, ``ei_rows``, ...) point at the numba
builds when numba imports cleanly and the ``EIBENCH_DISABLE_NUMBA``
environment variable is unset/empty/"0"; otherwise they point at the
numpy fallbacks. ``USING_NUMBA`` records which path is live so callers
and benchmarks can tell them apart.

Kernels return per-row vectors rather than scalars: aggregation happens
in the callers with the same numpy reduction on either path, so switching
paths never changes how the final mean is accumulated.

All kernels expect C-contiguous float64 inputs; callers cast once.
"""

import math
import os

import numpy as np

_LOG2 = math.log(2.0)


def _numba_disabled() -> bool:
    return os.environ.get("EIBENCH_DISABLE_NUMBA", "") not in ("", "0")


# ---------------------------------------------------------------------------
# numpy implementations (reference semantics, always importable)
# ---------------------------------------------------------------------------

def row_top_np(probs):
    """Per-row argmax and max. Ties resolve to the lowest class index."""
    idx = probs.argmax(axis=1).astype(np.int64)
    val = probs[np.arange(probs.shape[0]), idx].astype(np.float64)
    return idx, val


def ei_rows_np(orig, trans, arithmetic=False):
    """Per-row effective invariance of two aligned softmax matrices."""
    iy, py = row_top_np(orig)
    iyt, pyt = row_top_np(trans)
    same = iy == iyt
    if arithmetic:
        score = 0.5 * (py + pyt)
    else:
        score = np.sqrt(py * pyt)
    return np.where(same, score, 0.0)


def js_rows_np(orig, trans):
    """Per-row Jensen-Shannon divergence, log base 2, 0*log(0) := 0."""
    m = 0.5 * (orig + trans)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(orig > 0.0, orig * (np.log(orig) - np.log(m)), 0.0)
        t2 = np.where(trans > 0.0, trans * (np.log(trans) - np.log(m)), 0.0)
    return (0.5 / _LOG2) * (t1.sum(axis=1) + t2.sum(axis=1))


def l2_rows_np(orig, trans):
    """Per-row Euclidean distance between the two softmax matrices."""
    d = orig - trans
    return np.sqrt((d * d).sum(axis=1))


def consistency_rows_np(orig, trans):
    """Per-row indicator that the predicted class is unchanged."""
    iy, _ = row_top_np(orig)
    iyt, _ = row_top_np(trans)
    return (iy == iyt).astype(np.float64)


def conf_diff_rows_np(orig, trans):
    """Per-row consistency-with-confidence-difference score."""
    iy, py = row_top_np(orig)
    iyt, pyt = row_top_np(trans)
    return np.where(iy == iyt, 1.0 - np.abs(pyt - py), 0.0)


def huber_line_fit_np(x, y, tuning=1.345, tol=1e-8, max_iter=100):
    """IRLS Huber line fit; returns (slope, intercept, iterations, converged).

    The threshold is ``tuning * scale`` with scale = MAD(residuals)/0.6745
    re-estimated each iteration. The MAD gets a tiny floor relative to the
    spread of y so exact fits keep unit weights instead of dividing by zero.
    """
    n = x.size
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx <= 0.0:
        return math.nan, math.nan, 0, False
    slope = float(dx @ (y - ym)) / sxx
    intercept = ym - slope * xm

    yscale = float(np.abs(y - ym).max())
    floor = 1e-12 * (1.0 + yscale)

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        r = y - intercept - slope * x
        med = np.median(r)
        mad = np.median(np.abs(r - med))
        scale = max(mad / 0.6745, floor)
        delta = tuning * scale
        absr = np.abs(r)
        w = np.where(absr <= delta, 1.0, delta / np.maximum(absr, floor))

        sw = w.sum()
        xw = float(w @ x) / sw
        yw = float(w @ y) / sw
        dxw = x - xw
        sxxw = float(w @ (dxw * dxw))
        if sxxw <= 0.0:
            return slope, intercept, it, False
        new_slope = float(w @ (dxw * (y - yw))) / sxxw
        new_intercept = yw - new_slope * xw

        change = max(abs(new_slope - slope), abs(new_intercept - intercept))
        slope, intercept = new_slope, new_intercept
        if change < tol:
            converged = True
            break
    return slope, intercept, it, converged


def bootstrap_lines_np(x, y, idx, tuning=1.345, tol=1e-8, max_iter=100):
    """Huber line fits over resample index rows; returns (slopes, intercepts)."""
    nb = idx.shape[0]
    slopes = np.empty(nb)
    intercepts = np.empty(nb)
    for b in range(nb):
        xb = x[idx[b]]
        yb = y[idx[b]]
        s, c, _, _ = huber_line_fit_np(xb, yb, tuning, tol, max_iter)
        slopes[b] = s
        intercepts[b] = c
    return slopes, intercepts


# ---------------------------------------------------------------------------
# numba builds
# ---------------------------------------------------------------------------

USING_NUMBA = False

if not _numba_disabled():
    try:
        from numba import njit
    except ImportError:
        njit = None
    if njit is not None:
        USING_NUMBA = True

        @njit(cache=True)
        def _row_top(probs):
            n, k = probs.shape
            idx = np.empty(n, dtype=np.int64)
            val = np.empty(n, dtype=np.float64)
            for i in range(n):
                best = probs[i, 0]
                bj = 0
                for j in range(1, k):
                    if probs[i, j] > best:
                        best = probs[i, j]
                        bj = j
                idx[i] = bj
                val[i] = best
            return idx, val

        @njit(cache=True)
        def _ei_rows(orig, trans, arithmetic):
            n, k = orig.shape
            out = np.zeros(n, dtype=np.float64)
            for i in range(n):
                po = orig[i, 0]
                jo = 0
                pt = trans[i, 0]
                jt = 0
                for j in range(1, k):
                    if orig[i, j] > po:
                        po = orig[i, j]
                        jo = j
                    if trans[i, j] > pt:
                        pt = trans[i, j]
                        jt = j
                if jo == jt:
                    if arithmetic:
                        out[i] = 0.5 * (po + pt)
                    else:
                        out[i] = math.sqrt(po * pt)
            return out

        @njit(cache=True)
        def _js_rows(orig, trans):
            n, k = orig.shape
            out = np.empty(n, dtype=np.float64)
            for i in range(n):
                acc = 0.0
                for j in range(k):
                    p = orig[i, j]
                    q = trans[i, j]
                    m = 0.5 * (p + q)
                    if p > 0.0:
                        acc += p * (math.log(p) - math.log(m))
                    if q > 0.0:
                        acc += q * (math.log(q) - math.log(m))
                out[i] = 0.5 * acc / _LOG2
            return out

        @njit(cache=True)
        def _l2_rows(orig, trans):
            n, k = orig.shape
            out = np.empty(n, dtype=np.float64)
            for i in range(n):
                acc = 0.0
                for j in range(k):
                    d = orig[i, j] - trans[i, j]
                    acc += d * d
                out[i] = math.sqrt(acc)
            return out

        @njit(cache=True)
        def _consistency_rows(orig, trans):
            idx_o, _ = _row_top(orig)
            idx_t, _ = _row_top(trans)
            n = idx_o.shape[0]
            out = np.zeros(n, dtype=np.float64)
            for i in range(n):
                if idx_o[i] == idx_t[i]:
                    out[i] = 1.0
            return out

        @njit(cache=True)
        def _conf_diff_rows(orig, trans):
            idx_o, val_o = _row_top(orig)
            idx_t, val_t = _row_top(trans)
            n = idx_o.shape[0]
            out = np.zeros(n, dtype=np.float64)
            for i in range(n):
                if idx_o[i] == idx_t[i]:
                    out[i] = 1.0 - abs(val_t[i] - val_o[i])
            return out

        @njit(cache=True)
        def _huber_line_fit(x, y, tuning, tol, max_iter):
            n = x.size
            xm = x.mean()
            ym = y.mean()
            sxx = 0.0
            sxy = 0.0
            for i in range(n):
                dx = x[i] - xm
                sxx += dx * dx
                sxy += dx * (y[i] - ym)
            if sxx <= 0.0:
                return np.nan, np.nan, 0, False
            slope = sxy / sxx
            intercept = ym - slope * xm

            yscale = 0.0
            for i in range(n):
                a = abs(y[i] - ym)
                if a > yscale:
                    yscale = a
            floor = 1e-12 * (1.0 + yscale)

            r = np.empty(n, dtype=np.float64)
            w = np.empty(n, dtype=np.float64)
            converged = False
            it = 0
            for it in range(1, max_iter + 1):
                for i in range(n):
                    r[i] = y[i] - intercept - slope * x[i]
                med = np.median(r)
                mad = np.median(np.abs(r - med))
                scale = mad / 0.6745
                if scale < floor:
                    scale = floor
                delta = tuning * scale
                for i in range(n):
                    a = abs(r[i])
                    if a <= delta:
                        w[i] = 1.0
                    else:
                        w[i] = delta / (a if a > floor else floor)

                sw = 0.0
                xw = 0.0
                yw = 0.0
                for i in range(n):
                    sw += w[i]
                    xw += w[i] * x[i]
                    yw += w[i] * y[i]
                xw /= sw
                yw /= sw
                sxxw = 0.0
                sxyw = 0.0
                for i in range(n):
                    dx = x[i] - xw
                    sxxw += w[i] * dx * dx
                    sxyw += w[i] * dx * (y[i] - yw)
                if sxxw <= 0.0:
                    return slope, intercept, it, False
                new_slope = sxyw / sxxw
                new_intercept = yw - new_slope * xw

                change = abs(new_slope - slope)
                ci = abs(new_intercept - intercept)
                if ci > change:
                    change = ci
                slope = new_slope
                intercept = new_intercept
                if change < tol:
                    converged = True
                    break
            return slope, intercept, it, converged

        @njit(cache=True)
        def _bootstrap_lines(x, y, idx, tuning, tol, max_iter):
            nb = idx.shape[0]
            n = idx.shape[1]
            slopes = np.empty(nb, dtype=np.float64)
            intercepts = np.empty(nb, dtype=np.float64)
            xb = np.empty(n, dtype=np.float64)
            yb = np.empty(n, dtype=np.float64)
            for b in range(nb):
                for i in range(n):
                    xb[i] = x[idx[b, i]]
                    yb[i] = y[idx[b, i]]
                s, c, _, _ = _huber_line_fit(xb, yb, tuning, tol, max_iter)
                slopes[b] = s
                intercepts[b] = c
            return slopes, intercepts


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USING_NUMBA:
    row_top = _row_top

    def ei_rows(orig, trans, arithmetic=False):
        return _ei_rows(orig, trans, arithmetic)

    js_rows = _js_rows
    l2_rows = _l2_rows
    consistency_rows = _consistency_rows
    conf_diff_rows = _conf_diff_rows

    def huber_line_fit(x, y, tuning=1.345, tol=1e-8, max_iter=100):
        return _huber_line_fit(x, y, tuning, tol, max_iter)

    def bootstrap_lines(x, y, idx, tuning=1.345, tol=1e-8, max_iter=100):
        return _bootstrap_lines(x, y, idx, tuning, tol, max_iter)
else:
    row_top = row_top_np
    ei_rows = ei_rows_np
    js_rows = js_rows_np
    l2_rows = l2_rows_np
    consistency_rows = consistency_rows_np
    conf_diff_rows = conf_diff_rows_np
    huber_line_fit = huber_line_fit_np
    bootstrap_lines = bootstrap_lines_np
