"""Hot sampling kernels with a numba fast path and a pure-numpy fallback.

The Monte Carlo audits spend nearly all their time drawing types and
reducing them (score sums, histogram counts, per-option welfare sums).
Each kernel exists twice: an ``@njit`` scalar-loop version and a
vectorized numpy version that performs the *same* arithmetic in the same
order, so both backends produce bit-identical draw values from the same
counter-based stream (see :mod:`mechaudit.streams`).  The numpy fallback
accumulates sums column-by-column in ascending term order to match the
njit inner loop's rounding.

Backend selection: numba is used when importable unless the environment
variable ``MECHAUDIT_NO_NUMBA`` is set to a truthy value; tests and the
benchmark can also switch at runtime via :func:`set_backend`.

Distribution encodings shared by all kernels (``dist_code``):

* ``DIST_TABLE``     -- finite support; ``d1`` = cumulative probabilities,
  ``d2`` = the value mapped to each support point (any per-label function
  is folded into ``d2``).
* ``DIST_TRUNCNORM`` -- standard normal conditioned on ``[-a, a]``;
  ``d1 = [a, cdf(-a), cdf(a) - cdf(-a)]``.
* ``DIST_PWL``       -- piecewise-linear density; ``d1`` = knot xs,
  ``d2`` = knot ys, ``d3`` = CDF at the knots.

Transform encodings (``tf_code``, applied to continuous draws only):
``TF_IDENTITY``, ``TF_LINEAR`` (``t1 = [slope, intercept]``) and
``TF_PWL`` (``t1`` = xs, ``t2`` = ys, linear interpolation, clamped).
"""

from __future__ import annotations

import math
import os

import numpy as np

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / (1 << 53)

DIST_TABLE = 0
DIST_TRUNCNORM = 1
DIST_PWL = 2

TF_IDENTITY = 0
TF_LINEAR = 1
TF_PWL = 2

_EMPTY = np.empty(0, dtype=np.float64)

# Coefficients of Acklam's rational approximation to the standard normal
# quantile (relative error below 1.2e-9, verified against scipy in tests).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def normal_cdf(x: float) -> float:
    """Standard normal CDF (scalar; used for setup constants, not per draw)."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _try_numba():
    if os.environ.get("MECHAUDIT_NO_NUMBA", "").lower() in ("1", "true", "yes"):
        return None
    try:
        import numba
    except ImportError:
        return None
    return numba


_numba = _try_numba()
_active_numba = _numba is not None


def numba_available() -> bool:
    return _numba is not None


def backend() -> str:
    return "numba" if _active_numba else "numpy"


def set_backend(name: str) -> None:
    """Force a backend ("numba" or "numpy"); numba must be importable."""
    global _active_numba
    if name == "numba":
        if _numba is None:
            raise RuntimeError("numba backend requested but numba is unavailable")
        _active_numba = True
    elif name == "numpy":
        _active_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------

def _words_np(key: int, start: int, count: int) -> np.ndarray:
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(key) + idx * _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _uniforms_np(key, start, count):
    return ((_words_np(key, start, count) >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def _uniforms_at_np(key: int, counters: np.ndarray) -> np.ndarray:
    idx = counters.astype(np.uint64) + np.uint64(1)
    z = np.uint64(key) + idx * _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def _norm_ppf_np(u: np.ndarray) -> np.ndarray:
    """Vectorized Acklam inverse normal CDF; same Horner order as the njit path."""
    x = np.empty_like(u)
    lo = u < _P_LOW
    hi = u > 1.0 - _P_LOW
    mid = ~(lo | hi)

    if np.any(mid):
        q = u[mid] - 0.5
        r = q * q
        num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[mid] = q * num / den
    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(u[lo]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        x[lo] = num / den
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log(1.0 - u[hi]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        x[hi] = -(num / den)
    return x


def _categorical_np(u: np.ndarray, cum: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cum, u, side="right").astype(np.int64)
    return np.minimum(idx, len(cum) - 1)


def _pwl_ppf_np(u: np.ndarray, xs: np.ndarray, ys: np.ndarray, cdf: np.ndarray) -> np.ndarray:
    seg = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, len(xs) - 2)
    x0 = xs[seg]
    h = xs[seg + 1] - x0
    y0 = ys[seg]
    slope = (ys[seg + 1] - y0) / h
    rem = u - cdf[seg]
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = y0 * y0 + 2.0 * slope * rem
        quad = (-y0 + np.sqrt(np.maximum(disc, 0.0))) / slope
        lin = rem / y0
    t = np.where(slope == 0.0, lin, quad)
    return x0 + t


def _values_np(key, counters, dist_code, d1, d2, d3):
    u = _uniforms_at_np(key, counters)
    if dist_code == DIST_TABLE:
        return d2[_categorical_np(u, d1)]
    if dist_code == DIST_TRUNCNORM:
        a = d1[0]
        return np.clip(_norm_ppf_np(d1[1] + u * d1[2]), -a, a)
    if dist_code == DIST_PWL:
        return _pwl_ppf_np(u, d1, d2, d3)
    raise ValueError(f"unknown dist code {dist_code}")


def _transform_np(v: np.ndarray, tf_code, t1, t2) -> np.ndarray:
    if tf_code == TF_IDENTITY:
        return v
    if tf_code == TF_LINEAR:
        return t1[0] * v + t1[1]
    if tf_code == TF_PWL:
        seg = np.clip(np.searchsorted(t1, v, side="right") - 1, 0, len(t1) - 2)
        x0 = t1[seg]
        y0 = t2[seg]
        slope = (t2[seg + 1] - y0) / (t1[seg + 1] - x0)
        return y0 + (np.clip(v, t1[0], t1[-1]) - x0) * slope
    raise ValueError(f"unknown transform code {tf_code}")


def _score_sums_np(key, base, n_samples, n_terms, dist_code, d1, d2, d3, tf_code, t1, t2):
    out = np.zeros(n_samples, dtype=np.float64)
    if n_terms == 0:
        return out
    sample_base = base + np.arange(n_samples, dtype=np.int64) * n_terms
    for j in range(n_terms):
        v = _values_np(key, sample_base + j, dist_code, d1, d2, d3)
        if dist_code != DIST_TABLE:
            v = _transform_np(v, tf_code, t1, t2)
        out += v
    return out


def _histogram_counts_np(key, base, n_samples, n_terms, cum):
    m = len(cum)
    out = np.zeros((n_samples, m), dtype=np.int64)
    if n_terms == 0:
        return out
    rows = np.arange(n_samples, dtype=np.int64)
    sample_base = base + rows * n_terms
    for j in range(n_terms):
        idx = _categorical_np(_uniforms_at_np(key, sample_base + j), cum)
        np.add.at(out, (rows, idx), 1)
    return out


def _option_sums_np(key, base, n_samples, counts, dist_code, d1, d2, d3):
    m = len(counts)
    total = int(np.sum(counts))
    out = np.zeros((n_samples, m), dtype=np.float64)
    if total == 0:
        return out
    sample_base = base + np.arange(n_samples, dtype=np.int64) * total
    offset = 0
    for ell in range(m):
        for j in range(int(counts[ell])):
            out[:, ell] += _values_np(key, sample_base + offset + j, dist_code, d1, d2, d3)
        offset += int(counts[ell])
    return out


# ---------------------------------------------------------------------------
# numba path (same arithmetic, scalar loops)
# ---------------------------------------------------------------------------

if _numba is not None:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _uniform_at_nb(key, counter):
        z = np.uint64(key) + (np.uint64(counter) + np.uint64(1)) * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
        return (np.float64(z >> np.uint64(11)) + 0.5) * _INV_2_53

    @njit(cache=True, nogil=True)
    def _norm_ppf_nb(u):
        if u < _P_LOW:
            q = math.sqrt(-2.0 * math.log(u))
            num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
            den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
            return num / den
        if u > 1.0 - _P_LOW:
            q = math.sqrt(-2.0 * math.log(1.0 - u))
            num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
            den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
            return -(num / den)
        q = u - 0.5
        r = q * q
        num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        return q * num / den

    @njit(cache=True, nogil=True)
    def _categorical_nb(u, cum):
        # first index whose cumulative weight strictly exceeds u
        idx = 0
        last = len(cum) - 1
        while idx < last and u >= cum[idx]:
            idx += 1
        return idx

    @njit(cache=True, nogil=True)
    def _pwl_ppf_nb(u, xs, ys, cdf):
        seg = 0
        last = len(xs) - 2
        while seg < last and u >= cdf[seg + 1]:
            seg += 1
        x0 = xs[seg]
        h = xs[seg + 1] - x0
        y0 = ys[seg]
        slope = (ys[seg + 1] - y0) / h
        rem = u - cdf[seg]
        if slope == 0.0:
            t = rem / y0
        else:
            disc = y0 * y0 + 2.0 * slope * rem
            if disc < 0.0:
                disc = 0.0
            t = (-y0 + math.sqrt(disc)) / slope
        return x0 + t

    @njit(cache=True, nogil=True)
    def _value_nb(key, counter, dist_code, d1, d2, d3):
        u = _uniform_at_nb(key, counter)
        if dist_code == DIST_TABLE:
            return d2[_categorical_nb(u, d1)]
        if dist_code == DIST_TRUNCNORM:
            a = d1[0]
            x = _norm_ppf_nb(d1[1] + u * d1[2])
            if x < -a:
                x = -a
            elif x > a:
                x = a
            return x
        return _pwl_ppf_nb(u, d1, d2, d3)

    @njit(cache=True, nogil=True)
    def _transform_nb(v, tf_code, t1, t2):
        if tf_code == TF_IDENTITY:
            return v
        if tf_code == TF_LINEAR:
            return t1[0] * v + t1[1]
        x = v
        if x < t1[0]:
            x = t1[0]
        elif x > t1[-1]:
            x = t1[-1]
        seg = 0
        last = len(t1) - 2
        while seg < last and v >= t1[seg + 1]:
            seg += 1
        x0 = t1[seg]
        y0 = t2[seg]
        slope = (t2[seg + 1] - y0) / (t1[seg + 1] - x0)
        return y0 + (x - x0) * slope

    @njit(cache=True, nogil=True)
    def _score_sums_nb(key, base, n_samples, n_terms, dist_code, d1, d2, d3, tf_code, t1, t2):
        out = np.zeros(n_samples, dtype=np.float64)
        for s in range(n_samples):
            c = base + s * n_terms
            acc = 0.0
            for j in range(n_terms):
                v = _value_nb(key, c + j, dist_code, d1, d2, d3)
                if dist_code != DIST_TABLE:
                    v = _transform_nb(v, tf_code, t1, t2)
                acc += v
            out[s] = acc
        return out

    @njit(cache=True, nogil=True)
    def _histogram_counts_nb(key, base, n_samples, n_terms, cum):
        m = len(cum)
        out = np.zeros((n_samples, m), dtype=np.int64)
        for s in range(n_samples):
            c = base + s * n_terms
            for j in range(n_terms):
                u = _uniform_at_nb(key, c + j)
                out[s, _categorical_nb(u, cum)] += 1
        return out

    @njit(cache=True, nogil=True)
    def _option_sums_nb(key, base, n_samples, counts, dist_code, d1, d2, d3):
        m = len(counts)
        total = 0
        for ell in range(m):
            total += counts[ell]
        out = np.zeros((n_samples, m), dtype=np.float64)
        for s in range(n_samples):
            c = base + s * total
            offset = 0
            for ell in range(m):
                acc = 0.0
                for j in range(counts[ell]):
                    acc += _value_nb(key, c + offset + j, dist_code, d1, d2, d3)
                out[s, ell] = acc
                offset += counts[ell]
        return out


# ---------------------------------------------------------------------------
# public dispatchers
# ---------------------------------------------------------------------------

def _as_f64(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64))


def norm_ppf(u) -> np.ndarray:
    """Inverse standard normal CDF (Acklam approximation)."""
    return _norm_ppf_np(_as_f64(np.atleast_1d(u)))


def uniform_block(key: int, start: int, count: int) -> np.ndarray:
    return _uniforms_np(key, start, count)


def categorical_block(key: int, start: int, count: int, cum) -> np.ndarray:
    """Support-point indices for `count` categorical draws."""
    return _categorical_np(_uniforms_np(key, start, count), _as_f64(cum))


def value_block(key: int, start: int, count: int, dist) -> np.ndarray:
    """`count` scalar draws from an encoded distribution."""
    code, d1, d2, d3 = dist
    counters = start + np.arange(count, dtype=np.int64)
    return _values_np(key, counters, code, _as_f64(d1), _as_f64(d2), _as_f64(d3))


def score_sums(key: int, base: int, n_samples: int, n_terms: int, dist,
               transform=(TF_IDENTITY, _EMPTY, _EMPTY)) -> np.ndarray:
    """Per-sample sums of `n_terms` transformed draws; the two-alternative hot loop."""
    code, d1, d2, d3 = dist
    tf, t1, t2 = transform
    args = (np.uint64(key), int(base), int(n_samples), int(n_terms), int(code),
            _as_f64(d1), _as_f64(d2), _as_f64(d3), int(tf), _as_f64(t1), _as_f64(t2))
    if _active_numba:
        return _score_sums_nb(*args)
    return _score_sums_np(*args)


def histogram_counts(key: int, base: int, n_samples: int, n_terms: int, cum) -> np.ndarray:
    """(n_samples, m) block-count matrix of multinomial draws."""
    args = (np.uint64(key), int(base), int(n_samples), int(n_terms), _as_f64(cum))
    if _active_numba:
        return _histogram_counts_nb(*args)
    return _histogram_counts_np(*args)


def option_sums(key: int, base: int, n_samples: int, counts, dist) -> np.ndarray:
    """(n_samples, m) per-option sums of iid draws; the welfare-mechanism hot loop."""
    code, d1, d2, d3 = dist
    counts = np.ascontiguousarray(np.asarray(counts, dtype=np.int64))
    args = (np.uint64(key), int(base), int(n_samples), counts, int(code),
            _as_f64(d1), _as_f64(d2), _as_f64(d3))
    if _active_numba:
        return _option_sums_nb(*args)
    return _option_sums_np(*args)
