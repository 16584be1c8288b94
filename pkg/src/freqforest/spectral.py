"""Frequency-domain descriptors for scalar time series.

A per-frame feature series is turned into a fixed-length descriptor in
three steps: short series are tiled with whole copies of themselves
until they are long enough ("recycling"), the discrete Fourier power
spectrum is taken, and the first ``n`` components above DC are kept.
The DC term is dropped because it encodes the series mean rather than
any motion rhythm.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError

DEFAULT_COMPONENTS = 25
DEFAULT_SMOOTHING_WINDOW = 5


def _as_series(values, op: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{op}: expected a 1-D series, got shape {arr.shape}")
    if arr.size == 0:
        raise DataError(f"{op}: series is empty")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{op}: series contains non-finite values")
    return arr


def smooth(values, window: int = DEFAULT_SMOOTHING_WINDOW) -> np.ndarray:
    """Centered moving average with the window clamped at the ends.

    Index ``i`` averages indices ``max(0, i-r)..min(L-1, i+r)`` where
    ``r = (window - 1) // 2``, so the output has the input's length and
    a constant series is a fixed point (exactly, including in floating
    point: neighbors enter as differences against the center value).

    Args:
        values: non-empty 1-D series.
        window: odd positive window width in samples.
    """
    x = _as_series(values, "smooth")
    if not isinstance(window, (int, np.integer)) or isinstance(window, bool):
        raise ValueError("smooth: window must be an integer")
    if window <= 0 or window % 2 == 0:
        raise ValueError(f"smooth: window must be a positive odd integer, got {window}")
    r = (window - 1) // 2
    if r == 0:
        return x.copy()
    acc = np.zeros_like(x)
    cnt = np.ones_like(x)
    for off in range(1, r + 1):
        if off >= x.size:
            break
        acc[off:] += x[:-off] - x[off:]
        cnt[off:] += 1.0
        acc[:-off] += x[off:] - x[:-off]
        cnt[:-off] += 1.0
    return x + acc / cnt


def recycle(values, min_len: int) -> np.ndarray:
    """Tile a series with whole copies of itself until it reaches
    ``min_len`` samples; series already long enough pass through.

    The result length is ``L * ceil(min_len / L)``: only whole copies
    are appended, so the fundamental period of the series is preserved.
    """
    x = _as_series(values, "recycle")
    if not isinstance(min_len, (int, np.integer)) or isinstance(min_len, bool) or min_len < 1:
        raise ValueError(f"recycle: min_len must be a positive integer, got {min_len!r}")
    n = x.size
    if n >= min_len:
        return x.copy()
    reps = -(-min_len // n)
    return np.tile(x, reps)


def power_spectrum(values) -> np.ndarray:
    """Unnormalized discrete Fourier power spectrum.

    Returns ``P_k = |sum_t x_t exp(-2 pi i k t / L)|**2`` for
    ``k = 0..floor(L/2)``, i.e. ``floor(L/2) + 1`` nonnegative values.
    """
    x = _as_series(values, "power_spectrum")
    coef = np.fft.rfft(x)
    return coef.real**2 + coef.imag**2


def frequency_feature(values, n: int = DEFAULT_COMPONENTS) -> np.ndarray:
    """First ``n`` above-DC power-spectrum components of a series.

    The series is recycled to at least ``2 * n`` samples first, which
    guarantees the spectrum has ``n`` components past DC and makes
    magnitudes comparable across clips of different durations. Output
    length is exactly ``n`` for any input length >= 1.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValueError(f"frequency_feature: n must be a positive integer, got {n!r}")
    tiled = recycle(values, 2 * n)
    spec = power_spectrum(tiled)
    return spec[1 : n + 1].copy()
