"""NumPy fallback for the compiled flow-binning kernel.

Semantics match freqforest._kernels.directional_stats; the angle and
magnitude arithmetic uses the same floating-point operations so both
backends assign every vector to the same bin.
"""

import numpy as np


def directional_stats(u, v, region, n_regions):
    """Per-region pixel counts plus per-direction-bin vector counts and
    magnitude sums. Region ids < 0 are outside; zero vectors count as
    pixels but are not binned."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    region = np.asarray(region)
    if v.shape != u.shape or region.shape != u.shape:
        raise ValueError("u, v and region grids must have identical shapes")
    if n_regions <= 0:
        raise ValueError("n_regions must be positive")

    rid = region.ravel()
    inside = rid >= 0
    rid = rid[inside].astype(np.int64)
    if rid.size and rid.max() >= n_regions:
        raise ValueError("region id out of range")
    uu = u.ravel()[inside]
    vv = v.ravel()[inside]

    pixels = np.bincount(rid, minlength=n_regions)

    nonzero = (uu != 0.0) | (vv != 0.0)
    rid = rid[nonzero]
    uu = uu[nonzero]
    vv = vv[nonzero]

    deg = np.degrees(np.arctan2(-vv, uu)) + 30.0
    deg = np.where(deg < 0.0, deg + 360.0, deg)
    bins = (deg / 60.0).astype(np.int64)
    np.minimum(bins, 5, out=bins)

    flat = rid * 6 + bins
    counts = np.bincount(flat, minlength=n_regions * 6)
    # bincount returns int64 for empty input even with float weights
    mags = np.bincount(flat, weights=np.sqrt(uu * uu + vv * vv), minlength=n_regions * 6)
    return (
        pixels.astype(np.int64),
        counts.reshape(n_regions, 6).astype(np.int64),
        mags.reshape(n_regions, 6).astype(np.float64),
    )
