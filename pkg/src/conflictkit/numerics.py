"""Numerical utilities: Daubechies wavelet denoising and cumulative quadrature.

The wavelet transform is implemented here directly (orthogonal filter bank on
a symmetrically extended, periodized signal) so the denoiser has no external
dependency and full control over boundary handling.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb, log, sqrt

import numpy as np


@lru_cache(maxsize=None)
def daubechies_filter(vanishing_moments: int) -> np.ndarray:
    """Orthonormal Daubechies scaling filter with the given vanishing moments.

    Computed by spectral factorization: the half-band polynomial
    P(y) = sum_k C(N-1+k, k) y^k with y = (2 - z - 1/z)/4 is cleared to a
    polynomial in z, its roots inside the unit circle are combined with the
    (1+z)^N factor, and the result is normalized to sum sqrt(2).
    """
    n = vanishing_moments
    if n < 1:
        raise ValueError("need at least one vanishing moment")
    if n == 1:
        return np.array([1.0, 1.0]) / sqrt(2.0)

    y_in_z = np.array([-0.25, 0.5, -0.25])  # z*y, ascending powers of z
    qz = np.zeros(2 * n - 1)
    for k in range(n):
        term = np.zeros(n - k)
        term[n - 1 - k] = float(comb(n - 1 + k, k))  # z^(n-1-k)
        for _ in range(k):
            term = np.convolve(term, y_in_z)
        qz[: len(term)] += term

    roots = np.roots(qz[::-1])
    inside = roots[np.abs(roots) < 1.0]
    if len(inside) != n - 1:
        raise AssertionError("unexpected root split in Daubechies factorization")

    poly = np.array([1.0 + 0j])
    for r in inside:
        poly = np.convolve(poly, [1.0, -r])
    for _ in range(n):
        poly = np.convolve(poly, [1.0, 1.0])
    h = np.real(poly)
    h *= sqrt(2.0) / h.sum()
    if abs(np.dot(h, h) - 1.0) > 1e-8:
        raise AssertionError("Daubechies factorization lost orthonormality")
    return h


def _quadrature_mirror(h: np.ndarray) -> np.ndarray:
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


@lru_cache(maxsize=None)
def _analysis_pair(n: int, vanishing_moments: int):
    """Dense periodized analysis operators (low, high) for signal length n."""
    h = daubechies_filter(vanishing_moments)
    g = _quadrature_mirror(h)
    half = n // 2
    rows = np.repeat(np.arange(half), len(h))
    cols = ((2 * np.arange(half)[:, None] + np.arange(len(h))[None, :]) % n).ravel()
    lo = np.zeros((half, n))
    hi = np.zeros((half, n))
    np.add.at(lo, (rows, cols), np.tile(h, half))
    np.add.at(hi, (rows, cols), np.tile(g, half))
    return lo, hi


def wavedec(x: np.ndarray, level: int, vanishing_moments: int = 6):
    """Periodized orthogonal wavelet decomposition.

    len(x) must be divisible by 2**level. Returns (approx, [detail_1..detail_level])
    with detail_1 the finest scale.
    """
    x = np.asarray(x, dtype=float)
    if len(x) % (1 << level):
        raise ValueError(f"signal length {len(x)} not divisible by 2^{level}")
    details = []
    approx = x
    for _ in range(level):
        lo, hi = _analysis_pair(len(approx), vanishing_moments)
        details.append(hi @ approx)
        approx = lo @ approx
    return approx, details


def waverec(approx: np.ndarray, details, vanishing_moments: int = 6) -> np.ndarray:
    """Inverse of :func:`wavedec` (the operators are orthogonal, so synthesis
    is the transpose of analysis)."""
    x = np.asarray(approx, dtype=float)
    for d in reversed(list(details)):
        lo, hi = _analysis_pair(2 * len(x), vanishing_moments)
        x = lo.T @ x + hi.T @ np.asarray(d, dtype=float)
    return x


def _symmetric_pad(x: np.ndarray, left: int, right: int) -> np.ndarray:
    # even (symmetric) reflection: value-continuous at the fold and it does
    # not amplify the fold sample's noise the way odd reflection would;
    # numpy reflects at most len-1 samples per call
    out = x
    while left or right:
        pl = min(left, len(out) - 1)
        pr = min(right, len(out) - 1)
        out = np.pad(out, (pl, pr), mode="symmetric")
        left -= pl
        right -= pr
    return out


def wavelet_denoise(x: np.ndarray, sigma: float, level: int = 3,
                    vanishing_moments: int = 6) -> np.ndarray:
    """Soft-threshold wavelet denoising with the universal threshold.

    The signal is extended by symmetric reflection before the periodized
    transform so the boundaries see a mirrored extension, not wrap-around.
    The pad exceeds the coarsest-level filter support, keeping both fold and
    wrap artifacts outside the cropped output.
    """
    x = np.asarray(x, dtype=float)
    n0 = len(x)
    block = 1 << level
    taps = 2 * vanishing_moments
    left = max(block * (taps - 1), block)
    total = n0 + 2 * left
    total += (-total) % block
    right = total - n0 - left
    ext = _symmetric_pad(x, left, right)
    approx, details = wavedec(ext, level, vanishing_moments)
    tau = sigma * sqrt(2.0 * log(max(n0, 2)))
    details = [np.sign(d) * np.maximum(np.abs(d) - tau, 0.0) for d in details]
    rec = waverec(approx, details, vanishing_moments)
    return rec[left:left + n0]


def cumulative_integral(v: np.ndarray, dt: float) -> np.ndarray:
    """Cumulative integral of uniformly sampled v, exact for cubic signals.

    Each interval is integrated with the 4-point Newton-Cotes rule on the
    nearest stencil (the composite Simpson-family rule that stays exact
    through degree 3). Falls back to the trapezoid rule when fewer than
    4 samples are available.
    """
    v = np.asarray(v, dtype=float)
    n = len(v)
    if n == 0:
        return np.zeros(0)
    if n < 4:
        steps = 0.5 * (v[:-1] + v[1:]) * dt
        return np.concatenate([[0.0], np.cumsum(steps)])
    steps = np.empty(n - 1)
    c = dt / 24.0
    steps[0] = c * (9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3])
    steps[-1] = c * (9.0 * v[-1] + 19.0 * v[-2] - 5.0 * v[-3] + v[-4])
    steps[1:-1] = c * (-v[:-3] + 13.0 * v[1:-2] + 13.0 * v[2:-1] - v[3:])
    return np.concatenate([[0.0], np.cumsum(steps)])
