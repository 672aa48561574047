"""Chebyshev polynomials and the Dolph-Chebyshev window."""

from __future__ import annotations

import numpy as np


def chebyshev_polynomial(n: int, x):
    """First-kind ``T_n(x)`` by the three-term recurrence (valid for any real x)."""
    if n < 0:
        raise ValueError(f"degree must be non-negative, got {n}")
    x = np.asarray(x, dtype=float)
    prev, cur = np.ones_like(x), x.copy()
    if n == 0:
        return prev if prev.ndim else float(prev)
    for _ in range(n - 1):
        prev, cur = cur, 2.0 * x * cur - prev
    return cur if cur.ndim else float(cur)


def dolph_chebyshev_window(length: int, sidelobe_db: float) -> np.ndarray:
    """Symmetric Dolph-Chebyshev window, peak value 1.

    The frequency response is ``T_{L-1}(beta cos(pi k / L))`` sampled at ``L`` points,
    with ``beta = cosh(acosh(10**(sidelobe_db/20)) / (L-1))``; an inverse DFT
    returns the taps.
    """
    if length < 1:
        raise ValueError("window length must be positive")
    if sidelobe_db <= 0:
        raise ValueError("sidelobe attenuation must be positive (dB)")
    if length == 1:
        return np.ones(1)
    order = length - 1
    beta = np.cosh(np.arccosh(10.0 ** (sidelobe_db / 20.0)) / order)
    k = np.arange(length)
    resp = chebyshev_polynomial(order, beta * np.cos(np.pi * k / length))
    if length % 2:
        w = np.real(np.fft.fft(resp))
        half = (length + 1) // 2
        w = np.concatenate((w[half - 1:0:-1], w[:half]))
    else:
        w = np.real(np.fft.fft(resp * np.exp(1j * np.pi * k / length)))
        half = length // 2 + 1
        w = np.concatenate((w[half - 1:0:-1], w[1:half]))
    return w / w.max()


def filter_weights(length: int = 32, sidelobe_db: float = 40.0) -> np.ndarray:
    """Dolph-Chebyshev taps normalized to unit sum (unit gain at phase 0)."""
    w = dolph_chebyshev_window(length, sidelobe_db)
    return w / w.sum()


def filter_response(weights, phase):
    """``sum_j w_j exp(i j phase) / sum_j w_j``."""
    w = np.asarray(weights, dtype=float)
    total = w.sum()
    if total == 0:
        raise ValueError("weights sum to zero")
    phase = np.asarray(phase, dtype=float)
    j = np.arange(len(w))
    return np.exp(1j * np.multiply.outer(phase, j)) @ w / total


def main_lobe_halfwidth(length: int, sidelobe_db: float) -> float:
    """Phase at which the window response first drops to the sidelobe level."""
    order = length - 1
    beta = np.cosh(np.arccosh(10.0 ** (sidelobe_db / 20.0)) / order)
    return float(2.0 * np.arccos(1.0 / beta))
