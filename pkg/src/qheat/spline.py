"""Natural cubic spline through a handful of nodes.

Each segment is stored in the two-moment form

    q(g) = M_a (g - w_b)^3 / (6 (w_a - w_b)) + M_b (g - w_a)^3 / (6 (w_b - w_a)) + C g + D

where ``M`` are the nodal second derivatives and ``C``, ``D`` are fixed by the two
endpoint values.  The moments solve the usual tridiagonal system with ``M = 0``
at both outer ends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class SplineSegment:
    w_a: float
    w_b: float
    m_a: float
    m_b: float
    C: float
    D: float

    def __call__(self, g):
        g = np.asarray(g, dtype=float)
        wa, wb = self.w_a, self.w_b
        return (self.m_a * (g - wb) ** 3 / (6.0 * (wa - wb))
                + self.m_b * (g - wa) ** 3 / (6.0 * (wb - wa))
                + self.C * g + self.D)

    def derivative(self, g, order: int = 1):
        g = np.asarray(g, dtype=float)
        wa, wb = self.w_a, self.w_b
        if order == 1:
            return (self.m_a * (g - wb) ** 2 / (2.0 * (wa - wb))
                    + self.m_b * (g - wa) ** 2 / (2.0 * (wb - wa)) + self.C)
        if order == 2:
            return self.m_a * (g - wb) / (wa - wb) + self.m_b * (g - wa) / (wb - wa)
        raise ValueError("only first and second derivatives are supported")


def natural_moments(nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Second derivatives at the nodes of the natural interpolating cubic."""
    n = nodes.size
    M = np.zeros(n)
    if n < 3:
        return M
    h = np.diff(nodes)
    slope = np.diff(values) / h
    rhs = 6.0 * np.diff(slope)
    ab = np.zeros((3, n - 2))
    ab[0, 1:] = h[1:-1]
    ab[1] = 2.0 * (h[:-1] + h[1:])
    ab[2, :-1] = h[1:-1]
    M[1:-1] = scipy.linalg.solve_banded((1, 1), ab, rhs)
    return M


@dataclass(frozen=True)
class CubicSpline:
    nodes: np.ndarray
    values: np.ndarray
    segments: tuple[SplineSegment, ...]

    def _locate(self, g):
        idx = np.searchsorted(self.nodes, g, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def __call__(self, g):
        g = np.asarray(g, dtype=float)
        flat = g.ravel()
        idx = self._locate(flat)
        out = np.empty_like(flat)
        for k in np.unique(idx):
            sel = idx == k
            out[sel] = self.segments[k](flat[sel])
        return out.reshape(g.shape) if g.ndim else float(out[0])

    def derivative(self, g, order: int = 1):
        g = np.atleast_1d(np.asarray(g, dtype=float))
        idx = self._locate(g)
        return np.array([self.segments[k].derivative(x, order) for k, x in zip(idx, g)])


def build_spline(nodes, values) -> CubicSpline:
    """Natural cubic spline; nodes may be given in any order."""
    w = np.asarray(nodes, dtype=float).ravel()
    y = np.asarray(values, dtype=float).ravel()
    if w.size != y.size:
        raise ValueError("nodes and values differ in length")
    if w.size < 2:
        raise ValueError("spline needs at least two nodes")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(y))):
        raise ValueError("nodes and values must be finite")
    order = np.argsort(w, kind="stable")
    w, y = w[order], y[order]
    if np.any(np.diff(w) <= 0):
        raise ValueError("duplicate spline nodes")
    M = natural_moments(w, y)
    segs = []
    for a in range(w.size - 1):
        wa, wb, h = w[a], w[a + 1], w[a + 1] - w[a]
        # subtract the cubic terms' endpoint values, then fit C g + D through the rest
        ra = y[a] - M[a] * h * h / 6.0
        rb = y[a + 1] - M[a + 1] * h * h / 6.0
        C = (rb - ra) / h
        D = ra - C * wa
        segs.append(SplineSegment(float(wa), float(wb), float(M[a]), float(M[a + 1]),
                                  float(C), float(D)))
    w.flags.writeable = False
    y.flags.writeable = False
    return CubicSpline(w, y, tuple(segs))
