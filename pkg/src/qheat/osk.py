"""Hierarchical Taylor/quadrature integrator for the method-of-lines heat ODE.

The time interval is cut into ``n`` primary steps of length ``h``, each split into
``N_k = n**(k-1)`` secondary segments of length ``h_bar``.  On every segment a
degree-``r`` Taylor piece approximates ``u``; pieces are chained so each starts
where the previous one ends.  The piece is sampled at ``K_nf`` Chebyshev-Lobatto
nodes, replaced by the natural cubic spline through those samples, and the RHS
``f`` of the ODE is averaged over ``K_ns`` uniform points per segment.  The primary
update is

    y_{i+1}(x_j) = y_i(x_j) + h * mean_{segments, samples} f_j(q(g_s))

and the mean is taken either exactly or by amplitude estimation after an affine
map of the samples onto [0, 1].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .grid import Grid1D, HeatProblem, Trajectory, semidiscrete_reference
from .qae import amplitude_estimate, build_mean_oracle, qae_error_bound
from .spline import build_spline


class HierarchyWarning(UserWarning):
    """Node/sample counts violate the intended ordering K_nf < N_k < K_ns."""


class EstimatorError(RuntimeError):
    def __init__(self, primary: int, point: int, cause: Exception):
        super().__init__(f"mean estimation failed in primary step {primary}, "
                         f"grid index {point}: {cause}")
        self.primary = primary
        self.point = point


@dataclass(frozen=True)
class SmoothnessParams:
    r: int = 2
    rho: float = 1.0
    holder_H: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 0:
            raise ValueError(f"r must be a non-negative integer, got {self.r}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if not self.holder_H > 0:
            raise ValueError("Hoelder constant must be positive")
        if not 0 <= self.gamma <= 1:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")

    @property
    def q(self) -> float:
        return self.r + self.rho


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # decimal reading, so 0.05 becomes 1/20 rather than the nearest binary double
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class SubintervalHierarchy:
    T_total: Fraction
    n: int
    k: int
    K_nf: int
    K_ns: int

    @property
    def h(self) -> Fraction:
        return self.T_total / self.n

    @property
    def N_k(self) -> int:
        return self.n ** (self.k - 1)

    @property
    def h_bar(self) -> Fraction:
        return self.T_total / self.n**self.k

    def t(self, i: int, m: int = 0) -> Fraction:
        """``t_{i,m} = i h + m h_bar`` (exact)."""
        return i * self.h + m * self.h_bar

    def primary_times(self) -> np.ndarray:
        return np.array([float(self.t(i)) for i in range(self.n + 1)])

    @property
    def samples_per_step(self) -> int:
        return self.N_k * self.K_ns


def build_hierarchy(T_total, n: int, k: int, K_nf: int = 4, K_ns: int = 8) -> SubintervalHierarchy:
    T = _exact(T_total)
    if T <= 0:
        raise ValueError("T_total must be positive")
    if n < 2:
        raise ValueError(f"need at least two primary subintervals, got n={n}")
    if k < 1:
        raise ValueError(f"depth k must be at least 1, got {k}")
    if K_nf < 2:
        raise ValueError("need at least two Chebyshev nodes")
    if K_ns < 1:
        raise ValueError("need at least one sample per segment")
    hier = SubintervalHierarchy(T, int(n), int(k), int(K_nf), int(K_ns))
    if not K_nf < hier.N_k < K_ns:
        warnings.warn(f"expected K_nf < N_k < K_ns, got {K_nf}, {hier.N_k}, {K_ns}",
                      HierarchyWarning, stacklevel=2)
    return hier


def chebyshev_nodes(hierarchy: SubintervalHierarchy, i: int, m: int) -> np.ndarray:
    """Lobatto nodes ``((cos(pi p / (K_nf - 1)) + 1) / 2) h_bar + t_{i,m}``, p = 0..K_nf-1."""
    K = hierarchy.K_nf
    if K < 2:
        raise ValueError("need at least two Chebyshev nodes")
    p = np.arange(K)
    return (np.cos(np.pi * p / (K - 1)) + 1.0) / 2.0 * float(hierarchy.h_bar) \
        + float(hierarchy.t(i, m))


def _rhs_coef(problem: HeatProblem) -> float:
    return problem.alpha / problem.grid.delta_x**2


def spatial_rhs(u, problem: HeatProblem) -> np.ndarray:
    """Second-difference RHS on the interior nodes with Dirichlet ghost values.

    Accepts a single slice of length m or a stack of slices along the last axis.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != problem.m:
        raise ValueError(f"state has length {u.shape[-1]}, problem has m={problem.m}")
    bl, br = problem.boundary
    pad = np.empty(u.shape[:-1] + (u.shape[-1] + 2,))
    pad[..., 0], pad[..., -1] = bl, br
    pad[..., 1:-1] = u
    return _rhs_coef(problem) * (pad[..., 2:] + pad[..., :-2] - 2.0 * pad[..., 1:-1])


def rhs_jacobian_apply(v, problem: HeatProblem) -> np.ndarray:
    """``J v`` for the (constant) Jacobian of :func:`spatial_rhs`."""
    v = np.asarray(v, dtype=float)
    pad = np.zeros(v.shape[:-1] + (v.shape[-1] + 2,))
    pad[..., 1:-1] = v
    return _rhs_coef(problem) * (pad[..., 2:] + pad[..., :-2] - 2.0 * pad[..., 1:-1])


def heat_derivatives(u, problem: HeatProblem, r: int) -> list[np.ndarray]:
    """``[f, df/dt, ..., d^{r-1}f/dt^{r-1}]`` at state ``u``; here ``df/dt = J f``."""
    out = []
    if r >= 1:
        out.append(spatial_rhs(u, problem))
    for _ in range(1, r):
        out.append(rhs_jacobian_apply(out[-1], problem))
    return out


@dataclass(frozen=True)
class TaylorPiece:
    t_base: float
    base: np.ndarray
    derivatives: tuple
    t_end: float

    @property
    def r(self) -> int:
        return len(self.derivatives)

    def __call__(self, t):
        """Value at scalar ``t`` (shape m) or at an array of times (shape len(t) x m)."""
        t = np.asarray(t, dtype=float)
        dt = (t - self.t_base)[..., None]
        out = np.broadcast_to(self.base, dt.shape[:-1] + self.base.shape).copy()
        fact = 1.0
        for v, d in enumerate(self.derivatives, start=1):
            fact *= v
            out = out + d * dt**v / fact
        return out


def taylor_piece(base_value, f_and_derivatives, t_base: float, r: int,
                 t_end: float | None = None) -> TaylorPiece:
    """``A(t) = A(t0) + sum_{v=1}^r d^{v-1}f/dt^{v-1} (t - t0)^v / v!``.

    The remainder is of order ``r + 1`` in the segment length and is not computed.
    """
    derivs = [np.asarray(d, dtype=float) for d in f_and_derivatives]
    if len(derivs) != r:
        raise ValueError(f"expected {r} derivative terms, got {len(derivs)}")
    base = np.atleast_1d(np.asarray(base_value, dtype=float))
    return TaylorPiece(float(t_base), base, tuple(np.broadcast_to(d, base.shape)
                                                  for d in derivs),
                       float(t_base if t_end is None else t_end))


@dataclass(frozen=True)
class AffineMap:
    """``g = (f - offset) / scale``; a degenerate map sends everything to 1/2."""

    offset: float
    scale: float
    degenerate: bool = False

    def to_unit(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.degenerate:
            return np.full(f.shape, 0.5)
        return (f - self.offset) / self.scale

    def from_unit(self, g):
        if self.degenerate:
            return np.full(np.shape(g), self.offset) if np.ndim(g) else self.offset
        return self.offset + self.scale * np.asarray(g) if np.ndim(g) else \
            self.offset + self.scale * g


def rescale_to_unit(samples) -> tuple[np.ndarray, AffineMap]:
    f = np.asarray(samples, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("samples must be finite")
    lo, hi = float(f.min()), float(f.max())
    if hi == lo:
        amap = AffineMap(lo, 0.0, True)
    else:
        amap = AffineMap(lo, hi - lo)
    # clip guards against the last ulp pushing an endpoint outside [0, 1]
    return np.clip(amap.to_unit(f), 0.0, 1.0), amap


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    bound: float
    queries: int


class ExactMean:
    """Classical average; its query count is the number of RHS samples."""

    name = "exact"

    def __call__(self, samples, context=None) -> MeanEstimate:
        f = np.asarray(samples, dtype=float)
        return MeanEstimate(float(f.mean()), 0.0, f.size)


class QAEMean:
    """Amplitude-estimation mean of the samples after :func:`rescale_to_unit`.

    The reported bound is ``scale * (N_pad / N) * qae_error_bound(a, M)`` in the
    units of ``f``.  ``context`` is a ``(primary, point)`` pair that, with the seed,
    fixes the sampling stream of each estimate.
    """

    name = "qae"

    def __init__(self, ancillas: int = 12, seed: int | None = 0, mode: str = "argmax"):
        self.ancillas = ancillas
        self.seed = seed
        self.mode = mode

    def _seed_for(self, context):
        if self.seed is None:
            return None
        if context is None:
            return self.seed
        return int(np.random.SeedSequence([self.seed, *context]).generate_state(1)[0])

    def __call__(self, samples, context=None) -> MeanEstimate:
        g, amap = rescale_to_unit(samples)
        oracle = build_mean_oracle(g)
        res = amplitude_estimate(oracle, self.ancillas, self._seed_for(context), self.mode)
        ratio = oracle.padding_ratio
        mean = amap.from_unit(res.estimate * ratio)
        bound = amap.scale * ratio * qae_error_bound(res.exact_amplitude, self.ancillas)
        return MeanEstimate(float(mean), float(bound), res.query_count)


def make_estimator(name: str, ancillas: int = 12, seed: int | None = 0):
    if name in ("exact", "exact-mean"):
        return ExactMean()
    if name == "qae":
        return QAEMean(ancillas, seed)
    raise ValueError(f"unknown estimator {name!r}")


@dataclass(frozen=True)
class PrimaryStep:
    values: np.ndarray
    bound: np.ndarray
    queries: int
    continuity_error: float
    pieces: tuple


def segment_pieces(y_i, hierarchy: SubintervalHierarchy, problem: HeatProblem, i: int,
                   r: int = 2) -> list[TaylorPiece]:
    """Chained Taylor pieces covering primary step ``i``."""
    pieces = []
    base = np.asarray(y_i, dtype=float)
    for m in range(hierarchy.N_k):
        t0, t1 = float(hierarchy.t(i, m)), float(hierarchy.t(i, m + 1))
        piece = taylor_piece(base, heat_derivatives(base, problem, r), t0, r, t1)
        pieces.append(piece)
        base = piece(t1)
    return pieces


def sample_times(hierarchy: SubintervalHierarchy, i: int, m: int) -> np.ndarray:
    """``K_ns`` uniform midpoints of secondary segment ``(i, m)``."""
    hb = float(hierarchy.h_bar)
    return float(hierarchy.t(i, m)) + (np.arange(hierarchy.K_ns) + 0.5) * hb / hierarchy.K_ns


def surrogate_rhs_samples(piece: TaylorPiece, hierarchy: SubintervalHierarchy,
                          problem: HeatProblem, i: int, m: int) -> np.ndarray:
    """``f(q_m(g_s))`` for all sample points (rows) and grid points (columns)."""
    t0 = float(hierarchy.t(i, m))
    # splines are built in the local coordinate t - t_{i,m} to avoid cancellation
    nodes = chebyshev_nodes(hierarchy, i, m) - t0
    node_vals = piece(nodes + t0)
    g = sample_times(hierarchy, i, m) - t0
    q = np.empty((g.size, problem.m))
    for j in range(problem.m):
        q[:, j] = build_spline(nodes, node_vals[:, j])(g)
    return spatial_rhs(q, problem)


def advance_primary(y_i, hierarchy: SubintervalHierarchy, problem: HeatProblem,
                    estimator=None, *, i: int = 0,
                    params: SmoothnessParams | None = None) -> PrimaryStep:
    estimator = estimator or ExactMean()
    r = (params or SmoothnessParams()).r
    y_i = np.asarray(y_i, dtype=float)
    pieces = segment_pieces(y_i, hierarchy, problem, i, r)
    mismatch = 0.0
    for m in range(len(pieces) - 1):
        t1 = pieces[m].t_end
        mismatch = max(mismatch, float(np.abs(pieces[m](t1) - pieces[m + 1](t1)).max()))
    samples = np.concatenate([surrogate_rhs_samples(p, hierarchy, problem, i, m)
                              for m, p in enumerate(pieces)])
    h = float(hierarchy.h)
    out = np.empty_like(y_i)
    bound = np.zeros_like(y_i)
    queries = 0
    for j in range(problem.m):
        try:
            est = estimator(samples[:, j], (i, j))
        except Exception as exc:
            raise EstimatorError(i, j, exc) from exc
        out[j] = y_i[j] + h * est.mean
        bound[j] = h * est.bound
        queries += est.queries
    return PrimaryStep(out, bound, queries, mismatch, tuple(pieces))


@dataclass(frozen=True)
class OSKResult:
    trajectory: Trajectory
    sup_error: float | None
    accumulated_bound: np.ndarray
    queries: int
    continuity_error: float
    hierarchy: SubintervalHierarchy

    def report_line(self) -> str:
        err = "nan" if self.sup_error is None else repr(self.sup_error)
        return f"{self.hierarchy.n},{self.hierarchy.k},{err},{self.queries}"


def osk_solve(problem: HeatProblem, hierarchy: SubintervalHierarchy,
              params: SmoothnessParams | None = None, estimator=None, *,
              reference: bool = True) -> OSKResult:
    """March ``y_0 = u(0)`` through all primary steps.

    ``sup_error`` is the max deviation at the primary times from the exact
    semi-discrete solution on the same spatial grid.
    """
    params = params or SmoothnessParams()
    estimator = estimator or ExactMean()
    n = hierarchy.n
    ys = np.empty((n + 1, problem.m))
    ys[0] = problem.initial
    bound = np.zeros(problem.m)
    queries, mismatch = 0, 0.0
    for i in range(n):
        step = advance_primary(ys[i], hierarchy, problem, estimator, i=i, params=params)
        ys[i + 1] = step.values
        bound += step.bound
        queries += step.queries
        mismatch = max(mismatch, step.continuity_error)
    times = hierarchy.primary_times()
    g = problem.grid
    grid = Grid1D(g.x0, g.x_end, g.m, float(hierarchy.T_total), n)
    sup = None
    if reference:
        ref = semidiscrete_reference(problem, times)
        sup = float(np.abs(ys - ref).max())
    return OSKResult(Trajectory(ys, times, grid), sup, bound, queries, mismatch, hierarchy)


def osk_error_exponent(k: int, params: SmoothnessParams) -> float:
    """``alpha_k = k (q + 1) - 1``."""
    if k < 1:
        raise ValueError("depth k must be at least 1")
    return k * (params.q + 1.0) - 1.0


def osk_complexity(params: SmoothnessParams, epsilon: float, lower_bound: bool = False) -> float:
    """``(1/eps)**(1/(q+1-gamma))``, or ``(1/eps)**(1/(q+1))`` for the lower bound.

    Unit constant; the hidden log factor is ``ln(1/eps)`` and is not included.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    denom = params.q + 1.0 if lower_bound else params.q + 1.0 - params.gamma
    if denom <= 0:
        raise ValueError("need q + 1 - gamma > 0")
    return (1.0 / epsilon) ** (1.0 / denom)


def log_factor(epsilon: float) -> float:
    return math.log(1.0 / epsilon)
