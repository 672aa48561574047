"""Finite-difference discretization of the 1-D heat equation.

Builds the scaled Laplacian, the explicit time-march, the lower block-bidiagonal
space-time system ``A u = b`` whose solution is the whole marched trajectory, and
the classical references (separation of variables and the semi-discrete limit)
used throughout the test-suite.

Node ``j`` (1-based, ``j = 1..m``) is stored at array index ``j - 1``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

EXPLICIT_STABILITY_LIMIT = 0.5


class StabilityWarning(UserWarning):
    """Explicit scheme run with a CFL number above 1/2."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Grid1D:
    x0: float
    x_end: float
    m: int
    t_final: float
    n_steps: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"need at least one interior point, got m={self.m}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be non-negative, got {self.n_steps}")
        if not self.x_end > self.x0:
            raise ValueError("x_end must exceed x0")
        if self.n_steps > 0 and not self.t_final > 0:
            raise ValueError("t_final must be positive when time steps are requested")

    @classmethod
    def from_cfl(cls, x0: float, x_end: float, m: int, t_final: float,
                 alpha: float = 1.0, lam: float = 0.25) -> "Grid1D":
        """Pick the step count so the CFL number does not exceed ``lam``."""
        dx = (x_end - x0) / (m + 1)
        dt = lam * dx * dx / alpha
        # round before ceil so exact multiples do not pick up a spurious extra step
        n_steps = max(1, math.ceil(round(t_final / dt, 9)))
        return cls(x0, x_end, m, t_final, n_steps)

    @property
    def length(self) -> float:
        return self.x_end - self.x0

    @property
    def delta_x(self) -> float:
        return self.length / (self.m + 1)

    @property
    def delta_t(self) -> float:
        return self.t_final / self.n_steps if self.n_steps else 0.0

    @property
    def x(self) -> np.ndarray:
        """Interior node positions."""
        return self.x0 + self.delta_x * np.arange(1, self.m + 1)

    @property
    def times(self) -> np.ndarray:
        return self.delta_t * np.arange(self.n_steps + 1)

    def cfl(self, alpha: float) -> float:
        return alpha * self.delta_t / self.delta_x**2


@dataclass(frozen=True)
class HeatProblem:
    """Grid, diffusivity, initial samples and constant Dirichlet data.

    With ``normalize=True`` (the default) the initial samples *and* the boundary
    values are multiplied by ``scale`` so that ``delta_x * sum(initial) == 1``.
    Dividing any result by ``scale`` recovers physical units.
    """

    grid: Grid1D
    alpha: float
    initial: np.ndarray
    boundary: tuple[float, float] = (0.0, 0.0)
    normalize: bool = True
    scale: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        u0 = np.asarray(self.initial, dtype=float)
        if u0.shape != (self.grid.m,):
            raise ValueError(f"initial data has shape {u0.shape}, expected ({self.grid.m},)")
        if not np.all(np.isfinite(u0)):
            raise ValueError("initial data must be finite")
        bl, br = (float(v) for v in self.boundary)
        scale = 1.0
        if self.normalize:
            heat = self.grid.delta_x * u0.sum()
            if heat == 0:
                raise ValueError("cannot normalize initial data with zero total heat")
            scale = 1.0 / heat
        object.__setattr__(self, "initial", _frozen(u0 * scale))
        object.__setattr__(self, "boundary", (bl * scale, br * scale))
        object.__setattr__(self, "scale", scale)

    @property
    def m(self) -> int:
        return self.grid.m

    @property
    def lam(self) -> float:
        """CFL number alpha * dt / dx**2."""
        return self.grid.cfl(self.alpha)

    @property
    def zero_boundary(self) -> bool:
        return self.boundary == (0.0, 0.0)


def initial_profile(grid: Grid1D, spec) -> np.ndarray:
    """Sample a named initial profile on the interior nodes.

    ``spec`` is one of ``"spike"``, ``"uniform"``, ``"sine:p"`` (``"sine"`` means
    ``p = 1``), ``"linear"`` or an explicit sequence of ``m`` samples.
    """
    if not isinstance(spec, str):
        samples = np.asarray(spec, dtype=float)
        if samples.shape != (grid.m,):
            raise ValueError(f"custom initial data needs {grid.m} samples, got {samples.shape}")
        return samples
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    if name == "spike":
        u = np.zeros(grid.m)
        u[(grid.m - 1) // 2] = 1.0
        if grid.m % 2 == 0:
            # keep the spike symmetric about the midpoint
            u[grid.m // 2] = 1.0
        return u
    if name == "uniform":
        return np.ones(grid.m)
    if name == "sine":
        p = int(arg) if arg else 1
        if p <= 0:
            raise ValueError(f"sine mode must be positive, got {p}")
        return np.sin(p * np.pi * (grid.x - grid.x0) / grid.length)
    if name == "linear":
        return (grid.x - grid.x0) / grid.length
    raise ValueError(f"unknown initial profile {spec!r}")


def make_problem(m: int, *, n_steps: int | None = None, lam: float | None = None,
                 t_final: float | None = None, alpha: float = 1.0, x0: float = 0.0,
                 x_end: float = 1.0, initial="sine:1",
                 boundary: tuple[float, float] = (0.0, 0.0),
                 normalize: bool = True) -> HeatProblem:
    """Convenience constructor.

    Give either ``n_steps`` together with ``lam`` (``t_final`` is then implied),
    ``n_steps`` with ``t_final``, or ``t_final`` alone (CFL number defaults to 1/4).
    """
    dx = (x_end - x0) / (m + 1)
    if n_steps is not None and t_final is None:
        lam = 0.25 if lam is None else lam
        t_final = n_steps * lam * dx * dx / alpha
        grid = Grid1D(x0, x_end, m, t_final, n_steps)
    elif n_steps is not None:
        grid = Grid1D(x0, x_end, m, t_final, n_steps)
    else:
        if t_final is None:
            raise ValueError("need n_steps or t_final")
        grid = Grid1D.from_cfl(x0, x_end, m, t_final, alpha, 0.25 if lam is None else lam)
    return HeatProblem(grid, alpha, initial_profile(grid, initial), boundary, normalize)


@dataclass(frozen=True)
class BandMatrix:
    """Tridiagonal matrix ``scale * tridiag(lower, main, upper)``, already scaled."""

    lower: np.ndarray
    main: np.ndarray
    upper: np.ndarray
    scale: float = 1.0
    unstable: bool = False

    @property
    def dimension(self) -> int:
        return len(self.main)

    @property
    def lam(self) -> float:
        return self.scale

    def is_symmetric(self) -> bool:
        return np.array_equal(self.lower, self.upper)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        out = self.main * v
        if self.dimension > 1:
            out[1:] += self.lower * v[:-1]
            out[:-1] += self.upper * v[1:]
        return out

    def banded(self) -> np.ndarray:
        """(3, n) diagonal-ordered storage as used by ``scipy.linalg.solve_banded``."""
        ab = np.zeros((3, self.dimension))
        ab[0, 1:] = self.upper
        ab[1] = self.main
        ab[2, :-1] = self.lower
        return ab

    def to_dense(self) -> np.ndarray:
        return (np.diag(self.main) + np.diag(self.lower, -1) + np.diag(self.upper, 1))

    def to_sparse(self) -> sp.csr_matrix:
        return sp.diags([self.lower, self.main, self.upper], [-1, 0, 1], format="csr")

    def shifted_identity(self) -> "BandMatrix":
        """I + self, the one-step propagator of the explicit scheme."""
        return BandMatrix(self.lower, _frozen(self.main + 1.0), self.upper,
                          self.scale, self.unstable)


def build_laplacian(problem: HeatProblem) -> BandMatrix:
    """``lam * tridiag(1, -2, 1)`` with ``lam = alpha dt / dx**2``."""
    m = problem.m
    if m < 1:
        raise ValueError("Laplacian needs m >= 1")
    lam = problem.lam
    unstable = lam > EXPLICIT_STABILITY_LIMIT
    if unstable:
        warnings.warn(f"CFL number {lam:.4g} exceeds 1/2; explicit scheme is unstable",
                      StabilityWarning, stacklevel=2)
    off = _frozen(np.full(m - 1, lam))
    return BandMatrix(off, _frozen(np.full(m, -2.0 * lam)), off, lam, unstable)


def boundary_forcing(lam: float, boundary: tuple[float, float], m: int) -> np.ndarray:
    """Contribution of the Dirichlet values to one explicit step."""
    f = np.zeros(m)
    f[0] += lam * boundary[0]
    f[-1] += lam * boundary[1]
    return f


def step_explicit(u_n: np.ndarray, L: BandMatrix,
                  boundary: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    u_n = np.asarray(u_n, dtype=float)
    if u_n.shape != (L.dimension,):
        raise ValueError(f"state has shape {u_n.shape}, Laplacian is {L.dimension}x{L.dimension}")
    return u_n + L.matvec(u_n) + boundary_forcing(L.lam, boundary, L.dimension)


@dataclass(frozen=True)
class Trajectory:
    """Solution slices ``values[n, j-1] = u(x_j, times[n])``."""

    values: np.ndarray
    times: np.ndarray
    grid: Grid1D

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def to_csv(self, dest=None) -> str:
        """Write ``t,x,u`` rows; returns the text and also writes it when ``dest`` is a path."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "u"])
        xs = self.grid.x
        for t, row in zip(self.times, self.values):
            for x, u in zip(xs, row):
                w.writerow([repr(float(t)), repr(float(x)), repr(float(u))])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text


def march_explicit(problem: HeatProblem) -> Trajectory:
    """Reference solution by repeated ``step_explicit``."""
    L = build_laplacian(problem)
    out = np.empty((problem.grid.n_steps + 1, problem.m))
    out[0] = problem.initial
    for n in range(problem.grid.n_steps):
        out[n + 1] = step_explicit(out[n], L, problem.boundary)
    return Trajectory(out, problem.grid.times, problem.grid)


@dataclass(frozen=True)
class BlockSystem:
    """Lower block-bidiagonal system with identity diagonal and ``-(I+L)`` below.

    Row block ``n`` reads ``u_n - M u_{n-1} = b_n`` with ``M = I + L``, so the
    unique solution stacks the explicit-march slices ``u_0 .. u_N``.
    """

    problem: HeatProblem
    propagator: BandMatrix
    rhs: np.ndarray

    @property
    def m(self) -> int:
        return self.problem.m

    @property
    def n_steps(self) -> int:
        return self.problem.grid.n_steps

    @property
    def dimension(self) -> int:
        return (self.n_steps + 1) * self.m

    @property
    def shape(self) -> tuple[int, int]:
        return (self.dimension, self.dimension)

    def _blocks(self, v):
        return np.asarray(v).reshape(self.n_steps + 1, self.m)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        X = self._blocks(x)
        out = X.astype(np.result_type(X, float), copy=True)
        for n in range(1, self.n_steps + 1):
            out[n] -= self.propagator.matvec(X[n - 1])
        return out.ravel()

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        # propagator is symmetric, so its transpose is itself
        Y = self._blocks(y)
        out = Y.astype(np.result_type(Y, float), copy=True)
        for n in range(self.n_steps):
            out[n] -= self.propagator.matvec(Y[n + 1])
        return out.ravel()

    def solve(self, b: np.ndarray | None = None) -> np.ndarray:
        """Block forward substitution, Theta(N m) work."""
        B = self._blocks(self.rhs if b is None else b)
        X = np.empty_like(B, dtype=np.result_type(B, float))
        X[0] = B[0]
        for n in range(1, self.n_steps + 1):
            X[n] = B[n] + self.propagator.matvec(X[n - 1])
        return X.ravel()

    def solve_transpose(self, y: np.ndarray) -> np.ndarray:
        """Block back substitution for ``A^T x = y``."""
        Y = self._blocks(y)
        X = np.empty_like(Y, dtype=np.result_type(Y, float))
        X[-1] = Y[-1]
        for n in range(self.n_steps - 1, -1, -1):
            X[n] = Y[n] + self.propagator.matvec(X[n + 1])
        return X.ravel()

    def to_sparse(self) -> sp.csr_matrix:
        N, M = self.n_steps, self.propagator.to_sparse()
        sub = sp.kron(sp.eye(N + 1, k=-1), M)
        return (sp.eye(self.dimension) - sub).tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


def assemble_block_system(problem: HeatProblem) -> BlockSystem:
    L = build_laplacian(problem)
    N, m = problem.grid.n_steps, problem.m
    rhs = np.zeros((N + 1, m))
    rhs[0] = problem.initial
    if N:
        rhs[1:] = boundary_forcing(L.lam, problem.boundary, m)
    return BlockSystem(problem, L.shifted_identity(), _frozen(rhs.ravel()))


def solve_block_direct(system: BlockSystem) -> Trajectory:
    values = system.solve().reshape(system.n_steps + 1, system.m)
    grid = system.problem.grid
    return Trajectory(values, grid.times, grid)


def analytic_solution(p: int, alpha: float, grid: Grid1D, t: float) -> np.ndarray:
    """Separable mode ``exp(-alpha (p pi / Lx)^2 t) sin(p pi (x - x0) / Lx)``."""
    if p <= 0:
        raise ValueError(f"mode index must be positive, got {p}")
    k = p * np.pi / grid.length
    return np.exp(-alpha * k * k * t) * np.sin(k * (grid.x - grid.x0))


def semidiscrete_reference(problem: HeatProblem, times: Iterable[float]) -> np.ndarray:
    """Exact solution of the method-of-lines ODE ``u' = J u + c`` at ``times``.

    This is the ``dt -> 0`` limit of the explicit march on the same spatial grid.
    """
    m, dx = problem.m, problem.grid.delta_x
    coef = problem.alpha / dx**2
    J = coef * (np.diag(np.full(m, -2.0)) + np.diag(np.ones(m - 1), 1)
                + np.diag(np.ones(m - 1), -1))
    c = boundary_forcing(coef, problem.boundary, m)
    steady = -np.linalg.solve(J, c) if np.any(c) else np.zeros(m)
    d0 = problem.initial - steady
    return np.array([steady + scipy.linalg.expm(t * J) @ d0 for t in times])


def spectral_solve(problem: HeatProblem, n_steps: int | None = None) -> np.ndarray:
    """Slice after ``n_steps`` explicit steps by diagonalizing ``I + L`` with a DST-I.

    Matches :func:`march_explicit` to rounding at O(m log m) cost independent of
    the step count; non-zero Dirichlet data is handled via the linear steady state.
    """
    import scipy.fft

    m = problem.m
    steps = problem.grid.n_steps if n_steps is None else n_steps
    bl, br = problem.boundary
    j = np.arange(1, m + 1)
    steady = bl + (br - bl) * j / (m + 1)
    k = np.arange(1, m + 1)
    growth = 1.0 - 4.0 * problem.lam * np.sin(np.pi * k / (2 * (m + 1))) ** 2
    coeffs = scipy.fft.dst(problem.initial - steady, type=1, norm="ortho")
    return steady + scipy.fft.dst(coeffs * growth**steps, type=1, norm="ortho")


def heat_in_region(values: np.ndarray, region: Sequence[int], delta_x: float) -> float:
    """Riemann sum ``delta_x * sum(u[region])``; ``region`` holds 0-based indices."""
    idx = np.asarray(list(region), dtype=int)
    if idx.size == 0:
        return 0.0
    values = np.asarray(values)
    if idx.min() < 0 or idx.max() >= len(values):
        raise IndexError("region lies outside the interior grid")
    return float(delta_x * values[idx].sum())


def region_indices(m: int, which="full") -> np.ndarray:
    """0-based indices for ``"full"``, ``"left"``, ``"right"`` or an explicit (start, stop)."""
    if which == "full":
        return np.arange(m)
    if which == "left":
        return np.arange(m // 2)
    if which == "right":
        return np.arange(m - m // 2, m)
    if which in ("empty", None):
        return np.arange(0)
    start, stop = which
    return np.arange(start, stop)


def problem_from_config(cfg: dict) -> HeatProblem:
    """Build a problem from a mapping with keys x0, x_end, m, alpha, t_final,
    n_steps or lambda, initial, boundary, normalize."""
    try:
        m = int(cfg["m"])
    except KeyError:
        raise ValueError("problem config needs 'm'") from None
    lam = cfg.get("lambda", cfg.get("lam"))
    n_steps = cfg.get("n_steps")
    return make_problem(
        m,
        n_steps=None if n_steps is None else int(n_steps),
        lam=None if lam is None else float(lam),
        t_final=None if cfg.get("t_final") is None else float(cfg["t_final"]),
        alpha=float(cfg.get("alpha", 1.0)),
        x0=float(cfg.get("x0", 0.0)),
        x_end=float(cfg.get("x_end", 1.0)),
        initial=cfg.get("initial", "sine:1"),
        boundary=tuple(cfg.get("boundary", (0.0, 0.0))),
        normalize=bool(cfg.get("normalize", True)),
    )


def load_problem(path) -> HeatProblem:
    import yaml

    with open(path) as fh:
        cfg = yaml.safe_load(fh) or {}
    return problem_from_config(cfg.get("problem", cfg))
