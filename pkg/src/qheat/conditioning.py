"""Spectral norms and condition numbers of the space-time systems.

``sigma_max`` comes from power iteration on ``A^T A``; ``sigma_min`` from inverse
iteration, whose inner solves are exact triangular substitutions for
:class:`~qheat.grid.BlockSystem` and an LU factorization otherwise.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fitting import fit_loglog
from .grid import BlockSystem, assemble_block_system, make_problem

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
DEFAULT_SEED = 1234


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, estimate: float, residual: float, iterations: int):
        super().__init__(f"{message} (estimate={estimate:.6g}, rel. change={residual:.3g}, "
                         f"iterations={iterations})")
        self.estimate = estimate
        self.residual = residual
        self.iterations = iterations


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class _Operator:
    """Uniform matvec / rmatvec / solve / solve_transpose view of several matrix kinds."""

    def __init__(self, A):
        self.A = A
        if isinstance(A, BlockSystem):
            self.n = A.dimension
            self.matvec, self.rmatvec = A.matvec, A.rmatvec
            self._solve, self._solve_t = A.solve, A.solve_transpose
            return
        if sp.issparse(A):
            A = sp.csc_matrix(A)
            if A.shape[0] != A.shape[1]:
                raise ValueError(f"operator must be square, got {A.shape}")
            self.n = A.shape[0]
            self.matvec = lambda v: A @ v
            self.rmatvec = lambda v: A.T.conj() @ v
            self._lu = None
            self._solve = lambda b: self._splu().solve(b)
            self._solve_t = lambda b: self._splu().solve(b, trans="H")
            return
        A = np.atleast_2d(np.asarray(A))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"operator must be square, got {A.shape}")
        self.n = A.shape[0]
        self.matvec = lambda v: A @ v
        self.rmatvec = lambda v: A.conj().T @ v
        self._lu = None
        self._solve = lambda b: scipy.linalg.lu_solve(self._dense_lu(), b)
        self._solve_t = lambda b: scipy.linalg.lu_solve(self._dense_lu(), b, trans=2)

    def _dense_lu(self):
        if self._lu is None:
            A = np.asarray(self.A)
            with warnings.catch_warnings():
                # singularity is reported below as SingularMatrixError
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
            d = np.abs(np.diag(lu))
            if d.min() <= np.finfo(float).eps * max(d.max(), 1.0) * self.n:
                raise SingularMatrixError("matrix is numerically singular")
            self._lu = (lu, piv)
        return self._lu

    def _splu(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(sp.csc_matrix(self.A))
            except RuntimeError as exc:
                raise SingularMatrixError(str(exc)) from exc
        return self._lu

    def solve(self, b):
        return self._solve(b)

    def solve_t(self, b):
        return self._solve_t(b)


def _start_vector(n: int, seed: int) -> np.ndarray:
    v = np.random.default_rng(seed).standard_normal(n)
    return v / np.linalg.norm(v)


def _iterate(apply, n, tol, max_iter, seed, what):
    """Power iteration for the dominant eigenvalue of the PSD map ``apply``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = _start_vector(n, seed)
    theta, change = 0.0, np.inf
    for it in range(1, max_iter + 1):
        w = apply(v)
        new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0, it, 0.0
        v = w / nw
        change = abs(new - theta) / abs(new)
        theta = new
        if change <= tol:
            return theta, it, change
    raise ConvergenceError(f"{what} did not converge", theta, change, max_iter)


def _power_sigma_max(A, tol, max_iter, seed):
    op = _Operator(A)
    lam, it, res = _iterate(lambda v: op.rmatvec(op.matvec(v)), op.n, tol, max_iter, seed,
                            "power iteration")
    return float(np.sqrt(lam)), it, res


def _inverse_sigma_min(A, tol, max_iter, seed):
    op = _Operator(A)
    try:
        lam, it, res = _iterate(lambda v: op.solve(op.solve_t(v)), op.n, tol, max_iter, seed,
                                "inverse iteration")
    except ConvergenceError as exc:
        raise ConvergenceError("inverse iteration did not converge",
                               1.0 / np.sqrt(exc.estimate), exc.residual, exc.iterations) from None
    if not np.isfinite(lam) or lam <= 0:
        raise SingularMatrixError("matrix is numerically singular")
    return float(1.0 / np.sqrt(lam)), it, res


def spectral_norm(A, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                  seed: int = DEFAULT_SEED) -> float:
    """Largest singular value by power iteration on ``A^T A``."""
    return _power_sigma_max(A, tol, max_iter, seed)[0]


def min_singular_value(A, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                       seed: int = DEFAULT_SEED) -> float:
    """Smallest singular value by inverse iteration on ``A^T A``.

    Raises :class:`SingularMatrixError` for singular input.
    """
    return _inverse_sigma_min(A, tol, max_iter, seed)[0]


@dataclass(frozen=True)
class NormReport:
    norm_A: float
    sigma_min: float
    kappa: float
    iterations: tuple[int, int]
    residual: float


def condition_number(A, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                     seed: int = DEFAULT_SEED) -> NormReport:
    smax, it1, r1 = _power_sigma_max(A, tol, max_iter, seed)
    smin, it2, r2 = _inverse_sigma_min(A, tol, max_iter, seed)
    # both estimates carry rounding; kappa is >= 1 by definition
    kappa = max(smax / smin, 1.0)
    return NormReport(smax, smin, kappa, (it1, it2), max(r1, r2))


@dataclass(frozen=True)
class ScalingFit:
    m_values: tuple[int, ...]
    kappas: tuple[float, ...]
    norms: tuple[float, ...]
    sigma_mins: tuple[float, ...]
    slope: float
    intercept: float
    r2: float

    @property
    def norm_spread(self) -> float:
        """max ||A|| / min ||A|| over the sweep."""
        return max(self.norms) / min(self.norms)

    def rows(self):
        return list(zip(self.m_values, self.norms, self.sigma_mins, self.kappas))


def heat_system_builder(lam: float = 0.25, steps_per_point: int = 1,
                        initial="sine:1") -> Callable[[int], BlockSystem]:
    """Builder for the heat block system with ``N = steps_per_point * m``."""
    def build(m: int) -> BlockSystem:
        return assemble_block_system(
            make_problem(m, n_steps=steps_per_point * m, lam=lam, initial=initial))
    return build


def kappa_scaling_study(m_list: Sequence[int], builder: Callable[[int], object] | None = None,
                        *, workers: int = 1, tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER) -> ScalingFit:
    m_list = [int(m) for m in m_list]
    if len(m_list) < 4:
        raise ValueError("scaling study needs at least 4 grid sizes")
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ValueError("m_list must be strictly ascending")
    if m_list[-1] < 8 * m_list[0]:
        raise ValueError("m_list must span at least a factor of 8")
    builder = builder or heat_system_builder()

    def one(m):
        return condition_number(builder(m), tol=tol, max_iter=max_iter)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            reports = list(pool.map(one, m_list))
    else:
        reports = [one(m) for m in m_list]
    kappas = [r.kappa for r in reports]
    fit = fit_loglog(m_list, kappas)
    return ScalingFit(tuple(m_list), tuple(kappas), tuple(r.norm_A for r in reports),
                      tuple(r.sigma_min for r in reports), fit.slope, fit.intercept, fit.r2)
