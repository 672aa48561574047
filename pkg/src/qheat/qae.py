"""Amplitude and mean estimation on exact statevectors.

Canonical phase-estimation QAE: ``M`` ancillas in uniform superposition control
powers of the Grover iterate ``Q = -A S_0 A^H S_good`` applied to ``A|0>``, then an
inverse QFT on the ancillas.  The good/bad plane is invariant under ``Q``, so the
joint state is carried as a ``(2**M, 2)`` array in that plane; this reproduces the
ancilla distribution of the full circuit exactly.

Basis ordering for the mean oracle is ``index = 2 * i + flag``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .costs import cost_cas_readout
from .qlsp import StateVector

MAX_ANCILLAS = 16
DEFAULT_C = 4.0 * math.pi


@dataclass(frozen=True)
class MeanOracle:
    """Flag-qubit encoding of samples ``g(i)`` in [0, 1].

    ``O|i>|1> = sqrt(g)|i>|1> + sqrt(1-g)|i>|0>`` and
    ``O|i>|0> = sqrt(1-g)|i>|1> - sqrt(g)|i>|0>``; the minus sign makes each 2x2
    block a reflection, so ``O`` is unitary and self-inverse.
    """

    g: np.ndarray
    n_samples: int

    @property
    def size(self) -> int:
        """Padded sample count N (a power of two)."""
        return self.g.size

    @property
    def num_index_qubits(self) -> int:
        return self.size.bit_length() - 1

    @property
    def dimension(self) -> int:
        return 2 * self.size

    @property
    def padded_mean(self) -> float:
        return float(self.g.mean())

    @property
    def mean(self) -> float:
        return float(self.g[:self.n_samples].mean())

    @property
    def padding_ratio(self) -> float:
        """N_padded / N_true, the factor that turns the padded mean into the true one."""
        return self.size / self.n_samples

    def blocks(self) -> np.ndarray:
        """Per-index 2x2 blocks ``[out_flag, in_flag]``."""
        sg, sb = np.sqrt(self.g), np.sqrt(1.0 - self.g)
        out = np.empty((self.size, 2, 2))
        out[:, 0, 0], out[:, 0, 1] = -sg, sb
        out[:, 1, 0], out[:, 1, 1] = sb, sg
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v).reshape(self.size, 2)
        return np.einsum("iab,ib->ia", self.blocks(), v).ravel()

    def matrix(self) -> np.ndarray:
        D = self.dimension
        out = np.zeros((D, D))
        B = self.blocks()
        for i in range(self.size):
            out[2 * i:2 * i + 2, 2 * i:2 * i + 2] = B[i]
        return out


def build_mean_oracle(g_values) -> MeanOracle:
    g = np.asarray(g_values, dtype=float).ravel()
    if g.size == 0:
        raise ValueError("need at least one sample")
    if not np.all(np.isfinite(g)) or g.min() < 0.0 or g.max() > 1.0:
        raise ValueError("oracle samples must lie in [0, 1]")
    N = 1 << max(0, (g.size - 1).bit_length())
    padded = np.zeros(N)
    padded[:g.size] = g
    padded.flags.writeable = False
    return MeanOracle(padded, g.size)


def fourier_matrix(N: int) -> np.ndarray:
    k = np.arange(N)
    return np.exp(2j * np.pi * np.outer(k, k) / N) / np.sqrt(N)


def preparation_matrix(oracle: MeanOracle) -> np.ndarray:
    """Dense ``A = O (F_N x I_C)``; only for small N."""
    return oracle.matrix() @ np.kron(fourier_matrix(oracle.size), np.eye(2))


def start_index() -> int:
    """Basis index of ``|0>|1>``."""
    return 1


def flag_mask(oracle: MeanOracle) -> np.ndarray:
    mask = np.zeros(oracle.dimension, dtype=bool)
    mask[1::2] = True
    return mask


def prepare_psi(oracle: MeanOracle) -> StateVector:
    """``A|0>|1>`` with the Fourier transform applied as an FFT."""
    v = np.zeros((oracle.size, 2), dtype=complex)
    v[0, 1] = 1.0
    v = np.fft.ifft(v, axis=0, norm="ortho")
    return StateVector(oracle.apply(v))


def _projector_fn(projector, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    if callable(projector):
        return projector
    P = np.asarray(projector)
    if P.ndim == 2:
        if P.shape != (dim, dim):
            raise ValueError(f"projector has shape {P.shape}, state dimension is {dim}")
        return lambda v: P @ v
    if P.dtype == bool:
        mask = np.zeros(dim, dtype=bool)
        mask[:P.size] = P
    else:
        mask = np.zeros(dim, dtype=bool)
        mask[P.astype(int)] = True
    return lambda v: np.where(mask, v, 0)


def grover_apply(psi: np.ndarray, project) -> Callable[[np.ndarray], np.ndarray]:
    """Matvec of ``Q = (2|psi><psi| - I)(I - 2P)``, equal to ``-A S_0 A^H S_good``."""
    def Q(v):
        w = v - 2.0 * project(v)
        return 2.0 * psi * np.vdot(psi, w) - w
    return Q


def grover_matrix(prep: np.ndarray, good: np.ndarray, start: int = 1) -> np.ndarray:
    """Dense ``-A S_0 A^H S_good`` for cross-checking :func:`grover_apply`."""
    D = prep.shape[0]
    S0 = np.eye(D)
    S0[start, start] = -1.0
    Sg = np.diag(np.where(good, -1.0, 1.0))
    return -prep @ S0 @ prep.conj().T @ Sg


def qae_error_bound(a: float, M: int) -> float:
    """``2 pi sqrt(a(1-a)) / 2**M + pi**2 / 4**M``."""
    a = min(max(a, 0.0), 1.0)
    K = 2.0**M
    return 2.0 * math.pi * math.sqrt(a * (1.0 - a)) / K + math.pi**2 / K**2


def worst_case_bound(M: int) -> float:
    return qae_error_bound(0.5, M)


@dataclass(frozen=True)
class EstimationResult:
    estimate: float
    ancillas: int
    bound: float
    grover_calls: int
    preparations: int
    seed: int | None
    exact_amplitude: float
    outcome: int
    outcome_probability: float

    @property
    def query_count(self) -> int:
        return self.grover_calls + self.preparations


def _ancilla_distribution(psi: np.ndarray, project, M: int) -> tuple[np.ndarray, float]:
    good = project(psi)
    bad = psi - good
    a = float(np.vdot(good, good).real)
    basis = [v / np.linalg.norm(v) for v in (good, bad) if np.linalg.norm(v) > 1e-15]
    B = np.stack(basis, axis=1)
    Q = grover_apply(psi, project)
    QB = np.stack([Q(B[:, k]) for k in range(B.shape[1])], axis=1)
    R = B.conj().T @ QB
    if np.linalg.norm(QB - B @ R) > 1e-9:
        raise RuntimeError("good/bad plane is not invariant under the Grover iterate")
    # R is normal, so its complex Schur form is diagonal with a unitary basis
    T, Z = scipy.linalg.schur(R.astype(complex), output="complex")
    omega = np.angle(np.diag(T))
    c = Z.conj().T @ (B.conj().T @ psi)
    K = 1 << M
    y = np.arange(K)
    coeffs = np.exp(1j * np.outer(y, omega)) * c
    amps = np.fft.fft(coeffs, axis=0) / K
    # ancilla probabilities do not depend on the (unitary) system-register basis
    p = np.sum(np.abs(amps) ** 2, axis=1)
    return p / p.sum(), a


def estimate_amplitude(state, projector, M: int, seed: int | None = None,
                       mode: str = "argmax") -> EstimationResult:
    """QAE of ``a = <psi|P|psi>`` for an arbitrary state and projector."""
    if not 1 <= M <= MAX_ANCILLAS:
        raise ValueError(f"ancilla count must lie in [1, {MAX_ANCILLAS}], got {M}")
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, complex)
    project = _projector_fn(projector, psi.size)
    p, a = _ancilla_distribution(psi, project, M)
    K = 1 << M
    if mode == "argmax":
        k = int(np.argmax(p))
    elif mode == "sample":
        k = int(np.random.default_rng(seed).choice(K, p=p))
    else:
        raise ValueError(f"unknown read-out mode {mode!r}")
    est = math.sin(math.pi * k / K) ** 2
    return EstimationResult(est, M, worst_case_bound(M), K - 1, 1, seed, a, k, float(p[k]))


def amplitude_estimate(oracle: MeanOracle, M: int, seed: int | None = None,
                       mode: str = "argmax") -> EstimationResult:
    """Estimate the flag-1 mass of ``A|0>|1>``, i.e. the padded sample mean."""
    return estimate_amplitude(prepare_psi(oracle), flag_mask(oracle), M, seed, mode)


def ancillas_for(epsilon: float, c: float = DEFAULT_C) -> int:
    return max(1, math.ceil(math.log2(c / epsilon)))


def mean_estimate_bounded(prepare, projector, epsilon: float, seed: int | None = None,
                          c: float = DEFAULT_C, mode: str = "argmax") -> EstimationResult:
    """Bounded-output mean estimation with ``M = ceil(log2(c / epsilon))`` ancillas.

    ``prepare`` is a :class:`StateVector`, an amplitude array, or a zero-argument
    callable returning either.  The query count is ``2**M``, i.e. Theta(1/epsilon).
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    state = prepare() if callable(prepare) else prepare
    return estimate_amplitude(state, projector, ancillas_for(epsilon, c), seed, mode)


@dataclass(frozen=True)
class ReadoutNorms:
    """Classical side information for the l2 -> l1 conversion."""

    l2_norm: float
    delta_x: float
    total_heat: float = 1.0


@dataclass(frozen=True)
class ReadoutResult:
    estimate: float
    queries: int
    combined_queries: int
    model_cost: float
    amplitude: EstimationResult | None


def heat_readout(solution_state, region, norms: ReadoutNorms, epsilon: float,
                 seed: int | None = None, prep_cost: int = 1, m: int | None = None,
                 c: float = DEFAULT_C, mode: str = "argmax") -> ReadoutResult:
    """Estimate ``H_S = dx * sum_{j in S} u_j`` from a state encoding ``u / ||u||``.

    The good projector is ``|s><s|`` with ``|s>`` the uniform superposition over
    the region's grid points, so ``a = (sum_S u)^2 / (|S| ||u||^2)`` and
    ``H_S = dx ||u|| sqrt(|S| a)`` (heat is assumed non-negative on S).  Because
    ``H_S`` is ``F sin(theta)`` with ``F = dx ||u|| sqrt|S|``, an ancilla count of
    ``ceil(log2(c F / epsilon))`` keeps the error below ``epsilon pi / c``.
    """
    psi = (solution_state.amplitudes if isinstance(solution_state, StateVector)
           else np.asarray(solution_state, dtype=complex))
    idx = np.asarray(list(region), dtype=int)
    m = m if m is not None else psi.size
    model = cost_cas_readout(m, epsilon) if 0 < epsilon < 1 else float("nan")
    if idx.size == 0:
        return ReadoutResult(0.0, 0, 0, model, None)
    s = np.zeros(psi.size)
    s[idx] = 1.0 / math.sqrt(idx.size)
    F = norms.delta_x * norms.l2_norm * math.sqrt(idx.size)
    eps_amp = min(epsilon / F, 0.5)
    res = mean_estimate_bounded(psi, lambda v: s * np.vdot(s, v), eps_amp, seed, c, mode)
    est = F * math.sqrt(res.estimate)
    return ReadoutResult(est, res.query_count, res.query_count * prep_cost, model, res)
