"""Dense statevector emulation of the adiabatic quantum-walk linear-system solver.

The system ``A x = b`` is padded to a power-of-two dimension ``d`` (identity on the
padding, zeros in ``b``), block-encoded at unit spectral norm, and embedded in the
``2d``-dimensional Hamiltonian

    H(s) = [[0, Q_b A(s)], [A(s)^H Q_b, 0]],   A(s) = (1 - s) I + s A/||A||,

with ``Q_b = I - |b><b|``.  For invertible ``A(s)`` the kernel of ``H(s)`` is
spanned by ``|0>|b>`` (constant in ``s``, never reached from the start state) and
``|1>|A(s)^{-1} b>``, which moves from ``|1>|b>`` at ``s = 0`` to ``|1>|x>`` at
``s = 1``.  The first qubit is the "solution register" flag read by
:func:`extract_solution`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chebyshev import filter_weights

UNITARITY_TOL = 1e-10
MAX_DILATED_DIM = 2**12


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        n = a.size
        if a.ndim != 1 or n == 0 or n & (n - 1):
            raise ValueError(f"state dimension must be a power of two, got {a.shape}")
        nrm = np.linalg.norm(a)
        if abs(nrm - 1.0) > UNITARITY_TOL:
            raise ValueError(f"state is not normalized (norm={nrm:.12g})")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_vector(cls, v, dim: int | None = None) -> "StateVector":
        """Normalize ``v`` and zero-pad it to ``dim`` (default: next power of two)."""
        v = np.asarray(v, dtype=complex).ravel()
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValueError("cannot encode the zero vector")
        dim = dim or _next_pow2(v.size)
        out = np.zeros(dim, dtype=complex)
        out[:v.size] = v / nrm
        return cls(out)

    @property
    def dimension(self) -> int:
        return self.amplitudes.size

    @property
    def num_qubits(self) -> int:
        return self.dimension.bit_length() - 1

    def fidelity(self, other) -> float:
        o = other.amplitudes if isinstance(other, StateVector) else np.asarray(other)
        return float(abs(np.vdot(o, self.amplitudes)) ** 2)


@dataclass(frozen=True)
class BlockEncoding:
    source: np.ndarray
    corner: np.ndarray
    unitary: np.ndarray
    normalization: float
    ancillas: int = 1


def block_encode(A) -> BlockEncoding:
    """Unitary dilation ``[[A', S_L], [S_R, -A'^H]]`` of ``A' = A / ||A||``.

    The defect operators ``S_L = sqrt(I - A'A'^H)`` and ``S_R = sqrt(I - A'^H A')``
    are assembled from the SVD of ``A'`` with the singular values rescaled so the
    largest is exactly 1, which keeps the dilation unitary to rounding.
    """
    A = np.atleast_2d(np.asarray(A))
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"block encoding needs a square matrix, got {A.shape}")
    U, s, Vh = np.linalg.svd(A)
    norm = float(s[0])
    if norm == 0:
        raise ValueError("cannot block-encode the zero matrix")
    sig = np.minimum(s / norm, 1.0)
    defect = np.sqrt((1.0 - sig) * (1.0 + sig))
    V = Vh.conj().T
    corner = (U * sig) @ Vh
    top_right = (U * defect) @ U.conj().T
    bottom_left = (V * defect) @ Vh
    unitary = np.block([[corner, top_right], [bottom_left, -corner.conj().T]])
    return BlockEncoding(A.copy(), corner, unitary, norm)


@dataclass(frozen=True)
class HamiltonianPath:
    """Linear interpolation ``H(s) = (1 - s) H0 + s H1``.

    ``system``, ``rhs`` and ``encoding`` are set by :func:`build_hamiltonian_path`
    and left ``None`` for paths built directly from two Hermitian endpoints.
    """

    H0: np.ndarray
    H1: np.ndarray
    system: np.ndarray | None = None
    rhs: np.ndarray | None = None
    encoding: BlockEncoding | None = None
    rhs_normalized: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("H0", "H1"):
            H = np.asarray(getattr(self, name), dtype=complex)
            if H.ndim != 2 or H.shape[0] != H.shape[1] or not np.allclose(H, H.conj().T,
                                                                          atol=1e-12):
                raise ValueError(f"{name} must be a square Hermitian matrix")
            object.__setattr__(self, name, H)
        if self.H0.shape != self.H1.shape:
            raise ValueError("endpoint Hamiltonians differ in shape")

    def __call__(self, s: float) -> np.ndarray:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"path parameter outside [0, 1]: {s}")
        return (1.0 - s) * self.H0 + s * self.H1

    @property
    def dimension(self) -> int:
        return self.H0.shape[0]

    @property
    def register_dim(self) -> int:
        """Padded dimension ``d`` of the solution register."""
        return self.dimension // 2

    def derivative_norm(self) -> float:
        """Spectral norm of dH/ds = H1 - H0."""
        return float(np.linalg.norm(self.H1 - self.H0, 2))

    def _require_system(self):
        if self.system is None:
            raise ValueError("path was not built from a linear system")

    def interpolated_system(self, s: float) -> np.ndarray:
        self._require_system()
        d = self.register_dim
        return (1.0 - s) * np.eye(d) + s * self._padded_corner()

    def _padded_corner(self) -> np.ndarray:
        d, n = self.register_dim, self.system.shape[0]
        out = np.eye(d, dtype=complex)
        out[:n, :n] = self.encoding.corner
        return out

    def initial_state(self) -> StateVector:
        """Encoded right-hand side ``|1>|b>``."""
        self._require_system()
        v = np.zeros(self.dimension, dtype=complex)
        v[self.register_dim:] = self.rhs_normalized
        return StateVector(v)

    def zero_state(self, s: float) -> StateVector:
        """Normalized zero-energy state ``|1>|A(s)^{-1} b>`` that the evolution tracks."""
        self._require_system()
        x = np.linalg.solve(self.interpolated_system(s), self.rhs_normalized)
        v = np.zeros(self.dimension, dtype=complex)
        v[self.register_dim:] = x / np.linalg.norm(x)
        return StateVector(v)

    def target_state(self) -> StateVector:
        return self.zero_state(1.0)


def build_hamiltonian_path(A, b) -> HamiltonianPath:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError("A must be square and b must match its dimension")
    if not np.any(b):
        raise ValueError("right-hand side must be nonzero")
    d = _next_pow2(n)
    if 2 * d > MAX_DILATED_DIM:
        raise ValueError(f"dilated dimension {2 * d} exceeds desk-scale cap {MAX_DILATED_DIM}")
    enc = block_encode(A)
    corner = np.eye(d, dtype=complex)
    corner[:n, :n] = enc.corner
    bbar = np.zeros(d, dtype=complex)
    bbar[:n] = b / np.linalg.norm(b)
    Qb = np.eye(d) - np.outer(bbar, bbar.conj())
    zero = np.zeros((d, d), dtype=complex)

    def dilate(As):
        X = Qb @ As
        return np.block([[zero, X], [X.conj().T, zero]])

    return HamiltonianPath(dilate(np.eye(d, dtype=complex)), dilate(corner),
                           system=A.copy(), rhs=b.copy(), encoding=enc, rhs_normalized=bbar)


def _eigh(path: HamiltonianPath, s: float):
    return np.linalg.eigh(path(s))


def walk_step(path: HamiltonianPath, s: float, delta_t_w: float) -> np.ndarray:
    """``W(s) = exp(i H(s) dt)`` from the Hermitian eigendecomposition."""
    w, V = _eigh(path, s)
    return (V * np.exp(1j * w * delta_t_w)) @ V.conj().T


@dataclass(frozen=True)
class WalkSchedule:
    T: int
    dt_walk: float = 1.0
    eps_state: float | None = None

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("step count must be non-negative")
        if not self.dt_walk > 0:
            raise ValueError("walk step duration must be positive")

    def parameters(self) -> np.ndarray:
        """Linear schedule s_m = m / T for m = 0..T-1."""
        return np.arange(self.T) / self.T if self.T else np.zeros(0)


@dataclass(frozen=True)
class AdiabaticRun:
    state: StateVector
    overlaps: tuple[float, ...]
    walk_steps: int
    max_norm_drift: float


def adiabatic_evolve(path: HamiltonianPath, schedule: WalkSchedule,
                     initial: StateVector | None = None, *,
                     track_overlaps: bool = True) -> AdiabaticRun:
    """Apply ``prod_{m=0}^{T-1} W(m/T)`` (rightmost factor first).

    ``overlaps[m]`` is ``|<z(s_m)|psi_m>|^2`` with ``z(s)`` the moving zero-energy
    state, recorded after step ``m`` when the path came from a linear system.
    """
    state = path.initial_state() if initial is None else initial
    psi = state.amplitudes.copy()
    overlaps, drift = [], 0.0
    track = track_overlaps and path.system is not None
    for s in schedule.parameters():
        w, V = _eigh(path, s)
        psi = V @ (np.exp(1j * w * schedule.dt_walk) * (V.conj().T @ psi))
        drift = max(drift, abs(np.linalg.norm(psi) - 1.0))
        if track:
            overlaps.append(float(abs(np.vdot(path.zero_state(s).amplitudes, psi)) ** 2))
    psi /= np.linalg.norm(psi)
    return AdiabaticRun(StateVector(psi), tuple(overlaps), schedule.T, drift)


def spectral_gap(path: HamiltonianPath, s: float, zero_tol: float = 1e-9) -> float:
    """Smallest nonzero ``|eigenvalue|`` of H(s)."""
    w = np.abs(np.linalg.eigvalsh(path(s)))
    nonzero = w[w > zero_tol * max(1.0, w.max())]
    if nonzero.size == 0:
        return 0.0
    return float(nonzero.min())


def minimum_gap(path: HamiltonianPath, points: int = 33) -> float:
    return min(spectral_gap(path, s) for s in np.linspace(0.0, 1.0, points))


def adiabatic_bound(derivative_norm: float, gap: float, T: int) -> float:
    """``||dH/ds|| / (T gap^2)``."""
    if gap <= 0:
        raise ValueError("spectral gap closes; adiabatic bound undefined")
    if T <= 0:
        raise ValueError("bound needs at least one walk step")
    return derivative_norm / (T * gap * gap)


def adiabatic_error_bound(path: HamiltonianPath, schedule: WalkSchedule,
                          points: int = 33) -> float:
    return adiabatic_bound(path.derivative_norm(), minimum_gap(path, points), schedule.T)


def walk_step_cost(kappa: float, eps_state: float, c: float = 1.0) -> float:
    """Step-count model ``c kappa ln(1/eps)`` for the tuned schedule."""
    if not 0 < eps_state < 1:
        raise ValueError("eps_state must lie in (0, 1)")
    return c * kappa * math.log(1.0 / eps_state)


def filter_step(path: HamiltonianPath) -> float:
    """Walk duration that maps the largest |eigenvalue| of H(1) to phase pi."""
    return float(np.pi / np.abs(np.linalg.eigvalsh(path.H1)).max())


def chebyshev_filter(state: StateVector, walk_at_s1: np.ndarray, weights=None, *,
                     renormalize: bool = True):
    """Apply ``sum_j w_j W^j / sum_j w_j``.

    Default weights are the 32-tap, 40 dB Dolph-Chebyshev window.  With
    ``renormalize=False`` the raw (sub-normalized) vector is returned instead of a
    :class:`StateVector`.
    """
    w = filter_weights() if weights is None else np.asarray(weights, dtype=float)
    total = w.sum()
    if not np.any(w) or total == 0:
        raise ValueError("filter weights must not all vanish")
    w = w / total
    psi = state.amplitudes
    acc = np.zeros_like(psi)
    cur = psi.copy()
    for j, wj in enumerate(w):
        if j:
            cur = walk_at_s1 @ cur
        acc += wj * cur
    if not renormalize:
        return acc
    nrm = np.linalg.norm(acc)
    if nrm == 0:
        raise ValueError("filter annihilated the state")
    return StateVector(acc / nrm)


@dataclass(frozen=True)
class ExtractedSolution:
    values: np.ndarray
    normalized: np.ndarray
    success_probability: float
    residual: float
    beta: complex
    fidelity: float


def extract_solution(state: StateVector, path: HamiltonianPath,
                     reference: np.ndarray | None = None) -> ExtractedSolution:
    """Post-select the solution register and rescale to physical units.

    ``values`` solves ``A u = b`` up to the emulation error: the normalized readout
    ``x_hat`` satisfies ``A x_hat ~ beta b`` for the least-squares ``beta`` and
    ``values = x_hat / beta``.
    """
    path._require_system()
    A, b = path.system, path.rhs
    n, d = A.shape[0], path.register_dim
    reg = state.amplitudes[d:d + n]
    mass = float(np.vdot(reg, reg).real)
    if mass < 1e-6:
        raise ValueError(f"post-selection failed: solution-register mass {mass:.3g}")
    xh = reg / np.sqrt(mass)
    Ax = A @ xh
    beta = np.vdot(b, Ax) / np.vdot(b, b)
    residual = float(np.linalg.norm(Ax - beta * b))
    if reference is None:
        reference = np.linalg.solve(A, b)
    ref = np.asarray(reference, dtype=complex)
    ref = ref / np.linalg.norm(ref)
    fidelity = float(abs(np.vdot(ref, xh)) ** 2)
    values = np.real(xh / beta) if beta != 0 else np.zeros(n)
    return ExtractedSolution(values, xh, mass, residual, complex(beta), fidelity)
