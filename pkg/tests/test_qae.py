import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qheat.grid import heat_in_region, make_problem, march_explicit, region_indices
from qheat.qae import (
    MAX_ANCILLAS,
    ReadoutNorms,
    _ancilla_distribution,
    _projector_fn,
    amplitude_estimate,
    ancillas_for,
    build_mean_oracle,
    estimate_amplitude,
    flag_mask,
    grover_apply,
    grover_matrix,
    heat_readout,
    mean_estimate_bounded,
    prepare_psi,
    preparation_matrix,
    qae_error_bound,
)
from qheat.qlsp import StateVector


def _basis(D, k):
    e = np.zeros(D)
    e[k] = 1.0
    return e


@pytest.mark.parametrize("value, out_flag", [(1.0, 1), (0.0, 0)])
def test_oracle_extreme_values(value, out_flag):
    o = build_mean_oracle(np.full(4, value))
    for i in range(4):
        out = o.apply(_basis(o.dimension, 2 * i + 1))
        np.testing.assert_allclose(np.abs(out), _basis(o.dimension, 2 * i + out_flag))


def test_oracle_half_gives_equal_branches():
    o = build_mean_oracle(np.full(2, 0.5))
    out = o.apply(_basis(o.dimension, 1))
    np.testing.assert_allclose(np.abs(out[:2]), [math.sqrt(0.5)] * 2)
    assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(g=st.lists(st.floats(0, 1), min_size=1, max_size=20))
def test_oracle_unitary_and_self_inverse(g):
    U = build_mean_oracle(g).matrix()
    I = np.eye(U.shape[0])
    assert np.abs(U.T @ U - I).max() <= 1e-12
    assert np.abs(U @ U - I).max() <= 1e-12


def test_printed_oracle_is_not_unitary():
    # the action on |i>|0> as printed has no minus sign; the two image columns
    # then overlap by 2 sqrt(g (1 - g))
    g = 0.3
    col1 = np.array([math.sqrt(1 - g), math.sqrt(g)])   # image of |i>|1> in (flag0, flag1)
    col0 = np.array([math.sqrt(g), math.sqrt(1 - g)])   # printed image of |i>|0>
    assert col0 @ col1 == pytest.approx(2 * math.sqrt(g * (1 - g)))
    B = build_mean_oracle([g]).blocks()[0]
    assert B[:, 0] @ B[:, 1] == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(B[:, 1], col1)


def test_oracle_input_checks_and_padding():
    with pytest.raises(ValueError):
        build_mean_oracle([0.2, 1.5])
    with pytest.raises(ValueError):
        build_mean_oracle([])
    o = build_mean_oracle([0.2, 0.4, 0.6, 0.8, 1.0])
    assert o.size == 8 and o.n_samples == 5
    assert o.padding_ratio == pytest.approx(1.6)
    assert o.mean == pytest.approx(0.6)
    assert o.padded_mean * o.padding_ratio == pytest.approx(o.mean)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 64))
def test_prepare_psi_amplitudes_and_flag_mass(seed, n):
    g = np.random.default_rng(seed).random(n)
    o = build_mean_oracle(g)
    psi = prepare_psi(o).amplitudes
    N = o.size
    np.testing.assert_allclose(np.abs(psi[1::2]), np.sqrt(o.g / N), atol=1e-12)
    assert np.sum(np.abs(psi[1::2]) ** 2) == pytest.approx(o.padded_mean, abs=1e-12)


def test_prepare_psi_matches_dense_circuit():
    o = build_mean_oracle(np.random.default_rng(4).random(8))
    dense = preparation_matrix(o) @ _basis(o.dimension, 1)
    np.testing.assert_allclose(prepare_psi(o).amplitudes, dense, atol=1e-13)


@pytest.mark.parametrize("value, mass", [(1.0, 1.0), (0.0, 0.0)])
def test_prepare_psi_extremes(value, mass):
    psi = prepare_psi(build_mean_oracle(np.full(4, value))).amplitudes
    assert np.sum(np.abs(psi[1::2]) ** 2) == pytest.approx(mass, abs=1e-15)


def test_grover_matvec_matches_dense_operator():
    o = build_mean_oracle(np.random.default_rng(5).random(4))
    A = preparation_matrix(o)
    good = flag_mask(o)
    Qd = grover_matrix(A, good)
    psi = prepare_psi(o).amplitudes
    Q = grover_apply(psi, _projector_fn(good, psi.size))
    for k in range(o.dimension):
        np.testing.assert_allclose(Q(_basis(o.dimension, k).astype(complex)), Qd[:, k],
                                   atol=1e-12)


def _dense_qae_distribution(A, good, M):
    """Full circuit: H on ancillas, controlled Q^(2^k), inverse QFT on ancillas."""
    Q = grover_matrix(A, good)
    psi = A[:, 1]
    K = 1 << M
    joint = np.empty((K, psi.size), dtype=complex)
    cur = psi.astype(complex)
    for y in range(K):
        joint[y] = cur / math.sqrt(K)
        cur = Q @ cur
    y = np.arange(K)
    iqft = np.exp(-2j * np.pi * np.outer(y, y) / K) / math.sqrt(K)
    return np.sum(np.abs(iqft @ joint) ** 2, axis=1)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("M", [3, 5])
def test_plane_emulation_matches_dense_circuit(seed, M):
    o = build_mean_oracle(np.random.default_rng(seed).random(4))
    A = preparation_matrix(o)
    good = flag_mask(o)
    psi = A[:, 1]
    p, a = _ancilla_distribution(psi, _projector_fn(good, psi.size), M)
    np.testing.assert_allclose(p, _dense_qae_distribution(A, good, M), atol=1e-12)
    assert a == pytest.approx(o.padded_mean, abs=1e-12)


@pytest.mark.parametrize("value", [0.0, 1.0])
def test_exact_endpoints(value):
    r = amplitude_estimate(build_mean_oracle([value] * 4), 6)
    assert r.estimate == value


def test_mean_quarter_within_bound():
    g = np.tile([0.0, 0.25, 0.5], 4)[:8]
    g = g * 0.25 / g.mean()
    o = build_mean_oracle(g)
    r = amplitude_estimate(o, 8)
    bound = 2 * math.pi * math.sqrt(0.1875) / 256 + math.pi**2 / 65536
    assert bound == pytest.approx(0.0108, abs=1e-4)
    assert abs(r.estimate - 0.25) <= bound


@pytest.mark.parametrize("a", np.round(np.arange(0, 1.01, 0.1), 10))
@pytest.mark.parametrize("M", [4, 6, 8, 10, 12])
def test_error_bound_grid(a, M):
    r = amplitude_estimate(build_mean_oracle([a]), M)
    assert abs(r.estimate - a) <= qae_error_bound(a, M) + 1e-15


def test_query_accounting_and_range():
    r = amplitude_estimate(build_mean_oracle([0.3, 0.7]), 7)
    assert r.grover_calls == 127 and r.preparations == 1 and r.query_count == 128
    for M in (0, MAX_ANCILLAS + 1):
        with pytest.raises(ValueError):
            amplitude_estimate(build_mean_oracle([0.3]), M)
    with pytest.raises(ValueError):
        amplitude_estimate(build_mean_oracle([0.3]), 4, mode="bogus")


def test_sampling_mode_is_seeded():
    o = build_mean_oracle(np.random.default_rng(8).random(16))
    runs = [amplitude_estimate(o, 5, seed=3, mode="sample") for _ in range(3)]
    assert len({r.estimate for r in runs}) == 1
    outcomes = {amplitude_estimate(o, 5, seed=s, mode="sample").outcome for s in range(40)}
    assert len(outcomes) > 1


def test_bounded_mean_accounting():
    psi = prepare_psi(build_mean_oracle([0.1, 0.5, 0.2, 0.9]))
    mask = flag_mask(build_mean_oracle([0.1, 0.5, 0.2, 0.9]))
    r1 = mean_estimate_bounded(psi, mask, 0.02)
    r2 = mean_estimate_bounded(lambda: psi, mask, 0.01)
    assert r2.ancillas == r1.ancillas + 1
    assert r2.query_count == 2 * r1.query_count
    assert ancillas_for(0.02) == math.ceil(math.log2(4 * math.pi / 0.02))
    with pytest.raises(ValueError):
        mean_estimate_bounded(psi, mask, 1.5)


def test_bounded_mean_zero_mass():
    psi = np.zeros(8)
    psi[0] = 1.0
    r = mean_estimate_bounded(psi, [5, 6], 0.05)
    assert r.estimate == 0.0


def test_region_quadratic_form_estimate():
    p = make_problem(8, n_steps=8, lam=0.25)
    u = march_explicit(p).final
    x = u / np.linalg.norm(u)
    left = region_indices(8, "left")
    direct = float(np.sum(x[left] ** 2))
    r = mean_estimate_bounded(StateVector.from_vector(x), left, 0.02)
    assert abs(r.estimate - direct) <= 0.02


@pytest.fixture(scope="module")
def solution8():
    p = make_problem(8, n_steps=8, lam=0.25)
    u = march_explicit(p).final
    return p, u


def test_heat_readout_left_half(solution8):
    p, u = solution8
    dx = p.grid.delta_x
    left = region_indices(8, "left")
    res = heat_readout(StateVector.from_vector(u), left,
                       ReadoutNorms(float(np.linalg.norm(u)), dx), 0.02)
    assert abs(res.estimate - heat_in_region(u, left, dx)) <= 0.02
    assert res.model_cost == pytest.approx(8 * math.log(50) / 0.02)


def test_heat_readout_full_and_empty():
    p = make_problem(8, n_steps=0, t_final=0.0)
    u = p.initial
    norms = ReadoutNorms(float(np.linalg.norm(u)), p.grid.delta_x)
    full = heat_readout(StateVector.from_vector(u), region_indices(8), norms, 0.02)
    assert full.estimate == pytest.approx(1.0, abs=0.02)
    empty = heat_readout(StateVector.from_vector(u), [], norms, 0.02)
    assert empty.estimate == 0.0 and empty.queries == 0


def test_heat_readout_queries_double(solution8):
    p, u = solution8
    norms = ReadoutNorms(float(np.linalg.norm(u)), p.grid.delta_x)
    left = region_indices(8, "left")
    q = [heat_readout(StateVector.from_vector(u), left, norms, e, prep_cost=3).queries
         for e in (0.04, 0.02, 0.01)]
    assert abs(q[1] - 2 * q[0]) <= 1 and abs(q[2] - 2 * q[1]) <= 1


def test_estimate_amplitude_accepts_matrix_projector():
    psi = np.array([0.6, 0.8, 0.0, 0.0])
    P = np.diag([0.0, 1.0, 0.0, 0.0])
    r = estimate_amplitude(psi, P, 10)
    assert abs(r.estimate - 0.64) <= qae_error_bound(0.64, 10)
    with pytest.raises(ValueError):
        estimate_amplitude(psi, np.eye(2), 4)
