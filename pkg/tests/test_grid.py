import math
import warnings

import numpy as np
import pytest
import scipy.integrate
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from hypothesis import given, settings, strategies as st

from qheat.grid import (
    BandMatrix,
    Grid1D,
    HeatProblem,
    StabilityWarning,
    analytic_solution,
    assemble_block_system,
    build_laplacian,
    heat_in_region,
    load_problem,
    make_problem,
    march_explicit,
    region_indices,
    semidiscrete_reference,
    solve_block_direct,
    spectral_solve,
    step_explicit,
)


def _problem(m, n, lam, initial="sine:1", boundary=(0.0, 0.0), normalize=False):
    return make_problem(m, n_steps=n, lam=lam, initial=initial, boundary=boundary,
                        normalize=normalize)


def test_grid_positions_and_spacing():
    g = Grid1D(0.0, 1.0, 3, 1.0, 4)
    assert g.delta_x == 0.25
    assert g.delta_t == 0.25
    np.testing.assert_allclose(g.x, [0.25, 0.5, 0.75])


@pytest.mark.parametrize("kw", [dict(m=0), dict(n_steps=-1), dict(x_end=0.0)])
def test_grid_rejects_bad_input(kw):
    args = dict(x0=0.0, x_end=1.0, m=3, t_final=1.0, n_steps=4)
    args.update(kw)
    with pytest.raises(ValueError):
        Grid1D(**args)


def test_from_cfl_picks_exact_step_count():
    g = Grid1D.from_cfl(0.0, 1.0, 3, t_final=1 / 8, lam=0.5)
    # dx = 1/4, dt = 1/32 -> 4 steps, not 5
    assert g.n_steps == 4
    assert g.cfl(1.0) == pytest.approx(0.5)


def test_normalization_gives_unit_heat_and_keeps_scale():
    p = make_problem(10, n_steps=3, lam=0.25, initial="spike", boundary=(1.0, 2.0))
    assert p.grid.delta_x * p.initial.sum() == pytest.approx(1.0, abs=1e-12)
    assert p.boundary == (p.scale, 2 * p.scale)


def test_normalization_rejects_zero_heat():
    g = Grid1D(0.0, 1.0, 2, 1.0, 1)
    with pytest.raises(ValueError):
        HeatProblem(g, 1.0, np.array([1.0, -1.0]))


def test_laplacian_spec_examples():
    g = Grid1D(0.0, 1.0, 3, 1 / 32, 1)
    p = HeatProblem(g, 1.0, np.ones(3), normalize=False)
    L = build_laplacian(p)
    np.testing.assert_allclose(L.main, [-1, -1, -1])
    np.testing.assert_allclose(L.lower, [0.5, 0.5])
    assert L.is_symmetric()
    assert L.to_dense()[1].sum() == pytest.approx(0.0)

    g1 = Grid1D(0.0, 1.0, 1, 0.3 / 4, 1)
    L1 = build_laplacian(HeatProblem(g1, 1.0, np.ones(1), normalize=False))
    np.testing.assert_allclose(L1.to_dense(), [[-0.6]])


def test_laplacian_warns_above_half():
    p = _problem(4, 2, 0.6)
    with pytest.warns(StabilityWarning):
        L = build_laplacian(p)
    assert L.unstable


def test_band_matrix_against_sparse_diags():
    lam = 0.3
    L = build_laplacian(_problem(7, 1, lam))
    ref = sp.diags([lam, -2 * lam, lam], [-1, 0, 1], shape=(7, 7)).toarray()
    np.testing.assert_allclose(L.to_dense(), ref)
    np.testing.assert_allclose(L.to_sparse().toarray(), ref)
    v = np.random.default_rng(0).standard_normal(7)
    np.testing.assert_allclose(L.matvec(v), ref @ v, atol=1e-14)


def _laplacian(lam, m):
    return BandMatrix(np.full(m - 1, lam), np.full(m, -2 * lam), np.full(m - 1, lam), lam)


def test_step_explicit_spec_examples():
    L = _laplacian(0.5, 3)
    np.testing.assert_allclose(step_explicit(np.array([0.0, 1, 0]), L), [0.5, 0, 0.5])
    np.testing.assert_allclose(step_explicit(np.ones(3), L), [0.5, 1, 0.5])
    m = 6
    lin = np.arange(1, m + 1) / (m + 1)
    np.testing.assert_allclose(step_explicit(lin, _laplacian(0.4, m), (0.0, 1.0)), lin,
                               atol=1e-15)


def test_block_structure_identity_diagonal_and_propagator_subdiagonal():
    p = _problem(3, 2, 0.25)
    A = assemble_block_system(p).to_dense()
    I3 = np.eye(3)
    M = I3 + build_laplacian(p).to_dense()
    np.testing.assert_allclose(A[:3, :3], I3)
    np.testing.assert_allclose(A[3:6, 3:6], I3)
    np.testing.assert_allclose(A[3:6, :3], -M)
    np.testing.assert_allclose(A[6:9, 3:6], -M)
    assert not np.any(A[6:9, :3])


def test_block_system_m1_n1_half():
    g = Grid1D(0.0, 1.0, 1, 1 / 8, 1)
    p = HeatProblem(g, 1.0, np.ones(1), normalize=False)
    assert p.lam == pytest.approx(0.5)
    traj = solve_block_direct(assemble_block_system(p))
    np.testing.assert_allclose(traj.values, [[1.0], [0.0]], atol=1e-15)


def test_block_system_no_steps_is_identity():
    p = make_problem(5, n_steps=0, t_final=0.0, initial="spike")
    s = assemble_block_system(p)
    np.testing.assert_array_equal(s.to_dense(), np.eye(5))
    np.testing.assert_array_equal(solve_block_direct(s).values[0], p.initial)


def test_block_solve_against_sparse_direct_solver():
    p = _problem(6, 5, 0.35, initial="spike", boundary=(0.2, -0.1))
    s = assemble_block_system(p)
    ref = spla.spsolve(sp.csc_matrix(s.to_dense()), s.rhs)
    np.testing.assert_allclose(s.solve(), ref, atol=1e-13)
    y = np.random.default_rng(3).standard_normal(s.dimension)
    np.testing.assert_allclose(s.solve_transpose(y), np.linalg.solve(s.to_dense().T, y),
                               atol=1e-12)


def test_matvec_and_rmatvec_match_dense():
    s = assemble_block_system(_problem(5, 4, 0.3))
    A = s.to_dense()
    v = np.random.default_rng(1).standard_normal(s.dimension)
    np.testing.assert_allclose(s.matvec(v), A @ v, atol=1e-14)
    np.testing.assert_allclose(s.rmatvec(v), A.T @ v, atol=1e-14)
    np.testing.assert_allclose(s.to_sparse().toarray(), A)


def test_m4_n8_spike_equals_marching():
    p = _problem(4, 8, 0.25, initial="spike")
    direct = solve_block_direct(assemble_block_system(p)).values
    assert np.abs(direct - march_explicit(p).values).max() <= 1e-12


@settings(max_examples=40, deadline=None)
@given(m=st.integers(1, 24), n=st.integers(0, 24), lam=st.floats(0.01, 0.5),
       seed=st.integers(0, 2**16), bl=st.floats(-1, 1), br=st.floats(-1, 1))
def test_block_solve_equals_marching(m, n, lam, seed, bl, br):
    u0 = np.random.default_rng(seed).standard_normal(m)
    g = Grid1D(0.0, 1.0, m, 1.0 if n else 0.0, n)
    if n:
        g = Grid1D(0.0, 1.0, m, lam * g.delta_x**2 * n, n)
    p = HeatProblem(g, 1.0, u0, (bl, br), normalize=False)
    direct = solve_block_direct(assemble_block_system(p)).values
    assert np.abs(direct - march_explicit(p).values).max() <= 1e-12


@settings(max_examples=30, deadline=None)
@given(m=st.integers(2, 20), n=st.integers(1, 30), lam=st.floats(0.01, 0.5),
       seed=st.integers(0, 2**16))
def test_discrete_maximum_principle(m, n, lam, seed):
    rng = np.random.default_rng(seed)
    bl, br = rng.uniform(-1, 1, 2)
    g = Grid1D(0.0, 1.0, m, lam * (1 / (m + 1)) ** 2 * n, n)
    p = HeatProblem(g, 1.0, rng.uniform(-1, 1, m), (bl, br), normalize=False)
    vals = march_explicit(p).values
    for prev, nxt in zip(vals, vals[1:]):
        lo = min(prev.min(), bl, br)
        hi = max(prev.max(), bl, br)
        assert np.all(nxt >= lo - 1e-14) and np.all(nxt <= hi + 1e-14)


@settings(max_examples=30, deadline=None)
@given(m=st.integers(2, 20), n=st.integers(1, 30), lam=st.floats(0.01, 0.5))
def test_total_heat_never_increases(m, n, lam):
    p = make_problem(m, n_steps=n, lam=lam, initial="spike")
    vals = march_explicit(p).values
    heats = [heat_in_region(v, region_indices(m), p.grid.delta_x) for v in vals]
    assert heats[0] == pytest.approx(1.0, abs=1e-12)
    assert all(b <= a + 1e-14 for a, b in zip(heats, heats[1:]))


def test_spectral_solve_matches_marching():
    p = _problem(13, 40, 0.4, initial="spike", boundary=(0.3, -0.2))
    assert np.abs(spectral_solve(p) - march_explicit(p).final).max() <= 1e-13


def test_analytic_solution_at_zero_and_symmetry():
    g = Grid1D(0.0, 1.0, 9, 1.0, 1)
    np.testing.assert_allclose(analytic_solution(1, 1.0, g, 0.0), np.sin(np.pi * g.x))
    u = analytic_solution(2, 1.0, g, 0.1)
    # x_5 = 1/2 is a node of the second mode
    assert abs(u[4]) < 1e-15
    with pytest.raises(ValueError):
        analytic_solution(0, 1.0, g, 0.0)


def test_second_order_convergence_against_analytic_mode():
    errs = []
    for m in (15, 31, 63):
        p = make_problem(m, lam=0.25, t_final=0.05, initial="sine:1", normalize=False)
        ref = analytic_solution(1, 1.0, p.grid, 0.05)
        errs.append(np.abs(march_explicit(p).final - ref).max())
    for a, b in zip(errs, errs[1:]):
        assert 1.7 <= math.log2(a / b) <= 2.3


def test_semidiscrete_reference_against_ode_integrator():
    p = _problem(7, 1, 0.25, initial="spike", boundary=(0.5, 0.1))
    m, dx = p.m, p.grid.delta_x
    c = 1.0 / dx**2

    def rhs(t, u):
        pad = np.concatenate(([p.boundary[0]], u, [p.boundary[1]]))
        return c * (pad[2:] + pad[:-2] - 2 * pad[1:-1])

    sol = scipy.integrate.solve_ivp(rhs, (0, 0.02), p.initial, method="DOP853",
                                    rtol=1e-12, atol=1e-13, t_eval=[0.0, 0.01, 0.02])
    ours = semidiscrete_reference(p, [0.0, 0.01, 0.02])
    np.testing.assert_allclose(ours, sol.y.T, atol=1e-9)


def test_heat_in_region_examples():
    p = make_problem(8, n_steps=6, lam=0.25, initial="sine:1")
    vals = march_explicit(p).values
    dx = p.grid.delta_x
    assert heat_in_region(vals[0], region_indices(8), dx) == pytest.approx(1.0, abs=1e-12)
    assert heat_in_region(vals[0], [], dx) == 0.0
    for v in vals:
        full = heat_in_region(v, region_indices(8), dx)
        assert heat_in_region(v, region_indices(8, "left"), dx) == pytest.approx(
            0.5 * full, abs=1e-10)
    with pytest.raises(IndexError):
        heat_in_region(vals[0], [8], dx)


def test_trajectory_csv_has_one_row_per_point(tmp_path):
    p = make_problem(3, n_steps=2, lam=0.25)
    traj = march_explicit(p)
    out = tmp_path / "t.csv"
    text = traj.to_csv(out)
    lines = text.strip().splitlines()
    assert lines[0] == "t,x,u"
    assert len(lines) == 1 + 3 * 3
    assert out.read_text() == text


def test_load_problem_from_yaml(tmp_path):
    cfg = tmp_path / "p.yaml"
    cfg.write_text("problem:\n  m: 6\n  n_steps: 4\n  lambda: 0.2\n  initial: spike\n")
    p = load_problem(cfg)
    assert p.m == 6 and p.grid.n_steps == 4
    assert p.lam == pytest.approx(0.2)


def test_stability_warning_does_not_stop_marching():
    p = _problem(5, 3, 0.7)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        march_explicit(p)
    assert any(issubclass(x.category, StabilityWarning) for x in w)
