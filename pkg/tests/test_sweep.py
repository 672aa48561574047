import math
from dataclasses import replace
from pathlib import Path

import pytest

from qheat.grid import (
    assemble_block_system,
    heat_in_region,
    make_problem,
    march_explicit,
    region_indices,
    solve_block_direct,
)
from qheat.sweep import (
    ConfigError,
    CostRecord,
    SweepConfig,
    config_from_dict,
    load_config,
    log_grid,
    model_records,
    records_from_csv,
    records_to_csv,
    run_cell,
    run_sweep,
    timings_to_csv,
)

GOLDEN = Path(__file__).parent / "golden"


def test_csv_round_trip():
    recs = [CostRecord("fft", 4, 0.1, 0, 3.1622776601683795, 8, 0.5, 0.5000000000000001,
                       1.1102230246251565e-16),
            CostRecord("cas", 2, 0.05, 1, math.nan, 0, math.nan, math.nan, math.nan,
                       "failed", "ValueError: bad, really", 0.3)]
    text = records_to_csv(recs)
    assert "wall_time" not in text.splitlines()[0]
    back = records_from_csv(text)
    assert back[0] == recs[0]
    assert back[1].status == "failed" and back[1].message == recs[1].message
    assert records_to_csv(back) == text


def test_timings_kept_apart(tmp_path):
    r = CostRecord("fft", 4, 0.1, 0, 1.0, 1, 0.0, 0.0, 0.0, wall_time=0.25)
    assert timings_to_csv([r]).splitlines()[1] == "fft,4,0.1,0,0.25"
    p = tmp_path / "r.csv"
    records_to_csv([r], p, include_wall_time=True)
    assert records_from_csv(p)[0].wall_time == 0.25


@pytest.mark.parametrize("bad", [
    {"methods": ["hhl"], "m": [2], "epsilon": [0.1]},
    {"methods": ["fft"], "m": [], "epsilon": [0.1]},
    {"methods": ["fft"], "m": [2], "epsilon": [1.5]},
    {"methods": ["fft"], "m": [1], "epsilon": [0.1]},
    {"methods": ["fft"], "m": [2], "epsilon": [0.1], "colour": "red"},
    {"methods": ["fft"], "m": [2], "epsilon": [0.1], "problem": {"region": "middle"}},
    {"methods": ["fft"], "m": ["two"], "epsilon": [0.1]},
    {"methods": ["fft"], "m": [2], "epsilon": [0.1], "workers": 0},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        config_from_dict(bad)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    p = tmp_path / "broken.yaml"
    p.write_text("methods: [fft\n")
    with pytest.raises(ConfigError):
        load_config(p)
    cfg = load_config(GOLDEN / "sweep_small.yaml")
    assert cfg.methods == ("classical", "fft", "cas", "osk")


def test_single_classical_cell_matches_direct():
    cfg = SweepConfig(("classical",), (8,), (0.1,))
    recs = run_sweep(cfg)
    assert len(recs) == 1
    r = recs[0]
    p = make_problem(8, n_steps=8, lam=0.25)
    left = region_indices(8, "left")
    dx = p.grid.delta_x
    assert r.estimate == heat_in_region(march_explicit(p).final, left, dx)
    ref = heat_in_region(solve_block_direct(assemble_block_system(p)).final, left, dx)
    assert r.achieved_error == pytest.approx(abs(r.estimate - ref), abs=1e-15)
    assert r.achieved_error <= 1e-12


def test_fft_cell_matches_reference():
    r = run_cell(SweepConfig(("fft",), (8,), (0.01,)), ("fft", 8, 0.01, 0))
    assert r.ok and r.achieved_error <= 1e-12 and r.predicted_cost == pytest.approx(10.0)


def test_cas_walk_steps_linear_in_T():
    q = []
    for T in (32, 64, 128):
        cfg = SweepConfig(("cas",), (2,), (0.1,), cas_walk_steps=T)
        r = run_cell(cfg, ("cas", 2, 0.1, 0))
        assert r.ok
        q.append(r.queries)
    d1, d2 = q[1] - q[0], q[2] - q[1]
    assert d1 > 0 and d2 == 2 * d1


def test_failed_cell_is_recorded_and_sweep_continues():
    cfg = SweepConfig(("cas", "fft"), (8,), (0.1,))
    recs = run_sweep(cfg)
    by = {r.method: r for r in recs}
    assert by["cas"].status == "failed" and "capped" in by["cas"].message
    assert by["fft"].ok


def test_golden_csv_regenerates_bytewise():
    cfg = load_config(GOLDEN / "sweep_small.yaml")
    cfg = replace(cfg, seeds=(11,))
    text = records_to_csv(run_sweep(cfg))
    assert text == (GOLDEN / "sweep_small.csv").read_text()


def test_model_records_and_grid():
    g = log_grid(1e-4, 1e-1)
    assert len(g) == 16 and g[0] == pytest.approx(1e-4) and g[-1] == pytest.approx(0.1)
    recs = model_records(["fft_classical"], [4], [0.01])
    assert recs[0].predicted_cost == pytest.approx(10.0)
