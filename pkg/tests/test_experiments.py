"""Experiment drivers: record layout, determinism, internal consistency.

wick_exact oracles: w = z = e1 gives 2 + 1 = 3; orthogonal unit vectors give
0 + 1 = 1; w = (1, 2), z = (3, -1) gives 2 * 1 + 5 * 10 = 52.
"""

import json

import numpy as np
import pytest

from bfboost import io as bio
from bfboost.errors import DegenerateDataError
from bfboost.harness.experiments import (
    BOUND_GRID,
    ExperimentConfig,
    boost_experiment,
    bound_experiment,
    corr_experiment,
    format_cell,
    wick_convergence,
    wick_exact,
    wick_mc_check,
    write_csv,
    write_sidecar,
)
from bfboost.harness.synthetic import SyntheticFamily


def small_corr_cfg(**kw):
    base = dict(experiment="corr", seed=3, n=120, d=6, m=24, reps=6)
    base.update(kw)
    return ExperimentConfig(**base)


def test_corr_experiment_layout_and_determinism():
    cfg = small_corr_cfg()
    summary, scatter = corr_experiment(cfg)
    assert len(summary) == 2 * 4  # two default kinds, four cells
    assert len(scatter) == 2 * 4 * 6
    again_summary, again_scatter = corr_experiment(small_corr_cfg())
    assert summary == again_summary
    assert scatter == again_scatter


def test_corr_experiment_summary_consistent_with_scatter():
    summary, scatter = corr_experiment(small_corr_cfg())
    for kind, kappa, phi, corr in summary:
        lows = [r[4] for r in scatter if r[:3] == (kind, kappa, phi)]
        highs = [r[5] for r in scatter if r[:3] == (kind, kappa, phi)]
        assert corr == pytest.approx(float(np.corrcoef(lows, highs)[0, 1]),
                                     rel=1e-12)


def test_corr_experiment_single_cell_and_kind_restriction():
    cfg = small_corr_cfg(kappa=0.4, phi=0.8, sketch_kinds=("uniform",))
    summary, scatter = corr_experiment(cfg)
    assert len(summary) == 1
    assert summary[0][:3] == ("uniform", 0.4, 0.8)
    assert len(scatter) == 6


def test_corr_experiment_rejects_in_range_cell():
    with pytest.raises(DegenerateDataError):
        corr_experiment(small_corr_cfg(kappa=1.0, phi=0.5))


def test_bound_experiment_grid_and_flags():
    cfg = ExperimentConfig(experiment="bound", seed=2, n=150, d=6, m=40,
                           num_sketches=3, sketch_kinds=("gaussian",))
    rows = bound_experiment(cfg)
    assert len(rows) == len(BOUND_GRID) ** 2
    seen = {(r[1], r[2]) for r in rows}
    assert len(seen) == 81
    for row in rows:
        kind, kappa, phi, nu, mu_sel, mu_hind, gap, bound, violation = row
        assert kind == "gaussian"
        assert 0.0 <= nu <= 1.0
        assert gap == pytest.approx(mu_sel - mu_hind, rel=1e-12)
        assert gap >= -1e-15  # hindsight never loses
        assert violation == int(gap > bound)
    assert rows == bound_experiment(cfg)


def boost_cfg(**kw):
    base = dict(experiment="boost", seed=5, n=120, d=6, reps=4, num_sketches=4)
    base.update(kw)
    return ExperimentConfig(**base)


def test_boost_experiment_layout():
    trials, summary = boost_experiment(boost_cfg())
    kinds = 3  # uniform, leverage, leveraged_volume by default
    m_values = 2  # ceil(1.2 d) and 2 d
    assert len(trials) == kinds * m_values * 4
    assert len(summary) == kinds * m_values * 2
    ms = sorted({t[1] for t in trials})
    assert ms == [8, 12]  # ceil(1.2 * 6), 2 * 6
    for t in trials:
        assert t[6] <= t[1]  # high-fidelity queries bounded by m


def test_boost_experiment_summary_matches_trials():
    trials, summary = boost_experiment(boost_cfg())
    for kind, m, method, mn, q1, med, q3, mx, full_err, cp_err in summary:
        col = 3 if method == "bfb" else 4
        errs = np.array([t[col] for t in trials if t[0] == kind and t[1] == m])
        assert mn == pytest.approx(errs.min(), rel=1e-12)
        assert med == pytest.approx(float(np.quantile(errs, 0.5)), rel=1e-12)
        assert mx == pytest.approx(errs.max(), rel=1e-12)
        assert full_err > 0 and cp_err > 0


def test_boost_experiment_reads_file_triple(tmp_path):
    fam = SyntheticFamily(80, 5, seed=9)
    b, b_low = fam.pair(0.3, 0.95)
    pa, pb, pl = (tmp_path / x for x in ("a.bfb1", "b.bfb1", "bl.bfb1"))
    bio.write_bfb1(pa, fam.a)
    bio.write_bfb1(pb, b)
    bio.write_bfb1(pl, b_low)
    cfg = boost_cfg(data_a=str(pa), data_b=str(pb), data_b_low=str(pl),
                    m=10, reps=3, sketch_kinds=("uniform",))
    trials, summary = boost_experiment(cfg)
    assert {t[1] for t in trials} == {10}
    assert len(trials) == 3 and len(summary) == 2


def test_boost_experiment_deterministic():
    t1, s1 = boost_experiment(boost_cfg(sketch_kinds=("leverage",), reps=3))
    t2, s2 = boost_experiment(boost_cfg(sketch_kinds=("leverage",), reps=3))
    assert t1 == t2 and s1 == s2


def test_wick_exact_frozen_values():
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    assert wick_exact(e1, e1) == pytest.approx(3.0, rel=1e-15)
    assert wick_exact(e1, e2) == pytest.approx(1.0, rel=1e-15)
    assert wick_exact(np.array([1.0, 2.0]), np.array([3.0, -1.0])) == \
        pytest.approx(52.0, rel=1e-15)
    with pytest.raises(ValueError):
        wick_exact(np.ones(3), np.ones(4))


def test_wick_mc_converges_to_exact():
    w = np.array([0.5, -1.0, 2.0])
    z = np.array([1.0, 1.0, 0.25])
    check = wick_mc_check(w, z, samples=200_000, seed=11)
    assert check.samples == 200_000
    assert check.exact == pytest.approx(wick_exact(w, z), rel=1e-15)
    assert check.rel_err < 0.05


def test_wick_convergence_prefix_property():
    w = np.array([1.0, 2.0])
    z = np.array([3.0, -1.0])
    table = wick_convergence(w, z, base_samples=1000, doublings=3, seed=4)
    assert [c.samples for c in table] == [1000, 2000, 4000, 8000]
    single = wick_mc_check(w, z, samples=1000, seed=4)
    assert table[0].mc_estimate == pytest.approx(single.mc_estimate, rel=1e-15)
    with pytest.raises(DegenerateDataError):
        wick_convergence(np.zeros(2), z, 100, 0, seed=1)


def test_format_cell_types():
    assert format_cell(True) == "1"
    assert format_cell(np.bool_(False)) == "0"
    assert format_cell(np.int64(7)) == "7"
    assert format_cell(1 / 3) == format(1 / 3, ".17g")
    assert format_cell("leverage") == "leverage"


def test_write_csv_round_trips_doubles(tmp_path):
    rows = [("a", 1 / 3, 5), ("b", np.nextafter(2.0, 3.0), 6)]
    p = tmp_path / "t.csv"
    write_csv(p, ["name", "value", "count"], rows)
    lines = p.read_text().splitlines()
    assert lines[0] == "name,value,count"
    got = float(lines[1].split(",")[1])
    assert got == 1 / 3  # %.17g reproduces the double exactly
    assert float(lines[2].split(",")[1]) == np.nextafter(2.0, 3.0)


def test_sidecar_is_deterministic_and_timestamp_free(tmp_path):
    cfg = small_corr_cfg()
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_sidecar(p1, cfg, extra={"rows": 8})
    write_sidecar(p2, cfg, extra={"rows": 8})
    assert p1.read_bytes() == p2.read_bytes()
    obj = json.loads(p1.read_text())
    assert obj["config"]["experiment"] == "corr"
    assert obj["rows"] == 8
    assert "time" not in p1.read_text() and "date" not in p1.read_text()


def test_config_json_round_trip():
    cfg = small_corr_cfg(sketch_kinds=("gaussian", "cpqr"))
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.sketch_kinds == ("gaussian", "cpqr")
