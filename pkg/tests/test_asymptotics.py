import math

import numpy as np
import pytest

from fracbessel.asymptotics import (
    EnsembleConfig,
    a_to_zero_limit,
    ensemble_run,
    horizon_ladder,
    path_statistics,
    resolution_gap,
    sweep_in_a,
    sweep_in_epsilon,
)
from fracbessel.config import PILOT_GATES
from fracbessel.errors import DomainError, InputError
from fracbessel.fbm import FbmSample, TimeGrid, sample_fbm_circulant
from fracbessel.io import read_csv
from fracbessel.limit import TOL_MONO, EpsilonSchedule
from fracbessel.sde import SdeParams

GRID = TimeGrid(1.0, 1000)


def test_constant_path_ratio():
    stats = path_statistics(np.full(1001, 3.0), grid=GRID, z_thresh=1e-4, alphas=(0.5,))
    # max of 3 / sqrt(t) over [1/4, 1] is attained at t = 1/4
    assert stats.sqrt_ratio == pytest.approx(6.0)
    assert stats.last_zero is None
    assert stats.min_after == 3.0


def test_envelope_path_ratio():
    x = np.sqrt(1 + 20 * GRID.times)
    stats = path_statistics(x, grid=GRID, z_thresh=1e-4)
    assert stats.sqrt_ratio >= math.sqrt(20)


def test_last_zero_and_minimum_after():
    x = np.ones(1001)
    x[100] = 0.0
    x[500] = 1e-5
    x[501:] = 2.0
    stats = path_statistics(x, grid=GRID, z_thresh=1e-4)
    assert stats.last_zero == pytest.approx(0.5)
    assert stats.min_after == 2.0


def test_statistics_validation():
    x = np.ones(1001)
    with pytest.raises(DomainError):
        path_statistics(x, t_min=1.0, grid=GRID, z_thresh=1e-4)
    with pytest.raises(DomainError):
        path_statistics(x, alphas=(1.0,), grid=GRID, z_thresh=1e-4)
    with pytest.raises(InputError):
        path_statistics(x)


def test_sweep_rejects_non_decreasing_values():
    fbm = sample_fbm_circulant(GRID, 0.25, 0)
    with pytest.raises(InputError):
        sweep_in_a(SdeParams(), [1.0, 1.0], fbm, EpsilonSchedule())
    with pytest.raises(InputError):
        sweep_in_a(SdeParams(), [1.0, -1.0], fbm, EpsilonSchedule())
    with pytest.raises(InputError):
        sweep_in_epsilon(SdeParams(), [1e-3, 1e-2], fbm)


def test_sweep_in_a_exact_regime_has_no_violations():
    grid = TimeGrid(1.0, 100_000)
    fbm = sample_fbm_circulant(grid, 0.25, 12)
    result = sweep_in_a(SdeParams(), [10.0, 1.0, 0.0], fbm, EpsilonSchedule.ending_at(1e-2))
    for v in result.violations:
        assert v["regime_exact"]
        assert v["max"] <= 1e-12
    # at a = 0 the limit path is X0 + sigma B
    assert np.array_equal(result.decompositions[-1].x, 1.0 + fbm.values)


def test_sweep_csv_header(tmp_path):
    fbm = sample_fbm_circulant(GRID, 0.25, 0)
    result = sweep_in_epsilon(SdeParams(), [1e-2, 1e-3], fbm)
    result.to_csv(tmp_path / "s.csv")
    header, data = read_csv(tmp_path / "s.csv")
    assert header == ["epsilon", "last_zero", "min_after", "sqrt_ratio", "ratio_alpha_0.25",
                      "ratio_alpha_0.5", "ratio_alpha_0.75", "x_T", "l_T", "viol_max",
                      "viol_p99", "regime_exact"]
    assert data.shape == (2, 12)


def test_small_drift_far_from_zero():
    # X0 + sigma B stays away from zero, so the Skorokhod map is the identity
    grid = TimeGrid(1.0, 10_000)
    fbm = sample_fbm_circulant(grid, 0.25, 3)
    base = SdeParams(x0=10.0)
    res = a_to_zero_limit(base, [1e-1, 1e-2, 1e-3], fbm, EpsilonSchedule.ending_at(1e-4))
    assert np.all(res.skorokhod == 10.0 + fbm.values)
    assert np.max(np.abs(res.decomposition.reflection)) <= 1e-8
    # gap equals a I_T, linear in a
    assert res.gaps[-1] <= 1e-3 * 1.0 / (10.0 - np.abs(fbm.values).max())
    assert res.gaps == sorted(res.gaps, reverse=True)


def test_small_drift_deterministic_input():
    grid = TimeGrid(1.0, 100_000)
    fbm = FbmSample.from_function(grid, 0.25, lambda t: -3 * t)
    res = a_to_zero_limit(SdeParams(), [1e-1, 1e-2, 1e-3], fbm, EpsilonSchedule.ending_at(1e-4))
    assert res.skorokhod[-1] == pytest.approx(0.0, abs=1e-12)
    assert all(x >= y for x, y in zip(res.gaps, res.gaps[1:]))
    assert res.gaps[-1] < 0.05
    steps = np.diff(res.ltilde)
    assert res.ltilde[0] == 0.0
    assert steps.min() >= -TOL_MONO
    assert res.ltilde[-1] == pytest.approx(2.0, abs=0.05)


def test_small_drift_off_zero_mass_shrinks():
    # off the zero set Ltilde only moves through a I, which vanishes with a
    grid = TimeGrid(1.0, 100_000)
    fbm = sample_fbm_circulant(grid, 0.25, 5)
    masses = []
    for a in (1e-1, 1e-2, 1e-3):
        res = a_to_zero_limit(SdeParams(a=1.0), [a], fbm, EpsilonSchedule.ending_at(1e-4))
        dec = res.decomposition
        off = np.minimum(dec.x[:-1], dec.x[1:]) > dec.z_thresh
        masses.append(float(np.sum(np.diff(res.ltilde)[off])))
    assert masses[0] > masses[1] > masses[2]
    assert masses[2] <= 1e-2 * masses[0]


def test_ensemble_needs_enough_paths():
    with pytest.raises(InputError):
        EnsembleConfig(n_paths=10)


def test_ensemble_is_thread_count_independent():
    base = EnsembleConfig(SdeParams(), TimeGrid(1.0, 2000), n_paths=300, master_seed=9)
    one = ensemble_run(base)
    three = ensemble_run(EnsembleConfig(SdeParams(), TimeGrid(1.0, 2000), 300, 9, n_jobs=3))
    assert one.to_dict() == three.to_dict()
    assert one.config["z_thresh"] == 1e-4
    assert one.x_T_quantiles["q05"] <= one.x_T_median <= one.x_T_quantiles["q95"]


def test_final_quarter_positive_at_unit_drift():
    report = ensemble_run(EnsembleConfig(SdeParams(), TimeGrid(1.0, 10_000), 500, master_seed=77))
    assert report.final_quarter_positive_fraction >= PILOT_GATES["gate_final_quarter_positive"]


def test_small_drift_hits_zero_often():
    report = ensemble_run(EnsembleConfig(SdeParams(a=0.01), TimeGrid(1.0, 10_000), 500, master_seed=78))
    assert report.zero_hit_fraction >= PILOT_GATES["gate_zero_hit_small_a"]


def test_horizon_ladder_decreases():
    # sup X_t / t^0.75 over [T/4, T] should shrink as T grows for sqrt(t) growth
    medians = horizon_ladder(SdeParams(), n_paths=200, master_seed=5)
    assert medians[0] > medians[1] > medians[2]


def test_resolution_gap_shrinks_with_coarse_step():
    p = SdeParams(a=10.0)
    coarse = resolution_gap(p, TimeGrid(1.0, 1000), factor=10, master_seed=1)
    finer = resolution_gap(p, TimeGrid(1.0, 10_000), factor=10, master_seed=1)
    assert finer["fine_dt"] == pytest.approx(1e-5)
    assert finer["sup_gap"] < coarse["sup_gap"]
    with pytest.raises(DomainError):
        resolution_gap(p, TimeGrid(1.0, 10), factor=1)
