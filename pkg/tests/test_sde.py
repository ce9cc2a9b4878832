import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracbessel.errors import DomainError, InputError, NumericError
from fracbessel.fbm import FbmSample, TimeGrid, sample_ensemble, sample_fbm_circulant
from fracbessel.io import read_csv
from fracbessel.sde import (
    SdeParams,
    deterministic_envelope,
    euler_classical_bessel,
    euler_regularized,
    euler_regularized_batch,
)


def noiseless(n, h=0.25, horizon=1.0):
    return FbmSample.zeros(TimeGrid(horizon, n), h)


@pytest.mark.parametrize("field, value", [
    ("x0", 0.0), ("x0", -1.0), ("a", -0.1), ("sigma", 0.0),
    ("epsilon", 0.0), ("hurst", 1.0), ("x0", math.inf),
])
def test_params_validation(field, value):
    with pytest.raises(DomainError):
        SdeParams(**{field: value})


def test_zero_drift_is_shifted_noise():
    fbm = sample_fbm_circulant(TimeGrid(1.0, 5000), 0.25, 3)
    path = euler_regularized(SdeParams(a=0.0, x0=0.7), fbm)
    assert np.array_equal(path.values, 0.7 + fbm.values)


def test_identity_residual_is_rounding_level():
    fbm = sample_fbm_circulant(TimeGrid(1.0, 20_000), 0.25, 8)
    path = euler_regularized(SdeParams(a=2.0), fbm)
    assert path.identity_residual() <= 1e-8 * (1 + np.abs(path.values).max())


@pytest.mark.parametrize("a, expected", [(1.0, math.sqrt(3)), (10.0, math.sqrt(21))])
def test_noiseless_drift_matches_ode(a, expected):
    path = euler_regularized(SdeParams(a=a, epsilon=1e-8), noiseless(100_000))
    assert abs(path.values[-1] - expected) <= 1e-3


def test_noiseless_error_is_first_order():
    errors = []
    for n in (1000, 2000, 4000):
        x = euler_regularized(SdeParams(a=1.0, epsilon=1e-12), noiseless(n)).values
        errors.append(abs(x[-1] - math.sqrt(3)))
    ratios = [errors[k] / errors[k + 1] for k in range(2)]
    assert all(1.8 < r < 2.2 for r in ratios)


def test_envelope_values():
    assert deterministic_envelope(1.0, 10.0, 1.0) == pytest.approx(math.sqrt(21))
    np.testing.assert_allclose(deterministic_envelope(1.0, 1.0, [0.0, 1.0]), [1.0, math.sqrt(3)])
    with pytest.raises(DomainError):
        deterministic_envelope(1.0, 1.0, -1.0)


def test_batch_matches_single_paths():
    ens = sample_ensemble(TimeGrid(1.0, 2000), 0.25, 4, 6)
    p = SdeParams(a=1.5, epsilon=1e-3)
    x, integral = euler_regularized_batch(p, ens)
    for k, sample in enumerate(ens):
        single = euler_regularized(p, sample)
        assert np.array_equal(x[k], single.values)
        assert np.array_equal(integral[k], single.drift_sum)


def test_hurst_mismatch_is_rejected():
    with pytest.raises(InputError):
        euler_regularized(SdeParams(hurst=0.3), noiseless(10, h=0.25))


def test_non_finite_state_reports_step():
    values = np.zeros(11)
    values[5:] = np.inf
    fbm = FbmSample(TimeGrid(1.0, 10), 0.25, values)
    with pytest.raises(NumericError) as info:
        euler_regularized(SdeParams(), fbm)
    assert info.value.step == 5


def test_path_csv(tmp_path):
    path = euler_regularized(SdeParams(), sample_fbm_circulant(TimeGrid(1.0, 50), 0.25, 0))
    path.to_csv(tmp_path / "p.csv")
    header, data = read_csv(tmp_path / "p.csv")
    assert header == ["t", "X", "I", "B"]
    assert np.array_equal(data[:, 1], path.values)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), a=st.floats(0.1, 5.0), ratio=st.floats(1.1, 4.0))
def test_epsilon_ordering_in_exact_regime(seed, a, ratio):
    # smaller regularization gives a pointwise larger path when dt * a <= eps^2
    eps_small = 1e-2
    dt = eps_small**2 / a
    n = max(1, int(0.5 / dt))
    fbm = sample_fbm_circulant(TimeGrid(n * dt, n), 0.25, seed)
    x1 = euler_regularized(SdeParams(a=a, epsilon=eps_small), fbm).values
    x2 = euler_regularized(SdeParams(a=a, epsilon=eps_small * ratio), fbm).values
    assert np.all(x1 >= x2 - 1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), a_hi=st.floats(0.5, 5.0), frac=st.floats(0.0, 0.95))
def test_drift_ordering_in_exact_regime(seed, a_hi, frac):
    eps = 1e-2
    dt = eps**2 / a_hi
    n = int(0.5 / dt)
    fbm = sample_fbm_circulant(TimeGrid(n * dt, n), 0.25, seed)
    hi = euler_regularized(SdeParams(a=a_hi, epsilon=eps), fbm).values
    lo = euler_regularized(SdeParams(a=a_hi * frac, epsilon=eps), fbm).values
    assert np.all(hi >= lo - 1e-12)


def test_classical_bessel_noiseless_dimension_two():
    # nu = 2 gives rho' = 1 / (2 rho), so rho_t = sqrt(1 + t)
    rho = euler_classical_bessel(2.0, 1.0, noiseless(100_000, h=0.5))
    assert abs(rho[-1] - math.sqrt(2.0)) <= 1e-4


def test_classical_bessel_squared_mean():
    # E rho_t^2 = rho_0^2 + nu t for the squared Bessel process
    grid = TimeGrid(1.0, 2000)
    ens = sample_ensemble(grid, 0.5, 17, 4000)
    sq = np.array([euler_classical_bessel(3.0, 1.0, b)[-1] ** 2 for b in ens])
    se = sq.std(ddof=1) / math.sqrt(sq.size)
    assert abs(sq.mean() - 4.0) <= 3 * se + 0.04


def test_classical_bessel_preconditions():
    with pytest.raises(InputError):
        euler_classical_bessel(3.0, 1.0, noiseless(10, h=0.25))
    with pytest.raises(DomainError):
        euler_classical_bessel(1.5, 1.0, noiseless(10, h=0.5))
