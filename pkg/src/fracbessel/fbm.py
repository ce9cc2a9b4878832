"""Exact samplers for fractional Brownian motion on uniform grids.

Two samplers are provided:

* :func:`sample_fbm_circulant` embeds the Toeplitz covariance of fractional
  Gaussian noise (fGn) into a circulant matrix, samples it with one FFT and
  cumulatively sums the increments. Cost is O(n log n), which makes grids
  with 10**6 steps routine.
* :func:`sample_fbm_dense` factorizes the covariance matrix of the path
  itself. It is O(n**3) and only meant as an independent oracle on small
  grids.

Both are pure functions of ``(grid, hurst, seed)``.
"""

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, EmbeddingError, FactorizationError, InputError, SizeError
from .seeding import path_seed, rng_from_seed

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4096
EIGEN_TOL = 1e-9
MIN_REPORT_PATHS = 100


def check_hurst(hurst):
    hurst = float(hurst)
    if not 0.0 < hurst < 1.0:
        raise DomainError(f"Hurst index must lie in (0, 1), got {hurst}")
    return hurst


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition ``t_i = i * dt`` of ``[0, horizon]``."""

    horizon: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError(f"horizon must be a positive finite number, got {self.horizon}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def from_step(cls, horizon, dt):
        """Grid on ``[0, horizon]`` whose step is ``dt`` (must divide ``horizon``)."""
        if not dt > 0:
            raise DomainError(f"dt must be positive, got {dt}")
        if dt > horizon:
            raise DomainError(f"dt={dt} exceeds the horizon {horizon}")
        n = round(horizon / dt)
        if abs(n * dt - horizon) > 1e-9 * horizon:
            raise DomainError(f"dt={dt} does not divide the horizon {horizon}")
        return cls(horizon, n)

    @property
    def dt(self):
        return self.horizon / self.n_steps

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def embedding_size(self):
        """Smallest power of two that is at least ``2 * n_steps``."""
        return 1 << (2 * self.n_steps - 1).bit_length()


@dataclass(frozen=True, eq=False)
class FbmSample:
    """One fBm trajectory ``values[i] = B(t_i)`` with ``values[0] == 0``."""

    grid: TimeGrid
    hurst: float
    values: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_steps + 1,):
            raise InputError(
                f"expected {self.grid.n_steps + 1} values, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid, hurst):
        """The noiseless sample, used to test the drift in isolation."""
        return cls(grid, check_hurst(hurst), np.zeros(grid.n_steps + 1), seed=0)

    @classmethod
    def from_function(cls, grid, hurst, func):
        """Inject a deterministic path ``func(t)``; it must vanish at ``t = 0``."""
        values = np.asarray(func(grid.times), dtype=float)
        if values[0] != 0.0:
            raise InputError(f"injected path must start at 0, got {values[0]}")
        return cls(grid, check_hurst(hurst), values, seed=0)

    def to_csv(self, path):
        from .io import write_csv

        write_csv(path, ["t", "B"], [self.grid.times, self.values])


@dataclass(frozen=True, eq=False)
class FbmEnsemble:
    """Independent fBm paths on a shared grid, one row per path."""

    grid: TimeGrid
    hurst: float
    values: np.ndarray = field(repr=False)
    seeds: tuple = ()

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, k):
        return FbmSample(self.grid, self.hurst, self.values[k], self.seeds[k])

    def __iter__(self):
        return (self[k] for k in range(len(self)))


def fbm_covariance(s, t, hurst):
    """Covariance ``E[B_s B_t] = (t^2H + s^2H - |t - s|^2H) / 2``.

    Accepts scalars or broadcastable arrays.
    """
    hurst = check_hurst(hurst)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("times must be nonnegative")
    two_h = 2.0 * hurst
    cov = 0.5 * (t**two_h + s**two_h - np.abs(t - s) ** two_h)
    return float(cov) if cov.ndim == 0 else cov


def fgn_autocovariance(lags, hurst):
    """Autocovariance of unit-step fGn at integer ``lags``."""
    hurst = check_hurst(hurst)
    k = np.abs(np.asarray(lags, dtype=float))
    two_h = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** two_h - 2.0 * k**two_h + np.abs(k - 1) ** two_h)


def fgn_lag1_autocorrelation(hurst):
    """Lag-one autocorrelation of fGn, ``(2^2H - 2) / 2``."""
    return 0.5 * (2.0 ** (2.0 * check_hurst(hurst)) - 2.0)


def compensated_cumsum(x):
    """Running sums of ``x`` with the rounding error of each addition carried.

    The plain running sum is corrected by the running sum of the exact
    TwoSum errors, which removes the O(n * eps) drift of naive accumulation.
    """
    x = np.asarray(x, dtype=float)
    s = np.cumsum(x)
    if s.size < 2:
        return s
    prev, inc, cur = s[:-1], x[1:], s[1:]
    virtual = cur - prev
    err = np.empty_like(s)
    err[0] = 0.0
    err[1:] = (prev - (cur - virtual)) + (inc - virtual)
    return s + np.cumsum(err)


def check_embedding(lam, tol=EIGEN_TOL, context=""):
    """Clamp eigenvalues in ``[-tol * max, 0)`` to zero; fail below that.

    Returns ``(clamped, n_clamped)``.
    """
    lam = np.asarray(lam, dtype=float)
    floor = -tol * lam.max()
    if lam.min() < floor:
        raise EmbeddingError(
            f"circulant embedding has eigenvalue {lam.min():.3e} < {floor:.3e}{context}; "
            "use the dense sampler instead"
        )
    negative = lam < 0
    n_clamped = int(negative.sum())
    if n_clamped:
        logger.warning("clamped %d slightly negative circulant eigenvalues to 0", n_clamped)
    return np.where(negative, 0.0, lam), n_clamped


@functools.lru_cache(maxsize=16)
def circulant_eigenvalues(n_steps, hurst, tol=EIGEN_TOL):
    """Eigenvalues of the circulant embedding of unit-step fGn, see :func:`check_embedding`."""
    m = TimeGrid(1.0, n_steps).embedding_size
    gamma = fgn_autocovariance(np.arange(m // 2 + 1), hurst)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam, n_clamped = check_embedding(np.fft.fft(row).real, tol, f" (H={hurst}, n={n_steps})")
    lam.setflags(write=False)
    return lam, n_clamped


def _circulant_rows(grid, hurst, seeds):
    n = grid.n_steps
    lam, _ = circulant_eigenvalues(n, hurst)
    m = lam.size
    scale = np.sqrt(lam / m)
    out = np.empty((len(seeds), n + 1))
    out[:, 0] = 0.0
    step_scale = grid.dt**hurst
    for k, seed in enumerate(seeds):
        z = rng_from_seed(seed).standard_normal((2, m))
        w = np.fft.fft(scale * (z[0] + 1j * z[1]))
        out[k, 1:] = compensated_cumsum(w.real[:n] * step_scale)
    return out


def sample_fbm_circulant(grid, hurst, seed):
    """Exact fBm sample by circulant embedding of fractional Gaussian noise.

    Parameters
    ----------
    grid : TimeGrid
    hurst : float
        Hurst index in (0, 1).
    seed : int
        64-bit seed; identical ``(grid, hurst, seed)`` give identical output.

    Returns
    -------
    FbmSample
    """
    hurst = check_hurst(hurst)
    values = _circulant_rows(grid, hurst, [seed])[0]
    return FbmSample(grid, hurst, values, int(seed))


def sample_paths(grid, hurst, seeds, method="circulant"):
    """One sample per entry of ``seeds``, stacked into an :class:`FbmEnsemble`."""
    hurst = check_hurst(hurst)
    seeds = tuple(int(s) for s in seeds)
    if method == "circulant":
        values = _circulant_rows(grid, hurst, seeds)
    elif method == "dense":
        values = _dense_rows(grid, hurst, seeds)
    else:
        raise InputError(f"unknown sampler {method!r}")
    return FbmEnsemble(grid, hurst, values, seeds)


def sample_ensemble(grid, hurst, master_seed, n_paths, method="circulant", start=0):
    """Paths ``start .. start + n_paths - 1`` of the ensemble seeded by ``master_seed``."""
    seeds = [path_seed(master_seed, k) for k in range(start, start + n_paths)]
    return sample_paths(grid, hurst, seeds, method)


@functools.lru_cache(maxsize=8)
def _dense_factor(horizon, n_steps, hurst):
    t = TimeGrid(horizon, n_steps).times[1:]
    cov = fbm_covariance(t[:, None], t[None, :], hurst)
    try:
        return scipy.linalg.cholesky(cov, lower=True)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-12 * np.trace(cov) / n_steps
    try:
        return scipy.linalg.cholesky(cov + jitter * np.eye(n_steps), lower=True)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(
            f"fBm covariance is not positive definite (H={hurst}, n={n_steps})"
        ) from exc


def _dense_rows(grid, hurst, seeds, limit=DENSE_LIMIT):
    if grid.n_steps > limit:
        raise SizeError(f"dense sampler handles at most {limit} steps, got {grid.n_steps}")
    factor = _dense_factor(grid.horizon, grid.n_steps, hurst)
    z = np.stack([rng_from_seed(s).standard_normal(grid.n_steps) for s in seeds])
    out = np.zeros((len(seeds), grid.n_steps + 1))
    out[:, 1:] = z @ factor.T
    return out


def sample_fbm_dense(grid, hurst, seed, limit=DENSE_LIMIT):
    """Exact fBm sample by Cholesky factorization of the path covariance.

    Raises :class:`SizeError` when ``grid.n_steps > limit``.
    """
    hurst = check_hurst(hurst)
    values = _dense_rows(grid, hurst, [seed], limit)[0]
    return FbmSample(grid, hurst, values, int(seed))


def _stack(samples):
    if isinstance(samples, FbmEnsemble):
        return samples.grid, samples.hurst, np.asarray(samples.values)
    samples = list(samples)
    if not samples:
        raise InputError("no samples given")
    grid, hurst = samples[0].grid, samples[0].hurst
    for s in samples[1:]:
        if s.grid != grid or s.hurst != hurst:
            raise InputError("all samples must share grid and Hurst index")
    return grid, hurst, np.stack([s.values for s in samples])


def covariance_error_se(values, grid, hurst):
    """Entrywise ``|empirical - exact| / standard error`` of the path covariance.

    The mean is known to be zero, so the estimator is the average of
    ``B_i * B_j`` and its standard error comes from the sample spread of
    those products. Time zero is excluded (identically zero).
    """
    b = np.asarray(values, dtype=float)[:, 1:]
    m = b.shape[0]
    t = grid.times[1:]
    mean = b.T @ b / m
    second = (b * b).T @ (b * b) / m
    se = np.sqrt(np.maximum(second - mean**2, 0.0) / (m - 1))
    exact = fbm_covariance(t[:, None], t[None, :], hurst)
    return np.abs(mean - exact) / se


def lag1_autocorrelation(values):
    """Pooled lag-one autocorrelation of increments and its standard error.

    Uses the ratio of means ``mean(N_p) / mean(D_p)`` where ``N_p`` and
    ``D_p`` are per-path averages of ``dB_k dB_{k+1}`` and ``dB_k**2``; the
    error follows from the delta method over independent paths.
    """
    d = np.diff(np.asarray(values, dtype=float), axis=1)
    if d.shape[1] < 2:
        raise InputError("need at least two increments")
    num = np.mean(d[:, :-1] * d[:, 1:], axis=1)
    den = np.mean(d * d, axis=1)
    rho = num.mean() / den.mean()
    se = np.std(num - rho * den, ddof=1) / (np.sqrt(d.shape[0]) * den.mean())
    return float(rho), float(se)


@dataclass
class FbmReport:
    hurst: float
    n_steps: int
    n_paths: int
    max_cov_error_se: float
    lag1_autocorr: float
    lag1_autocorr_se: float
    lag1_autocorr_exact: float
    times: np.ndarray = field(repr=False)
    variance: np.ndarray = field(repr=False)
    variance_exact: np.ndarray = field(repr=False)
    delta: float = 0.05
    sup_ratio_quantiles: dict = field(default_factory=dict)

    @property
    def lag1_error_se(self):
        return abs(self.lag1_autocorr - self.lag1_autocorr_exact) / self.lag1_autocorr_se

    def to_dict(self):
        return {
            "h": self.hurst,
            "n_steps": self.n_steps,
            "n_paths": self.n_paths,
            "max_cov_error_se": self.max_cov_error_se,
            "lag1_autocorr": self.lag1_autocorr,
            "lag1_autocorr_se": self.lag1_autocorr_se,
            "lag1_autocorr_exact": self.lag1_autocorr_exact,
            "delta": self.delta,
            "sup_ratio_quantiles": self.sup_ratio_quantiles,
            "max_variance_rel_error": float(
                np.max(np.abs(self.variance[1:] / self.variance_exact[1:] - 1.0))
            ),
        }


def empirical_fbm_report(samples, delta=0.05, quantiles=(0.5, 0.9, 0.99)):
    """Moment diagnostics for an ensemble of samples on one grid.

    ``sup_ratio_quantiles`` holds quantiles of ``max_{s<=T} |B_s| / T^(H+delta)``,
    a finite-sample look at the almost-sure growth bound; nothing is asserted
    about it.
    """
    grid, hurst, values = _stack(samples)
    m = values.shape[0]
    if m < MIN_REPORT_PATHS:
        raise InputError(f"need at least {MIN_REPORT_PATHS} samples, got {m}")
    z = covariance_error_se(values, grid, hurst)
    rho, rho_se = lag1_autocorrelation(values)
    t = grid.times
    ratio = np.max(np.abs(values), axis=1) / grid.horizon ** (hurst + delta)
    return FbmReport(
        hurst=hurst,
        n_steps=grid.n_steps,
        n_paths=m,
        max_cov_error_se=float(z.max()),
        lag1_autocorr=rho,
        lag1_autocorr_se=rho_se,
        lag1_autocorr_exact=fgn_lag1_autocorrelation(hurst),
        times=t,
        variance=np.mean(values**2, axis=0),
        variance_exact=t ** (2 * hurst),
        delta=delta,
        sup_ratio_quantiles={f"q{round(100 * q):02d}": float(np.quantile(ratio, q)) for q in quantiles},
    )
