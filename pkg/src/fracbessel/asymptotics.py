"""Finite-horizon statistics for the long-time and large-drift behaviour.

The results being probed are almost-sure statements as ``t -> inf`` (or
``a -> inf``) with random onset times, so nothing here can confirm or refute
them. Everything is evaluated on ``[t_min, T]`` with ``t_min = T / 4`` by
default, and the gates used by the test suite are frozen pilot values.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, InputError
from .fbm import FbmSample, TimeGrid, sample_ensemble, sample_fbm_circulant
from .limit import ReflectionDecomposition, epsilon_limit, reflection_function, skorokhod_map
from .sde import SdeParams, euler_regularized, euler_regularized_batch
from .seeding import path_seed

DEFAULT_ALPHAS = (0.25, 0.5, 0.75)
MIN_ENSEMBLE_PATHS = 100
CHUNK = 256


@dataclass
class PathStatistics:
    last_zero: float  # None when the path stays above the zero threshold
    min_after: float
    sup_ratio_alpha: dict
    sqrt_ratio: float
    x_final: float
    t_min: float

    def row(self, alphas):
        return [
            math.nan if self.last_zero is None else self.last_zero,
            self.min_after,
            self.sqrt_ratio,
            *[self.sup_ratio_alpha[a] for a in alphas],
            self.x_final,
        ]


def _window(grid, t_min):
    t_min = grid.horizon / 4 if t_min is None else float(t_min)
    if not 0 < t_min < grid.horizon:
        raise DomainError(f"t_min must lie in (0, {grid.horizon}), got {t_min}")
    start = int(math.ceil(t_min / grid.dt - 1e-9))
    return t_min, start


def path_statistics(path, t_min=None, alphas=DEFAULT_ALPHAS, grid=None, z_thresh=None):
    """Zero-set and growth statistics of one path.

    ``path`` is a :class:`ReflectionDecomposition` or a plain array, in which
    case ``grid`` and ``z_thresh`` are required. Ratios ``X_t / t**alpha``
    are maximized over grid points in ``[t_min, T]``.
    """
    if isinstance(path, ReflectionDecomposition):
        grid, z_thresh, x = path.grid, path.z_thresh, path.x
    else:
        if grid is None or z_thresh is None:
            raise InputError("grid and z_thresh are required for a bare path")
        x = np.asarray(path, dtype=float)
    for alpha in alphas:
        if not 0 < alpha < 1:
            raise DomainError(f"exponents must lie in (0, 1), got {alpha}")
    t_min, start = _window(grid, t_min)
    t = grid.times[start:]
    tail = x[start:]
    zeros = np.flatnonzero(x <= z_thresh)
    if zeros.size:
        last = zeros[-1]
        last_zero = float(grid.times[last])
        min_after = float(x[last + 1:].min()) if last < x.size - 1 else float(x[last])
    else:
        last_zero = None
        min_after = float(x.min())
    return PathStatistics(
        last_zero=last_zero,
        min_after=min_after,
        sup_ratio_alpha={a: float(np.max(tail / t**a)) for a in alphas},
        sqrt_ratio=float(np.max(tail / np.sqrt(t))),
        x_final=float(x[-1]),
        t_min=t_min,
    )


@dataclass
class SweepResult:
    parameter: str
    values: list
    statistics: list
    decompositions: list = field(repr=False)
    violations: list
    seed: int
    alphas: tuple = DEFAULT_ALPHAS

    @property
    def header(self):
        return [self.parameter, "last_zero", "min_after", "sqrt_ratio",
                *[f"ratio_alpha_{a:g}" for a in self.alphas], "x_T", "l_T",
                "viol_max", "viol_p99", "regime_exact"]

    def rows(self):
        out = []
        for k, (value, stats, dec) in enumerate(zip(self.values, self.statistics, self.decompositions)):
            v = self.violations[k - 1] if k else {"max": 0.0, "p99": 0.0, "regime_exact": True}
            out.append([value, *stats.row(self.alphas), float(dec.reflection[-1]),
                        v["max"], v["p99"], float(v["regime_exact"])])
        return out

    def to_csv(self, path):
        from .io import write_csv

        rows = np.array(self.rows(), dtype=float)
        write_csv(path, self.header, rows.T)


def _violations(upper, lower, exact):
    v = np.maximum(lower - upper, 0.0)
    return {"max": float(v.max()), "p99": float(np.quantile(v, 0.99)),
            "count": int(np.sum(v > 1e-12)), "regime_exact": bool(exact)}


def _check_strict(values, decreasing, name):
    values = [float(v) for v in values]
    if not values:
        raise InputError(f"{name} must not be empty")
    pairs = zip(values, values[1:])
    if not all((x > y) if decreasing else (x < y) for x, y in pairs):
        raise InputError(f"{name} must be strictly {'decreasing' if decreasing else 'increasing'}")
    return values


def sweep_in_a(base, a_values, fbm, schedule, t_min=None, alphas=DEFAULT_ALPHAS):
    """Limit paths for strictly decreasing drifts along one noise sample.

    ``violations[k]`` measures ``max(0, X^{a_{k+1}} - X^{a_k})``. The
    ordering is exact on the grid when ``dt * a_k <= eps**2`` for every
    regularization level; ``regime_exact`` records whether that holds.
    """
    a_values = _check_strict(a_values, True, "a_values")
    if a_values[-1] < 0:
        raise InputError("a_values must be nonnegative")
    paths, stats, decs, viols = [], [], [], []
    dt = fbm.grid.dt
    eps_min = schedule.eps_final
    for k, a in enumerate(a_values):
        params = base.with_(a=a)
        path, _ = epsilon_limit(params, fbm, schedule)
        dec = reflection_function(path, fbm, path.params)
        if paths:
            exact = dt * a_values[k - 1] <= eps_min**2
            viols.append(_violations(paths[-1].values, path.values, exact))
        paths.append(path)
        decs.append(dec)
        stats.append(path_statistics(dec, t_min, alphas))
    return SweepResult("a", a_values, stats, decs, viols, fbm.seed, tuple(alphas))


def sweep_in_epsilon(base, eps_values, fbm, t_min=None, alphas=DEFAULT_ALPHAS):
    """Regularized paths for strictly decreasing ``eps`` along one sample.

    Smaller ``eps`` should give a larger path; ``violations[k]`` measures
    ``max(0, X^{eps_k} - X^{eps_{k+1}})``, exact when ``dt * a <= eps_{k+1}**2``.
    """
    eps_values = _check_strict(eps_values, True, "eps_values")
    paths, stats, decs, viols = [], [], [], []
    for eps in eps_values:
        params = base.with_(epsilon=eps)
        path = euler_regularized(params, fbm)
        dec = reflection_function(path, fbm, params)
        if paths:
            exact = fbm.grid.dt * base.a <= eps**2
            viols.append(_violations(path.values, paths[-1].values, exact))
        paths.append(path)
        decs.append(dec)
        stats.append(path_statistics(dec, t_min, alphas))
    return SweepResult("epsilon", eps_values, stats, decs, viols, fbm.seed, tuple(alphas))


@dataclass
class ZeroDriftLimit:
    a_values: list
    path: object = field(repr=False)
    decomposition: ReflectionDecomposition = field(repr=False)
    ltilde: np.ndarray = field(repr=False)
    skorokhod: np.ndarray = field(repr=False)
    gap: float = 0.0
    gaps: list = field(default_factory=list)

    def to_csv(self, path):
        from .io import write_csv

        write_csv(path, ["t", "X", "Ltilde", "G"],
                  [self.path.grid.times, self.path.values, self.ltilde, self.skorokhod])


def a_to_zero_limit(base, a_schedule, fbm, schedule, scale_eps=True):
    """Follow the limit path down a decreasing drift schedule.

    ``schedule`` is the regularization schedule at ``a = base.a``. With
    ``scale_eps`` every level is multiplied by ``a / base.a`` so the drift cap
    ``a / eps`` stays fixed; otherwise the schedule is reused as is.

    Returns a :class:`ZeroDriftLimit` whose ``ltilde = a I + L`` comes from
    the run at the smallest drift and whose ``gaps`` are the sup distances
    from each run to the Skorokhod reflection of ``X0 + sigma B``.
    """
    a_schedule = _check_strict(a_schedule, True, "a_schedule")
    if a_schedule[-1] <= 0:
        raise InputError("a_schedule must be positive")
    if scale_eps and base.a <= 0:
        raise InputError("scaling the schedule needs base.a > 0")
    g, _ = skorokhod_map(base.x0 + base.sigma * fbm.values)
    gaps = []
    for a in a_schedule:
        sched = schedule.scaled(a / base.a) if scale_eps else schedule
        path, _ = epsilon_limit(base.with_(a=a), fbm, sched)
        gaps.append(float(np.max(np.abs(path.values - g))))
    dec = reflection_function(path, fbm, path.params)
    ltilde = dec.params.a * dec.integral + dec.reflection
    return ZeroDriftLimit(a_schedule, path, dec, ltilde, g, gaps[-1], gaps)


@dataclass
class EnsembleConfig:
    params: SdeParams = field(default_factory=SdeParams)
    grid: TimeGrid = field(default_factory=lambda: TimeGrid(1.0, 10_000))
    n_paths: int = 500
    master_seed: int = 0
    t_min: float = None
    sqrt_ratio_factor: float = 0.8
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_paths < MIN_ENSEMBLE_PATHS:
            raise InputError(f"an ensemble needs at least {MIN_ENSEMBLE_PATHS} paths, got {self.n_paths}")
        _window(self.grid, self.t_min)

    def echo(self):
        return {
            **asdict(self.params),
            "t_max": self.grid.horizon,
            "n_steps": self.grid.n_steps,
            "dt": self.grid.dt,
            "n_paths": self.n_paths,
            "master_seed": self.master_seed,
            "t_min": _window(self.grid, self.t_min)[0],
            "z_thresh": self.params.epsilon,
        }


@dataclass
class EnsembleReport:
    n_paths: int
    zero_hit_fraction: float
    sqrt_ratio_quantiles: dict
    x_T_quantiles: dict
    x_T_mean: float
    x_T_se: float
    sqrt_ratio_pass_fraction: float
    final_quarter_positive_fraction: float
    config: dict

    @property
    def x_T_median(self):
        return self.x_T_quantiles["q50"]

    def to_dict(self):
        out = {"n_paths": self.n_paths, "zero_hit_fraction": self.zero_hit_fraction}
        out.update({f"sqrt_ratio_{k}": v for k, v in self.sqrt_ratio_quantiles.items()})
        out.update({f"x_T_{k}": v for k, v in self.x_T_quantiles.items()})
        out.update({
            "x_T_mean": self.x_T_mean,
            "x_T_se": self.x_T_se,
            "sqrt_ratio_pass_fraction": self.sqrt_ratio_pass_fraction,
            "final_quarter_positive_fraction": self.final_quarter_positive_fraction,
            "config": self.config,
        })
        return out


def _chunk_stats(config, index):
    p, grid = config.params, config.grid
    lo = index * CHUNK
    n = min(CHUNK, config.n_paths - lo)
    ens = sample_ensemble(grid, p.hurst, config.master_seed, n, start=lo)
    x, _ = euler_regularized_batch(p, ens)
    _, start = _window(grid, config.t_min)
    t = grid.times[start:]
    quarter = int(math.ceil(0.75 * grid.n_steps))
    z = p.epsilon
    return {
        "hit": np.min(x, axis=1) <= z,
        "sqrt_ratio": np.max(x[:, start:] / np.sqrt(t), axis=1),
        "x_T": x[:, -1].copy(),
        "final_positive": np.min(x[:, quarter:], axis=1) > z,
    }


def ensemble_run(config):
    """Monte Carlo statistics over independent paths at one regularization.

    Path ``k`` uses seed :func:`~fracbessel.seeding.path_seed` of
    ``(master_seed, k)``, so the report does not depend on ``n_jobs``.
    Chunks are simulated by workers and reduced in order by the caller.
    """
    n_chunks = -(-config.n_paths // CHUNK)
    if config.n_jobs > 1:
        with ThreadPoolExecutor(config.n_jobs) as pool:
            parts = list(pool.map(lambda i: _chunk_stats(config, i), range(n_chunks)))
    else:
        parts = [_chunk_stats(config, i) for i in range(n_chunks)]
    merged = {k: np.concatenate([part[k] for part in parts]) for k in parts[0]}
    qs = (0.05, 0.5, 0.95)
    x_t = merged["x_T"]
    ratio = merged["sqrt_ratio"]
    gate = config.sqrt_ratio_factor * math.sqrt(2 * config.params.a)
    return EnsembleReport(
        n_paths=config.n_paths,
        zero_hit_fraction=float(merged["hit"].mean()),
        sqrt_ratio_quantiles={f"q{round(100 * q):02d}": float(np.quantile(ratio, q)) for q in qs},
        x_T_quantiles={f"q{round(100 * q):02d}": float(np.quantile(x_t, q)) for q in qs},
        x_T_mean=float(x_t.mean()),
        x_T_se=float(x_t.std(ddof=1) / math.sqrt(x_t.size)),
        sqrt_ratio_pass_fraction=float(np.mean(ratio >= gate)),
        final_quarter_positive_fraction=float(merged["final_positive"].mean()),
        config=config.echo(),
    )


def horizon_ladder(params, horizons=(1.0, 10.0, 100.0), n_steps=10_000, n_paths=200,
                   master_seed=0, alpha=0.75):
    """Median over paths of ``max_{t in [T/4, T]} X_t / t**alpha`` for each horizon.

    The step count is fixed, so ``dt`` grows with ``T``; the regularization
    is scaled by ``T`` as well to keep the per-step drift cap ``a dt / eps``
    unchanged.
    """
    medians = []
    for horizon in horizons:
        grid = TimeGrid(horizon, n_steps)
        p = params.with_(epsilon=params.epsilon * horizon)
        ens = sample_ensemble(grid, p.hurst, master_seed, n_paths)
        x, _ = euler_regularized_batch(p, ens)
        _, start = _window(grid, None)
        t = grid.times[start:]
        medians.append(float(np.median(np.max(x[:, start:] / t**alpha, axis=1))))
    return medians


def resolution_gap(params, grid, factor=100, master_seed=0):
    """Discretization check for a coarse ensemble grid.

    One fBm path is sampled on ``grid`` refined ``factor`` times; keeping
    every ``factor``-th point gives an exact sample on ``grid`` of the same
    path. Both are integrated and compared on the coarse points.
    """
    if int(factor) != factor or factor < 2:
        raise DomainError(f"factor must be an integer >= 2, got {factor}")
    fine = sample_fbm_circulant(TimeGrid(grid.horizon, grid.n_steps * factor), params.hurst,
                                path_seed(master_seed, 0))
    coarse = FbmSample(grid, params.hurst, fine.values[::factor], fine.seed)
    x_fine = euler_regularized(params, fine).values[::factor]
    x_coarse = euler_regularized(params, coarse).values
    return {
        "fine_dt": grid.dt / factor,
        "sup_gap": float(np.max(np.abs(x_fine - x_coarse))),
        "x_T_gap": float(abs(x_fine[-1] - x_coarse[-1])),
    }
