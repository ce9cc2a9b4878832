"""The vanishing-regularization limit and its reflection decomposition.

A limit path is obtained by solving the regularized equation along one fBm
sample for a geometric sequence of regularization levels ``eps_k``. From the
finest path the module extracts

    X_i = X0 + a * I_i + sigma * B_i + L_i,

where ``I`` is a left-endpoint quadrature of ``1 / X`` over the grid points
off the discrete zero set ``{X <= z_thresh}`` and ``L`` collects what the
regularized drift contributes on the zero set. ``L`` is the reflection
function: it starts at zero, never decreases, and only moves at the zero
set.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError
from .sde import RegularizedPath, euler_regularized

TOL_MONO = 1e-8


@dataclass(frozen=True)
class EpsilonSchedule:
    """Geometric levels ``eps_k = eps_0 * ratio**k``, ``k < max_levels``."""

    eps_0: float = 6.4e-3
    ratio: float = 0.5
    max_levels: int = 7
    tol_limit: float = 1e-2

    def __post_init__(self):
        if not (math.isfinite(self.eps_0) and self.eps_0 > 0):
            raise DomainError(f"eps_0 must be positive, got {self.eps_0}")
        if not 0 < self.ratio < 1:
            raise DomainError(f"ratio must lie in (0, 1), got {self.ratio}")
        if int(self.max_levels) != self.max_levels or self.max_levels < 2:
            raise DomainError(f"max_levels must be an integer >= 2, got {self.max_levels}")
        if not self.tol_limit > 0:
            raise DomainError(f"tol_limit must be positive, got {self.tol_limit}")
        object.__setattr__(self, "max_levels", int(self.max_levels))

    @classmethod
    def ending_at(cls, eps_final, ratio=0.5, levels=7, tol_limit=1e-2):
        """Schedule whose last level is exactly ``eps_final``."""
        return cls(eps_final / ratio ** (levels - 1), ratio, levels, tol_limit)

    @property
    def levels(self):
        return [self.eps_0 * self.ratio**k for k in range(self.max_levels)]

    @property
    def eps_final(self):
        return self.levels[-1]

    def scaled(self, factor):
        """Same schedule with every level multiplied by ``factor``."""
        return EpsilonSchedule(self.eps_0 * factor, self.ratio, self.max_levels, self.tol_limit)


@dataclass
class LimitDiagnostics:
    levels: list
    sup_gaps: list
    mono_violation_p99: float
    mono_violation_max: float
    converged: bool
    converged_at: int = None

    def to_dict(self):
        return {
            "levels": list(self.levels),
            "sup_gaps": list(self.sup_gaps),
            "converged": self.converged,
            "converged_at": self.converged_at,
            "mono_violation_p99": self.mono_violation_p99,
            "mono_violation_max": self.mono_violation_max,
        }


def epsilon_limit(params, fbm, schedule, stop_early=False):
    """Solve along ``fbm`` for every level of ``schedule``.

    The regularization in ``params`` is ignored; each level uses its own.

    Returns
    -------
    path : RegularizedPath
        Solution at the finest level computed.
    diagnostics : LimitDiagnostics
        ``sup_gaps[k]`` is the sup-norm distance between levels ``k`` and
        ``k + 1``; the monotone-violation statistics pool
        ``max(0, X^{eps_k} - X^{eps_{k+1}})`` over grid points and pairs.
        ``converged`` is true when the last gap is below ``schedule.tol_limit``.
    """
    if params.hurst > 0.5:
        raise InputError(f"the limit construction needs H <= 1/2, got {params.hurst}")
    levels, gaps, violations = [], [], []
    converged_at = None
    prev = None
    for eps in schedule.levels:
        path = euler_regularized(params.with_(epsilon=eps), fbm)
        levels.append(eps)
        if prev is not None:
            diff = path.values - prev.values
            gaps.append(float(np.max(np.abs(diff))))
            violations.append(np.maximum(-diff, 0.0))
            if converged_at is None and gaps[-1] < schedule.tol_limit:
                converged_at = len(levels) - 1
                if stop_early:
                    prev = path
                    break
        prev = path
    pooled = np.concatenate(violations)
    diag = LimitDiagnostics(
        levels=levels,
        sup_gaps=gaps,
        mono_violation_p99=float(np.quantile(pooled, 0.99)),
        mono_violation_max=float(pooled.max()),
        converged=gaps[-1] < schedule.tol_limit,
        converged_at=converged_at,
    )
    return prev, diag


def drift_integral(x, cap, grid, offset=0.0, zero_threshold=None):
    """Left-endpoint quadrature ``I_i = sum_{j<i} min(1 / (X_j^+ + offset), cap) dt``.

    ``1 / 0`` is read as ``cap``. When ``zero_threshold`` is given, grid
    points with ``X_j <= zero_threshold`` contribute nothing; they belong to
    the reflection term instead.
    """
    if not cap > 0:
        raise DomainError(f"cap must be positive, got {cap}")
    x = np.asarray(x, dtype=float)
    if x.shape != (grid.n_steps + 1,):
        raise InputError(f"path has shape {x.shape}, grid needs {grid.n_steps + 1} points")
    denom = np.maximum(x[:-1], 0.0) + offset
    with np.errstate(divide="ignore"):
        integrand = np.where(denom > 0, np.minimum(1.0 / denom, cap), cap)
    if zero_threshold is not None:
        integrand = np.where(x[:-1] > zero_threshold, integrand, 0.0)
    out = np.empty_like(x)
    out[0] = 0.0
    np.cumsum(integrand * grid.dt, out=out[1:])
    return out


@dataclass(eq=False)
class ReflectionDecomposition:
    """``X = X0 + a I + sigma B + L`` on the grid, with invariant checks."""

    x: np.ndarray = field(repr=False)
    integral: np.ndarray = field(repr=False)
    reflection: np.ndarray = field(repr=False)
    z_thresh: float
    fbm: object = field(repr=False)
    params: object
    tol_mono: float = TOL_MONO

    @property
    def grid(self):
        return self.fbm.grid

    @property
    def rhs(self):
        """``X0 + a I + sigma B``, i.e. the path with the reflection removed."""
        p = self.params
        return p.x0 + p.a * self.integral + p.sigma * self.fbm.values

    @property
    def increments(self):
        return np.diff(self.reflection)

    @property
    def min_increment(self):
        return float(self.increments.min()) if self.increments.size else 0.0

    @property
    def ineq_residual_min(self):
        """Minimum of ``X - rhs`` (equals ``L``); must not be negative."""
        return float(np.min(self.x - self.rhs))

    def localization_violations(self):
        """Indices ``i`` where ``L`` rises by more than ``tol_mono`` away from zero."""
        rising = self.increments > self.tol_mono
        near_zero = np.minimum(self.x[:-1], self.x[1:]) <= self.z_thresh
        return np.flatnonzero(rising & ~near_zero)

    def positive_run_drift(self):
        """Largest ``|dL|`` across steps that stay strictly above ``z_thresh``."""
        inside = (self.x[:-1] > self.z_thresh) & (self.x[1:] > self.z_thresh)
        d = np.abs(self.increments[inside])
        return float(d.max()) if d.size else 0.0

    def increase_points(self, values=None):
        """Number of steps on which ``values`` (default ``L``) rises by more than ``tol_mono``."""
        values = self.reflection if values is None else values
        return int(np.sum(np.diff(values) > self.tol_mono))

    def report(self):
        return {
            "l0": float(self.reflection[0]),
            "min_increment": self.min_increment,
            "localization_violations": int(self.localization_violations().size),
            "ineq_residual_min": self.ineq_residual_min,
            "positive_run_drift": self.positive_run_drift(),
            "l_final": float(self.reflection[-1]),
            "zero_set_size": int(np.sum(self.x <= self.z_thresh)),
        }

    @property
    def ok(self):
        r = self.report()
        return (r["l0"] == 0.0 and r["min_increment"] >= -self.tol_mono
                and r["localization_violations"] == 0
                and r["ineq_residual_min"] >= -self.tol_mono)

    def to_csv(self, path):
        from .io import write_csv

        write_csv(path, ["t", "X", "I", "L", "B", "RHS"],
                  [self.grid.times, self.x, self.integral, self.reflection,
                   self.fbm.values, self.rhs])


def reflection_function(x, fbm, params, cap=None, z_thresh=None, tol_mono=TOL_MONO):
    """Split a limit path into drift integral and reflection function.

    Parameters
    ----------
    x : RegularizedPath or array
        Limit path, usually the first output of :func:`epsilon_limit`.
    fbm : FbmSample
        The noise that produced ``x``.
    params : SdeParams
        ``params.epsilon`` is the finest regularization level; it is the
        default zero threshold and offsets the quadrature integrand.
    cap : float, optional
        Integrand cap, default ``1 / params.epsilon``.

    Invariant failures are reported by :meth:`ReflectionDecomposition.report`,
    not raised.
    """
    if isinstance(x, RegularizedPath):
        x = x.values
    x = np.asarray(x, dtype=float)
    eps = params.epsilon
    cap = 1.0 / eps if cap is None else cap
    z_thresh = eps if z_thresh is None else z_thresh
    integral = drift_integral(x, cap, fbm.grid, offset=eps, zero_threshold=z_thresh)
    reflection = x - params.x0 - params.a * integral - params.sigma * fbm.values
    # the identity holds exactly at t = 0 since I_0 = B_0 = 0
    reflection[0] = 0.0
    return ReflectionDecomposition(x, integral, reflection, z_thresh, fbm, params, tol_mono)


def skorokhod_map(f):
    """One-sided Skorokhod reflection at zero.

    Returns ``(g, lam)`` with ``lam_i = max(0, max_{j<=i} -f_j)`` and
    ``g = f + lam``.
    """
    f = np.asarray(f, dtype=float)
    if f[0] < 0:
        raise DomainError(f"Skorokhod map needs f(0) >= 0, got {f[0]}")
    lam = np.maximum.accumulate(np.maximum(-f, 0.0))
    return f + lam, lam


def regulator_violations(g, lam):
    """Count breaches of the three regulator properties.

    Keys: ``negative`` (``g < 0``), ``decreasing`` (``lam`` drops or
    ``lam_0 != 0``) and ``off_zero`` (``lam`` rises while ``g > 0``).
    """
    g = np.asarray(g)
    lam = np.asarray(lam)
    dl = np.diff(lam)
    return {
        "negative": int(np.sum(g < 0)),
        "decreasing": int(np.sum(dl < 0)) + int(lam[0] != 0),
        "off_zero": int(np.sum((dl > 0) & (g[1:] != 0))),
    }
