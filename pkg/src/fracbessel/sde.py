"""Explicit Euler schemes for the regularized Bessel-type equation.

The regularized equation is

    X_t = X0 + a * int_0^t ds / (X_s 1{X_s > 0} + eps) + sigma * B_t,

whose drift is bounded by ``a / eps``. The scheme evaluates the drift at the
left endpoint of each step and accumulates the drift integral ``I`` so that
``X_i = X0 + a * I_i + sigma * B_i`` holds at every index up to rounding.
"""

import math
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .errors import DomainError, InputError, NumericError
from .fbm import FbmSample, check_hurst

POSITIVITY_FLOOR = 1e-12


@dataclass(frozen=True)
class SdeParams:
    """Coefficients of the regularized equation.

    ``a = 0`` is admitted for the small-drift limit; ``sigma`` defaults to 1.
    """

    x0: float = 1.0
    a: float = 1.0
    sigma: float = 1.0
    hurst: float = 0.25
    epsilon: float = 1e-4

    def __post_init__(self):
        for name in ("x0", "a", "sigma", "epsilon"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.x0 <= 0:
            raise DomainError(f"x0 must be positive, got {self.x0}")
        if self.a < 0:
            raise DomainError(f"a must be nonnegative, got {self.a}")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.epsilon <= 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        object.__setattr__(self, "hurst", check_hurst(self.hurst))

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class RegularizedPath:
    """Euler solution of the regularized equation driven by ``fbm``."""

    params: SdeParams
    fbm: FbmSample = field(repr=False)
    values: np.ndarray = field(repr=False)
    drift_sum: np.ndarray = field(repr=False)

    @property
    def grid(self):
        return self.fbm.grid

    def identity_residual(self):
        """``max_i |X_i - X0 - a I_i - sigma B_i|``."""
        p = self.params
        rhs = p.x0 + p.a * self.drift_sum + p.sigma * self.fbm.values
        return float(np.max(np.abs(self.values - rhs)))

    def to_csv(self, path):
        from .io import write_csv

        write_csv(path, ["t", "X", "I", "B"],
                  [self.grid.times, self.values, self.drift_sum, self.fbm.values])


@numba.njit(cache=True, nogil=True)
def _regularized_kernel(x0, a, sigma, eps, dt, b, x, integral):
    x[0] = x0
    integral[0] = 0.0
    for i in range(b.size - 1):
        xi = x[i]
        pos = xi if xi > 0.0 else 0.0
        integral[i + 1] = integral[i] + dt / (pos + eps)
        x[i + 1] = x0 + a * integral[i + 1] + sigma * b[i + 1]
        if not math.isfinite(x[i + 1]):
            return i + 1
    return -1


@numba.njit(cache=True, nogil=True)
def _regularized_batch_kernel(x0, a, sigma, eps, dt, b, x, integral):
    for k in range(b.shape[0]):
        bad = _regularized_kernel(x0, a, sigma, eps, dt, b[k], x[k], integral[k])
        if bad >= 0:
            return k, bad
    return -1, -1


@numba.njit(cache=True, nogil=True)
def _bessel_kernel(coef, x0, dt, floor, b, x):
    x[0] = x0
    for i in range(b.size - 1):
        xi = x[i] if x[i] > floor else floor
        # reflect at zero so the stored path stays nonnegative
        x[i + 1] = abs(x[i] + coef * dt / xi + (b[i + 1] - b[i]))
        if not math.isfinite(x[i + 1]):
            return i + 1
    return -1


def _check_noise(params, fbm):
    if fbm.hurst != params.hurst:
        raise InputError(f"sample has H={fbm.hurst} but params have H={params.hurst}")


def euler_regularized(params, fbm):
    """Integrate the regularized equation along one fBm sample.

    Parameters
    ----------
    params : SdeParams
    fbm : FbmSample
        Noise sample; its Hurst index must equal ``params.hurst``.

    Returns
    -------
    RegularizedPath

    Raises
    ------
    NumericError
        If a non-finite value appears; ``err.step`` is the grid index.
    """
    _check_noise(params, fbm)
    n = fbm.grid.n_steps
    x = np.empty(n + 1)
    integral = np.empty(n + 1)
    bad = _regularized_kernel(params.x0, params.a, params.sigma, params.epsilon,
                              fbm.grid.dt, fbm.values, x, integral)
    if bad >= 0:
        raise NumericError(f"non-finite state at step {bad}", step=bad)
    x.setflags(write=False)
    integral.setflags(write=False)
    return RegularizedPath(params, fbm, x, integral)


def euler_regularized_batch(params, ensemble):
    """Vectorized :func:`euler_regularized` over an :class:`~fracbessel.fbm.FbmEnsemble`.

    Returns ``(X, I)`` arrays with one row per path.
    """
    if ensemble.hurst != params.hurst:
        raise InputError(f"ensemble has H={ensemble.hurst} but params have H={params.hurst}")
    b = np.ascontiguousarray(ensemble.values)
    x = np.empty_like(b)
    integral = np.empty_like(b)
    k, bad = _regularized_batch_kernel(params.x0, params.a, params.sigma, params.epsilon,
                                       ensemble.grid.dt, b, x, integral)
    if bad >= 0:
        raise NumericError(f"non-finite state in path {k} at step {bad}", step=bad)
    return x, integral


def euler_classical_bessel(nu, x0, bm, floor=POSITIVITY_FLOOR):
    """Euler path of ``d rho = (nu - 1) / (2 rho) dt + dW`` for ``nu >= 2``.

    ``bm`` must be a Brownian sample (``H = 1/2``). The state is floored at
    ``floor`` before ``1 / rho`` is evaluated and reflected at zero after
    each step.
    """
    if bm.hurst != 0.5:
        raise InputError(f"classical Bessel needs Brownian noise, got H={bm.hurst}")
    if not nu >= 2:
        raise DomainError(f"dimension nu must be >= 2, got {nu}")
    if not x0 > 0:
        raise DomainError(f"x0 must be positive, got {x0}")
    x = np.empty(bm.grid.n_steps + 1)
    bad = _bessel_kernel(0.5 * (nu - 1.0), float(x0), bm.grid.dt, floor, bm.values, x)
    if bad >= 0:
        raise NumericError(f"non-finite state at step {bad}", step=bad)
    return x


def deterministic_envelope(x0, a, t):
    """Noiseless solution ``sqrt(x0**2 + 2 a t)`` of ``x' = a / x``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    out = np.sqrt(x0 * x0 + 2.0 * a * t)
    return float(out) if out.ndim == 0 else out
