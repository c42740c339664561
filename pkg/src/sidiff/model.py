"""Closed-form law of the logistic growth diffusion on (0, K).

The process X(t) is built by randomizing the accumulated growth of the
logistic curve: with Lam(t|t0) the integral of the transmission
intensity and V(t|t0) the integral of the noise intensity, the
transformed coordinate

    y = ln( x (K - x0) / (x0 (K - x)) )

is Gaussian with mean Lam(t|t0) and variance V(t|t0).  Everything here
(transition pdf/cdf, conditional median and moments) is that one fact
plus the change of variables.  The drift/diffusion pair of the
equivalent state equation follows by Ito expansion of the inverse
transform; note the state-dependent correction in the drift, without
which the transformed coordinate would not have unit slope in the
transmission intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.special import erf

from .rates import RateFunction, RatePair, constant, evaluate, integrate

__all__ = [
    "DegenerateTimeError",
    "TransitionLaw",
    "deterministic_solution",
    "threshold_time",
    "x_to_y",
    "y_to_x",
    "infinitesimal_moments",
    "transition_pdf",
    "transition_cdf",
    "conditional_median",
    "conditional_moment",
]

BISECT_TIME_TOL = 1e-10
GH_DEFAULT_ORDER = 64
GH_MAX_ORDER = 1024
GH_STABLE_RTOL = 1e-9


class DegenerateTimeError(ValueError):
    """The requested transition law is a point mass.

    Raised for t <= t0 or when the accumulated noise variance is zero.
    `point_mass` carries the location of the unit atom.
    """

    def __init__(self, message: str, point_mass: float):
        super().__init__(message)
        self.point_mass = float(point_mass)


def _as_rate(lam) -> RateFunction:
    return lam if isinstance(lam, RateFunction) else constant(float(lam))


def deterministic_solution(capacity: float, x0: float, transmission, t0: float, t):
    """Noise-free logistic solution started from x0 at t0.

    `transmission` may be a RateFunction or a plain number.  Vectorized
    over t.
    """
    _check_state(x0, capacity, "x0")
    lam = _as_rate(transmission)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < t0):
        raise ValueError("t must be >= t0")
    growth = np.array([integrate(lam, t0, float(ti)) for ti in np.atleast_1d(t_arr)])
    out = capacity * x0 / (x0 + (capacity - x0) * np.exp(-growth))
    if np.ndim(t) == 0:
        return float(out[0])
    return out.reshape(t_arr.shape)


def threshold_time(
    capacity: float,
    x0: float,
    transmission,
    level: float,
    t0: float = 0.0,
    t_max: float = 1e6,
) -> float:
    """First time the noise-free solution reaches `level`.

    Constant transmission uses the closed form
    t0 + ln(level (K - x0) / (x0 (K - level))) / value; any other kind
    is solved by bisection on the accumulated growth (time tolerance
    1e-10).  Bisection rather than Newton: the transmission intensity
    may vanish or change sign inside the window.
    """
    _check_state(x0, capacity, "x0")
    if not (x0 < level < capacity):
        raise ValueError(f"level must lie in (x0, capacity) = ({x0}, {capacity})")
    lam = _as_rate(transmission)
    target = math.log(level * (capacity - x0) / (x0 * (capacity - level)))
    if lam.kind == "constant":
        value = lam.params["value"]
        if value <= 0.0:
            raise ValueError("constant transmission must be positive to reach the level")
        return t0 + target / value
    # bracket the root by doubling, then bisect
    hi = t0 + 1.0
    while integrate(lam, t0, hi) < target:
        hi = t0 + 2.0 * (hi - t0)
        if hi - t0 > t_max - t0:
            raise ValueError(f"threshold not reached within [{t0}, {t_max}]")
    return float(
        bisect(lambda s: integrate(lam, t0, s) - target, t0, hi, xtol=BISECT_TIME_TOL)
    )


def _check_state(x, capacity, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= capacity):
        raise ValueError(f"{name} must lie strictly inside (0, {capacity})")


def x_to_y(x, x0: float, capacity: float):
    """Forward transform ln(x (K - x0) / (x0 (K - x))).  Vectorized."""
    _check_state(x0, capacity, "x0")
    _check_state(x, capacity, "x")
    x_arr = np.asarray(x, dtype=float)
    out = np.log(x_arr * (capacity - x0) / (x0 * (capacity - x_arr)))
    if np.ndim(x) == 0:
        return float(out)
    return out


def y_to_x(y, x0: float, capacity: float):
    """Inverse transform K x0 / (x0 + (K - x0) exp(-y)).  Vectorized.

    Large |y| saturates toward the interval ends; values within roughly
    37 of zero stay strictly inside (0, K) in double precision.
    """
    _check_state(x0, capacity, "x0")
    y_arr = np.asarray(y, dtype=float)
    out = capacity * x0 / (x0 + (capacity - x0) * np.exp(-y_arr))
    if np.ndim(y) == 0:
        return float(out)
    return out


def infinitesimal_moments(x, t: float, rates: RatePair):
    """Drift and squared diffusion of the state equation at (x, t).

    drift     = x (K - x) / K * (lam + s2 (K - 2 x) / (2 K))
    diffusion = s2 * x**2 (K - x)**2 / K**2

    Equivalently drift = lam x (K - x) / K + (1/4) d(diffusion)/dx; the
    state-dependent second term is the Ito correction of the inverse
    transform.  Both vanish at x = 0 and x = K, so the boundary is
    unattainable.  Accepts the closed interval [0, K].
    """
    x_arr = np.asarray(x, dtype=float)
    k = rates.capacity
    if np.any(x_arr < 0.0) or np.any(x_arr > k):
        raise ValueError(f"x must lie in [0, {k}]")
    lam = evaluate(rates.transmission, t)
    s2 = evaluate(rates.noise, t)
    logistic = x_arr * (k - x_arr) / k
    drift = logistic * (lam + s2 * (k - 2.0 * x_arr) / (2.0 * k))
    diffusion = s2 * logistic**2
    if np.ndim(x) == 0:
        return float(drift), float(diffusion)
    return drift, diffusion


@dataclass(frozen=True, eq=False)
class TransitionLaw:
    """Conditional law of X(t) given X(t0) = x0."""

    rates: RatePair
    x0: float
    t0: float

    def __post_init__(self) -> None:
        _check_state(self.x0, self.rates.capacity, "x0")

    def accumulated(self, t: float) -> tuple[float, float]:
        """(growth, variance) integrals over [t0, t].

        Raises DegenerateTimeError when the law at t is a point mass.
        """
        if t <= self.t0:
            raise DegenerateTimeError(
                f"law at t={t} <= t0={self.t0} is a point mass at x0", self.x0
            )
        lam_int = integrate(self.rates.transmission, self.t0, t)
        var_int = integrate(self.rates.noise, self.t0, t)
        if var_int <= 0.0:
            atom = y_to_x(lam_int, self.x0, self.rates.capacity)
            raise DegenerateTimeError(
                f"zero accumulated noise on [{self.t0}, {t}], law is a point mass", atom
            )
        return lam_int, var_int


def transition_pdf(law: TransitionLaw, x, t: float):
    """Transition density at state x and time t.  Vectorized over x."""
    lam_int, var_int = law.accumulated(t)
    k = law.rates.capacity
    _check_state(x, k, "x")
    x_arr = np.asarray(x, dtype=float)
    y = np.log(x_arr * (k - law.x0) / (law.x0 * (k - x_arr)))
    log_pdf = (
        math.log(k)
        - np.log(x_arr)
        - np.log(k - x_arr)
        - 0.5 * math.log(2.0 * math.pi * var_int)
        - (y - lam_int) ** 2 / (2.0 * var_int)
    )
    out = np.exp(log_pdf)
    if np.ndim(x) == 0:
        return float(out)
    return out


def transition_cdf(law: TransitionLaw, x, t: float):
    """Transition distribution function at state x and time t."""
    lam_int, var_int = law.accumulated(t)
    k = law.rates.capacity
    _check_state(x, k, "x")
    x_arr = np.asarray(x, dtype=float)
    y = np.log(x_arr * (k - law.x0) / (law.x0 * (k - x_arr)))
    out = 0.5 * (1.0 + erf((y - lam_int) / math.sqrt(2.0 * var_int)))
    if np.ndim(x) == 0:
        return float(out)
    return out


def conditional_median(law: TransitionLaw, t: float) -> float:
    """Median of X(t) given X(t0) = x0: the noise-free solution."""
    if t < law.t0:
        raise ValueError("t must be >= t0")
    lam_int = integrate(law.rates.transmission, law.t0, t)
    k = law.rates.capacity
    return float(k * law.x0 / (law.x0 + (k - law.x0) * math.exp(-lam_int)))


def conditional_moment(
    law: TransitionLaw,
    m: int,
    t: float,
    *,
    order: int = GH_DEFAULT_ORDER,
    rtol: float = GH_STABLE_RTOL,
    max_order: int = GH_MAX_ORDER,
) -> float:
    """m-th conditional moment E[X(t)^m | X(t0) = x0].

    Gauss-Hermite quadrature on the Gaussian coordinate, starting at
    `order` nodes and doubling until the relative change drops below
    `rtol`.  The integrand is bounded by K^m, so the rule converges
    fast for every parameter set.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError("moment order m must be an integer >= 1")
    lam_int, var_int = law.accumulated(t)
    k = law.rates.capacity
    ratio = (k - law.x0) / law.x0
    spread = math.sqrt(2.0 * var_int)

    def quad(n_nodes: int) -> float:
        z, w = np.polynomial.hermite.hermgauss(n_nodes)
        vals = (1.0 + ratio * np.exp(-z * spread - lam_int)) ** (-float(m))
        return k**m / math.sqrt(math.pi) * float(np.sum(w * vals))

    current = quad(order)
    n = order
    while n < max_order:
        n *= 2
        refined = quad(n)
        if abs(refined - current) <= rtol * max(abs(refined), 1e-300):
            return refined
        current = refined
    raise RuntimeError(f"Gauss-Hermite failed to stabilize by order {max_order}")
