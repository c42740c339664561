"""Time-dependent rate curves: evaluation, exact integrals, quadrature.

A RateFunction is one of four kinds:

    constant        f(t) = value
    sinusoid        f(t) = offset + amplitude * sin(omega * t + phase)
    exp_saturating  f(t) = offset + scale * (1 - exp(-rate * t)) ** 2
    tabulated       natural cubic spline through (times, values) knots

The three analytic kinds integrate in closed form.  Tabulated kinds go
through adaptive Simpson quadrature (absolute tolerance 1e-10, maximum
recursion depth 40); Simpson is exact on each cubic piece, so the
recursion only has to resolve knot crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "RateFunction",
    "RatePair",
    "constant",
    "sinusoid",
    "exp_saturating",
    "tabulated",
    "evaluate",
    "integrate",
    "increment_table",
    "adaptive_simpson",
    "check_window",
    "rate_to_dict",
    "rate_from_dict",
    "pair_to_dict",
    "pair_from_dict",
]

KINDS = ("constant", "sinusoid", "exp_saturating", "tabulated")

SIMPSON_TOL = 1e-10
SIMPSON_MAX_DEPTH = 40
SIMPSON_MIN_DEPTH = 4

_PARAM_KEYS = {
    "constant": ("value",),
    "sinusoid": ("offset", "amplitude", "omega", "phase"),
    "exp_saturating": ("offset", "scale", "rate"),
    "tabulated": ("times", "values"),
}


@dataclass(frozen=True, eq=False)
class RateFunction:
    """One scalar rate curve.  Treated as immutable after construction."""

    kind: str
    params: dict[str, Any]

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown rate kind {self.kind!r}, expected one of {KINDS}")
        missing = [k for k in _PARAM_KEYS[self.kind] if k not in self.params]
        if missing:
            raise ValueError(f"rate kind {self.kind!r} missing params {missing}")
        if self.kind == "tabulated":
            knots = np.asarray(self.params["times"], dtype=float)
            vals = np.asarray(self.params["values"], dtype=float)
            if knots.ndim != 1 or knots.size < 2 or vals.shape != knots.shape:
                raise ValueError("tabulated rate needs matching 1-d times/values with >= 2 knots")
            if not np.all(np.isfinite(knots)) or not np.all(np.isfinite(vals)):
                raise ValueError("tabulated knots must be finite")
            if np.any(np.diff(knots) <= 0):
                raise ValueError("tabulated knot times must be strictly increasing")
        else:
            for key in _PARAM_KEYS[self.kind]:
                v = self.params[key]
                if not isinstance(v, (int, float)) or not math.isfinite(float(v)):
                    raise ValueError(f"param {key!r} of {self.kind!r} must be a finite number")

    @cached_property
    def _spline(self) -> CubicSpline:
        # natural boundary: second derivative zero at both end knots
        return CubicSpline(
            np.asarray(self.params["times"], dtype=float),
            np.asarray(self.params["values"], dtype=float),
            bc_type="natural",
        )

    @property
    def window(self) -> tuple[float, float] | None:
        """Knot span for tabulated kinds, None for analytic kinds."""
        if self.kind != "tabulated":
            return None
        knots = self.params["times"]
        return float(knots[0]), float(knots[-1])

    def __call__(self, t):
        return evaluate(self, t)


def constant(value: float) -> RateFunction:
    """f(t) = value."""
    return RateFunction("constant", {"value": float(value)})


def sinusoid(offset: float, amplitude: float, omega: float, phase: float = 0.0) -> RateFunction:
    """f(t) = offset + amplitude * sin(omega * t + phase)."""
    return RateFunction(
        "sinusoid",
        {
            "offset": float(offset),
            "amplitude": float(amplitude),
            "omega": float(omega),
            "phase": float(phase),
        },
    )


def exp_saturating(offset: float, scale: float, rate: float) -> RateFunction:
    """f(t) = offset + scale * (1 - exp(-rate * t)) ** 2, saturating at offset + scale."""
    return RateFunction(
        "exp_saturating",
        {"offset": float(offset), "scale": float(scale), "rate": float(rate)},
    )


def tabulated(times, values) -> RateFunction:
    """Natural cubic spline through the given knots.

    Evaluation outside the knot span is an error; we refuse to
    extrapolate rate curves silently.
    """
    return RateFunction(
        "tabulated",
        {
            "times": tuple(float(v) for v in np.asarray(times, dtype=float)),
            "values": tuple(float(v) for v in np.asarray(values, dtype=float)),
        },
    )


def evaluate(f: RateFunction, t):
    """Rate value at time t.  Scalar in, float out; array in, array out."""
    t_arr = np.asarray(t, dtype=float)
    p = f.params
    if f.kind == "constant":
        out = np.full(t_arr.shape, p["value"])
    elif f.kind == "sinusoid":
        out = p["offset"] + p["amplitude"] * np.sin(p["omega"] * t_arr + p["phase"])
    elif f.kind == "exp_saturating":
        out = p["offset"] + p["scale"] * (1.0 - np.exp(-p["rate"] * t_arr)) ** 2
    else:
        lo, hi = f.window
        # tiny slack for float round-off on grid endpoints
        tol = 1e-9 * max(1.0, abs(lo), abs(hi))
        if np.any(t_arr < lo - tol) or np.any(t_arr > hi + tol):
            raise ValueError(
                f"time outside tabulated window [{lo}, {hi}]"
            )
        out = f._spline(np.clip(t_arr, lo, hi))
    if np.ndim(t) == 0:
        return float(out)
    return out


def _antiderivative(f: RateFunction, t_arr: np.ndarray) -> np.ndarray:
    """Closed-form antiderivative values for analytic kinds (constant of
    integration arbitrary)."""
    p = f.params
    if f.kind == "constant":
        return p["value"] * t_arr
    if f.kind == "sinusoid":
        a, b, w, phi = p["offset"], p["amplitude"], p["omega"], p["phase"]
        if w == 0.0:
            return (a + b * math.sin(phi)) * t_arr
        return a * t_arr - (b / w) * np.cos(w * t_arr + phi)
    if f.kind == "exp_saturating":
        a, b, c = p["offset"], p["scale"], p["rate"]
        if c == 0.0:
            # (1 - exp(0))**2 == 0, the curve is the constant a
            return a * t_arr
        return (a + b) * t_arr + (2.0 * b / c) * np.exp(-c * t_arr) - (b / (2.0 * c)) * np.exp(
            -2.0 * c * t_arr
        )
    raise ValueError(f"no closed-form antiderivative for kind {f.kind!r}")


def integrate(f: RateFunction, t0: float, t: float) -> float:
    """Integral of the rate over [t0, t].  Requires t >= t0."""
    if t < t0:
        raise ValueError(f"integration endpoint t={t} precedes t0={t0}")
    if t == t0:
        return 0.0
    if f.kind == "tabulated":
        return adaptive_simpson(lambda s: evaluate(f, s), t0, t)
    ends = _antiderivative(f, np.array([t0, t], dtype=float))
    return float(ends[1] - ends[0])


def increment_table(f: RateFunction, grid) -> np.ndarray:
    """Per-step integrals: entry j-1 is integrate(f, t_{j-1}, t_j).

    `grid` may be a TimeGrid or any 1-d array of increasing times.
    """
    times = np.asarray(getattr(grid, "times", grid), dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("need at least two grid times")
    if np.any(np.diff(times) <= 0):
        raise ValueError("grid times must be strictly increasing")
    if f.kind == "tabulated":
        return np.array(
            [adaptive_simpson(lambda s: evaluate(f, s), a, b) for a, b in zip(times[:-1], times[1:])]
        )
    return np.diff(_antiderivative(f, times))


def adaptive_simpson(
    fn,
    a: float,
    b: float,
    tol: float = SIMPSON_TOL,
    max_depth: int = SIMPSON_MAX_DEPTH,
    min_depth: int = SIMPSON_MIN_DEPTH,
) -> float:
    """Adaptive Simpson quadrature with the classic (S2 - S1)/15 error control.

    The first `min_depth` splits are unconditional: an oscillatory integrand
    on a near-symmetric window can fool the very first error estimate into
    an exact cancellation, so we refuse to trust it until the panels are
    small enough to see the structure.
    """
    if b < a:
        raise ValueError("adaptive_simpson needs a <= b")
    if a == b:
        return 0.0
    fa, fb = fn(a), fn(b)
    m = 0.5 * (a + b)
    fm = fn(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(fn, a, b, fa, fm, fb, whole, tol, max_depth, min_depth)


def _simpson_rec(fn, a, b, fa, fm, fb, whole, tol, depth, force):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = fn(lm), fn(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if depth <= 0 or (force <= 0 and abs(err) <= 15.0 * tol):
        return left + right + err / 15.0
    half = 0.5 * tol
    return _simpson_rec(
        fn, a, m, fa, flm, fm, left, half, depth - 1, force - 1
    ) + _simpson_rec(fn, m, b, fm, frm, fb, right, half, depth - 1, force - 1)


def check_window(
    f: RateFunction,
    t0: float,
    t_end: float,
    n: int,
    *,
    bound: float | None = None,
    positive: bool = False,
    nonnegative: bool = False,
) -> None:
    """Dense-sample validation of a rate over [t0, t_end].

    Samples 10*n points.  Raises ValueError on non-finite values, on
    |value| > bound when a bound is given, and on sign violations.
    """
    if t_end < t0:
        raise ValueError("t_end must be >= t0")
    sample = np.linspace(t0, t_end, max(2, 10 * int(n)))
    vals = np.asarray(evaluate(f, sample), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"rate kind {f.kind!r} is non-finite on [{t0}, {t_end}]")
    if bound is not None and np.any(np.abs(vals) > bound):
        raise ValueError(f"rate kind {f.kind!r} exceeds bound {bound} on [{t0}, {t_end}]")
    if positive and np.any(vals <= 0.0):
        raise ValueError(f"rate kind {f.kind!r} must be strictly positive on [{t0}, {t_end}]")
    if nonnegative and np.any(vals < 0.0):
        raise ValueError(f"rate kind {f.kind!r} must be nonnegative on [{t0}, {t_end}]")


@dataclass(frozen=True, eq=False)
class RatePair:
    """Transmission intensity, noise intensity and the carrying capacity.

    The noise intensity is the one that must stay positive on the
    working window; the transmission intensity may dip negative
    (seasonal forcing) without breaking the model.
    """

    transmission: RateFunction
    noise: RateFunction
    capacity: float

    def __post_init__(self) -> None:
        if not (isinstance(self.capacity, (int, float)) and math.isfinite(self.capacity)):
            raise ValueError("capacity must be a finite number")
        if self.capacity <= 0.0:
            raise ValueError("capacity must be positive")
        object.__setattr__(self, "capacity", float(self.capacity))

    def validate_window(
        self,
        t0: float,
        t_end: float,
        n: int,
        *,
        allow_zero_noise: bool = False,
        transmission_bound: float | None = None,
        noise_bound: float | None = None,
    ) -> None:
        check_window(self.transmission, t0, t_end, n, bound=transmission_bound)
        check_window(
            self.noise,
            t0,
            t_end,
            n,
            bound=noise_bound,
            positive=not allow_zero_noise,
            nonnegative=allow_zero_noise,
        )


def rate_to_dict(f: RateFunction) -> dict:
    """JSON-ready descriptor: {"kind": ..., "params": {...}}."""
    params = {}
    for k, v in f.params.items():
        params[k] = list(v) if isinstance(v, tuple) else v
    return {"kind": f.kind, "params": params}


def rate_from_dict(d: dict) -> RateFunction:
    """Inverse of rate_to_dict, with validation."""
    if not isinstance(d, dict) or "kind" not in d or "params" not in d:
        raise ValueError("rate descriptor must be {'kind': ..., 'params': {...}}")
    kind = d["kind"]
    if kind not in KINDS:
        raise ValueError(f"unknown rate kind {kind!r}, expected one of {KINDS}")
    params = dict(d["params"])
    if kind == "sinusoid":
        params.setdefault("phase", 0.0)
    missing = [k for k in _PARAM_KEYS[kind] if k not in params]
    if missing:
        raise ValueError(f"rate kind {kind!r} descriptor missing params {missing}")
    if kind == "tabulated":
        return tabulated(params["times"], params["values"])
    return RateFunction(kind, {k: float(params[k]) for k in _PARAM_KEYS[kind]})


def pair_to_dict(pair: RatePair) -> dict:
    return {
        "transmission": rate_to_dict(pair.transmission),
        "noise": rate_to_dict(pair.noise),
        "capacity": pair.capacity,
    }


def pair_from_dict(d: dict) -> RatePair:
    for key in ("transmission", "noise", "capacity"):
        if key not in d:
            raise ValueError(f"rate pair descriptor missing {key!r}")
    return RatePair(
        transmission=rate_from_dict(d["transmission"]),
        noise=rate_from_dict(d["noise"]),
        capacity=float(d["capacity"]),
    )
