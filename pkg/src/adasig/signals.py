"""Signal families, input signals, dead-zone/set norms and regularity estimators.

A signal family is a scalar map f(xi, theta) together with the interval of
admissible parameters, a declared equivalence structure (parameter values
that produce identical signals), and Lipschitz constants in theta and xi.
Classification of a measured signal is only meaningful up to the declared
equivalence sets, so those are part of the family definition rather than
something the library tries to discover.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SignalClass",
    "InputSignal",
    "PersistencyEstimate",
    "LipschitzEstimate",
    "RhoEnvelope",
    "deadzone_norm",
    "set_distance",
    "eval_signal",
    "estimate_persistency",
    "persistency_envelope",
    "degenerate_xi",
    "estimate_lipschitz",
    "builtin_class",
    "sin_input",
    "BUILTIN_FAMILIES",
]


def deadzone_norm(x: float, delta: float) -> float:
    """|x| - delta outside the dead zone of half-width delta, else 0."""
    if delta < 0:
        raise ValueError(f"dead-zone width must be non-negative, got {delta}")
    return max(abs(x) - delta, 0.0)


def set_distance(x: float, intervals: Sequence[tuple[float, float]]) -> float:
    """Distance from x to a finite union of closed intervals (points as [p, p])."""
    if len(intervals) == 0:
        raise ValueError("set_distance of an empty set is undefined")
    best = math.inf
    for lo, hi in intervals:
        if lo <= x <= hi:
            return 0.0
        best = min(best, abs(x - lo), abs(x - hi))
    return best


@dataclass
class SignalClass:
    """One signal family f(xi, theta) with its equivalence structure.

    equivalence maps theta to a finite list of (lo, hi) intervals; singleton
    parameter values are represented as degenerate intervals. The declared
    lipschitz_theta / lipschitz_xi constants are upper bounds that
    estimate_lipschitz can cross-check on a grid.
    """

    id: int
    name: str
    f: Callable[[np.ndarray, float], np.ndarray]
    theta_range: tuple[float, float]
    equivalence: Callable[[float], list[tuple[float, float]]]
    lipschitz_theta: float
    lipschitz_xi: float

    def __post_init__(self):
        lo, hi = self.theta_range
        if not lo < hi:
            raise ValueError(f"theta_range must be a proper interval, got {self.theta_range}")

    def equivalence_set(self, theta: float) -> list[tuple[float, float]]:
        sets = self.equivalence(theta)
        if set_distance(theta, sets) > 0:
            raise ValueError(f"declared equivalence set for theta={theta} does not contain theta")
        return sets


@dataclass
class InputSignal:
    """Known scalar input xi(t) with bounds on its magnitude and slope."""

    xi: Callable[[np.ndarray], np.ndarray]
    xi_sup: float
    dxi_sup: float

    def __call__(self, t):
        return self.xi(t)


@dataclass
class PersistencyEstimate:
    """Sampled lower envelope of the excitation gap between two parameters.

    Each sample pairs a parameter separation with the worst-window maximum
    deviation |f(xi(t), theta) - f(xi(t), theta')| observed over a horizon.
    """

    window_T: float
    rho_samples: list[tuple[float, float]] = field(default_factory=list)
    satisfied: bool = False

    def add(self, separation: float, deviation: float) -> None:
        self.rho_samples.append((separation, deviation))
        self.rho_samples.sort(key=lambda p: p[0])
        seps = [p[0] for p in self.rho_samples]
        if len(set(seps)) != len(seps):
            raise ValueError("duplicate separation in persistency samples")


def eval_signal(clazz: SignalClass, inp: InputSignal, theta: float, t: float) -> float:
    """f(xi(t), theta)."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    return float(clazz.f(inp.xi(np.asarray(t, dtype=float)), theta))


def estimate_persistency(
    clazz: SignalClass,
    inp: InputSignal,
    theta: float,
    theta_prime: float,
    window_T: float,
    horizon: float,
    dt: float = 1e-3,
) -> PersistencyEstimate:
    """Worst-window excitation gap between theta and theta_prime.

    Tiles [0, horizon] with windows of length window_T, takes the maximum of
    |f(xi, theta) - f(xi, theta')| inside each window and returns the minimum
    over windows as one sample of the rho lower envelope, at separation
    dist(theta, E(theta')).
    """
    if window_T <= 0 or dt <= 0:
        raise ValueError("window_T and dt must be positive")
    if horizon < window_T:
        raise ValueError("horizon must cover at least one window")
    t = np.arange(0.0, horizon + dt / 2, dt)
    gap = np.abs(clazz.f(inp.xi(t), theta) - clazz.f(inp.xi(t), theta_prime))
    per_win = int(round(window_T / dt))
    n_win = len(t) // per_win
    window_max = gap[: n_win * per_win].reshape(n_win, per_win).max(axis=1)
    envelope = float(window_max.min())
    sep = set_distance(theta, clazz.equivalence_set(theta_prime))
    est = PersistencyEstimate(window_T=window_T)
    est.add(sep, envelope)
    est.satisfied = envelope > 0.0
    return est


def persistency_envelope(
    clazz: SignalClass,
    inp: InputSignal,
    theta_ref: float,
    separations: Sequence[float],
    window_T: float,
    horizon: float,
    dt: float = 1e-3,
) -> PersistencyEstimate:
    """Envelope samples at several separations from a fixed reference theta."""
    est = PersistencyEstimate(window_T=window_T)
    est.satisfied = True
    for sep in separations:
        one = estimate_persistency(clazz, inp, theta_ref + sep, theta_ref, window_T, horizon, dt)
        est.add(one.rho_samples[0][0], one.rho_samples[0][1])
        est.satisfied = est.satisfied and one.satisfied
    return est


class RhoEnvelope:
    """Monotone lower-envelope model of the excitation function rho.

    Built from sampled (separation, deviation) pairs; regularized to be
    non-decreasing so that an inverse exists. Evaluating the inverse outside
    the certified range extrapolates linearly and emits a warning.
    """

    def __init__(self, samples: Sequence[tuple[float, float]]):
        pts = sorted((s, d) for s, d in samples)
        if not pts or pts[0][0] < 0:
            raise ValueError("need samples at non-negative separations")
        seps = np.array([0.0] + [p[0] for p in pts])
        devs = np.array([0.0] + [p[1] for p in pts])
        self.seps = seps
        self.devs = np.maximum.accumulate(devs)

    def __call__(self, sep: float) -> float:
        if sep > self.seps[-1]:
            warnings.warn("rho evaluated beyond the certified separation range")
        return float(np.interp(sep, self.seps, self.devs))

    def inverse(self, value: float) -> float:
        """Class-K inverse of the envelope; warns when extrapolating."""
        if value <= 0:
            return 0.0
        if value > self.devs[-1]:
            warnings.warn("rho inverse evaluated beyond the certified range; extrapolating")
            # continue with the slope of the last strictly increasing segment
            inc = np.nonzero(np.diff(self.devs) > 0)[0]
            if len(inc) == 0:
                return math.inf
            k = inc[-1]
            slope = (self.seps[k + 1] - self.seps[k]) / (self.devs[k + 1] - self.devs[k])
            return float(self.seps[-1] + (value - self.devs[-1]) * slope)
        return float(np.interp(value, self.devs, self.seps))


def degenerate_xi(t0: float = 0.0) -> InputSignal:
    """Input whose quiet intervals grow without bound.

    xi(t) = sin^2(ln(t - t0 + 1)) while sin(ln(t - t0 + 1)) >= 0, else 0.
    On long runs the zero stretches eventually exceed any fixed observation
    window, which defeats parameter recovery.
    """
    if t0 < 0:
        raise ValueError("t0 must be non-negative")

    def xi(t):
        t = np.asarray(t, dtype=float)
        w = np.sin(np.log(np.maximum(t - t0 + 1.0, 1.0)))
        return np.where(w >= 0.0, w * w, 0.0)

    return InputSignal(xi=xi, xi_sup=1.0, dxi_sup=2.0)


@dataclass
class LipschitzEstimate:
    d_theta: float
    d_xi: float
    d_f: float
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def estimate_lipschitz(
    clazz: SignalClass,
    inp: InputSignal,
    theta_grid: np.ndarray,
    xi_grid: np.ndarray,
    tol: float = 1e-9,
) -> LipschitzEstimate:
    """Finite-difference estimates of the theta/xi Lipschitz constants.

    d_f = 2 * d_xi * dxi_sup bounds the slope of the difference signal
    f(xi(t), theta) - f(xi(t), theta') used by the accuracy analysis.
    """
    tg = np.asarray(theta_grid, dtype=float)
    xg = np.asarray(xi_grid, dtype=float)
    F = clazz.f(xg[None, :], tg[:, None])  # (n_theta, n_xi)
    with np.errstate(invalid="ignore"):
        d_theta = float(np.max(np.abs(np.diff(F, axis=0)) / np.abs(np.diff(tg))[:, None]))
        d_xi = float(np.max(np.abs(np.diff(F, axis=1)) / np.abs(np.diff(xg))[None, :]))
    d_f = 2.0 * d_xi * inp.dxi_sup
    est = LipschitzEstimate(d_theta=d_theta, d_xi=d_xi, d_f=d_f)
    if d_theta > clazz.lipschitz_theta + tol:
        est.violations.append(
            f"theta slope {d_theta:.6g} exceeds declared {clazz.lipschitz_theta:.6g}"
        )
    if d_xi > clazz.lipschitz_xi + tol:
        est.violations.append(f"xi slope {d_xi:.6g} exceeds declared {clazz.lipschitz_xi:.6g}")
    return est


# ---------------------------------------------------------------------------
# Built-in families. All three satisfy the excitation assumption for
# xi(t) = sin t; parameterizations are injective on the declared ranges, so
# every equivalence set is the singleton {theta}.

def _singleton(theta: float) -> list[tuple[float, float]]:
    return [(theta, theta)]


def _make_linear(theta_range, xi_sup):
    d_theta = xi_sup
    d_xi = max(abs(theta_range[0]), abs(theta_range[1]))
    return dict(
        f=lambda xi, th: th * xi,
        equivalence=_singleton,
        lipschitz_theta=d_theta,
        lipschitz_xi=d_xi,
    )


def _make_sine(theta_range, xi_sup):
    return dict(
        f=lambda xi, th: np.sin(th * xi),
        equivalence=_singleton,
        lipschitz_theta=xi_sup,
        lipschitz_xi=max(abs(theta_range[0]), abs(theta_range[1])),
    )


def _make_quadratic_affine(theta_range, xi_sup):
    lo, hi = theta_range
    if lo < 0.5 or hi > 2.0:
        raise ValueError("quadratic-affine family is declared injective only on [0.5, 2]")
    return dict(
        f=lambda xi, th: th * th * xi + th,
        equivalence=_singleton,
        lipschitz_theta=2.0 * hi * xi_sup + 1.0,
        lipschitz_xi=hi * hi,
    )


BUILTIN_FAMILIES = {
    "linear": _make_linear,
    "sine": _make_sine,
    "quadratic-affine": _make_quadratic_affine,
}


def builtin_class(name: str, theta_range=(0.5, 2.0), xi_sup: float = 1.0, id: int = 0) -> SignalClass:
    """Construct one of the shipped families by name."""
    if name not in BUILTIN_FAMILIES:
        raise KeyError(f"unknown family {name!r}; available: {sorted(BUILTIN_FAMILIES)}")
    spec = BUILTIN_FAMILIES[name](tuple(theta_range), xi_sup)
    return SignalClass(id=id, name=name, theta_range=tuple(theta_range), **spec)


def sin_input() -> InputSignal:
    return InputSignal(xi=np.sin, xi_sup=1.0, dxi_sup=1.0)
