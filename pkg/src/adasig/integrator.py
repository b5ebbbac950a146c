"""Fixed-step integration of the coupled measurement + classifier-bank system.

One trajectory holds the measurement s and, per class i, the subsystem state
(shat_i, x_i, y_i) together with the instantaneous read-outs (theta_hat_i,
hf_i). Everything is deterministic given the seed; records are immutable.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .plant import PlantSpec, make_noise
from .prototype import PrototypeConfig, init_state, prototype_rhs, theta_hat
from .signals import InputSignal, SignalClass

__all__ = ["Trajectory", "rk4_step", "integrate_system"]


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    columns: list[str]
    readouts: Optional[np.ndarray] = None
    readout_columns: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states lengths differ")
        if self.readouts is not None and len(self.readouts) != len(self.times):
            raise ValueError("readouts length differs from times")
        if not np.all(np.isfinite(self.times)) or not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory contains non-finite entries")
        steps = np.diff(self.times)
        if len(steps) and (np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]):
            raise ValueError("times must increase with a constant step")

    @property
    def n_classes(self) -> int:
        return (self.states.shape[1] - 1) // 3

    def column(self, name: str) -> np.ndarray:
        if name in self.columns:
            return self.states[:, self.columns.index(name)]
        if name in self.readout_columns:
            return self.readouts[:, self.readout_columns.index(name)]
        raise KeyError(name)

    def csv_header(self) -> str:
        cols = ["t", "s"]
        for i in range(1, self.n_classes + 1):
            cols += [f"shat_{i}", f"x_{i}", f"y_{i}", f"theta_hat_{i}", f"hf_{i}"]
        return ",".join(cols)

    def to_csv(self, path=None) -> str:
        """Serialize with 17 significant digits (round-trip exact for float64)."""
        buf = io.StringIO()
        buf.write(self.csv_header() + "\n")
        m = self.n_classes
        for k in range(len(self.times)):
            row = [self.times[k], self.states[k, 0]]
            for i in range(m):
                row += list(self.states[k, 1 + 3 * i : 4 + 3 * i])
                row += [self.readouts[k, 2 * i], self.readouts[k, 2 * i + 1]]
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def rk4_step(
    rhs: Callable[[np.ndarray, float], np.ndarray],
    state: np.ndarray,
    t: float,
    dt: float,
) -> np.ndarray:
    """Classical 4-stage Runge-Kutta update."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = rhs(state, t)
    k2 = rhs(state + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(state + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(state + dt * k3, t + dt)
    out = state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"integration diverged at t={t}")
    return out


def _bank_entry(entry):
    """Normalize a bank element to (kind, readback (a, b), rhs closure pieces)."""
    if isinstance(entry, tuple) and len(entry) == 2:
        clazz, config = entry
        if not isinstance(clazz, SignalClass) or not isinstance(config, PrototypeConfig):
            raise TypeError("prototype bank entries must be (SignalClass, PrototypeConfig)")
        return ("prototype", clazz, config)
    if hasattr(entry, "rhs") and hasattr(entry, "a") and hasattr(entry, "b"):
        return ("network", None, entry)
    raise TypeError(f"unsupported bank entry {type(entry).__name__}")


def integrate_system(
    spec: PlantSpec,
    clazz: SignalClass,
    theta: float,
    bank: Sequence,
    inp: InputSignal,
    t0: float = 0.0,
    horizon: float = 10.0,
    dt: float = 1e-3,
    seed: int = 0,
    record_every: int = 10,
    s0: Optional[float] = None,
    init_states: Optional[Sequence[np.ndarray]] = None,
    meta: Optional[dict] = None,
) -> Trajectory:
    """Integrate the measurement jointly with a bank of classifier subsystems.

    Each bank entry is either (SignalClass, PrototypeConfig) or a fitted
    network exposing .rhs(xi, s, state3) plus read-back bounds (a, b). An
    empty bank reproduces the plant-only trajectory exactly.
    """
    if dt <= 0 or horizon < 0:
        raise ValueError("need dt > 0 and horizon >= 0")
    entries = [_bank_entry(e) for e in bank]
    m = len(entries)
    if s0 is None:
        s0 = 0.5 * (spec.s0_range[0] + spec.s0_range[1])
    lo, hi = spec.s0_range
    if not lo <= s0 <= hi:
        raise ValueError(f"s0={s0} outside the declared initial interval {spec.s0_range}")

    state = np.empty(1 + 3 * m)
    state[0] = s0
    readback = []
    for i, (kind, c, obj) in enumerate(entries):
        if init_states is not None:
            state[1 + 3 * i : 4 + 3 * i] = np.asarray(init_states[i], dtype=float)
        elif kind == "prototype":
            st = init_state(obj, shat0=s0)
            state[1 + 3 * i : 4 + 3 * i] = st.as_array()
        else:
            nu = getattr(obj, "nu_x", 0.0)
            state[1 + 3 * i : 4 + 3 * i] = [s0, np.cos(nu), np.sin(nu)]
        readback.append((obj.a, obj.b))

    n = int(round(horizon / dt))
    eta = make_noise(spec, max(n, 1), t0, dt, seed)
    eta_now = 0.0

    def rhs(q: np.ndarray, t: float) -> np.ndarray:
        xi_val = float(inp.xi(np.asarray(t, dtype=float)))
        s = q[0]
        dq = np.empty_like(q)
        dq[0] = -spec.phi(s) + float(clazz.f(xi_val, theta)) + eta_now
        for i, (kind, c, obj) in enumerate(entries):
            sub = q[1 + 3 * i : 4 + 3 * i]
            if kind == "prototype":
                dq[1 + 3 * i : 4 + 3 * i] = prototype_rhs(sub, s, xi_val, c, obj, spec.phi)
            else:
                dq[1 + 3 * i : 4 + 3 * i] = obj.rhs(xi_val, s, sub)
        return dq

    def record(t, q, times, states, reads):
        times.append(t)
        states.append(q.copy())
        r = np.empty(2 * m)
        for i, (a, b) in enumerate(readback):
            r[2 * i] = theta_hat(q[2 + 3 * i], a, b)
            r[2 * i + 1] = q[0] - q[1 + 3 * i]
        reads.append(r)

    times: list[float] = []
    states: list[np.ndarray] = []
    reads: list[np.ndarray] = []
    record(t0, state, times, states, reads)
    escape_t = None
    for k in range(n):
        t = t0 + k * dt
        eta_now = eta[k]
        state = rk4_step(rhs, state, t, dt)
        if (k + 1) % record_every == 0:
            record(t0 + (k + 1) * dt, state, times, states, reads)
            if escape_t is None:
                for i, (kind, c, obj) in enumerate(entries):
                    if kind == "network" and not obj.in_domain(
                        float(inp.xi(np.asarray(t + dt))), state[0], state[1 + 3 * i : 4 + 3 * i]
                    ):
                        escape_t = t0 + (k + 1) * dt

    columns = ["s"]
    for i in range(1, m + 1):
        columns += [f"shat_{i}", f"x_{i}", f"y_{i}"]
    rcolumns = []
    for i in range(1, m + 1):
        rcolumns += [f"theta_hat_{i}", f"hf_{i}"]
    info = {"dt": dt, "seed": seed, "record_every": record_every, "t0": t0}
    if meta:
        info.update(meta)
    if escape_t is not None:
        info["domain_escape_t"] = escape_t
    return Trajectory(
        times=np.array(times),
        states=np.vstack(states),
        columns=columns,
        readouts=np.vstack(reads),
        readout_columns=rcolumns,
        meta=info,
    )
