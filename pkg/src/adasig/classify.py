"""Read-out maps and the decision rule.

A class is accepted when its filter mismatch |h_f,i| stays inside a band
over a full window of length T_star; the parameter estimate is the window
average of the read-back h_theta,i of the accepted class.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .integrator import Trajectory
from .prototype import TuningReport, theta_hat

__all__ = ["DecisionReport", "readout", "decide", "band_from_noise"]


@dataclass
class DecisionReport:
    decided: Optional[int]  # class index (0-based) or None
    theta_estimate: Optional[float]
    t_prime: Optional[float]
    T_star: float
    band_hf: float
    band_theta: Optional[float]
    status: str  # decided | undecided | ambiguous
    per_class: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "decided": self.decided,
            "theta_estimate": self.theta_estimate,
            "t_prime": self.t_prime,
            "T_star": self.T_star,
            "band_hf": self.band_hf,
            "band_theta": self.band_theta,
            "status": self.status,
            "per_class": self.per_class,
        }

    def to_json(self, path=None, **extra) -> str:
        payload = self.to_dict()
        payload.update(extra)
        text = json.dumps(payload, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def readout(
    state: np.ndarray, s: float, configs: Sequence
) -> tuple[np.ndarray, np.ndarray]:
    """Instantaneous read-outs h_f,i = s - shat_i and the affine read-back
    h_theta,i for every class; configs supply (a, b) per class."""
    m = len(configs)
    if len(state) != 3 * m:
        raise ValueError("state length must be 3 per class")
    hf = np.empty(m)
    htheta = np.empty(m)
    for i, cfg in enumerate(configs):
        hf[i] = s - state[3 * i]
        htheta[i] = theta_hat(state[3 * i + 1], cfg.a, cfg.b)
    return hf, htheta


def band_from_noise(
    delta_eta: float, phi_min: float, tuning: Optional[TuningReport] = None
) -> tuple[float, float]:
    """(h_f band component, theta acceptance radius) induced by noise level.

    The mismatch band grows by delta_eta/phi_min; the parameter radius is the
    certified accuracy bound from the tuning report (0 when delta_eta = 0).
    """
    if delta_eta < 0 or phi_min <= 0:
        raise ValueError("need delta_eta >= 0 and phi_min > 0")
    hf = delta_eta / phi_min
    if delta_eta == 0.0:
        return 0.0, 0.0
    if tuning is None:
        raise ValueError("theta radius requires a tuning report when delta_eta > 0")
    return hf, tuning.error_bound


def decide(
    traj: Trajectory,
    T_star: float,
    eps: float,
    D_of_noise: float = 0.0,
    settle: Optional[float] = None,
    band_theta: Optional[float] = None,
) -> DecisionReport:
    """Earliest-window decision over a recorded trajectory.

    Finds the earliest t' <= settle such that sup over [t', t' + T_star] of
    |h_f,i| < eps + D_of_noise for exactly one class; several qualifying
    classes at that instant -> ambiguous, none ever -> undecided.
    """
    m = traj.n_classes
    if m == 0:
        raise ValueError("trajectory has no classifier subsystems")
    times = traj.times
    dt_rec = times[1] - times[0]
    w = int(round(T_star / dt_rec)) + 1
    if w > len(times):
        raise ValueError("horizon shorter than the decision window")
    band = eps + D_of_noise
    if settle is None:
        settle = times[-1] - times[0] - T_star

    hf = np.stack(
        [np.abs(traj.column(f"hf_{i+1}")) for i in range(m)]
    )  # (m, n)
    win_max = sliding_window_view(hf, w, axis=1).max(axis=-1)  # (m, n-w+1)
    t_candidates = times[: win_max.shape[1]]
    eligible = t_candidates - times[0] <= settle + 1e-12
    qualifies = (win_max < band) & eligible

    per_class = [
        {
            "min_window_sup_hf": float(win_max[i].min()),
            "theta_hat_final": float(traj.column(f"theta_hat_{i+1}")[-1]),
        }
        for i in range(m)
    ]
    any_q = qualifies.any(axis=0)
    if not any_q.any():
        return DecisionReport(
            decided=None,
            theta_estimate=None,
            t_prime=None,
            T_star=T_star,
            band_hf=band,
            band_theta=band_theta,
            status="undecided",
            per_class=per_class,
        )
    k = int(np.argmax(any_q))
    winners = np.nonzero(qualifies[:, k])[0]
    t_prime = float(t_candidates[k])
    if len(winners) > 1:
        return DecisionReport(
            decided=None,
            theta_estimate=None,
            t_prime=t_prime,
            T_star=T_star,
            band_hf=band,
            band_theta=band_theta,
            status="ambiguous",
            per_class=per_class,
        )
    i = int(winners[0])
    window = traj.column(f"theta_hat_{i+1}")[k : k + w]
    return DecisionReport(
        decided=i,
        theta_estimate=float(window.mean()),
        t_prime=t_prime,
        T_star=T_star,
        band_hf=band,
        band_theta=band_theta,
        status="decided",
        per_class=per_class,
    )
