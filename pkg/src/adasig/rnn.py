"""Fixed-weight sigmoid-network realization of the classifier subsystems.

The subsystem right-hand side is a continuous map on a compact box, so it
can be approximated to any sup-accuracy by a finite sigmoid sum.  We build
that sum constructively: seeded random features (a structured mix of dense,
difference-direction, and near-linear units) with ridge least squares for
the output weights, then certify the achieved sup-error on a held-out grid.
Each class keeps its own 3-state network; the full bank has 3*N_f states.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .plant import PlantSpec
from .prototype import PrototypeConfig, prototype_rhs
from .signals import InputSignal, SignalClass

__all__ = [
    "SigmoidNetwork",
    "FitReport",
    "RHSDataset",
    "domain_box",
    "sample_rhs",
    "fit_network",
    "simulate_rnn",
    "divergence_check",
    "estimate_rhs_lipschitz",
]

SIGMOIDS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "logistic": lambda u: 1.0 / (1.0 + np.exp(-u)),
    "tanh": np.tanh,
}


@dataclass
class SigmoidNetwork:
    """zeta' = sum_j alpha_j * sigma(omega_j . (xi, s, zeta) + beta_j).

    omega: (N, 5) input weights over (xi, s, shat, x, y); beta: (N,) biases;
    alpha: (N, 3) output weights, one column per state derivative.  The
    read-back bounds (a, b) and initial phase nu_x are carried along so the
    network is a drop-in replacement for the subsystem it realizes.
    """

    N: int
    sigmoid: str
    omega: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray
    domain: np.ndarray  # (5, 2) box
    eps_N: float
    a: float
    b: float
    nu_x: float = 0.0

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.domain = np.asarray(self.domain, dtype=float)
        if self.sigmoid not in SIGMOIDS:
            raise ValueError(f"unknown sigmoid {self.sigmoid!r}")
        if self.omega.shape != (self.N, 5) or self.beta.shape != (self.N,):
            raise ValueError("weight shapes inconsistent with N")
        if self.alpha.shape != (self.N, 3) or self.domain.shape != (5, 2):
            raise ValueError("alpha must be (N, 3) and domain (5, 2)")
        for arr in (self.omega, self.beta, self.alpha, self.domain):
            if not np.all(np.isfinite(arr)):
                raise ValueError("network parameters must be finite")

    def features(self, Z: np.ndarray) -> np.ndarray:
        return SIGMOIDS[self.sigmoid](Z @ self.omega.T + self.beta)

    def evaluate(self, Z: np.ndarray) -> np.ndarray:
        """Batch evaluation on rows (xi, s, shat, x, y) -> (N_rows, 3)."""
        return self.features(np.atleast_2d(np.asarray(Z, dtype=float))) @ self.alpha

    def rhs(self, xi_val: float, s: float, state3: np.ndarray) -> np.ndarray:
        z = np.array([xi_val, s, state3[0], state3[1], state3[2]])
        return self.evaluate(z)[0]

    def in_domain(self, xi_val: float, s: float, state3: np.ndarray) -> bool:
        z = np.array([xi_val, s, state3[0], state3[1], state3[2]])
        return bool(np.all(z >= self.domain[:, 0]) and np.all(z <= self.domain[:, 1]))

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "sigmoid": self.sigmoid,
            "units": [
                {"omega": list(self.omega[j]), "beta": float(self.beta[j])}
                for j in range(self.N)
            ],
            "alpha": [list(self.alpha[:, k]) for k in range(3)],
            "domain": [list(row) for row in self.domain],
            "eps_N": self.eps_N,
            "a": self.a,
            "b": self.b,
            "nu_x": self.nu_x,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "SigmoidNetwork":
        omega = np.array([u["omega"] for u in d["units"]])
        beta = np.array([u["beta"] for u in d["units"]])
        alpha = np.ascontiguousarray(np.array(d["alpha"]).T)
        return cls(
            N=d["N"],
            sigmoid=d["sigmoid"],
            omega=omega,
            beta=beta,
            alpha=alpha,
            domain=np.array(d["domain"]),
            eps_N=d["eps_N"],
            a=d["a"],
            b=d["b"],
            nu_x=d.get("nu_x", 0.0),
        )

    @classmethod
    def from_json(cls, text_or_path: str) -> "SigmoidNetwork":
        try:
            d = json.loads(text_or_path)
        except (json.JSONDecodeError, ValueError):
            with open(text_or_path) as fh:
                d = json.load(fh)
        return cls.from_dict(d)


@dataclass
class FitReport:
    N: int
    train_error_sup: float
    validation_error_sup: float
    domain: list
    seed: int

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "train_error_sup": self.train_error_sup,
            "validation_error_sup": self.validation_error_sup,
            "domain": self.domain,
            "seed": self.seed,
        }


@dataclass
class RHSDataset:
    """Sampled graph of the subsystem right-hand side over its domain box."""

    inputs: np.ndarray  # (n, 5) rows (xi, s, shat, x, y)
    targets: np.ndarray  # (n, 3)
    domain: np.ndarray  # (5, 2)
    target_fn: Callable[[np.ndarray], np.ndarray]
    a: float = 0.0
    b: float = 1.0
    nu_x: float = 0.0


def drive_sup(clazz: SignalClass, xi_sup: float, a: float, b: float, n: int = 41) -> float:
    """Grid supremum of |f(xi, theta)| over [-xi_sup, xi_sup] x [a, b]."""
    xs = np.linspace(-xi_sup, xi_sup, n)
    sup = 0.0
    for th in np.linspace(a, b, n):
        sup = max(sup, float(np.max(np.abs(clazz.f(xs, th)))))
    return sup


def domain_box(
    clazz: SignalClass,
    config: PrototypeConfig,
    xi_sup: float,
    s_bound: float,
    shat0_bound: float,
    noise_bound: float,
    phi_min: float,
    margin: float = 0.2,
) -> np.ndarray:
    """Bounding box for (xi, s, shat, x, y) covering the reachable states,
    inflated by the given margin (default 20%).

    The filter copy settles inside |shat0| + (sup |f| + noise)/phi_min, where
    the supremum runs over the read-back interval [a, b]."""
    shat_bound = shat0_bound + (
        drive_sup(clazz, xi_sup, config.a, config.b) + noise_bound
    ) / phi_min
    m = 1.0 + margin
    return np.array(
        [
            [-xi_sup * m, xi_sup * m],
            [-s_bound * m, s_bound * m],
            [-shat_bound * m, shat_bound * m],
            [-m, m],
            [-m, m],
        ]
    )


def _target_fn(clazz: SignalClass, config: PrototypeConfig, phi) -> Callable:
    def fn(Z: np.ndarray) -> np.ndarray:
        Z = np.atleast_2d(Z)
        out = np.empty((len(Z), 3))
        for k, (xi_val, s, sh, x, y) in enumerate(Z):
            out[k] = prototype_rhs(np.array([sh, x, y]), s, xi_val, clazz, config, phi)
        return out

    return fn


def sample_rhs(
    clazz: SignalClass,
    config: PrototypeConfig,
    box: np.ndarray,
    n_samples: int,
    phi: Callable[[float], float],
    seed: int = 0,
    grid_counts: Optional[Sequence[int]] = None,
) -> RHSDataset:
    """Sample the subsystem right-hand side over the domain box.

    With grid_counts given, samples a full tensor grid (dataset size is the
    product of the counts); otherwise n_samples seeded uniform draws.
    """
    box = np.asarray(box, dtype=float)
    if box.shape != (5, 2) or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError("domain box must be (5, 2) with positive widths")
    if grid_counts is not None:
        axes = [np.linspace(lo, hi, int(c)) for (lo, hi), c in zip(box, grid_counts)]
        Z = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    else:
        rng = np.random.default_rng(seed)
        Z = box[:, 0] + rng.uniform(size=(n_samples, 5)) * (box[:, 1] - box[:, 0])
    fn = _target_fn(clazz, config, phi)
    return RHSDataset(
        inputs=Z,
        targets=fn(Z),
        domain=box,
        target_fn=fn,
        a=config.a,
        b=config.b,
        nu_x=config.nu_x,
    )


def _draw_features(box: np.ndarray, N: int, rng: np.random.Generator):
    """Structured random features tuned to the subsystem's geometry.

    Three groups: dense directions with log-uniform scales (generic
    curvature), difference directions w_s = -w_shat (the rhs depends on s
    and shat mostly through their difference), and small-scale near-linear
    units (the rhs is polynomial away from the dead zone).
    """
    widths = box[:, 1] - box[:, 0]
    nA, nB = N // 4, N // 2
    nC = N - nA - nB
    WA = rng.normal(size=(nA, 5)) / widths * np.exp(
        rng.uniform(np.log(0.5), np.log(6.0), (nA, 1))
    )
    WB = np.zeros((nB, 5))
    wd = rng.normal(size=nB)
    WB[:, 1] = wd
    WB[:, 2] = -wd
    WB[:, 3] = 0.7 * rng.normal(size=nB)
    WB[:, 4] = 0.7 * rng.normal(size=nB)
    WB = WB / widths.mean() * np.exp(rng.uniform(np.log(0.5), np.log(8.0), (nB, 1)))
    WC = rng.normal(size=(nC, 5)) / widths * 0.3
    W = np.vstack([WA, WB, WC])
    centers = box[:, 0] + rng.uniform(size=(N, 5)) * widths
    beta = -np.sum(W * centers, axis=1)
    return W, beta


def fit_network(
    dataset: RHSDataset,
    N: int,
    ridge: float = 1e-10,
    seed: int = 0,
    sigmoid: str = "logistic",
    n_validation: int = 30000,
) -> tuple[SigmoidNetwork, FitReport]:
    """Random-feature fit with ridge least squares per output dimension.

    eps_N is the sup-error over a held-out seeded validation sample of the
    domain box (re-evaluating the exact right-hand side there).
    """
    if N < 1:
        raise ValueError("need at least one unit")
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    if len(dataset.inputs) == 0:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(seed)
    box = dataset.domain
    W, beta = _draw_features(box, N, rng)
    sig = SIGMOIDS[sigmoid]
    Phi = sig(dataset.inputs @ W.T + beta)
    n = len(dataset.inputs)
    A = Phi.T @ Phi + ridge * n * np.eye(N)
    try:
        alpha = np.linalg.solve(A, Phi.T @ dataset.targets)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "normal equations are singular; increase ridge"
        ) from exc
    train_sup = float(np.max(np.abs(Phi @ alpha - dataset.targets)))

    rng_v = np.random.default_rng(seed + 1)
    Zv = box[:, 0] + rng_v.uniform(size=(n_validation, 5)) * (box[:, 1] - box[:, 0])
    val_sup = float(np.max(np.abs(sig(Zv @ W.T + beta) @ alpha - dataset.target_fn(Zv))))

    net = SigmoidNetwork(
        N=N,
        sigmoid=sigmoid,
        omega=W,
        beta=beta,
        alpha=alpha,
        domain=box,
        eps_N=val_sup,
        a=dataset.a,
        b=dataset.b,
        nu_x=dataset.nu_x,
    )
    report = FitReport(
        N=N,
        train_error_sup=train_sup,
        validation_error_sup=val_sup,
        domain=[list(row) for row in box],
        seed=seed,
    )
    return net, report


def simulate_rnn(
    networks: Sequence[SigmoidNetwork],
    spec: PlantSpec,
    clazz: SignalClass,
    theta: float,
    inp: InputSignal,
    t0: float = 0.0,
    horizon: float = 10.0,
    dt: float = 1e-3,
    seed: int = 0,
    record_every: int = 10,
    s0: Optional[float] = None,
    init_states=None,
):
    """Integrate the fixed-weight network bank exactly like the prototype bank."""
    from .integrator import integrate_system

    return integrate_system(
        spec,
        clazz,
        theta,
        list(networks),
        inp,
        t0=t0,
        horizon=horizon,
        dt=dt,
        seed=seed,
        record_every=record_every,
        s0=s0,
        init_states=init_states,
    )


@dataclass
class DivergenceReport:
    max_gap: float
    max_bound: float
    passed: bool
    first_violation_t: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "max_gap": self.max_gap,
            "max_bound": self.max_bound,
            "passed": self.passed,
            "first_violation_t": self.first_violation_t,
        }


def divergence_check(
    traj_prototype,
    traj_rnn,
    eps_N: float,
    L_i: float,
    class_index: int = 0,
    tol: float = 1e-9,
) -> DivergenceReport:
    """Pointwise gap between prototype and network subsystem trajectories vs.
    the Gronwall envelope (eps_N / L_i) (exp(L_i (t - t0)) - 1)."""
    if not np.allclose(traj_prototype.times, traj_rnn.times):
        raise ValueError("trajectories must share the time grid")
    i = class_index
    cols = [f"shat_{i+1}", f"x_{i+1}", f"y_{i+1}"]
    qp = np.stack([traj_prototype.column(c) for c in cols], axis=1)
    qr = np.stack([traj_rnn.column(c) for c in cols], axis=1)
    if not np.allclose(qp[0], qr[0]):
        raise ValueError("trajectories must share the initial subsystem state")
    gap = np.linalg.norm(qp - qr, axis=1)
    t = traj_prototype.times - traj_prototype.times[0]
    bound = eps_N / L_i * (np.exp(L_i * t) - 1.0)
    bad = gap > bound + tol
    first = float(traj_prototype.times[np.argmax(bad)]) if bad.any() else None
    return DivergenceReport(
        max_gap=float(gap.max()),
        max_bound=float(bound.max()),
        passed=not bad.any(),
        first_violation_t=first,
    )


def estimate_rhs_lipschitz(
    clazz: SignalClass,
    config: PrototypeConfig,
    phi: Callable[[float], float],
    box: np.ndarray,
    n_samples: int = 2000,
    seed: int = 0,
    h: float = 1e-5,
) -> float:
    """Numerical Lipschitz constant of the subsystem rhs in its own state.

    Central finite differences of the (shat, x, y) Jacobian at seeded sample
    points of the box; returns the largest spectral norm observed.
    """
    rng = np.random.default_rng(seed)
    box = np.asarray(box, dtype=float)
    Z = box[:, 0] + rng.uniform(size=(n_samples, 5)) * (box[:, 1] - box[:, 0])
    worst = 0.0
    for xi_val, s, sh, x, y in Z:
        q = np.array([sh, x, y])
        J = np.empty((3, 3))
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = h
            fp = prototype_rhs(q + dq, s, xi_val, clazz, config, phi)
            fm = prototype_rhs(q - dq, s, xi_val, clazz, config, phi)
            J[:, j] = (fp - fm) / (2.0 * h)
        worst = max(worst, float(np.linalg.norm(J, 2)))
    return worst
