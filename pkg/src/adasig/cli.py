"""Experiment runner: tune -> simulate -> verify -> fit-rnn -> report.

Exit codes: 0 success, 1 usage/parse error, 2 infeasible tuning,
3 trajectory never entered the target set, 4 verification failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, classify, rnn, signals
from .config import VERSION, ExperimentConfig, load_config, sub_seed
from .integrator import integrate_system, rk4_step
from .prototype import (
    TuningReport,
    choose_winding,
    compute_L,
    compute_c,
    error_bound,
    tune_gamma,
    tune_hstar,
)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INFEASIBLE = 2
EXIT_NOT_ENTERED = 3
EXIT_VERIFY_FAIL = 4


class InfeasibleTuning(Exception):
    pass


# ---------------------------------------------------------------- pipeline


def rho_envelope_for(cfg: ExperimentConfig, class_index: int) -> signals.RhoEnvelope:
    """Empirical excitation envelope for one class on the configured input."""
    clazz = cfg.classes[class_index]
    t = cfg.raw.get("tuning", {})
    window_T = float(t.get("window_T", 2.0 * math.pi))
    horizon = float(t.get("pe_horizon", 8.0 * window_T))
    a, b = float(cfg.prototype["a"]), float(cfg.prototype["b"])
    span = b - a
    separations = np.linspace(span / 8.0, span, 8)
    est = signals.persistency_envelope(
        clazz, cfg.inp, clazz.theta_range[0], separations, window_T, horizon, dt=1e-2
    )
    return signals.RhoEnvelope(est.rho_samples)


def run_tune(cfg: ExperimentConfig, class_index=None) -> TuningReport:
    """Evaluate every tuning formula for one class of the experiment."""
    i = cfg.true_class if class_index is None else class_index
    clazz = cfg.classes[i]
    pconf = cfg.class_configs()[i]
    p = cfg.prototype
    a, b = pconf.a, pconf.b
    phi_min = cfg.plant.phi_min
    d_theta = clazz.lipschitz_theta

    c = compute_c(d_theta, phi_min, a, b)
    if c == 0:
        gamma_star = math.inf
    else:
        gamma_star, _ = tune_gamma(pconf.kappa, pconf.d, c, phi_min,
                                   float(p.get("safety", 0.5)))
    gamma = pconf.gamma
    s_min, s_max = cfg.plant.s0_range
    try:
        # The supremum gain makes the budget denominator vanish; the budget
        # is evaluated at the working gain, which sits strictly inside.
        h_star = tune_hstar(s_min, s_max, d_theta, a, b, phi_min,
                            gamma, pconf.kappa, pconf.d, c)
    except ValueError as exc:
        raise InfeasibleTuning(str(exc)) from exc
    k_prime = choose_winding(h_star, pconf.nu_x)

    rho = rho_envelope_for(cfg, i)
    d_f = 2.0 * clazz.lipschitz_xi * cfg.inp.dxi_sup
    window_T = float(cfg.raw.get("tuning", {}).get("window_T", 2.0 * math.pi))
    L = compute_L(window_T, rho(b - a), d_f)
    err = error_bound(cfg.plant.noise_bound, d_theta, a, b, d_f, L, rho.inverse)
    return TuningReport(
        c=c,
        gamma_star=gamma_star,
        gamma=gamma,
        h_star=h_star,
        k_prime=k_prime,
        L=L,
        error_bound=err,
        epsilon=pconf.epsilon,
        delta=pconf.delta,
    )


def run_simulate(cfg: ExperimentConfig, theta=None, horizon=None, bank=None):
    """Integrate the configured bank against the true plant; returns Trajectory."""
    sim = cfg.simulation
    if bank is None:
        bank = list(zip(cfg.classes, cfg.class_configs()))
    return integrate_system(
        cfg.plant,
        cfg.classes[cfg.true_class],
        cfg.true_theta if theta is None else theta,
        bank,
        cfg.inp,
        t0=float(sim.get("t0", 0.0)),
        horizon=float(sim.get("horizon", 10.0)) if horizon is None else horizon,
        dt=float(sim.get("dt", 1e-3)),
        seed=sub_seed(cfg.seed, "noise"),
        record_every=int(sim.get("record_every", 10)),
        s0=sim.get("s0"),
        meta={"config_hash": cfg.hash, "version": VERSION},
    )


def theta_bound_for(cfg: ExperimentConfig, tuning: TuningReport) -> float:
    dec = cfg.decision
    if "theta_bound" in dec:
        return float(dec["theta_bound"])
    if tuning.error_bound > 0:
        return tuning.error_bound
    return 0.05


def run_decide(cfg: ExperimentConfig, traj, tuning: TuningReport):
    dec = cfg.decision
    hf_noise, theta_radius = classify.band_from_noise(
        cfg.plant.noise_bound, cfg.plant.phi_min,
        tuning if cfg.plant.noise_bound > 0 else None,
    )
    return classify.decide(
        traj,
        T_star=float(dec.get("T_star", 10.0)),
        eps=float(dec.get("eps", 0.02)),
        D_of_noise=hf_noise,
        settle=dec.get("settle"),
        band_theta=theta_radius if theta_radius > 0 else theta_bound_for(cfg, tuning),
    )


def fit_bank(cfg: ExperimentConfig, N=None):
    """Fit one network per class to its subsystem right-hand side."""
    r = cfg.rnn
    N = int(r.get("N", 400)) if N is None else N
    configs = cfg.class_configs()
    a, b = float(cfg.prototype["a"]), float(cfg.prototype["b"])
    true_sup = rnn.drive_sup(cfg.classes[cfg.true_class], cfg.inp.xi_sup, a, b)
    s0_bound = max(abs(v) for v in cfg.plant.s0_range)
    s_bound = max(s0_bound, (true_sup + cfg.plant.noise_bound) / cfg.plant.phi_min)
    nets, reports = [], []
    for i, (clazz, pconf) in enumerate(zip(cfg.classes, configs)):
        box = rnn.domain_box(
            clazz, pconf, cfg.inp.xi_sup, s_bound,
            shat0_bound=s0_bound, noise_bound=cfg.plant.noise_bound,
            phi_min=cfg.plant.phi_min,
        )
        ds = rnn.sample_rhs(
            clazz, pconf, box, int(r.get("n_train", 40000)), cfg.plant.phi,
            seed=sub_seed(cfg.seed, f"sample_{i}"),
        )
        net, rep = rnn.fit_network(
            ds, N,
            ridge=float(r.get("ridge", 1e-10)),
            seed=sub_seed(cfg.seed, f"fit_{i}"),
            sigmoid=r.get("sigmoid", "logistic"),
        )
        nets.append(net)
        reports.append(rep)
    return nets, reports


# ---------------------------------------------------------------- commands


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.simulation["seed"] = args.seed
    if args.dt is not None:
        cfg.simulation["dt"] = args.dt
    return cfg


def _stamp(payload: dict, cfg: ExperimentConfig) -> dict:
    payload["config_hash"] = cfg.hash
    payload["version"] = VERSION
    return payload


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_tune(args) -> int:
    cfg = _load(args)
    try:
        report = run_tune(cfg)
    except InfeasibleTuning as exc:
        print(f"infeasible tuning: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    payload = _stamp(report.to_dict(), cfg)
    _write_json(_outdir(args) / "tuning.json", payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load(args)
    try:
        tuning = run_tune(cfg)
    except InfeasibleTuning as exc:
        print(f"infeasible tuning: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    out = _outdir(args)
    configs = cfg.class_configs()
    try:
        traj = run_simulate(cfg)
    except ValueError as exc:
        print(f"simulation rejected: {exc}", file=sys.stderr)
        return EXIT_PARSE
    csv_path = out / "trajectory.csv"
    with open(csv_path, "w") as fh:
        fh.write(f"# config_hash={cfg.hash} version={VERSION}\n")
        fh.write(traj.to_csv())
    bound = theta_bound_for(cfg, tuning)
    conv = analysis.convergence_report(
        traj, cfg.classes[cfg.true_class], cfg.true_theta, bound,
        configs[cfg.true_class], cfg.true_class,
    )
    decision = run_decide(cfg, traj, tuning)
    conv.decided_class = decision.decided
    _write_json(out / "convergence.json", _stamp(conv.to_dict(), cfg))
    _write_json(out / "decision.json", _stamp(decision.to_dict(), cfg))
    print(f"entered={conv.entered} entry_time={conv.entry_time} "
          f"status={decision.status} decided={decision.decided}")
    return EXIT_OK if conv.entered else EXIT_NOT_ENTERED


def cmd_verify(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    which = args.which
    if which == "persistency":
        t = cfg.raw.get("tuning", {})
        window_T = float(t.get("window_T", 2.0 * math.pi))
        horizon = float(t.get("pe_horizon", 8.0 * window_T))
        clazz = cfg.classes[cfg.true_class]
        lo, hi = clazz.theta_range
        est = signals.persistency_envelope(
            clazz, cfg.inp, lo, np.linspace((hi - lo) / 4, hi - lo, 4),
            window_T, horizon, dt=1e-2,
        )
        passed = est.satisfied
        payload = _stamp(
            {
                "check": "persistency",
                "window_T": window_T,
                "horizon": horizon,
                "rho_samples": est.rho_samples,
                "satisfied": passed,
            },
            cfg,
        )
    elif which == "pe":
        report = verify_pe_example(cfg)
        passed = report.ok
        payload = _stamp(report.to_dict() | {"check": "pe"}, cfg)
    elif which == "bounds":
        traj = run_simulate(cfg)
        configs = cfg.class_configs()
        d_theta = max(c.lipschitz_theta for c in cfg.classes)
        violations = analysis.check_state_bounds(
            traj, configs, d_theta, cfg.plant.noise_bound, cfg.plant.phi_min
        )
        passed = not violations
        payload = _stamp({"check": "bounds", "violations": violations}, cfg)
    else:  # pragma: no cover - argparse restricts choices
        return EXIT_PARSE
    _write_json(out / f"verify_{which}.json", payload)
    print(f"{which}: {'pass' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_VERIFY_FAIL


def verify_pe_example(cfg: ExperimentConfig) -> analysis.PEReport:
    """Filter the class drive through the plant and verify it stays exciting."""
    clazz = cfg.classes[cfg.true_class]
    t_cfg = cfg.raw.get("tuning", {})
    L = float(t_cfg.get("window_T", 2.0 * math.pi))
    horizon = float(t_cfg.get("pe_horizon", 8.0 * L))
    dt = 1e-3
    t = np.arange(0.0, horizon + dt / 2, dt)
    lo, hi = clazz.theta_range
    u = np.asarray(
        clazz.f(cfg.inp.xi(t), cfg.true_theta) - clazz.f(cfg.inp.xi(t), lo),
        dtype=float,
    )
    if cfg.true_theta == lo:
        u = np.asarray(clazz.f(cfg.inp.xi(t), hi) - clazz.f(cfg.inp.xi(t), lo), dtype=float)
    z = np.zeros_like(u)
    for k in range(len(t) - 1):
        zk = z[k]
        uk = u[k]
        rhs = lambda q, tt: np.array([-cfg.plant.phi(q[0]) + uk])
        z[k + 1] = rk4_step(rhs, np.array([zk]), t[k], dt)[0]
    w = int(round(L / dt))
    a = np.abs(u)
    cum = np.concatenate([[0.0], np.cumsum((a[1:] + a[:-1]) * 0.5 * dt)])
    delta = float(np.min(cum[w:] - cum[:-w]))
    Delta = cfg.plant.noise_bound / cfg.plant.phi_min
    return analysis.verify_filtered_pe(z, u, dt, L, delta, Delta=Delta)


def cmd_fit_rnn(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    r = cfg.rnn
    n_list = r.get("N_list", [int(r.get("N", 400))])
    last_nets, sweep = None, []
    for N in n_list:
        nets, reports = fit_bank(cfg, N=N)
        sweep.append({"N": N, "eps_N": [n.eps_N for n in nets]})
        last_nets = nets
    for i, net in enumerate(last_nets):
        net.to_json(out / f"network_{i + 1}.json")
    _write_json(out / "fit_report.json", _stamp({"sweep": sweep}, cfg))

    check_h = float(r.get("check_horizon", 0.0))
    passed = True
    if check_h > 0:
        traj_p = run_simulate(cfg, horizon=check_h)
        traj_r = run_simulate(cfg, horizon=check_h, bank=last_nets)
        configs = cfg.class_configs()
        results = []
        for i, net in enumerate(last_nets):
            L_i = rnn.estimate_rhs_lipschitz(
                cfg.classes[i], configs[i], cfg.plant.phi, net.domain,
                seed=sub_seed(cfg.seed, f"lip_{i}"),
            )
            rep = rnn.divergence_check(traj_p, traj_r, net.eps_N, L_i, class_index=i)
            results.append(rep.to_dict() | {"L_i": L_i})
            passed = passed and rep.passed
        _write_json(out / "divergence.json", _stamp({"per_class": results}, cfg))
    print(f"fit-rnn: eps_N={[f'{n.eps_N:.4g}' for n in last_nets]} "
          f"divergence={'pass' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_VERIFY_FAIL


def cmd_report(args) -> int:
    """Full pipeline: tune, simulate, decide, sweep; one summary JSON."""
    cfg = _load(args)
    out = _outdir(args)
    try:
        tuning = run_tune(cfg)
    except InfeasibleTuning as exc:
        print(f"infeasible tuning: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    traj = run_simulate(cfg)
    decision = run_decide(cfg, traj, tuning)
    bound = theta_bound_for(cfg, tuning)
    configs = cfg.class_configs()

    sweep_decisions = []

    def rerun(theta):
        t = run_simulate(cfg, theta=theta)
        d = run_decide(cfg, t, tuning)
        sweep_decisions.append(
            {"theta": theta, "decided": d.decided, "status": d.status,
             "theta_estimate": d.theta_estimate, "t_prime": d.t_prime}
        )
        return t, cfg.classes[cfg.true_class], configs[cfg.true_class], cfg.true_class

    t_max, table = analysis.sweep_uniformity(cfg.theta_grid(), rerun, bound)
    analysis.sweep_table_csv(table, out / "sweep.csv")
    summary = _stamp(
        {
            "tuning": tuning.to_dict(),
            "decision": decision.to_dict(),
            "T_prime_max_empirical": t_max,
            "theta_bound": bound,
            "sweep_entered": all(not row["flagged"] for row in table),
            "sweep_decisions": sweep_decisions,
        },
        cfg,
    )
    _write_json(out / "report.json", summary)
    print(json.dumps(summary["decision"], indent=2))
    entered = math.isfinite(t_max)
    return EXIT_OK if entered else EXIT_NOT_ENTERED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adasig",
        description="Adaptive temporal-signal classification experiments",
    )
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in [
        ("tune", cmd_tune),
        ("simulate", cmd_simulate),
        ("verify", cmd_verify),
        ("fit-rnn", cmd_fit_rnn),
        ("report", cmd_report),
    ]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.set_defaults(func=fn)
        if name == "verify":
            p.add_argument("--which", choices=["pe", "persistency", "bounds"],
                           default="persistency")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses code 2 for usage errors; the contract reserves 1
        return EXIT_PARSE if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
