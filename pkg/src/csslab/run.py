"""Experiment orchestration: config in, artifacts out.

Every experiment writes ``summary.json`` into the output directory; evolve
also writes ``diagnostics.csv`` and binary checkpoints.  Outputs contain no
timestamps or timings, so identical configs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from . import checkpoint, dynamics, observables, selfdual, variational
from .discretization import make_grid, smooth_step
from .errors import CSSLabError
from .observables import CSV_COLUMNS
from .state import EquivariantState

EXIT_CODES = {
    "invalid-argument": 2, "unknown-key": 3, "type-error": 4, "missing-required": 5,
    "grid-mismatch": 6, "integration-diverged": 7, "moment-overflow": 8,
    "nonuniform-sampling": 9, "wrong-coupling": 10, "no-sign-change": 11,
    "nonconvergence": 12, "bracket-not-found": 13, "undecided-dominated": 14,
    "bad-magic": 15, "version-mismatch": 16, "truncated-payload": 17,
    "config-error": 18, "checkpoint-error": 19, "error": 1,
}


def exit_code(err):
    return EXIT_CODES.get(getattr(err, "category", "error"), 1)


def _clean(x):
    # JSON has no NaN/inf
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, records, residuals=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for i, rec in enumerate(records):
            row = rec.as_row()
            if residuals is not None:
                row[CSV_COLUMNS.index("virial_residual")] = residuals[i]
            w.writerow([repr(float(x)) for x in row])


def initial_state(cfg):
    if cfg.initial == "checkpoint":
        return checkpoint.checkpoint_read(cfg.checkpoint_in, kind=cfg.grid)
    grid = make_grid(cfg.n, cfg.rmax, cfg.grid, cfg.m)
    r = grid.nodes
    if cfg.initial == "soliton":
        u = selfdual.soliton_values(r, cfg.m, cfg.lam)
    else:
        u = (r / cfg.width) ** cfg.m * np.exp(-0.5 * (r / cfg.width) ** 2)
    if cfg.taper:
        u = u * smooth_step(1.0 + (r - 0.5 * cfg.rmax) / (0.4 * cfg.rmax))
    return EquivariantState(m=cfg.m, g=cfg.g, grid=grid, u=cfg.amplitude * u.astype(complex))


def run_evolve(cfg, out):
    state = initial_state(cfg)
    opts = dynamics.EvolveOptions(
        dt=cfg.dt, t_final=cfg.t_final, sample_every=cfg.sample_every,
        absorb=cfg.absorb, free_only=cfg.free_only, freeze_gauge=cfg.freeze_gauge,
        moment_cap=cfg.moment_cap or None, keep_states=False)
    t0 = state.t
    every = cfg.checkpoint_every

    def on_sample(s, rec):
        step = int(round((s.t - t0) / cfg.dt))
        if every and step and step % every == 0:
            checkpoint.checkpoint_write(s, os.path.join(out, f"checkpoint_{step:08d}.bin"))

    last = {}

    def keep_last(s, rec):
        last["state"] = s
        on_sample(s, rec)

    traj = dynamics.evolve(state, opts, callback=keep_last)
    checkpoint.checkpoint_write(last["state"], os.path.join(out, "final.bin"))
    residuals = [float("nan")] * len(traj.records)
    try:
        _, res, _ = dynamics.check_virial(traj)
        residuals[1:-1] = list(res)
    except CSSLabError:
        pass
    write_csv(os.path.join(out, "diagnostics.csv"), traj.records, residuals)
    charge = traj.series("charge")
    energy = traj.series("energy_direct")
    write_json(os.path.join(out, "summary.json"), {
        "experiment": "evolve",
        "config": {k: v for k, v in cfg.as_dict().items() if k != "output_dir"},
        "samples": len(traj.records), "t_end": traj.records[-1].t,
        "charge_drift": float(np.max(np.abs(charge - charge[0])) / charge[0]) if charge[0] else 0.0,
        "energy_drift": float(np.max(np.abs(energy - energy[0]))),
        "classification": dynamics.classify_endstate(traj, opts),
        "events": [list(e) for e in traj.events],
    })
    return 0


def run_soliton_check(cfg, out):
    params = selfdual.SolitonParams(cfg.m, cfg.lam)
    state = selfdual.soliton_profile(params)
    q = observables.charge(state)
    target = 8 * np.pi * (cfg.m + 1)
    r_dplus, r_a0, r_energy = selfdual.selfdual_residuals(state)
    gn4, cov_sobo, _ = observables.gn_residuals(state)
    write_json(os.path.join(out, "summary.json"), {
        "experiment": "soliton-check", "m": cfg.m, "lam": cfg.lam, "n": state.grid.n,
        "rmax": state.grid.rmax, "charge": q, "charge_expected": target,
        "charge_rel_err": abs(q - target) / target,
        "residual_dplus": r_dplus, "residual_a0": r_a0, "residual_energy": r_energy,
        "gn4": gn4, "cov_sobo": cov_sobo,
        "j_value": variational.j_functional(state),
    })
    return 0


def run_threshold(cfg, out):
    opts = selfdual.ThresholdOptions(
        n=cfg.n, reach=cfg.probe_reach, dt=cfg.probe_dt, t_final=cfg.probe_t_final,
        alpha_min=cfg.alpha_min, alpha_max=cfg.alpha_max, alpha_step=cfg.alpha_step, tol=cfg.tol)
    est = selfdual.threshold_bisection(cfg.m, cfg.g, cfg.family, opts)
    payload = {"experiment": "threshold", **est.as_dict(),
               "reference_charge": 8 * np.pi * (cfg.m + 1)}
    write_json(os.path.join(out, "summary.json"), payload)
    return 0


def run_groundstate(cfg, out):
    opts = variational.VariationalOptions(seed=cfg.seed, basis=cfg.basis)
    wave = variational.minimize_charge(cfg.m, cfg.g, opts)
    p1, p2 = variational.pohozaev_residuals(wave)
    write_json(os.path.join(out, "summary.json"), {
        "experiment": "groundstate", "m": cfg.m, "g": cfg.g, "c_estimate": wave.charge,
        "lambda": wave.frequency, "p1": p1, "p2": p2, "iterations": wave.iterations,
        "j_value": wave.j_value, "eigen_residual": variational.eigen_residual(wave),
    })
    return 0


def selftest_checks():
    """Fast sanity checks; returns {name: (ok, value)}."""
    checks = {}
    grid = make_grid(256, 10.0, "uniform-midpoint")
    checks["weights_sum"] = (abs(grid.weights.sum() - 50.0) < 1e-10, float(grid.weights.sum()))
    sol = selfdual.soliton_profile(selfdual.SolitonParams(1, 1.0), selfdual.soliton_grid(1, n=4096))
    err = abs(observables.charge(sol) / (16 * np.pi) - 1)
    checks["soliton_charge"] = (err < 1e-4, err)
    rng = np.random.default_rng(0)
    g2 = make_grid(512, 12.0, "uniform-midpoint")
    coef = rng.standard_normal(4)
    r = g2.nodes
    u = sum(c * np.exp(-r ** 2 / (2 * s ** 2)) for c, s in zip(coef, (0.7, 1.0, 1.5, 2.2)))
    st = EquivariantState(m=0, g=0.5, grid=g2, u=u * (1 + 0.3j * r / 12))
    diff = abs(observables.energy_direct(st) - observables.energy_bogo(st)) / observables.kinetic(st)
    checks["energy_identity"] = (diff < 1e-7, diff)
    back = checkpoint.decode(checkpoint.encode(st))
    checks["checkpoint_roundtrip"] = (bool(np.array_equal(back.u, st.u)), 0.0)
    return checks


def run_selftest(cfg, out):
    checks = selftest_checks()
    ok = all(v[0] for v in checks.values())
    write_json(os.path.join(out, "summary.json"), {
        "experiment": "selftest", "passed": ok,
        "checks": {k: {"ok": v[0], "value": v[1]} for k, v in checks.items()},
    })
    return 0 if ok else 1


RUNNERS = {
    "evolve": run_evolve, "soliton-check": run_soliton_check, "threshold": run_threshold,
    "groundstate": run_groundstate, "selftest": run_selftest,
}


def run(cfg):
    """Run one configured experiment; returns the process exit status."""
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    try:
        return RUNNERS[cfg.experiment](cfg, out)
    except CSSLabError as err:
        write_json(os.path.join(out, "error.json"),
                   {"error": err.category, "message": str(err)})
        return exit_code(err)
