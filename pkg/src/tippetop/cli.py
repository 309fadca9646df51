"""Command-line harness: simulations, stability scans, Smale diagrams,
phase portraits and conservation checks driven by JSON scenarios.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .dynamics import admissible_initial_states, decoupled_velocity
from .equilibria import (classify_level, critical_C, family_threshold, sigma0_C,
                         sigma0_characteristic, sigma0_K1, sigma0_min_distance, vertical_family,
                         hurwitz_vertical)
from .errors import ChartError, ExistenceError, TippeTopError, ValidationError
from .friction import (AREA, JELLETT, LAGRANGE, make_model,
                       conservation_signature)
from .integrals import family_energy
from .integrate import Event, IntegratorConfig, integrate
from .params import Family, FullState
from .reduction import ReducedState, from_reduced, to_reduced
from .scenario import (DEFAULT_PHASE_C, DEFAULT_PHASE_K1, initial_full_state, load_scenario)
from .systems import DecoupledSystem, GeneralSystem, ReducedSystem, reduced_observables

log = logging.getLogger("tippetop")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
INTEGRALS = ("energy", "lagrange", "jellett", "area")
DRIFT_BOUND = 1e-8

# Integrals the resistance law is expected to preserve
CLAIMED = {
    "smooth": {JELLETT, LAGRANGE, AREA},
    "viscous": {JELLETT},
    "dry": {JELLETT},
    "contact-torque": {JELLETT},
    "anisotropic": {LAGRANGE},
    "rolling": {AREA},
    "spinning": set(),
}
DEFAULT_CONSERVATION_MODELS = ["smooth", "viscous", {"type": "dry", "eps": 1e-2},
                               "contact-torque", "anisotropic", "rolling", "spinning"]


def fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not np.isfinite(x):
        raise TippeTopError(f"non-finite value {x!r} in output")
    return format(x, ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(x) for x in row])


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def pmap(fn, items, threads):
    """Map in grid order, optionally across worker processes."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _out(args, sc, key):
    return Path(args.out) / sc.outputs[key]


# simulate --------------------------------------------------------------

def build_system(sc):
    """System and initial vector for the scenario's initial state."""
    kind = sc.system or ("reduced" if isinstance(sc.initial, ReducedState) else "general")
    if kind == "general":
        if isinstance(sc.initial, ReducedState):
            omega, gamma = from_reduced(sc.initial, sc.params)
            state = FullState(decoupled_velocity(omega, gamma, sc.params), omega, gamma)
        else:
            state = initial_full_state(sc)
        system = GeneralSystem(sc.model, sc.params)
        return system, system.initial_vector(state)
    if "model" in sc.raw:
        allowed = {"rolling", "spinning"}
        names = {m.name for m in getattr(sc.model, "models", (sc.model,))}
        if not names <= allowed:
            raise ValidationError(f"the {kind} system only supports rolling/spinning "
                                  "resistance (set by mu_r, mu_s)", field="model")
    if kind == "decoupled":
        system = DecoupledSystem(sc.params)
        if isinstance(sc.initial, ReducedState):
            omega, gamma = from_reduced(sc.initial, sc.params)
            return system, np.concatenate([omega, gamma])
        state = initial_full_state(sc)
        return system, system.initial_vector(state)
    system = ReducedSystem(sc.params)
    try:
        if isinstance(sc.initial, ReducedState):
            return system, system.initial_vector(sc.initial)
        state = initial_full_state(sc)
        return system, system.initial_vector(to_reduced(state.omega, state.gamma, sc.params))
    except ChartError as exc:
        raise ValidationError(f"initial state outside the reduced chart: {exc}",
                              field="initial.gamma3") from None


def simulate_rows(traj):
    rows = []
    for (t, y, system), d in zip(traj.samples(), traj.diagnostics):
        st = system.full_state(y)
        rows.append([t, *st.gamma, *st.omega, d.energy, d.lagrange, d.jellett, d.area,
                     d.res_constraint, d.res_norm])
    return rows


SIMULATE_HEADER = ["t", "gamma1", "gamma2", "gamma3", "omega1", "omega2", "omega3",
                   "E", "F", "G", "C", "res_constraint", "res_norm"]


def simulate_summary(traj, sc):
    d0 = traj.diagnostics[0]
    drift = {k: max(abs(getattr(d, k) - getattr(d0, k)) for d in traj.diagnostics)
             for k in INTEGRALS}
    final = traj.final_state()
    g3, K1, C = reduced_observables(traj.system, traj.y_final)
    segments = [{"system": seg.kind, "t_start": float(seg.t[0]) if seg.t else None}
                for seg in traj.segments]
    return {
        "status": traj.status,
        "converged": traj.converged,
        "t_final": float(traj.t_final),
        "n_steps": traj.n_steps,
        "n_rejected": traj.n_rejected,
        "segments": segments,
        "final_state": {"v": final.v.tolist(), "omega": final.omega.tolist(),
                        "gamma": final.gamma.tolist(), "gamma3": g3, "K1": K1, "C": C},
        "drift": drift,
        "drift_bound": DRIFT_BOUND,
        "max_res_constraint": max(abs(d.res_constraint) for d in traj.diagnostics),
        "max_res_norm": max(abs(d.res_norm) for d in traj.diagnostics),
        "model": sc.model.to_dict(),
        "params": {k: getattr(sc.params, k) for k in ("a", "i1", "i3", "mu", "mu_r", "mu_s")},
    }


def cmd_simulate(args, sc):
    if sc.initial is None:
        raise ValidationError("simulate needs an initial state", field="initial")
    system, y0 = build_system(sc)
    traj = integrate(system, y0, sc.integrator)
    write_csv(_out(args, sc, "trajectory"), SIMULATE_HEADER, simulate_rows(traj))
    summary = simulate_summary(traj, sc)
    write_json(_out(args, sc, "summary"), summary)
    log.info("simulate: %s at t=%.6g after %d steps", traj.status, traj.t_final, traj.n_steps)
    return summary


# stability-scan --------------------------------------------------------

STABILITY_HEADER = ["family", "parameter", "branch", "gamma3", "C", "verdict",
                    "cond1", "cond2", "cond3", "cond4", "max_real", "condition"]


def _report_row(rep):
    return [rep.family.value, rep.parameter, rep.branch or 0, rep.gamma3, rep.C, rep.verdict.value,
            *rep.minors, rep.max_real, rep.condition]


def _scan_level(job):
    C, params = job
    return [_report_row(r) for r in classify_level(C, params)]


def _scan_c1(job):
    c1, params = job
    return [_report_row(sigma0_characteristic(c1, params))]


def stability_rows(params, C_grid=(), c1_grid=(), threads=1):
    rows = []
    for block in pmap(_scan_level, [(C, params) for C in C_grid], threads):
        rows.extend(block)
    for block in pmap(_scan_c1, [(c1, params) for c1 in c1_grid], threads):
        rows.extend(block)
    return rows


def default_C_grid(params, num=41):
    scale = critical_C(params) or 1.0
    return [float(x) for x in np.linspace(-2 * scale, 2 * scale, num)]


def cmd_stability_scan(args, sc):
    if sc.params.mu_r <= 0:
        raise ValidationError("stability-scan needs mu_r > 0", field="params.mu_r")
    C_grid = sc.grid.get("C", default_C_grid(sc.params) if "c1" not in sc.grid else [])
    c1_grid = sc.grid.get("c1", [])
    c0 = family_threshold(sc.params)
    for c1 in c1_grid:
        if c0 is None or not abs(c1) > c0:
            raise ExistenceError(f"c1 = {c1!r} outside the inclined family", field="grid.c1")
    rows = stability_rows(sc.params, C_grid, c1_grid, args.threads)
    write_csv(_out(args, sc, "stability"), STABILITY_HEADER, rows)
    return rows


# smale -----------------------------------------------------------------

SMALE_HEADER = ["family", "parameter", "branch", "C", "C2", "E", "gamma3", "verdict"]


def default_c1_grid(params, num=60, span=20.0):
    c0 = family_threshold(params)
    if c0 is None:
        return []
    mags = c0 * np.exp(np.linspace(1e-4, np.log(span), num))
    return [float(-m) for m in mags[::-1]] + [float(m) for m in mags]


def _smale_vertical(job):
    C, params = job
    rows = []
    for kind, which in ((Family.SIGMA_U, "upper"), (Family.SIGMA_L, "lower")):
        fam = vertical_family(kind, C, params)
        rep = hurwitz_vertical(which, C, params)
        rows.append([kind.value, C, 0, C, C * C, fam.energy, fam.gamma3, rep.verdict.value])
    return rows


def _smale_sigma0(job):
    c1, params = job
    rep = sigma0_characteristic(c1, params)
    E = family_energy(Family.SIGMA_0, c1, params)
    return [[Family.SIGMA_0.value, c1, rep.branch, rep.C, rep.C ** 2, E, rep.gamma3,
             rep.verdict.value]]


def smale_rows(params, C_grid, c1_grid, threads=1):
    rows = []
    for block in pmap(_smale_vertical, [(C, params) for C in C_grid], threads):
        rows.extend(block)
    for block in pmap(_smale_sigma0, [(c1, params) for c1 in c1_grid], threads):
        rows.extend(block)
    return rows


def cmd_smale(args, sc):
    if sc.params.mu_r <= 0:
        raise ValidationError("smale needs mu_r > 0 for stability flags", field="params.mu_r")
    scale = critical_C(sc.params) or 1.0
    C_grid = sc.grid.get("C", [float(x) for x in np.linspace(0.0, 3 * scale, 61)])
    c1_grid = sc.grid.get("c1", default_c1_grid(sc.params))
    c0 = family_threshold(sc.params)
    for c1 in c1_grid:
        if c0 is None or not abs(c1) > c0:
            raise ExistenceError(f"c1 = {c1!r} outside the inclined family", field="grid.c1")
    rows = smale_rows(sc.params, C_grid, c1_grid, args.threads)
    write_csv(_out(args, sc, "smale"), SMALE_HEADER, rows)
    return rows


# phase-portrait --------------------------------------------------------

PHASE_HEADER = ["traj", "t", "K1", "C", "gamma3"]
PHASE_SUMMARY_HEADER = ["traj", "gamma3_0", "K1_0", "K2_0", "C_0", "status", "t_final",
                        "gamma3_final", "K1_final", "C_final", "t_cross", "t_switch",
                        "min_sigma0_distance", "final_sigma0_distance"]
CURVE_HEADER = ["branch", "c1", "K1", "C", "gamma3"]


def crossing_event(params):
    """Event on |C| falling through the critical value."""
    C_star = critical_C(params)

    def fn(t, y, system):
        return abs(reduced_observables(system, y)[2]) - C_star

    return Event("critical_C", fn)


def run_phase_trajectory(job):
    """Integrate one reduced trajectory; returns (samples, summary dict)."""
    rs, params, config = job
    system = ReducedSystem(params)
    events = [crossing_event(params)] if critical_C(params) is not None else []
    traj = integrate(system, system.initial_vector(rs), config, events=events)
    samples = []
    for t, y, sys_ in traj.samples():
        g3, K1, C = reduced_observables(sys_, y)
        samples.append((t, K1, C, g3))
    arr = np.array(samples)
    t_cross = traj.events[0].t if traj.events else None
    before = arr if t_cross is None else arr[arr[:, 0] <= t_cross]
    g3f, K1f, Cf = reduced_observables(traj.system, traj.y_final)
    summary = {
        "status": traj.status,
        "t_final": traj.t_final,
        "gamma3_final": g3f,
        "K1_final": K1f,
        "C_final": Cf,
        "t_cross": t_cross,
        "t_switch": traj.segments[1].t[0] if traj.switched and traj.segments[1].t else None,
        "min_sigma0_distance": sigma0_min_distance(before[:, 1], before[:, 2], params),
        "final_sigma0_distance": sigma0_min_distance([K1f], [Cf], params),
    }
    return samples, summary


def phase_jobs(sc):
    gamma3 = sc.grid.get("gamma3", 0.9)
    K2 = sc.grid.get("K2", 0.0)
    jobs = []
    for C in sc.grid.get("C", DEFAULT_PHASE_C):
        for K1 in sc.grid.get("K1", DEFAULT_PHASE_K1):
            jobs.append((ReducedState(gamma3, K1, K2, C), sc.params, sc.integrator))
    return jobs


def sigma0_curve_rows(params):
    rows = []
    for c1 in default_c1_grid(params, num=200):
        rows.append([1 if c1 > 0 else -1, c1, sigma0_K1(c1, params), sigma0_C(c1, params),
                     -params.a / (c1 * c1 * (params.i1 - params.i3))])
    return rows


def cmd_phase_portrait(args, sc):
    if sc.params.mu_r <= 0:
        raise ValidationError("phase-portrait needs mu_r > 0", field="params.mu_r")
    jobs = phase_jobs(sc)
    results = pmap(run_phase_trajectory, jobs, args.threads)
    rows, summary_rows = [], []
    for i, ((rs, _, _), (samples, s)) in enumerate(zip(jobs, results)):
        rows.extend([i, *smp] for smp in samples)
        opt = [("" if s[k] is None or not np.isfinite(s[k]) else s[k])
               for k in ("t_cross", "t_switch", "min_sigma0_distance", "final_sigma0_distance")]
        summary_rows.append([i, rs.gamma3, rs.K1, rs.K2, rs.C, s["status"], s["t_final"],
                             s["gamma3_final"], s["K1_final"], s["C_final"], *opt])
    write_csv(_out(args, sc, "phase"), PHASE_HEADER, rows)
    write_csv(_out(args, sc, "phase_summary"), PHASE_SUMMARY_HEADER, summary_rows)
    write_csv(_out(args, sc, "sigma0_curve"), CURVE_HEADER, sigma0_curve_rows(sc.params))
    return summary_rows


# conservation-check ----------------------------------------------------

CONSERVATION_HEADER = ["model", "integral", "claimed", "signature", "max_drift", "status"]


def _drift_job(job):
    model, params, state, config = job
    traj = integrate(GeneralSystem(model, params), state.as_array(), config)
    d0 = traj.diagnostics[0]
    return {k: max(abs(getattr(d, k) - getattr(d0, k)) for d in traj.diagnostics)
            for k in INTEGRALS}


def conservation_report(params, model_specs, seed, n_traj=2, samples=32, t_end=50.0,
                        threads=1):
    config = IntegratorConfig(t_end=t_end)
    models = [make_model(spec) for spec in model_specs]
    jobs, owners = [], []
    for idx, model in enumerate(models):
        for state in admissible_initial_states(n_traj, model, params, seed=seed):
            jobs.append((model, params, state, config))
            owners.append(idx)
    drifts = pmap(_drift_job, jobs, threads)
    report = []
    for idx, model in enumerate(models):
        per = [d for d, o in zip(drifts, owners) if o == idx]
        claimed = CLAIMED.get(model.name)
        signature = conservation_signature(model, params, samples)
        entry = {"model": model.name, "claimed": sorted(claimed) if claimed is not None else None,
                 "signature": sorted(signature), "integrals": {}}
        ok = claimed is None or set(signature) == claimed
        for key in ("lagrange", "jellett", "area"):
            drift = max(d[key] for d in per) if per else 0.0
            predicted = key in signature
            fine = drift <= DRIFT_BOUND if predicted else True
            ok = ok and fine
            entry["integrals"][key] = {"max_drift": drift, "predicted": predicted, "ok": fine}
        entry["energy_drift"] = max(d["energy"] for d in per) if per else 0.0
        entry["ok"] = ok
        report.append(entry)
    return report


def _coefficients_for(params, cons):
    changes = {k: float(cons[k]) for k in ("mu", "mu_r", "mu_s") if k in cons}
    return params.with_(**changes) if changes else params


def cmd_conservation_check(args, sc):
    cons = sc.conservation
    params = _coefficients_for(sc.params, cons)
    specs = cons.get("models", DEFAULT_CONSERVATION_MODELS)
    for spec in specs:
        model = make_model(spec)
        for sub in getattr(model, "models", (model,)):
            coeff = {"viscous": "mu", "dry": "mu", "contact-torque": "mu", "anisotropic": "mu",
                     "rolling": "mu_r", "spinning": "mu_s"}.get(sub.name)
            if coeff and getattr(params, coeff) <= 0:
                raise ValidationError(f"model {sub.name!r} needs {coeff} > 0",
                                      field=f"params.{coeff}")
    report = conservation_report(params, specs, args.seed, int(cons.get("trajectories", 2)),
                                 int(cons.get("samples", 32)), float(cons.get("t_end", 50.0)),
                                 args.threads)
    rows = []
    for entry in report:
        for key, info in entry["integrals"].items():
            rows.append([entry["model"], key,
                         "" if entry["claimed"] is None else int(key in entry["claimed"]),
                         int(info["predicted"]), info["max_drift"],
                         "ok" if info["ok"] else "mismatch"])
    write_csv(_out(args, sc, "conservation"), CONSERVATION_HEADER, rows)
    write_json(_out(args, sc, "report"), {"seed": args.seed, "models": report,
                                          "ok": all(e["ok"] for e in report)})
    if not all(e["ok"] for e in report):
        bad = [e["model"] for e in report if not e["ok"]]
        raise TippeTopError(f"conservation mismatch for {', '.join(bad)}")
    return report


COMMANDS = {
    "simulate": cmd_simulate,
    "stability-scan": cmd_stability_scan,
    "smale": cmd_smale,
    "phase-portrait": cmd_phase_portrait,
    "conservation-check": cmd_conservation_check,
}


def u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="tippetop", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--scenario", required=True, help="JSON scenario file")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--threads", type=positive_int, default=1,
                        help="worker processes for sweeps")
    parser.add_argument("--seed", type=u64, default=0, help="seed for random initial states")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        sc = load_scenario(args.scenario)
        Path(args.out).mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, sc)
    except ValidationError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        print(f"error{where}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (TippeTopError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
