"""Command-line front end.

    mpdg run <case> [--config FILE] [--override k=v ...] [--out DIR]
    mpdg study <case> [--scheme mpms2 --scheme mpms3] [--ladder 20,40,...]
    mpdg sweep-sigma <case> --scheme mpms2 [--s -1,0,...,5] [--dt DT]
    mpdg verify

Outputs land in out/<case>/<timestamp>/: snapshots/*.csv, log.csv,
table.csv, config.json and a final checkpoint. The exit code is 0 iff
every in-run invariant held.
"""

from __future__ import annotations

import argparse
import ast
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import runio
from .cases import CASE_IDS, CaseSpec, build_pde_case, ode_kind
from .driver import march, new_run
from .errors import ConfigurationError, MPDGError
from .integrators import IntegratorKind, integrate
from .studies import convergence_study, sigma_sweep


def _parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigurationError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        value = raw
    return key.strip(), value


def _load_spec(args) -> CaseSpec:
    params: dict = {}
    if args.config:
        case_id, params = runio.read_config(args.config)
        if args.case and args.case != case_id:
            raise ConfigurationError(
                f"config file is for case {case_id!r} but {args.case!r} was requested"
            )
        args.case = case_id
    for item in args.override or []:
        key, value = _parse_override(item)
        params[key] = value
    return CaseSpec(args.case, params)


def _out_dir(base: str, case_id: str) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    out = Path(base) / case_id / stamp
    out.mkdir(parents=True, exist_ok=True)
    (out / "snapshots").mkdir(exist_ok=True)
    return out


def cmd_run(args) -> int:
    spec = _load_spec(args)
    out = _out_dir(args.out, spec.case_id)
    runio.write_config(out / "config.json", spec.case_id, spec.params)
    print(f"[mpdg] case {spec.case_id} -> {out}")

    if spec.case_id.startswith("ode-"):
        return _run_ode(spec, out, args)
    return _run_pde(spec, out, args)


def _run_ode(spec: CaseSpec, out: Path, args) -> int:
    from .cases import linear_exchange_exact, linear_exchange_pds, nonlinear_convection, nonlinear_pds

    p = spec.params
    if spec.case_id == "ode-linear":
        pds, conv = linear_exchange_pds(p["a"]), None
    else:
        pds = nonlinear_pds(p["a"])
        conv = nonlinear_convection if p["with_convection"] else None
    kind = ode_kind(p)
    times, states = integrate(
        pds, np.asarray(p["c0"], dtype=float), p["dt"], p["t_final"], kind,
        convection=conv, bootstrap_substeps=p.get("bootstrap_substeps", 16),
    )
    rows = [dict(t=f"{t:.12g}", **{f"c_{i+1}": f"{c:.12g}" for i, c in enumerate(state)})
            for t, state in zip(times, states)]
    runio.write_table(out / "trajectory.csv", rows, ["t"] + [f"c_{i+1}" for i in range(pds.species_count)])
    ok = bool(np.all(states > 0.0))
    total0 = states[0].sum()
    drift = float(np.abs(states.sum(axis=1) - total0).max() / total0) if conv is None else float("nan")
    print(f"[mpdg] {len(times) - 1} steps; positive={ok}; conservation drift={drift:.3g}")
    if spec.case_id == "ode-linear":
        err = float(np.abs(states[-1] - linear_exchange_exact(p["a"], p["c0"], p["t_final"])).max())
        print(f"[mpdg] final-time error vs closed form: {err:.6g}")
    return 0 if ok and (conv is not None or drift < 1e-11) else 1


def _run_pde(spec: CaseSpec, out: Path, args) -> int:
    case = build_pde_case(spec)
    run = new_run(case.model, case.mesh, case.bc, case.config, case.u0)
    runio.write_snapshot(out / "snapshots" / "t0.csv", case.model, case.mesh, run.qs, run.u)

    every = args.snapshot_every
    written = 0
    t_wall = time.time()
    log_path = out / "log.csv"
    flushed = 0

    def callback(run_state, rec):
        nonlocal written, flushed
        if every and rec.step % every == 0:
            runio.write_snapshot(
                out / "snapshots" / f"step{rec.step:07d}.csv",
                case.model, case.mesh, run_state.qs, run_state.u,
            )
            written += 1
        if len(run_state.records) - flushed >= 200:
            runio.append_log_rows(log_path, run_state.records[flushed:], flushed == 0)
            flushed = len(run_state.records)

    failure: MPDGError | None = None
    try:
        march(run, case.t_final, callback=callback)
    except MPDGError as exc:
        failure = exc
    runio.append_log_rows(log_path, run.records[flushed:], flushed == 0)
    runio.write_snapshot(out / "snapshots" / "final.csv", case.model, case.mesh, run.qs, run.u)
    runio.write_checkpoint(out / "final.ckpt", run)

    finite = [r for r in run.records if np.isfinite(r.min_rho)]
    if finite:
        print(
            f"[mpdg] steps={run.step_index} t={run.t:.6g} wall={time.time() - t_wall:.1f}s "
            f"min_rho={min(r.min_rho for r in finite):.3e} "
            f"min_p={min(r.min_p for r in finite):.3e} "
            f"max_frac_err={max(r.max_fraction_err for r in finite):.3e}"
        )
    if failure is not None:
        print(f"[mpdg] ABORT at step {run.step_index}, t={run.t:.6g}: {failure}", file=sys.stderr)
        return 1
    return 0


def cmd_study(args) -> int:
    spec = _load_spec(args)
    out = _out_dir(args.out, spec.case_id)
    runio.write_config(out / "config.json", spec.case_id, spec.params)
    ladder = None
    if args.ladder:
        ladder = [1.0 / float(n) for n in args.ladder.split(",")]
    ok = True
    all_rows = []
    for scheme in args.scheme or ["mpms2", "mpms3"]:
        table = convergence_study(spec, scheme, ladder)
        for row in table.rows:
            all_rows.append({
                "scheme": scheme, "dt": f"{row.dt:.10g}", "error": f"{row.error:.6e}",
                "order": "" if row.order is None else f"{row.order:.3f}",
            })
        orders = ", ".join(f"{o:.2f}" for o in table.orders())
        flag = "" if table.monotone else "  [non-monotone ladder]"
        print(f"[mpdg] {scheme}: errors {[f'{r.error:.3e}' for r in table.rows]} orders [{orders}]{flag}")
        ok = ok and table.monotone
    runio.write_table(out / "table.csv", all_rows, ["scheme", "dt", "error", "order"])
    print(f"[mpdg] table -> {out / 'table.csv'}")
    return 0


def cmd_sweep_sigma(args) -> int:
    spec = _load_spec(args)
    out = _out_dir(args.out, spec.case_id)
    runio.write_config(out / "config.json", spec.case_id, spec.params)
    s_values = [float(s) for s in args.s.split(",")] if args.s else None
    ok = True
    rows_out = []
    for scheme in args.scheme or ["mpms2"]:
        rows = sigma_sweep(spec, scheme, s_values, dt=args.dt)
        for r in rows:
            rows_out.append({"scheme": scheme, **{k: f"{v:.6g}" if isinstance(v, float) else v for k, v in r.items()}})
            if np.isfinite(r["error"]):
                ok = ok and r["positive"] and r["conserved"]
        print(f"[mpdg] {scheme}: " + "  ".join(f"s={r['s']:g} err={r['error']:.3e}" for r in rows))
    runio.write_table(out / "table.csv", rows_out, ["scheme", "s", "error", "positive", "conserved"])
    return 0 if ok else 1


def cmd_verify(args) -> int:
    """Fast invariant suite: stage-solve oracle, positivity/conservation,
    limiter contract, flux consistency."""
    from .verify import run_verification

    failures = run_verification(verbose=True)
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mpdg", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one case")
    run_p.add_argument("case", choices=CASE_IDS, nargs="?")
    run_p.add_argument("--config", help="JSON config file (case + params)")
    run_p.add_argument("--override", action="append", metavar="KEY=VALUE")
    run_p.add_argument("--out", default="out")
    run_p.add_argument("--snapshot-every", type=int, default=0, metavar="STEPS")
    run_p.set_defaults(func=cmd_run)

    study_p = sub.add_parser("study", help="convergence study (ODE cases)")
    study_p.add_argument("case", choices=("ode-linear", "ode-nonlinear"), nargs="?")
    study_p.add_argument("--config")
    study_p.add_argument("--override", action="append", metavar="KEY=VALUE")
    study_p.add_argument("--scheme", action="append", choices=("mpe", "mprk2", "mprk3", "mpms2", "mpms3"))
    study_p.add_argument("--ladder", help="comma list of 1/dt values, e.g. 20,40,80")
    study_p.add_argument("--out", default="out")
    study_p.set_defaults(func=cmd_study)

    sweep_p = sub.add_parser("sweep-sigma", help="error vs sigma exponent")
    sweep_p.add_argument("case", choices=("ode-linear", "ode-nonlinear"), nargs="?")
    sweep_p.add_argument("--config")
    sweep_p.add_argument("--override", action="append", metavar="KEY=VALUE")
    sweep_p.add_argument("--scheme", action="append", choices=("mpms2", "mpms3"))
    sweep_p.add_argument("--s", help="comma list of exponents, default -1..5")
    sweep_p.add_argument("--dt", type=float)
    sweep_p.add_argument("--out", default="out")
    sweep_p.set_defaults(func=cmd_sweep_sigma)

    verify_p = sub.add_parser("verify", help="run the invariant suite")
    verify_p.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    if getattr(args, "case", "set") is None and not getattr(args, "config", None):
        parser.error("a case id or --config is required")
    try:
        return args.func(args)
    except MPDGError as exc:
        print(f"[mpdg] error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
