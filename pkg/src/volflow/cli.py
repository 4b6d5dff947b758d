"""Command-line front end: criteria, run, verify and sweep subcommands.

Reports are flat `key: value` lines in a stable order; time series land in a
fixed-schema CSV (`t,m,E,G,F,I1,I2,I3,I4,reg,dist,Qq`).  All floating-point
output goes through repr() of a Python float, so identical configurations and
seeds produce byte-identical files and stdout.

Exit codes: 0 when everything passed, 1 when some check failed (a VIOLATION
verdict, a failed lemma/oracle check, a bounds-chain failure), 2 for
configuration or precondition errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace as dc_replace
from pathlib import Path

import numpy as np

from . import criteria as crit_mod
from . import verify as verify_mod
from .config import ConfigError, build_flow, build_volume, load_config
from .functionals import PhiSpec, sample
from .matvol import advect, boundary_distance
from .solver import GridFlow

__all__ = ["main", "entry", "CSV_HEADER"]

CSV_HEADER = "t,m,E,G,F,I1,I2,I3,I4,reg,dist,Qq"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _emit(lines, out_path=None):
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out_path is not None:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(text)


def _kv_lines(pairs):
    return [f"{k}: {_fmt(v)}" for k, v in pairs]


def _csv_lines(header, rows):
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return lines


def _criteria_pairs(cfg, inp, report):
    pairs = [
        ("report", "criteria"), ("name", cfg.name),
        ("dimension", cfg.dimension), ("gamma", cfg.gamma), ("q", cfg.q),
        ("epsilon", cfg.epsilon), ("T", cfg.T), ("M", cfg.M), ("s0", cfg.s0),
        ("m", inp.m), ("E", inp.E), ("G0", inp.G0), ("d_init", inp.d_init),
        ("sigma_n", report.sigma_n), ("C1", report.C1), ("C3", report.C3),
        ("C", report.C), ("Q0", report.Q0), ("R0", report.R0),
        ("case", report.case), ("delta", report.delta),
        ("cond10", report.cond10), ("cond10_holds", report.cond10_holds),
        ("nec_ok", report.nec_ok),
    ]
    for rec in report.nec_detail:
        pairs += [(f"nec[{rec.name}].lhs", rec.lhs),
                  (f"nec[{rec.name}].rhs", rec.rhs),
                  (f"nec[{rec.name}].slack", rec.slack),
                  (f"nec[{rec.name}].ok", rec.ok)]
    return pairs


def _assemble_inputs(cfg):
    flow = build_flow(cfg)
    vol = build_volume(cfg, flow)
    phi = PhiSpec.power_law(cfg.q)
    s0 = sample(flow, vol, phi, cfg.epsilon)
    c10 = crit_mod.condition10(vol, flow, cfg.q)
    inp = crit_mod.CriteriaInputs(
        q=cfg.q, gamma=cfg.gamma, n=cfg.dimension, s0=cfg.s0, m=s0.m, E=s0.E,
        M=cfg.M, epsilon=cfg.epsilon, T=cfg.T, G0=s0.G, cond10=c10,
        d_init=boundary_distance(vol))
    return flow, vol, s0, inp


def _cmd_criteria(cfg, out_dir, fmt):
    _, _, _, inp = _assemble_inputs(cfg)
    report = crit_mod.evaluate(inp)
    pairs = _criteria_pairs(cfg, inp, report)
    if fmt == "csv":
        lines = _csv_lines(",".join(k for k, _ in pairs),
                           [[v for _, v in pairs]])
        suffix = "csv"
    else:
        lines = _kv_lines(pairs)
        suffix = "txt"
    _emit(lines, out_dir / f"{cfg.name}_criteria.{suffix}" if out_dir else None)
    return 0


def _cmd_run(cfg, out_dir, fmt):
    report = verify_mod.run_theorem_scenario(cfg)
    pairs = [
        ("report", "run"), ("name", cfg.name), ("verdict", report.verdict),
        ("hit_time", report.hit_time), ("horizon", report.horizon),
        ("T", cfg.T), ("dt", cfg.dt), ("epsilon", cfg.epsilon), ("q", cfg.q),
        ("M", cfg.M), ("case", report.criteria.case),
        ("Q0", report.criteria.Q0), ("R0", report.criteria.R0),
        ("delta", report.criteria.delta), ("cond10", report.cond10_value),
        ("cond10_holds", report.cond10_holds), ("nec_ok", report.criteria.nec_ok),
        ("E_drift", report.E_drift), ("reg_max", report.reg_max),
        ("bounds_checked", report.bounds_checked),
        ("bounds_failed", len(report.bounds_failures)),
        ("series_rows", len(report.series)),
        ("detail", report.detail or "none"),
    ]
    if fmt == "csv":
        lines = _csv_lines(",".join(k for k, _ in pairs), [[v for _, v in pairs]])
        suffix = "csv"
    else:
        lines = _kv_lines(pairs)
        suffix = "txt"
    out = out_dir if out_dir else Path(cfg.out_dir)
    _emit(lines, out / f"{cfg.name}_report.{suffix}")
    series_lines = _csv_lines(CSV_HEADER, report.series)
    series_path = out / f"{cfg.name}_series.csv"
    series_path.parent.mkdir(parents=True, exist_ok=True)
    series_path.write_text("\n".join(series_lines) + "\n")
    failed = report.verdict == "VIOLATION" or report.bounds_failures
    return 1 if failed else 0


def _check_pairs(idx, rep):
    tag = f"check[{idx}]"
    return [(f"{tag}.name", rep.name), (f"{tag}.t", rep.t),
            (f"{tag}.lhs", rep.lhs), (f"{tag}.rhs", rep.rhs),
            (f"{tag}.slack", rep.slack), (f"{tag}.passed", rep.passed)]


def _cmd_verify(cfg, out_dir, fmt, seed):
    flow = build_flow(cfg)
    phi = PhiSpec.power_law(cfg.q)
    checks = []

    times = [t for t in cfg.verify_times if t >= 0.0]
    if isinstance(flow, GridFlow):
        flow.advance_to(max(times) + 2.0 * cfg.verify_h)
    vol = build_volume(cfg, flow)
    for t in sorted(times):
        if t > vol.time:
            vol = advect(vol, flow, t, cfg.dt)
        checks += verify_mod.check_lemma_suite(flow, vol, phi, cfg.epsilon,
                                               h=cfg.verify_h)

    run_report = verify_mod.run_theorem_scenario(cfg)
    series = list(run_report.series)
    ts = [row.t for row in series]
    if len(ts) >= 2:
        step = ts[1] - ts[0]
        while len(ts) >= 3 and abs((ts[-1] - ts[-2]) - step) > 1e-9 * max(step, 1.0):
            series.pop()
            ts.pop()
    if len(series) >= 3:
        _, _, _, inp = _assemble_inputs(cfg)
        consts = crit_mod.constants(cfg.q, cfg.gamma, cfg.dimension, cfg.s0)
        checks += verify_mod.check_inequality17(series, inp, consts.C)
    checks += list(run_report.bounds_failures)

    rng = np.random.default_rng(seed)
    cases = verify_mod.random_oracle_cases(rng, cfg.oracle_cases)
    gaps = []
    oracle_failed = 0
    for f0, q0, oinp in cases:
        times_pair = verify_mod.blowup_oracle(f0, q0, oinp)
        if times_pair.closed_form is None or times_pair.numeric is None:
            oracle_failed += int(times_pair.closed_form != times_pair.numeric)
            continue
        gap = abs(times_pair.numeric - times_pair.closed_form) / times_pair.closed_form
        gaps.append(gap)
        oracle_failed += int(gap > 1e-6)

    failed = [c for c in checks if not c.passed]
    pairs = [
        ("report", "verify"), ("name", cfg.name), ("seed", seed),
        ("checks_total", len(checks)), ("checks_failed", len(failed)),
        ("oracle_cases", len(cases)), ("oracle_failed", oracle_failed),
        ("oracle_max_rel_gap", max(gaps) if gaps else 0.0),
        ("run_verdict", run_report.verdict),
        ("result", "pass" if not failed and not oracle_failed else "fail"),
    ]
    for idx, rep in enumerate(checks):
        pairs += _check_pairs(idx, rep)
    lines = _kv_lines(pairs)
    out = out_dir if out_dir else Path(cfg.out_dir)
    _emit(lines, out / f"{cfg.name}_verify.txt")
    return 1 if failed or oracle_failed else 0


def _cmd_sweep(cfg, out_dir, fmt):
    if not cfg.sweep_q or not cfg.sweep_epsilon:
        raise ConfigError("sweep needs both 'sweep.q' and 'sweep.epsilon'")
    bound = crit_mod.q_admissible_bound(cfg.gamma, cfg.dimension)
    for qv in cfg.sweep_q:
        if not qv < bound - 1e-9 * max(1.0, abs(bound)):
            raise ConfigError(f"key 'sweep.q': {qv} not admissible (needs < {bound})")
    flow = build_flow(cfg)
    # Build the volume once, with the smallest swept epsilon for the init check.
    probe_cfg = dc_replace(cfg, epsilon=min(cfg.sweep_epsilon))
    vol = build_volume(probe_cfg, flow)
    d_init = boundary_distance(vol)
    for ev in cfg.sweep_epsilon:
        if not 0.0 < ev < d_init:
            raise ConfigError(
                f"key 'sweep.epsilon': {ev} must satisfy 0 < epsilon < {d_init}")

    phi_cache = {}
    rows = []
    for qv in cfg.sweep_q:
        if qv not in phi_cache:
            s = sample(flow, vol, PhiSpec.power_law(qv), min(cfg.sweep_epsilon))
            c10 = crit_mod.condition10(vol, flow, qv)
            phi_cache[qv] = (s, c10)
        s, c10 = phi_cache[qv]
        consts = crit_mod.constants(qv, cfg.gamma, cfg.dimension, cfg.s0)
        for ev in cfg.sweep_epsilon:
            inp = crit_mod.CriteriaInputs(
                q=qv, gamma=cfg.gamma, n=cfg.dimension, s0=cfg.s0, m=s.m, E=s.E,
                M=cfg.M, epsilon=ev, T=cfg.T, G0=s.G, cond10=c10, d_init=d_init)
            q0, r0 = crit_mod.q_and_r(inp, consts.C)
            case, delta = crit_mod.classify_and_delta(inp, q0, r0)
            nec_ok, _ = crit_mod.necessary_conditions(inp, q0, r0)
            rows.append((qv, ev, q0, r0, case, delta, c10, nec_ok))

    header = "q,epsilon,Q0,R0,case,delta,cond10,nec_ok"
    if fmt == "report":
        pairs = [("report", "sweep"), ("name", cfg.name), ("rows", len(rows))]
        for i, row in enumerate(rows):
            for key, v in zip(header.split(","), row):
                pairs.append((f"row[{i}].{key}", v))
        lines = _kv_lines(pairs)
        suffix = "txt"
    else:
        lines = _csv_lines(header, rows)
        suffix = "csv"
    out = out_dir if out_dir else Path(cfg.out_dir)
    _emit(lines, out / f"{cfg.name}_sweep.{suffix}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="volflow",
        description="Material-volume attainment thresholds in smooth compressible flows")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("criteria", "run", "verify", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", default=None, choices=("csv", "report"))
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized checks")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        out_dir = Path(args.out) if args.out else Path(cfg.out_dir)
        fmt = args.format or cfg.out_format
        if args.command == "criteria":
            return _cmd_criteria(cfg, out_dir, fmt)
        if args.command == "run":
            return _cmd_run(cfg, out_dir, fmt)
        if args.command == "verify":
            return _cmd_verify(cfg, out_dir, fmt, args.seed)
        return _cmd_sweep(cfg, out_dir, fmt)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
