"""Certification of the estimate chain on live runs.

Three layers:

* pointwise identity/inequality checks on a (flow, volume) snapshot: the
  time-derivative identities for the moment G against centered differences,
  the Cauchy-Schwarz moment inequality (generic and sharp power-law form),
  and the density-moment lower bound, plus the per-sample bounds chain;
* the comparison-ODE oracle: closed-form blow-up times for the three sign
  cases of Q against an independent adaptive integration of the same ODE;
* end-to-end scenarios: advance a volume to its horizon, sample everything,
  detect boundary attainment (with bisection refinement), and classify the
  outcome against the threshold prediction.

A scenario can only be scored a VIOLATION when the undershoot condition held,
the regularity and energy-drift hypotheses survived the run, and no hit
occurred -- anything else is consistent with (or outside) the prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import criteria as crit_mod
from .criteria import CriteriaInputs, threshold_q
from .functionals import PhiSpec, TargetReached, sample
from .matvol import _advect_any, boundary_distance, volume_integral_plain
from .solver import GridFlow, SmoothnessLost

__all__ = [
    "CheckReport",
    "BlowupTimes",
    "TheoremReport",
    "TOLERANCES",
    "check_lemma_suite",
    "check_inequality17",
    "bounds_chain",
    "blowup_oracle",
    "run_theorem_scenario",
]

# Documented per check: relative for the finite-difference identities,
# fraction-of-scale slack floors for the inequality checks.
TOLERANCES = {
    "dG_dt_identity": 1e-5,
    "d2G_dt2_decomposition": 1e-3,
    "moment_cauchy_schwarz": 1e-10,
    "moment_cauchy_schwarz_power": 1e-10,
    "moment_cauchy_schwarz_printed": 1e-10,
    "density_moment_lower_bound": 1e-10,
    "f_energy_bound": 1e-10,
    "i2_energy_bound": 1e-10,
    "i4_flux_bound": 1e-10,
    "g_mass_bound": 1e-10,
}


@dataclass(frozen=True)
class CheckReport:
    """One verified inequality/identity; slack >= 0 means it held."""

    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    t: float


def _ineq_report(name, lhs, rhs, t):
    """Check lhs <= rhs with a slack floor proportional to the scale."""
    scale = max(abs(lhs), abs(rhs), 1e-300)
    slack = rhs - lhs
    return CheckReport(name=name, lhs=float(lhs), rhs=float(rhs),
                       slack=float(slack),
                       passed=bool(slack >= -TOLERANCES[name] * scale), t=float(t))


def _identity_report(name, measured, expected, t):
    """Check a relative gap against the named tolerance."""
    scale = max(abs(expected), 1e-12)
    gap = abs(measured - expected) / scale
    tol = TOLERANCES[name]
    return CheckReport(name=name, lhs=float(gap), rhs=float(tol),
                       slack=float(tol - gap), passed=bool(gap <= tol), t=float(t))


def _moment_value(vol, phi):
    z = vol.nodes - vol.x0
    r = np.linalg.norm(z, axis=1)
    return float(np.sum(phi.eval(r)[0] * vol.mass_w))


def check_lemma_suite(flow, vol, phi, epsilon, h=1e-4):
    """Identity and inequality checks at the volume's current time.

    Centered differences of the moment G over +-h (markers re-advected by a
    single RK4 step each way) are compared with the quadrature values of its
    first and second derivatives; then the Cauchy-Schwarz moment inequality
    (generic form, and for power laws the sharp |q|/(|q|+1) form together
    with the weaker printed (|q|+1)/|q| variant) and the density-moment lower
    bound are verified.
    """
    t = vol.time
    s = sample(flow, vol, phi, epsilon)
    vol_p = _advect_any(vol, flow, t + h, h, check_boundary=False)
    vol_m = _advect_any(vol, flow, t - h, h, check_boundary=False)
    g0 = _moment_value(vol, phi)
    gp = _moment_value(vol_p, phi)
    gm = _moment_value(vol_m, phi)

    reports = [
        _identity_report("dG_dt_identity", (gp - gm) / (2.0 * h), s.F, t),
        _identity_report("d2G_dt2_decomposition",
                         (gp - 2.0 * g0 + gm) / h ** 2, s.I_sum, t),
    ]

    z = vol.nodes - vol.x0
    r = np.linalg.norm(z, axis=1)
    p_val, p_d1, p_d2 = phi.eval(r)
    if np.any(p_d2 <= 0.0) or np.any(p_val <= 0.0):
        raise ValueError("Cauchy-Schwarz moment check needs phi > 0 and phi'' > 0 "
                         "at all nodes")
    sup_ratio = float(np.max(p_d1 ** 2 / (p_d2 * p_val)))
    reports.append(_ineq_report("moment_cauchy_schwarz",
                                s.F ** 2, sup_ratio * s.G * s.I1, t))

    if phi.is_power_law:
        aq = abs(phi.q)
        reports.append(_ineq_report("moment_cauchy_schwarz_power",
                                    s.F ** 2, aq / (aq + 1.0) * s.G * s.I1, t))
        reports.append(_ineq_report("moment_cauchy_schwarz_printed",
                                    s.F ** 2, (aq + 1.0) / aq * s.G * s.I1, t))

        d = boundary_distance(vol)
        if d < epsilon:
            raise ValueError(
                f"density-moment bound needs dist(boundary, x0) >= epsilon "
                f"(have {d} < {epsilon})")
        consts = crit_mod.constants(phi.q, flow.gamma, vol.dim, flow.entropy_floor)
        gamma = flow.gamma
        x0 = vol.x0

        def integrand(pts):
            rr = np.linalg.norm(pts - x0, axis=1)
            rho = np.asarray(flow.density(vol.time, pts), dtype=float)
            return rr ** (phi.q - 2.0) * rho ** gamma

        lhs_int = volume_integral_plain(vol, integrand, flow)
        expo = -((phi.q + vol.dim) * (gamma - 1.0) + 2.0)
        bound = consts.C1 * s.G ** gamma * epsilon ** expo
        reports.append(_ineq_report("density_moment_lower_bound",
                                    bound, lhs_int, t))
    return reports


def bounds_chain(s):
    """Per-sample bounds that must hold while dist(boundary, x0) >= epsilon."""
    if s.q is None:
        raise ValueError("bounds chain is defined for power-law profiles")
    aq = abs(s.q)
    eps = s.epsilon
    return [
        _ineq_report("f_energy_bound", abs(s.F),
                     aq * eps ** (s.q - 1.0) * math.sqrt(2.0 * s.m * s.E), s.t),
        _ineq_report("i2_energy_bound", abs(s.I2),
                     2.0 * aq * eps ** (s.q - 2.0) * s.E, s.t),
        _ineq_report("i4_flux_bound", abs(s.I4),
                     aq * eps ** (s.q - 1.0) * abs(s.reg), s.t),
        _ineq_report("g_mass_bound", s.G, eps ** s.q * s.m, s.t),
    ]


def check_inequality17(series, inp, c):
    """Master differential inequality along a uniformly sampled series.

    At each interior sample the centered difference of F must dominate
    (|q|+1)/(|q| eps^q m) * (F^2 - q^2 eps^(2q-2) Q(t)), with Q(t) evaluated
    from the current moment G(t).  The pass tolerance absorbs the centered-
    difference truncation, estimated from third differences of F.
    """
    if len(series) < 3:
        raise ValueError("need at least 3 samples")
    ts = np.array([s.t for s in series])
    fs = np.array([s.F for s in series])
    gs = np.array([s.G for s in series])
    dt = ts[1] - ts[0]
    if not np.allclose(np.diff(ts), dt, rtol=1e-9, atol=1e-12):
        raise ValueError("samples must be uniformly spaced")

    aq = abs(inp.q)
    a_coef = (aq + 1.0) / (aq * inp.epsilon ** inp.q * inp.m)
    third = np.abs(np.diff(fs, n=3)) / dt ** 3 if len(fs) >= 4 else np.array([0.0])
    f3_scale = float(third.max()) if third.size else 0.0

    reports = []
    for i in range(1, len(series) - 1):
        fd = (fs[i + 1] - fs[i - 1]) / (2.0 * dt)
        q_t = threshold_q(inp.q, inp.gamma, inp.n, c, inp.m, inp.E, inp.M,
                          inp.epsilon, gs[i])
        bound = a_coef * (fs[i] ** 2 - inp.q ** 2 * inp.epsilon ** (2.0 * inp.q - 2.0) * q_t)
        trunc = dt ** 2 / 6.0 * f3_scale
        tol = max(2.0 * trunc, 1e-9 * max(abs(fd), abs(bound), 1.0))
        slack = fd - bound
        reports.append(CheckReport(name="master_inequality", lhs=float(bound),
                                   rhs=float(fd), slack=float(slack),
                                   passed=bool(slack >= -tol), t=float(ts[i])))
    return reports


# ---------------------------------------------------------------------------
# Comparison-ODE blow-up oracle
# ---------------------------------------------------------------------------

class BlowupTimes(NamedTuple):
    closed_form: Optional[float]
    numeric: Optional[float]


def _closed_form_blowup(f0, q0, a, b):
    """Exact blow-up time of F' = a (F^2 - sign(q0) b^2), F(0) = f0.

    Positive Q: finite escape needs f0 > b, and separation of variables gives
    t* = ln((f0+b)/(f0-b)) / (2 a b).  Zero Q: t* = 1/(a f0) for f0 > 0.
    Negative Q: every trajectory escapes at
    t* = (pi/2 - arctan(f0/b)) / (a b).
    """
    if q0 > 0.0:
        if f0 <= b:
            return None
        return math.log((f0 + b) / (f0 - b)) / (2.0 * a * b)
    if q0 == 0.0:
        if f0 <= 0.0:
            return None
        return 1.0 / (a * f0)
    return (0.5 * math.pi - math.atan(f0 / b)) / (a * b)


def blowup_oracle(f0, q0, inp):
    """Closed-form vs. numerically integrated blow-up time of the comparison ODE.

    The numeric side integrates F' = (|q|+1)/(|q| eps^q m) (F^2 - q^2
    eps^(2q-2) Q0) with adaptive RK until F exceeds 1e12 times the initial
    scale, then adds the analytic tail 1/(a F_cap) of the remaining ascent.
    Both entries are None when the trajectory never escapes.
    """
    aq = abs(inp.q)
    a = (aq + 1.0) / (aq * inp.epsilon ** inp.q * inp.m)
    b2_signed = inp.q ** 2 * inp.epsilon ** (2.0 * inp.q - 2.0) * q0
    b = math.sqrt(abs(b2_signed))

    closed = _closed_form_blowup(float(f0), float(q0), a, b)

    scale0 = max(abs(f0), b, 1e-12)
    cap = 1e12 * scale0

    def rhs(t, y):
        return [a * (y[0] * y[0] - b2_signed)]

    def escape(t, y):
        return y[0] - cap
    escape.terminal = True
    escape.direction = 1.0

    char = 1.0 / (a * max(b, abs(f0), 1e-6))
    horizon = 4.0 * max(char, 1e-12)
    max_horizon = (1e3 * char) if closed is None else (1e9 * char)
    dyn_scale = max(abs(f0), b, 1e-12)
    numeric = None
    while True:
        sol = solve_ivp(rhs, (0.0, horizon), [float(f0)], method="DOP853",
                        rtol=1e-11, atol=1e-13 * scale0, events=escape)
        if sol.t_events[0].size:
            numeric = float(sol.t_events[0][0]) + 1.0 / (a * cap)
            break
        if sol.status == -1 and sol.y[0, -1] > 1e6 * dyn_scale:
            # Step size underflowed against the blow-up; the stall point plus
            # the analytic tail of the ascent is the escape time.
            numeric = float(sol.t[-1]) + 1.0 / (a * float(sol.y[0, -1]))
            break
        if horizon >= max_horizon:
            break
        horizon *= 4.0
    return BlowupTimes(closed_form=closed, numeric=numeric)


def random_oracle_cases(rng, count, gamma=1.4, n=2):
    """Admissible (F0, Q0, inputs) triples cycling through the three sign cases.

    The inputs carry only what the oracle reads (q, epsilon, m); the rest are
    valid placeholders.
    """
    cases = []
    for i in range(count):
        q = -(7.2 + 4.8 * rng.random())
        eps = 0.3 + 1.7 * rng.random()
        m = 0.5 + 4.5 * rng.random()
        inp = CriteriaInputs(q=q, gamma=gamma, n=n, s0=0.0, m=m, E=1.0, M=0.0,
                             epsilon=eps, T=1.0, G0=0.0, cond10=0.0,
                             d_init=2.0 * eps)
        kind = i % 3
        if kind == 1:
            q0 = 0.0
            f0 = (0.2 + 4.8 * rng.random()) * abs(q) * eps ** (q - 1.0)
        else:
            r0 = 0.2 + 2.8 * rng.random()
            q0 = r0 * r0 if kind == 0 else -r0 * r0
            b = abs(q) * eps ** (q - 1.0) * r0
            f0 = b * (1.2 + 4.8 * rng.random()) if kind == 0 else 5.0 * b * rng.random()
        cases.append((f0, q0, inp))
    return cases


# ---------------------------------------------------------------------------
# End-to-end scenario runner
# ---------------------------------------------------------------------------

class SeriesRow(NamedTuple):
    t: float
    m: float
    E: float
    G: float
    F: float
    I1: float
    I2: float
    I3: float
    I4: float
    reg: float
    dist: float
    Qq: float


@dataclass(frozen=True)
class TheoremReport:
    """Outcome of one scenario against the attainment prediction."""

    criteria: crit_mod.CriteriaReport
    cond10_value: float
    cond10_holds: bool
    hit_time: Optional[float]
    horizon: float
    E_drift: float
    reg_max: float
    verdict: str
    detail: str = ""
    bounds_failures: tuple = ()
    bounds_checked: int = 0
    series: tuple = ()


def _refine_hit(vol_prev, flow, t_lo, t_hi, epsilon, dt):
    """Bisect the attainment time between two step instants to dt/100."""
    tol = dt / 100.0
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        trial = _advect_any(vol_prev, flow, mid, dt, check_boundary=False)
        if boundary_distance(trial) <= epsilon:
            t_hi = mid
        else:
            t_lo = mid
    return 0.5 * (t_lo + t_hi)


def run_theorem_scenario(cfg):
    """Advance a configured scenario to min(horizon, hit time) and report.

    The comparison against the threshold uses time-zero data only; the run
    itself monitors the bounds chain, the regularity flux and the energy
    drift, and refines any boundary attainment by bisection.
    """
    from . import config as config_mod

    flow = config_mod.build_flow(cfg)
    detail = ""
    horizon = cfg.T
    if isinstance(flow, GridFlow):
        try:
            flow.advance_to(cfg.T)
        except SmoothnessLost as exc:
            horizon = flow.t_last
            detail = f"smoothness lost at t={exc.time}; "

    vol = config_mod.build_volume(cfg, flow)
    phi = PhiSpec.power_law(cfg.q)
    s0 = sample(flow, vol, phi, cfg.epsilon)
    c10 = crit_mod.condition10(vol, flow, cfg.q)
    inp = CriteriaInputs(q=cfg.q, gamma=cfg.gamma, n=cfg.dimension, s0=cfg.s0,
                         m=s0.m, E=s0.E, M=cfg.M, epsilon=cfg.epsilon, T=cfg.T,
                         G0=s0.G, cond10=c10, d_init=boundary_distance(vol))
    report_c = crit_mod.evaluate(inp)

    def q_monitor(g):
        return threshold_q(cfg.q, cfg.gamma, cfg.dimension, report_c.C,
                           s0.m, s0.E, cfg.M, cfg.epsilon, g)

    def record(s, dist):
        return SeriesRow(t=s.t, m=s.m, E=s.E, G=s.G, F=s.F, I1=s.I1, I2=s.I2,
                         I3=s.I3, I4=s.I4, reg=s.reg, dist=dist,
                         Qq=q_monitor(s.G))

    series = [record(s0, inp.d_init)]
    bounds_failed = []
    bounds_checked = 0
    for rep in bounds_chain(s0):
        bounds_checked += 1
        if not rep.passed:
            bounds_failed.append(rep)

    reg_max = abs(s0.reg)
    e_min = e_max = s0.E
    hit_time = None
    dt = cfg.dt
    n_steps = int(math.ceil(horizon / dt - 1e-9))
    stride = max(1, cfg.sample_stride)

    # Advance one advection call per sample instant (stride steps of dt
    # inside); the boundary self-intersection detector runs per call.
    try:
        for k in range(stride, n_steps + stride, stride):
            t_k = min(k * dt, horizon)
            prev = vol
            vol = _advect_any(vol, flow, t_k, dt)
            dist = boundary_distance(vol)
            if dist <= cfg.epsilon:
                hit_time = _refine_hit(prev, flow, prev.time, t_k, cfg.epsilon, dt)
                break
            s = sample(flow, vol, phi, cfg.epsilon)
            series.append(record(s, dist))
            reg_max = max(reg_max, abs(s.reg))
            e_min, e_max = min(e_min, s.E), max(e_max, s.E)
            for rep in bounds_chain(s):
                bounds_checked += 1
                if not rep.passed:
                    bounds_failed.append(rep)
    except TargetReached:
        hit_time = vol.time
        detail += "a quadrature node reached the target radius floor; "

    e_drift = max(abs(e_max - s0.E), abs(e_min - s0.E)) / s0.E

    if hit_time is not None:
        verdict = "consistent_hit"
    elif not report_c.cond10_holds:
        verdict = "consistent_no_claim"
    elif reg_max > cfg.M:
        verdict = "consistent_no_claim"
        detail += f"regularity flux exceeded M ({reg_max} > {cfg.M}); "
    elif horizon < cfg.T:
        verdict = "consistent_no_claim"
    elif e_drift > 0.01:
        verdict = "inconclusive"
        detail += f"energy drift {e_drift:.3%} exceeds 1%; "
    else:
        verdict = "VIOLATION"

    return TheoremReport(criteria=report_c, cond10_value=c10,
                         cond10_holds=report_c.cond10_holds, hit_time=hit_time,
                         horizon=horizon, E_drift=e_drift, reg_max=reg_max,
                         verdict=verdict, detail=detail.strip(),
                         bounds_failures=tuple(bounds_failed),
                         bounds_checked=bounds_checked, series=tuple(series))
