"""Scenario configuration: flat dotted-key text files and builders.

The format is one `key = value` pair per line with `#` comments.  Values are
parsed as booleans, integers, floats, comma-separated float tuples,
semicolon-separated point lists, or plain strings -- whichever matches first.
Grid initial fields are numpy expressions over the node coordinates x, y and
the radius r, evaluated in a restricted namespace.

All attainment preconditions (admissible q, epsilon below the initial
boundary distance, nonnegative M) are validated at load time so a bad
scenario fails before any computation starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .criteria import q_admissible_bound
from .flowfield import make_analytic_flow
from .matvol import VolumeShapeSpec, init_volume, point_in_loops
from .solver import GridFlow, GridState

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "parse_kv_text",
    "load_config",
    "build_flow",
    "build_volume",
    "initial_boundary_distance",
]


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key."""


def _parse_scalar(text):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("inf", "infinity"):
        return math.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_value(text):
    text = text.strip()
    if ";" in text:
        return tuple(_parse_value(part) for part in text.split(";") if part.strip())
    if "," in text:
        return tuple(_parse_scalar(p.strip()) for p in text.split(",") if p.strip())
    return _parse_scalar(text)


def parse_kv_text(text):
    """Parse flat `key = value` lines into a dict; later keys win."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = _parse_value(value)
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    """Typed view of one scenario file."""

    name: str
    dimension: int
    gamma: float
    flow_kind: str
    flow_params: dict
    volume: VolumeShapeSpec
    resample_every: int
    x0: tuple
    epsilon: float
    q: float
    T: float
    M: float
    s0: float
    dt: float
    sample_stride: int
    verify_times: tuple
    verify_h: float
    oracle_cases: int
    sweep_q: tuple
    sweep_epsilon: tuple
    out_dir: str
    out_format: str
    raw: dict = field(repr=False, default_factory=dict)


def _need(raw, key, kind=None):
    if key not in raw:
        raise ConfigError(f"missing required key {key!r}")
    value = raw[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"key {key!r} has wrong type: expected {kind}, got {value!r}")
    return value


def _as_floats(value, key, length=None):
    if np.isscalar(value):
        value = (value,)
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"key {key!r}: expected numbers, got {value!r}") from None
    if length is not None and len(out) != length:
        raise ConfigError(f"key {key!r}: expected {length} numbers, got {len(out)}")
    return out


def load_config(path):
    """Read, type-check and precondition-check a scenario file."""
    path = Path(path)
    raw = parse_kv_text(path.read_text())
    name = str(raw.get("name", path.stem))

    dimension = _need(raw, "dimension")
    if dimension not in (2, 3):
        raise ConfigError("key 'dimension' must be 2 or 3")
    gamma = float(_need(raw, "gamma"))
    if gamma <= 1.0:
        raise ConfigError("key 'gamma' must exceed 1")

    kind = _need(raw, "flow.kind")
    if kind not in ("constant", "expansion", "grid"):
        raise ConfigError(f"key 'flow.kind' must be constant|expansion|grid, got {kind!r}")
    flow_params = _flow_params(raw, kind, dimension)

    volume = _volume_spec(raw, dimension)
    x0 = _as_floats(_need(raw, "x0"), "x0", dimension)
    epsilon = float(_need(raw, "epsilon"))
    if epsilon <= 0.0:
        raise ConfigError("key 'epsilon' must be positive")
    qexp = float(_need(raw, "q"))
    bound = q_admissible_bound(gamma, dimension)
    if not qexp < bound - 1e-9 * max(1.0, abs(bound)):
        raise ConfigError(f"key 'q' must lie strictly below {bound}, got {qexp}")
    horizon = float(_need(raw, "T"))
    if horizon <= 0.0:
        raise ConfigError("key 'T' must be positive")
    reg_const = float(_need(raw, "M"))
    if reg_const < 0.0:
        raise ConfigError("key 'M' must be nonnegative")
    s0 = float(raw.get("s0", 0.0))
    dt = float(raw.get("dt", 1e-3))
    if dt <= 0.0:
        raise ConfigError("key 'dt' must be positive")
    stride = int(raw.get("sample.stride", 10))
    if stride < 1:
        raise ConfigError("key 'sample.stride' must be at least 1")

    d0 = initial_boundary_distance(volume, x0)
    if epsilon >= d0:
        raise ConfigError(
            f"key 'epsilon': must be smaller than the initial boundary distance {d0}")

    cfg = ScenarioConfig(
        name=name, dimension=dimension, gamma=gamma, flow_kind=kind,
        flow_params=flow_params, volume=volume,
        resample_every=int(raw.get("volume.resample_every", 0)),
        x0=x0, epsilon=epsilon, q=qexp, T=horizon, M=reg_const, s0=s0, dt=dt,
        sample_stride=stride,
        verify_times=_as_floats(raw.get("verify.times", (0.2, 0.5, 0.8)), "verify.times"),
        verify_h=float(raw.get("verify.h", 1e-4)),
        oracle_cases=int(raw.get("verify.oracle_cases", 200)),
        sweep_q=_as_floats(raw.get("sweep.q", ()), "sweep.q") if raw.get("sweep.q") else (),
        sweep_epsilon=_as_floats(raw.get("sweep.epsilon", ()), "sweep.epsilon")
        if raw.get("sweep.epsilon") else (),
        out_dir=str(raw.get("out.dir", "out")),
        out_format=str(raw.get("out.format", "report")),
        raw=raw,
    )
    if cfg.out_format not in ("report", "csv"):
        raise ConfigError("key 'out.format' must be report|csv")
    return cfg


def _flow_params(raw, kind, dimension):
    if kind == "constant":
        return {
            "rho0": float(_need(raw, "flow.rho0")),
            "V0": _as_floats(_need(raw, "flow.V0"), "flow.V0", dimension),
            "P0": float(_need(raw, "flow.P0")),
        }
    if kind == "expansion":
        return {
            "rho0": float(_need(raw, "flow.rho0")),
            "S0": float(raw.get("flow.S0", 0.0)),
            "t_c": float(_need(raw, "flow.t_c")),
        }
    if dimension != 2:
        raise ConfigError("key 'flow.kind': grid flows are 2-D only")
    params = {
        "n": int(_need(raw, "flow.grid.n")),
        "box": _as_floats(_need(raw, "flow.grid.box"), "flow.grid.box", 2),
        "dt": float(_need(raw, "flow.grid.dt")),
        "rho": str(_need(raw, "flow.grid.rho")),
        "vx": str(_need(raw, "flow.grid.vx")),
        "vy": str(_need(raw, "flow.grid.vy")),
        "S": str(raw.get("flow.grid.S", "0.0")),
        "filter": float(raw.get("flow.grid.filter", 0.0)),
        "max_grad": float(raw.get("flow.grid.max_grad", math.inf)),
    }
    if params["n"] < 16:
        raise ConfigError("key 'flow.grid.n' must be at least 16")
    if params["box"][1] <= params["box"][0]:
        raise ConfigError("key 'flow.grid.box' must be (min, max) with min < max")
    return params


def _volume_spec(raw, dimension):
    shape = _need(raw, "volume.shape")
    aliases = {"ball": "disk", "shell": "annulus"}
    shape = aliases.get(shape, shape)
    center = _as_floats(raw.get("volume.center", (0.0,) * dimension),
                        "volume.center", dimension)
    markers = int(raw.get("volume.markers", 256))
    quad_order = int(raw.get("volume.quad_order", 40))
    refine = int(raw.get("volume.refine", 3))
    try:
        if shape == "disk":
            return VolumeShapeSpec(shape="disk", center=center,
                                   radius=float(_need(raw, "volume.radius")),
                                   markers=markers, quad_order=quad_order)
        if shape == "annulus":
            radii = _as_floats(_need(raw, "volume.radii"), "volume.radii", 2)
            return VolumeShapeSpec(shape="annulus", center=center, radii=radii,
                                   markers=markers, quad_order=quad_order)
        if shape == "polygon":
            verts = _need(raw, "volume.vertices")
            vertices = tuple(_as_floats(v, "volume.vertices", 2) for v in verts)
            return VolumeShapeSpec(shape="polygon", vertices=vertices,
                                   markers=markers, refine=refine)
    except ValueError as exc:
        raise ConfigError(f"key 'volume.*': {exc}") from exc
    raise ConfigError(f"key 'volume.shape': unknown shape {shape!r}")


def initial_boundary_distance(spec, x0):
    """Closed-form dist(boundary, x0) for a shape spec (load-time check)."""
    x0 = np.asarray(x0, dtype=float)
    center = np.asarray(spec.center, dtype=float)
    if spec.shape == "disk":
        d = float(np.linalg.norm(x0 - center))
        if d <= spec.radius:
            raise ConfigError("key 'x0': lies inside (or on) the initial volume")
        return d - spec.radius
    if spec.shape == "annulus":
        d = float(np.linalg.norm(x0 - center))
        r1, r2 = spec.radii
        if r1 <= d <= r2:
            raise ConfigError("key 'x0': lies inside (or on) the initial volume")
        return r1 - d if d < r1 else d - r2
    verts = np.asarray(spec.vertices, dtype=float)
    if point_in_loops(x0, [verts]):
        raise ConfigError("key 'x0': lies inside the initial volume")
    a = verts
    b = np.roll(verts, -1, axis=0)
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", x0 - a, ab) / np.where(denom > 0, denom, 1.0),
                0.0, 1.0)
    closest = a + t[:, None] * ab
    return float(np.linalg.norm(x0 - closest, axis=1).min())


_EXPR_NAMES = {
    "pi": np.pi, "e": np.e, "sqrt": np.sqrt, "exp": np.exp, "log": np.log,
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "tanh": np.tanh,
    "cosh": np.cosh, "sinh": np.sinh, "abs": np.abs, "hypot": np.hypot,
    "minimum": np.minimum, "maximum": np.maximum, "where": np.where,
}


def _eval_field(expr, x, y):
    ns = dict(_EXPR_NAMES)
    ns.update({"x": x, "y": y, "r": np.hypot(x, y)})
    try:
        value = eval(expr, {"__builtins__": {}}, ns)  # noqa: S307 - local config files
    except Exception as exc:
        raise ConfigError(f"grid field expression {expr!r} failed: {exc}") from exc
    return np.broadcast_to(np.asarray(value, dtype=float), x.shape).copy()


def build_flow(cfg):
    """Instantiate the configured flow (grid flows are not yet advanced)."""
    if cfg.flow_kind in ("constant", "expansion"):
        return make_analytic_flow(cfg.flow_kind, cfg.dimension, cfg.gamma,
                                  cfg.flow_params)
    p = cfg.flow_params
    n = p["n"]
    lo, hi = p["box"]
    h = (hi - lo) / n
    coords = lo + h * np.arange(n)
    x, y = np.meshgrid(coords, coords, indexing="ij")
    state = GridState(rho=_eval_field(p["rho"], x, y),
                      vx=_eval_field(p["vx"], x, y),
                      vy=_eval_field(p["vy"], x, y),
                      entropy=_eval_field(p["S"], x, y),
                      gamma=cfg.gamma, origin=(lo, lo), spacing=(h, h), time=0.0)
    return GridFlow(state, step_dt=p["dt"], filter_strength=p["filter"],
                    guard_threshold=p["max_grad"], entropy_floor=cfg.s0)


def build_volume(cfg, flow):
    return init_volume(cfg.volume, flow, np.asarray(cfg.x0), cfg.epsilon)
