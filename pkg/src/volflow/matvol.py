"""Moving material volume: advected markers, quadrature nodes, integrals.

The volume is carried by the flow as a set of Lagrangian samples: boundary
markers (closed polygon loops in 2-D, triangulated closed meshes in 3-D) and
interior quadrature nodes.  Each interior node carries a fixed mass weight
rho0(y)*w(y); because the mass measure is transported exactly by the flow,
rho-weighted integrals need no Jacobian at all, and unweighted integrals
recover the Jacobian from the density ratio rho0/rho(t, X).

Boundaries are stored as a list of closed components (a volume may be
disconnected, and an annulus has a two-loop boundary).  Outward orientation
is fixed at initialization -- counterclockwise outer loops, clockwise hole
loops -- and smooth flows preserve it; a segment-intersection sweep after
each advection is the failure detector for under-resolved boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "SelfIntersection",
    "SurfaceMesh",
    "VolumeShapeSpec",
    "MaterialVolume",
    "init_volume",
    "advect",
    "volume_integral_mass",
    "volume_integral_plain",
    "surface_integral",
    "boundary_distance",
    "resample_markers",
]


class SelfIntersection(RuntimeError):
    """Boundary loop crossed itself -- marker resolution has failed."""


# ---------------------------------------------------------------------------
# Geometry helpers (2-D loops)
# ---------------------------------------------------------------------------

def loop_signed_area(loop):
    """Shoelace signed area; positive for counterclockwise loops."""
    x, y = loop[:, 0], loop[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * yn - xn * y))


def point_in_loops(point, loops):
    """Even-odd containment test of a point against a set of closed loops."""
    px, py = float(point[0]), float(point[1])
    crossings = 0
    for loop in loops:
        a = loop
        b = np.roll(loop, -1, axis=0)
        cond = (a[:, 1] > py) != (b[:, 1] > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (py - a[:, 1]) / (b[:, 1] - a[:, 1])
        xs = a[:, 0] + t * (b[:, 0] - a[:, 0])
        crossings += int(np.count_nonzero(cond & (px < xs)))
    return crossings % 2 == 1


def _segments_cross(a0, a1, b0, b1):
    """Vectorized proper/improper intersection test, a-segment vs b-segments."""
    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) \
             - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

    d1 = orient(b0, b1, a0)
    d2 = orient(b0, b1, a1)
    d3 = orient(a0, a1, b0)
    d4 = orient(a0, a1, b1)
    proper = ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0))
    touch = (d1 == 0) | (d2 == 0) | (d3 == 0) | (d4 == 0)
    return proper | (touch & _bbox_overlap(a0, a1, b0, b1))


def _bbox_overlap(a0, a1, b0, b1):
    amin = np.minimum(a0, a1)
    amax = np.maximum(a0, a1)
    bmin = np.minimum(b0, b1)
    bmax = np.maximum(b0, b1)
    return np.all(amin <= bmax, axis=-1) & np.all(bmin <= amax, axis=-1)


def polygon_is_simple(loop):
    """Check a closed loop for self-intersection by an x-interval sweep.

    Adjacent segments (sharing a vertex) are skipped; any other touching or
    crossing pair counts as an intersection.
    """
    m = len(loop)
    if m < 3:
        return False
    a = loop
    b = np.roll(loop, -1, axis=0)
    xmin = np.minimum(a[:, 0], b[:, 0])
    xmax = np.maximum(a[:, 0], b[:, 0])
    order = np.argsort(xmin, kind="stable")
    xmin_s = xmin[order]
    for pos, i in enumerate(order):
        hi = np.searchsorted(xmin_s, xmax[i], side="right")
        cand = order[pos + 1:hi]
        if cand.size == 0:
            continue
        adjacent = (cand == (i + 1) % m) | (cand == (i - 1) % m) | (cand == i)
        cand = cand[~adjacent]
        if cand.size == 0:
            continue
        hits = _segments_cross(a[i], b[i], a[cand], b[cand])
        if np.any(hits):
            return False
    return True


def _point_segment_distance(p, a, b):
    """Distances from point p to segments a->b (vectorized over segments)."""
    ab = b - a
    ap = p - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", ap, ab) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(p - closest, axis=1)


def _point_triangle_distance(p, v0, v1, v2):
    """Distances from point p to triangles (v0, v1, v2), vectorized."""
    n = np.cross(v1 - v0, v2 - v0)
    nn = np.einsum("ij,ij->i", n, n)
    w = p - v0
    # Projection onto the triangle plane, in barycentric coordinates.
    d00 = np.einsum("ij,ij->i", v1 - v0, v1 - v0)
    d01 = np.einsum("ij,ij->i", v1 - v0, v2 - v0)
    d11 = np.einsum("ij,ij->i", v2 - v0, v2 - v0)
    d20 = np.einsum("ij,ij->i", w, v1 - v0)
    d21 = np.einsum("ij,ij->i", w, v2 - v0)
    denom = d00 * d11 - d01 * d01
    denom = np.where(denom > 0, denom, 1.0)
    s = (d11 * d20 - d01 * d21) / denom
    t = (d00 * d21 - d01 * d20) / denom
    inside = (s >= 0.0) & (t >= 0.0) & (s + t <= 1.0)
    plane = np.abs(np.einsum("ij,ij->i", w, n)) / np.sqrt(np.where(nn > 0, nn, 1.0))
    best = np.where(inside, plane, np.inf)
    for e0, e1 in ((v0, v1), (v1, v2), (v2, v0)):
        best = np.minimum(best, _point_segment_distance(p, e0, e1))
    return best


# ---------------------------------------------------------------------------
# Shape construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceMesh:
    """Closed triangulated surface with consistent outward winding."""

    verts: np.ndarray   # (M, 3)
    faces: np.ndarray   # (F, 3) int indices


def _gauss(a, b, order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _circle_markers(center, radius, count, clockwise=False):
    theta = 2.0 * np.pi * np.arange(count) / count
    if clockwise:
        theta = theta[::-1]
    return np.column_stack([center[0] + radius * np.cos(theta),
                            center[1] + radius * np.sin(theta)])


def _radial_nodes_2d(center, r_lo, r_hi, order):
    """Tensor rule on an annular region: Gauss in r, midpoint-uniform in theta."""
    r, wr = _gauss(r_lo, r_hi, order)
    m = 2 * order
    theta = (np.arange(m) + 0.5) * 2.0 * np.pi / m
    wt = 2.0 * np.pi / m
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    nodes = np.column_stack([(center[0] + rr * np.cos(tt)).ravel(),
                             (center[1] + rr * np.sin(tt)).ravel()])
    weights = (wr * r)[:, None].repeat(m, axis=1).ravel() * wt
    return nodes, weights


def _radial_nodes_3d(center, r_lo, r_hi, order):
    """Gauss in r (weight r^2) x Gauss in cos(polar) x uniform azimuth."""
    r, wr = _gauss(r_lo, r_hi, order)
    mu, wmu = np.polynomial.legendre.leggauss(order)
    m = 2 * order
    phi = (np.arange(m) + 0.5) * 2.0 * np.pi / m
    wphi = 2.0 * np.pi / m
    R, MU, PH = np.meshgrid(r, mu, phi, indexing="ij")
    sin_pol = np.sqrt(1.0 - MU ** 2)
    nodes = np.column_stack([
        (center[0] + R * sin_pol * np.cos(PH)).ravel(),
        (center[1] + R * sin_pol * np.sin(PH)).ravel(),
        (center[2] + R * MU).ravel(),
    ])
    W = (wr * r ** 2)[:, None, None] * wmu[None, :, None] * wphi
    return nodes, np.broadcast_to(W, R.shape).ravel().copy()


_ICO_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
    [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
    [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
], dtype=float)
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=int)


def icosphere(subdivisions):
    """Unit icosphere: 10*4^k + 2 vertices with outward-wound faces."""
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                v = verts[i] + verts[j]
                verts.append(v / np.linalg.norm(v))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for i, j, k in faces:
            a, b, c = midpoint(i, j), midpoint(j, k), midpoint(k, i)
            new_faces += [(i, a, c), (j, b, a), (k, c, b), (a, b, c)]
        faces = new_faces
    return np.array(verts), np.array(faces, dtype=int)


def _sphere_mesh(center, radius, markers, flip=False):
    subdiv = 0
    while 10 * 4 ** subdiv + 2 < markers:
        subdiv += 1
    verts, faces = icosphere(subdiv)
    verts = center + radius * verts
    if flip:
        faces = faces[:, ::-1]
    return SurfaceMesh(verts=verts, faces=faces)


def _polygon_markers(vertices, count):
    """Densify polygon edges by arc length, preserving the corners."""
    verts = np.asarray(vertices, dtype=float)
    nxt = np.roll(verts, -1, axis=0)
    lengths = np.linalg.norm(nxt - verts, axis=1)
    per_edge = np.maximum(1, np.round(count * lengths / lengths.sum()).astype(int))
    pieces = []
    for v, w, k in zip(verts, nxt, per_edge):
        ts = np.arange(k) / k
        pieces.append(v + ts[:, None] * (w - v))
    return np.vstack(pieces)


def _ear_clip(vertices):
    """Triangulate a simple polygon (CCW) by ear clipping."""
    idx = list(range(len(vertices)))
    tris = []
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * len(vertices) ** 2:
            raise ValueError("polygon triangulation failed (not simple?)")
        ear_found = False
        for pos in range(len(idx)):
            i0, i1, i2 = (idx[pos - 1], idx[pos], idx[(pos + 1) % len(idx)])
            a, b, c = vertices[i0], vertices[i1], vertices[i2]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= 0:
                continue
            others = [j for j in idx if j not in (i0, i1, i2)]
            if others and _any_point_in_triangle(vertices[others], a, b, c):
                continue
            tris.append((i0, i1, i2))
            idx.pop(pos)
            ear_found = True
            break
        if not ear_found:
            raise ValueError("polygon triangulation failed (not simple?)")
    tris.append(tuple(idx))
    return tris


def _any_point_in_triangle(pts, a, b, c):
    def side(p, q, r):
        return (q[0] - p[0]) * (r[:, 1] - p[1]) - (q[1] - p[1]) * (r[:, 0] - p[0])

    s1, s2, s3 = side(a, b, pts), side(b, c, pts), side(c, a, pts)
    return bool(np.any((s1 >= 0) & (s2 >= 0) & (s3 >= 0)))


# Degree-5 rule on the reference triangle (7 points), weights summing to 1.
_TRI_A = (6.0 - math.sqrt(15.0)) / 21.0
_TRI_B = (6.0 + math.sqrt(15.0)) / 21.0
_TRI_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_TRI_A, _TRI_A, 1 - 2 * _TRI_A],
    [_TRI_A, 1 - 2 * _TRI_A, _TRI_A],
    [1 - 2 * _TRI_A, _TRI_A, _TRI_A],
    [_TRI_B, _TRI_B, 1 - 2 * _TRI_B],
    [_TRI_B, 1 - 2 * _TRI_B, _TRI_B],
    [1 - 2 * _TRI_B, _TRI_B, _TRI_B],
])
_TRI_W = np.array([9 / 40,
                   (155.0 - math.sqrt(15.0)) / 1200.0,
                   (155.0 - math.sqrt(15.0)) / 1200.0,
                   (155.0 - math.sqrt(15.0)) / 1200.0,
                   (155.0 + math.sqrt(15.0)) / 1200.0,
                   (155.0 + math.sqrt(15.0)) / 1200.0,
                   (155.0 + math.sqrt(15.0)) / 1200.0])


def _polygon_nodes(vertices, refine):
    verts = np.asarray(vertices, dtype=float)
    tris = [verts[list(t)] for t in _ear_clip(verts)]
    for _ in range(refine):
        finer = []
        for t in tris:
            m01, m12, m20 = 0.5 * (t[0] + t[1]), 0.5 * (t[1] + t[2]), 0.5 * (t[2] + t[0])
            finer += [np.array([t[0], m01, m20]), np.array([t[1], m12, m01]),
                      np.array([t[2], m20, m12]), np.array([m01, m12, m20])]
        tris = finer
    nodes, weights = [], []
    for t in tris:
        area = 0.5 * abs((t[1, 0] - t[0, 0]) * (t[2, 1] - t[0, 1])
                         - (t[1, 1] - t[0, 1]) * (t[2, 0] - t[0, 0]))
        nodes.append(_TRI_BARY @ t)
        weights.append(_TRI_W * area)
    return np.vstack(nodes), np.concatenate(weights)


@dataclass(frozen=True)
class VolumeShapeSpec:
    """Initial shape and discretization of a material volume.

    shape is one of 'disk' (a ball in 3-D), 'annulus' (a spherical shell in
    3-D) or 'polygon' (2-D only).  quad_order controls the tensor-Gauss rule
    for radial shapes; refine controls triangulation depth for polygons.
    """

    shape: str
    center: tuple = (0.0, 0.0)
    radius: float = None
    radii: tuple = None
    vertices: tuple = None
    markers: int = 256
    quad_order: int = 40
    refine: int = 3

    def __post_init__(self):
        if self.shape not in ("disk", "annulus", "polygon"):
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.markers < 64:
            raise ValueError("need at least 64 boundary markers")
        if self.shape == "disk":
            if self.radius is None or self.radius <= 0:
                raise ValueError("disk needs a positive radius")
        elif self.shape == "annulus":
            if self.radii is None or len(self.radii) != 2:
                raise ValueError("annulus needs radii = (inner, outer)")
            r1, r2 = self.radii
            if not 0 < r1 < r2:
                raise ValueError("annulus radii must satisfy 0 < inner < outer")
        else:
            if self.vertices is None or len(self.vertices) < 3:
                raise ValueError("polygon needs at least 3 vertices")

    def build(self, dim):
        """Boundary components and (nodes, weights) quadrature for dimension dim."""
        center = np.asarray(self.center, dtype=float)
        if center.shape != (dim,):
            raise ValueError(f"center must have dimension {dim}")
        if self.shape == "disk":
            if dim == 2:
                boundary = [_circle_markers(center, self.radius, self.markers)]
                nodes, w = _radial_nodes_2d(center, 0.0, self.radius, self.quad_order)
            else:
                boundary = [_sphere_mesh(center, self.radius, self.markers)]
                nodes, w = _radial_nodes_3d(center, 0.0, self.radius, self.quad_order)
        elif self.shape == "annulus":
            r1, r2 = self.radii
            if dim == 2:
                boundary = [_circle_markers(center, r2, self.markers),
                            _circle_markers(center, r1, self.markers, clockwise=True)]
                nodes, w = _radial_nodes_2d(center, r1, r2, self.quad_order)
            else:
                boundary = [_sphere_mesh(center, r2, self.markers),
                            _sphere_mesh(center, r1, self.markers, flip=True)]
                nodes, w = _radial_nodes_3d(center, r1, r2, self.quad_order)
        else:
            if dim != 2:
                raise ValueError("polygon volumes are 2-D only")
            verts = np.asarray(self.vertices, dtype=float)
            if loop_signed_area(verts) < 0:
                verts = verts[::-1]
            if not polygon_is_simple(verts):
                raise ValueError("polygon boundary is self-intersecting")
            boundary = [_polygon_markers(verts, self.markers)]
            nodes, w = _polygon_nodes(verts, self.refine)
        return boundary, nodes, w


# ---------------------------------------------------------------------------
# The material volume
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MaterialVolume:
    """Lagrangian volume snapshot at one time.

    boundaries: list of (M, 2) marker loops (2-D) or SurfaceMesh (3-D).
    nodes/mass_w/rho0: interior quadrature nodes with transported mass
    weights rho0 * w and the initial densities used for Jacobian recovery.
    x0 is the fixed target point the threshold machinery measures against.
    """

    dim: int
    boundaries: tuple
    nodes: np.ndarray
    mass_w: np.ndarray
    rho0: np.ndarray
    x0: np.ndarray
    time: float

    def boundary_points(self):
        if self.dim == 2:
            return np.vstack(self.boundaries)
        return np.vstack([m.verts for m in self.boundaries])

    def _with_boundary_points(self, pts):
        out = []
        k = 0
        for comp in self.boundaries:
            m = len(comp) if self.dim == 2 else len(comp.verts)
            chunk = pts[k:k + m]
            k += m
            out.append(chunk if self.dim == 2 else replace(comp, verts=chunk))
        return tuple(out)


def init_volume(spec, flow, x0, epsilon, t0=0.0):
    """Build a MaterialVolume from a shape spec and a flow's initial data.

    Rejects configurations that violate the threshold preconditions: the
    target x0 must lie strictly outside the volume and farther than epsilon
    from its boundary.
    """
    dim = flow.dimension
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (dim,):
        raise ValueError(f"x0 must have dimension {dim}")
    boundary, nodes, w = spec.build(dim)

    if _contains_point(spec, x0, dim):
        raise ValueError("x0 lies inside the initial volume")

    rho0 = np.asarray(flow.density(t0, nodes), dtype=float)
    vol = MaterialVolume(dim=dim, boundaries=tuple(boundary), nodes=nodes,
                         mass_w=rho0 * w, rho0=rho0, x0=x0, time=float(t0))
    d = boundary_distance(vol)
    if d <= epsilon:
        raise ValueError(
            f"dist(boundary, x0) = {d} is not larger than epsilon = {epsilon}")
    return vol


def _contains_point(spec, x0, dim):
    center = np.asarray(spec.center, dtype=float)
    if spec.shape == "disk":
        return np.linalg.norm(x0 - center) <= spec.radius
    if spec.shape == "annulus":
        r = np.linalg.norm(x0 - center)
        return spec.radii[0] <= r <= spec.radii[1]
    verts = np.asarray(spec.vertices, dtype=float)
    return point_in_loops(x0, [verts])


def _rk4_points(flow, pts, t_from, t_to, dt):
    """RK4 integration of dX/dt = V(t, X) for a point cloud; dt may subdivide
    the interval in either time direction."""
    t = t_from
    x = pts.copy()
    direction = 1.0 if t_to >= t_from else -1.0
    h_mag = abs(dt)
    while abs(t_to - t) > 1e-14:
        h = direction * min(h_mag, abs(t_to - t))
        k1 = flow.velocity(t, x)
        k2 = flow.velocity(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = flow.velocity(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = flow.velocity(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t + h
    return x


def advect(vol, flow, t_to, dt, check_boundary=True):
    """Advect markers and interior nodes to time t_to; weights ride along."""
    if t_to <= vol.time:
        raise ValueError(f"t_to = {t_to} must exceed current time {vol.time}")
    return _advect_any(vol, flow, t_to, dt, check_boundary)


def _advect_any(vol, flow, t_to, dt, check_boundary=True):
    bpts = vol.boundary_points()
    count_b = len(bpts)
    allpts = np.vstack([bpts, vol.nodes])
    moved = _rk4_points(flow, allpts, vol.time, t_to, dt)
    new_boundaries = vol._with_boundary_points(moved[:count_b])
    out = replace(vol, boundaries=new_boundaries, nodes=moved[count_b:],
                  time=float(t_to))
    if check_boundary and vol.dim == 2:
        for loop in out.boundaries:
            if not polygon_is_simple(loop):
                raise SelfIntersection(
                    f"boundary self-intersects after advection to t={t_to}")
    return out


def volume_integral_mass(vol, f):
    """Integral of f against the transported mass measure: sum f(X) rho0 w."""
    return float(np.sum(np.asarray(f(vol.nodes), dtype=float) * vol.mass_w))


def volume_integral_plain(vol, g, flow):
    """Plain volume integral of g via the density-ratio Jacobian rho0/rho."""
    rho = np.asarray(flow.density(vol.time, vol.nodes), dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("flow density non-positive at a quadrature node")
    return float(np.sum(np.asarray(g(vol.nodes), dtype=float) * vol.mass_w / rho))


def _boundary_elements(vol):
    """Midpoints, outward unit normals and measures of all boundary elements."""
    mids, normals, measures = [], [], []
    if vol.dim == 2:
        for loop in vol.boundaries:
            a = loop
            b = np.roll(loop, -1, axis=0)
            seg = b - a
            length = np.linalg.norm(seg, axis=1)
            if np.any(length == 0.0):
                raise ValueError("degenerate boundary segment (zero length)")
            tangent = seg / length[:, None]
            # Outward for CCW loops; hole loops are stored CW so the same
            # formula points out of the material region.
            normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])
            mids.append(0.5 * (a + b))
            normals.append(normal)
            measures.append(length)
    else:
        for mesh in vol.boundaries:
            v0 = mesh.verts[mesh.faces[:, 0]]
            v1 = mesh.verts[mesh.faces[:, 1]]
            v2 = mesh.verts[mesh.faces[:, 2]]
            cross = np.cross(v1 - v0, v2 - v0)
            norm = np.linalg.norm(cross, axis=1)
            if np.any(norm == 0.0):
                raise ValueError("degenerate boundary triangle (zero area)")
            mids.append((v0 + v1 + v2) / 3.0)
            normals.append(cross / norm[:, None])
            measures.append(0.5 * norm)
    return np.vstack(mids), np.vstack(normals), np.concatenate(measures)


def surface_integral(vol, h):
    """Boundary integral of h(point, outward unit normal) over all components."""
    mids, normals, measures = _boundary_elements(vol)
    vals = np.asarray(h(mids, normals), dtype=float)
    return float(np.sum(vals * measures))


def boundary_distance(vol):
    """Distance from the boundary to the target point x0."""
    best = np.inf
    if vol.dim == 2:
        for loop in vol.boundaries:
            d = _point_segment_distance(vol.x0, loop, np.roll(loop, -1, axis=0))
            best = min(best, float(d.min()))
    else:
        for mesh in vol.boundaries:
            d = _point_triangle_distance(vol.x0,
                                         mesh.verts[mesh.faces[:, 0]],
                                         mesh.verts[mesh.faces[:, 1]],
                                         mesh.verts[mesh.faces[:, 2]])
            best = min(best, float(d.min()))
    return best


def resample_markers(vol, count=None):
    """Re-space 2-D marker loops by arc length (mass nodes are never touched).

    Off by default in runs: resampling perturbs boundary-based invariants, so
    it exists only for long runs whose loops bunch up.
    """
    if vol.dim != 2:
        raise ValueError("marker resampling is 2-D only")
    new_loops = []
    for loop in vol.boundaries:
        m = count or len(loop)
        seg = np.roll(loop, -1, axis=0) - loop
        length = np.linalg.norm(seg, axis=1)
        s = np.concatenate([[0.0], np.cumsum(length)])
        total = s[-1]
        target = np.arange(m) * total / m
        closed = np.vstack([loop, loop[:1]])
        xs = np.interp(target, s, closed[:, 0])
        ys = np.interp(target, s, closed[:, 1])
        new_loops.append(np.column_stack([xs, ys]))
    return replace(vol, boundaries=tuple(new_loops))
