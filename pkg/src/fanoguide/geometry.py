"""Rectilinear waveguide geometries and structured conforming triangulations.

The reference strip is R x (0,1).  A geometry is the strip truncated to
(-L, L), minus axis-aligned rectangular obstacles, optionally perturbed by
an obstacle shift or by a smooth bump of amplitude eps*H(x) on one wall.
All geometric features must sit strictly inside |x| < d for a declared
d < L, so that the boundary coincides with the strip near the ports.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    BumpSupportTooWide,
    DisconnectedDomain,
    MeshTooCoarse,
    ObstacleOutOfStrip,
    PerturbationCollision,
)

STRIP_HEIGHT = 1.0

# boundary tag codes
TAG_WALL = 0
TAG_PORT_LEFT = 1
TAG_PORT_RIGHT = 2
TAG_PML_INTERFACE = 3

# wall sub-tags (which piece of the Neumann boundary an edge belongs to)
WALL_BOTTOM = 0
WALL_TOP = 1
WALL_OBSTACLE = 2
WALL_NONE = -1


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle (x0, x1) x (y0, y1), used as an obstacle void."""

    x0: float
    x1: float
    y0: float
    y1: float

    def contains(self, x, y):
        return (self.x0 < x < self.x1) and (self.y0 < y < self.y1)

    def shifted_y(self, delta):
        return Rect(self.x0, self.x1, self.y0 + delta, self.y1 + delta)


@dataclass(frozen=True)
class PerturbationProfile:
    """Smooth compactly supported bump on a flat wall.

    H(x) = (1 - t^2)^4 * sum_k coeffs[k] * t^k with t the affine map of
    [s0, s1] onto [-1, 1].  H and H' vanish at both endpoints.
    """

    wall: str                      # 'top' or 'bottom'
    support: tuple[float, float]   # (s0, s1) on the wall
    coeffs: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.wall not in ("top", "bottom"):
            raise ValueError(f"wall must be 'top' or 'bottom', got {self.wall!r}")
        s0, s1 = self.support
        if not s0 < s1:
            raise ValueError("support must satisfy s0 < s1")
        if len(self.coeffs) == 0:
            raise ValueError("profile needs at least one coefficient")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s0, s1 = self.support
        t = (2.0 * x - s0 - s1) / (s1 - s0)
        inside = np.abs(t) < 1.0
        t = np.where(inside, t, 0.0)
        poly = np.zeros_like(t)
        for c in reversed(self.coeffs):
            poly = poly * t + c
        h = (1.0 - t * t) ** 4 * poly
        return np.where(inside, h, 0.0)


@dataclass(frozen=True)
class WaveguideGeometry:
    """Truncated strip with obstacles and an optional wall-bump perturbation.

    `epsilon` is the amplitude already applied: obstacle shifts are baked
    into `obstacles`, wall bumps are realized at mesh generation time.
    """

    L: float
    d: float
    obstacles: tuple[Rect, ...] = ()
    bump: PerturbationProfile | None = None
    epsilon: float = 0.0
    perturbation_mode: str | None = None   # 'obstacle_shift' | 'wall_bump'
    mesh_h: float = 0.01
    mesh_order: int = 2

    def validate(self):
        if not 0.0 < self.d < self.L:
            raise ObstacleOutOfStrip(f"need 0 < d < L, got d={self.d}, L={self.L}")
        for r in self.obstacles:
            if not (-self.L < r.x0 < r.x1 < self.L and 0.0 < r.y0 < r.y1 < STRIP_HEIGHT):
                raise ObstacleOutOfStrip(f"obstacle {r} not inside the truncated strip")
            if not (-self.d < r.x0 and r.x1 < self.d):
                raise ObstacleOutOfStrip(f"obstacle {r} reaches |x| >= d = {self.d}")
        if self.bump is not None:
            s0, s1 = self.bump.support
            if not (-self.d < s0 and s1 < self.d):
                raise BumpSupportTooWide(
                    f"bump support [{s0}, {s1}] reaches |x| >= d = {self.d}")
            # the column stretch realizing the bump must not deform obstacles
            for r in self.obstacles:
                if r.x1 > s0 and r.x0 < s1:
                    raise PerturbationCollision(
                        f"bump support [{s0}, {s1}] overlaps obstacle x-range "
                        f"[{r.x0}, {r.x1}]")
        return self

    def config_hash(self):
        blob = json.dumps({
            "L": self.L, "d": self.d,
            "obstacles": [[r.x0, r.x1, r.y0, r.y1] for r in self.obstacles],
            "bump": None if self.bump is None else
                    [self.bump.wall, list(self.bump.support), list(self.bump.coeffs)],
            "epsilon": self.epsilon, "mode": self.perturbation_mode,
        }, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_geometry(config: dict) -> WaveguideGeometry:
    """Build and validate a geometry from its JSON-style config dict.

    Obstacles are taken as given (the unperturbed base); the perturbation
    block only records mode/amplitude defaults.  Apply amplitudes with
    `apply_perturbation`.
    """
    obstacles = tuple(Rect(o["x0"], o["x1"], o["y0"], o["y1"])
                      for o in config.get("obstacles", []))
    pert = config.get("perturbation") or {}
    bump = None
    if pert.get("bump"):
        b = pert["bump"]
        bump = PerturbationProfile(wall=b.get("wall", "top"),
                                   support=tuple(b["support"]),
                                   coeffs=tuple(b.get("coeffs", [1.0])))
    mesh = config.get("mesh") or {}
    geom = WaveguideGeometry(
        L=float(config["L"]),
        d=float(config["d"]),
        obstacles=obstacles,
        bump=bump,
        epsilon=0.0,
        perturbation_mode=pert.get("mode"),
        mesh_h=float(mesh.get("h", 0.01)),
        mesh_order=int(mesh.get("order", 2)),
    )
    return geom.validate()


def apply_perturbation(g: WaveguideGeometry, eps: float) -> WaveguideGeometry:
    """Return a new geometry with perturbation amplitude eps added.

    obstacle_shift translates every obstacle by +eps in y; wall_bump
    accumulates the bump amplitude (realized at mesh level).  eps=0 is the
    identity.  Shift composition is affine: eps then delta == eps+delta.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0.0:
        return g
    mode = g.perturbation_mode
    if mode is None:
        raise PerturbationCollision("geometry has no perturbation_mode set")
    if mode == "obstacle_shift":
        shifted = tuple(r.shifted_y(eps) for r in g.obstacles)
        for r in shifted:
            if r.y1 >= STRIP_HEIGHT or r.y0 <= 0.0:
                raise PerturbationCollision(
                    f"shifted obstacle {r} touches a wall")
        out = replace(g, obstacles=shifted, epsilon=g.epsilon + eps)
    elif mode == "wall_bump":
        if g.bump is None:
            raise PerturbationCollision("wall_bump mode requires a bump profile")
        out = replace(g, epsilon=g.epsilon + eps)
    else:
        raise ValueError(f"unknown perturbation mode {mode!r}")
    return out.validate()


@dataclass
class Mesh:
    """Conforming triangulation with optional P2 midpoint dofs.

    vertices      (nv, 2) float; triangles (nt, 3) int, CCW oriented.
    edges         (ne, 2) sorted vertex pairs (all mesh edges).
    tri_edges     (nt, 3) edge index per triangle, local edge k between
                  local vertices k and (k+1)%3.
    dof_coords    (ndof, 2): vertices then edge midpoints (order 2 only).
    boundary_edges / boundary_tags / boundary_walls: per boundary edge.
    region        (nt,) int8: 0 physical, +1 right PML, -1 left PML.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    tri_edges: np.ndarray
    dof_coords: np.ndarray
    tri_dofs: np.ndarray
    order: int
    h: float
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    boundary_walls: np.ndarray
    region: np.ndarray
    L: float
    d: float
    pml_thickness: float
    areas: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def ndof(self):
        return self.dof_coords.shape[0]

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    def port_x(self, port: str) -> float:
        return -self.L if port == "left" else self.L

    def vertical_line_edges(self, x0: float, tol: float = 1e-9):
        """Edges lying on the vertical line x = x0, sorted by y.

        Returns (edge_ids, ya, yb) with ya < yb per edge.  Raises if the
        edges do not cover a contiguous span (the line must not cross an
        obstacle).
        """
        xs = self.vertices[:, 0]
        on_line = np.abs(xs - x0) < tol
        e = self.edges
        mask = on_line[e[:, 0]] & on_line[e[:, 1]]
        ids = np.nonzero(mask)[0]
        if ids.size == 0:
            raise ValueError(f"no mesh edges on the line x = {x0}")
        ya = self.vertices[e[ids, 0], 1]
        yb = self.vertices[e[ids, 1], 1]
        lo = np.minimum(ya, yb)
        hi = np.maximum(ya, yb)
        order = np.argsort(lo)
        return ids[order], lo[order], hi[order]

    def edge_mid_dof(self, edge_id):
        """Global dof index of the midpoint node of an edge (order 2)."""
        if self.order != 2:
            raise ValueError("midpoint dofs exist only for order 2 meshes")
        return self.num_vertices + edge_id


def _refine_breakpoints(breaks, h):
    """Subdivide each interval between consecutive breakpoints into equal
    cells of size <= h.  Deterministic."""
    pts = [breaks[0]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(math.ceil((b - a) / h - 1e-12)))
        pts.extend(a + (b - a) * (k + 1) / n for k in range(n))
    return np.array(pts)


def _unique_sorted(values, tol=1e-12):
    vals = np.sort(np.asarray(values, dtype=float))
    keep = [vals[0]]
    for v in vals[1:]:
        if v - keep[-1] > tol:
            keep.append(v)
    return np.array(keep)


def generate_mesh(g: WaveguideGeometry, h: float | None = None,
                  order: int | None = None,
                  pml_thickness: float | None = None) -> Mesh:
    """Structured triangulation of the geometry, aligned with all obstacle
    edges, ports, the |x| = d lines and the bump support.

    Cell diagonals mirror under x -> -x and y -> 1-y so that geometric
    symmetries carry over to the discrete operators.  A wall bump of
    amplitude eps is realized by the column stretch y -> y*(1 + eps*H(x))
    (top wall; mirrored formula for the bottom wall).
    """
    g.validate()
    h = g.mesh_h if h is None else h
    order = g.mesh_order if order is None else order
    if h <= 0:
        raise MeshTooCoarse("h must be positive")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")

    xb = [-g.L, g.L]
    yb = [0.0, STRIP_HEIGHT]
    for r in g.obstacles:
        xb += [r.x0, r.x1]
        yb += [r.y0, r.y1]
    if g.bump is not None:
        xb += list(g.bump.support)
    if g.obstacles or g.bump is not None:
        xb += [-g.d, g.d]
    pml = float(pml_thickness or 0.0)
    if pml > 0:
        xb += [-g.L - pml, g.L + pml]
    xb = _unique_sorted(xb)
    yb = _unique_sorted(yb)

    min_feature = min(np.diff(xb).min(), np.diff(yb).min())
    if h > min_feature + 1e-12:
        raise MeshTooCoarse(
            f"h={h} exceeds the smallest geometric feature {min_feature:.6g}")

    xs = _refine_breakpoints(xb, h)
    ys = _refine_breakpoints(yb, h)
    nx, ny = len(xs) - 1, len(ys) - 1

    # cell centers and keep-mask (cells inside any obstacle are voids)
    xc = 0.5 * (xs[:-1] + xs[1:])
    yc = 0.5 * (ys[:-1] + ys[1:])
    XC, YC = np.meshgrid(xc, yc, indexing="ij")
    keep = np.ones((nx, ny), dtype=bool)
    for r in g.obstacles:
        keep &= ~((XC > r.x0) & (XC < r.x1) & (YC > r.y0) & (YC < r.y1))
    if not keep.any():
        raise DisconnectedDomain("no cells remain after removing obstacles")

    # vertex grid, keep only vertices adjacent to a kept cell
    nxv, nyv = nx + 1, ny + 1
    vidx = -np.ones((nxv, nyv), dtype=np.int64)
    used = np.zeros((nxv, nyv), dtype=bool)
    ki, kj = np.nonzero(keep)
    for di in (0, 1):
        for dj in (0, 1):
            used[ki + di, kj + dj] = True
    order_ids = np.nonzero(used.ravel())[0]     # x-major ordering
    vidx.ravel()[order_ids] = np.arange(order_ids.size)
    XV, YV = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([XV.ravel()[order_ids], YV.ravel()[order_ids]])

    # triangles: mirror-symmetric diagonal rule
    a = vidx[ki, kj]
    b = vidx[ki + 1, kj]
    c = vidx[ki + 1, kj + 1]
    dd = vidx[ki, kj + 1]
    centers_x = XC[ki, kj]
    centers_y = YC[ki, kj]
    y_mid = 0.5 * (ys[0] + ys[-1])
    sx = np.where(centers_x >= 0, 1.0, -1.0)
    sy = np.where(centers_y >= y_mid, 1.0, -1.0)
    use_ac = (sx * sy) > 0          # diagonal a-c, else diagonal b-dd
    t1 = np.where(use_ac[:, None], np.column_stack([a, b, c]),
                  np.column_stack([a, b, dd]))
    t2 = np.where(use_ac[:, None], np.column_stack([a, c, dd]),
                  np.column_stack([b, c, dd]))
    triangles = np.empty((2 * len(ki), 3), dtype=np.int64)
    triangles[0::2] = t1
    triangles[1::2] = t2

    region = np.zeros(len(triangles), dtype=np.int8)
    if pml > 0:
        cx2 = np.repeat(centers_x, 2)
        region[cx2 > g.L] = 1
        region[cx2 < -g.L] = -1

    # wall bump: stretch columns before building metric quantities
    if g.bump is not None and g.epsilon != 0.0:
        hx = g.bump(vertices[:, 0]) * g.epsilon
        y = vertices[:, 1]
        if g.bump.wall == "top":
            vertices[:, 1] = y * (1.0 + hx)
        else:
            vertices[:, 1] = y - hx * (1.0 - y)

    # edge table
    tri = triangles
    pairs = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    pairs_sorted = np.sort(pairs, axis=1)
    edges, tri_edges_flat, counts = np.unique(
        pairs_sorted, axis=0, return_inverse=True, return_counts=True)
    tri_edges = tri_edges_flat.reshape(3, -1).T.copy()

    # conformity: every edge in one or two triangles
    if counts.max() > 2:
        raise DisconnectedDomain("non-conforming triangulation (edge in >2 cells)")

    # orientation / area
    p = vertices
    v0 = p[tri[:, 0]]
    e1 = p[tri[:, 1]] - v0
    e2 = p[tri[:, 2]] - v0
    areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(areas <= 0):
        raise DisconnectedDomain("triangulation produced non-positive areas")

    # connectivity over shared edges (vectorized union via csgraph)
    ntri = len(tri)
    tri_of_edge = np.repeat(np.arange(ntri)[None, :], 3, axis=0).ravel()
    order_e = np.argsort(tri_edges_flat, kind="stable")
    sorted_eids = tri_edges_flat[order_e]
    sorted_tids = tri_of_edge[order_e]
    same = sorted_eids[:-1] == sorted_eids[1:]
    ga = sorted_tids[:-1][same]
    gb = sorted_tids[1:][same]
    import scipy.sparse as _sp
    import scipy.sparse.csgraph as _csg
    adj = _sp.coo_matrix((np.ones(len(ga)), (ga, gb)), shape=(ntri, ntri))
    ncomp, _ = _csg.connected_components(adj, directed=False)
    if ncomp > 1:
        raise DisconnectedDomain(f"domain has {ncomp} components")

    # boundary edges and tags
    bnd_ids = np.nonzero(counts == 1)[0]
    be = edges[bnd_ids]
    ex0 = vertices[be[:, 0], 0]
    ex1 = vertices[be[:, 1], 0]
    ey0 = vertices[be[:, 0], 1]
    ey1 = vertices[be[:, 1], 1]
    tol = 1e-9
    x_left = xs[0]
    x_right = xs[-1]
    tags = np.full(len(be), TAG_WALL, dtype=np.int8)
    walls = np.full(len(be), WALL_NONE, dtype=np.int8)
    on_left = (np.abs(ex0 - x_left) < tol) & (np.abs(ex1 - x_left) < tol)
    on_right = (np.abs(ex0 - x_right) < tol) & (np.abs(ex1 - x_right) < tol)
    if pml > 0:
        tags[on_left | on_right] = TAG_PML_INTERFACE
    else:
        tags[on_left] = TAG_PORT_LEFT
        tags[on_right] = TAG_PORT_RIGHT

    # wall sub-tags by construction indices: bottom row iy=0, top row iy=ny
    on_bottom = (np.abs(ey0 - ys[0]) < tol) & (np.abs(ey1 - ys[0]) < tol)
    walls[on_bottom & (tags == TAG_WALL)] = WALL_BOTTOM
    # top wall may be stretched; detect via the pre-stretch row index
    ys_top = ys[-1]
    if g.bump is not None and g.epsilon != 0.0 and g.bump.wall == "top":
        vx0 = vertices[be[:, 0], 0]
        vx1 = vertices[be[:, 1], 0]
        htop0 = ys_top * (1.0 + g.epsilon * g.bump(vx0))
        htop1 = ys_top * (1.0 + g.epsilon * g.bump(vx1))
        on_top = (np.abs(ey0 - htop0) < tol) & (np.abs(ey1 - htop1) < tol)
    else:
        on_top = (np.abs(ey0 - ys_top) < tol) & (np.abs(ey1 - ys_top) < tol)
    walls[on_top & (tags == TAG_WALL)] = WALL_TOP
    interior_wall = (tags == TAG_WALL) & (walls == WALL_NONE)
    walls[interior_wall] = WALL_OBSTACLE

    # port span completeness (no PML: ports must cover the full height)
    if pml == 0:
        for tag in (TAG_PORT_LEFT, TAG_PORT_RIGHT):
            sel = tags == tag
            span = np.abs(ey1[sel] - ey0[sel]).sum()
            if abs(span - STRIP_HEIGHT) > 1e-9:
                raise DisconnectedDomain("port does not span the full height")

    # dofs
    if order == 2:
        mids = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
        dof_coords = np.vstack([vertices, mids])
        tri_dofs = np.hstack([tri, tri_edges + len(vertices)])
    else:
        dof_coords = vertices.copy()
        tri_dofs = tri.copy()

    return Mesh(
        vertices=vertices, triangles=tri, edges=edges, tri_edges=tri_edges,
        dof_coords=dof_coords, tri_dofs=tri_dofs, order=order, h=h,
        boundary_edges=bnd_ids, boundary_tags=tags, boundary_walls=walls,
        region=region, L=g.L, d=g.d, pml_thickness=pml, areas=areas,
    )
