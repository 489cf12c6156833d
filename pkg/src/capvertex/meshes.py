"""Disk-type triangulated drop surfaces with wall and edge constraints.

Vertices carry one of three constraint tags: free, confined to a support
plane, or confined to an intersection line of two support planes. Seeds are
sampled from the analytic spherical caps and refined by midpoint subdivision
with constraint-respecting projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import (
    SphericalCap,
    _orthonormal_complement,
    edge_vertices,
    trihedral_cap,
    wedge_cap,
    cylinder_cap,
)
from .errors import DomainError, MeshDegenerationError, NoSolutionError
from .geometry import TrihedralConfig, TrihedralKind, WedgeConfig

__all__ = [
    "FREE", "ON_PLANE", "ON_EDGE",
    "SupportAdapter", "TriMeshDrop",
    "seed_mesh", "seed_planar_trihedral", "perturb", "refine",
    "structured_surface", "vertex_normals",
    "write_obj", "read_obj",
]

FREE, ON_PLANE, ON_EDGE = 0, 1, 2

_MIN_AREA = 1e-14


@dataclass(frozen=True)
class SupportEdge:
    plane_ids: tuple[int, int]
    point: np.ndarray
    direction: np.ndarray


class SupportAdapter:
    """Uniform view of a support configuration: planes, edge lines, closures."""

    def __init__(self, config):
        self.config = config
        if isinstance(config, WedgeConfig):
            self.kind = "wedge"
            self.planes = list(config.planes)
            self.edges = [SupportEdge((0, 1), config.edge_point, config.edge_dir)]
            self.reference = config.edge_point
        elif isinstance(config, TrihedralConfig) and config.kind is TrihedralKind.APEX:
            self.kind = "apex"
            self.planes = list(config.planes)
            self.edges = []
            for (i, j) in ((0, 1), (1, 2), (2, 0)):
                ni, nj = self.planes[i].normal, self.planes[j].normal
                d = np.cross(ni, nj)
                d /= np.linalg.norm(d)
                k = 3 - i - j
                if np.dot(d, self.planes[k].normal) < 0:
                    d = -d
                self.edges.append(SupportEdge((i, j), config.apex, d))
            self.reference = config.apex
        elif isinstance(config, TrihedralConfig):
            self.kind = "cylinder"
            self.planes = list(config.planes)
            g = config.generator
            b1, b2 = _orthonormal_complement(g)
            self.edges = []
            for (i, j) in ((0, 1), (1, 2), (2, 0)):
                pi, pj = self.planes[i], self.planes[j]
                A = np.array([[np.dot(pi.normal, b1), np.dot(pi.normal, b2)],
                              [np.dot(pj.normal, b1), np.dot(pj.normal, b2)]])
                c = np.linalg.solve(A, np.array([pi.offset, pj.offset]))
                self.edges.append(SupportEdge((i, j), c[0] * b1 + c[1] * b2, g))
            self.reference = np.zeros(3)
            # base of the container: plane orthogonal to the generator at
            # generator coordinate 0 (the gauge used by the cylinder builders)
            self.base_normal = g
            self.base_offset = 0.0
        else:
            raise DomainError(f"unsupported configuration type {type(config)!r}")
        self._frames = [_orthonormal_complement(p.normal) for p in self.planes]

    def wall_frame(self, j):
        return self._frames[j]

    def wall_coords(self, j, pts):
        eu, ev = self._frames[j]
        ref = self.planes[j].offset * self.planes[j].normal
        rel = np.atleast_2d(pts) - ref
        return np.column_stack([rel @ eu, rel @ ev])

    def edge_for_planes(self, i, j) -> int:
        for k, e in enumerate(self.edges):
            if set(e.plane_ids) == {i, j}:
                return k
        raise DomainError(f"no support edge between planes {i} and {j}")

    def base_triangle_area(self) -> float:
        """Cross-section area of the cylinder base (cylinder kind only)."""
        pts = np.stack([e.point for e in self.edges])
        return 0.5 * abs(float(np.linalg.norm(
            np.cross(pts[1] - pts[0], pts[2] - pts[0]))))


class TriMeshDrop:
    """Oriented triangulated disk with per-vertex constraint tags."""

    def __init__(self, vertices, triangles, tag_kind, tag_id, support: SupportAdapter,
                 target_volume: float | None = None, lagrange_h: float = 0.0):
        self.vertices = np.array(vertices, dtype=float)
        self.triangles = np.array(triangles, dtype=np.int64)
        self.tag_kind = np.array(tag_kind, dtype=np.int8)
        self.tag_id = np.array(tag_id, dtype=np.int64)
        self.support = support
        self.target_volume = target_volume
        self.lagrange_h = float(lagrange_h)
        self._boundary_cache = None

    def copy(self) -> "TriMeshDrop":
        return TriMeshDrop(self.vertices.copy(), self.triangles.copy(),
                           self.tag_kind.copy(), self.tag_id.copy(),
                           self.support, self.target_volume, self.lagrange_h)

    # -- topology ---------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edge_set(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edge_set()) + len(self.triangles)

    def boundary_loop(self) -> np.ndarray:
        """Vertex indices of the single boundary loop, in orientation order."""
        if self._boundary_cache is not None:
            return self._boundary_cache
        t = self.triangles
        directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        seen = set(map(tuple, directed))
        nxt = {}
        for a, b in directed:
            if (b, a) not in seen:
                nxt[int(a)] = int(b)
        if not nxt:
            raise DomainError("mesh has no boundary")
        start = next(iter(nxt))
        loop = [start]
        cur = nxt[start]
        while cur != start:
            loop.append(cur)
            cur = nxt[cur]
        if len(loop) != len(nxt):
            raise DomainError("boundary is not a single loop")
        self._boundary_cache = np.array(loop, dtype=np.int64)
        return self._boundary_cache

    def invalidate(self):
        self._boundary_cache = None

    # -- geometry ---------------------------------------------------------

    def triangle_areas(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        cross = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def validate(self, tol: float = 1e-9):
        """Check disk topology, constraint satisfaction, and element quality."""
        if self.euler_characteristic() != 1:
            raise DomainError("mesh is not a topological disk")
        areas = self.triangle_areas()
        if areas.min() <= _MIN_AREA:
            raise MeshDegenerationError(
                f"degenerate triangle (area {areas.min():.3e})")
        loop = self.boundary_loop()
        if np.any(self.tag_kind[loop] == FREE):
            raise DomainError("boundary vertices must carry a constraint tag")
        for i in np.nonzero(self.tag_kind == ON_PLANE)[0]:
            p = self.support.planes[self.tag_id[i]]
            if abs(p.signed_distance(self.vertices[i])) > tol:
                raise DomainError(f"vertex {i} violates its plane constraint")
        for i in np.nonzero(self.tag_kind == ON_EDGE)[0]:
            e = self.support.edges[self.tag_id[i]]
            rel = self.vertices[i] - e.point
            off = rel - np.dot(rel, e.direction) * e.direction
            if np.linalg.norm(off) > tol:
                raise DomainError(f"vertex {i} violates its line constraint")

    def project_constraints(self):
        """Snap tagged vertices exactly onto their planes / lines."""
        for i in np.nonzero(self.tag_kind == ON_PLANE)[0]:
            p = self.support.planes[self.tag_id[i]]
            self.vertices[i] -= p.signed_distance(self.vertices[i]) * p.normal
        for i in np.nonzero(self.tag_kind == ON_EDGE)[0]:
            e = self.support.edges[self.tag_id[i]]
            rel = self.vertices[i] - e.point
            self.vertices[i] = e.point + np.dot(rel, e.direction) * e.direction

    def wall_polylines(self) -> dict[int, np.ndarray]:
        """Ordered boundary vertex indices per wall, endpoints on edge lines."""
        loop = self.boundary_loop()
        kinds = self.tag_kind[loop]
        corner_pos = np.nonzero(kinds == ON_EDGE)[0]
        if corner_pos.size == 0:
            raise DomainError("boundary has no edge-line vertices")
        loop = np.roll(loop, -corner_pos[0])
        kinds = self.tag_kind[loop]
        corner_pos = np.nonzero(kinds == ON_EDGE)[0]
        out = {}
        m = len(loop)
        for a, b in zip(corner_pos, np.append(corner_pos[1:], m)):
            seg = loop[a:b + 1] if b < m else np.append(loop[a:], loop[0])
            interior = seg[1:-1]
            walls = set(self.tag_id[interior[self.tag_kind[interior] == ON_PLANE]])
            if len(walls) != 1:
                raise DomainError("open or inconsistent contact polyline")
            out[walls.pop()] = seg
        return out

    def interior_mask(self) -> np.ndarray:
        return self.tag_kind == FREE


# -- seeding ---------------------------------------------------------------


def _arc_samples(cap: SphericalCap, support: SupportAdapter, j: int,
                 p0, p1, n_interior: int) -> np.ndarray:
    """Points of the contact-circle arc from p0 to p1 on the accessible side."""
    plane = support.planes[j]
    o, r = cap.contact_circle(plane)
    f1 = (p0 - o) / np.linalg.norm(p0 - o)
    f2 = np.cross(plane.normal, f1)
    t1 = np.arctan2(np.dot(p1 - o, f2), np.dot(p1 - o, f1)) % (2.0 * np.pi)
    others = [p for k, p in enumerate(support.planes) if k != j]

    def accessibility(tmid):
        m = o + r * (np.cos(tmid) * f1 + np.sin(tmid) * f2)
        return min(p.signed_distance(m) for p in others)

    if accessibility(0.5 * t1) >= accessibility(0.5 * (t1 + 2.0 * np.pi)):
        ts = np.linspace(0.0, t1, n_interior + 2)
    else:
        ts = np.linspace(0.0, t1 - 2.0 * np.pi, n_interior + 2)
    return o + r * (np.cos(ts)[:, None] * f1 + np.sin(ts)[:, None] * f2)


def _choose_corner(cap: SphericalCap, support: SupportAdapter, k: int) -> np.ndarray:
    """The sphere/edge-line crossing on the outward side of the edge."""
    e = support.edges[k]
    pts = edge_vertices(cap, e.point, e.direction)
    if not pts:
        raise NoSolutionError("cap sphere does not reach a support edge")
    return max(pts, key=lambda p: np.dot(p - e.point, e.direction))


def _project_to_circle(x, plane, cap: SphericalCap):
    o, r = cap.contact_circle(plane)
    q = x - plane.signed_distance(x) * plane.normal
    rel = q - o
    nr = np.linalg.norm(rel)
    if nr < 1e-14:
        raise MeshDegenerationError("cannot project onto contact circle")
    return o + r * rel / nr


def _subdivide(vertices, triangles, tag_kind, tag_id, support,
               project_free, project_wall):
    """One 4-to-1 subdivision round with tag inheritance and projection."""
    vertices = list(map(np.asarray, vertices))
    tag_kind = list(tag_kind)
    tag_id = list(tag_id)
    tris = np.asarray(triangles)
    directed = {}
    for t in tris:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            directed[(int(a), int(b))] = True
    midpoint = {}

    def boundary_edge(a, b):
        return (b, a) not in directed

    def planes_of(i):
        if tag_kind[i] == ON_PLANE:
            return {tag_id[i]}
        if tag_kind[i] == ON_EDGE:
            return set(support.edges[tag_id[i]].plane_ids)
        return set()

    def edge_wall(a, b):
        common = planes_of(a) & planes_of(b)
        if len(common) != 1:
            raise DomainError("cannot determine the wall of a boundary edge")
        return common.pop()

    def get_mid(a, b):
        key = (min(a, b), max(a, b))
        if key in midpoint:
            return midpoint[key]
        x = 0.5 * (vertices[a] + vertices[b])
        if boundary_edge(a, b):
            j = edge_wall(a, b)
            x = project_wall(x, j)
            tag_kind.append(ON_PLANE)
            tag_id.append(j)
        else:
            x = project_free(x)
            tag_kind.append(FREE)
            tag_id.append(-1)
        vertices.append(x)
        idx = len(vertices) - 1
        midpoint[key] = idx
        return idx

    new_tris = []
    for t in tris:
        a, b, c = map(int, t)
        ab, bc, ca = get_mid(a, b), get_mid(b, c), get_mid(c, a)
        new_tris += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
    return (np.array(vertices), np.array(new_tris),
            np.array(tag_kind, dtype=np.int8), np.array(tag_id))


def _orient_positive(mesh: TriMeshDrop):
    from .evolver import volume  # cycle: evolver needs TriMeshDrop
    if volume(mesh) < 0:
        mesh.triangles = mesh.triangles[:, [0, 2, 1]]
        mesh.invalidate()


def seed_mesh(config, h: float | None = 1.0, target_volume: float | None = None,
              refinement_level: int = 2) -> TriMeshDrop:
    """Seed a drop mesh from the analytic spherical cap of the configuration.

    Refinement level ``r`` yields roughly ``4**r * 32`` triangles. When a
    target volume is given and the support is scale invariant (wedge or
    trihedral angle), the seed is rescaled about the support's reference point
    to enclose it exactly.
    """
    support = SupportAdapter(config)
    if support.kind == "cylinder":
        # the walls fix the sphere radius, so the curvature is not a free input
        cap = cylinder_cap(config, h)
        per_arc = 2
    elif h is None:
        raise DomainError("a mean curvature is required for this support")
    elif support.kind == "wedge":
        cap = wedge_cap(config, h)
        per_arc = 3
    else:
        cap = trihedral_cap(config, h)
        per_arc = 2
    if not isinstance(cap, SphericalCap):
        raise DomainError("configuration admits no spherical seed; use the planar seeder")

    corners = [_choose_corner(cap, support, k) for k in range(len(support.edges))]
    verts, kinds, ids = [], [], []
    if support.kind == "wedge":
        # two arcs between the two edge crossings
        e = support.edges[0]
        pts = edge_vertices(cap, e.point, e.direction)
        if len(pts) < 2:
            raise NoSolutionError("cap sphere does not cross the wedge edge twice")
        vlo, vhi = pts[0], pts[-1]
        arcs = [(0, vhi, vlo), (1, vlo, vhi)]
        corner_pts = [vhi, vlo]
        corner_ids = [0, 0]
    else:
        # wall j sits between the edges it shares; traverse walls in order
        arcs = []
        corner_pts = []
        corner_ids = []
        for j in range(3):
            k_in = support.edge_for_planes((j - 1) % 3, j)
            k_out = support.edge_for_planes(j, (j + 1) % 3)
            arcs.append((j, corners[k_in], corners[k_out]))
            corner_pts.append(corners[k_in])
            corner_ids.append(k_in)

    boundary_pts, boundary_tags = [], []
    for (j, p0, p1), cpt, cid in zip(arcs, corner_pts, corner_ids):
        samples = _arc_samples(cap, support, j, p0, p1, per_arc)
        boundary_pts.append(samples[0])
        boundary_tags.append((ON_EDGE, cid))
        for s in samples[1:-1]:
            boundary_pts.append(s)
            boundary_tags.append((ON_PLANE, j))
    m = len(boundary_pts)
    center = np.mean(boundary_pts, axis=0)
    center = cap.center + cap.radius * (center - cap.center) / np.linalg.norm(center - cap.center)
    verts = [center] + boundary_pts
    kinds = [FREE] + [t[0] for t in boundary_tags]
    ids = [-1] + [t[1] for t in boundary_tags]
    tris = [[0, 1 + i, 1 + (i + 1) % m] for i in range(m)]

    def project_free(x):
        return cap.surface_point(x - cap.center)

    def project_wall(x, j):
        return _project_to_circle(x, support.planes[j], cap)

    v, t, tk, ti = np.array(verts), np.array(tris), np.array(kinds, dtype=np.int8), np.array(ids)
    for _ in range(refinement_level + 1):
        v, t, tk, ti = _subdivide(v, t, tk, ti, support, project_free, project_wall)

    mesh = TriMeshDrop(v, t, tk, ti, support)
    _orient_positive(mesh)
    from .evolver import volume
    vol = volume(mesh)
    if target_volume is not None:
        if support.kind == "cylinder":
            mesh.target_volume = target_volume
        else:
            lam = (target_volume / vol) ** (1.0 / 3.0)
            mesh.vertices = support.reference + lam * (mesh.vertices - support.reference)
            mesh.target_volume = target_volume
    else:
        mesh.target_volume = vol
    mesh.validate()
    return mesh


def seed_planar_trihedral(config: TrihedralConfig, extent: float = 1.0,
                          refinement_level: int = 2) -> TriMeshDrop:
    """Flat triangular seed spanning the three edges of a trihedral angle."""
    support = SupportAdapter(config)
    if support.kind != "apex":
        raise DomainError("planar seed requires an apex configuration")
    corners = [support.edges[k].point + extent * support.edges[k].direction
               for k in range(3)]
    center = np.mean(corners, axis=0)
    verts = [center] + corners
    kinds = [FREE, ON_EDGE, ON_EDGE, ON_EDGE]
    ids = [-1, 0, 1, 2]
    tris = [[0, 1, 2], [0, 2, 3], [0, 3, 1]]

    def project_free(x):
        return x

    def project_wall(x, j):
        p = support.planes[j]
        return x - p.signed_distance(x) * p.normal

    v, t, tk, ti = np.array(verts), np.array(tris), np.array(kinds, dtype=np.int8), np.array(ids)
    for _ in range(refinement_level + 1):
        v, t, tk, ti = _subdivide(v, t, tk, ti, support, project_free, project_wall)
    mesh = TriMeshDrop(v, t, tk, ti, support)
    _orient_positive(mesh)
    from .evolver import volume
    mesh.target_volume = volume(mesh)
    mesh.validate()
    return mesh


def refine(mesh: TriMeshDrop) -> TriMeshDrop:
    """Uniform 4-to-1 subdivision; tagged midpoints are re-projected."""
    support = mesh.support

    def project_free(x):
        return x

    def project_wall(x, j):
        p = support.planes[j]
        return x - p.signed_distance(x) * p.normal

    v, t, tk, ti = _subdivide(mesh.vertices, mesh.triangles, mesh.tag_kind,
                              mesh.tag_id, support, project_free, project_wall)
    out = TriMeshDrop(v, t, tk, ti, support, mesh.target_volume, mesh.lagrange_h)
    out.validate()
    return out


def perturb(mesh: TriMeshDrop, amplitude: float, seed: int = 0) -> TriMeshDrop:
    """Constraint-respecting random perturbation, relative to the mesh diameter.

    Free vertices move along their normals; plane vertices within the plane;
    edge vertices along their lines.
    """
    rng = np.random.default_rng(seed)
    out = mesh.copy()
    diam = float(np.ptp(mesh.vertices, axis=0).max())
    scale = amplitude * diam
    normals = vertex_normals(mesh)
    noise = rng.standard_normal(mesh.n_vertices)
    for i in range(mesh.n_vertices):
        if out.tag_kind[i] == FREE:
            out.vertices[i] += scale * noise[i] * normals[i]
        elif out.tag_kind[i] == ON_PLANE:
            p = mesh.support.planes[out.tag_id[i]]
            d = rng.standard_normal(3)
            d -= np.dot(d, p.normal) * p.normal
            d /= max(np.linalg.norm(d), 1e-30)
            out.vertices[i] += scale * noise[i] * d
        else:
            e = mesh.support.edges[out.tag_id[i]]
            out.vertices[i] += scale * noise[i] * e.direction
    out.project_constraints()
    out.invalidate()
    return out


def vertex_normals(mesh: TriMeshDrop) -> np.ndarray:
    """Area-weighted outward vertex normals."""
    v, t = mesh.vertices, mesh.triangles
    fn = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    out = np.zeros_like(v)
    for k in range(3):
        np.add.at(out, t[:, k], fn)
    norms = np.linalg.norm(out, axis=1)
    norms[norms < 1e-30] = 1.0
    return out / norms[:, None]


def structured_surface(points: np.ndarray) -> TriMeshDrop:
    """Triangulate an (nx, ny, 3) grid of surface points.

    The result has no support configuration; boundary vertices are tagged so
    that curvature diagnostics skip them. Intended for graph solutions.
    """
    pts = np.asarray(points, dtype=float)
    nx, ny, _ = pts.shape
    idx = np.arange(nx * ny).reshape(nx, ny)
    tris = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a, b = idx[i, j], idx[i + 1, j]
            c, d = idx[i + 1, j + 1], idx[i, j + 1]
            tris += [[a, b, c], [a, c, d]]
    tag_kind = np.zeros(nx * ny, dtype=np.int8)
    boundary = np.zeros((nx, ny), dtype=bool)
    boundary[0, :] = boundary[-1, :] = boundary[:, 0] = boundary[:, -1] = True
    tag_kind[boundary.ravel()] = ON_PLANE
    return TriMeshDrop(pts.reshape(-1, 3), np.array(tris), tag_kind,
                       np.zeros(nx * ny, dtype=np.int64), support=None)


# -- OBJ interchange -------------------------------------------------------


def _tag_token(kind: int, tid: int) -> str:
    if kind == ON_PLANE:
        return f"P{tid}"
    if kind == ON_EDGE:
        return f"E{tid}"
    return "Free"


def write_obj(mesh: TriMeshDrop, path):
    """Wavefront OBJ with constraint tags carried in comment records."""
    with open(path, "w") as f:
        f.write("# capvertex drop mesh\n")
        for x, y, z in mesh.vertices:
            f.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for i in range(mesh.n_vertices):
            f.write(f"# tag {i + 1} {_tag_token(mesh.tag_kind[i], mesh.tag_id[i])}\n")
        for a, b, c in mesh.triangles + 1:
            f.write(f"f {a} {b} {c}\n")


def read_obj(path, support: SupportAdapter,
             target_volume: float | None = None) -> TriMeshDrop:
    verts, tris = [], []
    tags = {}
    with open(path) as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                tris.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
            elif parts[:2] == ["#", "tag"]:
                tags[int(parts[2]) - 1] = parts[3]
    n = len(verts)
    tag_kind = np.zeros(n, dtype=np.int8)
    tag_id = np.full(n, -1)
    for i, tok in tags.items():
        if tok.startswith("P"):
            tag_kind[i], tag_id[i] = ON_PLANE, int(tok[1:])
        elif tok.startswith("E"):
            tag_kind[i], tag_id[i] = ON_EDGE, int(tok[1:])
    return TriMeshDrop(np.array(verts), np.array(tris), tag_kind, tag_id,
                       support, target_volume)
