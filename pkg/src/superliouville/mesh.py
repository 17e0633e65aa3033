"""Triangulated planar domains with circular boundary components.

The meshes produced here are multiply connected subsets of the plane:
a large disk with round holes removed.  Interior vertices come from a
jittered hexagonal lattice, boundary vertices from uniform sampling of
each circle, and the triangulation from a Delaunay pass restricted to
the domain.  Boundary loops are recovered with the domain on their left,
so the outer loop runs counterclockwise and hole loops clockwise.
"""

from __future__ import annotations

import io
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay


class MeshError(Exception):
    """Raised when a mesh violates a structural invariant."""


class GeometryError(MeshError):
    """Raised when the requested domain geometry is inconsistent."""


@dataclass(frozen=True)
class TriMesh:
    """Triangulation of a planar domain with ``b`` circular boundary loops.

    vertices       -- (V, 2) coordinates
    triangles      -- (F, 3) vertex indices, counterclockwise
    boundary_loops -- list of 1-D index arrays, ordered with the domain
                      on the left; position in the list is the loop id
    h              -- maximum edge length
    seed           -- RNG seed used for vertex jitter (kept for replay)
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_loops: list[np.ndarray] = field(default_factory=list)
    h: float = 0.0
    seed: int = 0

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @property
    def num_loops(self) -> int:
        return len(self.boundary_loops)

    def edges(self) -> np.ndarray:
        """Unique undirected edges as an (E, 2) array."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    @property
    def euler_characteristic(self) -> int:
        return self.num_vertices - len(self.edges()) + self.num_triangles

    def boundary_vertices(self) -> np.ndarray:
        """Sorted indices of all vertices lying on some boundary loop."""
        if not self.boundary_loops:
            return np.array([], dtype=int)
        return np.unique(np.concatenate(self.boundary_loops))

    def is_boundary(self) -> np.ndarray:
        """Boolean mask over vertices marking boundary membership."""
        mask = np.zeros(self.num_vertices, dtype=bool)
        mask[self.boundary_vertices()] = True
        return mask


def _circle_points(center, radius, target_h):
    n = max(8, int(np.ceil(2 * np.pi * radius / target_h)))
    t = 2 * np.pi * np.arange(n) / n
    return np.c_[center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)]


def _extract_loops(triangles):
    """Boundary loops from directed edges incident to exactly one triangle.

    Each triangle contributes its three directed edges; an undirected
    edge seen once is on the boundary, and its stored direction keeps the
    domain on the left.  Walking successor pointers closes the loops.
    """
    count: dict[frozenset, int] = defaultdict(int)
    for a, b, c in triangles:
        for e in ((a, b), (b, c), (c, a)):
            count[frozenset(e)] += 1
    succ = {}
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            if count[frozenset((u, v))] == 1:
                if u in succ:
                    raise MeshError("boundary is not a disjoint union of simple loops")
                succ[u] = v
    loops = []
    seen: set[int] = set()
    for start in sorted(succ):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        cur = succ[start]
        while cur != start:
            loop.append(cur)
            seen.add(cur)
            cur = succ[cur]
        loops.append(np.array(loop, dtype=int))
    return loops


def _loop_signed_area(vertices, loop):
    p = vertices[loop]
    q = np.roll(p, -1, axis=0)
    return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]))


def _order_loops(vertices, loops):
    """Outer loop (positive signed area) first, holes after, by center x."""
    outer = [lp for lp in loops if _loop_signed_area(vertices, lp) > 0]
    holes = [lp for lp in loops if _loop_signed_area(vertices, lp) <= 0]
    if len(outer) != 1:
        raise MeshError(f"expected one outer loop, found {len(outer)}")
    holes.sort(key=lambda lp: tuple(vertices[lp].mean(axis=0)))
    return outer + holes


def _max_edge_length(vertices, triangles):
    p = vertices[triangles]
    lengths = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
    return float(lengths.max())


def build_disk_with_holes(outer_radius, holes, target_h, seed=0, margin=0.65):
    """Triangulate a disk of ``outer_radius`` minus circular ``holes``.

    ``holes`` is a sequence of (cx, cy, r) triples (possibly empty).
    Interior points sit on a hexagonal lattice of spacing ``target_h``
    with a deterministic jitter of 1e-3 * target_h to break Delaunay
    ties; points closer than ``margin * target_h`` to any boundary are
    dropped so boundary-adjacent triangles stay well shaped.
    """
    if outer_radius <= 0 or target_h <= 0:
        raise ValueError("outer_radius and target_h must be positive")
    for cx, cy, r in holes:
        if r <= 0:
            raise ValueError(f"hole radius must be positive, got {r}")
        if np.hypot(cx, cy) + r >= outer_radius:
            raise GeometryError(
                f"hole at ({cx}, {cy}) radius {r} is not strictly inside the outer disk"
            )
    for i in range(len(holes)):
        for j in range(i + 1, len(holes)):
            ci, cj = holes[i], holes[j]
            if np.hypot(ci[0] - cj[0], ci[1] - cj[1]) <= ci[2] + cj[2]:
                raise GeometryError(f"holes {i} and {j} overlap or touch")

    rng = np.random.default_rng(seed)
    boundary_parts = [_circle_points((0.0, 0.0), outer_radius, target_h)]
    for cx, cy, r in holes:
        boundary_parts.append(_circle_points((cx, cy), r, target_h))

    dx = target_h
    dy = target_h * np.sqrt(3) / 2
    nx = int(np.ceil(2 * outer_radius / dx)) + 2
    ny = int(np.ceil(2 * outer_radius / dy)) + 2
    rows = []
    for j in range(-ny, ny + 1):
        offset = (j % 2) * dx / 2
        x = np.arange(-nx, nx + 1) * dx + offset
        rows.append(np.c_[x, np.full_like(x, j * dy)])
    lattice = np.vstack(rows)
    lattice = lattice + rng.uniform(-1, 1, lattice.shape) * target_h * 1e-3

    keep = outer_radius - np.hypot(lattice[:, 0], lattice[:, 1]) > margin * target_h
    for cx, cy, r in holes:
        keep &= np.hypot(lattice[:, 0] - cx, lattice[:, 1] - cy) - r > margin * target_h
    vertices = np.vstack(boundary_parts + [lattice[keep]])

    tri = Delaunay(vertices)
    triangles = tri.simplices.copy()
    centroids = vertices[triangles].mean(axis=1)
    inside = np.hypot(centroids[:, 0], centroids[:, 1]) < outer_radius
    for cx, cy, r in holes:
        inside &= np.hypot(centroids[:, 0] - cx, centroids[:, 1] - cy) > r
    triangles = triangles[inside]

    a = vertices[triangles[:, 1]] - vertices[triangles[:, 0]]
    b = vertices[triangles[:, 2]] - vertices[triangles[:, 0]]
    flip = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0] < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    loops = _order_loops(vertices, _extract_loops(triangles))
    mesh = TriMesh(
        vertices=vertices,
        triangles=triangles,
        boundary_loops=loops,
        h=_max_edge_length(vertices, triangles),
        seed=seed,
    )
    validate_mesh(mesh)
    return mesh


def build_pair_of_pants(outer_radius, hole_centers, hole_radii, target_h, seed=0):
    """Disk with two holes: the smallest planar domain with χ = −1.

    ``hole_centers`` is a pair of 2-D points and ``hole_radii`` a pair of
    positive reals.  Holes must be disjoint and strictly inside the
    outer circle; violations raise :class:`GeometryError` (overlap /
    containment) or ``ValueError`` (nonpositive radii).
    """
    if len(hole_centers) != 2 or len(hole_radii) != 2:
        raise ValueError("a pair of pants needs exactly two holes")
    holes = [(float(c[0]), float(c[1]), float(r)) for c, r in zip(hole_centers, hole_radii)]
    mesh = build_disk_with_holes(outer_radius, holes, target_h, seed=seed)
    if mesh.num_loops != 3:
        raise MeshError(f"expected 3 boundary loops, got {mesh.num_loops}")
    return mesh


def build_disk(radius=1.0, target_h=0.1, seed=0):
    """Plain disk mesh (single boundary loop); used by verification suites."""
    return build_disk_with_holes(radius, [], target_h, seed=seed)


def build_square_patch(n=16):
    """Structured right-triangle mesh of the unit square [0,1]^2.

    Quadrature oracle geometry: every integral of a polynomial over this
    patch is known in closed form.
    """
    xs = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.c_[xx.ravel(), yy.ravel()]
    idx = np.arange((n + 1) * (n + 1)).reshape(n + 1, n + 1)
    tris = []
    for j in range(n):
        for i in range(n):
            v00, v10 = idx[j, i], idx[j, i + 1]
            v01, v11 = idx[j + 1, i], idx[j + 1, i + 1]
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    triangles = np.array(tris, dtype=int)
    loops = _order_loops(vertices, _extract_loops(triangles))
    return TriMesh(
        vertices=vertices,
        triangles=triangles,
        boundary_loops=loops,
        h=_max_edge_length(vertices, triangles),
        seed=0,
    )


def validate_mesh(mesh: TriMesh) -> None:
    """Check the structural invariants; raise :class:`MeshError` on failure."""
    V, F = mesh.num_vertices, mesh.num_triangles
    if F == 0:
        raise MeshError("mesh has no triangles")
    t = mesh.triangles
    if t.min() < 0 or t.max() >= V:
        raise MeshError("triangle index out of range")

    a = mesh.vertices[t[:, 1]] - mesh.vertices[t[:, 0]]
    b = mesh.vertices[t[:, 2]] - mesh.vertices[t[:, 0]]
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    if np.any(det <= 0):
        raise MeshError("found a degenerate or clockwise triangle")

    count: dict[frozenset, int] = defaultdict(int)
    for tri in t:
        for e in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            count[frozenset(e)] += 1
    if any(c > 2 for c in count.values()):
        raise MeshError("an edge borders more than two triangles")
    boundary_edges = {e for e, c in count.items() if c == 1}

    loop_edges = set()
    for loop in mesh.boundary_loops:
        if len(loop) < 3:
            raise MeshError("boundary loop with fewer than 3 vertices")
        if len(np.unique(loop)) != len(loop):
            raise MeshError("boundary loop revisits a vertex")
        for u, v in zip(loop, np.roll(loop, -1)):
            loop_edges.add(frozenset((int(u), int(v))))
    if loop_edges != boundary_edges:
        raise MeshError("boundary loops do not cover the boundary edges")

    E = len(count)
    bcount = mesh.num_loops
    if V - E + F != 2 - bcount:
        raise MeshError(
            f"Euler formula violated: V-E+F = {V - E + F}, expected {2 - bcount}"
        )


def save_mesh(mesh: TriMesh, path) -> None:
    """Plain-text persistence.

    Line 1: ``V E F B``; line 2: ``# seed=<n> h=<max edge>``; then vertex
    lines ``x y``, triangle lines ``i j k``, loop lines
    ``loop_id i1 ... in``.
    """
    E = len(mesh.edges())
    out = io.StringIO()
    out.write(f"{mesh.num_vertices} {E} {mesh.num_triangles} {mesh.num_loops}\n")
    out.write(f"# seed={mesh.seed} h={float(mesh.h)!r}\n")
    for x, y in mesh.vertices:
        out.write(f"{float(x)!r} {float(y)!r}\n")
    for i, j, k in mesh.triangles:
        out.write(f"{i} {j} {k}\n")
    for loop_id, loop in enumerate(mesh.boundary_loops):
        out.write(" ".join([str(loop_id)] + [str(int(v)) for v in loop]) + "\n")
    with open(path, "w") as fh:
        fh.write(out.getvalue())


def load_mesh(path) -> TriMesh:
    with open(path) as fh:
        header = fh.readline().split()
        V, E, F, B = (int(x) for x in header)
        seed, h = 0, 0.0
        pos = fh.tell()
        line = fh.readline()
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "seed":
                    seed = int(val)
                elif key == "h":
                    h = float(val)
        else:
            fh.seek(pos)
        vertices = np.array(
            [[float(x) for x in fh.readline().split()] for _ in range(V)]
        )
        triangles = np.array(
            [[int(x) for x in fh.readline().split()] for _ in range(F)], dtype=int
        )
        loops = []
        for _ in range(B):
            parts = fh.readline().split()
            loops.append(np.array([int(x) for x in parts[1:]], dtype=int))
    mesh = TriMesh(
        vertices=vertices, triangles=triangles, boundary_loops=loops, h=h, seed=seed
    )
    validate_mesh(mesh)
    if len(mesh.edges()) != E:
        raise MeshError("edge count in header disagrees with triangulation")
    return mesh


def boundary_edges_of(mesh: TriMesh, loop_id: int) -> np.ndarray:
    """Directed boundary edges (i, j) of one loop, domain on the left."""
    loop = mesh.boundary_loops[loop_id]
    return np.c_[loop, np.roll(loop, -1)]


def vertex_normals(mesh: TriMesh):
    """Outward unit normals at boundary vertices (angle bisector rule).

    Each boundary vertex joins two boundary edges; the normal is the
    normalized sum of the two edge normals.  Edge normals point out of
    the domain: with the domain on the left of the directed edge, the
    outward normal of tangent t is (t_y, -t_x).  Returns a dict from
    vertex index to a unit 2-vector.
    """
    normals: dict[int, np.ndarray] = {}
    for loop in mesh.boundary_loops:
        pts = mesh.vertices[loop]
        t_next = np.roll(pts, -1, axis=0) - pts
        t_prev = pts - np.roll(pts, 1, axis=0)
        for k, v in enumerate(loop):
            n = np.zeros(2)
            for t in (t_prev[k], t_next[k]):
                tt = t / np.linalg.norm(t)
                n += np.array([tt[1], -tt[0]])
            normals[int(v)] = n / np.linalg.norm(n)
    return normals


def triangle_geometry(mesh: TriMesh):
    """Per-triangle areas and P1 hat-function gradients.

    Returns ``(area, grad)`` with ``area`` of shape (F,) and ``grad`` of
    shape (F, 3, 2): ``grad[t, i]`` is the constant gradient of the hat
    function of local vertex ``i`` on triangle ``t``, computed as the
    90°-rotated opposite edge over twice the area.
    """
    p0 = mesh.vertices[mesh.triangles[:, 0]]
    p1 = mesh.vertices[mesh.triangles[:, 1]]
    p2 = mesh.vertices[mesh.triangles[:, 2]]
    v1 = p1 - p0
    v2 = p2 - p0
    area = 0.5 * (v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
    grad = np.empty((mesh.num_triangles, 3, 2))
    for i, (va, vb) in enumerate(((p1, p2), (p2, p0), (p0, p1))):
        e = vb - va
        grad[:, i, 0] = -e[:, 1] / (2 * area)
        grad[:, i, 1] = e[:, 0] / (2 * area)
    return area, grad
