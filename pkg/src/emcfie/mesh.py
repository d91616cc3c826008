"""Closed triangulated surfaces: generation, barycentric refinement, export.

Meshes are immutable once built.  Vertex deduplication during generation uses
exact integer keys (lattice coordinates), never floating-point rounding, so
repeated runs produce byte-identical meshes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEGENERATE_AREA = 1e-14


@dataclass(frozen=True)
class TriangleMesh:
    """Closed oriented triangle mesh.

    edges are sorted vertex pairs in lexicographic order.
    edge_to_triangles[e] = (left, right): left traverses the edge in sorted
    direction (a -> b with a < b), right traverses it b -> a.
    triangle_to_edges[t, k] is the edge (v_k, v_{k+1}) of triangle t, with
    edge_signs[t, k] = +1 when that traversal agrees with the sorted order.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_to_triangles: np.ndarray
    triangle_to_edges: np.ndarray
    edge_signs: np.ndarray
    areas: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def triangle_vertices(self, t: int) -> np.ndarray:
        return self.vertices[self.triangles[t]]


@dataclass(frozen=True)
class RefinedMesh:
    """A mesh together with its barycentric (6-child) refinement.

    Fine vertex layout: base vertices keep their ids, edge midpoints follow
    (base V + edge id), barycenters last (base V + E + triangle id).  The
    dual-space construction relies on this layout.
    """

    base: TriangleMesh
    fine: TriangleMesh
    parent_map: np.ndarray  # (6F, 2): fine triangle -> (base triangle, 0..5)


def _triangle_geometry(vertices, triangles):
    p = vertices[triangles]
    cr = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    nrm = np.linalg.norm(cr, axis=1)
    areas = 0.5 * nrm
    if (areas <= DEGENERATE_AREA).any():
        bad = int(np.argmin(areas))
        raise ValueError(f"degenerate triangle {bad} with area {areas[bad]:.3e}")
    return areas, cr / nrm[:, None]


def build_mesh(vertices, triangles, flip_inward: bool = True) -> TriangleMesh:
    """Assemble connectivity and validate the closed-surface invariants.

    With flip_inward, triangles whose right-hand-rule normal points toward
    the centroid of the body (origin-centered generators) are reversed.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    areas, normals = _triangle_geometry(vertices, triangles)
    if flip_inward:
        center = vertices.mean(axis=0)
        centroids = vertices[triangles].mean(axis=1)
        inward = np.einsum("ij,ij->i", normals, centroids - center) <= 0.0
        if inward.any():
            triangles = triangles.copy()
            triangles[inward] = triangles[inward][:, ::-1]
            areas, normals = _triangle_geometry(vertices, triangles)

    # edge table: sorted pairs, lexicographic order
    raw = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]
    )
    sorted_raw = np.sort(raw, axis=1)
    edges, inverse = np.unique(sorted_raw, axis=0, return_inverse=True)
    F = len(triangles)
    triangle_to_edges = inverse.reshape(3, F).T.copy()
    edge_signs = np.where(raw[:, 0] < raw[:, 1], 1, -1).reshape(3, F).T.copy()

    counts = np.bincount(inverse, minlength=len(edges))
    if not (counts == 2).all():
        raise ValueError("surface is not closed: an edge is not shared by 2 triangles")
    edge_to_triangles = np.full((len(edges), 2), -1, dtype=np.int64)
    tri_of_raw = np.tile(np.arange(F), 3)
    for r in range(len(raw)):
        e = inverse[r]
        side = 0 if raw[r, 0] < raw[r, 1] else 1
        if edge_to_triangles[e, side] != -1:
            raise ValueError("inconsistent orientation: edge traversed twice same way")
        edge_to_triangles[e, side] = tri_of_raw[r]

    V, E = len(vertices), len(edges)
    if V - E + F != 2:
        raise ValueError(f"Euler characteristic {V - E + F}, expected 2")
    return TriangleMesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        edge_to_triangles=edge_to_triangles,
        triangle_to_edges=triangle_to_edges,
        edge_signs=edge_signs,
        areas=areas,
        normals=normals,
    )


def meshwidth(mesh: TriangleMesh) -> float:
    d = mesh.vertices[mesh.edges[:, 0]] - mesh.vertices[mesh.edges[:, 1]]
    return float(np.linalg.norm(d, axis=1).max())


_ICOSA_VERTS = None
_ICOSA_FACES = None


def _icosahedron():
    global _ICOSA_VERTS, _ICOSA_FACES
    if _ICOSA_VERTS is None:
        phi = (1.0 + np.sqrt(5.0)) / 2.0
        v = []
        for a in (-1.0, 1.0):
            for b in (-phi, phi):
                v += [(0, a, b), (a, b, 0), (b, 0, a)]
        verts = np.array(v, dtype=float)
        verts /= np.linalg.norm(verts[0])
        # faces by proximity: each vertex pair at the icosahedron edge length
        d = np.linalg.norm(verts[:, None] - verts[None, :], axis=2)
        edge_len = np.sort(d[0])[1]
        adj = (np.abs(d - edge_len) < 1e-9).astype(int)
        faces = []
        for i in range(12):
            for j in range(i + 1, 12):
                if not adj[i, j]:
                    continue
                for k in range(j + 1, 12):
                    if adj[i, k] and adj[j, k]:
                        faces.append((i, j, k))
        _ICOSA_VERTS = verts
        _ICOSA_FACES = np.array(faces, dtype=np.int64)
    return _ICOSA_VERTS, _ICOSA_FACES


def _sphere_mesh_level(radius: float, n: int) -> TriangleMesh:
    """n-section of each icosahedron face, vertices projected to the sphere."""
    base_v, base_f = _icosahedron()
    key_to_id: dict = {}
    verts: list = []
    tris = []

    def vertex_id(corners, weights):
        key = tuple(sorted((int(c), int(w)) for c, w in zip(corners, weights) if w))
        vid = key_to_id.get(key)
        if vid is None:
            p = sum(w * base_v[c] for c, w in zip(corners, weights)) / n
            p = p / np.linalg.norm(p) * radius
            vid = len(verts)
            verts.append(p)
            key_to_id[key] = vid
        return vid

    for A, B, C in base_f:
        # integer barycentric lattice: point (i, j) has weights
        # (n - i, i - j, j) on (A, B, C), 0 <= j <= i <= n
        ids = {}
        for i in range(n + 1):
            for j in range(i + 1):
                ids[i, j] = vertex_id((A, B, C), (n - i, i - j, j))
        for i in range(n):
            for j in range(i + 1):
                tris.append((ids[i, j], ids[i + 1, j], ids[i + 1, j + 1]))
                if j < i:
                    tris.append((ids[i, j], ids[i + 1, j + 1], ids[i, j + 1]))
    return build_mesh(np.array(verts), np.array(tris, dtype=np.int64))


def make_sphere_mesh(radius: float, h_target: float) -> TriangleMesh:
    """Icosahedral sphere mesh, subdivision level minimal for the meshwidth.

    Faces are n-sected (n^2 children per face) rather than repeatedly
    quartered, so the achievable meshwidths form a ~1/n ladder and any
    target in (0, circumscribed edge] is met without overshooting far.
    """
    if radius <= 0 or h_target <= 0:
        raise ValueError("radius and h_target must be positive")
    n = 1
    while True:
        mesh = _sphere_mesh_level(radius, n)
        if meshwidth(mesh) <= h_target:
            return mesh
        # meshwidth scales like 1/n: jump close to the target, then step
        n = max(n + 1, int(meshwidth(mesh) * n / h_target))


def make_cube_mesh(edge_length: float, h_target: float) -> TriangleMesh:
    """Axis-aligned cube at the origin, each face an n x n grid of squares."""
    if edge_length <= 0 or h_target <= 0:
        raise ValueError("edge_length and h_target must be positive")
    if h_target > edge_length * np.sqrt(2.0) + 1e-12:
        h_target = edge_length * np.sqrt(2.0)
    n = int(np.ceil(edge_length * np.sqrt(2.0) / h_target))

    key_to_id: dict = {}
    verts: list = []
    tris = []

    def vertex_id(i, j, k):
        key = (i, j, k)
        vid = key_to_id.get(key)
        if vid is None:
            vid = len(verts)
            verts.append(
                edge_length * (np.array([i, j, k], dtype=float) / n - 0.5)
            )
            key_to_id[key] = vid
        return vid

    # (axis, fixed coordinate value, u axis, v axis) with u x v = outward
    faces = [
        (0, n, 1, 2),
        (0, 0, 2, 1),
        (1, n, 2, 0),
        (1, 0, 0, 2),
        (2, n, 0, 1),
        (2, 0, 1, 0),
    ]
    for axis, fixed, ua, va in faces:
        for u in range(n):
            for v in range(n):
                def lat(uu, vv):
                    c = [0, 0, 0]
                    c[axis] = fixed
                    c[ua] = uu
                    c[va] = vv
                    return vertex_id(*c)

                p00, p10 = lat(u, v), lat(u + 1, v)
                p11, p01 = lat(u + 1, v + 1), lat(u, v + 1)
                tris.append((p00, p10, p11))
                tris.append((p00, p11, p01))
    return build_mesh(np.array(verts), np.array(tris, dtype=np.int64))


def barycentric_refine(mesh: TriangleMesh) -> RefinedMesh:
    """Split every triangle into 6 by its medians.

    Children of triangle (a, b, c) in order: (a, m_ab, g), (m_ab, b, g),
    (b, m_bc, g), (m_bc, c, g), (c, m_ca, g), (m_ca, a, g), with g the
    barycenter; all inherit the parent orientation.
    """
    V, E, F = mesh.num_vertices, mesh.num_edges, mesh.num_triangles
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    centers = mesh.vertices[mesh.triangles].mean(axis=1)
    fine_verts = np.concatenate([mesh.vertices, mids, centers])

    tris = np.empty((6 * F, 3), dtype=np.int64)
    parent = np.empty((6 * F, 2), dtype=np.int64)
    for t in range(F):
        a, b, c = mesh.triangles[t]
        m_ab = V + mesh.triangle_to_edges[t, 0]
        m_bc = V + mesh.triangle_to_edges[t, 1]
        m_ca = V + mesh.triangle_to_edges[t, 2]
        g = V + E + t
        kids = [
            (a, m_ab, g),
            (m_ab, b, g),
            (b, m_bc, g),
            (m_bc, c, g),
            (c, m_ca, g),
            (m_ca, a, g),
        ]
        for l, kid in enumerate(kids):
            tris[6 * t + l] = kid
            parent[6 * t + l] = (t, l)
    fine = build_mesh(fine_verts, tris, flip_inward=False)
    return RefinedMesh(base=mesh, fine=fine, parent_map=parent)


def save_mesh(mesh: TriangleMesh, path) -> None:
    """Plain-text OFF export."""
    with open(path, "w") as f:
        f.write("OFF\n")
        f.write(f"{mesh.num_vertices} {mesh.num_triangles} 0\n")
        for v in mesh.vertices:
            f.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for t in mesh.triangles:
            f.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def load_mesh(path) -> TriangleMesh:
    """Read an OFF file written by save_mesh (or a plain ASCII OFF)."""
    with open(path) as f:
        tokens = f.read().split()
    if tokens[0] != "OFF":
        raise ValueError("not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    floats = np.array(tokens[4 : 4 + 3 * nv], dtype=float).reshape(nv, 3)
    rest = tokens[4 + 3 * nv :]
    tris = []
    pos = 0
    for _ in range(nf):
        cnt = int(rest[pos])
        if cnt != 3:
            raise ValueError("only triangle faces are supported")
        tris.append([int(rest[pos + 1]), int(rest[pos + 2]), int(rest[pos + 3])])
        pos += 4
    return build_mesh(floats, np.array(tris, dtype=np.int64), flip_inward=False)
