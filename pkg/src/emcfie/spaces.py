"""Div-conforming surface element spaces.

Two spaces share one representation: every basis function is stored as a
linear combination of the lowest-order Raviart-Thomas (RWG) functions of the
mesh it lives on, held in a sparse dof-by-mesh-edge coefficient matrix.

* RT0 on the primal mesh: the coefficient matrix is the identity.
* The dual space on the barycentric refinement: one function per primal
  edge, supported on the two vertex fans adjacent to that edge, expanded in
  fine-mesh RWG functions.

RWG sign convention: for mesh edge e the "plus" triangle is the adjacent
triangle with the smaller index, and the basis function carries unit normal
flux density from plus to minus across e (zero across its other edges).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import RefinedMesh, TriangleMesh

RT0_PRIMAL = "RT0-primal"
RT0_FINE = "RT0-fine"
BC_DUAL = "BC-dual"


@dataclass(frozen=True)
class BasisSpace:
    """dof_count functions on `mesh`, expanded in that mesh's RWG basis.

    coefficients: CSR (dof_count, mesh.num_edges); rwg_signs[t, k] indicates
    whether triangle t is the plus triangle of its k-th edge.
    """

    kind: str
    mesh: TriangleMesh
    dof_count: int
    coefficients: sp.csr_matrix = field(repr=False)
    rwg_signs: np.ndarray = field(repr=False)

    def support_triangles(self, dof: int) -> np.ndarray:
        """Mesh triangles on which basis function `dof` is nonzero."""
        edges = self.coefficients.indices[
            self.coefficients.indptr[dof] : self.coefficients.indptr[dof + 1]
        ]
        return np.unique(self.mesh.edge_to_triangles[edges])


@dataclass(frozen=True)
class SurfaceDensity:
    """A member of a basis space, given by its coefficient vector."""

    space: BasisSpace
    coefficients: np.ndarray

    def __post_init__(self):
        if len(self.coefficients) != self.space.dof_count:
            raise ValueError(
                f"coefficient length {len(self.coefficients)} != "
                f"space dimension {self.space.dof_count}"
            )


def rwg_plus_signs(mesh: TriangleMesh) -> np.ndarray:
    """(F, 3) int8: +1 where triangle t is the plus (lower-index) triangle
    of its k-th edge, else -1."""
    other = mesh.edge_to_triangles[mesh.triangle_to_edges]  # (F, 3, 2)
    t_ids = np.arange(mesh.num_triangles)[:, None]
    partner = other.sum(axis=2) - t_ids
    return np.where(t_ids < partner, 1, -1).astype(np.int8)


def evaluate_rwg(mesh: TriangleMesh, signs, t: int, k: int, bary):
    """Value and divergence of the k-th local RWG function of triangle t."""
    P = mesh.vertices[mesh.triangles[t]]
    e = mesh.triangle_to_edges[t, k]
    ell = np.linalg.norm(
        mesh.vertices[mesh.edges[e, 0]] - mesh.vertices[mesh.edges[e, 1]]
    )
    A = mesh.areas[t]
    x = np.asarray(bary, dtype=float) @ P
    s = float(signs[t, k])
    return s * ell / (2.0 * A) * (x - P[(k + 2) % 3]), s * ell / A


def build_rt0_space(mesh: TriangleMesh) -> BasisSpace:
    """Lowest-order Raviart-Thomas (RWG) space, one DOF per edge."""
    n = mesh.num_edges
    return BasisSpace(
        kind=RT0_PRIMAL,
        mesh=mesh,
        dof_count=n,
        coefficients=sp.identity(n, format="csr"),
        rwg_signs=rwg_plus_signs(mesh),
    )


def _fine_edge_lookup(fine: TriangleMesh) -> dict:
    return {(int(a), int(b)): i for i, (a, b) in enumerate(fine.edges)}


def _vertex_to_triangles(mesh: TriangleMesh):
    v2t = [[] for _ in range(mesh.num_vertices)]
    for t, tri in enumerate(mesh.triangles):
        for v in tri:
            v2t[v].append(t)
    return v2t


def build_bc_space(refined: RefinedMesh) -> BasisSpace:
    """Dual div-conforming space on the barycentric refinement.

    The function of primal edge e = (v1, v2) carries unit flux from the fan
    of fine triangles around v1 to the fan around v2, crossing through the
    two fine edges (midpoint(e), barycenter) in halves, with divergence
    spread uniformly over each fan (+1/area on the source fan, -1/area on
    the sink) and zero flux through the fan rims.  Those constraints fix
    the fine RWG expansion up to one circulation per fan; the minimum-norm
    solution removes that freedom deterministically.
    """
    base, fine = refined.base, refined.fine
    Vb, Eb = base.num_vertices, base.num_edges
    lookup = _fine_edge_lookup(fine)
    v2t = _vertex_to_triangles(base)
    fine_plus = fine.edge_to_triangles.min(axis=1)
    fine_len = np.linalg.norm(
        fine.vertices[fine.edges[:, 0]] - fine.vertices[fine.edges[:, 1]], axis=1
    )

    def fan(v):
        """Fine triangles around primal vertex v and their primal parents."""
        tris = []
        for t in v2t[v]:
            a, b, c = base.triangles[t]
            local = 0 if a == v else (1 if b == v else 2)
            # children touching corner 0/1/2 of the parent: see mesh layout
            kids = ((0, 5), (1, 2), (3, 4))[local]
            tris += [6 * t + kids[0], 6 * t + kids[1]]
        return tris

    rows, cols, vals = [], [], []
    for e in range(Eb):
        v1, v2 = (int(v) for v in base.edges[e])
        tL, tR = (int(t) for t in base.edge_to_triangles[e])
        fan1, fan2 = fan(v1), fan(v2)
        fans = fan1 + fan2
        area1 = fine.areas[fan1].sum()
        area2 = fine.areas[fan2].sum()
        div_rhs = np.concatenate(
            [
                np.full(len(fan1), 1.0 / area1) * fine.areas[fan1],
                np.full(len(fan2), -1.0 / area2) * fine.areas[fan2],
            ]
        )
        # unknown fluxes: fine edges incident to v1 or v2 (plus->minus sense)
        unknown = {}
        for v in (v1, v2):
            for t in v2t[v]:
                g = Vb + Eb + t
                unknown.setdefault(lookup[tuple(sorted((v, g)))], len(unknown))
            for k in np.flatnonzero((base.edges == v).any(axis=1)):
                m = Vb + k
                unknown.setdefault(lookup[tuple(sorted((v, m)))], len(unknown))
        # crossing edges with fixed flux 1/2 out of fan1
        m_e = Vb + e
        crossing = {}
        for t_adj in (tL, tR):
            g = Vb + Eb + t_adj
            f = lookup[tuple(sorted((m_e, g)))]
            t1, t2 = fine.edge_to_triangles[f]
            fan1_side = int(t1) if int(t1) in fan1 else int(t2)
            crossing[f] = 0.5 if fine_plus[f] == fan1_side else -0.5

        A = np.zeros((len(fans), len(unknown)))
        b = div_rhs.copy()
        for row, tau in enumerate(fans):
            for k in range(3):
                f = int(fine.triangle_to_edges[tau, k])
                s = 1.0 if fine_plus[f] == tau else -1.0
                if f in unknown:
                    A[row, unknown[f]] = s
                elif f in crossing:
                    b[row] -= s * crossing[f]
        x, residual, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.linalg.norm(A @ x - b) > 1e-10 * max(1.0, np.linalg.norm(b)):
            raise RuntimeError(f"dual basis constraints inconsistent at edge {e}")
        for f, j in unknown.items():
            if x[j] != 0.0:
                rows.append(e)
                cols.append(f)
                vals.append(x[j] / fine_len[f])
        for f, fx in crossing.items():
            rows.append(e)
            cols.append(f)
            vals.append(fx / fine_len[f])

    coeff = sp.csr_matrix(
        (vals, (rows, cols)), shape=(Eb, fine.num_edges), dtype=float
    )
    return BasisSpace(
        kind=BC_DUAL,
        mesh=fine,
        dof_count=Eb,
        coefficients=coeff,
        rwg_signs=rwg_plus_signs(fine),
    )


def refine_rt0_space(refined: RefinedMesh) -> BasisSpace:
    """Primal RT0 expanded in fine-mesh RWG functions.

    RT0 functions are linear and div-conforming, so they belong to the fine
    RWG space; coefficients are the fine-edge flux functionals, evaluated
    exactly by the midpoint rule.
    """
    base, fine = refined.base, refined.fine
    signs_base = rwg_plus_signs(base)
    fine_plus = fine.edge_to_triangles.min(axis=1)
    rows, cols, vals = [], [], []
    seen = set()
    for e in range(base.num_edges):
        for t in base.edge_to_triangles[e]:
            k = int(np.flatnonzero(base.triangle_to_edges[t] == e)[0])
            for ft in range(6 * t, 6 * t + 6):
                for kk in range(3):
                    f = int(fine.triangle_to_edges[ft, kk])
                    if (e, f) in seen:
                        continue
                    # the coefficient is the flux density across f in its
                    # plus->minus sense; the surface may fold at f, so the
                    # trace must be taken from the plus side with the plus
                    # triangle's own co-normal
                    if fine_plus[f] // 6 != t:
                        continue  # handled when visiting the plus-side parent
                    seen.add((e, f))
                    mid_bary = np.zeros(3)
                    mid_bary[kk] = 0.5
                    mid_bary[(kk + 1) % 3] = 0.5
                    mid = mid_bary @ fine.vertices[fine.triangles[ft]]
                    lam = _barycentric_in(base, int(t), mid)
                    val, _ = evaluate_rwg(base, signs_base, int(t), k, lam)
                    n_hat = _edge_normal(fine, f, int(fine_plus[f]))
                    c = float(val @ n_hat)
                    if abs(c) > 1e-14:
                        rows.append(e)
                        cols.append(f)
                        vals.append(c)
    coeff = sp.csr_matrix(
        (vals, (rows, cols)), shape=(base.num_edges, fine.num_edges), dtype=float
    )
    coeff.sum_duplicates()
    return BasisSpace(
        kind=RT0_FINE,
        mesh=fine,
        dof_count=base.num_edges,
        coefficients=coeff,
        rwg_signs=rwg_plus_signs(fine),
    )


def _edge_normal(mesh: TriangleMesh, e: int, from_triangle: int) -> np.ndarray:
    """In-plane unit normal of edge e pointing out of `from_triangle`."""
    a, b = mesh.vertices[mesh.edges[e]]
    tangent = b - a
    n = np.cross(tangent, mesh.normals[from_triangle])
    n /= np.linalg.norm(n)
    # orient away from the triangle's interior
    centroid = mesh.vertices[mesh.triangles[from_triangle]].mean(axis=0)
    if np.dot(n, centroid - a) > 0:
        n = -n
    return n


def _barycentric_in(mesh: TriangleMesh, t: int, x) -> np.ndarray:
    P = mesh.vertices[mesh.triangles[t]]
    T = np.stack([P[1] - P[0], P[2] - P[0]], axis=1)
    rhs = np.asarray(x, dtype=float) - P[0]
    sol, *_ = np.linalg.lstsq(T, rhs, rcond=None)
    return np.array([1.0 - sol[0] - sol[1], sol[0], sol[1]])


def evaluate_basis(space: BasisSpace, dof: int, triangle: int, barycentric_point):
    """Value (3-vector in the triangle plane) and surface divergence.

    Returns zeros when the triangle is outside the dof's support.
    """
    row = space.coefficients.getrow(dof)
    cmap = dict(zip(row.indices, row.data))
    val = np.zeros(3)
    div = 0.0
    for k in range(3):
        e = int(space.mesh.triangle_to_edges[triangle, k])
        c = cmap.get(e)
        if c is None:
            continue
        v, d = evaluate_rwg(space.mesh, space.rwg_signs, triangle, k, barycentric_point)
        val += c * v
        div += c * d
    return val, div
