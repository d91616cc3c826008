"""Dense Galerkin assembly of the boundary-operator matrices.

Pairing matrices (the mixed dual/primal Gram and the same-space pairings)
use the twisted duality form  int_Gamma (v x n) . u ds.  Layer operators
use the plain kernel weak forms

    [A_sigma]_mn = iint G_sigma(x,y)  u_m(x) . u_n(y)         ds(y) ds(x),
    [V_sigma]_mn = iint G_sigma(x,y)  div u_m(x) div u_n(y)   ds(y) ds(x),
    [C_sigma]_mn = iint u_m(x) . (grad_x G_sigma(x,y) x u_n(y)),

with the relative sign in S = A - (1/sigma^2) V fixed so that the Yukawa
single-layer matrix is symmetric positive definite; the definiteness tests
double as the sign-convention gate.

Separated pairs use distance-graded tensor Gauss rules; touching pairs use
the regularizing coordinate transforms (valid changes of variables for the
smooth difference kernels as well, so one code path serves every kernel).
Identical-pair double-layer contributions vanish for flat triangles and are
skipped.  Assembly walks ordered pairs (t <= t') and scatters the transposed
block for t' > t, which realizes the reciprocity symmetry of A, V and C
exactly.  Loops are serial and orders are fixed; reruns are bit-identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp

from . import kernels as K
from .quadrature import (
    COMMON_EDGE,
    COMMON_VERTEX,
    DISJOINT,
    IDENTICAL,
    pair_rule,
)
from .spaces import BasisSpace

# Centroid-distance grading, in units of the larger triangle diameter.
NEAR_FACTOR = 2.0
MID_FACTOR = 8.0

MATRIX_MAGIC = b"CDM1"


@dataclass(frozen=True)
class QuadratureConfig:
    """regular_order: tensor Gauss degree for separated pairs (the grading
    uses regular_order +/- 1 by distance band); singular_order: points per
    axis in the regularizing transforms for touching pairs."""

    regular_order: int = 3
    singular_order: int = 5

    def __post_init__(self):
        if not 2 <= self.regular_order <= 9:
            raise ValueError(f"regular_order {self.regular_order} not in 2..9")
        if not 2 <= self.singular_order <= 30:
            raise ValueError(
                f"singular_order {self.singular_order} not in 2..30"
            )


def _rule_bank(regular_order: int, singular_order: int):
    """Pack the six pair rules (far/mid/near tensor, vertex/edge/identical
    transforms) into flat arrays for the jit pass."""
    rules = [
        pair_rule(DISJOINT, max(2, regular_order - 1)),
        pair_rule(DISJOINT, regular_order),
        pair_rule(DISJOINT, min(10, regular_order + 1)),
        pair_rule(COMMON_VERTEX, singular_order),
        pair_rule(COMMON_EDGE, singular_order),
        pair_rule(IDENTICAL, singular_order),
    ]
    off = np.zeros(len(rules) + 1, dtype=np.int64)
    for i, r in enumerate(rules):
        off[i + 1] = off[i] + len(r.weights)
    w = np.concatenate([r.weights for r in rules])
    b1 = np.concatenate([r.bary1 for r in rules])
    b2 = np.concatenate([r.bary2 for r in rules])
    return off, w, b1, b2


def _triangle_maps(space: BasisSpace):
    """Per-triangle compressed dof map: for triangle t the slice
    indptr[t]:indptr[t+1] lists (dof, 3-vector of coefficients against the
    triangle's local RWG functions)."""
    csc = sp.csc_matrix(space.coefficients)
    t2e = space.mesh.triangle_to_edges
    indptr = [0]
    dofs: list[int] = []
    coefs: list[np.ndarray] = []
    for t in range(space.mesh.num_triangles):
        local: dict[int, np.ndarray] = {}
        for k in range(3):
            e = int(t2e[t, k])
            for i in range(csc.indptr[e], csc.indptr[e + 1]):
                d = int(csc.indices[i])
                local.setdefault(d, np.zeros(3))[k] = csc.data[i]
        for d in sorted(local):
            dofs.append(d)
            coefs.append(local[d])
        indptr.append(len(dofs))
    return (
        np.asarray(indptr, dtype=np.int64),
        np.asarray(dofs, dtype=np.int64),
        np.asarray(coefs, dtype=np.float64).reshape(len(dofs), 3),
    )


@numba.njit(cache=True)
def _pair_pass(
    vertices,
    triangles,
    tri_edges,
    edge_lengths,
    signs,
    areas,
    centroids,
    diameters,
    kind,
    kappa,
    kappa_prime,
    want_a,
    want_v,
    want_c,
    bank_off,
    bank_w,
    bank_b1,
    bank_b2,
    tp_indptr,
    tp_dofs,
    tp_coefs,
    tq_indptr,
    tq_dofs,
    tq_coefs,
    out_a,
    out_v,
    out_c,
):
    F = triangles.shape[0]
    p1 = np.empty(3, np.int64)
    p2 = np.empty(3, np.int64)
    e1 = np.empty(3, np.int64)
    e2 = np.empty(3, np.int64)
    x1 = np.empty((3, 3), np.float64)
    x2 = np.empty((3, 3), np.float64)
    accx = np.empty(3, np.complex128)
    accy = np.empty(3, np.complex128)
    lc = np.empty((3, 3), np.complex128)
    la = np.empty((3, 3), np.complex128)
    lv = np.empty((3, 3), np.complex128)
    for t in range(F):
        for u in range(t, F):
            # classify by shared vertex indices and build the canonical
            # vertex orders expected by the singular transforms
            if u == t:
                case = 3
                for i in range(3):
                    p1[i] = i
                    p2[i] = i
            else:
                ns = 0
                ia0 = ia1 = ja0 = ja1 = -1
                for i in range(3):
                    vi = triangles[t, i]
                    for j in range(3):
                        if vi == triangles[u, j]:
                            if ns == 0:
                                ia0 = i
                                ja0 = j
                            else:
                                ia1 = i
                                ja1 = j
                            ns += 1
                if ns == 2:
                    case = 2
                    p1[0] = ia0
                    p1[1] = ia1
                    p1[2] = 3 - ia0 - ia1
                    p2[0] = ja0
                    p2[1] = ja1
                    p2[2] = 3 - ja0 - ja1
                elif ns == 1:
                    case = 1
                    for i in range(3):
                        p1[i] = (ia0 + i) % 3
                        p2[i] = (ja0 + i) % 3
                else:
                    case = 0
                    for i in range(3):
                        p1[i] = i
                        p2[i] = i
            if case == 0:
                dx = centroids[t, 0] - centroids[u, 0]
                dy = centroids[t, 1] - centroids[u, 1]
                dz = centroids[t, 2] - centroids[u, 2]
                d = np.sqrt(dx * dx + dy * dy + dz * dz)
                dm = max(diameters[t], diameters[u])
                if d < NEAR_FACTOR * dm:
                    rid = 2
                elif d < MID_FACTOR * dm:
                    rid = 1
                else:
                    rid = 0
            else:
                rid = case + 2
            do_c = want_c and case != 3

            for i in range(3):
                for d3 in range(3):
                    x1[i, d3] = vertices[triangles[t, p1[i]], d3]
                    x2[i, d3] = vertices[triangles[u, p2[i]], d3]

            acc1 = 0.0 + 0.0j
            accxy = 0.0 + 0.0j
            for i in range(3):
                accx[i] = 0.0
                accy[i] = 0.0
            for i in range(3):
                for j in range(3):
                    lc[i, j] = 0.0
            for q in range(bank_off[rid], bank_off[rid + 1]):
                w = bank_w[q]
                xq0 = (
                    bank_b1[q, 0] * x1[0, 0]
                    + bank_b1[q, 1] * x1[1, 0]
                    + bank_b1[q, 2] * x1[2, 0]
                )
                xq1 = (
                    bank_b1[q, 0] * x1[0, 1]
                    + bank_b1[q, 1] * x1[1, 1]
                    + bank_b1[q, 2] * x1[2, 1]
                )
                xq2 = (
                    bank_b1[q, 0] * x1[0, 2]
                    + bank_b1[q, 1] * x1[1, 2]
                    + bank_b1[q, 2] * x1[2, 2]
                )
                yq0 = (
                    bank_b2[q, 0] * x2[0, 0]
                    + bank_b2[q, 1] * x2[1, 0]
                    + bank_b2[q, 2] * x2[2, 0]
                )
                yq1 = (
                    bank_b2[q, 0] * x2[0, 1]
                    + bank_b2[q, 1] * x2[1, 1]
                    + bank_b2[q, 2] * x2[2, 1]
                )
                yq2 = (
                    bank_b2[q, 0] * x2[0, 2]
                    + bank_b2[q, 1] * x2[1, 2]
                    + bank_b2[q, 2] * x2[2, 2]
                )
                r0 = xq0 - yq0
                r1 = xq1 - yq1
                r2 = xq2 - yq2
                r = np.sqrt(r0 * r0 + r1 * r1 + r2 * r2)
                if want_a or want_v:
                    g = w * K.scalar_kernel(kind, kappa, kappa_prime, r)
                    acc1 += g
                    if want_a:
                        accxy += g * (xq0 * yq0 + xq1 * yq1 + xq2 * yq2)
                        accx[0] += g * xq0
                        accx[1] += g * xq1
                        accx[2] += g * xq2
                        accy[0] += g * yq0
                        accy[1] += g * yq1
                        accy[2] += g * yq2
                if do_c:
                    gs = w * K.gradient_kernel_scalar(kind, kappa, kappa_prime, r)
                    for l in range(3):
                        # b_l = y - opposite vertex (permuted frame)
                        b0 = yq0 - x2[(l + 2) % 3, 0]
                        b1v = yq1 - x2[(l + 2) % 3, 1]
                        b2v = yq2 - x2[(l + 2) % 3, 2]
                        c0 = r1 * b2v - r2 * b1v
                        c1 = r2 * b0 - r0 * b2v
                        c2 = r0 * b1v - r1 * b0
                        for k in range(3):
                            a0 = xq0 - x1[(k + 2) % 3, 0]
                            a1 = xq1 - x1[(k + 2) % 3, 1]
                            a2 = xq2 - x1[(k + 2) % 3, 2]
                            lc[k, l] += gs * (a0 * c0 + a1 * c1 + a2 * c2)

            jac = 4.0 * areas[t] * areas[u]
            # original local indices of the permuted local edges; local edge
            # (a, b) by vertex positions is 0/1/2 for a+b = 1/3/2
            for kh in range(3):
                s = p1[kh] + p1[(kh + 1) % 3]
                e1[kh] = 0 if s == 1 else (1 if s == 3 else 2)
                s = p2[kh] + p2[(kh + 1) % 3]
                e2[kh] = 0 if s == 1 else (1 if s == 3 else 2)
            for kh in range(3):
                k0 = e1[kh]
                sc1 = (
                    signs[t, k0]
                    * edge_lengths[tri_edges[t, k0]]
                    / (2.0 * areas[t])
                )
                for lh in range(3):
                    l0 = e2[lh]
                    sc2 = (
                        signs[u, l0]
                        * edge_lengths[tri_edges[u, l0]]
                        / (2.0 * areas[u])
                    )
                    if want_a:
                        od = 0.0
                        xo = 0.0 + 0.0j
                        oy = 0.0 + 0.0j
                        for d3 in range(3):
                            od += x1[(kh + 2) % 3, d3] * x2[(lh + 2) % 3, d3]
                            xo += accx[d3] * x2[(lh + 2) % 3, d3]
                            oy += x1[(kh + 2) % 3, d3] * accy[d3]
                        la[k0, l0] = jac * sc1 * sc2 * (accxy - xo - oy + od * acc1)
                    if want_v:
                        lv[k0, l0] = jac * (4.0 * sc1 * sc2) * acc1
                    if want_c:
                        lc[kh, lh] = jac * sc1 * sc2 * lc[kh, lh]
            # scatter rows from test map of t, cols from trial map of u;
            # for u > t also the transposed block (reciprocity)
            for ii in range(tp_indptr[t], tp_indptr[t + 1]):
                m = tp_dofs[ii]
                for jj in range(tq_indptr[u], tq_indptr[u + 1]):
                    n = tq_dofs[jj]
                    va = 0.0 + 0.0j
                    vv = 0.0 + 0.0j
                    vc = 0.0 + 0.0j
                    for kh in range(3):
                        k0 = e1[kh]
                        cm = tp_coefs[ii, k0]
                        if cm == 0.0:
                            continue
                        for lh in range(3):
                            l0 = e2[lh]
                            cn = tq_coefs[jj, l0]
                            if cn == 0.0:
                                continue
                            if want_a:
                                va += cm * cn * la[k0, l0]
                            if want_v:
                                vv += cm * cn * lv[k0, l0]
                            if want_c:
                                vc += cm * cn * lc[kh, lh]
                    if want_a:
                        out_a[m, n] += va
                    if want_v:
                        out_v[m, n] += vv
                    if want_c:
                        out_c[m, n] += vc
            if u != t:
                for ii in range(tp_indptr[u], tp_indptr[u + 1]):
                    m = tp_dofs[ii]
                    for jj in range(tq_indptr[t], tq_indptr[t + 1]):
                        n = tq_dofs[jj]
                        va = 0.0 + 0.0j
                        vv = 0.0 + 0.0j
                        vc = 0.0 + 0.0j
                        for lh in range(3):
                            l0 = e2[lh]
                            cm = tp_coefs[ii, l0]
                            if cm == 0.0:
                                continue
                            for kh in range(3):
                                k0 = e1[kh]
                                cn = tq_coefs[jj, k0]
                                if cn == 0.0:
                                    continue
                                if want_a:
                                    va += cm * cn * la[k0, l0]
                                if want_v:
                                    vv += cm * cn * lv[k0, l0]
                                if want_c:
                                    vc += cm * cn * lc[kh, lh]
                        if want_a:
                            out_a[m, n] += va
                        if want_v:
                            out_v[m, n] += vv
                        if want_c:
                            out_c[m, n] += vc


@numba.njit(cache=True)
def _pairing_pass(
    vertices,
    triangles,
    tri_edges,
    edge_lengths,
    signs,
    areas,
    normals,
    twisted,
    rule_b,
    rule_w,
    tp_indptr,
    tp_dofs,
    tp_coefs,
    tq_indptr,
    tq_dofs,
    tq_coefs,
    out,
):
    F = triangles.shape[0]
    loc = np.empty((3, 3), np.float64)
    vals = np.empty((3, 3), np.float64)
    for t in range(F):
        for i in range(3):
            for j in range(3):
                loc[i, j] = 0.0
        for q in range(rule_w.shape[0]):
            for k in range(3):
                sc = (
                    signs[t, k]
                    * edge_lengths[tri_edges[t, k]]
                    / (2.0 * areas[t])
                )
                for d3 in range(3):
                    xq = (
                        rule_b[q, 0] * vertices[triangles[t, 0], d3]
                        + rule_b[q, 1] * vertices[triangles[t, 1], d3]
                        + rule_b[q, 2] * vertices[triangles[t, 2], d3]
                    )
                    vals[k, d3] = sc * (
                        xq - vertices[triangles[t, (k + 2) % 3], d3]
                    )
            for k in range(3):
                if twisted:
                    c0 = vals[k, 1] * normals[t, 2] - vals[k, 2] * normals[t, 1]
                    c1 = vals[k, 2] * normals[t, 0] - vals[k, 0] * normals[t, 2]
                    c2 = vals[k, 0] * normals[t, 1] - vals[k, 1] * normals[t, 0]
                else:
                    c0 = vals[k, 0]
                    c1 = vals[k, 1]
                    c2 = vals[k, 2]
                for l in range(3):
                    loc[k, l] += rule_w[q] * (
                        c0 * vals[l, 0] + c1 * vals[l, 1] + c2 * vals[l, 2]
                    )
        for ii in range(tp_indptr[t], tp_indptr[t + 1]):
            m = tp_dofs[ii]
            for jj in range(tq_indptr[t], tq_indptr[t + 1]):
                n = tq_dofs[jj]
                v = 0.0
                for k in range(3):
                    cm = tp_coefs[ii, k]
                    if cm == 0.0:
                        continue
                    for l in range(3):
                        v += cm * tq_coefs[jj, l] * loc[k, l]
                out[m, n] += 2.0 * areas[t] * v


def _mesh_arrays(mesh):
    edge_lengths = np.linalg.norm(
        mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]],
        axis=1,
    )
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    diameters = edge_lengths[mesh.triangle_to_edges].max(axis=1)
    return edge_lengths, centroids, diameters


def _layer_matrices(
    test: BasisSpace,
    trial: BasisSpace,
    kind: int,
    kappa: float,
    kappa_prime: float,
    quad: QuadratureConfig,
    want_a: bool,
    want_v: bool,
    want_c: bool,
):
    """Fused assembly of the requested weak forms in one pass over pairs."""
    mesh = test.mesh
    if trial.mesh is not mesh:
        raise ValueError("test and trial spaces must live on the same mesh")
    edge_lengths, centroids, diameters = _mesh_arrays(mesh)
    regular = quad.regular_order
    if max(kappa, kappa_prime) * diameters.max() > 2.0:
        regular = min(10, regular + 1)
    bank_off, bank_w, bank_b1, bank_b2 = _rule_bank(
        regular, quad.singular_order
    )
    tp = _triangle_maps(test)
    tq = _triangle_maps(trial) if trial is not test else tp
    shape = (test.dof_count, trial.dof_count)
    dummy = np.zeros((1, 1), dtype=np.complex128)
    out_a = np.zeros(shape, dtype=np.complex128) if want_a else dummy
    out_v = np.zeros(shape, dtype=np.complex128) if want_v else dummy
    out_c = np.zeros(shape, dtype=np.complex128) if want_c else dummy
    _pair_pass(
        mesh.vertices,
        mesh.triangles.astype(np.int64),
        mesh.triangle_to_edges.astype(np.int64),
        edge_lengths,
        test.rwg_signs.astype(np.float64),
        mesh.areas,
        centroids,
        diameters,
        kind,
        float(kappa),
        float(kappa_prime),
        want_a,
        want_v,
        want_c,
        bank_off,
        bank_w,
        bank_b1,
        bank_b2,
        *tp,
        *tq,
        out_a,
        out_v,
        out_c,
    )
    if not np.isfinite(out_a).all() or not np.isfinite(out_v).all():
        raise FloatingPointError("non-finite entries in assembled matrix")
    if want_c and not np.isfinite(out_c).all():
        raise FloatingPointError("non-finite entries in assembled matrix")
    return (
        out_a if want_a else None,
        out_v if want_v else None,
        out_c if want_c else None,
    )


def _kernel_of_sigma(sigma):
    """Map a wavenumber argument sigma (positive real kappa, or i kappa')
    to the kernel id and (kappa, kappa') parameters."""
    s = complex(sigma)
    if s.imag == 0.0 and s.real > 0.0:
        return K.KERNEL_HELMHOLTZ, s.real, 0.0
    if s.real == 0.0 and s.imag > 0.0:
        return K.KERNEL_YUKAWA, 0.0, s.imag
    raise ValueError(
        f"sigma must be positive real or positive imaginary, got {sigma!r}"
    )


def assemble_vector_single_layer(sigma, test, trial, quad=None):
    """Weak vector single layer [A_sigma]."""
    quad = quad or QuadratureConfig()
    kind, kappa, kp = _kernel_of_sigma(sigma)
    a, _, _ = _layer_matrices(
        test, trial, kind, kappa, kp, quad, True, False, False
    )
    return a


def assemble_scalar_single_layer(sigma, test_div, trial_div, quad=None):
    """Weak scalar single layer on surface divergences [V_sigma]."""
    quad = quad or QuadratureConfig()
    kind, kappa, kp = _kernel_of_sigma(sigma)
    _, v, _ = _layer_matrices(
        test_div, trial_div, kind, kappa, kp, quad, False, True, False
    )
    return v


def assemble_S(sigma, test, trial, quad=None):
    """Single-layer EFIE matrix [S_sigma] = [A_sigma] - (1/sigma^2)[V_sigma].

    For sigma = i kappa' the divergence block enters with +1/kappa'^2 and
    the matrix is real symmetric positive definite.
    """
    quad = quad or QuadratureConfig()
    kind, kappa, kp = _kernel_of_sigma(sigma)
    a, v, _ = _layer_matrices(
        test, trial, kind, kappa, kp, quad, True, True, False
    )
    return a - v / complex(sigma) ** 2


def assemble_C(sigma, test, trial, quad=None):
    """Double-layer (MFIE) matrix [C_sigma]; the principal value is realized
    by the vanishing identical-pair contribution on flat triangles."""
    quad = quad or QuadratureConfig()
    kind, kappa, kp = _kernel_of_sigma(sigma)
    _, _, c = _layer_matrices(
        test, trial, kind, kappa, kp, quad, False, False, True
    )
    return c


def _overlap_matrix(test, trial, twisted):
    mesh = test.mesh
    if trial.mesh is not mesh:
        raise ValueError("test and trial spaces must live on the same mesh")
    from .quadrature import gauss_triangle_rule

    rule = gauss_triangle_rule(2)
    edge_lengths, _, _ = _mesh_arrays(mesh)
    tp = _triangle_maps(test)
    tq = _triangle_maps(trial) if trial is not test else tp
    out = np.zeros((test.dof_count, trial.dof_count), dtype=np.float64)
    _pairing_pass(
        mesh.vertices,
        mesh.triangles.astype(np.int64),
        mesh.triangle_to_edges.astype(np.int64),
        edge_lengths,
        test.rwg_signs.astype(np.float64),
        mesh.areas,
        mesh.normals,
        twisted,
        rule.points,
        rule.weights,
        *tp,
        *tq,
        out,
    )
    return out.astype(np.complex128)


def assemble_gram(test, trial):
    """Twisted pairing matrix, entry (m,n) = int (v_m x n) . u_n ds.

    Used for the mixed dual/primal Gram G and the same-space pairings; the
    integrand is quadratic per triangle, so a degree-2 rule is exact.
    """
    return _overlap_matrix(test, trial, True)


def assemble_mass(test, trial):
    """Plain L2 mass matrix, entry (m,n) = int v_m . u_n ds.

    The consistent sandwich for composing the plain-dot layer matrices,
    e.g. in the discrete Calderon residual.
    """
    return _overlap_matrix(test, trial, False)


def assemble_M(kappa, kappa_prime, eta, test, trial, quad=None):
    """Elliptic core matrix on the primal space,

        M = (kappa'^2 + i eta) [A_{i kappa'}] + (1 - i eta/kappa^2) [V_{i kappa'}].

    The real part of the quadratic form is positive definite for eta != 0.
    """
    if eta == 0.0:
        raise ValueError("coupling parameter eta must be nonzero")
    quad = quad or QuadratureConfig()
    a, v, _ = _layer_matrices(
        test,
        trial,
        K.KERNEL_YUKAWA,
        float(kappa),
        float(kappa_prime),
        quad,
        True,
        True,
        False,
    )
    return (kappa_prime**2 + 1j * eta) * a + (1.0 - 1j * eta / kappa**2) * v


def assemble_Z(kappa, kappa_prime, eta, test, trial, quad=None):
    """Difference-kernel correction Z = i eta ([dA] - (1/kappa^2)[dV]) with
    the Taylor-guarded kernel G_kappa - G_{i kappa'}; no pair is singular."""
    if eta == 0.0:
        raise ValueError("coupling parameter eta must be nonzero")
    quad = quad or QuadratureConfig()
    a, v, _ = _layer_matrices(
        test,
        trial,
        K.KERNEL_DIFFERENCE,
        float(kappa),
        float(kappa_prime),
        quad,
        True,
        True,
        False,
    )
    return 1j * eta * (a - v / kappa**2)


def assemble_K(kappa_prime, test, trial, quad=None):
    """Shifted double layer K = (1/2) pairing + [C_{i kappa'}], real."""
    quad = quad or QuadratureConfig()
    c = assemble_C(1j * float(kappa_prime), test, trial, quad)
    return 0.5 * assemble_gram(test, trial) + c


def assemble_C_delta(kappa, kappa_prime, test, trial, quad=None):
    """Difference double layer with kernel grad(G_kappa - G_{i kappa'})."""
    quad = quad or QuadratureConfig()
    _, _, c = _layer_matrices(
        test,
        trial,
        K.KERNEL_DIFFERENCE,
        float(kappa),
        float(kappa_prime),
        quad,
        False,
        False,
        True,
    )
    return c


def save_matrix(path, matrix):
    """Binary dump: magic, int64 rows/cols, row-major interleaved re/im
    doubles, all little-endian."""
    m = np.ascontiguousarray(np.asarray(matrix, dtype=np.complex128))
    with open(path, "wb") as f:
        f.write(MATRIX_MAGIC)
        f.write(struct.pack("<qq", m.shape[0], m.shape[1]))
        f.write(m.astype("<c16").tobytes())


def load_matrix(path):
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MATRIX_MAGIC:
            raise ValueError(f"bad matrix file magic {magic!r}")
        rows, cols = struct.unpack("<qq", f.read(16))
        data = np.frombuffer(f.read(rows * cols * 16), dtype="<c16")
    if data.size != rows * cols:
        raise ValueError("truncated matrix file")
    return data.reshape(rows, cols).astype(np.complex128)

