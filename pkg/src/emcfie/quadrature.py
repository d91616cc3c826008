"""Gaussian triangle rules and regularizing rules for singular pair integrals.

Double integrals over triangle pairs with O(1/|x-y|) kernels are computed
with the Sauter-Schwab relative-coordinate transforms.  A pair is classified
as identical, common_edge, common_vertex, or disjoint; the three singular
cases each get a change of variables on the 4-D parameter domain whose
Jacobian cancels the kernel singularity, after which tensor Gauss-Legendre
applies.

Chart convention used throughout: a triangle with vertex rows (A, B, C) is
parameterized by x(s, t) = A + s (B - A) + t (C - B) over the reference
domain {0 <= t <= s <= 1}, so dS = 2 area(T) ds dt and the barycentric
coordinates are (1 - s, s - t, t).

Canonical vertex order expected by the singular rules:
  identical      T2 is T1 with the same vertex order
  common_edge    T1[0] = T2[0] and T1[1] = T2[1] span the shared edge
  common_vertex  T1[0] = T2[0] is the shared vertex
`canonicalize_pair` rewrites an arbitrary adjacent pair into this form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IDENTICAL = "identical"
COMMON_EDGE = "common_edge"
COMMON_VERTEX = "common_vertex"
DISJOINT = "disjoint"

# Integer codes for the jit-compiled assembly loops.
CASE_CODES = {DISJOINT: 0, COMMON_VERTEX: 1, COMMON_EDGE: 2, IDENTICAL: 3}


@dataclass(frozen=True)
class TriangleRule:
    """Symmetric Gauss rule on the reference triangle.

    points: (n, 3) barycentric coordinates; weights: (n,), summing to 1/2
    (the reference-triangle area), so that integral = 2*area(T) * sum w f.
    """

    order: int
    points: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class PairRule:
    """Quadrature for a double integral over a triangle pair.

    integral = (2 area(T1)) * (2 area(T2)) * sum_q w_q k(x(b1_q), y(b2_q)).
    """

    case: str
    bary1: np.ndarray
    bary2: np.ndarray
    weights: np.ndarray


def _gauss01(n: int):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


# Symmetric rules by total polynomial degree.  The 6-point rule is used for
# degrees 3-4 and the 7-point rule for degree 5; higher degrees fall back to
# a collapsed (Duffy) tensor rule, which keeps all weights positive.
_ORBIT_RULES = {
    1: [((1 / 3, 1 / 3, 1 / 3), 0.5)],
    2: [
        ((2 / 3, 1 / 6, 1 / 6), 1 / 6),
        ((1 / 6, 2 / 3, 1 / 6), 1 / 6),
        ((1 / 6, 1 / 6, 2 / 3), 1 / 6),
    ],
}


def _orbit3(a, w):
    b = 1.0 - 2.0 * a
    return [((b, a, a), w), ((a, b, a), w), ((a, a, b), w)]


_ORBIT_RULES[4] = _orbit3(0.445948490915965, 0.111690794839006) + _orbit3(
    0.091576213509771, 0.054975871827661
)
_ORBIT_RULES[3] = _ORBIT_RULES[4]
_ORBIT_RULES[5] = (
    [((1 / 3, 1 / 3, 1 / 3), 0.1125)]
    + _orbit3(0.470142064105115, 0.066197076394253)
    + _orbit3(0.101286507323456, 0.062969590272413)
)


def gauss_triangle_rule(order: int) -> TriangleRule:
    """Rule exact for polynomials of total degree `order`, 1 <= order <= 10."""
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= 10:
        raise ValueError(f"unsupported triangle rule order {order!r}")
    if order in _ORBIT_RULES:
        pts = np.array([p for p, _ in _ORBIT_RULES[order]], dtype=float)
        wts = np.array([w for _, w in _ORBIT_RULES[order]], dtype=float)
        return TriangleRule(order, pts, wts)
    # Collapsed tensor rule: (u, v) in [0,1]^2 -> lambda = (1-u, u(1-v), uv),
    # Jacobian u; exact for degree d when 2n-1 >= d+1.
    n = (order + 3) // 2
    u, wu = _gauss01(n)
    v, wv = _gauss01(n)
    U, V = np.meshgrid(u, v, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    lam = np.stack(
        [1.0 - U.ravel(), (U * (1.0 - V)).ravel(), (U * V).ravel()], axis=1
    )
    wts = (WU * WV * U).ravel()
    return TriangleRule(order, lam, wts)


def _chart_to_bary(s, t):
    return np.stack([1.0 - s, s - t, t], axis=1)


def _ss_terms(case: str, xi, e1, e2, e3):
    """Sauter-Schwab subdomain maps: list of (x_s, x_t, y_s, y_t, jacobian)."""
    if case == IDENTICAL:
        j = xi**3 * e1**2 * e2
        a = xi * (1.0 - e1 + e1 * e2)
        b = xi * (1.0 - e1 * e2 * e3)
        c = xi * (1.0 - e1)
        d = xi * e1 * (1.0 - e2 + e2 * e3)
        f = xi * (1.0 - e1 * e2)
        g = xi * e1 * (1.0 - e2)
        p = xi * (1.0 - e1 * e2 * e3)
        q = xi * e1 * (1.0 - e2 * e3)
        return [
            (xi, a, b, c, j),
            (b, c, xi, a, j),
            (xi, d, f, g, j),
            (f, g, xi, d, j),
            (p, q, xi, g, j),
            (xi, g, p, q, j),
        ]
    if case == COMMON_EDGE:
        j1 = xi**3 * e1**2
        j = j1 * e2
        return [
            (xi, xi * e1 * e3, xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), j1),
            (xi, xi * e1, xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3), j),
            (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), xi, xi * e1 * e2 * e3, j),
            (xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3), xi, xi * e1, j),
            (xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3), xi, xi * e1 * e2, j),
        ]
    if case == COMMON_VERTEX:
        j = xi**3 * e2
        return [
            (xi, xi * e1, xi * e2, xi * e2 * e3, j),
            (xi * e2, xi * e2 * e3, xi, xi * e1, j),
        ]
    raise ValueError(f"no singular transform for case {case!r}")


def pair_rule(case: str, order: int) -> PairRule:
    """Quadrature nodes for a pair integral.

    For the singular cases `order` is the Gauss-Legendre point count per
    axis of the 4-D transformed integral; for `disjoint` it is the triangle
    rule degree applied to each factor.
    """
    if case == DISJOINT:
        r = gauss_triangle_rule(min(int(order), 10))
        n = len(r.weights)
        i, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        return PairRule(
            case,
            r.points[i.ravel()],
            r.points[k.ravel()],
            (r.weights[i] * r.weights[k]).ravel(),
        )
    if not 1 <= int(order) <= 30:
        raise ValueError(f"unsupported singular order {order!r}")
    g, gw = _gauss01(int(order))
    XI, E1, E2, E3 = np.meshgrid(g, g, g, g, indexing="ij")
    W = np.ones((order,) * 4)
    for axis, wv in enumerate([gw, gw, gw, gw]):
        shape = [1, 1, 1, 1]
        shape[axis] = order
        W = W * wv.reshape(shape)
    xi, e1, e2, e3, w4 = (a.ravel() for a in (XI, E1, E2, E3, W))
    b1, b2, wts = [], [], []
    for xs, xt, ys, yt, jac in _ss_terms(case, xi, e1, e2, e3):
        b1.append(_chart_to_bary(xs, xt))
        b2.append(_chart_to_bary(ys, yt))
        wts.append(w4 * jac)
    return PairRule(
        case, np.concatenate(b1), np.concatenate(b2), np.concatenate(wts)
    )


def triangle_area(T) -> float:
    T = np.asarray(T, dtype=float)
    return 0.5 * float(
        np.linalg.norm(np.cross(T[1] - T[0], T[2] - T[0]))
    )


def classify_pair(T1, T2, tol: float | None = None) -> str:
    """Classify a pair of triangles by coordinate matching.

    Triangles are (3, 3) arrays of vertex coordinates.  Vertices closer than
    `tol` (default 1e-12 times the mean diameter) are considered shared.
    """
    T1 = np.asarray(T1, dtype=float)
    T2 = np.asarray(T2, dtype=float)
    if tol is None:
        diam = 0.5 * (_diameter(T1) + _diameter(T2))
        tol = 1e-12 * max(diam, 1.0)
    d = np.linalg.norm(T1[:, None, :] - T2[None, :, :], axis=2)
    hits = d < tol
    if hits.sum(axis=1).max(initial=0) > 1 or hits.sum(axis=0).max(initial=0) > 1:
        raise ValueError("inconsistent adjacency: a vertex matches more than once")
    n = int(hits.sum())
    return (DISJOINT, COMMON_VERTEX, COMMON_EDGE, IDENTICAL)[n]


def _diameter(T):
    return max(
        np.linalg.norm(T[1] - T[0]),
        np.linalg.norm(T[2] - T[1]),
        np.linalg.norm(T[0] - T[2]),
    )


def canonicalize_pair(T1, T2, tol: float | None = None):
    """Reorder vertices so an adjacent pair meets the singular-rule layout.

    Returns (case, T1c, T2c, perm1, perm2) with T1c[i] = T1[perm1[i]].
    """
    T1 = np.asarray(T1, dtype=float)
    T2 = np.asarray(T2, dtype=float)
    case = classify_pair(T1, T2, tol)
    if tol is None:
        diam = 0.5 * (_diameter(T1) + _diameter(T2))
        tol = 1e-12 * max(diam, 1.0)
    d = np.linalg.norm(T1[:, None, :] - T2[None, :, :], axis=2)
    pairs = [(i, j) for i in range(3) for j in range(3) if d[i, j] < tol]
    if case == DISJOINT or case == IDENTICAL:
        p1 = (0, 1, 2)
        p2 = (0, 1, 2) if case == DISJOINT else tuple(
            j for i in range(3) for (ii, j) in pairs if ii == i
        )
    elif case == COMMON_EDGE:
        (i0, j0), (i1, j1) = pairs
        p1 = (i0, i1, 3 - i0 - i1)
        p2 = (j0, j1, 3 - j0 - j1)
    else:
        (i0, j0) = pairs[0]
        p1 = (i0, (i0 + 1) % 3, (i0 + 2) % 3)
        p2 = (j0, (j0 + 1) % 3, (j0 + 2) % 3)
    return case, T1[list(p1)], T2[list(p2)], p1, p2


def integrate_pair(kernel, T1, T2, case: str, order: int) -> complex:
    """Integral of kernel(x, y) over T1 x T2.

    For the singular cases the triangles must already be in canonical vertex
    order (see module docstring); `canonicalize_pair` produces it.
    """
    T1 = np.asarray(T1, dtype=float)
    T2 = np.asarray(T2, dtype=float)
    rule = pair_rule(case, order)
    X = rule.bary1 @ T1
    Y = rule.bary2 @ T2
    acc = 0.0 + 0.0j
    for q in range(len(rule.weights)):
        v = complex(kernel(X[q], Y[q]))
        if not np.isfinite(v.real) or not np.isfinite(v.imag):
            raise FloatingPointError(
                f"non-finite kernel value at node {q} of case {case}"
            )
        acc += rule.weights[q] * v
    return 4.0 * triangle_area(T1) * triangle_area(T2) * acc
