"""Reference values for singular triangle-pair integrals of 1/(4 pi |x-y|).

Independent of the package under test.  The inner integral (potential of a
constant density over a flat triangle, observation point in the same plane)
is evaluated with the closed-form edge-sum formula, validated against a
Duffy-split 1-D quadrature route.  The outer integral is smooth except on
the closure of the source triangle, so it is integrated on slabs graded
geometrically toward the contact set (an edge, a vertex, or all three edges
for the identical pair), with tensor Gauss on each slab.

Cross-checks performed:
  * closed-form potential vs Duffy/quad at 40 points,
  * refinement in both slab count and Gauss degree,
  * identical pair re-derived from the 4-child subdivision identity
    I(T) = 2 * sum of the 12 off-diagonal child-pair integrals
    (children of a midpoint split are similar to T at ratio 1/2, so the
    4 diagonal pairs contribute I/2 exactly for the 1/r kernel).

Run:  python3 tests/oracles/pair_integral_oracle.py
The printed values are frozen into tests/test_quadrature.py and
tests/test_acceptance.py.
"""

import numpy as np
from scipy.integrate import quad

FOUR_PI = 4.0 * np.pi


def potential_exact(P, tri):
    """phi(p) = int_tri 1/|p-y| dA(y) for points P (n, 3) coplanar with tri."""
    P = np.atleast_2d(np.asarray(P, float))
    acc = np.zeros(len(P))
    scale = max(np.linalg.norm(tri[i] - tri[(i + 1) % 3]) for i in range(3))
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        ell = np.linalg.norm(b - a)
        s_hat = (b - a) / ell
        n_hat = np.array([s_hat[1], -s_hat[0], 0.0])  # outward for CCW order
        t0 = (a - P) @ n_hat
        sm = (a - P) @ s_hat
        sp = (b - P) @ s_hat
        rm = np.linalg.norm(a - P, axis=1)
        rp = np.linalg.norm(b - P, axis=1)
        # term = t0 * [ln(R+ + s+) - ln(R- + s-)]; R + s cancels
        # catastrophically for s < 0, so use (R+s)(R-s) = t0^2 (in-plane)
        # to rewrite ln(R+s) = 2 ln|t0| - ln(R-s) there
        on_line = np.abs(t0) < 1e-15 * scale
        with np.errstate(divide="ignore", invalid="ignore"):
            lt0 = np.log(np.maximum(np.abs(t0), 1e-280))
            lnum = np.where(
                sp >= 0.0,
                np.log(np.maximum(rp + sp, 1e-280)),
                2.0 * lt0 - np.log(np.maximum(rp - sp, 1e-280)),
            )
            lden = np.where(
                sm >= 0.0,
                np.log(np.maximum(rm + sm, 1e-280)),
                2.0 * lt0 - np.log(np.maximum(rm - sm, 1e-280)),
            )
            # the edge term vanishes as t0 -> 0 (t ln t); points this close
            # to the edge line are numerically on it
            acc += np.where(on_line, 0.0, t0 * (lnum - lden))
    # CCW gives positive t0 inside; orientation of the input may be CW
    return np.abs(acc)


def potential_duffy(p, tri):
    """Same potential via a vertex split and 1-D quadrature (validation).

    Signed subtriangle areas make the split exact for exterior points too.
    """
    p = np.asarray(p, float)
    acc = 0.0
    for i in range(3):
        a = tri[i] - p
        b = tri[(i + 1) % 3] - p
        area2 = np.cross(a, b)[2]  # signed, CCW positive
        if abs(area2) < 1e-15:
            continue
        val, _ = quad(
            lambda v: 1.0 / np.linalg.norm((1 - v) * a + v * b),
            0.0,
            1.0,
            epsabs=1e-14,
            epsrel=1e-13,
            limit=200,
        )
        acc += area2 * val
    return abs(acc)


def _gauss(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def graded_from_base(tri, f, levels, deg):
    """int_tri f with slabs graded toward the edge (tri[0], tri[1]).

    Coordinates: M(t, s) = (1-t) ((1-s) b0 + s b1) + t apex, Jacobian
    2 area (1-t); slab k covers t in [2^-(k+1), 2^-k].  Within a slab the
    s direction is also graded geometrically toward both endpoints, down to
    the slab height, to resolve the corner boundary layers of the potential.
    """
    b0, b1, apex = tri
    area2 = np.linalg.norm(np.cross(b1 - b0, apex - b0))
    tb = 2.0 ** -np.arange(levels + 1)
    total = 0.0
    for k in range(levels + 1):
        if k < levels:
            t, wt = _gauss(tb[k + 1], tb[k], deg)
        else:
            t, wt = _gauss(0.0, tb[levels], deg)
        breaks = np.unique(
            np.concatenate(
                [
                    [0.0, 1.0],
                    2.0 ** -np.arange(1.0, k + 3.0),
                    1.0 - 2.0 ** -np.arange(1.0, k + 3.0),
                ]
            )
        )
        s_nodes, s_wts = [], []
        for a, b in zip(breaks[:-1], breaks[1:]):
            sn, sw = _gauss(a, b, deg)
            s_nodes.append(sn)
            s_wts.append(sw)
        s = np.concatenate(s_nodes)
        ws = np.concatenate(s_wts)
        T, S = np.meshgrid(t, s, indexing="ij")
        W = np.outer(wt, ws) * (1.0 - T)
        pts = (
            (1.0 - T).ravel()[:, None]
            * ((1.0 - S).ravel()[:, None] * b0 + S.ravel()[:, None] * b1)
            + T.ravel()[:, None] * apex
        )
        total += (W.ravel() * f(pts)).sum()
    return area2 * total


def graded_from_vertex(tri, f, levels, deg):
    """int_tri f with radial slabs graded toward the vertex tri[0]."""
    v0, v1, v2 = tri
    area2 = np.linalg.norm(np.cross(v1 - v0, v2 - v0))
    s, ws = _gauss(0.0, 1.0, deg)
    ub = 2.0 ** -np.arange(levels + 1)
    total = 0.0
    segs = [(ub[k + 1], ub[k]) for k in range(levels)] + [(0.0, ub[levels])]
    for a, b in segs:
        u, wu = _gauss(a, b, deg)
        U, S = np.meshgrid(u, s, indexing="ij")
        W = np.outer(wu, ws) * U
        pts = v0 + U.ravel()[:, None] * (
            (1.0 - S.ravel())[:, None] * (v1 - v0) + S.ravel()[:, None] * (v2 - v0)
        )
        total += (W.ravel() * f(pts)).sum()
    return area2 * total


def pair_integral(T1, T2, levels=45, deg=14):
    """int_{T1} int_{T2} 1/(4 pi |x-y|), coplanar triangles, by contact type."""
    T1 = np.asarray(T1, float)
    T2 = np.asarray(T2, float)
    f = lambda P: potential_exact(P, T2)
    d = np.linalg.norm(T1[:, None, :] - T2[None, :, :], axis=2)
    shared1 = sorted({i for i in range(3) if d[i].min() < 1e-12})
    if len(shared1) == 3:  # identical: split at centroid, grade to each edge
        g = T1.mean(axis=0)
        tot = 0.0
        for i in range(3):
            tot += graded_from_base(
                np.array([T1[i], T1[(i + 1) % 3], g]), f, levels, deg
            )
        return tot / FOUR_PI
    if len(shared1) == 2:  # common edge: grade toward it
        i, j = shared1
        k = 3 - i - j
        return graded_from_base(np.array([T1[i], T1[j], T1[k]]), f, levels, deg) / FOUR_PI
    if len(shared1) == 1:  # common vertex: grade radially toward it
        i = shared1[0]
        return (
            graded_from_vertex(
                np.array([T1[i], T1[(i + 1) % 3], T1[(i + 2) % 3]]), f, levels, deg
            )
            / FOUR_PI
        )
    # disjoint: plain tensor Gauss is plenty
    return graded_from_vertex(T1, f, 8, deg) / FOUR_PI


def children(T):
    a, b, c = T
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    return [
        np.array([a, ab, ca]),
        np.array([ab, b, bc]),
        np.array([ca, bc, c]),
        np.array([ab, bc, ca]),
    ]


T_REF = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
T_EDGE = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.4, -0.9, 0.0]])
T_VERT = np.array([[0.0, 0.0, 0.0], [-1.0, -0.2, 0.0], [-0.3, -1.0, 0.0]])


def main():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        lam = rng.dirichlet([1, 1, 1])
        p = lam @ T_REF
        worst = max(
            worst, abs(potential_exact(p, T_REF)[0] - potential_duffy(p, T_REF))
        )
        p_out = p + np.array([1.7, -0.4, 0.0])
        worst = max(
            worst,
            abs(potential_exact(p_out, T_REF)[0] - potential_duffy(p_out, T_REF)),
        )
    print(f"potential formula vs Duffy/quad, max abs diff: {worst:.3e}", flush=True)

    for name, (A, B) in {
        "identical": (T_REF, T_REF),
        "common_edge": (T_REF, T_EDGE),
        "common_vertex": (T_REF, T_VERT),
    }.items():
        lo = pair_integral(A, B, levels=28, deg=12)
        hi = pair_integral(A, B, levels=34, deg=16)
        print(
            f"{name:14s} {hi:.15f}   (refinement delta {abs(hi - lo):.2e})",
            flush=True,
        )

    kids = children(T_REF)
    off = sum(
        pair_integral(kids[i], kids[j], levels=30, deg=14)
        for i in range(4)
        for j in range(4)
        if i != j
    )
    print(f"identical via subdivision identity: {2 * off:.15f}", flush=True)


if __name__ == "__main__":
    main()
