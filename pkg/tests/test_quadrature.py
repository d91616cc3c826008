"""Triangle rules and singular pair quadrature.

Oracle tags:
  [TRIVIAL]  constant-kernel exactness, centroid rule, monomial integrals.
  [DERIVED]  analytic monomial values a!b!/(a+b+2)!; frozen 1/(4 pi r)
             pair values from tests/oracles/pair_integral_oracle.py
             (closed-form inner potential + graded outer integration,
             validated by a second route and a subdivision identity).
"""

from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emcfie import quadrature as Q

T_REF = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
T_EDGE = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.4, -0.9, 0.0]])
T_VERT = np.array([[0.0, 0.0, 0.0], [-1.0, -0.2, 0.0], [-0.3, -1.0, 0.0]])
T_FAR = np.array([[2.5, 0.3, 1.2], [3.1, 0.4, 1.0], [2.6, 1.1, 1.4]])

# Frozen oracle values of the 1/(4 pi |x-y|) pair integrals; see module
# docstring.  The two independent oracle routes agreed to < 1e-14.
ORACLE_IDENTICAL = 0.079821446904249
ORACLE_EDGE = 0.030937818921660
ORACLE_VERTEX = 0.018306627478365


def kernel_static(x, y):
    return 1.0 / (4.0 * np.pi * np.linalg.norm(x - y))


def test_triangle_rule_order_1_is_centroid():
    r = Q.gauss_triangle_rule(1)
    assert len(r.weights) == 1
    assert np.allclose(r.points[0], [1 / 3, 1 / 3, 1 / 3])
    assert r.weights[0] == pytest.approx(0.5)


@pytest.mark.parametrize("order", range(1, 11))
def test_triangle_rule_weights(order):
    r = Q.gauss_triangle_rule(order)
    assert r.weights.sum() == pytest.approx(0.5, abs=1e-14)
    assert (r.weights > 0).all()
    assert np.allclose(r.points.sum(axis=1), 1.0, atol=1e-14)
    assert (r.points > -1e-14).all()


@pytest.mark.parametrize("order", range(1, 11))
def test_triangle_rule_monomial_exactness(order):
    # [DERIVED] int over {x,y>=0, x+y<=1} of x^a y^b = a! b! / (a+b+2)!
    r = Q.gauss_triangle_rule(order)
    x, y = r.points[:, 1], r.points[:, 2]
    for a in range(order + 1):
        for b in range(order + 1 - a):
            exact = factorial(a) * factorial(b) / factorial(a + b + 2)
            approx = (r.weights * x**a * y**b).sum()
            assert approx == pytest.approx(exact, rel=1e-13, abs=1e-15)


def test_triangle_rule_x2y_example():
    # [DERIVED] spec-level sanity value: int x^2 y = 1/60 at order >= 3
    r = Q.gauss_triangle_rule(3)
    val = (r.weights * r.points[:, 1] ** 2 * r.points[:, 2]).sum()
    assert val == pytest.approx(1.0 / 60.0, abs=1e-15)


def test_triangle_rule_rejects_bad_order():
    for bad in (0, 11, -1, 2.5, "3"):
        with pytest.raises(ValueError):
            Q.gauss_triangle_rule(bad)


def test_classify_pair_cases():
    assert Q.classify_pair(T_REF, T_REF) == Q.IDENTICAL
    assert Q.classify_pair(T_REF, T_EDGE) == Q.COMMON_EDGE
    assert Q.classify_pair(T_REF, T_VERT) == Q.COMMON_VERTEX
    assert Q.classify_pair(T_REF, T_FAR) == Q.DISJOINT
    # symmetric in its arguments
    assert Q.classify_pair(T_EDGE, T_REF) == Q.COMMON_EDGE
    assert Q.classify_pair(T_VERT, T_REF) == Q.COMMON_VERTEX


def test_classify_pair_rejects_degenerate_matching():
    # two T1 vertices collapse onto one T2 vertex: inconsistent adjacency
    T1 = np.array([[0.0, 0.0, 0.0], [1e-15, 0.0, 0.0], [0.0, 1.0, 0.0]])
    T2 = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    with pytest.raises(ValueError):
        Q.classify_pair(T1, T2)


@pytest.mark.parametrize(
    "case,T1,T2",
    [
        (Q.IDENTICAL, T_REF, T_REF),
        (Q.COMMON_EDGE, T_REF, T_EDGE),
        (Q.COMMON_VERTEX, T_REF, T_VERT),
        (Q.DISJOINT, T_REF, T_FAR),
    ],
)
def test_constant_kernel_gives_area_product(case, T1, T2):
    # [TRIVIAL] kernel = 1 integrates to area(T1) * area(T2) in every case
    order = 4
    val = Q.integrate_pair(lambda x, y: 1.0, T1, T2, case, order)
    exact = Q.triangle_area(T1) * Q.triangle_area(T2)
    assert val.imag == 0.0
    assert val.real == pytest.approx(exact, rel=1e-12)


def test_identical_pair_matches_frozen_oracle():
    # [DERIVED] frozen adaptive-oracle value, see module docstring
    val = Q.integrate_pair(kernel_static, T_REF, T_REF, Q.IDENTICAL, 10)
    assert val.real == pytest.approx(ORACLE_IDENTICAL, abs=5e-10)


def test_edge_pair_matches_frozen_oracle():
    val = Q.integrate_pair(kernel_static, T_REF, T_EDGE, Q.COMMON_EDGE, 10)
    assert val.real == pytest.approx(ORACLE_EDGE, abs=5e-11)


def test_vertex_pair_matches_frozen_oracle():
    val = Q.integrate_pair(kernel_static, T_REF, T_VERT, Q.COMMON_VERTEX, 10)
    assert val.real == pytest.approx(ORACLE_VERTEX, abs=5e-11)


def test_identical_pair_convergence_monotone():
    # error on the 1/r self-integral decreases monotonically beyond order 3
    errs = [
        abs(
            Q.integrate_pair(kernel_static, T_REF, T_REF, Q.IDENTICAL, n).real
            - ORACLE_IDENTICAL
        )
        for n in range(3, 11)
    ]
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
    assert errs[-1] < 1e-9


@pytest.mark.parametrize("case", [Q.IDENTICAL, Q.COMMON_EDGE, Q.COMMON_VERTEX])
def test_singular_transforms_integrate_smooth_kernels(case):
    # Each singular reparameterization is a valid change of variables on the
    # full pair domain, so on a well-separated pair it must agree with plain
    # tensor Gauss for an oscillatory smooth kernel.
    k = lambda x, y: np.exp(1j * 1.3 * np.linalg.norm(x - y)) / (
        4 * np.pi * np.linalg.norm(x - y)
    )
    ref = Q.integrate_pair(k, T_REF, T_FAR, Q.DISJOINT, 10)
    val = Q.integrate_pair(k, T_REF, T_FAR, case, 10)
    assert abs(val - ref) < 1e-10 * abs(ref)


def test_pair_symmetry_smooth_kernel():
    # integrate_pair(k, T1, T2) == integrate_pair(k~, T2, T1), k~(x,y)=k(y,x)
    k = lambda x, y: (1.0 + x @ np.array([0.3, 0.7, -0.2])) * (
        2.0 - y @ np.array([0.5, -0.1, 0.4])
    )
    kt = lambda x, y: k(y, x)
    a = Q.integrate_pair(k, T_REF, T_EDGE, Q.COMMON_EDGE, 6)
    b = Q.integrate_pair(kt, T_EDGE, T_REF, Q.COMMON_EDGE, 6)
    assert abs(a - b) < 1e-12 * abs(a)


def test_pair_symmetry_singular_kernel():
    # same property on the actual 1/r kernel, to quadrature accuracy
    a = Q.integrate_pair(kernel_static, T_REF, T_EDGE, Q.COMMON_EDGE, 10)
    b = Q.integrate_pair(kernel_static, T_EDGE, T_REF, Q.COMMON_EDGE, 10)
    assert abs(a - b) < 1e-9 * abs(a)


def test_canonicalize_pair_recovers_layout():
    rng = np.random.default_rng(3)
    for T2, case in [(T_EDGE, Q.COMMON_EDGE), (T_VERT, Q.COMMON_VERTEX)]:
        ref = Q.integrate_pair(kernel_static, T_REF, T2, case, 8)
        for _ in range(5):
            p1 = rng.permutation(3)
            p2 = rng.permutation(3)
            got_case, T1c, T2c, _, _ = Q.canonicalize_pair(T_REF[p1], T2[p2])
            assert got_case == case
            val = Q.integrate_pair(kernel_static, T1c, T2c, case, 8)
            assert abs(val - ref) < 1e-9 * abs(ref)


def test_integrate_pair_rejects_nonfinite_kernel():
    with pytest.raises(FloatingPointError):
        Q.integrate_pair(lambda x, y: np.nan, T_REF, T_FAR, Q.DISJOINT, 2)


@given(
    scale=st.floats(0.2, 3.0),
    ox=st.floats(-2, 2),
    oy=st.floats(-2, 2),
    oz=st.floats(-2, 2),
    case=st.sampled_from([Q.IDENTICAL, Q.COMMON_EDGE, Q.COMMON_VERTEX]),
)
@settings(max_examples=25, deadline=None)
def test_constant_exactness_under_similarity(scale, ox, oy, oz, case):
    # area-product exactness is invariant under scaling and translation
    off = np.array([ox, oy, oz])
    T1 = T_REF * scale + off
    T2 = (T_REF if case == Q.IDENTICAL else T_EDGE if case == Q.COMMON_EDGE else T_VERT)
    T2 = T2 * scale + off
    val = Q.integrate_pair(lambda x, y: 1.0, T1, T2, case, 3)
    exact = Q.triangle_area(T1) * Q.triangle_area(T2)
    assert val.real == pytest.approx(exact, rel=1e-11)
