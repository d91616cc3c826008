"""Off-surface potential evaluators: sampling, kernels, field identities."""

import numpy as np
import pytest

from emcfie import kernels as K
from emcfie import mesh as M
from emcfie import potentials as P
from emcfie import spaces as S
from emcfie.cfie import PlaneWave


@pytest.fixture(scope="module")
def sphere():
    return M.make_sphere_mesh(1.0, 0.9)


@pytest.fixture(scope="module")
def rt0(sphere):
    return S.build_rt0_space(sphere)


@pytest.fixture(scope="module")
def density(rt0):
    rng = np.random.default_rng(23)
    return S.SurfaceDensity(rt0, rng.standard_normal(rt0.dof_count))


def test_sigma_squared_values():
    assert P.sigma_squared(K.KERNEL_HELMHOLTZ, 2.0, 0.0) == 4.0
    assert P.sigma_squared(K.KERNEL_YUKAWA, 0.0, 3.0) == -9.0
    with pytest.raises(ValueError):
        P.sigma_squared(K.KERNEL_DIFFERENCE, 2.0, 1.0)


def test_green_batches_match_scalar_kernels():
    r = np.geomspace(0.05, 8.0, 40)
    for kind, kappa, kp in (
        (K.KERNEL_HELMHOLTZ, 1.7, 0.0),
        (K.KERNEL_YUKAWA, 0.0, 2.3),
    ):
        g = P._green(kind, kappa, kp, r)
        s = P._green_gradient_scale(kind, kappa, kp, r)
        for i, ri in enumerate(r):
            assert g[i] == pytest.approx(
                K.scalar_kernel(kind, kappa, kp, ri), rel=1e-14
            )
            assert s[i] == pytest.approx(
                K.gradient_kernel_scalar(kind, kappa, kp, ri), rel=1e-14
            )
    with pytest.raises(ValueError):
        P._green(K.KERNEL_DIFFERENCE, 1.0, 1.0, r)


def test_sample_density_matches_basis_evaluator(sphere, rt0, density):
    order = 2
    from emcfie.quadrature import gauss_triangle_rule

    rule = gauss_triangle_rule(order)
    nodes, weights, values, divs = P.sample_density(density, order)
    q = len(rule.weights)
    rng = np.random.default_rng(7)
    for t in rng.choice(sphere.num_triangles, 5, replace=False):
        t = int(t)
        dofs = [
            d
            for d in range(rt0.dof_count)
            if t in rt0.support_triangles(d)
        ]
        for j, (bary, w) in enumerate(zip(rule.points, rule.weights)):
            want_val = np.zeros(3)
            want_div = 0.0
            for d in dofs:
                v, dv = S.evaluate_basis(rt0, d, t, bary)
                want_val += density.coefficients[d] * v
                want_div += density.coefficients[d] * dv
            i = t * q + j
            np.testing.assert_allclose(values[i], want_val, atol=1e-12)
            assert divs[i] == pytest.approx(want_div, abs=1e-12)
            assert weights[i] == pytest.approx(2.0 * sphere.areas[t] * w)
            np.testing.assert_allclose(
                nodes[i], bary @ sphere.vertices[sphere.triangles[t]],
                atol=1e-15,
            )


def test_sample_density_weights_integrate_area(density, sphere):
    _, weights, _, _ = P.sample_density(density, 3)
    assert weights.sum() == pytest.approx(sphere.areas.sum(), rel=1e-13)


def test_plane_wave_values_and_validation():
    pts = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    vals = P.eval_plane_wave(2.0, (0, 0, 1), (1, 0, 0), pts)
    np.testing.assert_allclose(vals[0], [1.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(
        vals[1], [np.exp(2.0j), 0.0, 0.0], atol=1e-15
    )
    with pytest.raises(ValueError, match="orthogonal"):
        P.eval_plane_wave(2.0, (0, 0, 1), (0.1, 0.0, 1.0), pts)


def test_incident_curl_matches_finite_differences():
    wave = PlaneWave((0.0, 1.0, 0.0), (1.0, 0.0, 0.0), 1.3)
    x0 = np.array([0.4, -0.2, 0.7])
    sample = P.eval_incident(wave, x0)[0]
    curl_fd = _numeric_curl(lambda p: np.array([s.e for s in P.eval_incident(wave, p)]), x0)
    np.testing.assert_allclose(sample.curl_e, curl_fd, rtol=1e-7, atol=1e-9)


def _numeric_curl(field, x0, step=1e-4):
    jac = np.zeros((3, 3), dtype=np.complex128)
    for j in range(3):
        dx = np.zeros(3)
        dx[j] = step
        fp = field((x0 + dx)[None, :])[0]
        fm = field((x0 - dx)[None, :])[0]
        jac[:, j] = (fp - fm) / (2.0 * step)
    return np.array(
        [
            jac[2, 1] - jac[1, 2],
            jac[0, 2] - jac[2, 0],
            jac[1, 0] - jac[0, 1],
        ]
    )


def _numeric_div(field, x0, step=1e-4):
    acc = 0.0
    for j in range(3):
        dx = np.zeros(3)
        dx[j] = step
        fp = field((x0 + dx)[None, :])[0]
        fm = field((x0 - dx)[None, :])[0]
        acc += (fp[j] - fm[j]) / (2.0 * step)
    return acc


def test_double_layer_is_curl_of_vector_potential(density):
    kind, kappa = K.KERNEL_HELMHOLTZ, 1.9
    x0 = np.array([0.3, 1.8, 1.1])
    dl = P.eval_double_layer(density, kind, kappa, 0.0, x0[None, :], order=4)[0]
    curl_fd = _numeric_curl(
        lambda p: P.eval_vector_potential(density, kind, kappa, 0.0, p, order=4),
        x0,
    )
    np.testing.assert_allclose(dl, curl_fd, rtol=1e-6, atol=1e-10)


def test_single_layer_linear_in_density(rt0, density):
    scaled = S.SurfaceDensity(rt0, 2.5 * density.coefficients)
    pts = np.array([[0.0, 0.0, 2.0], [1.5, -0.5, -1.2]])
    one = P.eval_single_layer(density, K.KERNEL_YUKAWA, 0.0, 1.3, pts)
    two = P.eval_single_layer(scaled, K.KERNEL_YUKAWA, 0.0, 1.3, pts)
    np.testing.assert_allclose(two, 2.5 * one, rtol=1e-13)


def test_scattered_field_divergence_free(rt0, density):
    kappa, eta = 2.0, -4.0
    psi = S.SurfaceDensity(rt0, np.roll(density.coefficients, 7))
    x0 = np.array([0.9, 1.4, -1.1])

    def e_field(p):
        return np.array(
            [s.e for s in P.eval_scattered(density, psi, kappa, eta, p)]
        )

    div = _numeric_div(e_field, x0)
    scale = np.linalg.norm(e_field(x0[None, :])[0])
    assert abs(div) < 1e-4 * kappa * scale


def test_scattered_curl_consistent_with_field(rt0, density):
    kappa, eta = 2.0, -4.0
    psi = S.SurfaceDensity(rt0, np.roll(density.coefficients, 7))
    x0 = np.array([-1.3, 0.8, 1.6])
    sample = P.eval_scattered(density, psi, kappa, eta, x0)[0]

    def e_field(p):
        return np.array(
            [s.e for s in P.eval_scattered(density, psi, kappa, eta, p)]
        )

    curl_fd = _numeric_curl(e_field, x0)
    np.testing.assert_allclose(sample.curl_e, curl_fd, rtol=1e-5, atol=1e-9)


def test_scattered_field_decays_like_one_over_r(rt0, density):
    kappa, eta = 2.0, -4.0
    psi = S.SurfaceDensity(rt0, np.roll(density.coefficients, 3))
    direction = np.array([0.3, -0.5, 0.8])
    direction /= np.linalg.norm(direction)
    scaled = []
    for r in (10.0, 20.0, 40.0):
        sample = P.eval_scattered(density, psi, kappa, eta, r * direction)[0]
        scaled.append(r * np.linalg.norm(sample.e))
    assert max(scaled) < 2.0 * min(scaled)


def test_point_blocking_seam_invisible(rt0, density):
    # more points than one block; results must not depend on the chunking
    pts = np.array([[0.0, 0.0, 1.7 + 0.01 * i] for i in range(P._POINT_BLOCK + 9)])
    full = P.eval_vector_potential(density, K.KERNEL_YUKAWA, 0.0, 1.1, pts)
    single = np.vstack(
        [
            P.eval_vector_potential(density, K.KERNEL_YUKAWA, 0.0, 1.1, p[None, :])
            for p in pts
        ]
    )
    np.testing.assert_allclose(full, single, atol=1e-15)
