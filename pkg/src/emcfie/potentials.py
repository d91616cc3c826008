"""Off-surface evaluation of the layer potentials.

Evaluators integrate the kernel against a discrete surface density with
plain per-triangle Gauss rules, so evaluation points must stay a few
meshwidths away from the surface; accuracy degrades smoothly as they
approach it.  Densities are div-conforming, which keeps the single-layer
potential well defined with the scalar part acting on the surface
divergence:

    Psi_SL u = Psi_A u + sigma^{-2} grad Psi_V (div u),
    Psi_DL u = curl Psi_A u = int grad_x G_sigma(x, y) x u(y) ds(y).

Kernel families follow kernels.py: sigma = kappa (Helmholtz) or
sigma = i kappa' (Yukawa), so sigma^2 is kappa^2 or -kappa'^2.
"""

from __future__ import annotations

import numpy as np

from dataclasses import dataclass

from .kernels import FOUR_PI, KERNEL_HELMHOLTZ, KERNEL_YUKAWA
from .quadrature import gauss_triangle_rule
from .spaces import SurfaceDensity

# Evaluation points are processed in blocks to bound the size of the
# point-by-source kernel matrices.
_POINT_BLOCK = 64


@dataclass(frozen=True)
class FieldSample:
    """One evaluation point with the field and its curl there."""

    point: np.ndarray
    e: np.ndarray
    curl_e: np.ndarray


def sigma_squared(kind: int, kappa: float, kappa_prime: float) -> complex:
    if kind == KERNEL_HELMHOLTZ:
        return complex(kappa**2)
    if kind == KERNEL_YUKAWA:
        return complex(-(kappa_prime**2))
    raise ValueError(f"potentials support kernel kinds 0 and 1, got {kind}")


def _green(kind, kappa, kappa_prime, r):
    """Vectorized G_sigma(r); mirrors kernels.scalar_kernel."""
    if kind == KERNEL_HELMHOLTZ:
        return np.exp(1j * kappa * r) / (FOUR_PI * r)
    if kind == KERNEL_YUKAWA:
        return np.exp(-kappa_prime * r) / (FOUR_PI * r) + 0.0j
    raise ValueError(f"potentials support kernel kinds 0 and 1, got {kind}")


def _green_gradient_scale(kind, kappa, kappa_prime, r):
    """Vectorized s(r) with grad_x G = s(r) (x - y)."""
    if kind == KERNEL_HELMHOLTZ:
        return np.exp(1j * kappa * r) * (1j * kappa * r - 1.0) / (FOUR_PI * r**3)
    if kind == KERNEL_YUKAWA:
        return (
            np.exp(-kappa_prime * r) * (-kappa_prime * r - 1.0) / (FOUR_PI * r**3)
        ) + 0.0j
    raise ValueError(f"potentials support kernel kinds 0 and 1, got {kind}")


def sample_density(density: SurfaceDensity, order: int):
    """Tabulate a density at per-triangle Gauss nodes.

    Returns (nodes, weights, values, divergences); weights carry the area
    Jacobian, divergences are the per-triangle constants repeated per node.
    """
    space = density.space
    mesh = space.mesh
    rule = gauss_triangle_rule(order)
    bary, w = rule.points, rule.weights

    edge_c = space.coefficients.T @ density.coefficients
    verts = mesh.vertices[mesh.triangles]  # (F, 3, 3)
    nodes = np.einsum("qk,fkd->fqd", bary, verts)

    lengths = np.linalg.norm(np.roll(verts, -1, axis=1) - verts, axis=2)  # (F, 3)
    local = edge_c[mesh.triangle_to_edges] * space.rwg_signs * lengths
    areas = mesh.areas

    values = np.zeros(nodes.shape, dtype=local.dtype)
    for k in range(3):
        opp = verts[:, (k + 2) % 3]
        coef = local[:, k] / (2.0 * areas)
        values += coef[:, None, None] * (nodes - opp[:, None, :])
    divs = (local.sum(axis=1) / areas)[:, None] * np.ones(len(w))[None, :]

    weights = (2.0 * areas)[:, None] * w[None, :]
    return (
        nodes.reshape(-1, 3),
        weights.ravel(),
        values.reshape(-1, 3),
        divs.ravel(),
    )


def _blocks(points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    for start in range(0, len(points), _POINT_BLOCK):
        yield start, points[start : start + _POINT_BLOCK]


def eval_vector_potential(density, kind, kappa, kappa_prime, points, order=4):
    """Psi_A u (x) = int G_sigma(x, y) u(y) ds(y) at off-surface points."""
    nodes, w, vals, _ = sample_density(density, order)
    src = vals * w[:, None]
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(points), 3), dtype=np.complex128)
    for start, block in _blocks(points):
        r = np.linalg.norm(block[:, None, :] - nodes[None, :, :], axis=2)
        g = _green(kind, kappa, kappa_prime, r)
        out[start : start + len(block)] = g @ src
    return out


def eval_single_layer(density, kind, kappa, kappa_prime, points, order=4):
    """Psi_SL u = Psi_A u + sigma^{-2} grad Psi_V (div u)."""
    nodes, w, vals, divs = sample_density(density, order)
    src = vals * w[:, None]
    src_div = divs * w
    inv_s2 = 1.0 / sigma_squared(kind, kappa, kappa_prime)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(points), 3), dtype=np.complex128)
    for start, block in _blocks(points):
        diff = block[:, None, :] - nodes[None, :, :]
        r = np.linalg.norm(diff, axis=2)
        g = _green(kind, kappa, kappa_prime, r)
        s = _green_gradient_scale(kind, kappa, kappa_prime, r)
        part = g @ src
        part += inv_s2 * np.einsum("pn,pnd->pd", s * src_div[None, :], diff)
        out[start : start + len(block)] = part
    return out


def eval_double_layer(density, kind, kappa, kappa_prime, points, order=4):
    """Psi_DL u (x) = int grad_x G_sigma(x, y) x u(y) ds(y)."""
    nodes, w, vals, _ = sample_density(density, order)
    src = vals * w[:, None]
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(points), 3), dtype=np.complex128)
    for start, block in _blocks(points):
        diff = block[:, None, :] - nodes[None, :, :]
        r = np.linalg.norm(diff, axis=2)
        s = _green_gradient_scale(kind, kappa, kappa_prime, r)
        grad = s[:, :, None] * diff
        out[start : start + len(block)] = np.cross(grad, src[None, :, :]).sum(axis=1)
    return out


def eval_plane_wave(kappa, direction, polarization, points):
    """p exp(i kappa d . x) for a unit direction d with p . d = 0."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    p = np.asarray(polarization, dtype=complex)
    if abs(d @ p) > 1e-12 * np.linalg.norm(p):
        raise ValueError("polarization must be orthogonal to direction")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    phase = np.exp(1j * kappa * (points @ d))
    return phase[:, None] * p[None, :]


def eval_scattered(phi: SurfaceDensity, psi: SurfaceDensity, kappa, eta, points, order=6):
    """Scattered field and curl from the solved auxiliary densities.

    The auxiliary unknowns are the exact layer densities of the ansatz, so

        e      = i eta Psi_SL^kappa(phi) + Psi_DL^kappa(psi),
        curl e = i eta Psi_DL^kappa(phi) + kappa^2 Psi_SL^kappa(psi),

    the curl following from curl Psi_SL = Psi_DL and curl Psi_DL =
    sigma^2 Psi_SL.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    args = (KERNEL_HELMHOLTZ, float(kappa), 0.0)
    sl_phi = eval_single_layer(phi, *args, points, order=order)
    dl_phi = eval_double_layer(phi, *args, points, order=order)
    sl_psi = eval_single_layer(psi, *args, points, order=order)
    dl_psi = eval_double_layer(psi, *args, points, order=order)
    e = 1j * eta * sl_phi + dl_psi
    curl = 1j * eta * dl_phi + kappa**2 * sl_psi
    return [FieldSample(point=p, e=f, curl_e=c) for p, f, c in zip(points, e, curl)]


def eval_incident(wave, points) -> list[FieldSample]:
    """Plane wave and its exact curl i kappa (d x p) exp(i kappa d.x)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    p, d = wave.unit_vectors()
    phase = np.exp(1j * wave.kappa * (points @ d))
    e = phase[:, None] * p
    curl = (1j * wave.kappa * phase)[:, None] * np.cross(d, p)
    return [FieldSample(point=x, e=f, curl_e=c) for x, f, c in zip(points, e, curl)]
