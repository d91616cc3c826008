"""Mie series reference for plane-wave scattering by a PEC sphere.

Canonical frame: incident field x_hat exp(i kappa z), sphere centered at
the origin.  The scattered field is the vector-wave expansion

    e_s = sum_n E_n (i a_n N3_e1n - b_n M3_o1n),
    E_n = i^n (2n+1) / (n (n+1)),

with perfectly conducting coefficients built from Riccati-Bessel functions
psi_n(x) = x j_n(x) and xi_n(x) = x h1_n(x):

    a_n = psi_n'(x) / xi_n'(x),   b_n = psi_n(x) / xi_n(x),   x = kappa R.

curl M = kappa N and curl N = kappa M give the curl without differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import spherical_jn, spherical_yn

from .potentials import FieldSample


@dataclass(frozen=True)
class MieSolution:
    kappa: float
    radius: float
    n_terms: int
    a_n: np.ndarray
    b_n: np.ndarray


def truncation_terms(size_parameter: float) -> int:
    """Wiscombe-style cutoff; the tail beyond it is below double rounding."""
    return int(np.ceil(size_parameter + 4.0 * size_parameter ** (1.0 / 3.0) + 10.0))


def build_mie(kappa: float, radius: float = 1.0, n_terms: int | None = None) -> MieSolution:
    x = kappa * radius
    if not 0.0 < x < 50.0:
        raise ValueError(f"size parameter kappa*radius = {x:g} outside (0, 50)")
    if n_terms is None:
        n_terms = truncation_terms(x)
    orders = np.arange(1, n_terms + 1)

    jn = spherical_jn(orders, x)
    jnp = spherical_jn(orders, x, derivative=True)
    hn = jn + 1j * spherical_yn(orders, x)
    hnp = jnp + 1j * spherical_yn(orders, x, derivative=True)

    psi, psi_p = x * jn, jn + x * jnp
    xi, xi_p = x * hn, hn + x * hnp
    a_n = psi_p / xi_p
    b_n = psi / xi
    if not (np.all(np.isfinite(a_n)) and np.all(np.isfinite(b_n))):
        raise ArithmeticError(
            f"Mie coefficients overflowed at x = {x:g}, n_terms = {n_terms}"
        )
    return MieSolution(kappa=kappa, radius=radius, n_terms=n_terms, a_n=a_n, b_n=b_n)


def _angular_functions(mu, n_terms):
    """pi_n and tau_n for n = 1..n_terms at mu = cos(theta), vectorized."""
    m = len(mu)
    pi_n = np.zeros((n_terms + 1, m))
    tau_n = np.zeros((n_terms + 1, m))
    pi_n[1] = 1.0
    tau_n[1] = mu
    for n in range(2, n_terms + 1):
        pi_n[n] = ((2 * n - 1) * mu * pi_n[n - 1] - n * pi_n[n - 2]) / (n - 1)
        tau_n[n] = n * mu * pi_n[n] - (n + 1) * pi_n[n - 1]
    return pi_n[1:], tau_n[1:]


def _radial_functions(orders, rho):
    """h1_n(rho) and [rho h1_n(rho)]' / rho for outgoing waves."""
    n_col = orders[:, None]
    hn = spherical_jn(n_col, rho) + 1j * spherical_yn(n_col, rho)
    hnp = spherical_jn(n_col, rho, derivative=True) + 1j * spherical_yn(
        n_col, rho, derivative=True
    )
    return hn, hn / rho + hnp


def _spherical_frame(points):
    r = np.linalg.norm(points, axis=1)
    er = points / r[:, None]
    mu = np.clip(er[:, 2], -1.0, 1.0)
    sin_theta = np.sqrt(np.maximum(0.0, 1.0 - mu**2))
    # Azimuth from the x-axis; at the poles any value yields the same
    # Cartesian field in the limit, so phi = 0 is used there.
    phi = np.arctan2(points[:, 1], points[:, 0])
    et = np.stack([mu * np.cos(phi), mu * np.sin(phi), -sin_theta], axis=1)
    ep = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=1)
    return r, er, et, ep, mu, sin_theta, phi


def eval_mie(sol: MieSolution, points) -> list[FieldSample]:
    """Scattered field and its curl at exterior (or on-surface) points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    r, er, et, ep, mu, sin_theta, phi = _spherical_frame(points)
    # on-surface samples are allowed (the boundary-condition check needs
    # them); only genuinely interior points are rejected
    if np.any(r < sol.radius * (1.0 - 1e-10)):
        raise ValueError("evaluation points must not lie inside the sphere")

    orders = np.arange(1, sol.n_terms + 1)
    weight = (1j**orders) * (2 * orders + 1) / (orders * (orders + 1))
    pi_n, tau_n = _angular_functions(mu, sol.n_terms)
    rho = sol.kappa * r
    hn, dn = _radial_functions(orders, rho)
    radial = (orders * (orders + 1))[:, None] * sin_theta * pi_n * (hn / rho)

    ca = (weight * 1j * sol.a_n)[:, None]
    cb = (weight * sol.b_n)[:, None]

    # e_s = sum_n i a_n E_n N3_e1n - b_n E_n M3_o1n
    e_r = (ca * radial).sum(0) * np.cos(phi)
    e_t = (ca * tau_n * dn - cb * pi_n * hn).sum(0) * np.cos(phi)
    e_p = (-ca * pi_n * dn + cb * tau_n * hn).sum(0) * np.sin(phi)

    # curl e_s / kappa = sum_n i a_n E_n M3_e1n - b_n E_n N3_o1n
    c_r = (-cb * radial).sum(0) * np.sin(phi)
    c_t = (-ca * pi_n * hn - cb * tau_n * dn).sum(0) * np.sin(phi)
    c_p = (-ca * tau_n * hn - cb * pi_n * dn).sum(0) * np.cos(phi)

    e = e_r[:, None] * er + e_t[:, None] * et + e_p[:, None] * ep
    curl = sol.kappa * (c_r[:, None] * er + c_t[:, None] * et + c_p[:, None] * ep)
    return [FieldSample(point=p, e=f, curl_e=c) for p, f, c in zip(points, e, curl)]
