"""Helmholtz fundamental solution for real and imaginary wavenumbers.

The kernel is G_sigma(x, y) = exp(i sigma |x-y|) / (4 pi |x-y|) with either
sigma = kappa (oscillatory, the physical wavenumber) or sigma = i kappa'
(Yukawa: real, positive, exponentially decaying).  The difference
G_kappa - G_{i kappa'} and its gradient are smooth across x = y; near the
diagonal they are evaluated by power series to avoid catastrophic
cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

FOUR_PI = 4.0 * np.pi

# Switch to the series branch of the difference kernels when
# max(kappa, kappa') * r falls below this.  At the threshold the direct
# branch still has ~1e-14 relative accuracy, and the truncated series is
# accurate to ~1e-22, so the two branches agree well inside the 1e-12
# budget.
_SERIES_THRESHOLD = 1e-2


@dataclass(frozen=True)
class Wavenumber:
    """Physical wavenumber kappa > 0 and imaginary-axis parameter kappa' > 0."""

    kappa: float
    kappa_prime: float

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0.0):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa}")
        if not (np.isfinite(self.kappa_prime) and self.kappa_prime > 0.0):
            raise ValueError(
                f"kappa_prime must be positive and finite, got {self.kappa_prime}"
            )


@dataclass(frozen=True)
class CouplingParameter:
    """Nonzero real coupling weight eta mixing the CFIE branches."""

    eta: float

    def __post_init__(self):
        if not np.isfinite(self.eta) or self.eta == 0.0:
            raise ValueError(f"eta must be real, nonzero and finite, got {self.eta}")


def _distance(x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = float(np.sqrt(np.dot(d, d)))
    return d, r


def green(sigma: complex, x, y) -> complex:
    """G_sigma(x,y) = exp(i sigma r) / (4 pi r), r = |x - y|.

    For purely imaginary sigma = i kappa' the value is real and positive.
    """
    _, r = _distance(x, y)
    if r == 0.0:
        raise ValueError("green() is singular at x = y")
    return complex(np.exp(1j * complex(sigma) * r) / (FOUR_PI * r))


def green_gradient_x(sigma: complex, x, y) -> np.ndarray:
    """grad_x G_sigma(x,y) = G_sigma * (i sigma - 1/r) * (x - y)/r."""
    d, r = _distance(x, y)
    if r == 0.0:
        raise ValueError("green_gradient_x() is singular at x = y")
    g = np.exp(1j * complex(sigma) * r) / (FOUR_PI * r)
    return g * (1j * complex(sigma) - 1.0 / r) * (d / r)


def green_difference(kappa: float, kappa_prime: float, x, y) -> complex:
    """G_kappa - G_{i kappa'}; regular across x = y with limit (i kappa + kappa')/4pi.

    The numerator exp(i kappa r) - exp(-kappa' r) vanishes linearly at r = 0,
    so for small max(kappa,kappa')*r the quotient is evaluated by its power
    series (terms n = 1..8).
    """
    _, r = _distance(x, y)
    return complex(_green_difference_r(float(kappa), float(kappa_prime), r))


def green_gradient_difference(kappa: float, kappa_prime: float, x, y) -> np.ndarray:
    """grad_x (G_kappa - G_{i kappa'}): bounded (not continuous) at x = y.

    Along a fixed direction u = (x-y)/r the limit is
    -(kappa^2 + kappa'^2)/(8 pi) * u.
    """
    d, r = _distance(x, y)
    if r == 0.0:
        # Direction-dependent limit; the zero vector is the symmetric choice
        # and is what coincident quadrature nodes should contribute.
        return np.zeros(3, dtype=complex)
    s = _grad_difference_scalar_r(float(kappa), float(kappa_prime), r)
    return s * d


@numba.njit(cache=True)
def _green_difference_r(kappa, kappa_prime, r):
    """(exp(i kappa r) - exp(-kappa' r)) / (4 pi r) with series guard."""
    zmax = max(kappa, kappa_prime) * r
    if zmax >= _SERIES_THRESHOLD:
        return (np.exp(1j * kappa * r) - np.exp(-kappa_prime * r)) / (FOUR_PI * r)
    # sum_{n>=1} [(i kappa)^n - (-kappa')^n] r^{n-1} / (4 pi n!)
    acc = 0.0 + 0.0j
    zk = 1.0 + 0.0j  # (i kappa)^n running power
    zp = 1.0 + 0.0j  # (-kappa')^n running power
    fact = 1.0
    rp = 1.0  # r^{n-1}
    for n in range(1, 9):
        zk = zk * (1j * kappa)
        zp = zp * (-kappa_prime)
        fact = fact * n
        acc = acc + (zk - zp) * rp / fact
        rp = rp * r
    return acc / FOUR_PI


@numba.njit(cache=True)
def _grad_difference_scalar_r(kappa, kappa_prime, r):
    """Scalar s(r) with grad_x(G_kappa - G_{i kappa'}) = s(r) * (x - y).

    s(r) = [e^{i kappa r}(i kappa r - 1) - e^{-kappa' r}(-kappa' r - 1)] / (4 pi r^3).
    The bracket is f(i kappa r) - f(-kappa' r) with f(z) = e^z (z - 1)
    = -1 + sum_{n>=2} z^n (n-1)/n!, so the n = 2 term gives the bounded limit.
    """
    zmax = max(kappa, kappa_prime) * r
    if zmax >= _SERIES_THRESHOLD:
        ek = np.exp(1j * kappa * r) * (1j * kappa * r - 1.0)
        ep = np.exp(-kappa_prime * r) * (-kappa_prime * r - 1.0)
        return (ek - ep) / (FOUR_PI * r**3)
    acc = 0.0 + 0.0j
    zk = 1j * kappa  # (i kappa)^n running power, starts at n=1
    zp = -kappa_prime
    fact = 1.0
    rp = 1.0 / r  # r^{n-3} for n = 2
    for n in range(2, 10):
        zk = zk * (1j * kappa)
        zp = zp * (-kappa_prime)
        fact = fact * n
        acc = acc + (zk - zp) * (n - 1) * rp / fact
        rp = rp * r
    return acc / FOUR_PI


# Kernel ids used by the assembly passes (operators.py).
KERNEL_HELMHOLTZ = 0  # G_kappa
KERNEL_YUKAWA = 1  # G_{i kappa'}
KERNEL_DIFFERENCE = 2  # G_kappa - G_{i kappa'}
KERNEL_ZERO = 3  # test plumbing only


@numba.njit(inline="always", cache=True)
def scalar_kernel(kind, kappa, kappa_prime, r):
    """Scalar kernels by id; r > 0 except for the guarded difference kernel."""
    if kind == KERNEL_HELMHOLTZ:
        return np.exp(1j * kappa * r) / (FOUR_PI * r)
    elif kind == KERNEL_YUKAWA:
        return (np.exp(-kappa_prime * r) / (FOUR_PI * r)) + 0.0j
    elif kind == KERNEL_DIFFERENCE:
        return _green_difference_r(kappa, kappa_prime, r)
    return 0.0 + 0.0j


@numba.njit(inline="always", cache=True)
def gradient_kernel_scalar(kind, kappa, kappa_prime, r):
    """s(r) with grad_x K = s(r) * (x - y) for the kernel family `kind`."""
    if kind == KERNEL_HELMHOLTZ:
        return np.exp(1j * kappa * r) * (1j * kappa * r - 1.0) / (FOUR_PI * r**3)
    elif kind == KERNEL_YUKAWA:
        return (
            np.exp(-kappa_prime * r) * (-kappa_prime * r - 1.0) / (FOUR_PI * r**3)
        ) + 0.0j
    elif kind == KERNEL_DIFFERENCE:
        return _grad_difference_scalar_r(kappa, kappa_prime, r)
    return 0.0 + 0.0j
