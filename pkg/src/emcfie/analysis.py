"""Condition numbers, scattering error metrics, and sweep bookkeeping.

Every experiment reduces to rows of one flat CSV schema, a row per
(geometry, meshwidth, wavenumber, coupling) sample, so the conditioning
and convergence figures can be rebuilt from the run directories alone.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np

from . import cfie

CSV_HEADER = "geom,h,kappa,kappa_prime,eta,cond_cfie,cond_efie,iters_cfie,iters_efie,err_h"

SPHERE_RESONANCES = (2.7437, 3.8702, 4.4934)

_EIG_FLOOR = 1e-300
_DENSE_LIMIT = 8000


def condition_number(matrix) -> float:
    """cond(A) = max|lambda| / min|lambda| by a dense eigensolve.

    The spectral ratio, not the singular-value one: the preconditioned
    operator is a compact perturbation of a multiple of the identity and the
    sweeps track how tightly its eigenvalues cluster.
    """
    a = np.asarray(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("condition_number needs a square matrix")
    if a.shape[0] > _DENSE_LIMIT:
        raise ValueError(f"matrix of size {a.shape[0]} exceeds the dense eigensolve limit")
    moduli = np.abs(np.linalg.eigvals(a))
    smallest = moduli.min()
    if smallest < _EIG_FLOOR:
        return math.inf
    return float(moduli.max() / smallest)


def preconditioned_cond(system: cfie.CfieSystem) -> float:
    """Condition number of G^{-T} L for an assembled system."""
    dense = cfie.densify_schur(system)
    return condition_number(cfie.precondition(system, dense))


def eta_sweep_conditions(system: cfie.CfieSystem, etas) -> list[float]:
    """Preconditioned condition numbers across coupling values.

    The Schur operator is affine in eta, L(eta) = L0 + i eta L1, so the
    kernel passes and all G-solves are shared across the sweep and each
    sample costs a single dense eigensolve.
    """
    if system._eta_parts is None:
        raise ValueError("system was built with keep_eta_parts=False")
    a_p, v_p, da, dv = system._eta_parts
    wn = system.wavenumber
    lift_s = system._g_lu.solve(system.S)
    lift_k = system._g_lu.solve(system.K)
    l0 = (wn.kappa_prime**2 * a_p + v_p) @ lift_s + system.C @ lift_k
    l1 = (a_p - v_p / wn.kappa**2 + da - dv / wn.kappa**2) @ lift_s
    p0 = cfie.precondition(system, l0)
    p1 = cfie.precondition(system, l1)
    return [condition_number(p0 + 1j * eta * p1) for eta in etas]


def avg_pointwise_error(numeric, exact) -> float:
    """err_h = (1/N) sum_i sqrt(|de(x_i)|^2 + |dcurl(x_i)|^2).

    Per-point root of the combined squared field and curl mismatch, then the
    arithmetic mean over the sample set.  Both lists must visit the same
    points in the same order.
    """
    if len(numeric) == 0 or len(numeric) != len(exact):
        raise ValueError("sample lists must be non-empty and equally long")
    total = 0.0
    for a, b in zip(numeric, exact):
        if not np.allclose(a.point, b.point, rtol=0.0, atol=1e-12):
            raise ValueError("sample points disagree between the two lists")
        de = np.asarray(a.e) - np.asarray(b.e)
        dc = np.asarray(a.curl_e) - np.asarray(b.curl_e)
        total += math.sqrt(np.vdot(de, de).real + np.vdot(dc, dc).real)
    return total / len(numeric)


def eval_points_sphere(n: int, radius: float) -> np.ndarray:
    """Deterministic Fibonacci lattice of n points on the sphere of given radius."""
    if n < 1:
        raise ValueError("need at least one evaluation point")
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    points = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    return radius * points


def resonance_table(geometry: str, cutoff: float = 8.0) -> list[float]:
    """Interior resonant wavenumbers of the unit-size reference bodies.

    Sphere values are tabulated roots of the Riccati-Bessel functions.  Cube
    values are pi*sqrt(l^2 + m^2 + n^2) over non-negative integers of which
    at most one is zero; degenerate index triples collapse to one entry.
    """
    if geometry == "sphere-unit":
        return [k for k in SPHERE_RESONANCES if k <= cutoff]
    if geometry == "cube-unit":
        top = int(cutoff / math.pi) + 1
        values = set()
        for l in range(top + 1):
            for m in range(top + 1):
                for n in range(top + 1):
                    if (l == 0) + (m == 0) + (n == 0) > 1:
                        continue
                    k = math.pi * math.sqrt(l * l + m * m + n * n)
                    if k <= cutoff:
                        values.add(round(k, 12))
        return sorted(values)
    raise ValueError(f"unknown geometry tag: {geometry!r}")


@dataclasses.dataclass(frozen=True)
class SweepRecord:
    """One sweep sample; optional fields stay blank in the CSV."""

    geom: str
    h: float
    kappa: float
    kappa_prime: float
    eta: float
    cond_cfie: float | None = None
    cond_efie: float | None = None
    iters_cfie: int | None = None
    iters_efie: int | None = None
    err_h: float | None = None

    def __post_init__(self):
        for name in ("cond_cfie", "cond_efie"):
            value = getattr(self, name)
            if value is not None and value < 1.0:
                raise ValueError(f"{name} is a condition number and must be >= 1")
        for name in ("iters_cfie", "iters_efie"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    value = float(value)
    if math.isinf(value):
        return "inf"
    return repr(value)


def format_records(records) -> str:
    """CSV body with the fixed header; shortest-roundtrip floats keep reruns
    byte-identical."""
    lines = [CSV_HEADER]
    for rec in records:
        lines.append(
            ",".join(
                _cell(getattr(rec, field.name))
                for field in dataclasses.fields(SweepRecord)
            )
        )
    return "\n".join(lines) + "\n"


def write_records(path, records) -> None:
    Path(path).write_text(format_records(records))


def read_records(path) -> list[SweepRecord]:
    """Inverse of write_records, for post-processing scripts."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path} does not carry the sweep CSV header")
    records = []
    fields = dataclasses.fields(SweepRecord)
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(fields):
            raise ValueError(f"malformed sweep row: {line!r}")
        kwargs = {}
        for field, cell in zip(fields, cells):
            if cell == "":
                kwargs[field.name] = None
            elif field.name == "geom":
                kwargs[field.name] = cell
            elif field.name.startswith("iters"):
                kwargs[field.name] = int(cell)
            else:
                kwargs[field.name] = float(cell)
        records.append(SweepRecord(**kwargs))
    return records
