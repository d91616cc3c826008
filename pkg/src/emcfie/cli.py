"""Command-line harness for the scattering experiments.

Subcommands map one-to-one onto the experiments: mesh diagnostics, the
Mie-vs-BEM convergence study, conditioning sweeps in meshwidth, wavenumber,
and coupling parameter, the Mie oracle self-check, and raw matrix dumps.
Each run writes CSV rows in the flat sweep schema plus a manifest echoing
the configuration; rerunning an identical configuration reproduces the CSV
bodies byte for byte (timestamps live only in the manifest).
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import datetime
import json
import math
import multiprocessing
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, cfie, mesh as mesh_mod, mie, operators, potentials


@dataclasses.dataclass
class RunConfig:
    geometry: str = "sphere"
    size: float = 1.0
    h: tuple[float, ...] = (0.45, 0.3, 0.2, 0.15)
    kappa: tuple[float, ...] = (4.4934,)
    kappa_prime_ratio: tuple[float, ...] = (1.0,)
    eta_scale: float = -1.0
    eta_decades: int = 4
    tol: float = 1e-8
    conv_tol: float = 1e-12
    max_iter: int = 2000
    regular_order: int = 3
    singular_order: int = 5
    n_points: int = 5000
    point_radius: float = 2.0
    out: str = "runs"
    jobs: int = 1

    def __post_init__(self):
        if self.geometry not in ("sphere", "cube"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if not self.h or not self.kappa or not self.kappa_prime_ratio:
            raise ValueError("sweep lists must be non-empty")
        for name in ("tol", "conv_tol"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.eta_scale == 0.0:
            raise ValueError("eta_scale must be nonzero")
        if self.size <= 0.0 or any(h <= 0.0 for h in self.h):
            raise ValueError("sizes and meshwidths must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


_FLOAT_LISTS = ("h", "kappa", "kappa_prime_ratio")
_SECTION_OF = {
    "geometry": "run",
    "size": "run",
    "out": "run",
    "jobs": "run",
    "h": "sweep",
    "kappa": "sweep",
    "kappa_prime_ratio": "sweep",
    "eta_scale": "sweep",
    "eta_decades": "sweep",
    "tol": "solver",
    "conv_tol": "solver",
    "max_iter": "solver",
    "regular_order": "quadrature",
    "singular_order": "quadrature",
    "n_points": "points",
    "point_radius": "points",
}


def load_config(path=None, **overrides) -> RunConfig:
    """Config file (key = value sections) with flag overrides on top."""
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise FileNotFoundError(f"config file not found: {path}")
        for name, section in _SECTION_OF.items():
            if not parser.has_option(section, name):
                continue
            raw = parser.get(section, name)
            if name in _FLOAT_LISTS:
                values[name] = tuple(float(tok) for tok in raw.replace(",", " ").split())
            elif name in ("geometry", "out"):
                values[name] = raw.strip()
            elif name in ("jobs", "eta_decades", "max_iter", "regular_order", "singular_order", "n_points"):
                values[name] = int(raw)
            else:
                values[name] = float(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def _build_mesh(geometry: str, size: float, h: float):
    if geometry == "sphere":
        return mesh_mod.make_sphere_mesh(size, h)
    return mesh_mod.make_cube_mesh(size, h)


def _quad(config: RunConfig):
    return operators.QuadratureConfig(config.regular_order, config.singular_order)


def _plane_wave(kappa: float) -> cfie.PlaneWave:
    return cfie.PlaneWave(polarization=(1.0, 0.0, 0.0), direction=(0.0, 0.0, 1.0), kappa=kappa)


def _map_jobs(worker, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [worker(item) for item in items]
    with multiprocessing.Pool(min(jobs, len(items))) as pool:
        return pool.map(worker, items)


def _convergence_point(args):
    """One (h, ratio) sample of the Mie convergence study."""
    config, h, ratio = args
    kappa = config.kappa[0]
    eta = config.eta_scale * kappa**2
    mesh = _build_mesh(config.geometry, config.size, h)
    system = cfie.build_system(
        mesh, kappa, ratio * kappa, eta, quad=_quad(config), keep_eta_parts=False
    )
    wave = _plane_wave(kappa)
    b = cfie.assemble_system_rhs(system, wave)
    points = analysis.eval_points_sphere(config.n_points, config.point_radius)
    record_h = mesh_mod.meshwidth(mesh)
    try:
        xi, phi, psi, iters = cfie.solve(system, b, tol=config.conv_tol, max_iter=config.max_iter)
    except cfie.GmresFailure as failure:
        record = analysis.SweepRecord(
            geom=config.geometry, h=record_h, kappa=kappa, kappa_prime=ratio * kappa,
            eta=eta, iters_cfie=len(failure.residuals),
        )
        return record, False
    phi_density = potentials.SurfaceDensity(system.rt0, phi)
    psi_density = potentials.SurfaceDensity(system.rt0, psi)
    numeric = potentials.eval_scattered(phi_density, psi_density, kappa, eta, points)
    exact = mie.eval_mie(mie.build_mie(kappa, config.size), points)
    err = analysis.avg_pointwise_error(numeric, exact)
    record = analysis.SweepRecord(
        geom=config.geometry, h=record_h, kappa=kappa, kappa_prime=ratio * kappa,
        eta=eta, iters_cfie=iters, err_h=err,
    )
    return record, True


def _conditioning_point(args):
    """One sweep sample: CFIE and EFIE condition numbers plus GMRES counts."""
    config, h, kappa = args
    ratio = config.kappa_prime_ratio[0]
    eta = config.eta_scale * kappa**2
    mesh = _build_mesh(config.geometry, config.size, h)
    system = cfie.build_system(
        mesh, kappa, ratio * kappa, eta, quad=_quad(config), keep_eta_parts=False
    )
    wave = _plane_wave(kappa)
    b = cfie.assemble_system_rhs(system, wave)
    cond_cfie = analysis.preconditioned_cond(system)
    ok = True
    try:
        _, _, _, iters = cfie.solve(system, b, tol=config.tol, max_iter=config.max_iter)
    except cfie.GmresFailure as failure:
        iters, ok = len(failure.residuals), False
    efie_matrix, efie_solve = cfie.build_efie_reference(kappa, system.rt0, system.quad)
    cond_efie = analysis.condition_number(efie_matrix)
    b_efie = cfie.assemble_rhs(wave, system.rt0, system.quad)
    _, iters_efie = efie_solve(b_efie, tol=config.tol, max_iter=config.max_iter)
    record = analysis.SweepRecord(
        geom=config.geometry, h=mesh_mod.meshwidth(mesh), kappa=kappa,
        kappa_prime=ratio * kappa, eta=eta, cond_cfie=cond_cfie,
        cond_efie=cond_efie, iters_cfie=iters, iters_efie=iters_efie,
    )
    return record, ok


def _prepare_out(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out_dir: Path, command: str, config: RunConfig, outputs, started, ok: bool):
    manifest = {
        "command": command,
        "config": dataclasses.asdict(config),
        "version": __version__,
        "started": started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": sorted(str(p) for p in outputs),
        "status": "ok" if ok else "failed",
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def cmd_mesh_info(config: RunConfig, out_dir: Path, mesh_out: bool) -> tuple[list, bool]:
    outputs = []
    print("geometry  h_target  h_actual  vertices  edges  triangles  euler")
    for h in config.h:
        mesh = _build_mesh(config.geometry, config.size, h)
        euler = mesh.num_vertices - mesh.num_edges + mesh.num_triangles
        print(
            f"{config.geometry:8s}  {h:8.4f}  {mesh_mod.meshwidth(mesh):8.4f}"
            f"  {mesh.num_vertices:8d}  {mesh.num_edges:5d}  {mesh.num_triangles:9d}  {euler:5d}"
        )
        if mesh_out:
            path = out_dir / f"{config.geometry}_h{h:g}.mesh"
            mesh_mod.save_mesh(mesh, path)
            outputs.append(path)
    return outputs, True


def cmd_convergence(config: RunConfig, out_dir: Path) -> tuple[list, bool]:
    if config.geometry != "sphere":
        raise ValueError("the convergence study needs the sphere (exact solution is a Mie series)")
    tasks = [(config, h, ratio) for h in config.h for ratio in config.kappa_prime_ratio]
    results = _map_jobs(_convergence_point, tasks, config.jobs)
    records = [rec for rec, _ in results]
    ok = all(flag for _, flag in results)
    path = out_dir / "convergence.csv"
    analysis.write_records(path, records)
    return [path], ok


def _run_conditioning(config: RunConfig, out_dir: Path, tasks, name: str) -> tuple[list, bool]:
    results = _map_jobs(_conditioning_point, tasks, config.jobs)
    records = [rec for rec, _ in results]
    ok = all(flag for _, flag in results)
    path = out_dir / name
    analysis.write_records(path, records)
    return [path], ok


def cmd_sweep_h(config: RunConfig, out_dir: Path) -> tuple[list, bool]:
    tasks = [(config, h, config.kappa[0]) for h in config.h]
    return _run_conditioning(config, out_dir, tasks, "sweep_h.csv")


def cmd_sweep_kappa(config: RunConfig, out_dir: Path) -> tuple[list, bool]:
    tasks = [(config, config.h[0], kappa) for kappa in config.kappa]
    return _run_conditioning(config, out_dir, tasks, "sweep_kappa.csv")


def cmd_sweep_eta(config: RunConfig, out_dir: Path) -> tuple[list, bool]:
    """Coupling sweep at fixed mesh and wavenumber.

    The assembled kernel passes are shared across the whole sweep (the Schur
    operator is affine in eta), so this command builds one system and only
    the eigensolves repeat.
    """
    kappa = config.kappa[0]
    ratio = config.kappa_prime_ratio[0]
    mesh = _build_mesh(config.geometry, config.size, config.h[0])
    system = cfie.build_system(mesh, kappa, ratio * kappa, config.eta_scale * kappa**2, quad=_quad(config))
    scales = np.logspace(-config.eta_decades, config.eta_decades, 2 * config.eta_decades + 1)
    etas = [sign * float(s) * kappa**2 for sign in (1.0, -1.0) for s in scales]
    conds = analysis.eta_sweep_conditions(system, etas)
    wave = _plane_wave(kappa)
    b = cfie.assemble_system_rhs(system, wave)
    records, ok = [], True
    for eta, cond in zip(etas, conds):
        sibling = cfie.with_coupling(system, eta)
        try:
            _, _, _, iters = cfie.solve(sibling, b, tol=config.tol, max_iter=config.max_iter)
        except cfie.GmresFailure as failure:
            iters, ok = len(failure.residuals), False
        records.append(
            analysis.SweepRecord(
                geom=config.geometry, h=mesh_mod.meshwidth(mesh), kappa=kappa,
                kappa_prime=ratio * kappa, eta=eta, cond_cfie=cond, iters_cfie=iters,
            )
        )
    path = out_dir / "sweep_eta.csv"
    analysis.write_records(path, records)
    return [path], ok


def cmd_mie_validate(config: RunConfig) -> bool:
    """Self-check of the Mie oracle: PEC boundary condition and truncation."""
    kappa = config.kappa[0]
    sol = mie.build_mie(kappa, config.size)
    surface = analysis.eval_points_sphere(200, config.size)
    wave = _plane_wave(kappa)
    scattered = mie.eval_mie(sol, surface)
    incident = potentials.eval_incident(wave, surface)
    worst_bc = 0.0
    for point, s, i in zip(surface, scattered, incident):
        normal = point / np.linalg.norm(point)
        total = s.e + i.e
        worst_bc = max(worst_bc, float(np.linalg.norm(np.cross(total, normal))))

    deeper = mie.build_mie(kappa, config.size, n_terms=sol.n_terms + 8)
    ring = analysis.eval_points_sphere(64, config.point_radius)
    base_fields = mie.eval_mie(sol, ring)
    deep_fields = mie.eval_mie(deeper, ring)
    drift = max(
        float(np.linalg.norm(a.e - b.e)) for a, b in zip(base_fields, deep_fields)
    )
    ok = worst_bc < 1e-8 and drift < 1e-8
    print(f"PEC boundary residual (200 surface samples): {worst_bc:.3e}")
    print(f"series truncation drift (+8 terms):          {drift:.3e}")
    print("mie-validate:", "PASS" if ok else "FAIL")
    return ok


def cmd_dump_matrices(config: RunConfig, out_dir: Path) -> tuple[list, bool]:
    kappa = config.kappa[0]
    ratio = config.kappa_prime_ratio[0]
    mesh = _build_mesh(config.geometry, config.size, config.h[0])
    system = cfie.build_system(
        mesh, kappa, ratio * kappa, config.eta_scale * kappa**2,
        quad=_quad(config), keep_eta_parts=False,
    )
    outputs = []
    for name, block in (
        ("S", system.S), ("K", system.K), ("M", system.M),
        ("Z", system.Z), ("C", system.C), ("G", system.G.astype(np.complex128)),
    ):
        path = out_dir / f"{name}.cdm"
        operators.save_matrix(path, block)
        outputs.append(path)
    mesh_path = out_dir / "mesh.txt"
    mesh_mod.save_mesh(mesh, mesh_path)
    outputs.append(mesh_path)
    return outputs, True


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emcfie",
        description="dense boundary-element experiments for PEC scattering",
    )
    parser.add_argument("--config", type=Path, default=None, help="INI config file")
    parser.add_argument("--out", type=str, default=None, help="output directory override")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes for sweep points")
    sub = parser.add_subparsers(dest="command", required=True)
    info = sub.add_parser("mesh-info", help="print mesh statistics for each h")
    info.add_argument("--mesh-out", action="store_true", help="also write mesh files")
    sub.add_parser("convergence", help="Mie-vs-BEM error across h and kappa'/kappa")
    sub.add_parser("sweep-h", help="condition numbers across meshwidths")
    sub.add_parser("sweep-kappa", help="condition numbers across wavenumbers")
    sub.add_parser("sweep-eta", help="condition numbers across coupling values")
    sub.add_parser("mie-validate", help="self-check the Mie oracle")
    dump = sub.add_parser("dump-matrices", help="write assembled operator blocks")
    dump.add_argument("--dump-matrices", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = load_config(args.config, out=args.out, jobs=args.jobs)
    started = _now()

    if args.command == "mie-validate":
        return 0 if cmd_mie_validate(config) else 1

    out_dir = _prepare_out(config)
    if args.command == "mesh-info":
        outputs, ok = cmd_mesh_info(config, out_dir, args.mesh_out)
    elif args.command == "convergence":
        outputs, ok = cmd_convergence(config, out_dir)
    elif args.command == "sweep-h":
        outputs, ok = cmd_sweep_h(config, out_dir)
    elif args.command == "sweep-kappa":
        outputs, ok = cmd_sweep_kappa(config, out_dir)
    elif args.command == "sweep-eta":
        outputs, ok = cmd_sweep_eta(config, out_dir)
    elif args.command == "dump-matrices":
        outputs, ok = cmd_dump_matrices(config, out_dir)
    else:  # pragma: no cover - argparse enforces the choices
        raise AssertionError(args.command)

    _write_manifest(out_dir, args.command, config, outputs, started, ok)
    if not ok:
        print("some sweep points failed; see the CSV for partial rows", file=sys.stderr)
    return 0 if ok else 1
