"""Block system and Schur-complement solver for the regularized CFIE.

The mixed Galerkin formulation couples three length-N coefficient vectors:
xi (dual space), phi and psi (primal space), through the block system

    [ 0   M+Z   C ] [xi ]   [b]
    [ S   -G    0 ] [phi] = [0],      b_m = -int u_m . e_in ds,
    [ K    0   -G ] [psi]   [0]

where G is the mixed dual/primal pairing matrix.  Eliminating phi and psi
gives the Schur operator

    L = (M + Z) G^{-1} S + C G^{-1} K,

which is what GMRES iterates on, left-conditioned by G^{-T}.  G is sparse
(supports overlap only) and is factored once with SuperLU; all other blocks
are dense.  M and Z depend on the coupling parameter eta only through
scalar coefficients, so systems for new eta values are recombined from the
cached kernel passes without reassembly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .mesh import TriangleMesh, barycentric_refine
from .operators import QuadratureConfig, _layer_matrices, _overlap_matrix, assemble_S
from .quadrature import gauss_triangle_rule
from .spaces import BasisSpace, build_bc_space, build_rt0_space, refine_rt0_space


@dataclass(frozen=True)
class CouplingParameter:
    """Real nonzero coupling weight of the imaginary-wavenumber branch."""

    eta: float

    def __post_init__(self):
        if not np.isfinite(self.eta) or self.eta == 0.0:
            raise ValueError(f"coupling parameter must be nonzero, got {self.eta!r}")


@dataclass(frozen=True)
class PlaneWave:
    """Incident field e_in(x) = p exp(i kappa d.x) with unit p, d and p.d = 0."""

    polarization: tuple
    direction: tuple
    kappa: float

    def __post_init__(self):
        p, d = self.unit_vectors()
        if abs(np.linalg.norm(p) - 1.0) > 1e-12 or abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("polarization and direction must be unit vectors")
        if abs(p @ d) > 1e-12:
            raise ValueError("polarization must be orthogonal to direction")
        if self.kappa <= 0.0:
            raise ValueError("wavenumber must be positive")

    def unit_vectors(self):
        return np.asarray(self.polarization, float), np.asarray(self.direction, float)


class GmresFailure(RuntimeError):
    """GMRES did not reach the requested tolerance; carries the residual history."""

    def __init__(self, message, residuals):
        super().__init__(message)
        self.residuals = list(residuals)


@dataclass
class CfieSystem:
    """Assembled blocks plus the factored pairing matrix.

    Treated as immutable after assembly; `with_coupling` produces a sibling
    system for a new eta from the cached kernel passes.
    """

    wavenumber: kernels.Wavenumber
    coupling: CouplingParameter
    quad: QuadratureConfig
    rt0: BasisSpace
    bc: BasisSpace
    rtf: BasisSpace
    G: np.ndarray
    M: np.ndarray
    S: np.ndarray
    Z: np.ndarray
    C: np.ndarray
    K: np.ndarray
    _g_lu: object
    _mz: np.ndarray
    _eta_parts: tuple | None

    @property
    def dim(self) -> int:
        return self.rt0.dof_count


def _coupled_blocks(kappa, kappa_prime, eta, a_p, v_p, da, dv):
    m = (kappa_prime**2 + 1j * eta) * a_p + (1.0 - 1j * eta / kappa**2) * v_p
    z = 1j * eta * (da - dv / kappa**2)
    return m, z


def build_system(
    mesh: TriangleMesh,
    kappa: float,
    kappa_prime: float,
    eta: float,
    quad: QuadratureConfig | None = None,
    keep_eta_parts: bool = True,
) -> CfieSystem:
    """Assemble every block for one (mesh, kappa, kappa') pair.

    One fused kernel pass serves S and K (dual space, fine mesh), one the
    M ingredients (primal, Yukawa), one the Z and C ingredients (primal,
    difference kernel).  Set keep_eta_parts=False to drop the cached passes
    when no eta sweep is planned (saves four dense blocks).
    """
    quad = quad or QuadratureConfig()
    wn = kernels.Wavenumber(kappa, kappa_prime)
    coupling = CouplingParameter(eta)

    refined = barycentric_refine(mesh)
    rt0 = build_rt0_space(mesh)
    bc = build_bc_space(refined)
    rtf = refine_rt0_space(refined)

    a_bc, v_bc, c_bc = _layer_matrices(
        bc, bc, kernels.KERNEL_YUKAWA, kappa, kappa_prime, quad, True, True, True
    )
    s_blk = a_bc + v_bc / kappa_prime**2
    del a_bc, v_bc
    k_blk = 0.5 * _overlap_matrix(bc, bc, True) + c_bc
    del c_bc

    a_p, v_p, _ = _layer_matrices(
        rt0, rt0, kernels.KERNEL_YUKAWA, kappa, kappa_prime, quad, True, True, False
    )
    da, dv, dc = _layer_matrices(
        rt0, rt0, kernels.KERNEL_DIFFERENCE, kappa, kappa_prime, quad, True, True, True
    )
    m_blk, z_blk = _coupled_blocks(kappa, kappa_prime, eta, a_p, v_p, da, dv)

    gram = _overlap_matrix(bc, rtf, True).real
    # factored as complex so the solves accept complex right-hand sides
    g_lu = spla.splu(sp.csc_matrix(gram.astype(np.complex128)))

    return CfieSystem(
        wavenumber=wn,
        coupling=coupling,
        quad=quad,
        rt0=rt0,
        bc=bc,
        rtf=rtf,
        G=gram,
        M=m_blk,
        S=s_blk,
        Z=z_blk,
        C=dc,
        K=k_blk,
        _g_lu=g_lu,
        _mz=m_blk + z_blk,
        _eta_parts=(a_p, v_p, da, dv) if keep_eta_parts else None,
    )


def with_coupling(sys: CfieSystem, eta: float) -> CfieSystem:
    """Sibling system for a new eta, recombined from the cached passes."""
    if sys._eta_parts is None:
        raise ValueError("system was built with keep_eta_parts=False")
    wn = sys.wavenumber
    m_blk, z_blk = _coupled_blocks(wn.kappa, wn.kappa_prime, eta, *sys._eta_parts)
    return CfieSystem(
        wavenumber=wn,
        coupling=CouplingParameter(eta),
        quad=sys.quad,
        rt0=sys.rt0,
        bc=sys.bc,
        rtf=sys.rtf,
        G=sys.G,
        M=m_blk,
        S=sys.S,
        Z=z_blk,
        C=sys.C,
        K=sys.K,
        _g_lu=sys._g_lu,
        _mz=m_blk + z_blk,
        _eta_parts=sys._eta_parts,
    )


def assemble_rhs(wave: PlaneWave, test: BasisSpace, quad: QuadratureConfig | None = None):
    """[b]_m = -int (u_m x n).(e_in x n) ds = -int u_m . e_in ds.

    The two forms agree because u_m is tangential.  Per-triangle Gauss rule
    of order regular+2; the triangle Jacobian cancels against the RWG
    normalization, leaving -s ell sum_q w_q (x_q - opp).e_in(x_q) per local
    basis function.
    """
    quad = quad or QuadratureConfig()
    order = min(10, quad.regular_order + 2)
    mesh = test.mesh
    rule = gauss_triangle_rule(order)
    bary, w = rule.points, rule.weights
    p, d = wave.unit_vectors()

    verts = mesh.vertices[mesh.triangles]
    nodes = np.einsum("qk,fkd->fqd", bary, verts)
    field = np.exp(1j * wave.kappa * (nodes @ d))[..., None] * p
    lengths = np.linalg.norm(np.roll(verts, -1, axis=1) - verts, axis=2)

    b_edges = np.zeros(mesh.num_edges, dtype=np.complex128)
    for k in range(3):
        opp = verts[:, (k + 2) % 3]
        integrand = np.einsum("fqd,fqd->fq", nodes - opp[:, None, :], field)
        contrib = -(integrand @ w) * lengths[:, k] * test.rwg_signs[:, k]
        np.add.at(b_edges, mesh.triangle_to_edges[:, k], contrib)
    return test.coefficients @ b_edges


def assemble_system_rhs(sys: CfieSystem, wave: PlaneWave):
    """Right-hand side matching the first block row, which is tested with
    the primal div-conforming space (the M, Z, C row), not the dual one."""
    return assemble_rhs(wave, sys.rt0, sys.quad)


def schur_apply(sys: CfieSystem, xi):
    """L xi = (M+Z) G^{-1} (S xi) + C G^{-1} (K xi), matrix-free in G^{-1}."""
    xi = np.asarray(xi, dtype=np.complex128)
    lift_s = sys._g_lu.solve(sys.S @ xi)
    lift_k = sys._g_lu.solve(sys.K @ xi)
    return sys._mz @ lift_s + sys.C @ lift_k


def densify_schur(sys: CfieSystem):
    """Explicit L; two sparse solves with N right-hand sides, two dense products."""
    lift_s = sys._g_lu.solve(sys.S)
    lift_k = sys._g_lu.solve(sys.K)
    return sys._mz @ lift_s + sys.C @ lift_k


def precondition(sys: CfieSystem, rhs):
    """Apply G^{-T} to a vector or to the columns of a matrix."""
    return sys._g_lu.solve(np.asarray(rhs, dtype=np.complex128), trans="T")


def block_residual(sys: CfieSystem, b, xi, phi, psi) -> float:
    """Relative residual of all three block rows; the solve self-check."""
    r1 = sys._mz @ phi + sys.C @ psi - b
    r2 = sys.S @ xi - sys.G @ phi
    r3 = sys.K @ xi - sys.G @ psi
    num = np.sqrt(
        np.linalg.norm(r1) ** 2 + np.linalg.norm(r2) ** 2 + np.linalg.norm(r3) ** 2
    )
    return num / np.linalg.norm(b)


def solve(sys: CfieSystem, b, tol: float = 1e-8, max_iter: int = 2000):
    """Full (unrestarted) GMRES on G^{-T} L xi = G^{-T} b.

    Returns (xi, phi, psi, iterations); phi and psi are recovered from the
    second and third block rows.  Raises GmresFailure when the tolerance is
    not reached within max_iter inner iterations.
    """
    b = np.asarray(b, dtype=np.complex128)
    n = sys.dim
    if not np.any(b):
        zero = np.zeros(n, dtype=np.complex128)
        return zero, zero.copy(), zero.copy(), 0

    op = spla.LinearOperator(
        (n, n),
        matvec=lambda x: sys._g_lu.solve(schur_apply(sys, x), trans="T"),
        dtype=np.complex128,
    )
    rhs = precondition(sys, b)
    residuals = []
    xi, info = spla.gmres(
        op,
        rhs,
        rtol=tol,
        atol=0.0,
        restart=min(max_iter, n),
        maxiter=1,
        callback=residuals.append,
        callback_type="pr_norm",
    )
    iters = len(residuals)
    if info != 0:
        raise GmresFailure(
            f"GMRES stalled at relative residual "
            f"{residuals[-1] if residuals else np.inf:.3e} "
            f"after {iters} iterations (tol {tol:g})",
            residuals,
        )
    phi = sys._g_lu.solve(sys.S @ xi)
    psi = sys._g_lu.solve(sys.K @ xi)
    return xi, phi, psi, iters


def build_efie_reference(kappa: float, rt0: BasisSpace, quad: QuadratureConfig | None = None):
    """Plain sigma = kappa single-layer system on the primal space.

    Returns (matrix, solver).  solver(b, tol=None) does a dense direct
    solve; with a tolerance it runs unrestarted GMRES and returns the
    count, capped at max_iter, without raising (stagnation near resonant
    wavenumbers is the phenomenon under study, not an error).
    """
    quad = quad or QuadratureConfig()
    matrix = assemble_S(float(kappa), rt0, rt0, quad)

    def solver(b, tol=None, max_iter=2000):
        b = np.asarray(b, dtype=np.complex128)
        if tol is None:
            return np.linalg.solve(matrix, b), 0
        residuals = []
        x, _ = spla.gmres(
            matrix,
            b,
            rtol=tol,
            atol=0.0,
            restart=min(max_iter, len(b)),
            maxiter=1,
            callback=residuals.append,
            callback_type="pr_norm",
        )
        return x, len(residuals)

    return matrix, solver
