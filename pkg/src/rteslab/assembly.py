"""Assembly of the even-parity system.

Field conventions used throughout the package:

* even coefficients: array of shape (N, L+1, J+1) indexed by angular cell,
  Legendre degree, and spatial node;
* odd coefficients: array of shape (N, L+2, J) indexed by angular cell,
  Legendre degree, and spatial element (piecewise constant in z).

The transport form b splits into independent symmetric positive definite
banded blocks, one per angular cell, with unknowns ordered degree-fast and
node-slow.  Scattering couples the cells only through the scalar flux.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import kernels
from .angular import AngularGrid, AngularMatrices, _basis_table, angular_matrices, cell_quadrature
from .spatial import (
    CrossSectionError,
    CrossSections,
    SpatialMesh,
    _weighted_bands,
    element_quadrature,
    tridiag_apply,
    validate_cross_sections,
)

__all__ = [
    "AssemblyError",
    "DiscreteSystem",
    "ProblemData",
    "assemble_dsa_matrix",
    "assemble_load",
    "assemble_system",
    "build_prolongation",
    "even_zeros",
    "odd_zeros",
    "prolong",
    "restrict",
    "scalar_flux",
]

SQRT2 = np.sqrt(2.0)


class AssemblyError(RuntimeError):
    """Assembled operator lost a structural property (definiteness, symmetry)."""


def _eval_zmu(f: Callable, z, mu, shape):
    return np.broadcast_to(np.asarray(f(z, mu), dtype=float), shape)


def _eval_mu(f: Callable, mu):
    return np.broadcast_to(np.asarray(f(mu), dtype=float), np.shape(mu))


@dataclass(frozen=True)
class ProblemData:
    """Even/odd source parts and inflow boundary values.

    q_even, q_odd : vectorized callables of (z, mu)
    g0            : inflow at z = 0 as a callable of mu > 0
    gZ            : inflow at z = Z as a callable of mu < 0
    """

    q_even: Callable
    q_odd: Callable
    g0: Callable
    gZ: Callable

    @classmethod
    def zero(cls) -> "ProblemData":
        none = lambda *args: 0.0
        return cls(none, none, none, none)

    @classmethod
    def isotropic(cls, q_of_z: Callable, g0=None, gZ=None) -> "ProblemData":
        """Direction-independent source q(z); the odd part vanishes."""
        zero = lambda *args: 0.0
        return cls(
            q_even=lambda z, mu: q_of_z(z) * np.ones_like(np.asarray(mu, dtype=float)),
            q_odd=zero,
            g0=g0 if g0 is not None else zero,
            gZ=gZ if gZ is not None else zero,
        )

    def check_parity(self, thickness: float, seed: int = 0):
        """Sample-check that q_even is even and q_odd is odd in mu."""
        rng = np.random.default_rng(seed)
        z = rng.uniform(0.0, thickness, 64)
        mu = rng.uniform(1e-3, 1.0, 64)
        qe_p = _eval_zmu(self.q_even, z, mu, z.shape)
        qe_m = _eval_zmu(self.q_even, z, -mu, z.shape)
        qo_p = _eval_zmu(self.q_odd, z, mu, z.shape)
        qo_m = _eval_zmu(self.q_odd, z, -mu, z.shape)
        scale = 1.0 + max(np.abs(qe_p).max(), np.abs(qo_p).max())
        if np.abs(qe_p - qe_m).max() > 1e-10 * scale:
            raise ValueError("q_even is not even in mu")
        if np.abs(qo_p + qo_m).max() > 1e-10 * scale:
            raise ValueError("q_odd is not odd in mu")


@dataclass
class DiscreteSystem:
    """Assembled even-parity operator with cached factorizations."""

    grid: AngularGrid
    mesh: SpatialMesh
    xs: CrossSections
    ang: AngularMatrices
    mass_t: tuple
    stiff_inv_t: tuple
    scatter_mass: tuple
    blocks: np.ndarray
    block_factors: np.ndarray
    prolongation: sp.csr_matrix
    contraction: float
    dsa_matrix: np.ndarray | None = None
    _dsa_cho: tuple | None = field(default=None, repr=False)

    @property
    def shape(self):
        return (self.grid.n_cells, self.grid.degree + 1, self.mesh.n_elements + 1)

    def to_block_vectors(self, u: np.ndarray) -> np.ndarray:
        """(N, L+1, J+1) field to per-block vectors (N, M), degree-fast ordering."""
        n, d, jn = self.shape
        return np.ascontiguousarray(np.swapaxes(u, 1, 2)).reshape(n, d * jn)

    def from_block_vectors(self, v: np.ndarray) -> np.ndarray:
        n, d, jn = self.shape
        return np.ascontiguousarray(np.swapaxes(v.reshape(n, jn, d), 1, 2))

    def apply_b(self, u: np.ndarray) -> np.ndarray:
        """Apply the transport form (boundary + streaming + total collision)."""
        out = np.einsum("nab,nbj->naj", self.ang.mu2, tridiag_apply(*self.stiff_inv_t, u))
        out += np.einsum("nab,nbj->naj", self.ang.mass, tridiag_apply(*self.mass_t, u))
        out[:, :, 0] += 2.0 * np.einsum("nab,nb->na", self.ang.inflow, u[:, :, 0])
        out[:, :, -1] += 2.0 * np.einsum("nab,nb->na", self.ang.inflow, u[:, :, -1])
        return out

    def apply_k(self, u: np.ndarray) -> np.ndarray:
        """Apply the scattering form through the scalar flux."""
        pu = 0.5 * np.einsum("na,naj->j", self.ang.moments, u)
        spu = tridiag_apply(*self.scatter_mass, pu)
        return self.ang.moments[:, :, None] * spu[None, None, :]

    def apply_a(self, u: np.ndarray) -> np.ndarray:
        return self.apply_b(u) - self.apply_k(u)

    def a_dot(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(v * self.apply_a(u)))

    def dsa_solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._dsa_cho is None:
            raise AssemblyError("subspace correction matrix has not been assembled")
        return scipy.linalg.cho_solve(self._dsa_cho, rhs)


def even_zeros(grid: AngularGrid, mesh: SpatialMesh) -> np.ndarray:
    return np.zeros((grid.n_cells, grid.degree + 1, mesh.n_elements + 1))


def odd_zeros(grid: AngularGrid, mesh: SpatialMesh) -> np.ndarray:
    return np.zeros((grid.n_cells, grid.degree + 2, mesh.n_elements))


def prolong(grid: AngularGrid, mesh: SpatialMesh, w: np.ndarray) -> np.ndarray:
    """Embed a nodal function of z as the direction-independent even field."""
    out = even_zeros(grid, mesh)
    out[:, 0, :] = SQRT2 * np.asarray(w, dtype=float)
    return out


def restrict(u: np.ndarray) -> np.ndarray:
    """Transpose of prolong: contract an even field to the nodal scalar space."""
    return SQRT2 * u[:, 0, :].sum(axis=0)


def scalar_flux(system: DiscreteSystem, u: np.ndarray) -> np.ndarray:
    """Angular average of an even field, exact on the nodal P1 space."""
    return 0.5 * np.einsum("na,naj->j", system.ang.moments, u)


def build_prolongation(grid: AngularGrid, mesh: SpatialMesh) -> sp.csr_matrix:
    """Sparse matrix of prolong over C-ravelled (n, l, j) coefficients."""
    n, d, jn = grid.n_cells, grid.degree + 1, mesh.n_elements + 1
    cols = np.tile(np.arange(jn), n)
    rows = (np.arange(n)[:, None] * d * jn + np.arange(jn)[None, :]).ravel()
    vals = np.full(n * jn, SQRT2)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n * d * jn, jn))


def _assemble_blocks(grid, ang, mass_t, stiff_inv_t, n_elements):
    n, d = ang.moments.shape
    jn = n_elements + 1
    kd = 2 * d - 1
    dm, om = mass_t
    ds, os_ = stiff_inv_t
    blocks = np.zeros((n, kd + 1, d * jn))
    for l in range(d):
        for lp in range(d):
            t_ll = ang.mu2[:, l, lp][:, None]
            m_ll = ang.mass[:, l, lp][:, None]
            if l >= lp:
                same = blocks[:, l - lp, lp::d]
                same += t_ll * ds[None, :] + m_ll * dm[None, :]
                same[:, 0] += 2.0 * ang.inflow[:, l, lp]
                same[:, -1] += 2.0 * ang.inflow[:, l, lp]
            prev = blocks[:, d + l - lp, lp::d][:, :n_elements]
            prev += t_ll * os_[None, :] + m_ll * om[None, :]
    return blocks


def assemble_system(grid: AngularGrid, mesh: SpatialMesh, xs: CrossSections,
                    n_quad: int = 3) -> DiscreteSystem:
    """Assemble and factor the discrete even-parity operator.

    Validates the cross sections first, then builds the per-cell banded
    transport blocks, the scattering moment structure, the subspace
    prolongation, and the subspace-projected correction matrix.
    """
    report = validate_cross_sections(xs, mesh)
    if not report.ok:
        raise CrossSectionError(report)
    ang = angular_matrices(grid)
    mass_t = _weighted_bands(mesh, xs.sigma_t, "mass", n_quad)
    stiff_inv_t = _weighted_bands(mesh, lambda z: 1.0 / xs.sigma_t(z), "stiffness", n_quad)
    scatter_mass = _weighted_bands(mesh, xs.sigma_s, "mass", n_quad)
    blocks = _assemble_blocks(grid, ang, mass_t, stiff_inv_t, mesh.n_elements)
    try:
        factors = kernels.cholesky_banded_many(blocks)
    except np.linalg.LinAlgError as err:
        raise AssemblyError(f"transport block factorization failed: {err}") from err

    system = DiscreteSystem(
        grid=grid,
        mesh=mesh,
        xs=xs,
        ang=ang,
        mass_t=mass_t,
        stiff_inv_t=stiff_inv_t,
        scatter_mass=scatter_mass,
        blocks=blocks,
        block_factors=factors,
        prolongation=build_prolongation(grid, mesh),
        contraction=report.contraction,
    )
    system.dsa_matrix = assemble_dsa_matrix(system)
    try:
        system._dsa_cho = scipy.linalg.cho_factor(system.dsa_matrix)
    except np.linalg.LinAlgError as err:
        raise AssemblyError(f"correction matrix lost positive definiteness: {err}") from err
    return system


def assemble_dsa_matrix(system: DiscreteSystem) -> np.ndarray:
    """Galerkin restriction of the full operator to the direction-independent subspace.

    Column j is restrict(A prolong(e_j)); no separate diffusion stencil is
    derived, so the projection property of the correction holds for any
    angular grid.
    """
    jn = system.mesh.n_elements + 1
    out = np.empty((jn, jn))
    w = np.zeros(jn)
    for j in range(jn):
        w[j] = 1.0
        out[:, j] = restrict(system.apply_a(prolong(system.grid, system.mesh, w)))
        w[j] = 0.0
    return out


def assemble_load(system: DiscreteSystem, data: ProblemData,
                  n_quad_angular: int | None = None, n_quad_spatial: int = 5,
                  cell_chunk: int = 512) -> np.ndarray:
    """Assemble the load functional over the even coefficients.

    Combines the even source, the inflow boundary data, and the odd source
    tested against the streaming derivative.  Quadrature orders default to
    L+4 points per angular cell and 5 per spatial element, enough for the
    smooth analytic data used in the studies.
    """
    grid, mesh = system.grid, system.mesh
    data.check_parity(mesh.thickness)
    d = grid.degree + 1
    nqa = (grid.degree + 4) if n_quad_angular is None else n_quad_angular
    mu_pts, mu_wts = cell_quadrature(grid, nqa)
    q_table = _basis_table(grid, grid.degree, nqa)  # (d, nqa)
    z_pts, z_wts = element_quadrature(mesh, n_quad_spatial)
    h = mesh.lengths
    hat_l = (mesh.nodes[1:, None] - z_pts) / h[:, None]
    hat_r = (z_pts - mesh.nodes[:-1, None]) / h[:, None]
    inv_st = 1.0 / np.broadcast_to(np.asarray(system.xs.sigma_t(z_pts), dtype=float), z_pts.shape)

    load = even_zeros(grid, mesh)
    for c0 in range(0, grid.n_cells, cell_chunk):
        c1 = min(c0 + cell_chunk, grid.n_cells)
        mu = mu_pts[c0:c1]
        w = mu_wts[c0:c1]
        shape = (c1 - c0, nqa, mesh.n_elements, n_quad_spatial)
        zz = z_pts[None, None, :, :]
        mm = mu[:, :, None, None]
        qe = _eval_zmu(data.q_even, zz, mm, shape)
        qo = _eval_zmu(data.q_odd, zz, mm, shape)
        # Even integrands over (-1, 1) are twice their positive-half integral.
        even_part = 2.0 * np.einsum("na,la,naes->nles", w, q_table, qe, optimize=True)
        odd_part = 2.0 * np.einsum("na,na,la,naes->nles", w, mu, q_table, qo, optimize=True)
        load[c0:c1, :, :-1] += np.einsum("nles,es->nle", even_part, z_wts * hat_l, optimize=True)
        load[c0:c1, :, 1:] += np.einsum("nles,es->nle", even_part, z_wts * hat_r, optimize=True)
        grad = z_wts * inv_st / h[:, None]
        load[c0:c1, :, :-1] -= np.einsum("nles,es->nle", odd_part, grad, optimize=True)
        load[c0:c1, :, 1:] += np.einsum("nles,es->nle", odd_part, grad, optimize=True)

    g0 = _eval_mu(data.g0, mu_pts)
    gz = _eval_mu(data.gZ, -mu_pts)
    load[:, :, 0] += 2.0 * np.einsum("na,la->nl", mu_wts * mu_pts * g0, q_table)
    load[:, :, -1] += 2.0 * np.einsum("na,la->nl", mu_wts * mu_pts * gz, q_table)
    return load
