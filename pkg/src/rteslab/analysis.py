"""Study harness: manufactured solutions, error measures, and iteration spectra."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .angular import AngularGrid, _basis_table, angular_matrices, cell_quadrature
from .assembly import (
    DiscreteSystem,
    ProblemData,
    assemble_load,
    assemble_system,
    odd_zeros,
    prolong,
    scalar_flux,
)
from .solver import SolverConfig, dsa_correction, source_iteration, transport_solve
from .spatial import CrossSections, SpatialMesh, element_quadrature, tridiag_apply

__all__ = [
    "ManufacturedCase",
    "SpectrumResult",
    "StudyRow",
    "convergence_study",
    "error_propagation_spectrum",
    "l2_error",
    "manufactured_data",
    "norm_decomposition",
    "recover_odd",
]


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form solution with coefficients and data that reproduce it.

    phi(z, mu) = |mu| exp(-mu) exp(-z(1-z)) on the unit slab with
    sigma_a = 1/100 and sigma_s(z) = 2 + sin(pi z)/2.
    """

    xs: CrossSections
    data: ProblemData
    phi: callable
    phi_even: callable
    phi_odd: callable
    flux: callable
    thickness: float = 1.0


def manufactured_data() -> ManufacturedCase:
    sigma_a = 0.01
    sigma_s = lambda z: 2.0 + 0.5 * np.sin(np.pi * z)
    sigma_t = lambda z: sigma_a + sigma_s(z)
    xs = CrossSections(sigma_t, sigma_s, gamma=0.005)

    g = lambda z: np.exp(-z * (1.0 - z))
    mean = 1.0 - np.exp(-1.0)  # half-range average of |mu| exp(-mu)

    phi = lambda z, mu: np.abs(mu) * np.exp(-mu) * g(z)
    phi_even = lambda z, mu: np.abs(mu) * np.cosh(mu) * g(z)
    phi_odd = lambda z, mu: -np.abs(mu) * np.sinh(mu) * g(z)
    flux = lambda z: mean * g(z)

    # Strong residual q = mu dphi/dz + sigma_t phi - sigma_s (average of phi),
    # split into its even and odd parts in mu.
    def q_even(z, mu):
        amu = np.abs(mu)
        return (-mu * amu * np.sinh(mu) * (2.0 * z - 1.0)
                + sigma_t(z) * amu * np.cosh(mu) - sigma_s(z) * mean) * g(z)

    def q_odd(z, mu):
        amu = np.abs(mu)
        return (mu * amu * np.cosh(mu) * (2.0 * z - 1.0)
                - sigma_t(z) * amu * np.sinh(mu)) * g(z)

    data = ProblemData(
        q_even=q_even,
        q_odd=q_odd,
        g0=lambda mu: phi(0.0, mu),
        gZ=lambda mu: phi(1.0, mu),
    )
    return ManufacturedCase(xs=xs, data=data, phi=phi, phi_even=phi_even,
                            phi_odd=phi_odd, flux=flux)


def recover_odd(system: DiscreteSystem, u_h: np.ndarray, q_odd=None,
                n_quad_angular: int | None = None, n_quad_spatial: int = 5,
                cell_chunk: int = 512) -> np.ndarray:
    """Project (q_odd - mu d/dz u_h) / sigma_t onto the odd space.

    The odd space carries one extra Legendre degree per angular cell and is
    piecewise constant in z, so the projection decouples into small dense
    angular Gram solves per cell and element.
    """
    grid, mesh = system.grid, system.mesh
    deg = grid.degree + 1
    ext = angular_matrices(grid, degree=deg)
    gram = ext.mass  # (N, L+2, L+2), diagonal up to roundoff
    coupling = ext.inflow[:, :, : grid.degree + 1]  # integral of mu Q_l' Q_l per cell

    h = mesh.lengths
    pts, wts = element_quadrature(mesh, n_quad_spatial)
    inv_st = 1.0 / np.broadcast_to(np.asarray(system.xs.sigma_t(pts), dtype=float), pts.shape)
    inv_int = np.sum(wts * inv_st, axis=1)  # integral of 1/sigma_t per element

    slopes = (u_h[:, :, 1:] - u_h[:, :, :-1]) / h[None, None, :]
    rhs = -2.0 * np.einsum("nba,nae->nbe", coupling, slopes) * inv_int[None, None, :]

    if q_odd is not None:
        nqa = (deg + 4) if n_quad_angular is None else n_quad_angular
        mu_pts, mu_wts = cell_quadrature(grid, nqa)
        q_table = _basis_table(grid, deg, nqa)
        for c0 in range(0, grid.n_cells, cell_chunk):
            c1 = min(c0 + cell_chunk, grid.n_cells)
            shape = (c1 - c0, nqa, mesh.n_elements, n_quad_spatial)
            vals = np.broadcast_to(
                np.asarray(q_odd(pts[None, None, :, :], mu_pts[c0:c1, :, None, None]),
                           dtype=float), shape)
            ang = 2.0 * np.einsum("na,la,naes->nles", mu_wts[c0:c1], q_table, vals,
                                  optimize=True)
            rhs[c0:c1] += np.einsum("nles,es->nle", ang, wts * inv_st, optimize=True)

    rhs /= h[None, None, :]
    return np.linalg.solve(gram, rhs)


def l2_error(grid: AngularGrid, mesh: SpatialMesh, u_h: np.ndarray,
             odd_h: np.ndarray | None, exact, n_quad: int = 6,
             cell_chunk: int = 512) -> float:
    """L2 distance over the slab-angle rectangle between exact and discrete solution.

    The discrete solution is the even field plus (optionally) the recovered
    odd field; tensor Gauss quadrature with n_quad points per angular cell
    and spatial element.
    """
    if odd_h is None:
        odd_h = odd_zeros(grid, mesh)
    mu_pts, mu_wts = cell_quadrature(grid, n_quad)
    basis_even = _basis_table(grid, grid.degree, n_quad)
    basis_odd = _basis_table(grid, grid.degree + 1, n_quad)
    z_pts, z_wts = element_quadrature(mesh, n_quad)
    h = mesh.lengths
    hat_l = (mesh.nodes[1:, None] - z_pts) / h[:, None]
    hat_r = (z_pts - mesh.nodes[:-1, None]) / h[:, None]

    total = 0.0
    for c0 in range(0, grid.n_cells, cell_chunk):
        c1 = min(c0 + cell_chunk, grid.n_cells)
        nc = c1 - c0
        even_vals = np.einsum("nle,es,la->naes", u_h[c0:c1, :, :-1], hat_l, basis_even,
                              optimize=True)
        even_vals += np.einsum("nle,es,la->naes", u_h[c0:c1, :, 1:], hat_r, basis_even,
                               optimize=True)
        odd_vals = np.einsum("nle,la->nae", odd_h[c0:c1], basis_odd)[:, :, :, None]
        zz = z_pts[None, None, :, :]
        mm = mu_pts[c0:c1][:, :, None, None]
        shape = (nc, n_quad, mesh.n_elements, n_quad)
        err_pos = np.broadcast_to(np.asarray(exact(zz, mm), dtype=float), shape) \
            - (even_vals + odd_vals)
        err_neg = np.broadcast_to(np.asarray(exact(zz, -mm), dtype=float), shape) \
            - (even_vals - odd_vals)
        w = mu_wts[c0:c1][:, :, None, None] * z_wts[None, None, :, :]
        total += float(np.sum(w * (err_pos**2 + err_neg**2)))
    return float(np.sqrt(total))


@dataclass
class StudyRow:
    level: int
    error: float
    rate: float | None
    iterations: int
    converged: bool


def convergence_study(parameter: str, levels, fixed: int, degree: int = 0,
                      tolerance: float = 1e-10, max_iterations: int = 200) -> list:
    """Manufactured-solution error sweep over angular (N) or spatial (J) resolution.

    parameter is "N" or "J"; fixed is the value of the other one.  Rates
    are observed orders with respect to the swept resolution.
    """
    if parameter not in ("N", "J"):
        raise ValueError("parameter must be 'N' or 'J'")
    levels = list(levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly increasing")
    case = manufactured_data()
    cfg = SolverConfig(tolerance=tolerance, max_iterations=max_iterations)
    rows = []
    for level in levels:
        n_cells = level if parameter == "N" else fixed
        n_elems = fixed if parameter == "N" else level
        grid = AngularGrid.uniform(n_cells, degree)
        mesh = SpatialMesh.uniform(n_elems, case.thickness)
        system = assemble_system(grid, mesh, case.xs)
        load = assemble_load(system, case.data)
        u_h, report = source_iteration(system, load, cfg)
        odd_h = recover_odd(system, u_h, case.data.q_odd)
        err = l2_error(grid, mesh, u_h, odd_h, case.phi)
        rate = None
        if rows:
            prev = rows[-1]
            rate = float(np.log(prev.error / err) / np.log(level / prev.level))
        rows.append(StudyRow(level=level, error=err, rate=rate,
                             iterations=report.iterations, converged=report.converged))
    return rows


@dataclass
class SpectrumResult:
    """Error-propagation operator on the nodal scalar-flux space and its spectrum."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    n_cells: int
    n_elements: int
    asymmetry: float


def error_propagation_spectrum(system: DiscreteSystem) -> SpectrumResult:
    """Spectrum of the map taking the scalar-flux error through one corrected iteration.

    Each column applies the zero-load iteration map to the prolonged nodal
    basis vector and reads back the scalar flux.  Writing the correction
    projector out shows the map factors as (symmetric PSD) times
    inv(inv(S) + 2 inv(D)) with S the scattering-weighted nodal mass and D
    the subspace-projected operator, so it is self-adjoint in the inner
    product weighted by that inverse sum and its eigenvalues are real and
    non-negative; requires sigma_s > 0 so that S is invertible.
    """
    pts, _ = element_quadrature(system.mesh, 5)
    sig_s = np.broadcast_to(np.asarray(system.xs.sigma_s(pts), dtype=float), pts.shape)
    if sig_s.min() <= 0.0:
        raise ValueError("spectrum requires sigma_s > 0 on the slab")

    jn = system.mesh.n_elements + 1
    g_mat = np.empty((jn, jn))
    w = np.zeros(jn)
    for j in range(jn):
        w[j] = 1.0
        e = prolong(system.grid, system.mesh, w)
        e_half = transport_solve(system, system.apply_k(e))
        e_next = e_half + dsa_correction(system, e_half - e)
        g_mat[:, j] = scalar_flux(system, e_next)
        w[j] = 0.0

    diag, off = system.scatter_mass
    s_mat = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    weight = np.linalg.inv(np.linalg.inv(s_mat) + 2.0 * np.linalg.inv(system.dsa_matrix))
    wg = weight @ g_mat
    asym = float(np.linalg.norm(wg - wg.T) / max(np.linalg.norm(wg), np.finfo(float).tiny))
    eigenvalues = scipy.linalg.eigh(0.5 * (wg + wg.T), weight, eigvals_only=True)
    return SpectrumResult(matrix=g_mat, eigenvalues=np.sort(eigenvalues),
                          n_cells=system.grid.n_cells, n_elements=system.mesh.n_elements,
                          asymmetry=asym)


def norm_decomposition(system: DiscreteSystem, e: np.ndarray) -> dict:
    """Split the transport-form energy b(e, e) into its four components.

    Keys: 'scalar_collision' for the direction-averaged collision part,
    'fluctuation_collision' for its orthogonal complement, 'boundary' for
    the full trace term as it enters the form, and 'streaming' for the
    weighted derivative term.  The components sum to b(e, e).
    """
    pu = scalar_flux(system, e)
    scalar = 2.0 * float(pu @ tridiag_apply(*system.mass_t, pu))
    collision = float(np.einsum("nab,naj,nbj->", system.ang.mass, e,
                                tridiag_apply(*system.mass_t, e)))
    streaming = float(np.einsum("nab,naj,nbj->", system.ang.mu2, e,
                                tridiag_apply(*system.stiff_inv_t, e)))
    boundary = 2.0 * float(
        np.einsum("nab,na,nb->", system.ang.inflow, e[:, :, 0], e[:, :, 0])
        + np.einsum("nab,na,nb->", system.ang.inflow, e[:, :, -1], e[:, :, -1])
    )
    return {
        "scalar_collision": scalar,
        "fluctuation_collision": collision - scalar,
        "boundary": boundary,
        "streaming": streaming,
    }
