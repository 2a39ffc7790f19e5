"""Shared helpers: pointwise field evaluators and quadrature-based form oracles.

Everything here avoids the package's assembled matrices on purpose; forms
are integrated directly from their definitions using basis_eval and dense
tensor quadrature, so these routines can serve as independent oracles.
"""

import numpy as np
import pytest

from rteslab.angular import AngularGrid, basis_eval
from rteslab.spatial import CrossSections, SpatialMesh


def eval_even_field(grid, mesh, coeffs, z, mu):
    """Pointwise value of an even field; z and mu are broadcastable arrays."""
    z = np.asarray(z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    out = np.zeros(np.broadcast(z, mu).shape)
    for n in range(grid.n_cells):
        for l in range(grid.degree + 1):
            profile = np.interp(z, mesh.nodes, coeffs[n, l])
            out += profile * basis_eval(grid, n, l, "even", mu)
    return out


def eval_even_field_dz(grid, mesh, coeffs, z, mu):
    """Pointwise z-derivative of an even field (piecewise constant per element)."""
    z = np.asarray(z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    elem = mesh.element_of(z)
    slopes_all = np.diff(coeffs, axis=2) / mesh.lengths
    out = np.zeros(np.broadcast(z, mu).shape)
    for n in range(grid.n_cells):
        for l in range(grid.degree + 1):
            out += slopes_all[n, l][elem] * basis_eval(grid, n, l, "even", mu)
    return out


def eval_odd_field(grid, mesh, coeffs, z, mu):
    z = np.asarray(z, dtype=float)
    mu = np.asarray(mu, dtype=float)
    elem = mesh.element_of(z)
    out = np.zeros(np.broadcast(z, mu).shape)
    for n in range(grid.n_cells):
        for l in range(grid.degree + 2):
            out += coeffs[n, l][elem] * basis_eval(grid, n, l, "odd", mu)
    return out


def quadrature_grids(grid, mesh, n_mu=12, n_z=8):
    """Tensor quadrature over (0, Z) x (-1, 1) resolving the angular cells."""
    t, w = np.polynomial.legendre.leggauss(n_mu)
    mids, halfs = grid.midpoints, 0.5 * grid.widths
    mu_pos = (mids[:, None] + halfs[:, None] * t[None, :]).ravel()
    wmu_pos = (halfs[:, None] * w[None, :]).ravel()
    mu = np.concatenate([-mu_pos[::-1], mu_pos])
    wmu = np.concatenate([wmu_pos[::-1], wmu_pos])

    tz, wz = np.polynomial.legendre.leggauss(n_z)
    zm = 0.5 * (mesh.nodes[1:] + mesh.nodes[:-1])
    zh = 0.5 * mesh.lengths
    z = (zm[:, None] + zh[:, None] * tz[None, :]).ravel()
    wzq = (zh[:, None] * wz[None, :]).ravel()
    return z, wzq, mu, wmu


def oracle_b_form(grid, mesh, xs, u, v, n_mu=12, n_z=8):
    """Transport form integrated directly from its definition."""
    z, wz, mu, wmu = quadrature_grids(grid, mesh, n_mu, n_z)
    zz, mm = z[:, None], mu[None, :]
    ww = wz[:, None] * wmu[None, :]
    uu = eval_even_field(grid, mesh, u, zz, mm)
    vv = eval_even_field(grid, mesh, v, zz, mm)
    du = eval_even_field_dz(grid, mesh, u, zz, mm)
    dv = eval_even_field_dz(grid, mesh, v, zz, mm)
    st = np.asarray(xs.sigma_t(z), dtype=float)[:, None]
    Z = mesh.thickness

    interior = np.sum(ww * (mm**2 / st * du * dv + st * uu * vv))
    pos = mu > 0
    u0 = eval_even_field(grid, mesh, u, 0.0, mu[pos])
    v0 = eval_even_field(grid, mesh, v, 0.0, mu[pos])
    uZ = eval_even_field(grid, mesh, u, Z, -mu[pos])
    vZ = eval_even_field(grid, mesh, v, Z, -mu[pos])
    boundary = 2.0 * np.sum(wmu[pos] * mu[pos] * (u0 * v0 + uZ * vZ))
    return float(interior + boundary)


def oracle_k_form(grid, mesh, xs, u, v, n_mu=12, n_z=8):
    z, wz, mu, wmu = quadrature_grids(grid, mesh, n_mu, n_z)
    uu = eval_even_field(grid, mesh, u, z[:, None], mu[None, :])
    vv = eval_even_field(grid, mesh, v, z[:, None], mu[None, :])
    pu = 0.5 * (uu * wmu[None, :]).sum(axis=1)
    pv = 0.5 * (vv * wmu[None, :]).sum(axis=1)
    ss = np.asarray(xs.sigma_s(z), dtype=float)
    return float(2.0 * np.sum(wz * ss * pu * pv))


def oracle_a_form(grid, mesh, xs, u, v, n_mu=12, n_z=8):
    return oracle_b_form(grid, mesh, xs, u, v, n_mu, n_z) \
        - oracle_k_form(grid, mesh, xs, u, v, n_mu, n_z)


def oracle_a_error(grid, mesh, xs, exact, exact_dz, coeffs, n_mu=10, n_z=8):
    """Energy norm of (exact - discrete field) integrated from the form definition.

    exact and exact_dz are callables of (z, mu); the exact function must be
    even in mu (true for the even-parity solution).
    """
    z, wz, mu, wmu = quadrature_grids(grid, mesh, n_mu, n_z)
    zz, mm = z[:, None], mu[None, :]
    err = exact(zz, mm) - eval_even_field(grid, mesh, coeffs, zz, mm)
    derr = exact_dz(zz, mm) - eval_even_field_dz(grid, mesh, coeffs, zz, mm)
    st = np.asarray(xs.sigma_t(z), dtype=float)[:, None]
    ss = np.asarray(xs.sigma_s(z), dtype=float)
    ww = wz[:, None] * wmu[None, :]
    total = float(np.sum(ww * (mm**2 / st * derr**2 + st * err**2)))
    p_err = 0.5 * (err * wmu[None, :]).sum(axis=1)
    total -= 2.0 * float(np.sum(wz * ss * p_err**2))
    pos = mu > 0
    e0 = exact(0.0, mu[pos]) - eval_even_field(grid, mesh, coeffs, 0.0, mu[pos])
    eZ = exact(mesh.thickness, -mu[pos]) \
        - eval_even_field(grid, mesh, coeffs, mesh.thickness, -mu[pos])
    total += 2.0 * float(np.sum(wmu[pos] * mu[pos] * (e0**2 + eZ**2)))
    return np.sqrt(total)


def dense_operator(system, which="a"):
    """Dense matrix of apply_a or apply_b by applying it to every unit field."""
    n, d, jn = system.shape
    dim = n * d * jn
    apply = system.apply_a if which == "a" else system.apply_b
    out = np.empty((dim, dim))
    e = np.zeros(dim)
    for i in range(dim):
        e[i] = 1.0
        out[:, i] = apply(e.reshape(n, d, jn)).ravel()
        e[i] = 0.0
    return out


def make_random_instance(rng, max_cells=8, max_elements=16, degrees=(0, 1)):
    """Random small grid, mesh, and piecewise-constant admissible cross sections."""
    n = int(rng.integers(1, max_cells + 1))
    j = int(rng.integers(2, max_elements + 1))
    degree = int(rng.choice(degrees))
    nodes = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 0.95, j - 1)), [1.0]])
    mesh = SpatialMesh(nodes)
    breaks = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 0.95, n - 1)), [1.0]])
    grid = AngularGrid(breaks, degree)
    sigma_s = rng.uniform(0.0, 3.0, j)
    sigma_a = rng.uniform(1e-3, 2.0, j)
    xs = CrossSections.from_elements(mesh, sigma_a + sigma_s, sigma_s, gamma=1e-4)
    return grid, mesh, xs


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
