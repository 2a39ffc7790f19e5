"""Spatial mesh of the slab (0, Z), cross sections, and P1 element assembly."""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp

__all__ = [
    "CoefficientReport",
    "CrossSectionError",
    "CrossSections",
    "SpatialMesh",
    "element_matrices",
    "element_quadrature",
    "validate_cross_sections",
]


class CrossSectionError(ValueError):
    """Cross sections violate the absorption assumption sigma_a >= gamma > 0."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


@dataclass(frozen=True)
class SpatialMesh:
    """Strictly increasing nodes z_0 = 0 < ... < z_J = Z; elements are the gaps."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("mesh needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError("mesh must start at z = 0")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")

    @classmethod
    def uniform(cls, n_elements: int, thickness: float = 1.0) -> "SpatialMesh":
        if n_elements < 1:
            raise ValueError("need at least one element")
        if thickness <= 0.0:
            raise ValueError("slab thickness must be positive")
        return cls(np.linspace(0.0, thickness, n_elements + 1))

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def thickness(self) -> float:
        return float(self.nodes[-1])

    def element_of(self, z):
        idx = np.searchsorted(self.nodes, np.asarray(z, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.n_elements - 1)


def _as_coefficient(value) -> Callable:
    if callable(value):
        return value
    const = float(value)
    return lambda z: np.full_like(np.asarray(z, dtype=float), const)


@dataclass(frozen=True)
class CrossSections:
    """Total and scattering coefficients as vectorized callables of z.

    gamma is the configured lower bound for sigma_a = sigma_t - sigma_s.
    """

    sigma_t: Callable
    sigma_s: Callable
    gamma: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "sigma_t", _as_coefficient(self.sigma_t))
        object.__setattr__(self, "sigma_s", _as_coefficient(self.sigma_s))
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")

    def sigma_a(self, z):
        return self.sigma_t(z) - self.sigma_s(z)

    @classmethod
    def constant(cls, sigma_t: float, sigma_s: float, gamma: float = 1e-10) -> "CrossSections":
        return cls(float(sigma_t), float(sigma_s), gamma)

    @classmethod
    def from_elements(cls, mesh: SpatialMesh, sigma_t, sigma_s, gamma: float = 1e-10) -> "CrossSections":
        """Piecewise-constant coefficients given per element of the mesh."""
        st = np.asarray(sigma_t, dtype=float)
        ss = np.asarray(sigma_s, dtype=float)
        if st.shape != (mesh.n_elements,) or ss.shape != (mesh.n_elements,):
            raise ValueError("per-element arrays must have one entry per element")

        def lookup(values):
            return lambda z: values[mesh.element_of(z)]

        return cls(lookup(st), lookup(ss), gamma)


@dataclass
class CoefficientReport:
    """Result of sampling the cross sections over the mesh quadrature points."""

    ok: bool
    min_sigma_a: float
    min_sigma_t: float
    contraction: float
    violations: list = field(default_factory=list)

    def __str__(self):
        if self.ok:
            return (
                f"cross sections ok: min sigma_a = {self.min_sigma_a:.6g}, "
                f"min sigma_t = {self.min_sigma_t:.6g}, contraction c = {self.contraction:.6g}"
            )
        zs = ", ".join(f"{z:.6g}" for z in self.violations[:8])
        more = "" if len(self.violations) <= 8 else f" (+{len(self.violations) - 8} more)"
        return f"sigma_a below gamma at z = {zs}{more}; min sigma_a = {self.min_sigma_a:.6g}"


@lru_cache(maxsize=32)
def _gauss_rule(n_points: int):
    return np.polynomial.legendre.leggauss(n_points)


def element_quadrature(mesh: SpatialMesh, n_points: int):
    """Mapped Gauss points/weights per element, shape (J, n_points)."""
    t, w = _gauss_rule(n_points)
    mid = 0.5 * (mesh.nodes[1:] + mesh.nodes[:-1])
    half = 0.5 * mesh.lengths
    return mid[:, None] + half[:, None] * t[None, :], half[:, None] * w[None, :]


def _weighted_bands(mesh: SpatialMesh, weight, kind: str, n_points: int = 3):
    """Diagonal and first off-diagonal of the weighted P1 mass or stiffness matrix."""
    w = _as_coefficient(weight)
    pts, wts = element_quadrature(mesh, n_points)
    vals = np.broadcast_to(np.asarray(w(pts), dtype=float), pts.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"non-finite weight values in {kind} assembly")
    h = mesh.lengths
    if kind == "mass":
        # Hat functions on the element: left = (z_right - z)/h, right = (z - z_left)/h.
        left = (mesh.nodes[1:, None] - pts) / h[:, None]
        right = (pts - mesh.nodes[:-1, None]) / h[:, None]
        e_ll = np.sum(wts * vals * left * left, axis=1)
        e_lr = np.sum(wts * vals * left * right, axis=1)
        e_rr = np.sum(wts * vals * right * right, axis=1)
    elif kind == "stiffness":
        e_int = np.sum(wts * vals, axis=1) / h**2
        e_ll = e_rr = e_int
        e_lr = -e_int
    else:
        raise ValueError(f"unknown kind {kind!r}")
    diag = np.zeros(mesh.n_elements + 1)
    np.add.at(diag, np.arange(mesh.n_elements), e_ll)
    np.add.at(diag, np.arange(1, mesh.n_elements + 1), e_rr)
    return diag, e_lr


def element_matrices(mesh: SpatialMesh, weight, kind: str, n_points: int = 3) -> sp.csr_matrix:
    """Weighted P1 mass or stiffness matrix over the nodal basis, as sparse CSR."""
    diag, off = _weighted_bands(mesh, weight, kind, n_points)
    return sp.diags([off, diag, off], offsets=[-1, 0, 1], format="csr")


def tridiag_apply(diag: np.ndarray, off: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply a symmetric tridiagonal matrix along the last axis of x."""
    y = diag * x
    y[..., 1:] += off * x[..., :-1]
    y[..., :-1] += off * x[..., 1:]
    return y


def validate_cross_sections(xs: CrossSections, mesh: SpatialMesh, gamma: float | None = None,
                            n_points: int = 5) -> CoefficientReport:
    """Sample the coefficients at element quadrature points and check sigma_a >= gamma.

    Also reports the contraction constant c = max sigma_s / sigma_t, which
    bounds the convergence rate of the source iteration.
    """
    g = xs.gamma if gamma is None else gamma
    pts, _ = element_quadrature(mesh, n_points)
    z = pts.ravel()
    st = np.broadcast_to(np.asarray(xs.sigma_t(z), dtype=float), z.shape)
    ss = np.broadcast_to(np.asarray(xs.sigma_s(z), dtype=float), z.shape)
    if not (np.all(np.isfinite(st)) and np.all(np.isfinite(ss))):
        raise ValueError("non-finite cross-section values")
    sa = st - ss
    bad = (sa < g) | (ss < 0.0) | (st < 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(st > 0.0, ss / st, np.where(ss > 0.0, np.inf, 0.0))
    return CoefficientReport(
        ok=not bool(np.any(bad)),
        min_sigma_a=float(sa.min()),
        min_sigma_t=float(st.min()),
        contraction=float(ratio.max()),
        violations=sorted(z[bad].tolist()),
    )
