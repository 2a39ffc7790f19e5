"""Angular discretization of the direction cosine interval [-1, 1].

The partition is symmetric about mu = 0, so only the cells of [0, 1] are
stored; every function of mu is represented through its even or odd
extension.  Each cell carries scaled Legendre polynomials up to a common
degree.  All cell integrals are evaluated with Gauss-Legendre quadrature
that is exact for the polynomial integrands appearing in the bilinear
forms.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "AngularGrid",
    "AngularMatrices",
    "angular_matrices",
    "basis_eval",
    "cell_quadrature",
    "legendre_eval",
]


def legendre_eval(l: int, t):
    """Evaluate the Legendre polynomial P_l at t via the three-term recurrence."""
    if l < 0:
        raise ValueError(f"negative Legendre degree {l}")
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + 1e-14):
        raise ValueError("Legendre argument outside [-1, 1]")
    p_prev = np.ones_like(t)
    if l == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = t.copy()
    for k in range(1, l):
        p, p_prev = ((2 * k + 1) * t * p - k * p_prev) / (k + 1), p
    return p if p.ndim else float(p)


def _legendre_table(max_degree: int, t: np.ndarray) -> np.ndarray:
    """Table P_l(t) for l = 0..max_degree, shape (max_degree+1,) + t.shape."""
    out = np.empty((max_degree + 1,) + t.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = t
    for k in range(1, max_degree):
        out[k + 1] = ((2 * k + 1) * t * out[k] - k * out[k - 1]) / (k + 1)
    return out


@lru_cache(maxsize=32)
def _gauss_rule(n_points: int):
    pts, wts = np.polynomial.legendre.leggauss(n_points)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


@dataclass(frozen=True)
class AngularGrid:
    """Symmetric partition of [-1, 1] given by its breakpoints in [0, 1].

    breakpoints : increasing array with first entry 0 and last entry 1
    degree      : polynomial degree carried by every cell (L >= 0)
    """

    breakpoints: np.ndarray
    degree: int = 0

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        object.__setattr__(self, "breakpoints", bp)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("breakpoints must be a 1d array with at least two entries")
        if abs(bp[0]) > 0.0 or abs(bp[-1] - 1.0) > 1e-14:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(bp) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if self.degree < 0:
            raise ValueError("degree must be non-negative")

    @classmethod
    def uniform(cls, n_cells: int, degree: int = 0) -> "AngularGrid":
        if n_cells < 1:
            raise ValueError("need at least one angular cell")
        return cls(np.linspace(0.0, 1.0, n_cells + 1), degree)

    @property
    def n_cells(self) -> int:
        return self.breakpoints.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.breakpoints[1:] + self.breakpoints[:-1])

    def cell_of(self, mu):
        """Cell index containing |mu| (0-based); breakpoints belong to the upper cell."""
        a = np.abs(np.asarray(mu, dtype=float))
        idx = np.searchsorted(self.breakpoints, a, side="right") - 1
        return np.clip(idx, 0, self.n_cells - 1)


@dataclass(frozen=True)
class AngularMatrices:
    """Per-cell Gram matrices of the even basis over the full interval [-1, 1].

    mass    : (N, d, d)   integral of Q+ Q+
    mu2     : (N, d, d)   integral of mu^2 Q+ Q+
    inflow  : (N, d, d)   integral of mu Q Q over the cell (one half-range endpoint)
    moments : (N, d)      integral of Q+ over [-1, 1]
    """

    mass: np.ndarray
    mu2: np.ndarray
    inflow: np.ndarray
    moments: np.ndarray


def cell_quadrature(grid: AngularGrid, n_points: int):
    """Mapped Gauss points/weights on the positive-half cells, shape (N, n_points)."""
    t, w = _gauss_rule(n_points)
    half = 0.5 * grid.widths
    pts = grid.midpoints[:, None] + half[:, None] * t[None, :]
    wts = half[:, None] * w[None, :]
    return pts, wts


def _basis_table(grid: AngularGrid, degree: int, n_points: int):
    """Basis values on the reference Gauss points, shape (degree+1, n_points)."""
    t, _ = _gauss_rule(n_points)
    norm = np.sqrt((2 * np.arange(degree + 1) + 1) / 2.0)
    return norm[:, None] * _legendre_table(degree, t)


def angular_matrices(grid: AngularGrid, degree: int | None = None) -> AngularMatrices:
    """Assemble the per-cell angular matrices by exact Gauss quadrature.

    The quadrature uses degree+2 points per cell, exact for the polynomial
    integrands (degree at most 2*degree+2).
    """
    d = grid.degree if degree is None else degree
    n_pts = d + 2
    mu, wts = cell_quadrature(grid, n_pts)
    q = _basis_table(grid, d, n_pts)  # (d+1, n_pts), independent of the cell

    # Even extension doubles every half-range integral with an even integrand.
    mass = 2.0 * np.einsum("np,ap,bp->nab", wts, q, q)
    mu2 = 2.0 * np.einsum("np,np,ap,bp->nab", wts, mu**2, q, q)
    inflow = np.einsum("np,np,ap,bp->nab", wts, mu, q, q)
    moments = 2.0 * np.einsum("np,ap->na", wts, q)
    return AngularMatrices(mass=mass, mu2=mu2, inflow=inflow, moments=moments)


def basis_eval(grid: AngularGrid, n: int, l: int, parity: str, mu):
    """Evaluate the even or odd basis function of cell n and degree l at mu.

    Cells are indexed from 0.  The function vanishes outside the cell; the
    odd variant carries a sign(mu) factor and is zero at mu = 0.
    """
    if not 0 <= n < grid.n_cells:
        raise IndexError(f"cell index {n} outside 0..{grid.n_cells - 1}")
    max_l = grid.degree if parity == "even" else grid.degree + 1
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if not 0 <= l <= max_l:
        raise IndexError(f"degree {l} outside 0..{max_l} for {parity} parity")

    mu = np.asarray(mu, dtype=float)
    a = np.abs(mu)
    lo, hi = grid.breakpoints[n], grid.breakpoints[n + 1]
    inside = (a >= lo) & (a < hi) if n < grid.n_cells - 1 else (a >= lo) & (a <= hi)
    t = np.where(inside, 2.0 * (a - lo) / (hi - lo) - 1.0, 0.0)
    val = np.sqrt((2 * l + 1) / 2.0) * legendre_eval(l, t) * inside
    if parity == "odd":
        val = val * np.sign(mu)
    return val if val.ndim else float(val)
