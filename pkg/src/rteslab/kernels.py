"""Batched symmetric banded Cholesky kernels.

The transport step factors and back-substitutes one small banded SPD matrix
per angular cell; with thousands of cells this is the hot loop of the
solver.  Two interchangeable backends are provided: numba-compiled kernels
(default when numba is importable) and a pure-numpy path that vectorizes
over the batch axis.  Set RTE_NUMBA=0 to force the numpy path.

Banded storage is lower form: ab[b, i, j] = A_b[j + i, j] for 0 <= i <= kd.
"""

import os

import numpy as np

__all__ = [
    "NUMBA_AVAILABLE",
    "USE_NUMBA",
    "backend",
    "cholesky_banded_many",
    "solve_banded_many",
]


def _factor_numpy(ab, status):
    n_batch, kd1, m = ab.shape
    kd = kd1 - 1
    for j in range(m):
        k0 = max(0, j - kd)
        s = ab[:, 0, j].copy()
        for k in range(k0, j):
            s -= ab[:, j - k, k] ** 2
        bad = (s <= 0.0) & (status == 0)
        status[bad] = j + 1
        s[s <= 0.0] = 1.0  # keep going for the healthy batch entries
        piv = np.sqrt(s)
        ab[:, 0, j] = piv
        for i in range(1, min(kd, m - 1 - j) + 1):
            t = ab[:, i, j].copy()
            for k in range(max(0, j + i - kd), j):
                t -= ab[:, j + i - k, k] * ab[:, j - k, k]
            ab[:, i, j] = t / piv


def _solve_numpy(ab, rhs):
    n_batch, kd1, m = ab.shape
    kd = kd1 - 1
    for j in range(m):
        acc = rhs[:, j, :].copy()
        for d in range(1, min(kd, j) + 1):
            acc -= ab[:, d, j - d, None] * rhs[:, j - d, :]
        rhs[:, j, :] = acc / ab[:, 0, j, None]
    for j in range(m - 1, -1, -1):
        acc = rhs[:, j, :].copy()
        for d in range(1, min(kd, m - 1 - j) + 1):
            acc -= ab[:, d, j, None] * rhs[:, j + d, :]
        rhs[:, j, :] = acc / ab[:, 0, j, None]


try:
    from numba import njit, prange

    NUMBA_AVAILABLE = True

    @njit(cache=True, parallel=True)
    def _factor_numba(ab, status):  # pragma: no cover - exercised via wrapper
        n_batch, kd1, m = ab.shape
        kd = kd1 - 1
        for b in prange(n_batch):
            for j in range(m):
                s = ab[b, 0, j]
                for k in range(max(0, j - kd), j):
                    s -= ab[b, j - k, k] * ab[b, j - k, k]
                if s <= 0.0:
                    status[b] = j + 1
                    break
                piv = np.sqrt(s)
                ab[b, 0, j] = piv
                hi = min(kd, m - 1 - j)
                for i in range(1, hi + 1):
                    t = ab[b, i, j]
                    for k in range(max(0, j + i - kd), j):
                        t -= ab[b, j + i - k, k] * ab[b, j - k, k]
                    ab[b, i, j] = t / piv

    @njit(cache=True, parallel=True)
    def _solve_numba(ab, rhs):  # pragma: no cover - exercised via wrapper
        n_batch, kd1, m = ab.shape
        kd = kd1 - 1
        n_rhs = rhs.shape[2]
        for b in prange(n_batch):
            for c in range(n_rhs):
                for j in range(m):
                    acc = rhs[b, j, c]
                    for d in range(1, min(kd, j) + 1):
                        acc -= ab[b, d, j - d] * rhs[b, j - d, c]
                    rhs[b, j, c] = acc / ab[b, 0, j]
                for j in range(m - 1, -1, -1):
                    acc = rhs[b, j, c]
                    for d in range(1, min(kd, m - 1 - j) + 1):
                        acc -= ab[b, d, j] * rhs[b, j + d, c]
                    rhs[b, j, c] = acc / ab[b, 0, j]

except ImportError:  # pragma: no cover
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("RTE_NUMBA", "1").lower() not in ("0", "false", "no")


def backend(use_numba: bool | None = None) -> str:
    enabled = USE_NUMBA if use_numba is None else (use_numba and NUMBA_AVAILABLE)
    return "numba" if enabled else "numpy"


def cholesky_banded_many(ab: np.ndarray, use_numba: bool | None = None) -> np.ndarray:
    """Cholesky-factor a batch of lower-banded SPD matrices, shape (B, kd+1, M).

    Returns the factors in the same banded layout.  Raises LinAlgError if
    any matrix in the batch is not positive definite.
    """
    fact = np.ascontiguousarray(ab, dtype=float).copy()
    status = np.zeros(fact.shape[0], dtype=np.int64)
    if backend(use_numba) == "numba":
        _factor_numba(fact, status)
    else:
        _factor_numpy(fact, status)
    if np.any(status):
        bad = np.nonzero(status)[0]
        raise np.linalg.LinAlgError(
            f"banded Cholesky broke down for {bad.size} block(s); first block "
            f"{bad[0]} at row {status[bad[0]] - 1}"
        )
    return fact


def solve_banded_many(fact: np.ndarray, rhs: np.ndarray, use_numba: bool | None = None) -> np.ndarray:
    """Solve A_b x = rhs_b for every b given factors from cholesky_banded_many.

    rhs has shape (B, M) or (B, M, C); the solution has the same shape.
    """
    squeeze = rhs.ndim == 2
    x = np.ascontiguousarray(rhs, dtype=float).copy()
    if squeeze:
        x = x[:, :, None]
    if fact.shape[0] != x.shape[0] or fact.shape[2] != x.shape[1]:
        raise ValueError(f"factor shape {fact.shape} incompatible with rhs shape {rhs.shape}")
    if backend(use_numba) == "numba":
        _solve_numba(fact, x)
    else:
        _solve_numpy(fact, x)
    return x[:, :, 0] if squeeze else x
