"""Seeded randomness and small dense linear algebra shared by all modules.

Matrices and vectors are plain float64 numpy arrays; the helpers here validate
shape and finiteness at the boundaries. Randomness flows through RngState, a
thin wrapper over a counter-based bit generator (Philox), so that sample
streams are reproducible across runs and machines and can be split into
independent child streams deterministically.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NumericError

PIVOT_TOL = 1e-12


class RngState:
    """Single-owner seeded random stream.

    Child streams made by split() are pure functions of (seed, spawn path),
    independent of how many draws the parent has produced.
    """

    def __init__(self, seed: int, _seq: np.random.SeedSequence | None = None):
        if _seq is None:
            if not isinstance(seed, (int, np.integer)):
                raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
            _seq = np.random.SeedSequence(int(seed))
        self.seed = int(seed)
        self._seq = _seq
        self._gen = np.random.Generator(np.random.Philox(_seq))

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def permutation(self, n: int):
        return self._gen.permutation(n)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size=size)


def split(rng: RngState, k: int) -> list[RngState]:
    """k independent child streams, deterministic in (seed, k, index)."""
    if k < 1:
        raise ValueError(f"split needs k >= 1, got {k}")
    base_key = tuple(rng._seq.spawn_key)
    children = []
    for i in range(k):
        seq = np.random.SeedSequence(entropy=rng._seq.entropy, spawn_key=base_key + (i,))
        children.append(RngState(rng.seed, _seq=seq))
    return children


def as_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} must have dim {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_matrix(m, rows: int | None = None, cols: int | None = None, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows:
        raise ValueError(f"{name} must have {rows} rows, got {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise ValueError(f"{name} must have {cols} cols, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def check_symmetric_psd(m, tol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    """Symmetric eigen-sign test: symmetric to tol, eigenvalues >= -tol."""
    arr = as_matrix(m, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if np.max(np.abs(arr - arr.T)) > tol:
        raise ValueError(f"{name} is not symmetric within {tol}")
    eigs = np.linalg.eigvalsh(arr)
    if eigs.min() < -tol:
        raise ValueError(f"{name} is not PSD: min eigenvalue {eigs.min():.3e}")
    return arr


def gaussian_vector(rng: RngState, d: int, mean, scale: float) -> np.ndarray:
    """mean + scale * z with z standard normal in R^d."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if scale < 0:
        raise ValueError(f"scale must be >= 0, got {scale}")
    mu = as_vector(mean, dim=d, name="mean")
    return mu + scale * rng.normal(d)


def mat_exp(m, tol: float = 1e-12) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring), truncation error below tol."""
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    arr = as_matrix(m, name="mat_exp input")
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"mat_exp needs a square matrix, got shape {arr.shape}")
    # Pade scaling-and-squaring; backward error well below any tol in scope
    # for the tiny well-scaled matrices this library handles.
    return scipy.linalg.expm(arr)


def op_norm(m, tol: float = 1e-10) -> float:
    """Largest singular value, accurate well within relative tol."""
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    arr = as_matrix(m, name="op_norm input")
    if arr.size == 0:
        raise ValueError("op_norm input must be non-empty")
    try:
        return float(np.linalg.svd(arr, compute_uv=False)[0])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"singular value iteration failed to converge: {exc}") from exc


def random_rotation(rng: RngState, d: int, forced_angle: float | None = None) -> np.ndarray:
    """Orthogonal matrix with determinant +1.

    d=2 draws an angle uniform on [0, 2pi); forced_angle is a test hook.
    d>2 orthonormalizes a Gaussian matrix with sign correction.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if forced_angle is not None and d != 2:
        raise ValueError("forced_angle is only supported for d=2")
    if d == 1:
        return np.array([[1.0]])
    if d == 2:
        theta = forced_angle if forced_angle is not None else rng.uniform(0.0, 2.0 * np.pi)
        c, s = np.cos(theta), np.sin(theta)
        return np.array([[c, -s], [s, c]])
    g = rng.normal((d, d))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q


def inverse(m) -> np.ndarray:
    """Inverse via LU with partial pivoting; tiny pivots are an error."""
    arr = as_matrix(m, name="inverse input")
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"inverse needs a square matrix, got shape {arr.shape}")
    lu, piv = scipy.linalg.lu_factor(arr, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOL:
        raise NumericError(
            f"singular pivot {pivots.min():.3e} below {PIVOT_TOL} during inversion"
        )
    return scipy.linalg.lu_solve((lu, piv), np.eye(arr.shape[0]), check_finite=False)
