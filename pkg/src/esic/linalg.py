"""Dense complex matrix toolkit for bipartite density matrices.

Composite index convention, used everywhere in the package: a basis state
``|i_A, i_B>`` of a ``d_A x d_B`` system sits at row ``i_A * d_B + i_B``
(A-major, the ordering produced by ``np.kron(a, b)``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from esic import _kernels

Subsystem = Literal["A", "B"]

DEFAULT_TOL = 1e-10


class BipartitionError(ValueError):
    """Raised when an operation needs ``(d_A, d_B)`` and none is attached."""


class DensityMatrixError(ValueError):
    """Base class for failed density-matrix validation."""


class NotHermitianError(DensityMatrixError):
    pass


class TraceError(DensityMatrixError):
    pass


class NegativeEigenvalueError(DensityMatrixError):
    pass


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix, optionally carrying a bipartition.

    Instances are produced by :func:`validate_density`; the constructor does
    no checking on its own.
    """

    matrix: np.ndarray
    dims: tuple[int, int] | None = None

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def require_dims(self) -> tuple[int, int]:
        if self.dims is None:
            raise BipartitionError("density matrix has no bipartition attached")
        return self.dims

    def with_dims(self, dims: tuple[int, int]) -> "DensityMatrix":
        dims = _check_dims(self.dim, dims)
        return DensityMatrix(self.matrix, dims)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))


@dataclass(frozen=True)
class HermitianOperatorBasis:
    dimension: int
    operators: np.ndarray  # shape (d*d, d, d)

    def __len__(self) -> int:
        return self.operators.shape[0]

    def __iter__(self):
        return iter(self.operators)

    def orthonormality_residual(self) -> float:
        n = self.operators.shape[0]
        flat = self.operators.reshape(n, -1)
        # tr(G_k G_l) = sum_ij G_k[i,j] G_l[j,i] = <G_k^dag, G_l> for Hermitian G
        gram = flat.conj() @ flat.T
        return float(np.abs(gram - np.eye(n)).max())


def _check_dims(d: int, dims) -> tuple[int, int]:
    da, db = (int(x) for x in dims)
    if da < 1 or db < 1 or da * db != d:
        raise BipartitionError(f"bipartition {dims} incompatible with dimension {d}")
    return da, db


def _unpack(rho, dims=None) -> tuple[np.ndarray, tuple[int, int]]:
    if isinstance(rho, DensityMatrix):
        m = rho.matrix
        if dims is None:
            dims = rho.require_dims()
    else:
        m = np.asarray(rho)
        if dims is None:
            raise BipartitionError("a bipartition is required for this operation")
    return m, _check_dims(m.shape[0], dims)


def kron(a, b) -> np.ndarray:
    """Kronecker product; entry ``[(i*rb + k), (j*cb + l)] = a[i,j] * b[k,l]``."""
    return np.kron(np.asarray(a), np.asarray(b))


def trace_norm(m) -> float:
    """Sum of singular values (the Schatten 1-norm)."""
    m = np.asarray(m)
    if isinstance(m, np.ndarray) and m.ndim == 2 and m.size == 0:
        return 0.0
    return float(np.sum(_kernels.singular_values(m)))


def singular_values(m) -> np.ndarray:
    return _kernels.singular_values(np.asarray(m))


def eigvalsh(m) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, ascending."""
    return _kernels.eigvalsh(np.asarray(m))


def eigh(m) -> tuple[np.ndarray, np.ndarray]:
    return _kernels.eigh(np.asarray(m))


def partial_transpose(rho, subsystem: Subsystem = "B", dims=None) -> np.ndarray:
    """Transpose the indices of one tensor factor only."""
    m, (da, db) = _unpack(rho, dims)
    t = m.reshape(da, db, da, db)
    if subsystem == "B":
        t = t.transpose(0, 3, 2, 1)
    elif subsystem == "A":
        t = t.transpose(2, 1, 0, 3)
    else:
        raise ValueError(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    return np.ascontiguousarray(t.reshape(da * db, da * db))


def partial_trace(rho, traced: Subsystem = "B", dims=None) -> DensityMatrix:
    """Reduced state after tracing out ``traced``."""
    m, (da, db) = _unpack(rho, dims)
    t = m.reshape(da, db, da, db)
    if traced == "B":
        red = np.einsum("ikjk->ij", t)
    elif traced == "A":
        red = np.einsum("kikj->ij", t)
    else:
        raise ValueError(f"traced must be 'A' or 'B', got {traced!r}")
    return DensityMatrix(np.ascontiguousarray(red))


def realign(rho, dims=None) -> np.ndarray:
    """Reshuffled matrix ``R[(i,j),(k,l)] = rho[(i,k),(j,l)]``, shape d_A^2 x d_B^2.

    Its singular values are the operator-Schmidt coefficients of ``rho``.
    """
    m, (da, db) = _unpack(rho, dims)
    t = m.reshape(da, db, da, db).transpose(0, 2, 1, 3)
    return np.ascontiguousarray(t.reshape(da * da, db * db))


def gell_mann_basis(d: int) -> HermitianOperatorBasis:
    """``I/sqrt(d)`` followed by the d^2-1 generalized Gell-Mann matrices.

    Normalized so that ``tr(G_k G_l) = delta_kl``. Order: identity, then the
    symmetric and antisymmetric off-diagonal pairs for each ``j < k``, then
    the d-1 diagonal generators.
    """
    if d < 2:
        raise ValueError(f"Gell-Mann basis needs d >= 2, got {d}")
    ops = [np.eye(d, dtype=np.complex128) / np.sqrt(d)]
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=np.complex128)
            sym[j, k] = sym[k, j] = inv_sqrt2
            asym = np.zeros((d, d), dtype=np.complex128)
            asym[j, k] = -1j * inv_sqrt2
            asym[k, j] = 1j * inv_sqrt2
            ops.append(sym)
            ops.append(asym)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        ops.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(np.complex128))
    return HermitianOperatorBasis(d, np.array(ops))


def hermitian_part(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    return (m + m.conj().T) / 2


def validate_density(m, tol: float = DEFAULT_TOL, dims=None) -> DensityMatrix:
    """Check Hermiticity, unit trace and positivity, then wrap ``m``.

    The stored matrix is the Hermitian part ``(m + m^H)/2``.
    """
    if isinstance(m, DensityMatrix):
        dims = m.dims if dims is None else dims
        m = m.matrix
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DensityMatrixError(f"density matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DensityMatrixError("density matrix has non-finite entries")
    asym = float(np.abs(m - m.conj().T).max())
    if asym > tol:
        raise NotHermitianError(f"max |rho - rho^H| = {asym:.3e} exceeds {tol:.1e}")
    h = hermitian_part(m)
    tr = float(np.trace(h).real)
    if abs(tr - 1.0) > tol:
        raise TraceError(f"trace {tr!r} deviates from 1 by more than {tol:.1e}")
    lo = float(eigvalsh(h)[0])
    if lo < -tol:
        raise NegativeEigenvalueError(f"smallest eigenvalue {lo:.3e} below -{tol:.1e}")
    if dims is not None:
        dims = _check_dims(h.shape[0], dims)
    return DensityMatrix(h, dims)
