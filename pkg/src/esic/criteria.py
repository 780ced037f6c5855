"""PPT, CCNR and SIC-correlation (ESIC) entanglement criteria.

Every criterion reduces a bipartite state to a trace norm that cannot exceed
1 for separable states; a value above ``1 + margin`` certifies entanglement.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from esic import linalg
from esic.linalg import DensityMatrix
from esic.sic import SicPovm, default_sic

log = logging.getLogger(__name__)

Criterion = Literal["PPT", "CCNR", "ESIC"]
CRITERIA: tuple[Criterion, ...] = ("PPT", "CCNR", "ESIC")

DEFAULT_MARGIN = 1e-10
IMAG_TOL = 1e-10
THRESHOLD_TOL = 1e-6
MAX_BISECTIONS = 60
PRESCAN_POINTS = 32


class ThresholdError(ValueError):
    """The state is not detected at q = 1, so there is no threshold."""


class NonMonotoneError(RuntimeError):
    """Detection along the white-noise segment switches more than once."""

    def __init__(self, message: str, flags):
        super().__init__(message)
        self.flags = list(flags)


@dataclass(frozen=True)
class CriterionResult:
    criterion: Criterion
    value: float
    margin: float = DEFAULT_MARGIN

    @property
    def detected(self) -> bool:
        return self.value > 1.0 + self.margin


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    kind: Literal["CCNR", "ESIC"]
    entries: np.ndarray
    singular_values: np.ndarray

    @classmethod
    def from_entries(cls, kind, entries) -> "CorrelationMatrix":
        return cls(kind, entries, linalg.singular_values(entries))

    @property
    def trace_norm(self) -> float:
        return float(self.singular_values.sum())


def _criterion_name(criterion: str) -> Criterion:
    name = criterion.upper()
    if name not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    return name  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# CCNR
# ---------------------------------------------------------------------------


def ccnr_norm(rho, dims=None) -> float:
    return linalg.trace_norm(linalg.realign(rho, dims))


def ccnr_value(rho: DensityMatrix, margin: float = DEFAULT_MARGIN) -> CriterionResult:
    """Trace norm of the realigned state (sum of operator-Schmidt coefficients)."""
    return CriterionResult("CCNR", ccnr_norm(rho), margin)


def gell_mann_correlation_matrix(rho: DensityMatrix) -> CorrelationMatrix:
    """``C_ij = tr(rho G_i^A (x) G_j^B)`` in the local Gell-Mann bases.

    An independent route to the CCNR value: its trace norm equals that of
    :func:`esic.linalg.realign`.
    """
    da, db = rho.require_dims()
    ga = linalg.gell_mann_basis(da).operators
    gb = linalg.gell_mann_basis(db).operators
    t = rho.matrix.reshape(da, db, da, db)
    # tr(rho A (x) B) = sum rho[a,b,a',b'] A[a',a] B[b',b]
    c = np.einsum("xyzw,izx,jwy->ij", t, ga, gb, optimize=True)
    return CorrelationMatrix.from_entries("CCNR", _real_part(c))


def operator_schmidt_coefficients(rho: DensityMatrix) -> np.ndarray:
    return linalg.singular_values(linalg.realign(rho))


def pure_state_ccnr(schmidt) -> float:
    """CCNR value ``(sum_k l_k)^2`` of a pure state with Schmidt coefficients ``l``."""
    lam = np.asarray(schmidt, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError("Schmidt coefficients must be nonnegative")
    if abs(np.sum(lam**2) - 1.0) > 1e-10:
        raise ValueError(f"Schmidt coefficients must satisfy sum l^2 = 1 (got {np.sum(lam**2)!r})")
    return float(np.sum(lam) ** 2)


def schmidt_coefficients(psi, dims) -> np.ndarray:
    da, db = dims
    psi = np.asarray(psi, dtype=np.complex128).reshape(da, db)
    return linalg.singular_values(psi)


# ---------------------------------------------------------------------------
# ESIC
# ---------------------------------------------------------------------------


def _real_part(m: np.ndarray) -> np.ndarray:
    imag = float(np.abs(m.imag).max()) if m.size else 0.0
    if imag > IMAG_TOL:
        raise ValueError(f"correlation matrix has imaginary residual {imag:.3e}")
    return np.ascontiguousarray(m.real)


def _resolve_povms(dims, povm_a, povm_b) -> tuple[SicPovm, SicPovm]:
    da, db = dims
    povm_a = povm_a if povm_a is not None else default_sic(da)
    povm_b = povm_b if povm_b is not None else default_sic(db)
    if povm_a.dimension != da or povm_b.dimension != db:
        raise ValueError(f"SIC dimensions ({povm_a.dimension}, {povm_b.dimension}) do not match bipartition {dims}")
    return povm_a, povm_b


def esic_entries(m: np.ndarray, dims, povm_a: SicPovm, povm_b: SicPovm) -> np.ndarray:
    """``[P]_ij = tr(rho E_i^A (x) E_j^B)`` for a raw matrix ``m``."""
    da, db = dims
    t = m.reshape(da, db, da, db)
    ea = povm_a.normalized_elements
    eb = povm_b.normalized_elements
    half = np.tensordot(ea, t, axes=([1, 2], [2, 0]))  # [i, b, b']
    p = np.tensordot(half, eb, axes=([1, 2], [2, 1]))
    return _real_part(p)


def esic_correlation_matrix(rho: DensityMatrix, povm_a: SicPovm | None = None, povm_b: SicPovm | None = None) -> CorrelationMatrix:
    dims = rho.require_dims()
    povm_a, povm_b = _resolve_povms(dims, povm_a, povm_b)
    return CorrelationMatrix.from_entries("ESIC", esic_entries(rho.matrix, dims, povm_a, povm_b))


def esic_norm(rho, dims=None, povm_a: SicPovm | None = None, povm_b: SicPovm | None = None) -> float:
    m, dims = linalg._unpack(rho, dims)
    povm_a, povm_b = _resolve_povms(dims, povm_a, povm_b)
    return linalg.trace_norm(esic_entries(m, dims, povm_a, povm_b))


def esic_value(rho: DensityMatrix, povm_a: SicPovm | None = None, povm_b: SicPovm | None = None, margin: float = DEFAULT_MARGIN) -> CriterionResult:
    return CriterionResult("ESIC", esic_norm(rho, None, povm_a, povm_b), margin)


# ---------------------------------------------------------------------------
# PPT
# ---------------------------------------------------------------------------


def ppt_norm(rho, dims=None) -> float:
    return linalg.trace_norm(linalg.partial_transpose(rho, "B", dims))


def ppt_value(rho: DensityMatrix, margin: float = DEFAULT_MARGIN) -> CriterionResult:
    return CriterionResult("PPT", ppt_norm(rho), margin)


# ---------------------------------------------------------------------------
# dispatch + thresholds
# ---------------------------------------------------------------------------


def criterion_norm(criterion: str, rho, dims=None, povm_a=None, povm_b=None) -> float:
    name = _criterion_name(criterion)
    if name == "PPT":
        return ppt_norm(rho, dims)
    if name == "CCNR":
        return ccnr_norm(rho, dims)
    return esic_norm(rho, dims, povm_a, povm_b)


def evaluate(rho: DensityMatrix, criterion: str, povm_a=None, povm_b=None, margin: float = DEFAULT_MARGIN) -> CriterionResult:
    name = _criterion_name(criterion)
    return CriterionResult(name, criterion_norm(name, rho, None, povm_a, povm_b), margin)


def evaluate_all(rho: DensityMatrix, povm_a=None, povm_b=None, margin: float = DEFAULT_MARGIN) -> dict[Criterion, CriterionResult]:
    return {name: evaluate(rho, name, povm_a, povm_b, margin) for name in CRITERIA}


def _noisy_detector(rho: DensityMatrix, criterion: str, povm_a, povm_b, margin) -> Callable[[float], bool]:
    name = _criterion_name(criterion)
    dims = rho.require_dims()
    d = rho.dim
    base = rho.matrix
    noise = np.eye(d) / d

    def detected(q: float) -> bool:
        m = q * base + (1.0 - q) * noise
        return criterion_norm(name, m, dims, povm_a, povm_b) > 1.0 + margin

    return detected


def noise_threshold(
    rho: DensityMatrix,
    criterion: str,
    tol: float = THRESHOLD_TOL,
    povm_a: SicPovm | None = None,
    povm_b: SicPovm | None = None,
    margin: float = DEFAULT_MARGIN,
    prescan: int = PRESCAN_POINTS,
) -> float:
    """Smallest white-noise weight ``q`` at which ``q rho + (1-q) I/d`` is detected.

    A coarse scan of ``prescan`` evenly spaced points checks that detection
    switches on exactly once along the segment (raising
    :class:`NonMonotoneError` otherwise) and brackets the crossing; bisection
    then narrows it to width ``tol``. The returned value is the detected end
    of the final bracket.
    """
    detected = _noisy_detector(rho, criterion, povm_a, povm_b, margin)
    if not detected(1.0):
        raise ThresholdError(f"{_criterion_name(criterion)} does not detect the state at q=1")
    lo, hi = 0.0, 1.0
    if prescan >= 2:
        grid = np.linspace(0.0, 1.0, prescan)
        flags = [detected(float(q)) for q in grid[:-1]] + [True]
        first = flags.index(True)
        if not all(flags[first:]):
            raise NonMonotoneError(f"{criterion} detection is not monotone along the white-noise segment", flags)
        if first == 0:
            return 0.0
        lo, hi = float(grid[first - 1]), float(grid[first])
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if detected(mid):
            hi = mid
        else:
            lo = mid
    return hi
