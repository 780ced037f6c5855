"""Hot numeric kernels: Hermitian eigendecomposition and singular values.

Two interchangeable backends live here. The default compiles cyclic Jacobi
loops with numba. Setting ``ESIC_USE_NUMBA=0`` (or running without numba
installed) switches every public entry point to a pure-numpy path built on
LAPACK's Hermitian solver. Both backends agree to ~1e-14 on the matrix sizes
used in this package (at most 81x81).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None


def _env_wants_numba() -> bool:
    flag = os.environ.get("ESIC_USE_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


USE_NUMBA = numba is not None and _env_wants_numba()

#: off-diagonal Frobenius mass at convergence, relative to the matrix norm
EIGH_TOL = 1e-13
#: relative column non-orthogonality at convergence, per row (one-sided Jacobi)
SVD_TOL = float(np.finfo(np.float64).eps)
MAX_SWEEPS = 60


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@_njit
def _jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi on a complex Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` with eigenvectors in the
    columns, unsorted. ``a`` is copied.
    """
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=np.complex128)
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += a[i, j].real ** 2 + a[i, j].imag ** 2
    thresh = (tol * tol) * total
    sweeps = 0
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += 2.0 * (a[p, q].real ** 2 + a[p, q].imag ** 2)
        if off <= thresh:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-300:
                    continue
                # phase so the (p, q) entry becomes real and positive
                ph = apq / mag
                phc = ph.conjugate()
                for k in range(n):
                    a[k, q] = a[k, q] * phc
                for k in range(n):
                    a[q, k] = a[q, k] * ph
                for k in range(n):
                    v[k, q] = v[k, q] * phc
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i].real
    return w, v, sweeps


@_njit
def _one_sided_jacobi(m, tol, max_sweeps):
    """Singular values of ``m`` (columns <= rows) by Hestenes rotations.

    Each rotation zeroes one off-diagonal entry of the Gram matrix m^H m, so
    this is cyclic Jacobi on that Hermitian matrix, carried out on the
    columns of ``m`` itself. Singular values are the final column norms,
    which keeps small ones accurate to ~eps * ||m|| instead of sqrt(eps).
    """
    rows, cols = m.shape
    u = m.copy()
    sweeps = 0
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0 + 0.0j
                for k in range(rows):
                    up = u[k, p]
                    uq = u[k, q]
                    alpha += up.real * up.real + up.imag * up.imag
                    beta += uq.real * uq.real + uq.imag * uq.imag
                    gamma += up.conjugate() * uq
                mag = abs(gamma)
                if mag == 0.0 or mag <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                phc = (gamma / mag).conjugate()
                zeta = (beta - alpha) / (2.0 * mag)
                t = 1.0 / (abs(zeta) + np.sqrt(zeta * zeta + 1.0))
                if zeta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(rows):
                    up = u[k, p]
                    uq = u[k, q] * phc
                    u[k, p] = c * up - s * uq
                    u[k, q] = s * up + c * uq
        if not rotated:
            break
        sweeps += 1
    sv = np.empty(cols)
    for j in range(cols):
        acc = 0.0
        for k in range(rows):
            acc += u[k, j].real ** 2 + u[k, j].imag ** 2
        sv[j] = np.sqrt(acc)
    return sv, sweeps


# ---------------------------------------------------------------------------
# numpy fallbacks
# ---------------------------------------------------------------------------


def _eigh_numpy(a):
    w, v = np.linalg.eigh(a)
    return w, v


def _singular_values_numpy(m):
    # Hermitian embedding [[0, M], [M^H, 0]] has eigenvalues +-sigma_i
    rows, cols = m.shape
    h = np.zeros((rows + cols, rows + cols), dtype=np.complex128)
    h[:rows, rows:] = m
    h[rows:, :rows] = m.conj().T
    w = np.linalg.eigvalsh(h)
    return np.sort(w[w.size - cols:])[::-1].clip(min=0.0)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def eigh(a: np.ndarray, use_numba: bool | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix; eigenvalues ascending."""
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if use_numba is None:
        use_numba = USE_NUMBA
    if not use_numba:
        return _eigh_numpy(a)
    w, v, _ = _jacobi_eigh(a, EIGH_TOL, MAX_SWEEPS)
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigvalsh(a: np.ndarray, use_numba: bool | None = None) -> np.ndarray:
    return eigh(a, use_numba)[0]


def singular_values(m: np.ndarray, use_numba: bool | None = None) -> np.ndarray:
    """Singular values of a rectangular matrix, nonincreasing."""
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if m.shape[1] > m.shape[0]:
        m = m.conj().T
    if m.size == 0:
        return np.zeros(0)
    if use_numba is None:
        use_numba = USE_NUMBA
    if not use_numba:
        return _singular_values_numpy(m)
    sv, _ = _one_sided_jacobi(np.ascontiguousarray(m), SVD_TOL * m.shape[0], MAX_SWEEPS)
    return np.sort(sv)[::-1]
