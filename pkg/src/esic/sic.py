"""SIC POVMs from Weyl-Heisenberg orbits of a fiducial vector.

The displacement operators are ``D_jk = X^j Z^k`` (no phase factor), with
``X|m> = |m+1 mod d>`` and ``Z = diag(1, w, ..., w^(d-1))``, ``w = exp(2 pi i/d)``.
Element ``j*d + k`` of every SIC built here comes from ``D_jk |psi>``.

Exact fiducials are built in for d = 2 and 3. Other dimensions (up to 7) are
found numerically: minimise the frame potential from random starts, then
polish the overlap equations with Levenberg-Marquardt until the orbit is
certified. Certified fiducials are cached as small JSON files.
"""

from __future__ import annotations

import functools
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from esic.linalg import DensityMatrix, validate_density

log = logging.getLogger(__name__)

CERTIFY_TOL = 1e-9
DEFAULT_RESTARTS = 64
MAX_DIM = 7
GENERATOR = "XjZk"


class CertificationError(RuntimeError):
    def __init__(self, message: str, best_residual: float = float("inf")):
        super().__init__(message)
        self.best_residual = best_residual


def _check_dim(d: int) -> int:
    d = int(d)
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return d


@functools.lru_cache(maxsize=None)
def _displacements(d: int) -> np.ndarray:
    x = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    out = np.empty((d * d, d, d), dtype=np.complex128)
    xj = np.eye(d, dtype=np.complex128)
    for j in range(d):
        zk = np.eye(d, dtype=np.complex128)
        for k in range(d):
            out[j * d + k] = xj @ zk
            zk = zk @ z
        xj = x @ xj
    out.setflags(write=False)
    return out


def wh_displacements(d: int) -> np.ndarray:
    """The d^2 unitaries ``X^j Z^k``, stacked with index ``j*d + k``."""
    return _displacements(_check_dim(d))


@dataclass(frozen=True, eq=False)
class Fiducial:
    dimension: int
    amplitudes: np.ndarray
    residual: float
    seed: int | None = None

    @property
    def certified(self) -> bool:
        return self.residual <= CERTIFY_TOL

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
            "residual": float(self.residual),
            "seed": self.seed,
            "generator": GENERATOR,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Fiducial":
        if doc.get("generator", GENERATOR) != GENERATOR:
            raise ValueError(f"unsupported generator {doc.get('generator')!r}")
        amps = np.array([complex(re, im) for re, im in doc["amplitudes"]])
        d = int(doc["dimension"])
        if amps.shape != (d,):
            raise ValueError(f"expected {d} amplitudes, got {amps.shape[0]}")
        return cls(d, amps, float(doc["residual"]), doc.get("seed"))


@dataclass(frozen=True, eq=False)
class SicPovm:
    """d^2 rank-1 elements ``Pi_k = |psi_k><psi_k| / d``.

    ``normalized_elements`` holds ``E_k = sqrt(d(d+1)/2) Pi_k``.
    """

    dimension: int
    vectors: np.ndarray  # (d^2, d), unit-norm rows |psi_k>
    residual: float
    projectors: np.ndarray = field(init=False, repr=False)
    normalized_elements: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = self.dimension
        v = np.asarray(self.vectors, dtype=np.complex128)
        proj = np.einsum("ki,kj->kij", v, v.conj()) / d
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "projectors", proj)
        object.__setattr__(self, "normalized_elements", element_scale(d) * proj)

    @classmethod
    def from_vectors(cls, vectors) -> "SicPovm":
        """Wrap arbitrary unit vectors; ``residual`` is measured, not assumed."""
        v = np.asarray(vectors, dtype=np.complex128)
        d = v.shape[1]
        if v.shape[0] != d * d:
            raise ValueError(f"need {d * d} vectors in dimension {d}, got {v.shape[0]}")
        return cls(d, v, _fidelity_residual(v))

    def conjugated(self, u) -> "SicPovm":
        """The SIC ``{U Pi_k U^dag}``."""
        v = self.vectors @ np.asarray(u).T
        return SicPovm(self.dimension, v, _fidelity_residual(v))


def element_scale(d: int) -> float:
    return float(np.sqrt(d * (d + 1) / 2.0))


def _fidelity_residual(vectors: np.ndarray) -> float:
    d = vectors.shape[1]
    gram = np.abs(vectors.conj() @ vectors.T) ** 2
    target = (d * np.eye(vectors.shape[0]) + 1.0) / (d + 1)
    return float(np.abs(gram - target).max())


def _overlaps(psi: np.ndarray) -> np.ndarray:
    d = psi.shape[0]
    return np.einsum("i,kij,j->k", psi.conj(), _displacements(d), psi)


def frame_potential(fid) -> float:
    """``sum_jk |<psi| D_jk |psi>|^4`` over all d^2 displacements.

    Bounded below by ``2d/(d+1)``, with equality exactly at SIC fiducials.
    (Summing over the whole orbit Gram matrix instead gives d^2 times this.)
    """
    psi = fid.amplitudes if isinstance(fid, Fiducial) else np.asarray(fid, dtype=np.complex128)
    return float(np.sum(np.abs(_overlaps(psi)) ** 4))


def _orbit(psi: np.ndarray) -> np.ndarray:
    return np.einsum("kij,j->ki", _displacements(psi.shape[0]), psi)


def _as_complex(x: np.ndarray, d: int) -> np.ndarray:
    return x[:d] + 1j * x[d:]


def _potential_and_grad(x, d):
    z = _as_complex(x, d)
    n = np.vdot(z, z).real
    ds = _displacements(d)
    dz = ds @ z  # (d^2, d): D_k z
    g = dz @ z.conj()  # <z|D_k|z>
    dhz = np.einsum("kji,j->ki", ds.conj(), z)  # D_k^dag z
    mag2 = np.abs(g) ** 2
    s = np.sum(mag2**2)
    ds_dzbar = 2.0 * np.einsum("k,ki->i", mag2 * g.conj(), dz) + 2.0 * np.einsum("k,ki->i", mag2 * g, dhz)
    gz = ds_dzbar / n**4 - 4.0 * s * z / n**5
    return s / n**4, 2.0 * np.concatenate([gz.real, gz.imag])


def _overlap_residuals(x, d):
    z = _as_complex(x, d)
    n = np.vdot(z, z).real
    g = _overlaps(z)[1:]
    # the norm residual pins the scale so LM sees a square-or-taller system
    return np.append(np.abs(g) ** 2 / n**2 - 1.0 / (d + 1), n - 1.0)


def _normalize_phase(z: np.ndarray) -> np.ndarray:
    z = z / np.linalg.norm(z)
    k = int(np.argmax(np.abs(z) > 1e-8))
    return z * (abs(z[k]) / z[k])


def _certify(psi: np.ndarray) -> float:
    return _fidelity_residual(_orbit(psi))


def fiducial_search(d: int, seed: int = 0, tol: float = CERTIFY_TOL, restarts: int = DEFAULT_RESTARTS) -> Fiducial:
    """Find a Weyl-Heisenberg SIC fiducial numerically.

    Each restart draws a Haar-random start from ``seed``'s generator, runs
    BFGS on the frame potential, and polishes the d^2-1 overlap equations
    ``|<psi|D|psi>|^2 = 1/(d+1)`` with Levenberg-Marquardt. Deterministic in
    ``(d, seed)``.
    """
    d = _check_dim(d)
    if d > MAX_DIM:
        raise ValueError(f"fiducial search supports d <= {MAX_DIM}, got {d}")
    rng = np.random.default_rng(seed)
    floor = 2.0 * d / (d + 1)
    best = (np.inf, None)
    for attempt in range(restarts):
        x0 = rng.standard_normal(2 * d)
        res = optimize.minimize(_potential_and_grad, x0, args=(d,), jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 2000})
        if res.fun - floor > 1e-5:
            log.debug("d=%d restart %d stuck at frame potential %.6g", d, attempt, res.fun)
            residual = _certify(_normalize_phase(_as_complex(res.x, d)))
            if residual < best[0]:
                best = (residual, res.x)
            continue
        polished = optimize.least_squares(_overlap_residuals, res.x, args=(d,), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        psi = _normalize_phase(_as_complex(polished.x, d))
        residual = _certify(psi)
        if residual < best[0]:
            best = (residual, polished.x)
        if residual <= tol:
            log.info("d=%d fiducial certified after %d restart(s), residual %.2e", d, attempt + 1, residual)
            return Fiducial(d, psi, residual, seed)
    raise CertificationError(f"no fiducial certified in d={d} after {restarts} restarts (best residual {best[0]:.3e})", best[0])


def exact_fiducial(d: int) -> Fiducial:
    """Closed-form fiducials for d = 2 (Bloch vector (1,1,1)/sqrt 3) and d = 3."""
    if d == 2:
        theta = np.arccos(1.0 / np.sqrt(3.0))
        psi = np.array([np.cos(theta / 2), np.exp(1j * np.pi / 4) * np.sin(theta / 2)])
    elif d == 3:
        psi = np.array([0.0, 1.0, -1.0], dtype=np.complex128) / np.sqrt(2.0)
    else:
        raise ValueError(f"no exact fiducial built in for d={d}")
    return Fiducial(d, psi, _certify(psi), None)


def sic_from_fiducial(fid: Fiducial) -> SicPovm:
    if not fid.certified:
        raise CertificationError(f"fiducial residual {fid.residual:.3e} exceeds {CERTIFY_TOL:.0e}", fid.residual)
    vecs = _orbit(np.asarray(fid.amplitudes, dtype=np.complex128))
    return SicPovm(fid.dimension, vecs, _fidelity_residual(vecs))


def verify_sic(povm: SicPovm) -> float:
    """Max deviation of ``|<psi_i|psi_j>|^2`` from ``(d delta_ij + 1)/(d+1)``."""
    return _fidelity_residual(povm.vectors)


def completeness_residual(povm: SicPovm) -> float:
    """Max entry of ``|sum_k Pi_k - I|``."""
    total = povm.projectors.sum(axis=0)
    return float(np.abs(total - np.eye(povm.dimension)).max())


def sic_probabilities(rho, povm: SicPovm) -> np.ndarray:
    """Born-rule outcome probabilities ``p_k = tr(rho Pi_k)``."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if m.shape != (povm.dimension, povm.dimension):
        raise ValueError(f"state of shape {m.shape} does not match SIC dimension {povm.dimension}")
    v = povm.vectors
    # <psi_k|rho|psi_k> / d
    p = np.einsum("ki,ij,kj->k", v.conj(), m, v).real / povm.dimension
    return p


def sic_expectations(rho, povm: SicPovm) -> np.ndarray:
    """``e_k = tr(rho E_k) = sqrt(d(d+1)/2) p_k``."""
    return element_scale(povm.dimension) * sic_probabilities(rho, povm)


def reconstruct_state(probs, povm: SicPovm, tol: float = 1e-10) -> DensityMatrix:
    """Invert the SIC measurement: ``rho = d(d+1) sum_k p_k Pi_k - I``."""
    p = np.asarray(probs, dtype=np.float64)
    d = povm.dimension
    if p.shape != (d * d,):
        raise ValueError(f"expected {d * d} probabilities, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or abs(p.sum() - 1.0) > tol:
        raise ValueError(f"probabilities must be finite and sum to 1 (sum={p.sum()!r})")
    rho = d * (d + 1) * np.einsum("k,kij->ij", p, povm.projectors) - np.eye(d)
    return validate_density(rho, tol=max(tol, 1e-10))


# ---------------------------------------------------------------------------
# cache + defaults
# ---------------------------------------------------------------------------


def cache_dir() -> Path:
    env = os.environ.get("ESIC_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "esic"


def cache_path(d: int, directory: Path | None = None) -> Path:
    return (directory or cache_dir()) / f"fiducial_d{d}.json"


def load_fiducial(d: int, seed: int | None = None, directory: Path | None = None) -> Fiducial | None:
    """Read a cached fiducial; ``None`` if absent, stale or not certified."""
    path = cache_path(d, directory)
    try:
        fid = Fiducial.from_json(json.loads(path.read_text()))
    except FileNotFoundError:
        return None
    except (ValueError, KeyError, TypeError) as exc:
        log.warning("ignoring unreadable fiducial cache %s: %s", path, exc)
        return None
    if fid.dimension != d or (seed is not None and fid.seed != seed):
        return None
    # trust nothing stored on disk without re-measuring it
    residual = _certify(fid.amplitudes)
    if residual > CERTIFY_TOL:
        return None
    return Fiducial(d, fid.amplitudes, residual, fid.seed)


def save_fiducial(fid: Fiducial, directory: Path | None = None) -> Path | None:
    path = cache_path(fid.dimension, directory)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(fid.to_json(), indent=1) + "\n")
    except OSError as exc:
        log.warning("could not write fiducial cache %s: %s", path, exc)
        return None
    return path


def get_fiducial(d: int, seed: int = 0, use_cache: bool = True) -> Fiducial:
    d = _check_dim(d)
    if d in (2, 3):
        return exact_fiducial(d)
    if use_cache:
        fid = load_fiducial(d, seed)
        if fid is not None:
            return fid
    fid = fiducial_search(d, seed=seed)
    if use_cache:
        save_fiducial(fid)
    return fid


@functools.lru_cache(maxsize=None)
def default_sic(d: int) -> SicPovm:
    """The package's SIC for dimension ``d`` (exact for d <= 3, searched above)."""
    return sic_from_fiducial(get_fiducial(d))
