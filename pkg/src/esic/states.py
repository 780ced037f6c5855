"""State families and seeded random ensembles.

Random streams: sample ``i`` of an ensemble with seed ``s`` and stream tag
``t`` draws from ``PCG64(SeedSequence(s, spawn_key=(t, i)))``. Each sample
therefore owns an independent stream, and an ensemble is reproducible
regardless of how the indices are split across workers. Experiments that run
several ensembles under one seed give each a distinct tag.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from esic.linalg import DensityMatrix, hermitian_part, validate_density

ENSEMBLE_KINDS = ("haar_pure", "induced", "hilbert_schmidt", "chessboard_random", "named")
CHESSBOARD_STD = 2.0
_DEGENERATE = 1e-6


def sample_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for sample ``index`` of stream ``stream`` under ``seed``."""
    key = (int(stream), int(index))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard complex normals, ``E|z|^2 = 1``."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def _wrap(m: np.ndarray, dims) -> DensityMatrix:
    return DensityMatrix(np.ascontiguousarray(hermitian_part(m)), None if dims is None else tuple(dims))


def haar_random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector in C^d."""
    z = complex_gaussian(rng, d)
    return z / np.linalg.norm(z)


def pure_density(psi, dims=None) -> DensityMatrix:
    psi = np.asarray(psi, dtype=np.complex128)
    psi = psi / np.linalg.norm(psi)
    return _wrap(np.outer(psi, psi.conj()), dims)


def induced_random_mixed(n: int, k: int, rng: np.random.Generator, dims=None) -> DensityMatrix:
    """Random state from the induced measure (N, K).

    ``G G^dag / tr(G G^dag)`` for an N x K Ginibre matrix G, which equals the
    partial trace over C^K of a Haar-random pure state on C^N (x) C^K.
    """
    if n < 1 or k < 1:
        raise ValueError(f"induced measure needs N, K >= 1, got ({n}, {k})")
    g = complex_gaussian(rng, (n, k))
    m = g @ g.conj().T
    return _wrap(m / np.trace(m).real, dims)


def hilbert_schmidt_random(n: int, rng: np.random.Generator, dims=None) -> DensityMatrix:
    return induced_random_mixed(n, n, rng, dims)


def horodecki_state(x: float) -> DensityMatrix:
    """Horodecki's 3x3 PPT entangled family, entangled for 0 < x < 1."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    m = np.zeros((9, 9))
    for i in (0, 4, 8):
        for j in (0, 4, 8):
            m[i, j] = x
    for i in (1, 2, 3, 5, 7):
        m[i, i] = x
    a = (1.0 + x) / 2.0
    b = np.sqrt(1.0 - x * x) / 2.0
    m[6, 6] = a
    m[8, 8] = a
    m[6, 8] = m[8, 6] = b
    return validate_density(m / (8.0 * x + 1.0), dims=(3, 3))


@dataclass(frozen=True)
class ChessboardParams:
    m: tuple[float, float, float, float, float, float]

    def __post_init__(self):
        if len(self.m) != 6:
            raise ValueError(f"chessboard needs six parameters, got {len(self.m)}")
        if self.m[4] == 0 or self.m[5] == 0:
            raise ValueError("chessboard parameters m5 and m6 must be nonzero")


def chessboard_vectors(p: ChessboardParams) -> np.ndarray:
    """The four unnormalized 9-component vectors, A-major ``|00,01,02;10,...>``."""
    m1, m2, m3, m4, m5, m6 = p.m
    return np.array(
        [
            [m5, 0, m1 * m3 / m6, 0, m6, 0, 0, 0, 0],
            [0, m1, 0, m2, 0, m3, 0, 0, 0],
            [m6, 0, 0, 0, -m5, 0, m1 * m4 / m5, 0, 0],
            [0, m2, 0, -m1, 0, 0, 0, m4, 0],
        ],
        dtype=np.float64,
    )


def chessboard_state(p: ChessboardParams, validate: bool = True) -> DensityMatrix:
    v = chessboard_vectors(p)
    m = v.T @ v
    m = m / np.trace(m)
    if validate:
        return validate_density(m, dims=(3, 3))
    return _wrap(m, (3, 3))


def random_chessboard(rng: np.random.Generator) -> ChessboardParams:
    """Six independent N(0, 2^2) draws; m5 and m6 are redrawn while |m| < 1e-6."""
    m = rng.normal(0.0, CHESSBOARD_STD, size=6)
    for i in (4, 5):
        while abs(m[i]) < _DEGENERATE:
            m[i] = rng.normal(0.0, CHESSBOARD_STD)
    return ChessboardParams(tuple(float(x) for x in m))


def max_entangled(d: int) -> DensityMatrix:
    """``|Phi> = sum_k |kk> / sqrt(d)``."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    psi = np.zeros(d * d)
    psi[:: d + 1] = 1.0
    return validate_density(np.outer(psi, psi) / d, dims=(d, d))


def maximally_mixed(dims) -> DensityMatrix:
    da, db = dims
    return DensityMatrix(np.eye(da * db, dtype=np.complex128) / (da * db), (da, db))


def white_noise_mix(rho: DensityMatrix, q: float) -> DensityMatrix:
    """``q rho + (1 - q) I/d``."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    d = rho.dim
    m = q * rho.matrix + (1.0 - q) * np.eye(d) / d
    return DensityMatrix(m, rho.dims)


@dataclass(frozen=True)
class EnsembleSpec:
    """A reproducible stream of random states.

    ``k`` is the environment dimension for ``induced`` (the system dimension
    is ``d_A * d_B``); ``hilbert_schmidt`` is ``induced`` with ``k = d_A d_B``.
    """

    kind: str
    dims: tuple[int, int]
    count: int
    seed: int
    k: int | None = None
    name: str | None = None
    stream: int = 0

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be positive")
        if self.kind == "induced" and (self.k is None or self.k < 1):
            raise ValueError("induced ensembles need K >= 1")
        if self.kind == "chessboard_random" and tuple(self.dims) != (3, 3):
            raise ValueError("chessboard states live on 3x3")
        if self.kind == "named" and self.name is None:
            raise ValueError("named ensembles need a state name")

    @property
    def label(self) -> str:
        da, db = self.dims
        if self.kind == "induced":
            return f"induced({da * db},{self.k})"
        if self.kind == "hilbert_schmidt":
            return f"hs({da}x{db})"
        if self.kind == "named":
            return str(self.name)
        return f"{self.kind}({da}x{db})"

    def state(self, index: int) -> DensityMatrix:
        rng = sample_rng(self.seed, index, self.stream)
        da, db = self.dims
        n = da * db
        if self.kind == "haar_pure":
            return pure_density(haar_random_pure(n, rng), self.dims)
        if self.kind == "induced":
            return induced_random_mixed(n, self.k, rng, self.dims)
        if self.kind == "hilbert_schmidt":
            return induced_random_mixed(n, n, rng, self.dims)
        if self.kind == "chessboard_random":
            return chessboard_state(random_chessboard(rng), validate=False)
        return named_state(self.name, self.dims)

    def __iter__(self) -> Iterator[DensityMatrix]:
        for i in range(self.count):
            yield self.state(i)


def named_state(name: str, dims=None) -> DensityMatrix:
    """Parse ``bell``, ``max_entangled:d``, ``mixed``, ``horodecki:x``, ``chessboard:m1,...,m6``."""
    head, _, arg = name.partition(":")
    head = head.strip().lower()
    if head == "bell":
        return max_entangled(2)
    if head == "max_entangled":
        d = int(arg) if arg else (dims[0] if dims else 2)
        return max_entangled(d)
    if head == "mixed":
        return maximally_mixed(dims or (2, 2))
    if head == "horodecki":
        return horodecki_state(float(arg))
    if head == "chessboard":
        vals = tuple(float(v) for v in arg.split(","))
        return chessboard_state(ChessboardParams(vals))
    raise ValueError(f"unknown named state {name!r}")
