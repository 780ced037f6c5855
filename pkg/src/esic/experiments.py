"""Seeded experiment runners that produce plot-ready detection reports.

Every runner returns ``(records, summary)``. Records are per-sample rows
(:class:`DetectionRecord` or :class:`IdentityRecord`); the summary is a
plain JSON-able dict of fractions, counts and residuals. Both depend only on
the config, never on timing or worker count, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from esic import criteria, states
from esic.criteria import CRITERIA, DEFAULT_MARGIN, ThresholdError
from esic.linalg import DensityMatrix, kron
from esic.sic import MAX_DIM, default_sic

EXPERIMENTS = ("table1", "scatter2qb", "horodecki_boundary", "chessboard_fractions", "dimension_sweep", "identity_checks")
#: CLI short names
ALIASES = {
    "table1": "table1",
    "scatter2qb": "scatter2qb",
    "horodecki": "horodecki_boundary",
    "chessboard": "chessboard_fractions",
    "sweep": "dimension_sweep",
    "identities": "identity_checks",
}
FORMATS = ("csv", "json")
UNDETECTED = "undetected"
WILSON_Z = 1.96

TABLE1_K = (3, 4, 6)
SWEEP_DIMS = tuple((d, d) for d in range(2, MAX_DIM + 1))
IDENTITY_DIMS = ((2, 2), (2, 3), (3, 3), (4, 4))
IDENTITY_Q = (0.2, 0.5, 0.8)
SCATTER_TOL = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    samples: int = 5000
    seed: int = 0
    dims: tuple[tuple[int, int], ...] | None = None
    grid: int = 49
    tol: float | None = None
    margin: float = DEFAULT_MARGIN
    out: Path | None = None
    format: str = "csv"
    workers: int = 1

    def __post_init__(self):
        name = ALIASES.get(self.experiment, self.experiment)
        if name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        object.__setattr__(self, "experiment", name)
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.grid < 2:
            raise ValueError("grid resolution must be >= 2")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.dims is not None:
            object.__setattr__(self, "dims", tuple((int(a), int(b)) for a, b in self.dims))


# CSV column order is the field order
@dataclass(frozen=True)
class DetectionRecord:
    sample: int
    ensemble: str
    ppt: float
    ccnr: float
    esic: float
    detected_ppt: bool
    detected_ccnr: bool
    detected_esic: bool
    q_ppt: float | str | None = None
    q_ccnr: float | str | None = None
    q_esic: float | str | None = None
    param: float | None = None


@dataclass(frozen=True)
class IdentityRecord:
    sample: int
    check: str
    ensemble: str
    q: float | None
    ccnr: float
    esic: float
    residual: float


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def wilson_interval(hits: int, n: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval ``(center, half_width)`` for a binomial fraction."""
    if n == 0:
        return 0.0, 1.0
    p = hits / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return center, half


def _map(fn: Callable[[int], Any], indices: Sequence[int], workers: int) -> list:
    if workers <= 1 or len(indices) < 2:
        return [fn(i) for i in indices]
    chunk = max(1, len(indices) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, indices, chunksize=chunk))


def _norms(rho: DensityMatrix) -> tuple[float, float, float]:
    return tuple(criteria.criterion_norm(name, rho) for name in CRITERIA)  # type: ignore[return-value]


def _threshold(rho: DensityMatrix, name: str, value: float, tol: float, margin: float):
    if value <= 1.0 + margin:
        return UNDETECTED
    try:
        return criteria.noise_threshold(rho, name, tol=tol, margin=margin)
    except ThresholdError:
        return UNDETECTED


def _record(index: int, label: str, rho: DensityMatrix, margin: float, thresholds: float | None = None, param=None) -> DetectionRecord:
    ppt, ccnr, esic = _norms(rho)
    qs: list[Any] = [None, None, None]
    if thresholds is not None:
        qs = [_threshold(rho, name, v, thresholds, margin) for name, v in zip(CRITERIA, (ppt, ccnr, esic))]
    return DetectionRecord(index, label, ppt, ccnr, esic, ppt > 1 + margin, ccnr > 1 + margin, esic > 1 + margin, *qs, param=param)


def _ensemble_record(spec: states.EnsembleSpec, margin: float, index: int) -> DetectionRecord:
    return _record(index, spec.label, spec.state(index), margin)


def summarize_fractions(records: Iterable[DetectionRecord]) -> dict:
    recs = list(records)
    n = len(recs)
    out: dict[str, Any] = {"samples": n}
    for name in CRITERIA:
        hits = sum(getattr(r, f"detected_{name.lower()}") for r in recs)
        _, half = wilson_interval(hits, n)
        out[name] = {"detected": hits, "fraction": hits / n if n else 0.0, "wilson_half_width": half}
    out["ccnr_not_esic"] = sum(r.detected_ccnr and not r.detected_esic for r in recs)
    return out


def _is_q(v) -> bool:
    return isinstance(v, float)


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------


def run_ensemble_fractions(cfg: ExperimentConfig, ensembles: Sequence[states.EnsembleSpec]) -> tuple[list[DetectionRecord], dict]:
    """Evaluate all three criteria on each ensemble and tabulate detected fractions."""
    records: list[DetectionRecord] = []
    summary: dict[str, Any] = {"experiment": cfg.experiment, "seed": cfg.seed, "margin": cfg.margin, "ensembles": {}}
    for spec in ensembles:
        for d in spec.dims:
            default_sic(d)  # fail early (and warm the cache) before fanning out
        rows = _map(partial(_ensemble_record, spec, cfg.margin), range(spec.count), cfg.workers)
        rows.sort(key=lambda r: r.sample)
        summary["ensembles"][spec.label] = {"dims": list(spec.dims), **summarize_fractions(rows)}
        records.extend(rows)
    summary["ccnr_not_esic"] = sum(e["ccnr_not_esic"] for e in summary["ensembles"].values())
    return records, summary


def _dims_stream(dims) -> int:
    # keyed by dimension so a pair's samples do not depend on the rest of the list
    return 1000 * dims[0] + dims[1]


def table1_ensembles(cfg: ExperimentConfig) -> list[states.EnsembleSpec]:
    return [states.EnsembleSpec("induced", (2, 2), cfg.samples, cfg.seed, k=k, stream=k) for k in TABLE1_K]


def chessboard_ensembles(cfg: ExperimentConfig) -> list[states.EnsembleSpec]:
    return [states.EnsembleSpec("chessboard_random", (3, 3), cfg.samples, cfg.seed)]


def sweep_ensembles(cfg: ExperimentConfig) -> list[states.EnsembleSpec]:
    dims = cfg.dims or SWEEP_DIMS
    return [states.EnsembleSpec("hilbert_schmidt", d, cfg.samples, cfg.seed, stream=_dims_stream(d)) for d in dims]


def run_dimension_sweep(cfg: ExperimentConfig):
    records, summary = run_ensemble_fractions(cfg, sweep_ensembles(cfg))
    gaps = {label: e["ESIC"]["fraction"] - e["CCNR"]["fraction"] for label, e in summary["ensembles"].items()}
    summary["esic_minus_ccnr"] = gaps
    summary["largest_gap"] = max(gaps, key=gaps.get)
    return records, summary


def _scatter_record(seed: int, tol: float, margin: float, index: int) -> DetectionRecord | None:
    rho = states.hilbert_schmidt_random(4, states.sample_rng(seed, index), (2, 2))
    if criteria.ppt_norm(rho) <= 1.0 + margin:
        return None
    return _record(index, "hs(2x2)", rho, margin, thresholds=tol)


def run_threshold_scatter(cfg: ExperimentConfig) -> tuple[list[DetectionRecord], dict]:
    """White-noise thresholds of random entangled two-qubit HS states.

    Draws stream indices 0, 1, 2, ... and keeps PPT-detected states until
    ``cfg.samples`` records exist. Differences ``q_crit - q_ppt`` are the
    plotted quantities.
    """
    tol = cfg.tol if cfg.tol is not None else SCATTER_TOL
    fn = partial(_scatter_record, cfg.seed, tol, cfg.margin)
    records: list[DetectionRecord] = []
    start = 0
    while len(records) < cfg.samples:
        need = cfg.samples - len(records)
        # entangled fraction is ~3/4 under this measure
        batch = list(range(start, start + max(16, int(need * 1.4))))
        start = batch[-1] + 1
        for rec in _map(fn, batch, cfg.workers):
            if rec is not None and len(records) < cfg.samples:
                records.append(rec)
    esic_better = ccnr_better = ties = ppt_order = not_ccnr = 0
    max_excess = -math.inf
    for r in records:
        if _is_q(r.q_ppt) and _is_q(r.q_esic) and r.q_ppt > r.q_esic + 1e-9:
            ppt_order += 1
        if _is_q(r.q_ccnr) and _is_q(r.q_esic):
            diff = r.q_esic - r.q_ccnr
            max_excess = max(max_excess, diff)
            if diff < -1e-9:
                esic_better += 1
            elif diff > 1e-9:
                ccnr_better += 1
            else:
                ties += 1
        elif not _is_q(r.q_ccnr):
            not_ccnr += 1
    summary = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "tol": tol,
        "samples": len(records),
        "draws": records[-1].sample + 1 if records else 0,
        "ccnr_not_esic": sum(r.detected_ccnr and not r.detected_esic for r in records),
        "ccnr_undetected": not_ccnr,
        "esic_undetected": sum(not _is_q(r.q_esic) for r in records),
        "esic_better": esic_better,
        "ccnr_better": ccnr_better,
        "ties": ties,
        "max_esic_minus_ccnr": max_excess if max_excess > -math.inf else None,
        "ppt_order_violations": ppt_order,
    }
    return records, summary


def _horodecki_record(tol: float, margin: float, index: int, x: float) -> DetectionRecord:
    return _record(index, "horodecki", states.horodecki_state(x), margin, thresholds=tol, param=x)


def run_boundary_curves(cfg: ExperimentConfig) -> tuple[list[DetectionRecord], dict]:
    """Noise thresholds along the Horodecki family on an open uniform x-grid."""
    tol = cfg.tol if cfg.tol is not None else criteria.THRESHOLD_TOL
    xs = [(i + 1) / (cfg.grid + 1) for i in range(cfg.grid)]
    records = [_horodecki_record(tol, cfg.margin, i, x) for i, x in enumerate(xs)]
    both = [r for r in records if _is_q(r.q_ccnr) and _is_q(r.q_esic)]
    gaps = [r.q_ccnr - r.q_esic for r in both]
    summary = {
        "experiment": cfg.experiment,
        "grid": cfg.grid,
        "tol": tol,
        "ppt_detected": sum(r.detected_ppt for r in records),
        "ccnr_detected": sum(r.detected_ccnr for r in records),
        "esic_detected": sum(r.detected_esic for r in records),
        "both_detected": len(both),
        "esic_above_ccnr": sum(g < 0 for g in gaps),
        "max_ccnr_minus_esic": max(gaps) if gaps else None,
        "min_ccnr_minus_esic": min(gaps) if gaps else None,
        "ccnr_not_esic": sum(r.detected_ccnr and not r.detected_esic for r in records),
    }
    return records, summary


def _identity_residual(rho: DensityMatrix) -> tuple[float, float, float]:
    c = criteria.ccnr_norm(rho)
    e = criteria.esic_norm(rho)
    return c, e, abs((c - 1.0) - 2.0 * (e - 1.0))


def _identity_pure(dims, seed: int, stream: int, qs: Sequence[float], index: int) -> list[IdentityRecord]:
    rng = states.sample_rng(seed, index, stream)
    rho = states.pure_density(states.haar_random_pure(dims[0] * dims[1], rng), dims)
    label = f"pure({dims[0]}x{dims[1]})"
    out = [IdentityRecord(index, "ccnr_esic_identity", label, None, *_identity_residual(rho))]
    for q in qs:
        out.append(IdentityRecord(index, "ccnr_esic_identity", label, q, *_identity_residual(states.white_noise_mix(rho, q))))
    return out


def _identity_ccnr_not_esic(dims, seed: int, stream: int, index: int) -> IdentityRecord:
    rho = states.hilbert_schmidt_random(dims[0] * dims[1], states.sample_rng(seed, index, stream), dims)
    c = criteria.ccnr_norm(rho)
    e = criteria.esic_norm(rho)
    # residual > 0 flags a counterexample: CCNR detects, ESIC misses
    flag = 1.0 if (c > 1 + DEFAULT_MARGIN and e <= 1 + DEFAULT_MARGIN) else 0.0
    return IdentityRecord(index, "ccnr_not_esic", f"hs({dims[0]}x{dims[1]})", None, c, e, flag)


def _identity_product(dims, seed: int, stream: int, index: int) -> IdentityRecord:
    rng = states.sample_rng(seed, index, stream)
    da, db = dims
    ra = states.induced_random_mixed(da, 1 + int(rng.integers(da)), rng)
    rb = states.induced_random_mixed(db, 1 + int(rng.integers(db)), rng)
    rho = DensityMatrix(kron(ra.matrix, rb.matrix), dims)
    c = criteria.ccnr_norm(rho)
    e = criteria.esic_norm(rho)
    # residual > 0 means the ordering ||C|| <= ||P|| is violated
    return IdentityRecord(index, "product_order", f"product({da}x{db})", None, c, e, max(0.0, c - e))


def run_identity_checks(cfg: ExperimentConfig) -> tuple[list[IdentityRecord], dict]:
    """Pure-state identity residuals, CCNR-but-not-ESIC counts, product ordering."""
    dims_list = cfg.dims or IDENTITY_DIMS
    records: list[IdentityRecord] = []
    identity: dict[str, Any] = {}
    conj: dict[str, int] = {}
    order: dict[str, int] = {}
    for dims in dims_list:
        key = f"{dims[0]}x{dims[1]}"
        s = _dims_stream(dims)
        rows = [r for batch in _map(partial(_identity_pure, dims, cfg.seed, 3 * s, IDENTITY_Q), range(cfg.samples), cfg.workers) for r in batch]
        pure = [r.residual for r in rows if r.q is None]
        identity[key] = {"pure": max(pure)}
        for q in IDENTITY_Q:
            identity[key][f"q={q}"] = max(r.residual for r in rows if r.q == q)
        records.extend(rows)
        crow = _map(partial(_identity_ccnr_not_esic, dims, cfg.seed, 3 * s + 1), range(cfg.samples), cfg.workers)
        conj[key] = int(sum(r.residual > 0 for r in crow))
        records.extend(crow)
        prow = _map(partial(_identity_product, dims, cfg.seed, 3 * s + 2), range(cfg.samples), cfg.workers)
        order[key] = int(sum(r.residual > 1e-12 for r in prow))
        records.extend(prow)
    summary = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "samples": cfg.samples,
        "identity_max_residual": identity,
        "ccnr_not_esic_counts": conj,
        "ccnr_not_esic": sum(conj.values()),
        "product_order_violations": order,
    }
    return records, summary


def run(cfg: ExperimentConfig) -> tuple[list, dict]:
    name = cfg.experiment
    if name == "table1":
        return run_ensemble_fractions(cfg, table1_ensembles(cfg))
    if name == "chessboard_fractions":
        return run_ensemble_fractions(cfg, chessboard_ensembles(cfg))
    if name == "dimension_sweep":
        return run_dimension_sweep(cfg)
    if name == "scatter2qb":
        return run_threshold_scatter(cfg)
    if name == "horodecki_boundary":
        return run_boundary_curves(cfg)
    return run_identity_checks(cfg)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def record_columns(record_type=DetectionRecord) -> list[str]:
    return [f.name for f in dataclasses.fields(record_type)]


def _group(r) -> tuple:
    return (getattr(r, "check", ""), r.ensemble)


def render_report(records: Sequence, fmt: str = "csv", record_type=None) -> str:
    """Serialize records grouped by ensemble (first-seen order), then by sample index."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    if record_type is None:
        record_type = type(records[0]) if records else DetectionRecord
    first: dict[tuple, int] = {}
    for r in records:
        first.setdefault(_group(r), len(first))
    rows = sorted(records, key=lambda r: (first[_group(r)], r.sample))
    if fmt == "json":
        return json.dumps([dataclasses.asdict(r) for r in rows], indent=1) + "\n"
    columns = record_columns(record_type)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(getattr(r, c)) for c in columns])
    return buf.getvalue()


def emit_report(records: Sequence, fmt: str, path: str | Path, record_type=None) -> Path:
    path = Path(path)
    text = render_report(records, fmt, record_type)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def summary_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".summary.json")


def render_summary(summary: dict) -> str:
    return json.dumps(summary, indent=1, sort_keys=True) + "\n"
