"""Command-line entry point: ``esic sic|crit|exp ...``.

Results go to stdout as JSON. Failures exit nonzero with a JSON object
``{"error": <kind>, "message": <text>}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from esic import criteria, experiments, sic, states
from esic.linalg import DensityMatrix, validate_density


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _dims(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected dA,dB, got {text!r}") from None
    return a, b


def _dims_list(text: str) -> tuple[tuple[int, int], ...]:
    return tuple(_dims(part) for part in text.split(";") if part)


def load_state_file(path: str | Path) -> DensityMatrix:
    """Read ``{"dims": [dA, dB], "matrix": [[re, im], ...]}`` (row-major)."""
    doc = json.loads(Path(path).read_text())
    dims = tuple(int(x) for x in doc["dims"])
    pairs = np.asarray(doc["matrix"], dtype=np.float64).reshape(-1, 2)
    d = dims[0] * dims[1]
    if pairs.shape[0] != d * d:
        raise ValueError(f"state file holds {pairs.shape[0]} entries, expected {d * d}")
    m = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(d, d)
    return validate_density(m, dims=dims)


def state_file_doc(rho: DensityMatrix) -> dict:
    flat = rho.matrix.reshape(-1)
    return {"dims": list(rho.require_dims()), "matrix": [[float(z.real), float(z.imag)] for z in flat]}


def _load_state(spec: str, dims) -> DensityMatrix:
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        rho = load_state_file(path)
    else:
        rho = states.named_state(spec, dims)
    if dims is not None and rho.dims != tuple(dims):
        raise ValueError(f"state has bipartition {rho.dims}, but --dims {dims} was given")
    return rho


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def cmd_sic(args) -> int:
    d = args.dim
    if args.action == "gen":
        if d in (2, 3) and not args.search:
            fid = sic.exact_fiducial(d)
        else:
            fid = sic.fiducial_search(d, seed=args.seed, tol=args.tol, restarts=args.restarts)
            if not args.no_cache:
                sic.save_fiducial(fid)
        if args.out:
            Path(args.out).write_text(json.dumps(fid.to_json(), indent=1) + "\n")
        _emit(fid.to_json())
        return 0
    if args.fiducial:
        fid = sic.Fiducial.from_json(json.loads(Path(args.fiducial).read_text()))
        d = fid.dimension
    else:
        fid = sic.get_fiducial(d, seed=args.seed, use_cache=not args.no_cache)
    povm = sic.sic_from_fiducial(fid)
    fidelity = sic.verify_sic(povm)
    completeness = sic.completeness_residual(povm)
    ok = fidelity <= args.tol and completeness <= 1e-10
    _emit({"dimension": d, "fidelity_residual": fidelity, "completeness_residual": completeness, "frame_potential": sic.frame_potential(fid), "certified": ok})
    return 0 if ok else 3


def cmd_crit(args) -> int:
    rho = _load_state(args.state, args.dims)
    if args.action == "eval":
        out = {}
        for name, res in criteria.evaluate_all(rho, margin=args.margin).items():
            out[name] = {"value": res.value, "detected": res.detected, "margin": res.margin}
        _emit({"dims": list(rho.require_dims()), "criteria": out})
        return 0
    name = args.criterion.upper()
    q = criteria.noise_threshold(rho, name, tol=args.tol, margin=args.margin)
    _emit({"criterion": name, "threshold": q, "tol": args.tol})
    return 0


def cmd_exp(args) -> int:
    cfg = experiments.ExperimentConfig(
        experiment=args.experiment,
        samples=args.samples,
        seed=args.seed,
        dims=args.dims,
        grid=args.grid,
        tol=args.tol,
        out=Path(args.out) if args.out else None,
        format=args.format,
        workers=args.workers,
    )
    records, summary = experiments.run(cfg)
    if cfg.out is not None:
        experiments.emit_report(records, cfg.format, cfg.out)
        experiments.summary_path(cfg.out).write_text(experiments.render_summary(summary))
    sys.stdout.write(experiments.render_summary(summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="esic", description="SIC-POVM, CCNR and PPT entanglement criteria.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ps = sub.add_parser("sic", help="construct or verify SIC POVMs")
    ps.add_argument("action", choices=("gen", "verify"))
    ps.add_argument("--dim", type=int, default=None)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--tol", type=float, default=sic.CERTIFY_TOL)
    ps.add_argument("--restarts", type=int, default=sic.DEFAULT_RESTARTS)
    ps.add_argument("--search", action="store_true", help="search even where an exact fiducial exists")
    ps.add_argument("--no-cache", action="store_true")
    ps.add_argument("--fiducial", help="verify a fiducial JSON file instead of --dim")
    ps.add_argument("--out", help="also write the fiducial JSON here")
    ps.set_defaults(func=cmd_sic)

    pc = sub.add_parser("crit", help="evaluate criteria on one state")
    pc.add_argument("action", choices=("eval", "threshold"))
    pc.add_argument("--state", required=True, help="state JSON file or a named state (bell, horodecki:0.3, ...)")
    pc.add_argument("--dims", type=_dims, default=None)
    pc.add_argument("--criterion", choices=("ppt", "ccnr", "esic"), default="esic")
    pc.add_argument("--tol", type=float, default=criteria.THRESHOLD_TOL)
    pc.add_argument("--margin", type=float, default=criteria.DEFAULT_MARGIN)
    pc.set_defaults(func=cmd_crit)

    pe = sub.add_parser("exp", help="run a seeded experiment")
    pe.add_argument("experiment", choices=tuple(experiments.ALIASES))
    pe.add_argument("--samples", type=int, default=5000)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--dims", type=_dims_list, default=None, help="e.g. '2,2;3,3'")
    pe.add_argument("--grid", type=int, default=49)
    pe.add_argument("--tol", type=float, default=None)
    pe.add_argument("--out", default=None)
    pe.add_argument("--format", choices=experiments.FORMATS, default="csv")
    pe.add_argument("--workers", type=int, default=1)
    pe.set_defaults(func=cmd_exp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        if args.command == "sic" and args.action == "gen" and args.dim is None:
            raise CliError("sic gen needs --dim")
        if args.command == "sic" and args.action == "verify" and args.dim is None and not args.fiducial:
            raise CliError("sic verify needs --dim or --fiducial")
        return args.func(args)
    except CliError as exc:
        kind, code = "usage", 2
        message = str(exc)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        kind, code = type(exc).__name__, 1
        message = str(exc)
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
