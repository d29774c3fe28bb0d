"""Command-line entry point.

Exit codes: 0 success, 1 I/O or parse error, 2 precondition violation,
3 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import gen_corpus
from .energy import affine_energy
from .errors import DomainError, GridFormatError, NoSolutionError
from .gridfn import read_grid, write_grid
from .orlicz import parse_phi
from .rearrange import (
    iterate_steiner,
    parse_directions,
    random_directions,
    schwarz_symmetrize,
    steiner_rearrange,
)
from . import verify

EXIT_OK, EXIT_IO, EXIT_PRECONDITION, EXIT_FAILED = 0, 1, 2, 3

COMMANDS = (
    "symmetrize",
    "energy",
    "verify-steiner",
    "verify-schwarz",
    "verify-affine",
    "verify-containment",
    "detect-equality",
    "converge",
    "gen-corpus",
)


class ConfigError(Exception):
    """Malformed command line; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


@dataclass
class RunConfig:
    command: str
    input: Path | None = None
    output: Path | None = None
    report: Path | None = None
    csv: Path | None = None
    plot: Path | None = None
    phi: str = "power:p=2"
    direction: str | None = None
    quadrature: int | None = None
    tol: float | None = None
    seed: int = 0
    max_iters: int = 200
    stop_tol: float = 0.02
    levels: int = 9
    trials: int = 10
    samples: int = 256
    intervals: int = 256
    extra: dict = field(default_factory=dict)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="orliczps", description="Affine Orlicz Polya-Szego toolkit")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("input", type=Path, help="input grid file (output directory for gen-corpus)")
    p.add_argument("-o", "--output", type=Path, help="output grid file")
    p.add_argument("--report", type=Path, help="JSON report path (default: stdout)")
    p.add_argument("--csv", type=Path, help="append the CSV result row to this file")
    p.add_argument("--plot", type=Path, help="plot-data CSV path")
    p.add_argument("--phi", default="power:p=2")
    p.add_argument("--direction", help="axes | axis:<k> | random:<seed>:<count> | [x, y, ...] | schwarz")
    p.add_argument("--quadrature", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--stop-tol", type=float, default=0.02)
    p.add_argument("--levels", type=int, default=9)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--intervals", type=int, default=256, help="grid intervals per axis for gen-corpus")
    return p


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    return RunConfig(
        command=ns.command,
        input=ns.input,
        output=ns.output,
        report=ns.report,
        csv=ns.csv,
        plot=ns.plot,
        phi=ns.phi,
        direction=ns.direction,
        quadrature=ns.quadrature,
        tol=ns.tol,
        seed=ns.seed,
        max_iters=ns.max_iters,
        stop_tol=ns.stop_tol,
        levels=ns.levels,
        trials=ns.trials,
        samples=ns.samples,
        intervals=ns.intervals,
    )


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    return repr(float(x))


def _emit(cfg: RunConfig, report: dict, csv_text: str | None = None):
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if cfg.report is None:
        sys.stdout.write(text)
    else:
        cfg.report.write_text(text)
    if cfg.csv is not None and csv_text is not None:
        cfg.csv.write_text(csv_text)


def _directions(cfg: RunConfig, dim, default):
    text = cfg.direction or default
    try:
        return parse_directions(text, dim)
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"--direction: {exc}") from exc


def _phi(cfg: RunConfig):
    try:
        return parse_phi(cfg.phi)
    except DomainError as exc:
        raise ConfigError(f"--phi: {exc}") from exc


def _boundary_csv(K):
    if K.dim == 2:
        pts = K.boundary_points()
        pts = np.vstack([pts, pts[:1]])
        return ["x", "y"], [[_fmt(a), _fmt(b)] for a, b in pts]
    return ["x", "y", "z"], [[_fmt(c) for c in p] for p in K.boundary_points()]


def _cmd_symmetrize(cfg, f):
    if cfg.output is None:
        raise ConfigError("symmetrize needs --output")
    if (cfg.direction or "").strip() == "schwarz":
        g = schwarz_symmetrize(f)
        used = "schwarz"
    else:
        dirs = _directions(cfg, f.domain.dim, "axes")
        g = f
        for u in dirs:
            g = steiner_rearrange(g, u)
        used = [u.tolist() for u in dirs]
    write_grid(cfg.output, g)
    if cfg.plot is not None:
        # profile through the box centre along the first axis
        idx = tuple([slice(None)] + [n // 2 for n in f.domain.counts[1:]])
        x = f.domain.axes()[0]
        _write_csv(cfg.plot, ["x", "input", "output"],
                   [[_fmt(a), _fmt(b), _fmt(c)] for a, b, c in zip(x, f.values[idx], g.values[idx])])
    _emit(cfg, {"command": "symmetrize", "directions": used, "output": str(cfg.output),
                "integral_in": f.integral(), "integral_out": g.integral()})
    return EXIT_OK


def _cmd_energy(cfg, f):
    res = affine_energy(f, _phi(cfg), cfg.quadrature)
    if cfg.output is not None:
        cfg.output.write_text(res.body_dump())
    if cfg.plot is not None:
        _write_csv(cfg.plot, *_boundary_csv(res.ball))
    _emit(cfg, res.to_dict(),
          "energy,ball_volume,lower,upper,quadrature\n"
          + ",".join([_fmt(res.energy), _fmt(res.ball_volume), _fmt(res.norm_bounds[0]),
                      _fmt(res.norm_bounds[1]), str(res.quadrature_size)]) + "\n")
    return EXIT_OK


def _reports_out(cfg, reports):
    body = [r.to_dict() for r in reports]
    rows = "".join(r.csv_row(header=(i == 0)) for i, r in enumerate(reports))
    _emit(cfg, body[0] if len(body) == 1 else {"reports": body}, rows)
    return EXIT_OK if all(r.inequality_pass for r in reports) else EXIT_FAILED


def _cmd_verify_steiner(cfg, f):
    phi = _phi(cfg)
    tol = 0.01 if cfg.tol is None else cfg.tol
    dirs = _directions(cfg, f.domain.dim, "axes")
    return _reports_out(cfg, [verify.verify_steiner_ps(f, phi, u, tol, cfg.quadrature) for u in dirs])


def _cmd_verify_schwarz(cfg, f):
    tol = 0.01 if cfg.tol is None else cfg.tol
    return _reports_out(cfg, [verify.verify_schwarz_ps(f, _phi(cfg), tol, cfg.quadrature)])


def _cmd_verify_affine(cfg, f):
    tol = 0.02 if cfg.tol is None else cfg.tol
    rep = verify.verify_affine_invariance(f, _phi(cfg), cfg.trials, cfg.seed, cfg.quadrature)
    out = rep.to_dict()
    passed = bool(rep.deviations) and rep.max_deviation <= tol
    out.update(tolerance_used=tol, passed=passed)
    _emit(cfg, out, "energy,max_deviation,trials_used,trials_skipped,tolerance_used,passed\n"
          f"{_fmt(rep.energy)},{_fmt(rep.max_deviation)},{len(rep.deviations)},"
          f"{len(rep.skipped)},{_fmt(tol)},{passed}\n")
    return EXIT_OK if passed else EXIT_FAILED


def _cmd_verify_containment(cfg, f):
    tol = 0.02 if cfg.tol is None else cfg.tol
    phi = _phi(cfg)
    dirs = _directions(cfg, f.domain.dim, "axes")
    reps = [verify.verify_ball_containment(f, phi, u, cfg.samples, tol, cfg.quadrature) for u in dirs]
    rows = ["direction,worst_gauge,volume_original,volume_symmetrized,passed"]
    rows += [f"\"{u.tolist()}\",{_fmt(r.worst_gauge)},{_fmt(r.volume_original)},"
             f"{_fmt(r.volume_symmetrized)},{r.passed}" for u, r in zip(dirs, reps)]
    body = [dict(r.to_dict(), direction=u.tolist()) for u, r in zip(dirs, reps)]
    _emit(cfg, body[0] if len(body) == 1 else {"reports": body}, "\n".join(rows) + "\n")
    ok = all(r.passed and r.volume_monotone for r in reps)
    return EXIT_OK if ok else EXIT_FAILED


def _cmd_detect_equality(cfg, f):
    v = verify.detect_equality_case(f, _phi(cfg), cfg.levels, cfg.quadrature)
    if cfg.plot is not None:
        _write_csv(cfg.plot, ["level", "fit_error"],
                   [[_fmt(t), _fmt(e)] for t, e in zip(v.levels, v.per_level_fit_error)])
    _emit(cfg, v.to_dict(), "is_equality_case,max_fit_error,energy_gap\n"
          f"{v.is_equality_case},{_fmt(max(v.per_level_fit_error))},{_fmt(v.energy_gap)}\n")
    return EXIT_OK


def _cmd_converge(cfg, f):
    dim = f.domain.dim
    if cfg.direction is None:
        dirs = list(random_directions(cfg.seed, cfg.max_iters, dim))
    else:
        dirs = _directions(cfg, dim, "axes")
    run = iterate_steiner(f, dirs, cfg.stop_tol, cfg.max_iters)
    if cfg.output is not None:
        write_grid(cfg.output, run.function)
    if cfg.plot is not None:
        _write_csv(cfg.plot, ["iteration", "distance", "mass"],
                   [[k, _fmt(d), _fmt(m)] for k, (d, m) in enumerate(zip(run.trace, run.masses))])
    _emit(cfg, {"converged": run.converged, "iterations": run.iterations,
                "final_distance": run.trace[-1], "stop_tol": cfg.stop_tol, "trace": run.trace},
          "converged,iterations,final_distance\n"
          f"{run.converged},{run.iterations},{_fmt(run.trace[-1])}\n")
    return EXIT_OK if run.converged else EXIT_FAILED


HANDLERS = {
    "symmetrize": _cmd_symmetrize,
    "energy": _cmd_energy,
    "verify-steiner": _cmd_verify_steiner,
    "verify-schwarz": _cmd_verify_schwarz,
    "verify-affine": _cmd_verify_affine,
    "verify-containment": _cmd_verify_containment,
    "detect-equality": _cmd_detect_equality,
    "converge": _cmd_converge,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; always returns a code in {0, 1, 2, 3}."""
    try:
        if cfg.command == "gen-corpus":
            fixtures = gen_corpus(cfg.seed, cfg.input, cfg.intervals)
            _emit(cfg, {"seed": cfg.seed, "out_dir": str(cfg.input),
                        "fixtures": [fx.name for fx in fixtures]})
            return EXIT_OK
        f = read_grid(cfg.input)
        return HANDLERS[cfg.command](cfg, f)
    except (ConfigError, GridFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, NoSolutionError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
