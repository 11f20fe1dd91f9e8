"""Command-line front end.

Usage::

    fmhnn simulate CONFIG [--out DIR] [--emit-plot] [--threads N]
    fmhnn stability | ring | bifurcate | lyapunov | multistability CONFIG ...

Exit codes: 0 success (divergent dynamics included), 2 config parse error,
3 I/O error, 4 semantic precondition violated.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import ConfigParseError, ExperimentConfig, parse_config_text
from .dynamics import (
    DivergenceError,
    bifurcation_scan,
    lyapunov_spectrum,
    multistability_probe,
    write_lyapunov_csv,
    write_scan_csv,
)
from .fode import ConfigError, FodeError, solve_abm
from .stability import (
    Verdict,
    matignon_check,
    ring_spectrum,
    stability_report,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_PRECONDITION = 4

TRAJECTORY_HEADER = ["t", "x1", "x2", "phi"]
STABILITY_HEADER = [
    "delta", "case", "lambda1_re", "lambda1_im", "lambda2_re", "lambda2_im",
    "critical_alpha", "alpha", "verdict", "integer_stable", "fractional_stable",
]
RING_SPECTRUM_HEADER = ["source", "index", "re", "im"]
RING_VERDICT_HEADER = ["alpha", "bound_n", "linear_part_verdict", "jacobian_verdict"]
BIFURCATION_CLASSES_HEADER = ["alpha", "class", "n_samples"]
MULTISTABILITY_HEADER = ["x0_id", "class"]


class PreconditionError(Exception):
    """A parsed config violates a semantic precondition of the command."""


def fmt(v) -> str:
    """Nine significant digits; strings pass through."""
    if isinstance(v, str):
        return v
    return format(float(v), ".9g")


def trajectory_header(cfg: ExperimentConfig) -> list[str]:
    if cfg.model == "ring":
        cols = ["t"]
        for i in range(1, cfg.n + 1):
            cols += [f"x1_{i}", f"x2_{i}", f"phi_{i}"]
        return cols
    return list(TRAJECTORY_HEADER)


class Outputs:
    """Collects output files in memory; :meth:`commit` writes them all at once."""

    def __init__(self, directory: Path):
        self.directory = Path(directory)
        self.files: dict[str, str] = {}

    def csv(self, name: str, header, rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
        self.files[name] = buf.getvalue()

    def text(self, name: str, body: str) -> None:
        self.files[name] = body

    def commit(self, manifest: dict) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        sums = {}
        for name, body in self.files.items():
            _atomic_write(self.directory / name, body)
            sums[name] = hashlib.sha256(body.encode("utf-8")).hexdigest()
        manifest["outputs"] = sums
        _atomic_write(self.directory / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _atomic_write(path: Path, body: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(body)
    os.replace(tmp, path)


def _plot_pair(out: Outputs, stem: str, columns: list[str], rows, script: str) -> None:
    buf = io.StringIO()
    buf.write("# " + " ".join(columns) + "\n")
    for row in rows:
        buf.write(" ".join(fmt(v) for v in row) + "\n")
    out.text(f"{stem}.dat", buf.getvalue())
    out.text(f"{stem}.gp", script)


# --- commands ---------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig, out: Outputs, args) -> dict:
    system = cfg.system()
    traj = solve_abm(system, cfg.initial_state(), cfg.require_alpha(), cfg.solver())
    header = trajectory_header(cfg)
    rows = np.column_stack([traj.times, traj.states])
    out.csv("trajectory.csv", header, rows)
    if args.emit_plot:
        lines = ", ".join(
            f"'trajectory.dat' using 1:{i + 2} with lines title '{name}'" for i, name in enumerate(header[1:])
        )
        _plot_pair(out, "trajectory", header, rows,
                   f"set xlabel 't'\nset datafile commentschars '#'\nplot {lines}\n")
    return {"diverged_at": traj.diverged_at, "rows": int(len(traj))}


def cmd_stability(cfg: ExperimentConfig, out: Outputs, args) -> dict:
    if cfg.model != "two_neuron":
        raise PreconditionError("stability reports need the two_neuron model")
    params = cfg.params()
    if cfg.classify and params.k == 0:
        raise PreconditionError("region classification undefined for k = 0")
    alpha = cfg.alpha if cfg.alpha is not None else 1.0
    rows = []
    for delta in cfg.deltas:
        rec = stability_report(params, delta, alpha, classify=cfg.classify).to_record()
        rows.append([rec[key] for key in STABILITY_HEADER])
    out.csv("stability.csv", STABILITY_HEADER, rows)
    return {"rows": len(rows)}


def _ring_verdict(eigs, n_zero: int, alpha: float) -> str:
    """Matignon verdict with the flux-direction zeros removed; anything short
    of asymptotic stability reads as unstable."""
    ev = np.asarray(eigs, dtype=complex)
    order = np.argsort(np.abs(ev))
    rest = ev[order[n_zero:]]
    return "stable" if matignon_check(rest, alpha) is Verdict.STABLE else "unstable"


def cmd_ring(cfg: ExperimentConfig, out: Outputs, args) -> dict:
    try:
        rp = cfg.ring_params()
    except ConfigError as exc:
        raise PreconditionError(str(exc)) from None
    delta = np.asarray(cfg.ring_delta, dtype=float)
    if delta.size == 1:
        delta = np.full(rp.n, delta[0])
    spec = ring_spectrum(rp, delta)
    rows = []
    sources = [("block", spec.block_eigenvalues), ("jacobian", spec.dense_eigenvalues),
               ("linear_part", spec.linear_part_eigenvalues)]
    for name, ev in sources:
        if ev is None:
            continue
        for i, lam in enumerate(np.asarray(ev)):
            rows.append([name, i, lam.real, lam.imag])
    out.csv("ring_spectrum.csv", RING_SPECTRUM_HEADER, rows)
    verdicts = []
    for a in cfg.ring_alphas:
        verdicts.append([
            a, spec.stability_bound_n,
            _ring_verdict(spec.linear_part_eigenvalues, rp.n, a),
            _ring_verdict(spec.dense_eigenvalues, rp.n, a),
        ])
    out.csv("ring_verdicts.csv", RING_VERDICT_HEADER, verdicts)
    if args.emit_plot:
        _plot_pair(out, "ring_spectrum", ["re", "im"], [r[2:] for r in rows],
                   "set xlabel 'Re'\nset ylabel 'Im'\nplot 'ring_spectrum.dat' using 1:2 with points title 'eigenvalues'\n")
    bound = spec.stability_bound_n
    return {"stability_bound_n": bound if isinstance(bound, str) else float(bound)}


def cmd_bifurcate(cfg: ExperimentConfig, out: Outputs, args) -> dict:
    system = cfg.system()
    grid = cfg.alpha_grid()
    idx = cfg.observable_index()
    starts = cfg.initial_states()
    solver, classifier = cfg.solver(), cfg.classifier()
    info = {}
    for i, x0 in enumerate(starts):
        if x0.shape != (system.dimension,):
            raise PreconditionError(f"initial state {i} has the wrong length")
        scan = bifurcation_scan(system, grid, x0, solver, idx, classifier, workers=args.threads)
        stem = "bifurcation" if len(starts) == 1 else f"bifurcation_{i + 1}"
        buf = io.StringIO()
        write_scan_csv(scan, buf)
        out.text(f"{stem}.csv", buf.getvalue())
        out.csv(f"{stem}_classes.csv", BIFURCATION_CLASSES_HEADER,
                [[a, str(c), len(s)] for a, c, s in zip(scan.alpha_grid, scan.classes, scan.samples)])
        if args.emit_plot:
            pts = [(a, v) for a, _, v in scan.rows() if v is not None]
            _plot_pair(out, stem, ["alpha", "value"], pts,
                       f"set xlabel 'alpha'\nplot '{stem}.dat' using 1:2 with dots title 'peaks'\n")
        info[stem] = [str(c) for c in scan.classes]
    return {"classes": info}


def cmd_lyapunov(cfg: ExperimentConfig, out: Outputs, args) -> dict:
    system = cfg.system()
    try:
        spec = lyapunov_spectrum(system, cfg.require_alpha(), cfg.initial_state(), cfg.solver(),
                                 cfg.renorm_interval, cfg.lyapunov_transient)
    except DivergenceError as exc:
        out.csv("lyapunov.csv", ["exponent_index", "value"], [])
        return {"diverged_at": exc.step}
    buf = io.StringIO()
    write_lyapunov_csv(spec, buf)
    out.text("lyapunov.csv", buf.getvalue())
    if args.emit_plot:
        _plot_pair(out, "lyapunov", ["index", "value"], list(enumerate(spec.exponents, start=1)),
                   "set xlabel 'index'\nplot 'lyapunov.dat' using 1:2 with linespoints title 'exponent'\n")
    return {
        "method": spec.method,
        "renorm_interval": spec.renorm_interval,
        "horizon": spec.horizon,
        "memory": spec.meta["memory"],
        "trace_average": spec.trace_average,
    }


def cmd_multistability(cfg: ExperimentConfig, out: Outputs, args) -> dict:
    system = cfg.system()
    starts = cfg.initial_states()
    for i, x0 in enumerate(starts):
        if x0.shape != (system.dimension,):
            raise PreconditionError(f"initial state {i} has the wrong length")
    res = multistability_probe(system, cfg.require_alpha(), starts, cfg.solver(),
                               cfg.observable_index(), cfg.classifier(), workers=args.threads)
    out.csv("multistability.csv", MULTISTABILITY_HEADER, [[i + 1, str(r.attractor)] for i, r in enumerate(res)])
    return {"x0": [list(map(float, r.x0)) for r in res]}


COMMANDS = {
    "simulate": cmd_simulate,
    "stability": cmd_stability,
    "ring": cmd_ring,
    "bifurcate": cmd_bifurcate,
    "lyapunov": cmd_lyapunov,
    "multistability": cmd_multistability,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fmhnn", description="Fractional memristor Hopfield network toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("config", help="INI experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides [output] directory)")
        p.add_argument("--emit-plot", action="store_true", help="also write gnuplot data/script pairs")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps (0 = auto)")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads == 0:
        args.threads = os.cpu_count() or 1

    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config_text(text)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Outputs(Path(args.out if args.out is not None else cfg.output_dir))
    start = time.perf_counter()
    try:
        info = COMMANDS[args.command](cfg, out, args)
    except (PreconditionError, FodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION

    manifest = {
        "command": args.command,
        "version": __version__,
        "config": cfg.to_ini(),
        "duration_s": time.perf_counter() - start,
        "result": info,
    }
    try:
        out.commit(manifest)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
