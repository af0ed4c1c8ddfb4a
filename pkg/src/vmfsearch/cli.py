"""Command-line entry point: ``vmfsearch <subcommand> ...``.

Exit codes: 0 success, 1 user error (bad input, config or flags), 2 internal error.
"""

from __future__ import annotations

import argparse
import collections
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import experiment, hamiltonian, measurement, vmf
from .errors import VmfSearchError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _write(writer, row):
    writer.writerow([_fmt(v) for v in row])


def _window_args(p):
    p.add_argument("--window-lo", type=float, default=hamiltonian.DEFAULT_WINDOW[0], help="lower phase edge (default 0.1)")
    p.add_argument("--window-hi", type=float, default=hamiltonian.DEFAULT_WINDOW[1], help="upper phase edge (default π/2)")
    p.add_argument("--bounds", type=float, nargs=2, metavar=("EMIN", "EMAX"), help="energy bounds mapped onto the window")


def _prepare(args, strict=True):
    H = hamiltonian.load_hamiltonian(args.hamiltonian)
    spec = hamiltonian.eigendecompose(H)
    scaled = hamiltonian.scale_to_window(spec, (args.window_lo, args.window_hi), args.bounds)
    return scaled, hamiltonian.build_w(scaled, strict=strict)


def cmd_run(args) -> int:
    config = experiment.load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = args.workers if args.workers is not None else experiment.default_workers()
    result = experiment.run_ensemble(config, workers=workers)
    experiment.export_traces(result.traces, out / "traces.csv")
    experiment.export_aggregates(result.aggregates, out / "aggregate.csv")
    finals = [run[-1] for run in result.runs()]
    print(f"runs: {len(finals)}")
    print(f"mean final fidelity: {_fmt(float(np.mean([r.fidelity for r in finals])))}")
    print(f"mean final kappa: {_fmt(float(np.mean([r.kappa for r in finals])))}")
    for reason, count in sorted(collections.Counter(r.stop_reason for r in finals).items()):
        print(f"stop {reason}: {count}")
    print(f"wrote {out / 'traces.csv'} and {out / 'aggregate.csv'}")
    return 0


def cmd_spectrum(args) -> int:
    scaled, W = _prepare(args, strict=False)
    w = _writer(sys.stdout)
    w.writerow(["index", "eigenvalue", "phase", "cosine", "ground_cosine"])
    for i, (e, ph, c) in enumerate(zip(scaled.spectrum.eigenvalues, scaled.phases, scaled.cosines)):
        _write(w, [i, float(e), float(ph), float(c), W.ground_cosine])
    return 0


def cmd_build_w(args) -> int:
    _, W = _prepare(args, strict=not args.permissive)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = _writer(fh)
        for row in W.matrix:
            _write(w, [float(v) for v in row])
    finally:
        if args.out:
            fh.close()
    return 0


def _read_vector(path) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape or re.ndim != 1:
            raise ValueError(f"{path}: 're' and 'im' must be flat lists of equal length")
        return re + 1j * im
    vec = np.asarray(data, dtype=float)
    if vec.ndim != 1:
        raise ValueError(f"{path}: expected a flat list of numbers")
    return vec


def cmd_sample_vmf(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.p < 2:
        raise UsageError("--p must be >= 2")
    if args.kappa < 0:
        raise UsageError("--kappa must be >= 0")
    if args.north:
        mu = np.zeros(args.p)
        mu[0] = 1.0
    else:
        mu = _read_vector(args.mu)
        if np.iscomplexobj(mu) or mu.shape != (args.p,):
            raise UsageError(f"mean direction must be a real list of length {args.p}")
        if abs(np.linalg.norm(mu) - 1.0) > 1e-12:
            raise UsageError(f"mean direction must be a unit vector (norm {np.linalg.norm(mu)!r})")
    X = vmf.sample_vmf(mu, args.kappa, args.n, args.seed)
    mu_hat, R = vmf.mle_mean(X)
    k_hat = vmf.estimate_kappa(R, args.p, cap=None)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = _writer(fh)
        w.writerow([f"x{i}" for i in range(args.p)])
        for row in X:
            _write(w, [float(v) for v in row])
        fh.write("# mu_hat," + ",".join(_fmt(float(v)) for v in mu_hat) + "\n")
        fh.write(f"# resultant,{_fmt(R)}\n")
        fh.write(f"# kappa_hat,{_fmt(k_hat)}\n")
    finally:
        if args.out:
            fh.close()
    return 0


def cmd_measure(args) -> int:
    scaled, W = _prepare(args, strict=False)
    psi = _read_vector(args.state)
    if psi.shape not in ((scaled.dim,), (W.p,)):
        raise UsageError(f"state has length {psi.shape[0]}, expected {scaled.dim} (complex) or {W.p} (real)")
    p0, _ = measurement.outcome_probability(scaled, psi, args.phase)
    tally = measurement.sample_outcomes(p0, args.shots, args.seed)
    w = _writer(sys.stdout)
    w.writerow(["p0_exact", "empirical_rate", "stderr", "shots", "successes"])
    _write(w, [p0, tally.rate, measurement.binomial_stderr(p0, args.shots), tally.shots, tally.successes])
    if args.tally_out:
        measurement.write_tally_csv([(args.phase, tally, p0)], args.tally_out)
    return 0


def cmd_random_h(args) -> int:
    if args.dim < 2:
        raise UsageError("--dim must be >= 2")
    H = experiment.random_hamiltonian(args.dim, args.seed)
    text = json.dumps(hamiltonian.hamiltonian_to_json(H))
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vmfsearch", description="Bayesian vMF ground-state search.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run an ensemble experiment from a config file")
    p.add_argument("config", help="flat key = value config file")
    p.add_argument("--out-dir", required=True, help="directory for traces.csv and aggregate.csv")
    p.add_argument("--workers", type=int, help="parallel runs (default from VMF_EIGENSOLVER_THREADS, 0 = auto)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("spectrum", help="print eigenvalues, scaled phases and cosines as CSV")
    p.add_argument("hamiltonian", help="JSON or Pauli-sum file")
    _window_args(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("build-w", help="print the real quadratic form W as CSV")
    p.add_argument("hamiltonian", help="JSON or Pauli-sum file")
    _window_args(p)
    p.add_argument("--permissive", action="store_true", help="allow negative cosines (window past π/2)")
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_build_w)

    p = sub.add_parser("sample-vmf", help="draw vMF samples and report the fitted parameters")
    p.add_argument("--p", type=int, required=True, help="ambient dimension")
    p.add_argument("--kappa", type=float, required=True, help="concentration")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--mu", help="JSON list holding the unit mean direction")
    src.add_argument("--north", action="store_true", help="use the first basis vector as mean direction")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_sample_vmf)

    p = sub.add_parser("measure", help="exact and sampled ancilla success probability")
    p.add_argument("hamiltonian", help="JSON or Pauli-sum file")
    p.add_argument("state", help="JSON state: {'re': [...], 'im': [...]} or a real-embedded list")
    _window_args(p)
    p.add_argument("--phase", type=float, default=0.0, help="measurement phase in radians (default 0)")
    p.add_argument("--shots", type=int, default=100_000, help="number of shots (default 100000)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--tally-out", help="also write the tally as CSV")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("random-h", help="write a seeded random Hermitian matrix as JSON")
    p.add_argument("--dim", type=int, required=True, help="matrix dimension")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_random_h)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (VmfSearchError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
