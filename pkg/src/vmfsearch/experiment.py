"""Ensemble experiments: many random starts on one Hamiltonian, averaged per iteration."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .bayes import IterationTrace, StoppingRule, run_inference
from .errors import ConfigError, VmfSearchError, WindowInvalid
from .hamiltonian import DEFAULT_WINDOW, WMatrix, _check_window, load_hamiltonian, prepare
from .vmf import VonMisesFisher

THREADS_ENV = "VMF_EIGENSOLVER_THREADS"

TRACE_HEADER = ("run_id", "iteration", "fidelity", "resultant", "kappa", "mu_w_mu", "z", "stop_reason")
AGGREGATE_HEADER = ("iteration", "mean_fidelity", "mean_resultant", "mean_kappa", "run_count")


@dataclass(frozen=True)
class ExperimentConfig:
    hamiltonian: str = "random"
    dim: int = 2
    window_lo: float = DEFAULT_WINDOW[0]
    window_hi: float = DEFAULT_WINDOW[1]
    restarts: int = 100
    kappa_init: float = 0.001
    kappa_max: float = 700.0
    max_iterations: int = 1000
    seed: int = 0
    carry_resultant: bool = False

    def __post_init__(self):
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1", field="restarts")
        if self.hamiltonian == "random" and self.dim < 2:
            raise ConfigError("dim must be >= 2 for random Hamiltonians", field="dim")
        try:
            _check_window((self.window_lo, self.window_hi))
        except WindowInvalid as exc:
            raise ConfigError(str(exc), field="window_hi") from exc
        try:
            self.stopping_rule
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def window(self) -> tuple[float, float]:
        return (self.window_lo, self.window_hi)

    @property
    def stopping_rule(self) -> StoppingRule:
        return StoppingRule(self.kappa_max, self.max_iterations, self.kappa_init)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_PARSERS = {"int": int, "float": float, "str": str, "bool": _parse_bool}


def parse_config(text: str, base_dir=None) -> ExperimentConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment.

    A relative ``hamiltonian`` path is resolved against ``base_dir``.
    """
    values: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}", line=lineno, field=key)
        if key in values:
            raise ConfigError("duplicate key", line=lineno, field=key)
        try:
            values[key] = _PARSERS[_FIELD_TYPES[key]](value)
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r}: {exc}", line=lineno, field=key) from exc
        lines[key] = lineno
    if "hamiltonian" in values and values["hamiltonian"] != "random" and base_dir is not None:
        path = Path(values["hamiltonian"])
        if not path.is_absolute():
            values["hamiltonian"] = str(Path(base_dir) / path)
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        if exc.field is not None and exc.line is None:
            line = lines.get(exc.field)
            if exc.field == "window_hi" and line is None:
                line = lines.get("window_lo")
            raise ConfigError(exc.message, line=line, field=exc.field) from exc
        raise


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


def random_hamiltonian(d: int, seed=None) -> np.ndarray:
    """(G + G^dagger)/2 with G having independent standard complex-normal entries."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    rng = np.random.default_rng(seed)
    G = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    return (G + G.conj().T) / 2


def random_unit_vector(p: int, seed=None) -> np.ndarray:
    if p < 2:
        raise ValueError(f"dimension must be >= 2, got {p}")
    x = np.random.default_rng(seed).standard_normal(p)
    return x / np.linalg.norm(x)


@dataclass(frozen=True)
class AggregateTrace:
    iteration: int
    mean_fidelity: float
    mean_resultant: float
    mean_kappa: float
    run_count: int


@dataclass
class EnsembleResult:
    traces: list[IterationTrace]
    aggregates: list[AggregateTrace]
    W: WMatrix
    hamiltonian: np.ndarray

    def runs(self) -> list[list[IterationTrace]]:
        out: dict[int, list[IterationTrace]] = {}
        for row in self.traces:
            out.setdefault(row.run_id, []).append(row)
        return [out[k] for k in sorted(out)]


def config_hamiltonian(config: ExperimentConfig, seed=None) -> np.ndarray:
    if config.hamiltonian == "random":
        return random_hamiltonian(config.dim, seed)
    return load_hamiltonian(config.hamiltonian)


def _single_run(args) -> list[IterationTrace]:
    run_id, seed_label, W, start, stop, carry = args
    try:
        return run_inference(VonMisesFisher(start, stop.kappa_init), W, stop, carry, run_id=run_id).trace
    except Exception as exc:
        raise VmfSearchError(f"run {run_id} ({seed_label}) failed: {exc}") from exc


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def run_ensemble(config: ExperimentConfig, workers: int | None = None, hamiltonian=None) -> EnsembleResult:
    """Run ``config.restarts`` inferences from independent uniform starts.

    The seed splits into one stream for a random Hamiltonian and one per run,
    so results do not depend on ``workers`` or on completion order.
    """
    root = np.random.SeedSequence(config.seed)
    ham_seed, runs_seed = root.spawn(2)
    H = config_hamiltonian(config, ham_seed) if hamiltonian is None else np.asarray(hamiltonian)
    _, W = prepare(H, config.window, strict=config.window_hi <= math.pi / 2 + 1e-15)
    stop = config.stopping_rule
    tasks = [
        (i, f"seed {config.seed}, spawn key {s.spawn_key}", W, random_unit_vector(W.p, s), stop, config.carry_resultant)
        for i, s in enumerate(runs_seed.spawn(config.restarts))
    ]
    workers = default_workers() if workers is None else max(1, workers)
    workers = min(workers, len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_run = list(pool.map(_single_run, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        per_run = [_single_run(t) for t in tasks]
    traces = [row for run in per_run for row in run]
    return EnsembleResult(traces, aggregate(per_run), W, H)


def aggregate(per_run: list[list[IterationTrace]]) -> list[AggregateTrace]:
    """Per-iteration means; finished runs contribute their terminal values afterwards.

    ``run_count`` counts the runs that actually reached each iteration.
    """
    if not per_run:
        return []
    length = max(len(run) for run in per_run)
    cols = {}
    for name in ("fidelity", "resultant", "kappa"):
        arr = np.empty((len(per_run), length))
        for i, run in enumerate(per_run):
            vals = [getattr(row, name) for row in run]
            arr[i, : len(vals)] = vals
            arr[i, len(vals) :] = vals[-1]
        cols[name] = arr.mean(axis=0)
    counts = np.zeros(length, dtype=int)
    for run in per_run:
        counts[: len(run)] += 1
    return [
        AggregateTrace(n, float(cols["fidelity"][n]), float(cols["resultant"][n]), float(cols["kappa"][n]), int(counts[n]))
        for n in range(length)
    ]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _write_rows(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(getattr(row, name)) for name in header])


def export_traces(traces, path) -> None:
    """CSV ``run_id,iteration,fidelity,resultant,kappa,mu_w_mu,z,stop_reason``; floats at 17 digits."""
    _write_rows(path, TRACE_HEADER, traces)


def export_aggregates(aggregates, path) -> None:
    _write_rows(path, AGGREGATE_HEADER, aggregates)


def read_traces(path) -> list[IterationTrace]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            IterationTrace(
                int(r["run_id"]), int(r["iteration"]), float(r["fidelity"]), float(r["resultant"]),
                float(r["kappa"]), float(r["mu_w_mu"]), float(r["z"]), r["stop_reason"],
            )
            for r in reader
        ]


def read_aggregates(path) -> list[AggregateTrace]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            AggregateTrace(
                int(r["iteration"]), float(r["mean_fidelity"]), float(r["mean_resultant"]),
                float(r["mean_kappa"]), int(r["run_count"]),
            )
            for r in reader
        ]
