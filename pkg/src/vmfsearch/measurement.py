"""Single-ancilla two-outcome measurement.

The control-unitary circuit is not simulated; the ancilla outcome probability

    p(x | H, psi, phi) = [1 + (-1)^x sum_n cos(eps_n t + phi) |<h_n|psi>|^2] / 2

is evaluated directly from the spectral data of the scaled Hamiltonian.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, NonUnitState, ProbabilityOutOfRange
from .hamiltonian import ScaledHamiltonian, complex_from_real


@dataclass(frozen=True)
class MeasurementConfig:
    phase: float = 0.0
    shots: int = 1000

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")


@dataclass(frozen=True)
class OutcomeTally:
    successes: int
    failures: int

    @property
    def shots(self) -> int:
        return self.successes + self.failures

    @property
    def rate(self) -> float:
        return self.successes / self.shots


def _as_complex_state(psi, d: int) -> np.ndarray:
    psi = np.asarray(psi)
    if np.iscomplexobj(psi):
        vec = psi.astype(complex)
    elif psi.ndim == 1 and len(psi) == 2 * d:
        vec = complex_from_real(psi)
    elif psi.ndim == 1 and len(psi) == d:
        vec = psi.astype(complex)
    else:
        raise DimensionMismatch(f"state of shape {psi.shape} does not fit dimension d={d} (or p={2 * d})")
    if vec.shape != (d,):
        raise DimensionMismatch(f"state of shape {vec.shape} does not fit dimension d={d}")
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > 1e-10:
        raise NonUnitState(f"state norm is {norm!r}, expected 1")
    return vec


def outcome_probability(scaled: ScaledHamiltonian, psi, phase: float = 0.0) -> tuple[float, float]:
    """Return (p0, p1) for the ancilla outcomes success (x = 0) and fail (x = 1).

    ``psi`` may be a complex d-vector or its real embedding of length 2d.  A
    real vector of length d is read as a complex vector with zero imaginary part.
    """
    vec = _as_complex_state(psi, scaled.dim)
    weights = np.abs(scaled.spectrum.eigenvectors.conj().T @ vec) ** 2
    s = float(np.cos(scaled.phases + phase) @ weights)
    p0 = min(1.0, max(0.0, 0.5 * (1.0 + s)))
    return p0, 1.0 - p0


def sample_outcomes(p0: float, shots: int, seed=None) -> OutcomeTally:
    if not (0.0 <= p0 <= 1.0):
        raise ProbabilityOutOfRange(f"success probability must lie in [0, 1], got {p0}")
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    successes = int(np.random.default_rng(seed).binomial(shots, p0))
    return OutcomeTally(successes, shots - successes)


def binomial_stderr(p0: float, shots: int) -> float:
    return math.sqrt(p0 * (1.0 - p0) / shots)


TALLY_HEADER = ("phase", "shots", "successes", "p0_exact")


def write_tally_csv(rows, path) -> None:
    """Write (phase, tally, p0_exact) triples as CSV rows ``phase,shots,successes,p0_exact``."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TALLY_HEADER)
        for phase, tally, p0 in rows:
            writer.writerow([f"{phase:.17g}", tally.shots, tally.successes, f"{p0:.17g}"])
