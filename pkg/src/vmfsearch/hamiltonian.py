"""Hamiltonian ingestion, spectral scaling and the real quadratic form W.

A complex state |psi> = sum_k (psi_k^r + i psi_k^i)|k> is represented by the
interleaved real vector (psi_1^r, psi_1^i, psi_2^r, psi_2^i, ...) of length
p = 2d.  Under that map the success-probability kernel
sum_n cos(eps_n t)|<h_n|psi>|^2 becomes the quadratic form psi^T W psi.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import reduce
from pathlib import Path

import numpy as np

from .errors import (
    ConvergenceFailure,
    DegenerateSpectrum,
    DimensionMismatch,
    NonHermitian,
    PermissiveWindowWarning,
    WindowInvalid,
    WindowViolation,
)

DEFAULT_WINDOW = (0.1, math.pi / 2)
HERMITIAN_TOL = 1e-12
GROUND_TOL = 1e-9

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


def check_hermitian(H, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``H`` as a complex square array, raising NonHermitian if it is not Hermitian.

    The tolerance is absolute for matrices with entries of order one and scales
    with the largest entry magnitude otherwise.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 1:
        raise NonHermitian(f"expected a non-empty square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise NonHermitian("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(H))))
    err = float(np.max(np.abs(H - H.conj().T)))
    if err > tol * scale:
        raise NonHermitian(f"max |H - H^dagger| = {err:.3e} exceeds tolerance {tol * scale:.1e}")
    return H


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues and the matching orthonormal eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def eigendecompose(H) -> Spectrum:
    H = check_hermitian(H)
    # symmetrize so that eigh sees an exactly Hermitian input
    H = (H + H.conj().T) / 2
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    order = np.argsort(w, kind="stable")
    return Spectrum(_frozen(w[order]), _frozen(V[:, order]))


@dataclass(frozen=True)
class ScaledHamiltonian:
    """A Hamiltonian whose phases (scale * eps + shift) * time lie inside ``window``."""

    spectrum: Spectrum
    scale: float
    shift: float
    time: float
    window: tuple[float, float]

    @property
    def dim(self) -> int:
        return self.spectrum.dim

    @property
    def phases(self) -> np.ndarray:
        return (self.scale * self.spectrum.eigenvalues + self.shift) * self.time

    @property
    def cosines(self) -> np.ndarray:
        return np.cos(self.phases)

    def matrix(self) -> np.ndarray:
        """Dense matrix of scale * H + shift * I."""
        V = self.spectrum.eigenvectors
        return (V * (self.scale * self.spectrum.eigenvalues + self.shift)) @ V.conj().T


def _check_window(window) -> tuple[float, float]:
    try:
        lo, hi = (float(w) for w in window)
    except (TypeError, ValueError) as exc:
        raise WindowInvalid(f"window must be a pair of numbers, got {window!r}") from exc
    if not (0.0 < lo < hi <= math.pi):
        raise WindowInvalid(f"window must lie in (0, π] with lo < hi, got [{lo}, {hi}]")
    return lo, hi


def scale_to_window(
    spectrum: Spectrum,
    window=DEFAULT_WINDOW,
    bounds: tuple[float, float] | None = None,
) -> ScaledHamiltonian:
    """Affinely map the spectrum (or the given energy bounds) onto ``window`` with t = 1.

    The lower bound lands on the lower window edge, so the ground level has the
    smallest phase and the largest cosine.  A window reaching past pi/2 is accepted
    with a PermissiveWindowWarning.
    """
    lo, hi = _check_window(window)
    if hi > math.pi / 2 + 1e-15:
        warnings.warn(
            f"window upper edge {hi} exceeds π/2; the bound ||Wψ|| ≤ cos(ε0 t) may not hold",
            PermissiveWindowWarning,
            stacklevel=2,
        )
    evals = spectrum.eigenvalues
    if bounds is None:
        lam_min, lam_max = float(evals[0]), float(evals[-1])
    else:
        lam_min, lam_max = (float(b) for b in bounds)
        if not lam_min < lam_max:
            raise WindowInvalid(f"bounds must satisfy min < max, got {bounds!r}")
        if evals[0] < lam_min or evals[-1] > lam_max:
            raise WindowInvalid(
                f"eigenvalues [{evals[0]}, {evals[-1]}] fall outside bounds [{lam_min}, {lam_max}]"
            )
    if lam_max - lam_min <= 1e-14 * max(1.0, abs(lam_min), abs(lam_max)):
        raise DegenerateSpectrum(lam_min)
    a = (hi - lo) / (lam_max - lam_min)
    b = lo - a * lam_min
    return ScaledHamiltonian(spectrum, a, b, 1.0, (lo, hi))


def real_embed(v) -> tuple[np.ndarray, np.ndarray]:
    """Return (h, h_s) for a complex vector v.

    h = (Re v1, Im v1, Re v2, Im v2, ...), h_s = (-Im v1, Re v1, -Im v2, Re v2, ...),
    so that <v|psi> = h.psi + i h_s.psi for the embedded psi.  Works column-wise on
    a (d, m) array.
    """
    v = np.asarray(v, dtype=complex)
    shape = (2 * v.shape[0],) + v.shape[1:]
    h = np.empty(shape)
    hs = np.empty(shape)
    h[0::2] = v.real
    h[1::2] = v.imag
    hs[0::2] = -v.imag
    hs[1::2] = v.real
    return h, hs


def complex_from_real(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 1 or len(psi) % 2:
        raise DimensionMismatch(f"real state must have even length, got shape {psi.shape}")
    return psi[0::2] + 1j * psi[1::2]


@dataclass(frozen=True)
class WMatrix:
    """Real symmetric p x p form with psi^T W psi = sum_n c_n |<h_n|psi>|^2."""

    matrix: np.ndarray
    cosines: np.ndarray
    ground_cosine: float
    ground_projector: np.ndarray
    ground_basis: np.ndarray
    excited_basis: np.ndarray

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def ground_multiplicity(self) -> int:
        return self.ground_basis.shape[1] // 2


def build_w(scaled: ScaledHamiltonian, strict: bool = True, ground_tol: float = GROUND_TOL) -> WMatrix:
    """Assemble W = sum_n c_n (h_n h_n^T + h_n^s h_n^s^T) with c_n = cos(eps_n t).

    In strict mode a negative cosine (phase past pi/2) raises WindowViolation,
    since the convergence argument needs c_0 >= |c_n| for every level.
    """
    c = scaled.cosines
    if strict and np.any(c < -1e-12):
        raise WindowViolation(
            f"cosine {float(c.min()):.3g} < 0: scaled phases leave (0, π/2]; pass strict=False to allow"
        )
    h, hs = real_embed(scaled.spectrum.eigenvectors)
    W = (h * c) @ h.T + (hs * c) @ hs.T
    W = (W + W.T) / 2
    phases = scaled.phases
    ground = np.abs(phases - phases[0]) <= ground_tol
    # interleave h_n, h_n^s so each level contributes an adjacent pair of columns
    basis = np.stack([h, hs], axis=2).reshape(h.shape[0], -1)
    mask = np.repeat(ground, 2)
    g_basis = basis[:, mask]
    P0 = g_basis @ g_basis.T
    return WMatrix(
        matrix=_frozen(W),
        cosines=_frozen(c),
        ground_cosine=float(c[0]),
        ground_projector=_frozen((P0 + P0.T) / 2),
        ground_basis=_frozen(g_basis),
        excited_basis=_frozen(basis[:, ~mask]),
    )


def prepare(H, window=DEFAULT_WINDOW, bounds=None, strict: bool = True) -> tuple[ScaledHamiltonian, WMatrix]:
    """Eigendecompose, scale and embed ``H`` in one call."""
    scaled = scale_to_window(eigendecompose(H), window, bounds)
    return scaled, build_w(scaled, strict=strict)


def _check_state(psi, wmat: WMatrix) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (wmat.p,):
        raise DimensionMismatch(f"state has shape {psi.shape}, W needs ({wmat.p},)")
    return psi


def fidelity(psi, wmat: WMatrix) -> float:
    """Overlap of ``psi`` with the ground eigenspace, psi^T P0 psi.

    Invariant under the global phase rotation cos(g) h0 + sin(g) h0^s.
    """
    psi = _check_state(psi, wmat)
    proj = wmat.ground_basis.T @ psi
    return float(min(1.0, max(0.0, proj @ proj)))


def leakage(psi, wmat: WMatrix) -> float:
    """Norm of the component of ``psi`` outside the ground eigenspace.

    Computed from the excited-level projections directly, so it keeps full
    relative precision when the fidelity has rounded to 1.
    """
    psi = _check_state(psi, wmat)
    proj = wmat.excited_basis.T @ psi
    return float(np.sqrt(proj @ proj))


def parse_pauli_sum(text: str) -> np.ndarray:
    """Expand lines ``<coefficient> <pauli string>`` into a dense matrix.

    The leftmost letter acts on the most significant qubit.  Blank lines and
    ``#`` comments are ignored.
    """
    total = None
    n_qubits = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected '<coefficient> <pauli string>', got {raw!r}")
        try:
            coef = float(parts[0])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad coefficient {parts[0]!r}") from exc
        word = parts[1].upper()
        if not word or set(word) - set(_PAULI):
            raise ValueError(f"line {lineno}: pauli string must use I, X, Y, Z, got {parts[1]!r}")
        if n_qubits is None:
            n_qubits = len(word)
        elif len(word) != n_qubits:
            raise ValueError(f"line {lineno}: expected {n_qubits} qubits, got {len(word)}")
        term = coef * reduce(np.kron, (_PAULI[ch] for ch in word))
        total = term if total is None else total + term
    if total is None:
        raise ValueError("no pauli terms found")
    return total


def hamiltonian_from_json(data: dict) -> np.ndarray:
    try:
        d = int(data["dim"])
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad Hamiltonian JSON: {exc}") from exc
    if re.shape != (d, d) or im.shape != (d, d):
        raise DimensionMismatch(f"'re'/'im' must be {d}x{d}, got {re.shape} and {im.shape}")
    return check_hermitian(re + 1j * im)


def hamiltonian_to_json(H) -> dict:
    H = np.asarray(H, dtype=complex)
    return {"dim": H.shape[0], "re": H.real.tolist(), "im": H.imag.tolist()}


def load_hamiltonian(path) -> np.ndarray:
    """Read a Hamiltonian from a JSON file or a Pauli-sum text file.

    The format is chosen by content: a leading ``{`` means JSON.
    """
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from exc
        return hamiltonian_from_json(data)
    return check_hermitian(parse_pauli_sum(text))
