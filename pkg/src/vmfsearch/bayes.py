"""Deterministic Bayesian iteration of the vMF prior under the success likelihood.

With prior vMF(mu_n, k_n) and likelihood p(x=0|psi) = (1 + psi^T W psi)/2 the
posterior mean is (R_n / 2z_n)(alpha_n mu_n + beta_n W mu_n).  The posterior is
not vMF; it is projected back onto the family by matching that first moment:
mu_{n+1} is its direction and k_{n+1} the concentration estimated from its length.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .errors import DimensionMismatch, OrthogonalStart, ZeroKappa
from .hamiltonian import WMatrix, fidelity
from .vmf import KAPPA_CAP, VonMisesFisher, bessel_ratios, estimate_kappa


class StopReason(str, enum.Enum):
    KAPPA_THRESHOLD = "KappaThreshold"
    ITERATION_BUDGET = "IterationBudget"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class StoppingRule:
    kappa_max: float = KAPPA_CAP
    max_iterations: int = 1000
    kappa_init: float = 0.001

    def __post_init__(self):
        if not (self.kappa_max > 0 and self.max_iterations > 0 and self.kappa_init > 0):
            raise ValueError(f"stopping rule values must all be positive: {self}")


@dataclass(frozen=True)
class InferenceState:
    """Prior at iteration ``iteration``; ``resultant`` is A_p(kappa) unless carried."""

    iteration: int
    prior: VonMisesFisher
    resultant: float

    @classmethod
    def initial(cls, mu, kappa: float, iteration: int = 0) -> "InferenceState":
        prior = VonMisesFisher(mu, kappa)
        return cls(iteration, prior, bessel_ratios(prior.p, kappa).a)

    @property
    def mu(self) -> np.ndarray:
        return self.prior.mu

    @property
    def kappa(self) -> float:
        return self.prior.kappa

    @property
    def p(self) -> int:
        return self.prior.p


@dataclass(frozen=True)
class PosteriorUpdate:
    alpha: float
    beta: float
    z: float
    mu_next: np.ndarray
    resultant_next: float
    kappa_next: float


def _w(state: InferenceState, W: WMatrix) -> np.ndarray:
    if W.p != state.p:
        raise DimensionMismatch(f"W is {W.p}x{W.p} but the state lives in dimension {state.p}")
    return W.matrix


def success_mass(state: InferenceState, W: WMatrix) -> float:
    """z_n = E_n[p(x=0|psi)] = (1 + E_n[psi^T W psi]) / 2."""
    _w(state, W)
    return 0.5 * (1.0 + state.prior.quadratic_moment(W))


def update_step(state: InferenceState, W: WMatrix, kappa_max: float = KAPPA_CAP) -> PosteriorUpdate:
    Wm = _w(state, W)
    k = state.kappa
    if k <= 0.0:
        raise ZeroKappa("update needs kappa > 0; start from a small positive kappa_init")
    r = bessel_ratios(state.p, k)
    R = state.resultant
    mu = state.mu
    Wmu = Wm @ mu
    q = float(mu @ Wmu)
    tr = W.trace
    alpha = 1.0 + (r.b_over_k * tr + r.d * q) / R
    beta = 2.0 * r.b_over_k / R
    z = 0.5 * (1.0 + r.a_over_k * tr + r.b * q)
    v = alpha * mu + beta * Wmu
    norm = float(np.linalg.norm(v))
    mu_next = v / norm
    R_next = R / (2.0 * z) * norm
    return PosteriorUpdate(alpha, beta, z, mu_next, R_next, estimate_kappa(R_next, state.p, kappa_max))


def advance(state: InferenceState, update: PosteriorUpdate, carry_resultant: bool = False) -> InferenceState:
    """Next prior from an update.

    By default the resultant is recomputed as A_p(k_{n+1}); with
    ``carry_resultant`` the posterior's own length R_{n+1} is kept instead.
    """
    mu = update.mu_next / np.linalg.norm(update.mu_next)
    if carry_resultant:
        return InferenceState(state.iteration + 1, VonMisesFisher(mu, update.kappa_next), update.resultant_next)
    return InferenceState.initial(mu, update.kappa_next, state.iteration + 1)


def convergence_ratio(prev, next, target) -> float:
    """R_c = (t . mu_{n+1}) / (t . mu_n); raises OrthogonalStart when t . mu_n = 0."""
    t = np.asarray(target, dtype=float)
    a = float(t @ np.asarray(prev, dtype=float))
    b = float(t @ np.asarray(next, dtype=float))
    if abs(a) <= 1e-15:
        raise OrthogonalStart(abs(a), abs(b))
    return b / a


def projection_ratio(prev, next, W: WMatrix) -> float:
    """||P0 mu_{n+1}|| / ||P0 mu_n||, the phase-free form of the convergence ratio."""
    pa = np.linalg.norm(W.ground_basis.T @ np.asarray(prev, dtype=float))
    pb = np.linalg.norm(W.ground_basis.T @ np.asarray(next, dtype=float))
    if pa <= 1e-15:
        raise OrthogonalStart(float(pa), float(pb))
    return float(pb / pa)


def growth_condition(state: InferenceState, W: WMatrix) -> bool:
    """mu^T W mu >= Tr W / p, the condition for R_{n+1} >= R_n."""
    Wm = _w(state, W)
    return bool(state.mu @ Wm @ state.mu >= W.trace / state.p - 1e-12)


@dataclass(frozen=True)
class IterationTrace:
    run_id: int
    iteration: int
    fidelity: float
    resultant: float
    kappa: float
    mu_w_mu: float
    z: float
    stop_reason: str = ""


@dataclass
class InferenceResult:
    trace: list[IterationTrace]
    state: InferenceState
    reason: StopReason
    updates: list[PosteriorUpdate] = field(default_factory=list, repr=False)

    @property
    def iterations(self) -> int:
        return self.state.iteration


def iterate(
    state: InferenceState,
    W: WMatrix,
    stop: StoppingRule = StoppingRule(),
    carry_resultant: bool = False,
) -> Iterator[tuple[InferenceState, PosteriorUpdate | None]]:
    """Yield (state_n, update_n) until the stopping rule fires.

    The terminal state is yielded with ``None`` in place of an update.  At most
    ``stop.max_iterations`` states are produced.
    """
    while True:
        if state.kappa >= stop.kappa_max or state.iteration + 1 >= stop.max_iterations:
            yield state, None
            return
        update = update_step(state, W, stop.kappa_max)
        yield state, update
        state = advance(state, update, carry_resultant)


def run_inference(
    init: VonMisesFisher,
    W: WMatrix,
    stop: StoppingRule = StoppingRule(),
    carry_resultant: bool = False,
    run_id: int = 0,
    keep_updates: bool = False,
) -> InferenceResult:
    """Iterate from ``init`` and record one trace row per visited state.

    A zero initial concentration is replaced by ``stop.kappa_init``.
    """
    if init.p != W.p:
        raise DimensionMismatch(f"initial distribution has p={init.p}, W has p={W.p}")
    kappa0 = init.kappa if init.kappa > 0 else stop.kappa_init
    state = InferenceState.initial(init.mu, kappa0)
    rows: list[IterationTrace] = []
    updates: list[PosteriorUpdate] = []
    last = state
    for last, update in iterate(state, W, stop, carry_resultant):
        q = float(last.mu @ W.matrix @ last.mu)
        z = update.z if update is not None else success_mass(last, W)
        rows.append(IterationTrace(run_id, last.iteration, fidelity(last.mu, W), last.resultant, last.kappa, q, z))
        if keep_updates and update is not None:
            updates.append(update)
    reason = StopReason.KAPPA_THRESHOLD if last.kappa >= stop.kappa_max else StopReason.ITERATION_BUDGET
    rows[-1] = replace(rows[-1], stop_reason=reason.value)
    return InferenceResult(rows, last, reason, updates)


def iterations_to_threshold(result: InferenceResult, stop: StoppingRule) -> int:
    """Index of the terminal state, counting budget exhaustion as ``max_iterations``."""
    if result.reason is StopReason.KAPPA_THRESHOLD:
        return result.iterations
    return stop.max_iterations

