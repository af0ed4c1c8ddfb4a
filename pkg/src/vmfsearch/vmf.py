"""The von Mises-Fisher distribution on the unit sphere S^{p-1}.

Density C_p(k) exp(k mu.psi) with C_p(k) = k^{p/2-1} / ((2 pi)^{p/2} I_{p/2-1}(k)).
Moments up to third order only involve the Bessel ratios

    A = I_{p/2}/I_{p/2-1},  B = I_{p/2+1}/I_{p/2-1},  D = I_{p/2+2}/I_{p/2-1},

which are evaluated without ever forming a raw Bessel value.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.optimize import brentq

from .errors import (
    DimensionMismatch,
    EmptySample,
    ResultantOutOfRange,
    ZeroResultantWarning,
)

KAPPA_CAP = 700.0
SMALL_KAPPA = 1e-6
CF_TOL = 1e-15
CF_MAX_TERMS = 1_000_000

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def bessel_ratio_cf(nu: float, x: float, tol: float = CF_TOL) -> float:
    """I_nu(x) / I_{nu-1}(x) for x > 0 from Gauss's continued fraction.

    r_nu = 1 / (2 nu/x + 1 / (2 (nu+1)/x + 1 / (2 (nu+2)/x + ...))),
    evaluated with the modified Lentz method.
    """
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    two_over_x = 2.0 / x
    for j in range(CF_MAX_TERMS):
        b = (nu + j) * two_over_x
        d = b + d
        d = 1.0 / (d if d != 0.0 else tiny)
        c = b + 1.0 / c
        if c == 0.0:
            c = tiny
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < tol:
            return f
    raise RuntimeError(f"continued fraction for I_{nu}/I_{nu - 1} at x={x} did not converge")


@dataclass(frozen=True)
class BesselRatios:
    """A, B, D together with the k -> 0 safe quotients A/k and B/k."""

    a: float
    b: float
    d: float
    a_over_k: float
    b_over_k: float


def bessel_ratios(p: int, kappa: float) -> BesselRatios:
    if p < 2:
        raise ValueError(f"dimension p must be >= 2, got {p}")
    kappa = float(kappa)
    if kappa < 0 or not math.isfinite(kappa):
        raise ValueError(f"kappa must be finite and >= 0, got {kappa}")
    nu = p / 2.0
    if kappa == 0.0:
        return BesselRatios(0.0, 0.0, 0.0, 1.0 / p, 0.0)
    if kappa < SMALL_KAPPA:
        # leading two terms of the power series; the k^2 correction is < 1e-12 relative here
        r2 = kappa / (2 * nu + 4) * (1.0 - kappa * kappa / (4 * (nu + 2) * (nu + 3)))
    else:
        r2 = bessel_ratio_cf(nu + 2, kappa)
    # backward recurrence r_{m} = 1 / (2m/k + r_{m+1}) is stable and makes
    # p A/k + B = 1 and D = A - (p+2) B/k hold to rounding
    r1 = 1.0 / (2 * (nu + 1) / kappa + r2)
    r0 = 1.0 / (2 * nu / kappa + r1)
    a = r0
    b = r0 * r1
    d = b * r2
    return BesselRatios(a, b, d, r0 / kappa, b / kappa)


def log_bessel_i(nu: float, x: float) -> float:
    """log I_nu(x) for x >= 0 without overflow or underflow."""
    if x == 0.0:
        return 0.0 if nu == 0 else -math.inf
    val = special.ive(nu, x)
    if val > 0 and math.isfinite(val):
        return math.log(val) + x
    # ive underflows for large order and small argument; sum the power series
    # I_nu(x) = (x/2)^nu / Gamma(nu+1) * sum_m (x^2/4)^m / (m! (nu+1)_m)
    q = x * x / 4.0
    term, total = 1.0, 1.0
    for m in range(1, 10_000):
        term *= q / (m * (nu + m))
        total += term
        if term < 1e-17 * total:
            break
    return nu * math.log(x / 2.0) - math.lgamma(nu + 1.0) + math.log(total)


def log_normalizer(p: int, kappa: float) -> float:
    """log C_p(k); at k = 0 the uniform density 1 / |S^{p-1}|."""
    if kappa == 0.0:
        return math.lgamma(p / 2.0) - math.log(2.0) - (p / 2.0) * math.log(math.pi)
    nu = p / 2.0 - 1.0
    return nu * math.log(kappa) - (p / 2.0) * math.log(2 * math.pi) - log_bessel_i(nu, kappa)


def _as_matrix(W) -> np.ndarray:
    return np.asarray(getattr(W, "matrix", W), dtype=float)


@dataclass(frozen=True)
class VonMisesFisher:
    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        if mu.ndim != 1 or len(mu) < 2:
            raise ValueError(f"mu must be a vector of length >= 2, got shape {mu.shape}")
        if abs(np.linalg.norm(mu) - 1.0) > 1e-12:
            raise ValueError(f"mu must be a unit vector, |mu| = {np.linalg.norm(mu)!r}")
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa}")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def p(self) -> int:
        return len(self.mu)

    @property
    def ratios(self) -> BesselRatios:
        return bessel_ratios(self.p, self.kappa)

    def _check(self, x, name="psi") -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.p:
            raise DimensionMismatch(f"{name} has trailing dimension {x.shape[-1]}, expected {self.p}")
        return x

    def log_density(self, psi):
        """Log density with respect to surface measure; accepts one vector or an (n, p) batch."""
        psi = self._check(psi)
        return log_normalizer(self.p, self.kappa) + self.kappa * (psi @ self.mu)

    def mean_resultant(self) -> np.ndarray:
        """E[psi] = A mu."""
        return self.ratios.a * self.mu

    def second_moment(self) -> np.ndarray:
        """E[psi psi^T] = (A/k) I + B mu mu^T."""
        r = self.ratios
        return r.a_over_k * np.eye(self.p) + r.b * np.outer(self.mu, self.mu)

    def quadratic_moment(self, W) -> float:
        """E[psi^T W psi] = (A/k) Tr W + B mu^T W mu."""
        W = self._check(_as_matrix(W), "W")
        r = self.ratios
        return float(r.a_over_k * np.trace(W) + r.b * (self.mu @ W @ self.mu))

    def cubic_contraction(self, W) -> np.ndarray:
        """E[(psi^T W psi) psi] = (2B/k) W mu + ((B/k) Tr W + D mu^T W mu) mu."""
        W = self._check(_as_matrix(W), "W")
        r = self.ratios
        Wmu = W @ self.mu
        return 2 * r.b_over_k * Wmu + (r.b_over_k * np.trace(W) + r.d * (self.mu @ Wmu)) * self.mu

    def sample(self, n: int, seed=None) -> np.ndarray:
        """Draw ``n`` samples as an (n, p) array; see :func:`sample_vmf`."""
        return sample_vmf(self.mu, self.kappa, n, seed)


def estimate_kappa(R: float, p: int, cap: float | None = KAPPA_CAP) -> float:
    """Approximate concentration k = R (p - R^2) / (1 - R^2), clipped at ``cap``.

    R >= 1 returns the cap (infinity when ``cap`` is None).
    """
    if R < 0 or math.isnan(R):
        raise ResultantOutOfRange(f"resultant length must lie in [0, 1), got {R}")
    upper = math.inf if cap is None else float(cap)
    if R >= 1.0:
        return upper
    return min(upper, R * (p - R * R) / (1.0 - R * R))


def mle_mean(samples) -> tuple[np.ndarray, float]:
    """Maximum-likelihood mean direction and resultant length of unit vectors.

    When the sample mean vanishes, warns with ZeroResultantWarning and returns
    the first basis vector with R = 0.
    """
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.size == 0 or X.shape[0] == 0:
        raise EmptySample("need at least one sample")
    norms = np.linalg.norm(X, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError("all samples must be unit vectors (tolerance 1e-9)")
    mean = X.mean(axis=0)
    R = float(np.linalg.norm(mean))
    if R <= 1e-15:
        warnings.warn("sample mean is zero; mean direction is arbitrary", ZeroResultantWarning, stacklevel=2)
        e1 = np.zeros(X.shape[1])
        e1[0] = 1.0
        return e1, 0.0
    return mean / R, min(R, 1.0)


class _PolarAngleSampler:
    """Inverse-CDF sampler for the angle theta = arccos(mu.psi).

    The angle has density proportional to exp(k (cos t - 1)) sin^{p-2} t on
    [0, pi], smooth for every p >= 2.  Its CDF is tabulated with 16-point
    Gauss-Legendre panels over the region carrying all but ~e^-60 of the mass,
    and each uniform variate is inverted by safeguarded Newton iteration
    (bisection fallback) to 1e-12 in theta.
    """

    PANELS = 128
    LOG_CUT = 60.0

    def __init__(self, p: int, kappa: float):
        self.p = p
        self.kappa = kappa
        if p == 2:
            mode = 0.0
        else:
            m = p - 2.0
            mode = math.acos(min(1.0, 2 * kappa / (m + math.sqrt(m * m + 4 * kappa * kappa))))
        self.log_peak = self._log_g_scalar(mode)
        level = self.log_peak - self.LOG_CUT

        def excess(t):
            return self._log_g_scalar(t) - level

        lo, hi = 0.0, math.pi
        if p > 2 and mode > 0.0:
            lo = brentq(excess, 1e-300, mode, xtol=1e-15) if excess(1e-300) < 0 else 0.0
        if excess(math.pi) < 0:
            hi = brentq(excess, mode, math.pi, xtol=1e-15)
        edges = np.linspace(lo, hi, self.PANELS + 1)
        self.left = edges[:-1]
        self.width = np.diff(edges)
        masses = self._integrate(self.left, self.left + self.width)
        self.cum = np.concatenate([[0.0], np.cumsum(masses)])
        self.masses = masses

    def _log_g_scalar(self, t: float) -> float:
        s = math.sin(t)
        val = self.kappa * (math.cos(t) - 1.0)
        if self.p > 2:
            val += -math.inf if s <= 0.0 else (self.p - 2) * math.log(s)
        return val

    def _g(self, t):
        val = self.kappa * (np.cos(t) - 1.0) - self.log_peak
        if self.p > 2:
            with np.errstate(divide="ignore"):
                val = val + (self.p - 2) * np.log(np.sin(t))
        return np.exp(val)

    def _integrate(self, a, b):
        half = (b - a) / 2
        nodes = (a + half)[:, None] + half[:, None] * _GL_NODES
        return half * (self._g(nodes) @ _GL_WEIGHTS)

    def invert(self, u: np.ndarray) -> np.ndarray:
        target = u * self.cum[-1]
        idx = np.clip(np.searchsorted(self.cum, target, side="right") - 1, 0, self.PANELS - 1)
        a = self.left[idx]
        r = target - self.cum[idx]
        lo = a.copy()
        hi = a + self.width[idx]
        frac = np.clip(r / np.where(self.masses[idx] > 0, self.masses[idx], 1.0), 0.0, 1.0)
        t = a + frac * self.width[idx]
        active = np.arange(len(u))
        for _ in range(100):
            ta = t[active]
            F = self._integrate(a[active], ta) - r[active]
            above = F > 0
            hi[active] = np.where(above, ta, hi[active])
            lo[active] = np.where(above, lo[active], ta)
            g = self._g(ta)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = ta - F / g
            ok = (g > 0) & (newton >= lo[active]) & (newton <= hi[active])
            t_new = np.where(ok, newton, (lo[active] + hi[active]) / 2)
            done = (np.abs(t_new - ta) < 1e-12) | (hi[active] - lo[active] < 1e-12)
            t[active] = t_new
            active = active[~done]
            if active.size == 0:
                break
        return t


def sample_vmf(mu, kappa: float, n: int, seed=None, chunk: int = 1 << 17) -> np.ndarray:
    """Draw ``n`` vMF samples without rejection.

    Each sample is cos(theta) mu + sin(theta) v with theta from the inverse CDF
    of its marginal and v uniform on the unit sphere orthogonal to mu.  ``seed``
    is anything accepted by ``numpy.random.default_rng``.
    """
    mu = np.asarray(mu, dtype=float)
    p = len(mu)
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if kappa == 0.0:
        x = rng.standard_normal((n, p))
        return x / np.linalg.norm(x, axis=1, keepdims=True)
    angles = _PolarAngleSampler(p, float(kappa))
    out = np.empty((n, p))
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        theta = angles.invert(rng.random(m))
        v = rng.standard_normal((m, p))
        v -= np.outer(v @ mu, mu)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        x = np.cos(theta)[:, None] * mu + np.sin(theta)[:, None] * v
        out[start : start + m] = x / np.linalg.norm(x, axis=1, keepdims=True)
    return out
