"""Closure coefficients and angular equilibria for the hydrodynamic limit.

The macroscopic model is closed by two scalar transport coefficients plus a
pressure scale, all functions of the single concentration parameter

    kappa = k_theta / alpha^2        (alignment rate over angular diffusion).

Formula map
-----------
Equilibrium heading distribution (von Mises around the local mean heading
``theta_bar``)::

    N(theta) = exp(kappa * cos(theta - theta_bar)) / (2*pi*I0(kappa))

Equilibrium frequency distribution (Gaussian around the local mean
frequency ``omega_bar``)::

    M(omega) = Normal(omega_bar, beta^2 / k_omega)

Mass-flux coefficient (mean heading projection)::

    c1(kappa) = I1(kappa) / I0(kappa)

Angular weight used in the momentum closure (odd, vanishing at 0 and pi)::

    g(G) = (1/kappa) * ( G - pi * F(G) / F(pi) ),
    F(t) = integral_0^t exp(-kappa*cos(phi)) dphi

Momentum-flux coefficient::

    K1 = integral sin(t)          * N(t) * g(t) dt   over (-pi, pi]
    K2 = integral cos(t) * sin(t) * N(t) * g(t) dt
    c2 = K2 / K1

The overall scale of ``g`` is immaterial: any positive rescaling multiplies
K1 and K2 alike and cancels in c2.  The 1/kappa prefactor is kept because it
gives ``g -> sin`` in the small-kappa limit, which is a convenient check.

I0 and I1 are evaluated by a power series for small arguments and by the
asymptotic expansion (optimally truncated) for large ones; both branches are
accurate to better than 1e-12 in relative terms.  K1 and K2 use adaptive
Gauss-Kronrod quadrature and always report the integrator's error estimate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from ._util import TWO_PI, wrap_angle

logger = logging.getLogger(__name__)

__all__ = [
    "CoefficientError",
    "bessel_i",
    "compute_c1",
    "gci_g",
    "compute_K1_K2",
    "ClosureCoefficients",
    "EquilibriumPair",
    "sample_equilibrium",
]

#: switch point between the Bessel power series and the asymptotic expansion
_BESSEL_CUTOFF = 15.0
_ASYMPTOTIC_MAX_TERMS = 40

#: K1/K2 integrals whose reported quadrature error exceeds this are rejected
QUAD_ERROR_LIMIT = 1e-8


class CoefficientError(ValueError):
    """A coefficient could not be computed to the required accuracy."""


# ----------------------------------------------------------------------------
# modified Bessel functions
# ----------------------------------------------------------------------------

def _bessel_series(order: int, x: float) -> float:
    # sum_m (x/2)^(2m+order) / (m! (m+order)!) -- all terms positive, no
    # cancellation; converges fast for x <= _BESSEL_CUTOFF
    half = 0.5 * x
    q = half * half
    term = 1.0 if order == 0 else half
    total = term
    m = 1
    while True:
        term *= q / (m * (m + order))
        total += term
        if term <= 1e-17 * total:
            return total
        m += 1


def _bessel_asymptotic_scaled(order: int, x: float) -> float:
    # exp(-x) * I_order(x) ~ (2*pi*x)^(-1/2) * sum_k a_k(order) / x^k with
    # optimal truncation (stop when terms stop shrinking)
    mu = 4 * order * order
    term = 1.0
    total = 1.0
    prev = math.inf
    for k in range(1, _ASYMPTOTIC_MAX_TERMS):
        term *= -(mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        if abs(term) >= prev:
            break
        total += term
        prev = abs(term)
    return total / math.sqrt(TWO_PI * x)


def bessel_i(order: int, x: float, scaled: bool = False) -> float:
    """Modified Bessel function of the first kind, I_0(x) or I_1(x).

    With ``scaled=True`` returns ``exp(-x) * I_order(x)``, which stays finite
    for arbitrarily large x (the unscaled value overflows past x ~ 713).
    """
    if order not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {order!r}")
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise ValueError(f"bessel_i requires finite x >= 0, got {x!r}")
    if x <= _BESSEL_CUTOFF:
        val = _bessel_series(order, x)
        return val * math.exp(-x) if scaled else val
    val = _bessel_asymptotic_scaled(order, x)
    return val if scaled else val * math.exp(x)


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not math.isfinite(kappa) or kappa <= 0.0:
        raise ValueError(f"kappa must be finite and > 0, got {kappa!r}")
    return kappa


def compute_c1(kappa: float) -> float:
    """Mass-flux coefficient c1(kappa) = I1(kappa)/I0(kappa), in (0, 1)."""
    kappa = _check_kappa(kappa)
    # scaled ratio avoids overflow for large concentration
    c1 = bessel_i(1, kappa, scaled=True) / bessel_i(0, kappa, scaled=True)
    if not 0.0 < c1 < 1.0:
        raise CoefficientError(f"c1({kappa}) = {c1} outside (0, 1)")
    return c1


# ----------------------------------------------------------------------------
# angular weight g and the K1/K2 integrals
# ----------------------------------------------------------------------------

@lru_cache(maxsize=128)
def _half_range_integral(kappa: float) -> float:
    """F(pi) = integral_0^pi exp(-kappa*cos(phi)) dphi."""
    val, err = integrate.quad(
        lambda p: math.exp(-kappa * math.cos(p)), 0.0, math.pi,
        epsabs=0.0, epsrel=1e-13, limit=200,
    )
    if not math.isfinite(val) or val <= 0.0:
        raise CoefficientError(f"F(pi) evaluation failed for kappa={kappa}")
    return val


def gci_g(gamma: float, kappa: float) -> float:
    """Angular closure weight g(gamma) for gamma in [-pi, pi].

    Odd in gamma with zeros at 0 and +/-pi, so it extends 2*pi-periodically
    and continuously.  See the module docstring for the formula.
    """
    kappa = _check_kappa(kappa)
    gamma = float(gamma)
    if not -math.pi <= gamma <= math.pi:
        raise ValueError(f"gamma must lie in [-pi, pi], got {gamma!r}")
    denom = _half_range_integral(kappa)
    num, _ = integrate.quad(
        lambda p: math.exp(-kappa * math.cos(p)), 0.0, gamma,
        epsabs=0.0, epsrel=1e-13, limit=200,
    )
    return (gamma - math.pi * num / denom) / kappa


def compute_K1_K2(kappa: float) -> tuple[float, float, float]:
    """Momentum-closure integrals (K1, K2) and the quadrature error estimate.

    Returns ``(K1, K2, quad_error)`` where ``quad_error`` is the larger of
    the two absolute error estimates reported by the adaptive integrator.
    Raises CoefficientError if the estimate exceeds ``QUAD_ERROR_LIMIT`` or
    if K1 is too small to divide by.
    """
    kappa = _check_kappa(kappa)
    log_norm = math.log(TWO_PI) + math.log(bessel_i(0, kappa, scaled=True))

    def density(t: float) -> float:
        # von Mises pdf written with the scaled I0 so large kappa is safe
        return math.exp(kappa * (math.cos(t) - 1.0) - log_norm)

    def f1(t: float) -> float:
        return math.sin(t) * density(t) * gci_g(t, kappa)

    def f2(t: float) -> float:
        return math.cos(t) * math.sin(t) * density(t) * gci_g(t, kappa)

    # integrands are even in t: integrate the half range and double
    K1, e1 = integrate.quad(f1, 0.0, math.pi, epsabs=1e-12, epsrel=1e-11,
                            limit=200)
    K2, e2 = integrate.quad(f2, 0.0, math.pi, epsabs=1e-12, epsrel=1e-11,
                            limit=200)
    K1, K2 = 2.0 * K1, 2.0 * K2
    quad_error = max(2.0 * e1, 2.0 * e2)
    if quad_error > QUAD_ERROR_LIMIT:
        raise CoefficientError(
            f"K1/K2 quadrature error {quad_error:.3e} exceeds "
            f"{QUAD_ERROR_LIMIT:.1e} at kappa={kappa}")
    if abs(K1) < 1e-12:
        raise CoefficientError(f"K1({kappa}) = {K1:.3e} too small for c2")
    return K1, K2, quad_error


# ----------------------------------------------------------------------------
# public result types
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosureCoefficients:
    """The full coefficient set for one value of kappa."""

    kappa: float
    c1: float
    c2: float
    K1: float
    K2: float
    quad_error: float

    def __post_init__(self) -> None:
        _check_kappa(self.kappa)
        for name in ("c1", "c2", "K1", "K2", "quad_error"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 < self.c1 < 1.0:
            raise ValueError(f"c1 = {self.c1} outside (0, 1)")
        if self.quad_error < 0.0:
            raise ValueError("quad_error must be >= 0")

    @classmethod
    def from_kappa(cls, kappa: float) -> "ClosureCoefficients":
        kappa = _check_kappa(kappa)
        c1 = compute_c1(kappa)
        K1, K2, quad_error = compute_K1_K2(kappa)
        coeffs = cls(kappa=kappa, c1=c1, c2=K2 / K1, K1=K1, K2=K2,
                     quad_error=quad_error)
        logger.debug("closure coefficients %s", coeffs)
        return coeffs


@dataclass(frozen=True)
class EquilibriumPair:
    """Local equilibrium: von Mises heading x Gaussian frequency.

    ``omega_variance`` is beta^2 / k_omega, the stationary variance of the
    frequency relaxation; ``kappa`` concentrates the heading around
    ``theta_bar``.
    """

    theta_bar: float
    omega_bar: float
    kappa: float
    omega_variance: float

    def __post_init__(self) -> None:
        _check_kappa(self.kappa)
        if not -math.pi < self.theta_bar <= math.pi:
            raise ValueError(
                f"theta_bar must lie in (-pi, pi], got {self.theta_bar!r}")
        if not (math.isfinite(self.omega_variance)
                and self.omega_variance > 0.0):
            raise ValueError("omega_variance must be finite and > 0")
        if not math.isfinite(self.omega_bar):
            raise ValueError("omega_bar must be finite")

    def heading_pdf(self, theta):
        """von Mises density, vectorized over theta."""
        log_norm = (math.log(TWO_PI)
                    + math.log(bessel_i(0, self.kappa, scaled=True)))
        return np.exp(self.kappa * (np.cos(np.asarray(theta) - self.theta_bar)
                                    - 1.0) - log_norm)

    def omega_pdf(self, omega):
        """Gaussian density, vectorized over omega."""
        var = self.omega_variance
        z = (np.asarray(omega) - self.omega_bar)
        return np.exp(-0.5 * z * z / var) / math.sqrt(TWO_PI * var)


def sample_equilibrium(eq: EquilibriumPair, n: int,
                       rng: np.random.Generator):
    """Draw ``n`` i.i.d. (theta, omega) pairs from the equilibrium.

    Headings use the wrapped-Cauchy envelope rejection sampler (Best-Fisher
    construction); frequencies are plain Gaussians.  Returns two arrays of
    shape (n,); headings lie in (-pi, pi].
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    theta = _sample_von_mises(eq.theta_bar, eq.kappa, n, rng)
    omega = rng.normal(eq.omega_bar, math.sqrt(eq.omega_variance), size=n)
    return theta, omega


def _sample_von_mises(mu: float, kappa: float, n: int,
                      rng: np.random.Generator) -> np.ndarray:
    if n == 0:
        return np.empty(0)
    if kappa < 1e-6:
        # indistinguishable from uniform at this concentration
        return rng.uniform(-np.pi, np.pi, size=n)
    tau = 1.0 + math.sqrt(1.0 + 4.0 * kappa * kappa)
    rho = (tau - math.sqrt(2.0 * tau)) / (2.0 * kappa)
    r = (1.0 + rho * rho) / (2.0 * rho)

    out = np.empty(n)
    filled = 0
    while filled < n:
        m = n - filled
        u1 = rng.random(m)
        u2 = rng.random(m)
        u3 = rng.random(m)
        z = np.cos(np.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = kappa * (r - f)
        accept = (c * (2.0 - c) - u2 > 0.0)
        # second-chance acceptance for the tail of the envelope
        with np.errstate(divide="ignore", invalid="ignore"):
            accept |= (np.log(c / u2) + 1.0 - c >= 0.0)
        k = int(np.count_nonzero(accept))
        if k == 0:
            continue
        sign = np.where(u3[accept] < 0.5, -1.0, 1.0)
        out[filled:filled + k] = sign * np.arccos(np.clip(f[accept], -1, 1))
        filled += k
    return wrap_angle(out + mu)
