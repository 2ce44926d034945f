"""Scalar special functions for the relativistic Juttner equilibrium.

Modified Bessel functions of the second kind K_1, K_2, the normalization
integral M(beta) = 4*pi*K_2(beta)/beta, the strictly increasing temperature
ratio r(beta) = K_1(beta)/K_2(beta) together with its inverse, closed-form
exponential tail residuals, and the entropy-dissipation budget constant used
by the truncation study.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special


class DomainError(ValueError):
    """Argument outside the validated domain of a special function."""


_BETA_MIN = 1e-3
_BETA_MAX = 700.0


def _check_order(order: int) -> None:
    if order not in (1, 2):
        raise DomainError(f"Bessel order must be 1 or 2, got {order!r}")


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (_BETA_MIN <= beta <= _BETA_MAX):
        raise DomainError(
            f"beta={beta!r} outside validated range [{_BETA_MIN}, {_BETA_MAX}]"
        )
    return beta


def bessel_k(order: int, beta: float) -> float:
    """K_order(beta) = int_0^inf cosh(order*r) exp(-beta*cosh r) dr."""
    _check_order(order)
    beta = _check_beta(beta)
    return float(special.kv(order, beta))


def bessel_k_scaled(order: int, beta: float) -> float:
    """exp(beta) * K_order(beta); stable for large beta."""
    _check_order(order)
    beta = _check_beta(beta)
    return float(special.kve(order, beta))


def ratio_k1k2(beta: float) -> float:
    """r(beta) = K_1(beta)/K_2(beta), strictly increasing from 0 to 1."""
    beta = float(beta)
    if beta <= 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    # Scaled form: the exponential prefactors cancel, valid for any beta > 0.
    return float(special.kve(1, beta) / special.kve(2, beta))


def ratio_k1k2_deriv(beta: float) -> float:
    """Derivative of r(beta) = K_1/K_2.

    From K_1' = -K_0 - K_1/beta, K_2' = -K_1 - 2*K_2/beta and the recurrence
    K_0 = K_2 - 2*K_1/beta one gets r' = r**2 + 3*r/beta - 1, which is
    positive for all beta > 0.
    """
    beta = float(beta)
    if beta <= 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    r = ratio_k1k2(beta)
    return r * r + 3.0 * r / beta - 1.0


def invert_ratio(target: float, rtol: float = 1e-13) -> float:
    """Inverse of ratio_k1k2 on [0, 1).

    Bracketing plus safeguarded Newton using the closed-form derivative;
    falls back to bisection whenever a Newton step leaves the bracket.
    """
    target = float(target)
    if not (0.0 <= target < 1.0):
        raise DomainError(f"ratio target must lie in [0, 1), got {target!r}")
    if target == 0.0:
        return 0.0

    # Initial guess: r ~ beta/2 for small beta, r ~ 1 - 3/(2 beta) for large.
    beta = 2.0 * target if target < 0.5 else 1.5 / (1.0 - target)
    lo, hi = 0.0, beta
    while ratio_k1k2(hi) < target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:  # pragma: no cover - ratio < 1 keeps this unreachable
            raise DomainError(f"failed to bracket ratio target {target!r}")

    beta = min(max(beta, lo + 0.25 * (hi - lo)), hi)
    for _ in range(200):
        r = ratio_k1k2(beta)
        if r > target:
            hi = beta
        else:
            lo = beta
        step = (target - r) / ratio_k1k2_deriv(beta)
        candidate = beta + step
        if not (lo < candidate < hi):
            candidate = 0.5 * (lo + hi)
        if abs(candidate - beta) <= rtol * beta:
            return candidate
        beta = candidate
    return beta


def partition_m(beta: float) -> float:
    """M(beta) = int exp(-beta*sqrt(1+|p|^2)) dp = 4*pi*K_2(beta)/beta."""
    beta = _check_beta(beta)
    return 4.0 * math.pi * float(special.kv(2, beta)) / beta


def log_partition_m(beta: float) -> float:
    """log M(beta), computed via the scaled Bessel function so it stays
    finite far beyond the underflow range of partition_m."""
    beta = float(beta)
    if beta <= 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    return math.log(4.0 * math.pi / beta) + math.log(float(special.kve(2, beta))) - beta


def psi(beta: float) -> float:
    """Energy-per-particle Psi(beta) = 3/beta + K_1(beta)/K_2(beta)."""
    beta = float(beta)
    if beta <= 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    return 3.0 / beta + ratio_k1k2(beta)


def cutoff_profile(s):
    """Quintic smoothstep cutoff: 1 for s <= 1, 0 for s >= 2, C^2 monotone.

    Accepts scalars or arrays. The momentum-space cutoff used by the
    truncated relaxation operator is phi(q) = cutoff_profile(|q|/R).
    """
    s = np.asarray(s, dtype=np.float64)
    t = np.clip(s - 1.0, 0.0, 1.0)
    out = 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    if out.ndim == 0:
        return float(out)
    return out


def truncated_partition_m(beta: float, radius: float) -> float:
    """M~(beta) = int phi(q) exp(-beta*sqrt(1+|q|^2)) dq for phi as above.

    Radial adaptive quadrature; the integrand vanishes beyond 2*radius.
    """
    beta = float(beta)
    radius = float(radius)
    if beta <= 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if radius <= 0.0:
        raise DomainError(f"cutoff radius must be positive, got {radius!r}")

    def integrand(s: float) -> float:
        return (
            s * s
            * cutoff_profile(s / radius)
            * math.exp(-beta * math.sqrt(1.0 + s * s))
        )

    val, _ = integrate.quad(
        integrand, 0.0, 2.0 * radius, points=[radius], limit=200,
        epsabs=0.0, epsrel=1e-12,
    )
    return 4.0 * math.pi * val


def residual_lambda(radius: float, beta: float) -> float:
    """Closed-form tail mass Lambda(R;beta) = int_{|q|>=R} e^{-beta|q|} dq.

    Equals (4*pi/beta^3) e^{-beta R} ((beta R)^2 + 2 beta R + 2); an upper
    bound for the Juttner tail beyond radius R since sqrt(1+|q|^2) >= |q|.
    """
    radius = float(radius)
    beta = float(beta)
    if radius < 0.0 or beta <= 0.0:
        raise DomainError(f"need radius >= 0 and beta > 0, got {radius!r}, {beta!r}")
    x = beta * radius
    return 4.0 * math.pi / beta**3 * math.exp(-x) * (x * x + 2.0 * x + 2.0)


def residual_phi(radius: float, cap: float, beta: float) -> float:
    """Closed-form residual Phi(R;L,beta) for drifting-equilibrium tails.

    Equals 108*pi*(L/beta)^3 * e^{-x} * (x^2 + 2x + 2) with x = beta*R/(3L),
    an upper bound for int_{|q|>=R} e^{-beta u_mu q^mu} dq uniformly over
    capped drifts |u| <= L, using u_mu q^mu >= |q|/(3L) for L >= 1.
    """
    radius = float(radius)
    cap = float(cap)
    beta = float(beta)
    if cap < 1.0:
        raise DomainError(f"drift cap must satisfy L >= 1, got {cap!r}")
    if radius < 0.0 or beta <= 0.0:
        raise DomainError(f"need radius >= 0 and beta > 0, got {radius!r}, {beta!r}")
    x = beta * radius / (3.0 * cap)
    return 108.0 * math.pi * (cap / beta) ** 3 * math.exp(-x) * (x * x + 2.0 * x + 2.0)


def entropy_bound_cb(beta_sup: float) -> float:
    """Entropy-dissipation budget C_b(beta_sup) for the truncated operator.

    With R = beta_sup**2 and L = beta_sup, assembles
        4/beta_sup + 2*Lambda(2R;beta_sup)/M(beta_sup)
                   + 2*Phi(2R;L,beta_sup)/M(beta_sup):
    a kinetic term plus equilibrium- and drifting-tail terms supported where
    the cutoff differs from one.  Decreasing in beta_sup, with the kinetic
    term 4/beta_sup dominant as beta_sup grows.
    """
    beta_sup = float(beta_sup)
    if beta_sup <= 1.0:
        raise DomainError(f"beta_sup must exceed 1, got {beta_sup!r}")
    radius = beta_sup * beta_sup
    m = partition_m(beta_sup)
    return (
        4.0 / beta_sup
        + 2.0 * residual_lambda(2.0 * radius, beta_sup) / m
        + 2.0 * residual_phi(2.0 * radius, beta_sup, beta_sup) / m
    )
