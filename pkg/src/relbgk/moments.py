"""Matter moments N^mu, T^munu, S^mu and derived thermodynamic fields.

Per spatial cell: the four-flux and stress tensor are quadratures of f over
the invariant measure dq/q0; from them the proper density n = sqrt(N.N),
velocity u = N/n, inverse temperature beta (by inverting K1/K2 against the
moment ratio), energy e, pressure p and entropy density sigma are derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .phase_space import MomentumGrid, det_sum

# Cells whose zeroth moment falls below this are treated as vacuum:
# no (u, beta) is defined there and relaxation leaves them identically zero.
VACUUM_THRESHOLD = 1e-14


class InconsistencyError(ValueError):
    """Quadrature produced moments violating an exact-level constraint."""


class NumericalError(ArithmeticError):
    """NaN or infinity encountered in a moment computation."""


@dataclass(frozen=True)
class MatterMoments:
    """Four-flux N^mu, stress tensor T^munu, entropy flux S^mu."""

    n_mu: np.ndarray      # shape (4,)
    t_munu: np.ndarray    # shape (4, 4), symmetric
    s_mu: np.ndarray      # shape (4,)


@dataclass(frozen=True)
class ThermoFields:
    """Derived local fields; (u, beta, e, p, sigma) undefined in vacuum."""

    n: float
    u: np.ndarray         # spatial 3-velocity; u0 = sqrt(1+|u|^2) implied
    beta: float
    e: float
    p: float
    sigma: float
    vacuum: bool
    clamped: bool = False  # ratio argument hit the consistency clamp

    @property
    def u0(self) -> float:
        return math.sqrt(1.0 + float(self.u @ self.u))


def entropy_integrand(f: np.ndarray) -> np.ndarray:
    """f*log(f) with the continuous extension 0*log0 = 0.

    Values at or below underflow contribute zero.
    """
    out = np.zeros_like(f)
    mask = f > np.finfo(np.float64).tiny
    out[mask] = f[mask] * np.log(f[mask])
    return out


def matter_moments(f: np.ndarray, grid: MomentumGrid) -> MatterMoments:
    """N^mu = int q^mu f dq/q0, T^munu = int q^mu q^nu f dq/q0,
    S^mu = -int q^mu f log f dq/q0."""
    w = grid.weights / grid.q0
    comps = (grid.q0, grid.qx, grid.qy, grid.qz)

    base = w * f
    n_mu = np.array([det_sum(base * c) for c in comps])
    t = np.empty((4, 4))
    for i in range(4):
        for j in range(i, 4):
            t[i, j] = t[j, i] = det_sum(base * comps[i] * comps[j])
    ent = w * entropy_integrand(f)
    s_mu = np.array([-det_sum(ent * c) for c in comps])

    if not (np.all(np.isfinite(n_mu)) and np.all(np.isfinite(t))
            and np.all(np.isfinite(s_mu))):
        raise NumericalError("non-finite matter moments")
    return MatterMoments(n_mu, t, s_mu)


def thermo_fields(m: MatterMoments, f: np.ndarray, grid: MomentumGrid,
                  vacuum_threshold: float = VACUUM_THRESHOLD) -> ThermoFields:
    """Derive (n, u, beta, e, p, sigma) from moments; flag vacuum cells.

    If quadrature error pushes the Bessel-ratio argument to >= 1 the argument
    is clamped to 1 - 1e-12 and the record is marked, rather than aborting.
    """
    n0 = m.n_mu[0]
    if n0 <= vacuum_threshold:
        return ThermoFields(0.0, np.zeros(3), math.nan, math.nan, math.nan,
                            math.nan, vacuum=True)

    nsq = n0 * n0 - float(m.n_mu[1:] @ m.n_mu[1:])
    if nsq <= 0.0:
        raise InconsistencyError(
            f"four-flux not timelike: N={m.n_mu!r}")
    n = math.sqrt(nsq)
    u = m.n_mu[1:] / n
    u0 = n0 / n

    inv_density = det_sum(grid.weights * f / grid.q0)
    ratio = inv_density / n
    clamped = False
    if ratio >= 1.0:
        ratio = 1.0 - 1e-12
        clamped = True
    if not math.isfinite(ratio) or ratio < 0.0:
        raise NumericalError(f"invalid ratio argument {ratio!r}")
    beta = specfun.invert_ratio(ratio)

    # Contractions written out with u_mu = (u0, -u): e = u_mu u_nu T^munu,
    # p = (1/3)(u_mu u_nu - g_munu) T^munu.
    t = m.t_munu
    e = (u0 * u0 * t[0, 0]
         - 2.0 * u0 * float(u @ t[0, 1:])
         + float(u @ t[1:, 1:] @ u))
    trace = t[0, 0] - t[1, 1] - t[2, 2] - t[3, 3]
    p = (e - trace) / 3.0
    sigma = m.s_mu[0] * u0 - float(m.s_mu[1:] @ u)
    return ThermoFields(n, u, beta, e, p, sigma, vacuum=False, clamped=clamped)


def fields_of(f: np.ndarray, grid: MomentumGrid) -> ThermoFields:
    """Convenience: thermo_fields(matter_moments(f), f)."""
    return thermo_fields(matter_moments(f, grid), f, grid)


def juttner_identity_defects(rule: str, q_max: float, nodes_per_axis: int,
                             n: float, beta: float, u) -> dict:
    """Relative defects of the five closed-form Juttner moment identities
    (int J dq = n u0, int J dq/q0 = n K1/K2, int q J dq/q0 = n u,
    e = n Psi(beta), p = n/beta) under tensor quadrature.

    Evaluated one x-slab at a time so very large node counts stay within a
    constant memory footprint; uses the same axis rules as build_grid.
    """
    from .phase_space import _axis_rule  # local import: avoid cycle

    u = np.asarray(u, dtype=np.float64)
    u0 = math.sqrt(1.0 + float(u @ u))
    x, w = _axis_rule(rule, q_max, nodes_per_axis)
    yz_sq = x[:, None] ** 2 + x[None, :] ** 2
    u_yz = u[1] * x[:, None] + u[2] * x[None, :]
    wyz = w[:, None] * w[None, :]
    log_norm = math.log(n) - specfun.log_partition_m(beta)

    m0 = minv = e = 0.0
    nvec = np.zeros(3)
    for i in range(nodes_per_axis):
        q0 = np.sqrt(1.0 + x[i] * x[i] + yz_sq)
        uq = u0 * q0 - u[0] * x[i] - u_yz
        j = np.exp(log_norm - beta * uq)
        base = wyz * j
        inv = base / q0
        s_inv = float(np.sum(inv))
        m0 += w[i] * float(np.sum(base))
        minv += w[i] * s_inv
        nvec[0] += w[i] * s_inv * x[i]
        nvec[1] += w[i] * float(np.sum(inv * x[:, None]))
        nvec[2] += w[i] * float(np.sum(inv * x[None, :]))
        e += w[i] * float(np.sum(inv * uq * uq))
    # Trace identity on the mass shell: T^00 - sum_i T^ii = int J dq/q0.
    p = (e - minv) / 3.0

    ratio = specfun.ratio_k1k2(beta)
    return {
        "rel1": abs(m0 - n * u0) / (n * u0),
        "ratio": abs(minv - n * ratio) / (n * ratio),
        "flux": float(np.linalg.norm(nvec - n * u))
                / (n * max(1.0, float(np.linalg.norm(u)))),
        "energy": abs(e - n * specfun.psi(beta)) / (n * specfun.psi(beta)),
        "pressure": abs(p - n / beta) * beta / n,
    }


def lorentz_boost_juttner(n: float, beta: float, u: np.ndarray,
                          v: np.ndarray):
    """Boost Juttner parameters by velocity v (|v| < 1): the scalars n and
    beta are invariant, the four-velocity transforms linearly."""
    v = np.asarray(v, dtype=np.float64)
    vsq = float(v @ v)
    if vsq >= 1.0:
        raise specfun.DomainError(f"boost speed |v|={math.sqrt(vsq)} >= 1")
    u = np.asarray(u, dtype=np.float64)
    if vsq == 0.0:
        return n, beta, u.copy()
    gamma = 1.0 / math.sqrt(1.0 - vsq)
    u0 = math.sqrt(1.0 + float(u @ u))
    vu = float(v @ u)
    u_new = u + ((gamma - 1.0) * vu / vsq + gamma * u0) * v
    return n, beta, u_new
