"""Juttner equilibria, the local-equilibrium projection, and the truncated
relaxation operator with coupled cutoffs (R, L, beta_sup) = (b^2, b, b).

Also provides moment-matched equilibria: a damped Newton solve for the
Juttner parameters whose weighted grid moments against (1, q, q0) hit
prescribed targets.  With the plain quadrature weight this recovers the
global equilibrium fixed by the conserved totals; the solver reuses the same
machinery with its per-step relaxation weight to make the relax update
conserve mass, momentum and energy to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import specfun
from .moments import ThermoFields, fields_of
from .phase_space import MomentumGrid, det_sum


class NoSolutionError(ValueError):
    """Moment targets not realizable by any Juttner distribution."""


class ConvergenceError(RuntimeError):
    """Newton iteration stagnated; carries the final residual."""


@dataclass(frozen=True)
class JuttnerParams:
    n: float
    beta: float
    u: np.ndarray  # spatial 3-velocity

    @property
    def u0(self) -> float:
        return math.sqrt(1.0 + float(self.u @ self.u))


@dataclass(frozen=True)
class TruncationParams:
    """Cutoff family tied to a single regularizing parameter beta_sup > 1:
    temperature clamp [1/beta_sup, beta_sup], velocity cap L = beta_sup,
    cutoff radius R = beta_sup**2, with support radius 2R."""

    beta_sup: float

    def __post_init__(self):
        if not self.beta_sup > 1.0:
            raise specfun.DomainError(
                f"beta_sup must exceed 1, got {self.beta_sup!r}")

    @property
    def beta_inf(self) -> float:
        return 1.0 / self.beta_sup

    @property
    def cap(self) -> float:
        return self.beta_sup

    @property
    def radius(self) -> float:
        return self.beta_sup**2

    def cutoff(self, grid: MomentumGrid) -> np.ndarray:
        """phi(q) = cutoff_profile(|q|/R) on the grid nodes."""
        return specfun.cutoff_profile(grid.qnorm() / self.radius)


def uq_scalar(u: np.ndarray, grid: MomentumGrid) -> np.ndarray:
    """Invariant u_mu q^mu = u0*q0 - u.q >= 1 on the mass shell."""
    u = np.asarray(u, dtype=np.float64)
    u0 = math.sqrt(1.0 + float(u @ u))
    return (u0 * grid.q0
            - u[0] * grid.qx - u[1] * grid.qy - u[2] * grid.qz)


def juttner_eval(p: JuttnerParams, grid: MomentumGrid) -> np.ndarray:
    """J(n,beta,u;q) = (n/M(beta)) exp(-beta*(u0*q0 - u.q)), evaluated in
    log space so large beta cannot underflow the normalization."""
    if p.n == 0.0:
        return np.zeros(grid.shape)
    log_norm = math.log(p.n) - specfun.log_partition_m(p.beta)
    return np.exp(log_norm - p.beta * uq_scalar(p.u, grid))


def project_equilibrium(f: np.ndarray, grid: MomentumGrid):
    """Local-equilibrium projection J_f = J(n_f, beta_f, u_f).

    Returns (J values, ThermoFields).  Vacuum cells project to zero.  The
    five conservation integrals against (q^mu, 1) with measure dq/q0 match
    those of f within quadrature tolerance (exactly in the continuum).
    """
    fields = fields_of(f, grid)
    if fields.vacuum:
        return np.zeros(grid.shape), fields
    params = JuttnerParams(fields.n, fields.beta, fields.u)
    return juttner_eval(params, grid), fields


def truncate_fields(fields: ThermoFields, params: TruncationParams):
    """Clamp beta to [beta_inf, beta_sup] and cap |u| at L, preserving the
    drift direction.  Returns (beta_t, u_t, clamp_event_count)."""
    events = 0
    beta_t = fields.beta
    if beta_t < params.beta_inf:
        beta_t, events = params.beta_inf, events + 1
    elif beta_t > params.beta_sup:
        beta_t, events = params.beta_sup, events + 1
    u = fields.u
    speed = math.sqrt(float(u @ u))
    if speed > params.cap:
        u = u * (params.cap / speed)
        events += 1
    return beta_t, u, events


def truncated_relax(f: np.ndarray, grid: MomentumGrid,
                    params: TruncationParams, phi: np.ndarray | None = None):
    """The truncated operator J~[f] = phi(q) (n_f/M~(beta~)) e^{-beta~ u~.q}.

    Returns (values, fields, clamp_events).  Requires q_max >= 2R so the
    cutoff support fits the grid (checked at configuration time).
    """
    fields = fields_of(f, grid)
    if fields.vacuum:
        return np.zeros(grid.shape), fields, 0
    beta_t, u_t, events = truncate_fields(fields, params)
    if phi is None:
        phi = params.cutoff(grid)
    m_t = specfun.truncated_partition_m(beta_t, params.radius)
    vals = phi * (fields.n / m_t) * np.exp(-beta_t * uq_scalar(u_t, grid))
    return vals, fields, events


def _psi_vectors(grid: MomentumGrid):
    """The five collision invariants (1, qx, qy, qz, q0) as broadcastables."""
    return (1.0, grid.qx, grid.qy, grid.qz, grid.q0)


def weighted_invariant_moments(values: np.ndarray, omega: np.ndarray,
                               grid: MomentumGrid) -> np.ndarray:
    """Targets sum(omega * psi_k * values) for psi = (1, q, q0)."""
    base = omega * values
    return np.array([det_sum(base * psi) for psi in _psi_vectors(grid)])


def match_moments_juttner(grid: MomentumGrid, omega: np.ndarray,
                          targets: np.ndarray, guess: JuttnerParams,
                          rtol: float = 1e-13, max_iter: int = 80,
                          max_halvings: int = 60) -> JuttnerParams:
    """Find Juttner parameters whose omega-weighted (1, q, q0) grid moments
    equal ``targets``.

    Damped Newton on (log beta, u) with the density eliminated through the
    zeroth target; finite-difference Jacobian; step halving until the
    residual decreases.  Deterministic for fixed inputs.
    """
    t0, te = targets[0], targets[4]
    if not (t0 > 0.0 and te > t0 and
            math.hypot(*targets[1:4]) < te):
        raise NoSolutionError(f"moment targets not realizable: {targets!r}")
    scale = te

    psis = _psi_vectors(grid)

    def residual(theta):
        beta = math.exp(theta[0])
        u = theta[1:4]
        # Unit-density Juttner shape, normalized so n = t0 / mom[0].
        shape = np.exp(-specfun.log_partition_m(beta)
                       - beta * uq_scalar(u, grid))
        base = omega * shape
        mom = np.array([det_sum(base * psi) for psi in psis])
        if not mom[0] > 0.0:
            raise ConvergenceError(
                f"degenerate trial moments at beta={beta!r}, u={u!r}")
        n = t0 / mom[0]
        return (n * mom[1:] - targets[1:]) / scale, n

    theta = np.array([math.log(guess.beta), guess.u[0], guess.u[1],
                      guess.u[2]])
    r, n = residual(theta)
    norm = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if norm <= rtol:
            return JuttnerParams(n, math.exp(theta[0]), theta[1:4].copy())
        jac = np.empty((4, 4))
        for j in range(4):
            h = 1e-7 * max(1.0, abs(theta[j]))
            probe = theta.copy()
            probe[j] += h
            rj, _ = residual(probe)
            jac[:, j] = (rj - r) / h
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian, residual {norm:.3e}") from exc
        lam = 1.0
        for _ in range(max_halvings):
            cand = theta + lam * step
            try:
                rc, nc = residual(cand)
            except (OverflowError, FloatingPointError):
                lam *= 0.5
                continue
            cnorm = float(np.max(np.abs(rc)))
            if cnorm < norm or cnorm <= rtol:
                theta, r, n, norm = cand, rc, nc, cnorm
                break
            lam *= 0.5
        else:
            raise ConvergenceError(
                f"Newton stagnated with residual {norm:.3e}")
    if norm <= 10.0 * rtol:
        return JuttnerParams(n, math.exp(theta[0]), theta[1:4].copy())
    raise ConvergenceError(f"Newton did not converge; residual {norm:.3e}")


def equilibrium_from_invariants(m0: float, m_vec: np.ndarray, m_e: float,
                                grid: MomentumGrid,
                                guess: JuttnerParams | None = None
                                ) -> JuttnerParams:
    """Juttner parameters reproducing the conserved totals
    (int f dq, int q f dq, int q0 f dq) under grid quadrature.

    These are the quantities a homogeneous relaxation run holds fixed, so
    the result predicts the long-time equilibrium of such a run.
    """
    m_vec = np.asarray(m_vec, dtype=np.float64)
    if not (m0 > 0.0 and m_e > m0 and float(np.linalg.norm(m_vec)) < m_e):
        raise NoSolutionError(
            f"moments not realizable: m0={m0!r}, m_vec={m_vec!r}, m_e={m_e!r}")
    if guess is None:
        v = m_vec / m_e
        vsq = float(v @ v)
        u = v / math.sqrt(1.0 - vsq)
        # Rest-frame energy per particle ~ Psi(beta), inverted by bracketing.
        s = math.sqrt(m_e * m_e - float(m_vec @ m_vec)) / m0
        lo, hi = 1e-3, 700.0
        if s >= specfun.psi(lo):
            beta = lo
        elif s <= specfun.psi(hi):
            beta = hi
        else:
            beta = optimize.brentq(lambda b: specfun.psi(b) - s, lo, hi,
                                   xtol=1e-10, rtol=1e-12)
        guess = JuttnerParams(m0, beta, u)
    targets = np.array([m0, m_vec[0], m_vec[1], m_vec[2], m_e])
    return match_moments_juttner(grid, grid.weights, targets, guess)
