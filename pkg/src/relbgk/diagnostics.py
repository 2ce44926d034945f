"""Conservation/entropy accounting, randomized inequality certification,
and the truncation-parameter convergence study.

The lemma suite stress-tests every quantitative inequality the artifact
relies on -- moment stability, density lower bounds, truncated-partition
residuals, exponential tail bounds, entropy optimality, and the pointwise
convexity facts -- against randomized rough data, with additive slack tied
to the grid's measured calibration defect.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import relaxation as rx
from . import specfun
from .moments import entropy_integrand, fields_of, matter_moments
from .phase_space import Distribution, MomentumGrid, det_sum

CSV_COLUMNS = ("step", "t", "mass", "mom_x", "mom_y", "mom_z", "energy",
               "entropy", "mass_defect", "energy_defect", "min_f",
               "entropy_delta", "clamp_events")


@dataclass(frozen=True)
class DiagnosticsRecord:
    step: int
    t: float
    mass: float
    momentum: np.ndarray       # shape (3,)
    energy: float
    entropy: float
    mass_defect: float
    energy_defect: float
    min_f: float
    entropy_delta: float
    clamp_events: int

    def csv_row(self) -> str:
        vals = (self.step, self.t, self.mass, self.momentum[0],
                self.momentum[1], self.momentum[2], self.energy, self.entropy,
                self.mass_defect, self.energy_defect, self.min_f,
                self.entropy_delta, self.clamp_events)
        out = []
        for v in vals:
            if isinstance(v, (int, np.integer)):
                out.append(str(int(v)))
            else:
                out.append(repr(float(v)))
        return ",".join(out)


def totals(dist: Distribution):
    """(mass, momentum, energy, entropy) = integrals of (1, q, q0, f log f)
    over dq dx."""
    g = dist.grid
    dx = dist.space.dx
    w = g.weights
    mass = mom = energy = entropy = 0.0
    momentum = np.zeros(3)
    for c in range(dist.space.cells):
        f = dist.values[c]
        base = w * f
        mass += det_sum(base)
        momentum += np.array([det_sum(base * g.qx), det_sum(base * g.qy),
                              det_sum(base * g.qz)])
        energy += det_sum(base * g.q0)
        entropy += det_sum(w * entropy_integrand(f))
    return mass * dx, momentum * dx, energy * dx, entropy * dx


def record(state, baseline=None, previous=None) -> DiagnosticsRecord:
    """Build a DiagnosticsRecord from a SimulationState; defects are drifts
    relative to the baseline (t = 0) record when one is given."""
    mass, momentum, energy, entropy = totals(state.f)
    if baseline is None:
        mass_defect = energy_defect = 0.0
    else:
        mass_defect = (mass - baseline.mass) / baseline.mass
        energy_defect = (energy - baseline.energy) / baseline.energy
    delta = 0.0 if previous is None else entropy - previous.entropy
    return DiagnosticsRecord(
        step=state.step_index, t=state.t, mass=mass, momentum=momentum,
        energy=energy, entropy=entropy, mass_defect=mass_defect,
        energy_defect=energy_defect, min_f=state.f.min_value(),
        entropy_delta=delta, clamp_events=state.step_clamp_events)


def write_csv(path, records) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in records:
            fh.write(r.csv_row() + "\n")


def h_theorem_verdict(records, slack: float):
    """(passed, first_violation_index): entropy[k+1] <= entropy[k] + slack."""
    for k in range(1, len(records)):
        if records[k].entropy > records[k - 1].entropy + slack:
            return False, k
    return True, None


def moment_growth_margins(records):
    """Margins of the a priori growth bounds e^t * initial totals minus the
    measured totals (mass and energy); nonnegative along admissible runs."""
    base = records[0]
    out = []
    for r in records:
        grow = math.exp(r.t - base.t)
        out.append((grow * base.mass - r.mass, grow * base.energy - r.energy))
    return out


@dataclass
class LemmaReport:
    lemma: str
    trials: int
    worst_margin: float
    failures: int
    seed: int

    def as_dict(self) -> dict:
        return {"lemma": self.lemma, "trials": self.trials,
                "worst_margin": self.worst_margin, "failures": self.failures,
                "seed": self.seed}


def _random_trial_distribution(rng: np.random.Generator, grid: MomentumGrid,
                               radius: float) -> np.ndarray:
    """Random nonnegative mixture of Juttner bumps and indicator blobs,
    masked to the support ball |q| <= 2R."""
    f = np.zeros(grid.shape)
    for _ in range(rng.integers(1, 5)):
        n = rng.uniform(0.1, 5.0)
        beta = rng.uniform(0.8, 10.0)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        u = rng.uniform(0.0, 1.5) * direction
        f += rx.juttner_eval(rx.JuttnerParams(n, beta, u), grid)
    if rng.random() < 0.5:
        center = rng.uniform(-1.0, 1.0, size=3)
        width = rng.uniform(0.3, 2.0)
        blob = ((np.abs(grid.qx - center[0]) < width)
                & (np.abs(grid.qy - center[1]) < width)
                & (np.abs(grid.qz - center[2]) < width))
        f = f + rng.uniform(0.05, 1.0) * blob
    mask = grid.qnorm() <= 2.0 * radius
    return f * mask


def _l1(values: np.ndarray, grid: MomentumGrid) -> float:
    return det_sum(grid.weights * np.abs(values))


def _sup_inverse_ratio_slope(beta_inf: float, beta_sup: float) -> float:
    """C2 = sup over [beta_inf, beta_sup] of the slope of the inverse Bessel
    ratio map, i.e. max of 1/r'(beta); r' is closed-form and positive."""
    betas = np.linspace(beta_inf, beta_sup, 2001)
    return float(max(1.0 / specfun.ratio_k1k2_deriv(b) for b in betas))


def lemma_suite(trials: int, seed: int, params: rx.TruncationParams,
                grid: MomentumGrid):
    """Randomized certification of the nine quantitative inequalities.

    Every check compares a measured quantity against its assembled analytic
    bound plus 10x the grid's certified calibration defect (plus round-off
    headroom); failures are counted, never raised.  Deterministic per seed.
    """
    radius, cap = params.radius, params.cap
    beta_inf, beta_sup = params.beta_inf, params.beta_sup
    if grid.q_max < 2.0 * radius:
        raise specfun.DomainError(
            f"grid q_max={grid.q_max} cannot cover support radius {2*radius}")

    slack = 10.0 * (grid.calibration["quad_defect"]
                    + grid.calibration["tail_fraction"]) + 1e-12
    root = math.sqrt(1.0 + 4.0 * radius * radius)
    c2 = _sup_inverse_ratio_slope(beta_inf, beta_sup)
    m_inf = specfun.truncated_partition_m(beta_inf, radius)
    m_sup = specfun.truncated_partition_m(beta_sup, radius)
    phi = params.cutoff(grid)
    qn = grid.qnorm()

    names = ("lipmoments", "lm:stab", "lm:", "lcomp", "l:5", "entropymin",
             "scalaruq", "Jtrick", "Huanho")
    worst = {k: math.inf for k in names}
    fails = {k: 0 for k in names}

    def check(name: str, margin: float) -> None:
        worst[name] = min(worst[name], margin)
        if margin < 0.0:
            fails[name] += 1

    rng = np.random.default_rng(seed)
    for _ in range(int(trials)):
        f1 = _random_trial_distribution(rng, grid, radius)
        f2 = _random_trial_distribution(rng, grid, radius)
        flds1, flds2 = fields_of(f1, grid), fields_of(f2, grid)
        b1, u1, _ = rx.truncate_fields(flds1, params)
        b2, u2, _ = rx.truncate_fields(flds2, params)
        diff = _l1(f1 - f2, grid)
        nmax = max(flds1.n, flds2.n)

        # Moment stability: density, capped velocity, clamped temperature.
        m_n = root * 2.0 * diff + slack - abs(flds1.n - flds2.n)
        ku = (1.0 + 2.0 * root * math.sqrt(1.0 + cap * cap)) / nmax
        m_u = ku * diff + slack - float(np.linalg.norm(u1 - u2))
        m_b = c2 * ku * diff + slack - abs(b1 - b2)
        check("lipmoments", min(m_n, m_u, m_b))

        # Lipschitz bound for the truncated operator itself.
        j1, _, _ = rx.truncated_relax(f1, grid, params, phi=phi)
        j2, _, _ = rx.truncated_relax(f2, grid, params, phi=phi)
        c1_nodes = (2.0 * root
                    + (1.0 + 2.0 * root * math.sqrt(1.0 + cap * cap))
                    * (2.0 * radius * c2 * m_inf / m_sup + beta_sup * grid.q0))
        c3 = det_sum(grid.weights * c1_nodes * phi / m_sup
                     * np.exp(-beta_inf * qn / (3.0 * cap)) / grid.q0)
        check("lm:stab", c3 * diff + slack - _l1(j1 - j2, grid))

        # Density lower bound for support in |q| <= 2R.
        check("lm:", flds1.n - det_sum(grid.weights * f1) / root + slack)

        # Truncated partition residual: M(b) - M~(b) <= Lambda(R; b).
        b_probe = rng.uniform(beta_inf, beta_sup)
        gap = specfun.partition_m(b_probe) - specfun.truncated_partition_m(
            b_probe, radius)
        check("lcomp", specfun.residual_lambda(radius, b_probe) - gap + 1e-12)

        # Exponential tail bound u.q >= |q|/(3L) for capped velocities.
        check("l:5", float(np.min(rx.uq_scalar(u1, grid) - qn / (3.0 * cap)))
              + 1e-12)

        # Entropy optimality of the exact projection.
        jp, _ = rx.project_equilibrium(f1, grid)
        h_f = det_sum(grid.weights * entropy_integrand(f1) / grid.q0)
        h_j = det_sum(grid.weights * entropy_integrand(jp) / grid.q0)
        check("entropymin", h_f - h_j + 1e-10 + slack)

        # Cauchy-Schwarz on the mass shell: u.q >= 1.
        check("scalaruq",
              float(np.min(rx.uq_scalar(flds1.u, grid))) - 1.0 + 1e-12)

        # Pointwise convexity: x log(x/y) + y - x >= 0.
        x = rng.uniform(1e-6, 10.0, size=256)
        y = rng.uniform(1e-6, 10.0, size=256)
        check("Jtrick", float(np.min(x * np.log(x / y) + y - x)) + 1e-12)

        # Pointwise bound g|log g| <= g log g + r g + (2/e) e^{-r/4}.
        gvals = rng.uniform(1e-8, 3.0, size=256)
        rvals = rng.uniform(0.0, 30.0, size=256)
        lhs = gvals * np.abs(np.log(gvals))
        rhs = (gvals * np.log(gvals) + rvals * gvals
               + (2.0 / math.e) * np.exp(-rvals / 4.0))
        check("Huanho", float(np.min(rhs - lhs)) + 1e-12)

    return [LemmaReport(k, int(trials), worst[k], fails[k], seed)
            for k in names]


def write_lemma_reports(path, reports) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump([r.as_dict() for r in reports], fh, indent=2)
        fh.write("\n")


def epsilon_sweep(initial: Distribution, beta_sup_list, dt: float,
                  t_end: float):
    """Convergence study in the regularization parameter 1/beta_sup.

    Runs the truncated operator from a shared initial datum for each
    beta_sup and tabulates, per entry: the final-time L1 distance to the
    next-finer run, the measured distance between the truncated and exact
    projections of the final state in L1(dq/q0 dx), worst conservation
    defects, and the entropy budget constant.
    """
    from .solver import SimulationState, SolverConfig, run  # local: avoid cycle

    beta_sup_list = list(beta_sup_list)
    if beta_sup_list != sorted(beta_sup_list):
        raise specfun.DomainError("beta_sup list must be increasing")
    rmax = 2.0 * max(beta_sup_list) ** 2
    if initial.grid.q_max < rmax:
        raise specfun.DomainError(
            f"grid q_max={initial.grid.q_max} cannot cover 2R={rmax}")

    grid, space = initial.grid, initial.space
    dx = space.dx
    finals, rows = [], []
    for bs in beta_sup_list:
        params = rx.TruncationParams(bs)
        config = SolverConfig(dt=dt, t_end=t_end, operator_mode="truncated",
                              trunc=params)
        state, records, _ = run(initial.copy(), config)
        phi = params.cutoff(grid)
        dist_jj = 0.0
        for c in range(space.cells):
            jt, _, _ = rx.truncated_relax(state.f.values[c], grid, params,
                                          phi=phi)
            jp, _ = rx.project_equilibrium(state.f.values[c], grid)
            dist_jj += det_sum(grid.weights * np.abs(jt - jp) / grid.q0) * dx
        finals.append(state.f)
        rows.append({
            "beta_sup": bs,
            "cauchy_l1": math.nan,
            "jtilde_vs_j": dist_jj,
            "mass_defect": max(abs(r.mass_defect) for r in records),
            "energy_defect": max(abs(r.energy_defect) for r in records),
            "entropy_bound_cb": specfun.entropy_bound_cb(bs),
        })
    for i in range(len(finals) - 1):
        d = 0.0
        for c in range(space.cells):
            d += det_sum(grid.weights
                         * np.abs(finals[i].values[c] - finals[i + 1].values[c])
                         / grid.q0) * dx
        rows[i]["cauchy_l1"] = d
    return rows


SWEEP_COLUMNS = ("beta_sup", "cauchy_l1", "jtilde_vs_j", "mass_defect",
                 "energy_defect", "entropy_bound_cb")


def write_sweep_csv(path, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(row[k])) if k != "beta_sup"
                              else repr(float(row[k]))
                              for k in SWEEP_COLUMNS) + "\n")
