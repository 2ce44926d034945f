"""Command-line entry points: run, project, verify, sweep, specfun.

Configuration is strict JSON: unknown keys are rejected and the physics-
relevant quantities (dt, q_max, beta_sup, ...) have no silent defaults, so
every numerical claim in an output file is reproducible from its config.
All CSV/JSON emission uses repr() of float64 values: byte-identical across
repeated runs of the same configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import diagnostics, specfun
from . import relaxation as rx
from . import solver as sv
from .moments import fields_of
from .phase_space import (ConfigurationError, Distribution, SnapshotError,
                          SpatialGrid, build_grid, read_snapshot,
                          write_snapshot)

RULE_DEFAULT = "gauss-legendre-tensor"


class ValidationError(ValueError):
    """Config violations; message lists each offending key path."""


@dataclass
class RunConfig:
    space: SpatialGrid
    grid_spec: dict
    operator_mode: str
    beta_sup: float | None
    dt: float
    t_end: float
    snapshot_every: int
    initial: object            # list of bump dicts, or {"snapshot": path}
    csv_path: str
    snapshot_dir: str | None
    seed: int
    threads: object
    interpolation: str
    picard: dict | None
    relax_substeps: int
    transport_substeps: int


def _expect_keys(obj: dict, path: str, required: tuple, optional: tuple,
                 errors: list) -> bool:
    unknown = set(obj) - set(required) - set(optional)
    for k in sorted(unknown):
        errors.append(f"{path}.{k}: unknown key")
    missing = [k for k in required if k not in obj]
    for k in missing:
        errors.append(f"{path}.{k}: required key missing")
    return not missing


def parse_config(path) -> RunConfig:
    """Parse and fully validate a run configuration file."""
    with open(path, "r") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
    return validate_config(raw)


def validate_config(raw: dict) -> RunConfig:
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ValidationError("config root must be a JSON object")
    _expect_keys(raw, "$", ("mode", "grid", "operator", "time", "initial",
                            "output"),
                 ("seed", "threads", "interpolation", "picard",
                  "relax_substeps", "transport_substeps"), errors)

    space = SpatialGrid()
    mode = raw.get("mode")
    if mode == "homogeneous":
        pass
    elif isinstance(mode, dict) and set(mode) == {"slab"}:
        slab = mode["slab"]
        if _expect_keys(slab, "$.mode.slab", ("length", "cells"), (), errors):
            try:
                space = SpatialGrid("slab", float(slab["length"]),
                                    int(slab["cells"]))
            except (ConfigurationError, TypeError, ValueError) as exc:
                errors.append(f"$.mode.slab: {exc}")
    elif mode is not None:
        errors.append("$.mode: must be \"homogeneous\" or {\"slab\": ...}")

    grid_spec = {"rule": RULE_DEFAULT, "force": False}
    grid = raw.get("grid", {})
    if isinstance(grid, dict) and _expect_keys(
            grid, "$.grid", ("q_max", "nodes_per_axis"), ("rule", "force"),
            errors):
        grid_spec.update(grid)
        if grid_spec["rule"] not in ("gauss-legendre-tensor",
                                     "uniform-trapezoid"):
            errors.append(f"$.grid.rule: unknown rule {grid_spec['rule']!r}")
        if not (isinstance(grid_spec["q_max"], (int, float))
                and grid_spec["q_max"] > 0):
            errors.append("$.grid.q_max: must be a positive number")
        if not (isinstance(grid_spec["nodes_per_axis"], int)
                and grid_spec["nodes_per_axis"] >= 4):
            errors.append("$.grid.nodes_per_axis: must be an integer >= 4")

    operator_mode, beta_sup = "exact", None
    op = raw.get("operator")
    if op == "exact":
        pass
    elif isinstance(op, dict) and set(op) == {"truncated"}:
        operator_mode = "truncated"
        tr = op["truncated"]
        if _expect_keys(tr, "$.operator.truncated", ("beta_sup",), (),
                        errors):
            beta_sup = float(tr["beta_sup"])
            if not beta_sup > 1.0:
                errors.append("$.operator.truncated.beta_sup: must exceed 1")
            elif isinstance(grid_spec.get("q_max"), (int, float)):
                need = 2.0 * beta_sup**2
                if grid_spec["q_max"] < need:
                    errors.append(
                        f"$.grid.q_max: truncated mode with beta_sup="
                        f"{beta_sup} needs q_max >= {need}")
    elif op is not None:
        errors.append("$.operator: must be \"exact\" or {\"truncated\": ...}")

    dt = t_end = 1.0
    snapshot_every = 0
    tm = raw.get("time", {})
    if isinstance(tm, dict) and _expect_keys(
            tm, "$.time", ("dt", "t_end"), ("snapshot_every",), errors):
        dt, t_end = float(tm["dt"]), float(tm["t_end"])
        snapshot_every = int(tm.get("snapshot_every", 0))
        if dt <= 0 or t_end < 0:
            errors.append("$.time: need dt > 0 and t_end >= 0")

    initial = raw.get("initial")
    if isinstance(initial, dict):
        if set(initial) != {"snapshot"}:
            errors.append("$.initial: object form must be {\"snapshot\": path}")
    elif isinstance(initial, list) and initial:
        for i, bump in enumerate(initial):
            if not isinstance(bump, dict):
                errors.append(f"$.initial[{i}]: must be an object")
                continue
            _expect_keys(bump, f"$.initial[{i}]", ("n", "beta", "u"),
                         ("profile",), errors)
            u = bump.get("u")
            if not (isinstance(u, list) and len(u) == 3):
                errors.append(f"$.initial[{i}].u: must be a 3-vector")
            prof = bump.get("profile")
            if prof is not None:
                _expect_keys(prof, f"$.initial[{i}].profile", ("kind",),
                             ("amplitude", "harmonic"), errors)
                if prof.get("kind") not in ("uniform", "sine"):
                    errors.append(
                        f"$.initial[{i}].profile.kind: must be uniform|sine")
    elif initial is not None:
        errors.append("$.initial: must be a nonempty bump list or snapshot ref")

    csv_path, snapshot_dir = "run.csv", None
    out = raw.get("output", {})
    if isinstance(out, dict) and _expect_keys(
            out, "$.output", ("csv",), ("snapshot_dir",), errors):
        csv_path = out["csv"]
        snapshot_dir = out.get("snapshot_dir")

    picard = raw.get("picard", "off")
    if picard == "off":
        picard = None
    elif isinstance(picard, dict):
        _expect_keys(picard, "$.picard", ("tol",), ("max_iter",), errors)
        if operator_mode != "truncated":
            errors.append("$.picard: requires the truncated operator")
    else:
        errors.append("$.picard: must be \"off\" or {\"tol\": ...}")

    interpolation = raw.get("interpolation", "linear")
    if interpolation not in ("linear", "cubic"):
        errors.append("$.interpolation: must be linear|cubic")

    if errors:
        raise ValidationError("; ".join(errors))
    return RunConfig(
        space=space, grid_spec=grid_spec, operator_mode=operator_mode,
        beta_sup=beta_sup, dt=dt, t_end=t_end, snapshot_every=snapshot_every,
        initial=initial, csv_path=csv_path, snapshot_dir=snapshot_dir,
        seed=int(raw.get("seed", 0)), threads=raw.get("threads", "auto"),
        interpolation=interpolation, picard=picard,
        relax_substeps=int(raw.get("relax_substeps", 1)),
        transport_substeps=int(raw.get("transport_substeps", 1)))


def build_initial(cfg: RunConfig, grid, space: SpatialGrid) -> Distribution:
    if isinstance(cfg.initial, dict):
        dist, _, _ = read_snapshot(cfg.initial["snapshot"])
        if dist.grid.spec() != grid.spec() or dist.space != space:
            raise ValidationError(
                "$.initial.snapshot: stored grid/space disagree with config")
        return dist
    vals = np.zeros((space.cells,) + grid.shape)
    x = space.centers()
    for bump in cfg.initial:
        u = np.asarray(bump["u"], dtype=np.float64)
        shape = rx.juttner_eval(
            rx.JuttnerParams(float(bump["n"]), float(bump["beta"]), u), grid)
        prof = bump.get("profile") or {"kind": "uniform"}
        if prof["kind"] == "uniform":
            weights = np.ones(space.cells)
        else:
            k = int(prof.get("harmonic", 1))
            amp = float(prof.get("amplitude", 0.5))
            weights = 1.0 + amp * np.sin(2.0 * math.pi * k * x / space.length)
        vals += weights[:, None, None, None] * shape[None]
    return Distribution(vals, grid, space)


def _thread_count(setting) -> int:
    return os.cpu_count() if setting == "auto" else int(setting)


def _write_meta(csv_path, payload: dict) -> None:
    with open(str(csv_path) + ".meta.json", "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    grid = build_grid(cfg.grid_spec["rule"], cfg.grid_spec["q_max"],
                      cfg.grid_spec["nodes_per_axis"],
                      force=bool(cfg.grid_spec["force"]))
    initial = build_initial(cfg, grid, cfg.space)
    trunc = (rx.TruncationParams(cfg.beta_sup)
             if cfg.operator_mode == "truncated" else None)
    sconf = sv.SolverConfig(
        dt=cfg.dt, t_end=cfg.t_end, operator_mode=cfg.operator_mode,
        trunc=trunc, interpolation=cfg.interpolation,
        picard_tol=(cfg.picard or {}).get("tol"),
        picard_max_iter=int((cfg.picard or {}).get("max_iter", 25)),
        relax_substeps=cfg.relax_substeps,
        transport_substeps=cfg.transport_substeps,
        snapshot_every=cfg.snapshot_every)
    state, records, snapshots = sv.run(initial, sconf)

    diagnostics.write_csv(cfg.csv_path, records)
    _write_meta(cfg.csv_path, {
        "threads": _thread_count(cfg.threads), "seed": cfg.seed,
        "grid": grid.spec(), "calibration": grid.calibration,
        "space": cfg.space.spec(), "operator": cfg.operator_mode,
        "beta_sup": cfg.beta_sup, "dt": cfg.dt, "t_end": cfg.t_end,
        "events": state.events})
    if cfg.snapshot_dir:
        os.makedirs(cfg.snapshot_dir, exist_ok=True)
        for step, t, dist in snapshots:
            write_snapshot(
                os.path.join(cfg.snapshot_dir, f"state_{step:06d}.rbgk"),
                dist, t, cfg.operator_mode)
    if args.plot:
        from . import plots
        plots.render_run_report(records, cfg.csv_path)
    print(f"run complete: {len(records) - 1} steps -> {cfg.csv_path}")
    return 0


def cmd_project(args) -> int:
    dist, t, _ = read_snapshot(args.infile)
    x = dist.space.centers()
    cols = ("x", "n", "ux", "uy", "uz", "beta", "e", "p", "sigma", "vacuum")
    with open(args.out, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for c in range(dist.space.cells):
            flds = fields_of(dist.values[c], dist.grid)
            row = [repr(float(v)) for v in
                   (x[c], flds.n, flds.u[0], flds.u[1], flds.u[2],
                    flds.beta, flds.e, flds.p, flds.sigma)]
            row.append(str(int(flds.vacuum)))
            fh.write(",".join(row) + "\n")
    print(f"projected {dist.space.cells} cells at t={t} -> {args.out}")
    return 0


def cmd_verify(args) -> int:
    params = rx.TruncationParams(args.beta_sup)
    q_max = args.q_max if args.q_max is not None else 2.0 * params.radius
    grid = build_grid(RULE_DEFAULT, q_max, args.nodes, force=True)
    reports = diagnostics.lemma_suite(args.trials, args.seed, params, grid)
    text = json.dumps([r.as_dict() for r in reports], indent=2)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    failures = sum(r.failures for r in reports)
    print(f"verify: {len(reports)} inequalities, {failures} failures",
          file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    beta_sups = sorted(float(b) for b in args.beta_sups.split(","))
    need = 2.0 * max(beta_sups) ** 2
    if cfg.grid_spec["q_max"] < need:
        raise ValidationError(
            f"$.grid.q_max: sweep up to beta_sup={max(beta_sups)} needs "
            f"q_max >= {need}")
    grid = build_grid(cfg.grid_spec["rule"], cfg.grid_spec["q_max"],
                      cfg.grid_spec["nodes_per_axis"],
                      force=bool(cfg.grid_spec["force"]))
    initial = build_initial(cfg, grid, cfg.space)
    rows = diagnostics.epsilon_sweep(initial, beta_sups, cfg.dt, cfg.t_end)
    diagnostics.write_sweep_csv(args.out, rows)
    _write_meta(args.out, {
        "threads": _thread_count(cfg.threads), "seed": cfg.seed,
        "grid": grid.spec(), "beta_sup_list": beta_sups,
        "dt": cfg.dt, "t_end": cfg.t_end})
    if args.plot:
        from . import plots
        plots.render_sweep_report(rows, args.out)
    print(f"sweep over beta_sup={beta_sups} -> {args.out}")
    return 0


def cmd_specfun(args) -> int:
    if args.points < 1 or args.beta_max < args.beta_min:
        raise ValidationError(
            "specfun tabulate: need points >= 1 and beta_max >= beta_min")
    if args.points == 1:
        betas = [args.beta_min]
    else:
        betas = list(np.linspace(args.beta_min, args.beta_max, args.points))
    with open(args.out, "w", newline="\n") as fh:
        fh.write("beta,k1,k2,ratio,m,psi\n")
        for b in betas:
            fh.write(",".join(repr(v) for v in (
                float(b), specfun.bessel_k(1, b), specfun.bessel_k(2, b),
                specfun.ratio_k1k2(b), specfun.partition_m(b),
                specfun.psi(b))) + "\n")
    print(f"tabulated {len(betas)} rows -> {args.out}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: usage: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="relbgk",
        description="Relativistic BGK-Marle solver and verification suite")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("run", help="time-integrate a configured problem")
    p.add_argument("--config", required=True)
    p.add_argument("--plot", action="store_true",
                   help="render report figures beside the CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("project", help="thermo fields CSV from a snapshot")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("verify", help="randomized inequality certification")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta-sup", dest="beta_sup", type=float, default=2.0)
    p.add_argument("--q-max", dest="q_max", type=float, default=None)
    p.add_argument("--nodes", type=int, default=48)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="truncation-parameter convergence study")
    p.add_argument("--config", required=True)
    p.add_argument("--beta-sups", default="2,3,4,6",
                   help="comma-separated increasing beta_sup list")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("specfun", help="special-function utilities")
    sub2 = p.add_subparsers(dest="specfun_command", parser_class=_Parser)
    pt = sub2.add_parser("tabulate", help="CSV table of K1, K2, ratio, M, Psi")
    pt.add_argument("--beta-min", dest="beta_min", type=float, required=True)
    pt.add_argument("--beta-max", dest="beta_max", type=float, required=True)
    pt.add_argument("--points", type=int, required=True)
    pt.add_argument("--out", required=True)
    pt.set_defaults(func=cmd_specfun)
    return ap


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    func = getattr(args, "func", None)
    if func is None:
        ap.print_usage(sys.stderr)
        print("error: usage: missing or unknown subcommand", file=sys.stderr)
        return 1
    try:
        return func(args)
    except (ValidationError, ConfigurationError, SnapshotError,
            specfun.DomainError, rx.NoSolutionError, FileNotFoundError) as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
