"""Command-line interface.

Subcommands ``evaluate``, ``check``, ``minimize``, ``mesh`` and ``sweep``
share one TOML run configuration::

    [material]          # kappa_H_A, kappa_H_B, kappa_G_A, kappa_G_B, H0_A, H0_B, sigma
                        # or the single-phase shorthand kappa_H, kappa_G, H0, sigma
    [constraints]       # total_area, phase_area, volume
    [optimizer]         # any OptimizerConfig field
    [run]               # curve, phase, out, resolution, angular, components, seed, threads, starts

Command-line flags override the file. Lengths and energies are in whatever
consistent units the user chooses; nothing is dimensionful internally.

Results are printed as ``key=value`` lines. Exit status is 0 on success,
1 on invalid input (including usage errors) and 2 when a computation fails
or a minimization does not converge.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .analysis import (
    ConstraintSet,
    coercivity_check,
    coercivity_constants,
    feasibility_check,
    gauss_bonnet_defect,
)
from .energy import MaterialParams, VesicleSystem, evaluate_component, system_energy
from .geometry import InvalidCurveError, admissibility_check, sphere_curve
from .meshio import (
    Checkpoint,
    ParseError,
    is_watertight,
    mesh_area,
    mesh_volume,
    read_curve,
    read_phase,
    revolve_to_mesh,
    write_checkpoint,
    write_curve,
    write_mesh,
    write_phase,
    write_report_csv,
)
from .optimizer import DivergedError, OptimizerConfig, init_system, minimize
from .phase import PhaseLayout, interface_length

__all__ = ["RunConfig", "UsageError", "load_config", "run_sweep", "main"]

log = logging.getLogger("axivesicle")

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2
SWEEP_PARAMETERS = ("sigma", "volume", "m")


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: MaterialParams | None = None
    constraints: ConstraintSet | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    curve: Path | None = None
    phase: Path | None = None
    out: Path | None = None
    resolution: int = 400
    angular: int = 64
    components: int = 1
    seed: int = 0
    threads: int = 1
    starts: int = 1

    def require_params(self) -> MaterialParams:
        if self.params is None:
            raise UsageError("the configuration has no [material] block")
        return self.params

    def require_constraints(self) -> ConstraintSet:
        if self.constraints is None:
            raise UsageError("the configuration has no [constraints] block")
        return self.constraints


_SHORTHAND = ("kappa_H", "kappa_G", "H0", "sigma")


def _material(block: dict) -> MaterialParams:
    if set(block) <= set(_SHORTHAND) and "kappa_H" in block:
        return MaterialParams.uniform(
            block["kappa_H"], block.get("kappa_G", -block["kappa_H"]), block.get("H0", 0.0), block.get("sigma", 1.0)
        )
    return MaterialParams(**block)


def load_config(path=None, **overrides) -> RunConfig:
    """Read a TOML run configuration and apply non-``None`` overrides.

    Every block is validated here, so a bad value fails before any
    computation starts.
    """
    data: dict = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    unknown = set(data) - {"material", "constraints", "optimizer", "run"}
    if unknown:
        raise UsageError(f"unknown configuration block(s): {', '.join(sorted(unknown))}")
    run = dict(data.get("run", {}))
    run.update({k: v for k, v in overrides.items() if v is not None})
    known = {"curve", "phase", "out", "resolution", "angular", "components", "seed", "threads", "starts"}
    if set(run) - known:
        raise UsageError(f"unknown [run] option(s): {', '.join(sorted(set(run) - known))}")
    opt = dict(data.get("optimizer", {}))
    if "seed" in run:
        opt["seed"] = run["seed"]
    try:
        params = _material(data["material"]) if "material" in data else None
        constraints = ConstraintSet(**data["constraints"]) if "constraints" in data else None
        optimizer = OptimizerConfig.from_dict(opt)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    cfg = RunConfig(
        params=params,
        constraints=constraints,
        optimizer=optimizer,
        curve=Path(run["curve"]) if run.get("curve") else None,
        phase=Path(run["phase"]) if run.get("phase") else None,
        out=Path(run["out"]) if run.get("out") else None,
        resolution=int(run.get("resolution", 400)),
        angular=int(run.get("angular", 64)),
        components=int(run.get("components", 1)),
        seed=int(run.get("seed", optimizer.seed)),
        threads=int(run.get("threads", 1)),
        starts=int(run.get("starts", 1)),
    )
    for name in ("resolution", "angular", "components", "threads", "starts"):
        if getattr(cfg, name) < 1:
            raise UsageError(f"{name} must be at least 1")
    if cfg.resolution < 8:
        raise UsageError("resolution must be at least 8")
    return cfg


# --- output ----------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _emit(pairs, out=None, prefix: str = "") -> list[str]:
    lines = [f"{prefix}{k}={_fmt(v)}" for k, v in pairs]
    for line in lines:
        print(line)
    if out is not None:
        with open(out, "a") as fh:
            fh.write("\n".join(lines) + "\n")
    return lines


def _prepare_out(cfg: RunConfig, name: str) -> Path | None:
    if cfg.out is None:
        return None
    cfg.out.mkdir(parents=True, exist_ok=True)
    target = cfg.out / name
    target.write_text("")
    return target


# --- inputs ----------------------------------------------------------------


def _load_system(cfg: RunConfig) -> VesicleSystem:
    if cfg.curve is None:
        raise UsageError("a curve file is required (--curve or [run] curve)")
    curve = read_curve(cfg.curve)
    report = admissibility_check(curve)
    if not report.admissible:
        raise InvalidCurveError("inadmissible curve: " + "; ".join(report.violations))
    if cfg.phase is None:
        log.warning("no phase file given; using phase A everywhere")
        layout = PhaseLayout.constant(1)
    else:
        layout = read_phase(cfg.phase)
    return VesicleSystem.single(curve, layout)


def _initial_system(cfg: RunConfig) -> VesicleSystem:
    if cfg.curve is not None:
        return _load_system(cfg)
    return init_system(cfg.require_constraints(), cfg.components, cfg.resolution)


# --- subcommands -----------------------------------------------------------


def cmd_evaluate(cfg: RunConfig) -> int:
    params = cfg.require_params()
    system = _load_system(cfg)
    b = system_energy(system, params)
    curve, layout = system.components[0]
    ev = evaluate_component(curve.x, curve.z, layout, params)
    _emit(
        [
            ("bending", b.bending),
            ("gaussian", b.gaussian),
            ("line", b.line),
            ("total", b.total),
            ("area", ev.area),
            ("volume", ev.volume),
            ("phase_area", ev.phase_area),
            ("interface_length", interface_length(curve, layout)),
        ],
        _prepare_out(cfg, "energy.txt"),
    )
    return EXIT_OK


def cmd_check(cfg: RunConfig) -> int:
    params = cfg.require_params()
    out = _prepare_out(cfg, "check.txt")
    cert = coercivity_constants(params)
    _emit([(k, v) for k, v in cert.as_dict().items()], out, "coercivity.")
    status = EXIT_OK
    if cfg.constraints is not None:
        feas = feasibility_check(cfg.constraints)
        _emit(
            [
                ("feasible", feas.feasible),
                ("volume_bound", feas.volume_bound),
                ("reduced_volume", feas.reduced_volume),
            ],
            out,
            "feasibility.",
        )
        for msg in feas.diagnostics:
            print(f"feasibility.diagnostic={msg}", file=sys.stderr)
        if not feas.feasible:
            status = EXIT_INVALID
    if cfg.curve is not None:
        system = _load_system(cfg)
    elif cfg.constraints is not None and status == EXIT_OK:
        system = init_system(cfg.constraints, cfg.components, cfg.resolution)
    else:
        system = VesicleSystem.single(sphere_curve(cfg.resolution), PhaseLayout.constant(1))
    rep = coercivity_check(system, params)
    _emit(
        [
            ("lhs", rep.lhs),
            ("rhs", rep.rhs),
            ("rhs_sharp", rep.rhs_sharp),
            ("satisfied", rep.satisfied),
        ],
        out,
        "coercivity.",
    )
    defects = [gauss_bonnet_defect(c) for c in system.curves if c.is_closed]
    if defects:
        _emit([("gauss_bonnet_defect", max(defects))], out)
    return status


def cmd_minimize(cfg: RunConfig) -> int:
    params = cfg.require_params()
    constraints = cfg.require_constraints()
    system = _initial_system(cfg)
    optimizer = replace(cfg.optimizer, seed=cfg.seed)
    if cfg.out is not None and optimizer.checkpoint_every and not optimizer.checkpoint_path:
        cfg.out.mkdir(parents=True, exist_ok=True)
        optimizer = replace(optimizer, checkpoint_path=str(cfg.out / "checkpoint.json"))
    final, report = minimize(system, params, constraints, optimizer)
    out = _prepare_out(cfg, "summary.txt")
    if cfg.out is not None:
        _write_results(cfg.out, final, params, constraints, report, optimizer)
    _emit(_summary(final, params, report), out)
    return EXIT_OK if report.termination == "converged" else EXIT_FAILED


def _summary(system, params, report) -> list[tuple]:
    b = system_energy(system, params)
    ra, rv, rp = report.final_residuals
    length = sum(interface_length(c, l) for c, l in system)
    return [
        ("termination", report.termination),
        ("iterations", report.iteration[-1] if report.iteration else 0),
        ("energy", b.total),
        ("bending", b.bending),
        ("gaussian", b.gaussian),
        ("line", b.line),
        ("interface_length", length),
        ("res_area", ra),
        ("res_volume", rv),
        ("res_phase", rp),
        ("wall_time", report.wall_time),
    ]


def _write_results(out: Path, system, params, constraints, report, optimizer) -> None:
    for k, (curve, layout) in enumerate(system):
        write_curve(curve, out / f"curve_{k}.csv")
        write_phase(layout, out / f"phase_{k}.txt")
    write_report_csv(report.rows(), out / "report.csv")
    write_checkpoint(
        Checkpoint(
            system=system,
            params=params,
            constraints=constraints,
            multipliers=report.multipliers,
            penalty=report.penalty,
            iteration=report.outer_iterations,
            rng_state={"seed": optimizer.seed},
            config=asdict(optimizer),
        ),
        out / "checkpoint.json",
    )


def cmd_mesh(cfg: RunConfig) -> int:
    system = _load_system(cfg)
    curve, layout = system.components[0]
    mesh = revolve_to_mesh(curve, layout, cfg.angular)
    pairs = [
        ("vertices", mesh.n_vertices),
        ("triangles", mesh.n_triangles),
        ("area", mesh_area(mesh)),
        ("volume", mesh_volume(mesh)),
        ("watertight", is_watertight(mesh)),
    ]
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        write_mesh(mesh, cfg.out / "mesh.obj")
        write_mesh(mesh, cfg.out / "mesh.vtk")
    _emit(pairs, _prepare_out(cfg, "mesh.txt"))
    return EXIT_OK


def _sweep_one(cfg: RunConfig, parameter: str, value: float) -> dict:
    """One sweep entry; a top-level function so worker processes can run it."""
    params = cfg.require_params()
    constraints = cfg.require_constraints()
    components = cfg.components
    if parameter == "sigma":
        params = replace(params, sigma=float(value))
    elif parameter == "volume":
        constraints = ConstraintSet(constraints.total_area, constraints.phase_area, float(value))
    else:
        components = int(value)
    best = None
    for start in range(cfg.starts):
        seed = cfg.seed + start
        system = init_system(constraints, components, cfg.resolution)
        final, report = minimize(system, params, constraints, replace(cfg.optimizer, seed=seed))
        energy = system_energy(final, params).total
        if best is None or energy < best[0]:
            best = (energy, final, report, seed)
    _, final, report, seed = best
    if cfg.out is not None:
        target = cfg.out / f"{parameter}={value:g}"
        target.mkdir(parents=True, exist_ok=True)
        _write_results(target, final, params, constraints, report, replace(cfg.optimizer, seed=seed))
    return {"value": value, "summary": dict(_summary(final, params, report))}


def run_sweep(cfg: RunConfig, parameter: str, values) -> list[dict]:
    """Minimize once per value; rows come back in input order.

    With ``cfg.threads > 1`` the values run in a process pool; each run
    writes only to its own ``<out>/<parameter>=<value>`` directory.
    """
    values = list(values)
    if parameter not in SWEEP_PARAMETERS:
        raise UsageError(f"sweep parameter must be one of {', '.join(SWEEP_PARAMETERS)}")
    if not values:
        raise UsageError("sweep needs at least one value")
    if parameter == "m" and any(v != int(v) or v < 1 for v in values):
        raise UsageError("component counts must be positive integers")
    cfg.require_params()
    cfg.require_constraints()
    if cfg.threads > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.threads, len(values))) as pool:
            return list(pool.map(_sweep_one, [cfg] * len(values), [parameter] * len(values), values))
    return [_sweep_one(cfg, parameter, v) for v in values]


def cmd_sweep(cfg: RunConfig, parameter: str, values) -> int:
    rows = run_sweep(cfg, parameter, values)
    out = _prepare_out(cfg, "sweep.txt")
    status = EXIT_OK
    for row in rows:
        _emit([("value", row["value"]), *row["summary"].items()], out, f"{parameter}[{row['value']:g}].")
        if row["summary"]["termination"] != "converged":
            status = EXIT_FAILED
    return status


# --- entry point -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--curve", type=Path, help="generator curve CSV (t,x,z)")
    common.add_argument("--phase", type=Path, help="phase layout file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker processes for sweeps")
    common.add_argument("--resolution", type=int, metavar="N", help="segments per generator")
    common.add_argument("--angular", type=int, metavar="M", help="angular segments of exported meshes")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="axivesicle", description="Axisymmetric multiphase vesicle energies.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("evaluate", parents=[common], help="energy breakdown of a curve and phase")
    sub.add_parser("check", parents=[common], help="coercivity, feasibility and Gauss-Bonnet audits")
    sub.add_parser("minimize", parents=[common], help="constrained energy minimization")
    sub.add_parser("mesh", parents=[common], help="export the surface of revolution as OBJ and VTK")
    sweep = sub.add_parser("sweep", parents=[common], help="minimize over a list of parameter values")
    sweep.add_argument("parameter", choices=SWEEP_PARAMETERS)
    sweep.add_argument("values", nargs="*", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(
            args.config,
            curve=args.curve,
            phase=args.phase,
            out=args.out,
            seed=args.seed,
            threads=args.threads,
            resolution=args.resolution,
            angular=args.angular,
        )
        if args.command == "sweep":
            return cmd_sweep(cfg, args.parameter, args.values)
        handler = {
            "evaluate": cmd_evaluate,
            "check": cmd_check,
            "minimize": cmd_minimize,
            "mesh": cmd_mesh,
        }[args.command]
        return handler(cfg)
    except (UsageError, ParseError, ValueError, OSError, tomllib.TOMLDecodeError) as exc:
        # validation errors (curve, phase, params, constraints) are ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DivergedError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
