"""Constrained minimization of the system energy.

The total-area, phase-A-area and volume constraints are enforced with an
augmented Lagrangian. Each inner phase keeps the multipliers and penalty
fixed and runs a descent method with Armijo backtracking (step halving) on
the interior node coordinates and jump locations. Poles stay on the axis and
the height of each pole node is slaved to its two neighbours so that the
one-sided tangent stencil is exactly horizontal there (the surface meets the
axis orthogonally). Discrete phase moves are proposed periodically and kept
only when they strictly lower the augmented objective.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .analysis import ConstraintSet, InvalidConstraintsError, feasibility_check, volume_bound
from .energy import MaterialParams, VesicleSystem, evaluate_component
from .geometry import (
    GeneratorCurve,
    InvalidCurveError,
    enclosed_volume,
    reparametrize_constant_speed,
    resampling_map,
    surface_area,
)
from .phase import (
    PhaseError,
    PhaseLayout,
    default_min_separation,
    insert_jump_pair,
    move_jump,
    phase_area,
    remove_jump_pair,
    toggle_segment,
)

__all__ = [
    "ConstraintSet",
    "OptimizerConfig",
    "OptimizationReport",
    "PhaseMove",
    "DivergedError",
    "spheroid_axes",
    "init_system",
    "pin_poles",
    "augmented_objective",
    "minimize",
    "reparametrization_maintenance",
]

log = logging.getLogger(__name__)


class DivergedError(RuntimeError):
    def __init__(self, message: str, report: "OptimizationReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class OptimizerConfig:
    max_outer_iters: int = 30
    max_inner_iters: int = 3000
    penalty0: float = 1000.0
    penalty_growth: float = 10.0
    max_penalty: float = 1e9
    multiplier_update: str = "first-order"  # or "none"
    step_tol: float = 1e-13
    constraint_tol: float = 1e-6
    gradient_tol: float = 1e-5
    energy_tol: float = 1e-6  # relative energy change over one outer iteration
    phase_move_period: int = 50
    phase_move_budget: int = 8
    min_jump_separation: float | None = None  # default 1/(4N)
    max_jumps: int = 8
    reparam_every: int = 0  # accepted steps between resamplings; 0 disables
    memory: int = 12
    armijo: float = 1e-4
    max_backtracks: int = 50
    axis_margin: float = 1e-4  # fraction of the curve scale
    spacing_weight: float = 10.0  # chord-uniformity gauge term, in units of 8 pi max(kappa_H)
    seed: int = 0
    checkpoint_path: str | None = None
    checkpoint_every: int = 0  # outer iterations; 0 disables

    def __post_init__(self):
        for name in ("step_tol", "constraint_tol", "gradient_tol", "energy_tol", "penalty0", "armijo", "axis_margin"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.penalty_growth > 1:
            raise ValueError("penalty_growth must exceed 1")
        if self.multiplier_update not in ("first-order", "none"):
            raise ValueError("multiplier_update must be 'first-order' or 'none'")
        for name in ("max_outer_iters", "max_inner_iters", "phase_move_period", "phase_move_budget",
                     "max_jumps", "reparam_every", "memory", "max_backtracks", "checkpoint_every"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_dict(cls, data: dict) -> "OptimizerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown optimizer option(s): {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass(frozen=True)
class PhaseMove:
    iteration: int
    component: int
    kind: str  # toggle | move | insert | remove
    detail: str
    accepted: bool
    delta: float  # change of the augmented objective


@dataclass
class OptimizationReport:
    """Traces of one run; index 0 holds the starting point."""

    iteration: list[int] = field(default_factory=list)
    inner_phase: list[int] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    res_area: list[float] = field(default_factory=list)
    res_volume: list[float] = field(default_factory=list)
    res_phase: list[float] = field(default_factory=list)
    step: list[float] = field(default_factory=list)
    phase_moves: list[PhaseMove] = field(default_factory=list)
    reparametrizations: list[tuple[int, float]] = field(default_factory=list)
    termination: str = ""
    wall_time: float = 0.0
    multipliers: tuple[float, float, float] = (0.0, 0.0, 0.0)
    penalty: float = 0.0
    axis_barrier_active: bool = False
    outer_iterations: int = 0

    def rows(self) -> list[tuple]:
        """Trace rows matching ``iter,energy,res_area,res_vol,res_phase,step``."""
        return list(zip(self.iteration, self.energy, self.res_area, self.res_volume, self.res_phase, self.step))

    def traces(self) -> dict[str, list]:
        return {
            "iteration": self.iteration,
            "inner_phase": self.inner_phase,
            "energy": self.energy,
            "objective": self.objective,
            "res_area": self.res_area,
            "res_volume": self.res_volume,
            "res_phase": self.res_phase,
            "step": self.step,
        }

    @property
    def final_residuals(self) -> tuple[float, float, float]:
        return self.res_area[-1], self.res_volume[-1], self.res_phase[-1]


# --- initialization --------------------------------------------------------


def _spheroid_area(a: float, c: float) -> float:
    if c > a:
        e = math.sqrt(1.0 - (a / c) ** 2)
        ratio = math.asin(e) / e if e > 1e-8 else 1.0 + e * e / 6.0
        return 2 * math.pi * a * a * (1.0 + (c / a) * ratio)
    if c < a:
        e = math.sqrt(1.0 - (c / a) ** 2)
        ratio = math.atanh(e) / e if e > 1e-8 else 1.0 + e * e / 3.0
        return 2 * math.pi * a * a * (1.0 + (1.0 - e * e) * ratio)
    return 4 * math.pi * a * a


def spheroid_axes(area: float, volume: float) -> tuple[float, float]:
    """Semi-axes ``(a, c)`` of the prolate spheroid with given area and volume.

    ``a`` is the equatorial radius and ``c >= a`` the polar one.
    """
    target = volume / volume_bound(area)
    if not 0.0 < target < 1.0:
        raise InvalidConstraintsError(f"reduced volume {target} must lie in (0, 1)")

    def reduced(rho: float) -> float:
        return (4.0 / 3.0) * math.pi * rho / volume_bound(_spheroid_area(1.0, rho))

    hi = 2.0
    while reduced(hi) > target:
        hi *= 2.0
    rho = optimize.brentq(lambda r: reduced(r) - target, 1.0, hi, xtol=1e-15, rtol=1e-15)
    a = math.sqrt(area / _spheroid_area(1.0, rho))
    return a, rho * a


def pin_poles(z: np.ndarray) -> np.ndarray:
    """Set the pole heights so the one-sided tangent stencil is horizontal."""
    z = np.array(z, dtype=float)
    z[0] = (4.0 * z[1] - z[2]) / 3.0
    z[-1] = (4.0 * z[-2] - z[-3]) / 3.0
    return z


def _pinned_spheroid(a: float, c: float, n: int, center_z: float = 0.0) -> GeneratorCurve:
    """Spheroid meridian sampled at equal arc length, poles pinned."""
    fine = np.linspace(0.0, np.pi, 64 * n + 1)
    ds = np.hypot(a * np.cos(fine), c * np.sin(fine))
    arc = np.concatenate([[0.0], np.cumsum(0.5 * (ds[1:] + ds[:-1]) * np.diff(fine))])
    theta = np.interp(np.linspace(0.0, arc[-1], n + 1), arc, fine)
    theta[0], theta[-1] = 0.0, np.pi
    x = a * np.sin(theta)
    x[0] = x[-1] = 0.0
    z = center_z - c * np.cos(theta)
    return GeneratorCurve(x, pin_poles(z))


def init_system(
    constraints: ConstraintSet, n_components: int = 1, resolution: int = 400
) -> VesicleSystem:
    """Spheroids sharing the targets equally, each split into two phases.

    The spheroid shape comes from the analytic area/volume formulas and is
    then corrected so the *discrete* area and volume hit the targets. Phase A
    occupies the lower part of each component, bounded by one jump placed so
    the discrete phase-A area matches.
    """
    report = feasibility_check(constraints)
    if not report.feasible:
        raise InvalidConstraintsError("; ".join(report.diagnostics))
    if n_components < 1:
        raise ValueError("n_components must be positive")
    m = n_components
    A, V, P = constraints.total_area / m, constraints.volume / m, constraints.phase_area / m
    if not V > 0:
        raise InvalidConstraintsError("a spheroid start needs a positive volume")
    if not V < volume_bound(A):
        raise InvalidConstraintsError(
            f"{m} components: per-component reduced volume {V / volume_bound(A):.6g} is not below 1"
        )
    a0, c0 = spheroid_axes(A, V)

    def residual(p):
        curve = _pinned_spheroid(p[0], p[1], resolution)
        return [surface_area(curve) / A - 1.0, enclosed_volume(curve) / V - 1.0]

    sol = optimize.root(residual, [a0, c0], method="hybr", options={"xtol": 1e-15})
    a, c = sol.x
    if max(abs(r) for r in residual(sol.x)) > 1e-10:
        raise InvalidConstraintsError("could not match the discrete area and volume")

    template = _pinned_spheroid(a, c, resolution)
    if P <= 0.0:
        layout = PhaseLayout.constant(0)
    elif P >= A:
        layout = PhaseLayout.constant(1)
    else:
        lo, hi = 1e-12, 1.0 - 1e-12
        tj = optimize.brentq(
            lambda t: phase_area(template, PhaseLayout(1, (t,))) - P, lo, hi, xtol=1e-15, rtol=1e-15
        )
        layout = PhaseLayout(1, (tj,))
    spacing = 2.0 * c + 0.5 * a
    comps = tuple(
        (GeneratorCurve(template.x, template.z + k * spacing), layout) for k in range(m)
    )
    return VesicleSystem(comps)


# --- variable packing ------------------------------------------------------


class _Packing:
    """Map between the flat variable vector and per-component arrays.

    Free variables per component: interior ``x``, interior ``z``, then the
    jump locations.
    """

    def __init__(self, layouts: list[PhaseLayout], n_segments: list[int]):
        self.n_segments = list(n_segments)
        self.leading = [l.leading_value for l in layouts]
        self.n_jumps = [len(l.jumps) for l in layouts]
        self.slices = []
        start = 0
        for n, j in zip(self.n_segments, self.n_jumps):
            size = 2 * (n - 1) + j
            self.slices.append(slice(start, start + size))
            start += size
        self.size = start

    def pack(self, system: VesicleSystem) -> np.ndarray:
        v = np.empty(self.size)
        for sl, (curve, layout) in zip(self.slices, system):
            v[sl] = np.concatenate([curve.x[1:-1], curve.z[1:-1], layout.jumps])
        return v

    def unpack(self, v: np.ndarray):
        out = []
        for sl, n, j in zip(self.slices, self.n_segments, self.n_jumps):
            block = v[sl]
            x = np.zeros(n + 1)
            x[1:-1] = block[: n - 1]
            z = np.empty(n + 1)
            z[1:-1] = block[n - 1 : 2 * (n - 1)]
            z[0] = (4.0 * z[1] - z[2]) / 3.0
            z[-1] = (4.0 * z[-2] - z[-3]) / 3.0
            out.append((x, z, np.array(block[2 * (n - 1) :])))
        return out

    def reduce(self, node_grad: np.ndarray, jump_grad: np.ndarray, k: int) -> np.ndarray:
        """Chain rule from full node gradients to the free variables."""
        gx = node_grad[1:-1, 0]
        gz = node_grad[:, 1].copy()
        gz[1] += 4.0 / 3.0 * gz[0]
        gz[2] -= 1.0 / 3.0 * gz[0]
        gz[-2] += 4.0 / 3.0 * gz[-1]
        gz[-3] -= 1.0 / 3.0 * gz[-1]
        return np.concatenate([gx, gz[1:-1], jump_grad])

    def system(self, v: np.ndarray) -> VesicleSystem:
        comps = []
        for (x, z, jumps), lead in zip(self.unpack(v), self.leading):
            comps.append((GeneratorCurve(x, z), PhaseLayout(lead, tuple(jumps))))
        return VesicleSystem(tuple(comps))


@dataclass
class _Eval:
    value: float
    grad: np.ndarray | None
    energy: float
    residuals: np.ndarray  # achieved - target: area, volume, phase area
    barrier: float  # axis barrier only


class _Problem:
    def __init__(self, params: MaterialParams, constraints: ConstraintSet, scale: float,
                 axis_margin: float, min_sep: float, spacing_weight: float = 0.0):
        self.params = params
        self.targets = np.array([constraints.total_area, constraints.volume, constraints.phase_area])
        # relative residuals: phase area is measured against the total area
        self.res_scale = np.array([constraints.total_area, abs(constraints.volume) or 1.0, constraints.total_area])
        self.x_min = axis_margin * scale
        self.barrier_weight = 8 * np.pi * max(params.kappa_H_A, params.kappa_H_B)
        self.min_sep = min_sep
        self.spacing_weight = spacing_weight * self.barrier_weight

    def evaluate(self, packing: _Packing, v: np.ndarray, lam: np.ndarray, mu: float,
                 gradient: bool = True) -> _Eval | None:
        parts = packing.unpack(v)
        for (x, z, jumps) in parts:
            if np.any(x[1:-1] <= 0.0) or not np.all(np.isfinite(x)) or not np.all(np.isfinite(z)):
                return None
            if jumps.size:
                edges = np.concatenate([[0.0], jumps, [1.0]])
                if np.any(np.diff(edges) < self.min_sep):
                    return None
        energy = 0.0
        totals = np.zeros(3)
        evals = []
        for (x, z, jumps), lead in zip(parts, packing.leading):
            try:
                ev = evaluate_component(x, z, PhaseLayout(lead, tuple(jumps)), self.params, gradient)
            except (InvalidCurveError, PhaseError):
                return None
            energy += ev.energy
            totals += (ev.area, ev.volume, ev.phase_area)
            evals.append(ev)
        if not np.isfinite(energy):
            return None
        r = totals - self.targets
        coef = lam + mu * r
        value = energy + float(np.dot(lam, r)) + 0.5 * mu * float(np.dot(r, r))
        barrier = spacing_total = 0.0
        grads = []
        for k, ((x, z, _), ev) in enumerate(zip(parts, evals)):
            short = np.clip(self.x_min - x[1:-1], 0.0, None) / self.x_min if self.x_min > 0 else np.zeros(x.size - 2)
            barrier += self.barrier_weight * float(np.sum(short**2))
            spacing, spacing_grad = _spacing_term(x, z, self.spacing_weight, gradient)
            spacing_total += spacing
            if gradient:
                node = ev.energy_grad + coef[0] * ev.area_grad + coef[1] * ev.volume_grad + coef[2] * ev.phase_area_grad
                node = node + spacing_grad
                jump = ev.energy_jump_grad + coef[2] * ev.phase_area_jump_grad
                g = packing.reduce(node, jump, k)
                nb = x.size - 2
                if self.x_min > 0:
                    g[:nb] -= 2.0 * self.barrier_weight * short / self.x_min
                grads.append(g)
        value += barrier + spacing_total
        if not np.isfinite(value):
            return None
        grad = np.concatenate(grads) if gradient else None
        return _Eval(value, grad, energy, r, barrier)


def _spacing_term(x, z, weight, gradient):
    """``weight * sum((l_i / mean(l) - 1)^2)`` over chord lengths ``l_i``.

    Vanishes for constant-speed sampling. The energy does not depend on the
    parametrization in the continuum, so this only fixes the tangential
    placement of nodes, which the discrete energy would otherwise exploit.
    """
    if weight == 0.0:
        return 0.0, (np.zeros((x.size, 2)) if gradient else None)
    dx, dz = np.diff(x), np.diff(z)
    chord = np.hypot(dx, dz)
    mean = chord.mean()
    q = chord / mean - 1.0
    value = weight * float(np.dot(q, q))
    if not gradient:
        return value, None
    n = chord.size
    dl = 2.0 * weight * (q / mean - float(np.dot(q, q + 1.0)) / (n * mean))
    ux, uz = dx / chord, dz / chord
    g = np.zeros((x.size, 2))
    g[1:, 0] += dl * ux
    g[:-1, 0] -= dl * ux
    g[1:, 1] += dl * uz
    g[:-1, 1] -= dl * uz
    return value, g


def augmented_objective(
    system: VesicleSystem,
    params: MaterialParams,
    constraints: ConstraintSet,
    multipliers=(0.0, 0.0, 0.0),
    penalty: float = 1.0,
) -> tuple[float, np.ndarray]:
    """``F + sum(lam_c r_c + mu/2 r_c^2)`` and its gradient.

    ``r_c`` are the area, volume and phase-area residuals (achieved minus
    target). The gradient is with respect to the optimizer's free variables:
    interior ``x``, interior ``z`` and jump locations, component by component
    (pole heights follow their neighbours, see :func:`pin_poles`).
    """
    packing = _Packing(system.layouts, [c.n_segments for c in system.curves])
    problem = _Problem(params, constraints, _curve_scale(constraints, len(system)), 0.0, 0.0)
    v = packing.pack(system)
    ev = problem.evaluate(packing, v, np.asarray(multipliers, dtype=float), float(penalty))
    if ev is None:
        raise InvalidCurveError("system is outside the admissible set")
    return ev.value, ev.grad


# --- maintenance -----------------------------------------------------------


def reparametrization_maintenance(system: VesicleSystem) -> VesicleSystem:
    """Resample every component at constant speed, carrying jumps along."""
    comps = []
    for curve, layout in system:
        new = reparametrize_constant_speed(curve)
        new = GeneratorCurve(new.x, pin_poles(new.z)) if new.is_closed else new
        if layout.jumps:
            mapping = resampling_map(curve, new)
            jumps = tuple(float(t) for t in mapping(np.asarray(layout.jumps)))
            layout = PhaseLayout(layout.leading_value, jumps)
        comps.append((new, layout))
    return VesicleSystem(tuple(comps))


# --- the minimizer ---------------------------------------------------------


class _LBFGS:
    def __init__(self, memory: int):
        self.memory = memory
        self.pairs: list[tuple[np.ndarray, np.ndarray, float]] = []

    def reset(self):
        self.pairs.clear()

    def update(self, s: np.ndarray, y: np.ndarray):
        sy = float(np.dot(s, y))
        if sy > 1e-12 * float(np.dot(y, y)) and sy > 0:
            self.pairs.append((s, y, 1.0 / sy))
            if len(self.pairs) > self.memory:
                self.pairs.pop(0)

    def direction(self, g: np.ndarray) -> np.ndarray:
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * float(np.dot(s, q))
            alphas.append(a)
            q -= a * y
        s, y, _ = self.pairs[-1]
        q *= float(np.dot(s, y)) / float(np.dot(y, y))
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * float(np.dot(y, q))
            q += (a - b) * s
        return -q


def _curve_scale(constraints: ConstraintSet, m: int) -> float:
    return math.sqrt(constraints.total_area / (4 * math.pi * m))


def _halton_points(seed: int, start: int, count: int) -> np.ndarray:
    engine = qmc.Halton(d=2, scramble=True, seed=seed)
    if start:
        engine.fast_forward(start)
    return engine.random(count)


def minimize(
    system: VesicleSystem,
    params: MaterialParams,
    constraints: ConstraintSet,
    config: OptimizerConfig | None = None,
    resume=None,
) -> tuple[VesicleSystem, OptimizationReport]:
    """Minimize the energy of ``system`` under the three constraints.

    Parameters
    ----------
    resume : Checkpoint, optional
        Restores multipliers, penalty, iteration counter and the
        low-discrepancy sequence position from an earlier run.

    Returns
    -------
    system, report
        The final system and a report whose ``termination`` is
        ``"converged"`` (stationary and feasible), ``"budget"`` or
        ``"stalled"`` (no descent possible and constraints unmet within the
        budget).

    Raises
    ------
    DivergedError
        If the objective cannot be evaluated anywhere near the start.
    """
    config = config or OptimizerConfig()
    t_start = time.perf_counter()
    feas = feasibility_check(constraints)
    if not feas.feasible:
        raise InvalidConstraintsError("; ".join(feas.diagnostics))
    for i, curve in enumerate(system.curves):
        if not curve.is_closed:
            raise InvalidCurveError(f"component {i} is not closed to the axis at both ends")

    report = OptimizationReport()
    lam = np.zeros(3)
    mu = config.penalty0
    draws = 0
    outer_start = 0
    if resume is not None:
        lam = np.array(resume.multipliers, dtype=float)
        mu = float(resume.penalty)
        draws = int(resume.rng_state.get("draws", 0))
        outer_start = int(resume.iteration)

    m = len(system)
    scale = _curve_scale(constraints, m)
    n_min = min(c.n_segments for c in system.curves)
    min_sep = config.min_jump_separation if config.min_jump_separation is not None else default_min_separation(n_min)
    problem = _Problem(params, constraints, scale, config.axis_margin, min_sep, config.spacing_weight)

    def record(it, phase_id, ev, step):
        rel = ev.residuals / problem.res_scale
        report.iteration.append(it)
        report.inner_phase.append(phase_id)
        report.energy.append(ev.energy)
        report.objective.append(ev.value)
        report.res_area.append(float(rel[0]))
        report.res_volume.append(float(rel[1]))
        report.res_phase.append(float(rel[2]))
        report.step.append(step)
        if ev.barrier > 0:
            report.axis_barrier_active = True

    def finish(current: VesicleSystem, reason: str):
        report.termination = reason
        report.wall_time = time.perf_counter() - t_start
        report.multipliers = tuple(float(v) for v in lam)
        report.penalty = float(mu)
        return current, report

    if config.max_outer_iters == 0 or config.max_inner_iters == 0:
        packing = _Packing(system.layouts, [c.n_segments for c in system.curves])
        ev0 = problem.evaluate(packing, packing.pack(system), lam, mu, gradient=False)
        if ev0 is not None:
            record(0, 0, ev0, 0.0)
        return finish(system, "budget")

    current = VesicleSystem(tuple((GeneratorCurve(c.x, pin_poles(c.z)), l) for c, l in system))
    packing = _Packing(current.layouts, [c.n_segments for c in current.curves])
    v = packing.pack(current)
    ev = problem.evaluate(packing, v, lam, mu)
    if ev is None:
        raise DivergedError("objective is not finite at the starting point", report)
    record(0, 0, ev, 0.0)

    it = 0
    accepted_since_reparam = 0
    lbfgs = _LBFGS(config.memory)
    prev_res = math.inf
    reason = "budget"

    for outer in range(outer_start, outer_start + config.max_outer_iters):
        report.outer_iterations += 1
        phase_id = outer + 1
        if config.reparam_every and accepted_since_reparam >= config.reparam_every:
            before = ev.energy
            current = reparametrization_maintenance(packing.system(v))
            packing = _Packing(current.layouts, [c.n_segments for c in current.curves])
            v = packing.pack(current)
            ev_new = problem.evaluate(packing, v, lam, mu)
            if ev_new is not None:
                ev = ev_new
                drift = abs(ev.energy - before) / max(abs(before), 1e-300)
                report.reparametrizations.append((it, drift))
                log.debug("resampled at iteration %d, relative energy drift %.3e", it, drift)
            accepted_since_reparam = 0
        # the objective changes with the multipliers; re-evaluate at v
        ev = problem.evaluate(packing, v, lam, mu)
        energy_in = ev.energy
        lbfgs.reset()
        stationary = False
        stall = 0
        for inner in range(config.max_inner_iters):
            g = ev.grad
            gnorm = float(np.max(np.abs(g))) if g.size else 0.0
            if gnorm <= config.gradient_tol:
                stationary = True
                break
            if config.phase_move_period and inner > 0 and inner % config.phase_move_period == 0:
                moved, draws = _phase_moves(
                    packing, v, ev, problem, lam, mu, config, draws, it, report, min_sep
                )
                if moved is not None:
                    packing, v, ev = moved
                    lbfgs.reset()
                    it += 1
                    record(it, phase_id, ev, 0.0)
                    continue
            if lbfgs.pairs:
                d = lbfgs.direction(g)
                alpha = 1.0
                if float(np.dot(g, d)) >= 0:
                    lbfgs.reset()
            if not lbfgs.pairs:
                d = -g
                alpha = float(np.clip(1.0 / max(gnorm, 1e-300), 1e-8, 1e-1)) * scale
            slope = float(np.dot(g, d))
            new = None
            for _ in range(config.max_backtracks):
                trial_v = v + alpha * d
                trial = problem.evaluate(packing, trial_v, lam, mu)
                if trial is not None and trial.value <= ev.value + config.armijo * alpha * slope:
                    new = trial
                    break
                alpha *= 0.5
            if new is None:
                if lbfgs.pairs:
                    lbfgs.reset()
                    continue
                stationary = True  # no descent along the gradient at this resolution
                break
            it += 1
            accepted_since_reparam += 1
            s = trial_v - v
            lbfgs.update(s, new.grad - ev.grad)
            decrease = ev.value - new.value
            v, ev = trial_v, new
            record(it, phase_id, ev, float(alpha * np.max(np.abs(d))))
            if decrease <= config.step_tol * max(1.0, abs(ev.value)):
                stall += 1
                if stall >= 5:
                    stationary = True
                    break
            else:
                stall = 0

        rel = np.abs(ev.residuals) / problem.res_scale
        res = float(np.max(rel))
        settled = abs(ev.energy - energy_in) <= config.energy_tol * max(abs(ev.energy), 1e-300)
        log.debug("outer %d: it=%d E=%.10g res=%.3e mu=%.1e", outer, it, ev.energy, res, mu)
        done = res <= config.constraint_tol and (stationary or settled)
        if not done:
            if config.multiplier_update == "first-order":
                lam = lam + mu * ev.residuals
            if res > config.constraint_tol and res > 0.25 * prev_res:
                mu = min(mu * config.penalty_growth, config.max_penalty)
            prev_res = res
        # written after the updates so a resumed run continues where this one stops
        if config.checkpoint_path and config.checkpoint_every and (outer + 1) % config.checkpoint_every == 0:
            _write_checkpoint(config, packing.system(v), params, constraints, lam, mu, outer + 1, draws)
        if done:
            reason = "converged"
            break
    else:
        reason = "budget"

    return finish(packing.system(v), reason)


def _write_checkpoint(config, system, params, constraints, lam, mu, iteration, draws):
    from .meshio import Checkpoint, write_checkpoint

    cp = Checkpoint(
        system=system,
        params=params,
        constraints=constraints,
        multipliers=tuple(float(x) for x in lam),
        penalty=float(mu),
        iteration=iteration,
        rng_state={"seed": config.seed, "draws": draws},
        config=asdict(config),
    )
    write_checkpoint(cp, config.checkpoint_path)


def _phase_moves(packing, v, ev, problem, lam, mu, config, draws, it, report, min_sep):
    """Propose discrete phase edits; return the best strictly improving one."""
    parts = packing.unpack(v)
    layouts = [PhaseLayout(lead, tuple(j)) for (_, _, j), lead in zip(parts, packing.leading)]
    candidates = []
    for k, layout in enumerate(layouts):
        options = []
        for j, tj in enumerate(layout.jumps):
            for delta in (-0.02, 0.02):
                options.append(("move", f"jump {j} by {delta:+g}", lambda l=layout, j=j, d=delta: move_jump(l, j, l.jumps[j] + d, min_sep)))
        for j in range(len(layout.jumps) - 1):
            options.append(("remove", f"jumps {j},{j + 1}", lambda l=layout, j=j: remove_jump_pair(l, j)))
        if layout.jumps:
            last = len(layout.jumps)
            options.append(("toggle", "segment 0", lambda l=layout: toggle_segment(l, 0)))
            options.append(("toggle", f"segment {last}", lambda l=layout, s=last: toggle_segment(l, s)))
        n_insert = max(config.phase_move_budget - len(options), 1)
        pts = _halton_points(config.seed, draws, n_insert)
        draws += n_insert
        for centre, width in pts:
            half = 0.5 * (2 * min_sep + width * 0.1)
            a, b = centre - half, centre + half
            options.append(("insert", f"({a:.6g}, {b:.6g})", lambda l=layout, a=a, b=b: insert_jump_pair(l, a, b, min_sep, config.max_jumps)))
        for kind, detail, make in options[: max(config.phase_move_budget, 1)]:
            candidates.append((k, kind, detail, make))

    best = None
    for k, kind, detail, make in candidates:
        try:
            new_layout = make()
        except PhaseError:
            report.phase_moves.append(PhaseMove(it, k, kind, detail, False, math.nan))
            continue
        new_layouts = list(layouts)
        new_layouts[k] = new_layout
        new_packing = _Packing(new_layouts, packing.n_segments)
        blocks = []
        for (x, z, _), layout in zip(parts, new_layouts):
            blocks.append(np.concatenate([x[1:-1], z[1:-1], layout.jumps]))
        new_v = np.concatenate(blocks)
        trial = problem.evaluate(new_packing, new_v, lam, mu)
        delta = math.inf if trial is None else trial.value - ev.value
        report.phase_moves.append(PhaseMove(it, k, kind, detail, False, delta))
        if trial is not None and delta < 0 and (best is None or delta < best[0]):
            best = (delta, len(report.phase_moves) - 1, new_packing, new_v, trial)
    if best is None:
        return None, draws
    _, idx, new_packing, new_v, trial = best
    report.phase_moves[idx] = replace(report.phase_moves[idx], accepted=True)
    return (new_packing, new_v, trial), draws
