"""Multiphase Canham-Helfrich energy of axisymmetric surface-phase couples.

For a generating curve and a phase layout the energy is the sum of

* bending:   pi  * int kappa_H(phi) (k1 + k2 - H0(phi))^2 x |v| dt
* gaussian:  2pi * int kappa_G(phi) k1 k2 x |v| dt
* line:      2pi * sigma * sum over jumps of x(t_j)

Bulk integrals use one rule throughout: nodal integrands are interpolated
linearly between nodes and integrated exactly against the phase indicator,
so a cell straddling a jump is split at the jump. With no jumps this is the
trapezoid rule. Gradients differentiate exactly this discrete energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    GeneratorCurve,
    d1_adjoint,
    d2_adjoint,
    local_geometry,
    surface_area,
    trapezoid_weights,
)
from .phase import PhaseLayout, indicator_weights, interpolate, interpolation_slope

__all__ = [
    "InvalidParametersError",
    "InvalidSystemError",
    "MaterialParams",
    "EnergyBreakdown",
    "VesicleSystem",
    "coeffs_at",
    "bending_energy",
    "gaussian_energy",
    "line_energy",
    "helfrich_energy",
    "system_energy",
    "energy_gradient",
    "ComponentEvaluation",
    "evaluate_component",
]


class InvalidParametersError(ValueError):
    pass


class InvalidSystemError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialParams:
    """Phase-dependent elastic moduli and line tension.

    Suffix ``_A`` refers to phase A (``phi == 1``), ``_B`` to phase B.
    Coercivity requires ``kappa_H > 0`` and ``kappa_G / kappa_H`` in
    ``(-2, 0)`` for both phases; ``sigma`` must be positive.
    """

    kappa_H_A: float = 1.0
    kappa_H_B: float = 1.0
    kappa_G_A: float = -1.0
    kappa_G_B: float = -1.0
    H0_A: float = 0.0
    H0_B: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        for name in ("kappa_H_A", "kappa_H_B", "kappa_G_A", "kappa_G_B", "H0_A", "H0_B", "sigma"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise InvalidParametersError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        for phase in ("A", "B"):
            kh = getattr(self, f"kappa_H_{phase}")
            kg = getattr(self, f"kappa_G_{phase}")
            if not kh > 0:
                raise InvalidParametersError(f"kappa_H_{phase} must be positive, got {kh}")
            if not -2.0 < kg / kh < 0.0:
                raise InvalidParametersError(
                    f"kappa_G_{phase}/kappa_H_{phase} = {kg / kh} is outside (-2, 0)"
                )
        if not self.sigma > 0:
            raise InvalidParametersError(f"line tension sigma must be positive, got {self.sigma}")

    @classmethod
    def uniform(cls, kappa_H=1.0, kappa_G=-1.0, H0=0.0, sigma=1.0) -> "MaterialParams":
        """Identical coefficients in both phases."""
        return cls(kappa_H, kappa_H, kappa_G, kappa_G, H0, H0, sigma)

    def phase(self, value: int) -> tuple[float, float, float]:
        return coeffs_at(self, value)


def coeffs_at(params: MaterialParams, phi: float) -> tuple[float, float, float]:
    """``(kappa_H, kappa_G, H0)`` interpolated linearly in ``phi``."""
    if phi == 1:
        return params.kappa_H_A, params.kappa_G_A, params.H0_A
    if phi == 0:
        return params.kappa_H_B, params.kappa_G_B, params.H0_B
    return (
        phi * params.kappa_H_A + (1 - phi) * params.kappa_H_B,
        phi * params.kappa_G_A + (1 - phi) * params.kappa_G_B,
        phi * params.H0_A + (1 - phi) * params.H0_B,
    )


@dataclass(frozen=True)
class EnergyBreakdown:
    bending: float
    gaussian: float
    line: float
    components: tuple["EnergyBreakdown", ...] = field(default=(), compare=False)

    @property
    def total(self) -> float:
        return self.bending + self.gaussian + self.line

    def as_dict(self) -> dict:
        return {
            "bending": self.bending,
            "gaussian": self.gaussian,
            "line": self.line,
            "total": self.total,
        }


@dataclass(frozen=True, eq=False)
class VesicleSystem:
    """Ordered family of ``(curve, layout)`` couples."""

    components: tuple[tuple[GeneratorCurve, PhaseLayout], ...]

    def __post_init__(self):
        comps = tuple((c, l) for c, l in self.components)
        if not comps:
            raise InvalidSystemError("a system needs at least one component")
        for i, (curve, layout) in enumerate(comps):
            if not isinstance(curve, GeneratorCurve) or not isinstance(layout, PhaseLayout):
                raise InvalidSystemError(f"component {i} is not a (GeneratorCurve, PhaseLayout) pair")
            if np.any(curve.x[1:-1] == 0.0):
                raise InvalidSystemError(f"component {i} touches the axis at an interior node")
            area = surface_area(curve)
            if not (np.isfinite(area) and area > 0):
                raise InvalidSystemError(f"component {i} is degenerate (area {area})")
        object.__setattr__(self, "components", comps)

    @classmethod
    def single(cls, curve: GeneratorCurve, layout: PhaseLayout | None = None) -> "VesicleSystem":
        return cls(((curve, layout if layout is not None else PhaseLayout.constant(1)),))

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    @property
    def curves(self) -> list[GeneratorCurve]:
        return [c for c, _ in self.components]

    @property
    def layouts(self) -> list[PhaseLayout]:
        return [l for _, l in self.components]


# --- core evaluation -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ComponentEvaluation:
    """Energies, constraint functionals and (optionally) their gradients.

    Gradient arrays for node coordinates have shape ``(N+1, 2)`` (x, z);
    jump gradients have one entry per jump.
    """

    bending: float
    gaussian: float
    line: float
    area: float
    volume: float
    phase_area: float
    curvature_l2: float  # int (k1^2 + k2^2) dS
    energy_grad: np.ndarray | None = None
    energy_jump_grad: np.ndarray | None = None
    area_grad: np.ndarray | None = None
    volume_grad: np.ndarray | None = None
    phase_area_grad: np.ndarray | None = None
    phase_area_jump_grad: np.ndarray | None = None

    @property
    def energy(self) -> float:
        return self.bending + self.gaussian + self.line

    @property
    def breakdown(self) -> EnergyBreakdown:
        return EnergyBreakdown(self.bending, self.gaussian, self.line)


def _interp_weights(t: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pos = np.asarray(t, dtype=float) * n
    k = np.clip(np.floor(pos).astype(int), 0, n - 1)
    u = pos - k
    return k, 1.0 - u, u


def evaluate_component(
    x: np.ndarray,
    z: np.ndarray,
    layout: PhaseLayout,
    params: MaterialParams,
    gradient: bool = False,
) -> ComponentEvaluation:
    """Evaluate one couple from raw node arrays.

    This is the hot path of the optimizer; public wrappers below take
    :class:`GeneratorCurve` objects.
    """
    n = x.size - 1
    h = 1.0 / n
    g = local_geometry(x, z)
    P = g.density
    H = g.k1 + g.k2
    K = g.k1 * g.k2
    jumps = np.asarray(layout.jumps, dtype=float)
    seg_values = layout.segment_values

    trap = trapezoid_weights(n)
    weights = {1: indicator_weights(layout, n, 1), 0: indicator_weights(layout, n, 0)}
    bend_nodal, gauss_nodal = {}, {}
    bending = gaussian = 0.0
    for value, w in weights.items():
        kh, kg, h0 = coeffs_at(params, value)
        bend_nodal[value] = np.pi * kh * (H - h0) ** 2 * P
        gauss_nodal[value] = 2 * np.pi * kg * K * P
        bending += float(np.dot(w, bend_nodal[value]))
        gaussian += float(np.dot(w, gauss_nodal[value]))

    line = float(2 * np.pi * params.sigma * np.sum(interpolate(x, jumps))) if jumps.size else 0.0
    area = float(2 * np.pi * np.dot(trap, P))
    phase_area = float(2 * np.pi * np.dot(weights[1], P))
    volume = float(np.pi * np.dot(trap, x**2 * g.vz))
    curvature_l2 = float(2 * np.pi * np.dot(trap, (g.k1**2 + g.k2**2) * P))

    if not gradient:
        return ComponentEvaluation(bending, gaussian, line, area, volume, phase_area, curvature_l2)

    s = g.speed
    s2, s3 = s * s, s**3
    interior = ~g.pole
    # sensitivities of k1, k2 and P to the local stencil values
    dk1_dvx = g.az / s3 - 3 * g.k1 * g.vx / s2
    dk1_dvz = -g.ax / s3 - 3 * g.k1 * g.vz / s2
    dk1_dax = -g.vz / s3
    dk1_daz = g.vx / s3
    with np.errstate(divide="ignore", invalid="ignore"):
        dk2_dx = np.where(interior, -g.k2 / x, 0.0)
        dk2_dvx = np.where(interior, -g.k2 * g.vx / s2, dk1_dvx)
        dk2_dvz = np.where(interior, 1.0 / (x * s) - g.k2 * g.vz / s2, dk1_dvz)
    dk2_dax = np.where(interior, 0.0, dk1_dax)
    dk2_daz = np.where(interior, 0.0, dk1_daz)
    dP_dx = s
    dP_dvx = x * g.vx / s
    dP_dvz = x * g.vz / s

    aH = np.zeros(n + 1)
    aP = np.zeros(n + 1)
    aK = np.zeros(n + 1)
    for value, w in weights.items():
        kh, kg, h0 = coeffs_at(params, value)
        aH += w * (2 * np.pi * kh * (H - h0) * P)
        aP += w * (np.pi * kh * (H - h0) ** 2 + 2 * np.pi * kg * K)
        aK += w * (2 * np.pi * kg * P)
    c1 = aH + aK * g.k2
    c2 = aH + aK * g.k1

    gx_loc = c2 * dk2_dx + aP * dP_dx
    gvx = c1 * dk1_dvx + c2 * dk2_dvx + aP * dP_dvx
    gvz = c1 * dk1_dvz + c2 * dk2_dvz + aP * dP_dvz
    gax = c1 * dk1_dax + c2 * dk2_dax
    gaz = c1 * dk1_daz + c2 * dk2_daz
    egx = gx_loc + d1_adjoint(gvx, h) + d2_adjoint(gax, h)
    egz = d1_adjoint(gvz, h) + d2_adjoint(gaz, h)

    jump_grad = np.zeros(jumps.size)
    if jumps.size:
        k, wl, wr = _interp_weights(jumps, n)
        coef = 2 * np.pi * params.sigma
        np.add.at(egx, k, coef * wl)
        np.add.at(egx, k + 1, coef * wr)
        jump_grad += coef * interpolation_slope(x, jumps)
        for j, tj in enumerate(jumps):
            left, right = seg_values[j], seg_values[j + 1]
            lval = interpolate(bend_nodal[left] + gauss_nodal[left], tj)
            rval = interpolate(bend_nodal[right] + gauss_nodal[right], tj)
            jump_grad[j] += float(lval - rval)

    def _measure_grad(w: np.ndarray) -> np.ndarray:
        gx = 2 * np.pi * (w * dP_dx + d1_adjoint(w * dP_dvx, h))
        gz = 2 * np.pi * d1_adjoint(w * dP_dvz, h)
        return np.column_stack([gx, gz])

    area_grad = _measure_grad(trap)
    phase_grad = _measure_grad(weights[1])
    phase_jump_grad = np.array(
        [
            (1.0 if seg_values[j] == 1 else -1.0) * 2 * np.pi * float(interpolate(P, tj))
            for j, tj in enumerate(jumps)
        ]
    )
    volume_grad = np.column_stack(
        [2 * np.pi * trap * x * g.vz, d1_adjoint(np.pi * trap * x**2, h)]
    )
    return ComponentEvaluation(
        bending, gaussian, line, area, volume, phase_area, curvature_l2,
        energy_grad=np.column_stack([egx, egz]),
        energy_jump_grad=jump_grad,
        area_grad=area_grad,
        volume_grad=volume_grad,
        phase_area_grad=phase_grad,
        phase_area_jump_grad=phase_jump_grad,
    )


# --- public operations -----------------------------------------------------


def _eval(curve: GeneratorCurve, layout: PhaseLayout | None, params: MaterialParams, gradient=False):
    if layout is None:
        layout = PhaseLayout.constant(1)
    return evaluate_component(curve.x, curve.z, layout, params, gradient)


def bending_energy(curve: GeneratorCurve, layout: PhaseLayout | None, params: MaterialParams) -> float:
    return _eval(curve, layout, params).bending


def gaussian_energy(curve: GeneratorCurve, layout: PhaseLayout | None, params: MaterialParams) -> float:
    return _eval(curve, layout, params).gaussian


def line_energy(curve: GeneratorCurve, layout: PhaseLayout | None, params: MaterialParams) -> float:
    if layout is None or not layout.jumps:
        return 0.0
    return float(2 * np.pi * params.sigma * np.sum(interpolate(curve.x, np.asarray(layout.jumps))))


def helfrich_energy(
    curve: GeneratorCurve, layout: PhaseLayout | None, params: MaterialParams
) -> EnergyBreakdown:
    return _eval(curve, layout, params).breakdown


def system_energy(system: VesicleSystem, params: MaterialParams) -> EnergyBreakdown:
    """Componentwise sum; summation runs in component order."""
    parts = tuple(helfrich_energy(c, l, params) for c, l in system)
    return EnergyBreakdown(
        bending=sum(p.bending for p in parts),
        gaussian=sum(p.gaussian for p in parts),
        line=sum(p.line for p in parts),
        components=parts,
    )


def energy_gradient(
    curve: GeneratorCurve, layout: PhaseLayout | None, params: MaterialParams
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of the discrete energy.

    Returns
    -------
    node_grad : ndarray, shape (N+1, 2)
        Derivative with respect to each node's ``(x, z)``. Entries for ``x``
        at an axis-closed endpoint are one-sided (the pole is pinned in
        practice).
    jump_grad : ndarray, shape (J,)
        Derivative with respect to each jump location.
    """
    ev = _eval(curve, layout, params, gradient=True)
    return ev.energy_grad, ev.energy_jump_grad
