"""Numerical audits of structural inequalities.

* a coercivity certificate bounding the energy from below by the integrated
  squared second fundamental form,
* the feasibility test for total-area / phase-area / volume targets,
* the Gauss-Bonnet defect of a closed genus-0 generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import InvalidParametersError, MaterialParams, VesicleSystem, evaluate_component
from .geometry import GeneratorCurve, InvalidCurveError, local_geometry, trapezoid_weights

__all__ = [
    "InvalidConstraintsError",
    "ConstraintSet",
    "CoercivityCertificate",
    "CoercivityReport",
    "FeasibilityReport",
    "coercivity_c1",
    "coercivity_c2",
    "coercivity_constants",
    "coercivity_check",
    "feasibility_check",
    "volume_bound",
    "gauss_bonnet_defect",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class InvalidConstraintsError(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintSet:
    """Targets for total area, phase-A area and enclosed volume."""

    total_area: float
    phase_area: float
    volume: float

    def __post_init__(self):
        for name in ("total_area", "phase_area", "volume"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidConstraintsError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, float(value))
        if not self.total_area > 0:
            raise InvalidConstraintsError(f"total area must be positive, got {self.total_area}")


# --- coercivity ------------------------------------------------------------


def coercivity_c1(kappa_H: float, epsilon: float) -> float:
    return kappa_H / (2.0 * epsilon)


def coercivity_c2(kappa_H: float, kappa_G: float, epsilon: float) -> float:
    return (kappa_H - abs(kappa_H + kappa_G * (1.0 + epsilon))) / (2.0 * (1.0 + epsilon))


@dataclass(frozen=True)
class CoercivityCertificate:
    epsilon: float
    c1_A: float
    c1_B: float
    c2_A: float
    c2_B: float
    C: float
    offset: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("epsilon", "c1_A", "c1_B", "c2_A", "c2_B", "C", "offset")}


def _epsilon_upper(params: MaterialParams) -> float:
    # (1 + eps) * kappa_G / kappa_H must stay above -2 in both phases
    ratios = (params.kappa_G_A / params.kappa_H_A, params.kappa_G_B / params.kappa_H_B)
    return min(-2.0 / r - 1.0 for r in ratios)


def _golden_max(f, a: float, b: float, tol: float) -> float:
    """Golden-section search for the maximizer of a unimodal ``f`` on [a, b].

    Near-ties move the bracket to the right, so on a plateau of maxima the
    search ends at its right edge.
    """
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd + 1e-13 * max(abs(fc), abs(fd), 1e-300):
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def coercivity_constants(
    params: MaterialParams, epsilon: float | None = None, tol: float = 1e-8
) -> CoercivityCertificate:
    """Constants of the lower bound ``F >= C int (k1^2 + k2^2) dS - offset |S|``.

    Per phase, ``c1 = kappa_H / (2 eps)`` and
    ``c2 = (kappa_H - |kappa_H + kappa_G (1 + eps)|) / (2 (1 + eps))``.
    ``C = min(c2_A, c2_B)`` and ``offset = max(c1_A H0_A^2, c1_B H0_B^2)``.

    If ``epsilon`` is not given it is chosen by golden-section search to
    maximize ``C`` over the admissible interval; among maximizers the
    largest ``epsilon`` is taken, which keeps ``c1`` (and the offset) small.
    """
    if not isinstance(params, MaterialParams):
        raise InvalidParametersError("params must be MaterialParams")
    eps_max = _epsilon_upper(params)

    def C_of(eps: float) -> float:
        return min(
            coercivity_c2(params.kappa_H_A, params.kappa_G_A, eps),
            coercivity_c2(params.kappa_H_B, params.kappa_G_B, eps),
        )

    if epsilon is None:
        epsilon = _golden_max(C_of, tol, eps_max - tol, tol)
    elif not 0.0 < epsilon < eps_max:
        raise InvalidParametersError(
            f"epsilon = {epsilon} outside the admissible interval (0, {eps_max})"
        )
    c1_A = coercivity_c1(params.kappa_H_A, epsilon)
    c1_B = coercivity_c1(params.kappa_H_B, epsilon)
    c2_A = coercivity_c2(params.kappa_H_A, params.kappa_G_A, epsilon)
    c2_B = coercivity_c2(params.kappa_H_B, params.kappa_G_B, epsilon)
    return CoercivityCertificate(
        epsilon=epsilon,
        c1_A=c1_A,
        c1_B=c1_B,
        c2_A=c2_A,
        c2_B=c2_B,
        C=min(c2_A, c2_B),
        offset=max(c1_A * params.H0_A**2, c1_B * params.H0_B**2),
    )


@dataclass(frozen=True)
class CoercivityReport:
    """Both sides of the coercivity estimate for one system.

    ``rhs`` is ``C (Q - |S|) - offset |S|`` and ``rhs_sharp`` is
    ``C Q - offset |S|`` where ``Q = int (k1^2 + k2^2) dS``; ``satisfied``
    tests ``lhs >= rhs_sharp``, which implies ``lhs >= rhs``.
    """

    lhs: float
    rhs: float
    rhs_sharp: float
    curvature_l2: float
    area: float
    satisfied: bool
    gap: float
    certificate: CoercivityCertificate


def coercivity_check(
    system: VesicleSystem, params: MaterialParams, epsilon: float | None = None
) -> CoercivityReport:
    cert = coercivity_constants(params, epsilon)
    lhs = q = area = 0.0
    for curve, layout in system:
        ev = evaluate_component(curve.x, curve.z, layout, params)
        lhs += ev.energy
        q += ev.curvature_l2
        area += ev.area
    rhs = cert.C * (q - area) - cert.offset * area
    rhs_sharp = cert.C * q - cert.offset * area
    # both sides are positive-weight sums of the same nodal values; allow
    # only accumulated rounding
    slack = 1e-12 * max(abs(lhs), abs(cert.C * q), abs(cert.offset * area), 1.0)
    gap = lhs - rhs_sharp
    return CoercivityReport(
        lhs=lhs,
        rhs=rhs,
        rhs_sharp=rhs_sharp,
        curvature_l2=q,
        area=area,
        satisfied=bool(gap >= -slack),
        gap=gap,
        certificate=cert,
    )


# --- feasibility -----------------------------------------------------------


BOUND_RTOL = 1e-12


def volume_bound(total_area: float) -> float:
    """Volume of the round sphere of the given area."""
    return total_area**1.5 / (6.0 * math.sqrt(math.pi))


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    volume_bound: float
    reduced_volume: float
    diagnostics: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.feasible


def feasibility_check(constraints: ConstraintSet) -> FeasibilityReport:
    """Check ``V < A^(3/2) / (6 sqrt(pi))`` and ``0 <= Pi_A <= A``."""
    A, P, V = constraints.total_area, constraints.phase_area, constraints.volume
    if not A > 0:
        raise InvalidConstraintsError(f"total area must be positive, got {A}")
    bound = volume_bound(A)
    diagnostics = []
    # the round sphere computed another way can land an ulp or two below the bound
    if not V < bound * (1.0 - BOUND_RTOL):
        diagnostics.append(
            f"volume {V!r} is not below the isoperimetric bound {bound!r}"
        )
    if not 0.0 <= P <= A:
        diagnostics.append(f"phase area {P!r} outside [0, {A!r}]")
    return FeasibilityReport(
        feasible=not diagnostics,
        volume_bound=bound,
        reduced_volume=V / bound,
        diagnostics=tuple(diagnostics),
    )


# --- Gauss-Bonnet ----------------------------------------------------------


def gauss_bonnet_defect(curve: GeneratorCurve) -> float:
    """``|int K dS - 4 pi|`` for a generator closed to the axis at both ends."""
    if not curve.is_closed:
        raise InvalidCurveError("Gauss-Bonnet defect needs a curve closed to the axis at both ends")
    g = local_geometry(curve.x, curve.z)
    w = trapezoid_weights(curve.n_segments)
    total = 2 * np.pi * float(np.dot(w, g.k1 * g.k2 * g.density))
    return abs(total - 4 * np.pi)
