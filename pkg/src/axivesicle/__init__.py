"""Multiphase Canham-Helfrich energies of axisymmetric vesicles.

A vesicle component is the surface obtained by revolving a sampled generator
curve ``t -> (x(t), z(t))`` about the z-axis, together with a two-valued
phase layout along the curve. The package evaluates the bending, Gaussian
and line-tension energies of such systems with exact gradients, audits the
coercivity and feasibility inequalities, minimizes the energy under area,
phase-area and volume constraints and exports triangle meshes.
"""

from .analysis import (
    ConstraintSet,
    coercivity_check,
    coercivity_constants,
    feasibility_check,
    gauss_bonnet_defect,
)
from .energy import (
    EnergyBreakdown,
    MaterialParams,
    VesicleSystem,
    energy_gradient,
    helfrich_energy,
    system_energy,
)
from .geometry import GeneratorCurve, principal_curvatures, sphere_curve, spheroid_curve
from .optimizer import OptimizerConfig, init_system, minimize
from .phase import PhaseLayout

__version__ = "0.1.0"

__all__ = [
    "ConstraintSet",
    "EnergyBreakdown",
    "GeneratorCurve",
    "MaterialParams",
    "OptimizerConfig",
    "PhaseLayout",
    "VesicleSystem",
    "coercivity_check",
    "coercivity_constants",
    "energy_gradient",
    "feasibility_check",
    "gauss_bonnet_defect",
    "helfrich_energy",
    "init_system",
    "minimize",
    "principal_curvatures",
    "sphere_curve",
    "spheroid_curve",
    "system_energy",
]
