"""Discrete generating curves of axisymmetric surfaces.

A surface of revolution is generated by rotating a planar curve
``t -> (x(t), z(t))``, ``t in [0, 1]``, about the z-axis. Curves are stored
as samples on the uniform grid ``t_i = i / N``. Derivatives use second-order
finite differences (central in the interior, one-sided at the ends) and
integrals use the composite trapezoid rule, so every derived quantity is
second-order accurate on smooth curves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

__all__ = [
    "InvalidCurveError",
    "AxisTouchError",
    "GeneratorCurve",
    "CurvatureField",
    "AdmissibilityReport",
    "derivatives",
    "principal_curvatures",
    "surface_area",
    "enclosed_volume",
    "admissibility_check",
    "reparametrize_constant_speed",
    "resampling_map",
    "curve_from_function",
    "sphere_curve",
    "spheroid_curve",
    "MIN_SEGMENTS",
    "ORTHOGONALITY_TOL",
]

MIN_SEGMENTS = 8
ORTHOGONALITY_TOL = 1e-6


class InvalidCurveError(ValueError):
    """Raised when samples do not describe a valid generating curve."""


class AxisTouchError(InvalidCurveError):
    """Raised when an interior node lies on the axis of revolution."""


@dataclass(frozen=True, eq=False)
class GeneratorCurve:
    """Generating curve sampled at ``t_i = i/N``, ``i = 0..N``.

    ``x`` is the distance from the axis, ``z`` the height. An endpoint with
    ``x == 0`` exactly is closed to the axis; a closed genus-0 component has
    both endpoints on the axis. Interior axis contact is representable (so it
    can be diagnosed by :func:`admissibility_check`) but curvature evaluation
    refuses it.
    """

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        z = np.array(self.z, dtype=float)
        if x.ndim != 1 or x.shape != z.shape:
            raise InvalidCurveError("x and z must be 1-D arrays of equal length")
        if x.size - 1 < MIN_SEGMENTS:
            raise InvalidCurveError(
                f"need at least {MIN_SEGMENTS} segments, got {x.size - 1}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            raise InvalidCurveError("coordinates must be finite")
        if np.any(x < 0):
            raise InvalidCurveError(
                f"curve leaves the half-plane x >= 0 at node {int(np.argmax(x < 0))}"
            )
        chord = np.hypot(np.diff(x), np.diff(z))
        if np.any(chord <= 0):
            raise InvalidCurveError(
                f"degenerate segment {int(np.argmax(chord <= 0))} (zero chord length)"
            )
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def n_segments(self) -> int:
        return self.x.size - 1

    @property
    def h(self) -> float:
        return 1.0 / self.n_segments

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_segments + 1) / self.n_segments

    @property
    def samples(self) -> np.ndarray:
        """``(N+1, 2)`` array of ``(x, z)`` pairs."""
        return np.column_stack([self.x, self.z])

    @property
    def axis_closed_start(self) -> bool:
        return bool(self.x[0] == 0.0)

    @property
    def axis_closed_end(self) -> bool:
        return bool(self.x[-1] == 0.0)

    @property
    def is_closed(self) -> bool:
        return self.axis_closed_start and self.axis_closed_end

    def scaled(self, s: float) -> "GeneratorCurve":
        return GeneratorCurve(s * self.x, s * self.z)

    def translated(self, dz: float) -> "GeneratorCurve":
        return GeneratorCurve(self.x, self.z + dz)

    def reversed(self) -> "GeneratorCurve":
        return GeneratorCurve(self.x[::-1], self.z[::-1])


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Per-node principal curvatures, speed and area quadrature weight."""

    k1: np.ndarray
    k2: np.ndarray
    speed: np.ndarray
    weight: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        """Sum of principal curvatures (twice the usual mean curvature)."""
        return self.k1 + self.k2

    @property
    def gaussian(self) -> np.ndarray:
        return self.k1 * self.k2


@dataclass(frozen=True)
class AdmissibilityReport:
    violations: tuple[str, ...] = field(default_factory=tuple)

    @property
    def admissible(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.admissible


# --- finite-difference stencils and their adjoints -------------------------
#
# The adjoints are used to pull per-node sensitivities back onto the node
# coordinates when differentiating discrete energies.


def d1(f: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return out


def d1_adjoint(g: np.ndarray, h: float) -> np.ndarray:
    r = np.zeros_like(g)
    gi = g[1:-1] / (2 * h)
    r[2:] += gi
    r[:-2] -= gi
    g0, gn = g[0] / (2 * h), g[-1] / (2 * h)
    r[0] -= 3 * g0
    r[1] += 4 * g0
    r[2] -= g0
    r[-1] += 3 * gn
    r[-2] -= 4 * gn
    r[-3] += gn
    return r


def d2(f: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(f)
    h2 = h * h
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h2
    out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h2
    out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h2
    return out


def d2_adjoint(g: np.ndarray, h: float) -> np.ndarray:
    r = np.zeros_like(g)
    h2 = h * h
    gi = g[1:-1] / h2
    r[2:] += gi
    r[1:-1] -= 2 * gi
    r[:-2] += gi
    g0, gn = g[0] / h2, g[-1] / h2
    r[0] += 2 * g0
    r[1] -= 5 * g0
    r[2] += 4 * g0
    r[3] -= g0
    r[-1] += 2 * gn
    r[-2] -= 5 * gn
    r[-3] += 4 * gn
    r[-4] -= gn
    return r


def trapezoid_weights(n_segments: int) -> np.ndarray:
    w = np.full(n_segments + 1, 1.0 / n_segments)
    w[0] = w[-1] = 0.5 / n_segments
    return w


@dataclass(frozen=True, eq=False)
class LocalGeometry:
    """Per-node quantities shared by energies, constraints and gradients.

    ``density`` is ``x |v|``, the area element divided by ``2 pi``. At
    axis-closed endpoints ``k2`` is replaced by ``k1`` (umbilical pole).
    """

    x: np.ndarray
    vx: np.ndarray
    vz: np.ndarray
    ax: np.ndarray
    az: np.ndarray
    speed: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    density: np.ndarray
    pole: np.ndarray  # bool mask of axis-closed endpoints


def local_geometry(x: np.ndarray, z: np.ndarray) -> LocalGeometry:
    n = x.size - 1
    h = 1.0 / n
    vx, vz = d1(x, h), d1(z, h)
    ax, az = d2(x, h), d2(z, h)
    speed = np.hypot(vx, vz)
    if np.any(speed == 0):
        raise InvalidCurveError(
            f"zero velocity at node {int(np.argmax(speed == 0))}"
        )
    k1 = (az * vx - ax * vz) / speed**3
    pole = np.zeros(n + 1, dtype=bool)
    pole[0] = x[0] == 0.0
    pole[-1] = x[-1] == 0.0
    interior_axis = np.flatnonzero(x[1:-1] == 0.0)
    if interior_axis.size:
        raise AxisTouchError(
            f"interior node {int(interior_axis[0]) + 1} lies on the axis"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        k2 = np.where(pole, k1, vz / (x * speed))
    return LocalGeometry(
        x=x, vx=vx, vz=vz, ax=ax, az=az, speed=speed,
        k1=k1, k2=k2, density=x * speed, pole=pole,
    )


# --- public operations -----------------------------------------------------


def derivatives(curve: GeneratorCurve) -> tuple[np.ndarray, np.ndarray]:
    """Velocity and acceleration at every node, each of shape ``(N+1, 2)``."""
    h = curve.h
    vel = np.column_stack([d1(curve.x, h), d1(curve.z, h)])
    acc = np.column_stack([d2(curve.x, h), d2(curve.z, h)])
    return vel, acc


def principal_curvatures(curve: GeneratorCurve) -> CurvatureField:
    """Meridian (``k1``) and parallel (``k2``) curvatures at every node.

    Raises
    ------
    AxisTouchError
        If an interior node lies on the axis.
    """
    g = local_geometry(curve.x, curve.z)
    weight = 2 * np.pi * g.density * trapezoid_weights(curve.n_segments)
    return CurvatureField(k1=g.k1, k2=g.k2, speed=g.speed, weight=weight)


def surface_area(curve: GeneratorCurve) -> float:
    h = curve.h
    speed = np.hypot(d1(curve.x, h), d1(curve.z, h))
    w = trapezoid_weights(curve.n_segments)
    return float(2 * np.pi * np.dot(w, curve.x * speed))


def enclosed_volume(curve: GeneratorCurve) -> float:
    """Signed enclosed volume; positive for counterclockwise generators."""
    vz = d1(curve.z, curve.h)
    w = trapezoid_weights(curve.n_segments)
    return float(np.pi * np.dot(w, curve.x**2 * vz))


def admissibility_check(
    curve: GeneratorCurve, orthogonality_tol: float = ORTHOGONALITY_TOL
) -> AdmissibilityReport:
    """List the ways ``curve`` falls outside the admissible class.

    Never raises; an empty report means admissible.
    """
    violations = []
    touches = np.flatnonzero(curve.x[1:-1] == 0.0) + 1
    if touches.size:
        nodes = ", ".join(str(int(i)) for i in touches[:5])
        violations.append(f"interior axis touch at node(s) {nodes}")
    h = curve.h
    vx, vz = d1(curve.x, h), d1(curve.z, h)
    speed = np.hypot(vx, vz)
    for name, idx, closed in (
        ("start", 0, curve.axis_closed_start),
        ("end", -1, curve.axis_closed_end),
    ):
        if closed:
            ratio = abs(vz[idx]) / speed[idx]
            if not ratio <= orthogonality_tol:
                violations.append(
                    f"non-orthogonal axis meeting at {name} "
                    f"(|z'|/|v| = {ratio:.3e} > {orthogonality_tol:.1e})"
                )
    ax, az = d2(curve.x, h), d2(curve.z, h)
    with np.errstate(all="ignore"):
        proxy = np.sum(
            (ax**2 + az**2) * np.where(speed > 0, curve.x / speed**3, np.inf)
        )
    if not np.isfinite(proxy):
        violations.append("non-finite second-difference energy proxy")
    return AdmissibilityReport(tuple(violations))


def _chord_parameter(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(x), np.diff(z)))])
    return s


def reparametrize_constant_speed(
    curve: GeneratorCurve, iterations: int = 3
) -> GeneratorCurve:
    """Resample ``curve`` so nodes are equally spaced in arc length.

    The map from parameter to cumulative chord length is inverted with a
    monotone (PCHIP) interpolant, and the coordinates are evaluated on a
    cubic spline in the original parameter. A few fixed-point passes remove
    the residual unevenness left by chord-versus-arc differences.
    """
    x, z = curve.x.copy(), curve.z.copy()
    n = curve.n_segments
    t = curve.t
    sx, sz = CubicSpline(t, x), CubicSpline(t, z)
    tau = t.copy()  # original parameter value of each current node
    for _ in range(iterations):
        s = _chord_parameter(x, z)
        if s[-1] <= 0:
            raise InvalidCurveError("zero-length curve cannot be resampled")
        spread = np.ptp(np.diff(s)) / (s[-1] / n)
        if spread < 1e-12:
            break
        target = np.linspace(0.0, s[-1], n + 1)
        tau = PchipInterpolator(s, tau)(target)
        tau[0], tau[-1] = 0.0, 1.0
        x, z = sx(tau), sz(tau)
    x[0] = curve.x[0]
    x[-1] = curve.x[-1]
    z[0] = curve.z[0]
    z[-1] = curve.z[-1]
    np.maximum(x, 0.0, out=x)
    return GeneratorCurve(x, z)


def resampling_map(curve: GeneratorCurve, resampled: GeneratorCurve):
    """Return a callable mapping old parameters to new ones.

    Both curves trace the same geometry; the map sends ``t`` to the
    normalized chord position of ``curve(t)`` on ``resampled``.
    """
    s_old = _chord_parameter(curve.x, curve.z)
    s_old = s_old / s_old[-1]
    s_new = _chord_parameter(resampled.x, resampled.z)
    s_new = s_new / s_new[-1]
    to_s = PchipInterpolator(curve.t, s_old)
    from_s = PchipInterpolator(s_new, resampled.t)
    return lambda tt: np.clip(from_s(to_s(tt)), 0.0, 1.0)


# --- constructors for analytic test curves ---------------------------------


def curve_from_function(
    f: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]], n_segments: int
) -> GeneratorCurve:
    t = np.arange(n_segments + 1) / n_segments
    x, z = f(t)
    return GeneratorCurve(x, z)


def spheroid_curve(
    a: float, c: float, n_segments: int, center_z: float = 0.0
) -> GeneratorCurve:
    """Meridian of the spheroid with equatorial radius ``a`` and polar ``c``.

    Traversed counterclockwise from the south pole to the north pole.
    """
    t = np.arange(n_segments + 1) / n_segments
    x = a * np.sin(np.pi * t)
    x[0] = x[-1] = 0.0
    z = center_z - c * np.cos(np.pi * t)
    return GeneratorCurve(x, z)


def sphere_curve(
    n_segments: int, radius: float = 1.0, center_z: float = 0.0
) -> GeneratorCurve:
    return spheroid_curve(radius, radius, n_segments, center_z)
