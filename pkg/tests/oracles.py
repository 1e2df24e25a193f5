"""Reference values computed without the package's discretization.

Curves here are radial profiles ``rho(theta) = 1 + sum_k a_k cos(k theta)``
swept as ``(rho sin theta, -rho cos theta)`` for ``theta in [0, pi]``. Cosine
modes give ``rho'(0) = rho'(pi) = 0``, so the generator meets the axis at a
right angle at both poles. Derivatives are exact and integrals come from
adaptive quadrature.
"""

import math

import numpy as np
from scipy import integrate

from axivesicle.geometry import GeneratorCurve


def _rho(coeffs, th):
    r, dr, ddr = 1.0, 0.0, 0.0
    for k, a in coeffs.items():
        r += a * math.cos(k * th)
        dr -= a * k * math.sin(k * th)
        ddr -= a * k * k * math.cos(k * th)
    return r, dr, ddr


def _frame(coeffs, th):
    r, dr, ddr = _rho(coeffs, th)
    s, c = math.sin(th), math.cos(th)
    x, z = r * s, -r * c
    vx, vz = dr * s + r * c, -dr * c + r * s
    ax = ddr * s + 2 * dr * c - r * s
    az = -ddr * c + 2 * dr * s + r * c
    return x, z, vx, vz, ax, az


def profile_curve(coeffs, n_segments, scale=1.0):
    """Sample the profile at ``theta = pi i / N``; poles exactly on the axis."""
    th = np.pi * np.arange(n_segments + 1) / n_segments
    r = np.ones_like(th)
    for k, a in coeffs.items():
        r = r + a * np.cos(k * th)
    x = scale * r * np.sin(th)
    x[0] = x[-1] = 0.0
    z = -scale * r * np.cos(th)
    return GeneratorCurve(x, z)


def _quad(f):
    val, _ = integrate.quad(f, 0.0, math.pi, epsabs=1e-13, epsrel=1e-13, limit=400)
    return val


def area(coeffs):
    def f(th):
        x, _, vx, vz, _, _ = _frame(coeffs, th)
        return 2 * math.pi * x * math.hypot(vx, vz)

    return _quad(f)


def volume(coeffs):
    def f(th):
        x, _, _, vz, _, _ = _frame(coeffs, th)
        return math.pi * x * x * vz

    return _quad(f)


def _k1_speed(coeffs, th):
    x, _, vx, vz, ax, az = _frame(coeffs, th)
    s = math.hypot(vx, vz)
    return x, vz, s, (az * vx - ax * vz) / s**3


def total_gaussian_curvature(coeffs):
    """``int K dS = 2 pi int k1 k2 x |v|``; note ``k2 x |v| = z'``."""

    def f(th):
        _, vz, _, k1 = _k1_speed(coeffs, th)
        return 2 * math.pi * k1 * vz

    return _quad(f)


def bending(coeffs, kappa_H=1.0, H0=0.0):
    """``pi int kappa_H (k1 + k2 - H0)^2 x |v|``."""

    def f(th):
        x, vz, s, k1 = _k1_speed(coeffs, th)
        if x == 0.0:
            return 0.0
        k2 = vz / (x * s)
        return math.pi * kappa_H * (k1 + k2 - H0) ** 2 * x * s

    return _quad(f)


def curvature_l2(coeffs):
    def f(th):
        x, vz, s, k1 = _k1_speed(coeffs, th)
        if x == 0.0:
            return 0.0
        k2 = vz / (x * s)
        return 2 * math.pi * (k1 * k1 + k2 * k2) * x * s

    return _quad(f)


def spheroid_area(a, c):
    """Closed-form area of the spheroid with equatorial radius a, polar c."""
    if math.isclose(a, c):
        return 4 * math.pi * a * a
    if c > a:
        e = math.sqrt(1 - a * a / (c * c))
        return 2 * math.pi * a * a * (1 + c / (a * e) * math.asin(e))
    e = math.sqrt(1 - c * c / (a * a))
    return 2 * math.pi * a * a * (1 + (1 - e * e) / e * math.atanh(e))


def spheroid_volume(a, c):
    return 4.0 / 3.0 * math.pi * a * a * c


def random_profile(rng, kmax=4, amplitude=0.25):
    """Smooth random profile with ``rho > 0.5`` everywhere."""
    raw = rng.uniform(-1.0, 1.0, size=kmax - 1) / np.arange(2, kmax + 1) ** 2
    raw *= amplitude / max(np.abs(raw).sum(), 1e-12)
    return {k: float(a) for k, a in zip(range(2, kmax + 1), raw)}


def smooth_direction(rng, t, modes=4):
    """Admissible smooth perturbation ``(dx, dz)`` of a closed generator.

    ``dx`` vanishes at both poles and ``dz`` has zero slope there, so the
    perturbed curve stays closed and orthogonal to the axis.
    """
    a = rng.normal(size=modes)
    b = rng.normal(size=modes)
    k = np.arange(modes)
    dx = np.sin(np.pi * t) * (a[None, :] * np.cos(np.pi * np.outer(t, k))).sum(axis=1)
    dx[0] = dx[-1] = 0.0
    dz = (b[None, :] * np.cos(np.pi * np.outer(t, k + 1))).sum(axis=1)
    return dx, dz


def spline_length(curve, samples=400001):
    """Length of the cubic-spline curve through the nodes, finely sampled."""
    from scipy.interpolate import CubicSpline

    tt = np.linspace(0.0, 1.0, samples)
    x = CubicSpline(curve.t, curve.x)(tt)
    z = CubicSpline(curve.t, curve.z)(tt)
    return float(np.hypot(np.diff(x), np.diff(z)).sum())
