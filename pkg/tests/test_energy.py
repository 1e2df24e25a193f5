import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from axivesicle.geometry import GeneratorCurve, reparametrize_constant_speed, sphere_curve
from axivesicle.energy import (
    EnergyBreakdown,
    InvalidParametersError,
    InvalidSystemError,
    MaterialParams,
    VesicleSystem,
    bending_energy,
    coeffs_at,
    energy_gradient,
    evaluate_component,
    gaussian_energy,
    helfrich_energy,
    line_energy,
    system_energy,
)
from axivesicle.phase import PhaseLayout

EQUATOR = PhaseLayout(1, (0.5,))

# quadrature-oracle values for rho = 1 + 0.15 cos 2th - 0.05 cos 3th
PROFILE = {2: 0.15, 3: -0.05}
PROFILE_BENDING = 27.067144337041253  # kappa_H = 1, H0 = 0
PROFILE_BENDING_H0 = 3.3186160776334934  # kappa_H = 1, H0 = 1.5


def test_oracle_reproduces_frozen_values():
    assert oracles.bending(PROFILE) == pytest.approx(PROFILE_BENDING, rel=1e-12)
    assert oracles.bending(PROFILE, 1.0, 1.5) == pytest.approx(PROFILE_BENDING_H0, rel=1e-12)
    assert oracles.total_gaussian_curvature(PROFILE) == pytest.approx(4 * math.pi, rel=1e-12)


class TestParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(kappa_H=0.0, kappa_G=-0.5, H0=0.0, sigma=1.0),
            dict(kappa_H=1.0, kappa_G=0.0, H0=0.0, sigma=1.0),
            dict(kappa_H=1.0, kappa_G=-2.0, H0=0.0, sigma=1.0),
            dict(kappa_H=1.0, kappa_G=-1.0, H0=0.0, sigma=0.0),
            dict(kappa_H=1.0, kappa_G=-1.0, H0=math.nan, sigma=1.0),
        ],
    )
    def test_rejected(self, kwargs):
        with pytest.raises(InvalidParametersError):
            MaterialParams.uniform(**kwargs)

    def test_coeffs_at(self):
        p = MaterialParams(1.0, 2.0, -0.5, -1.5, 0.3, -0.2, 1.0)
        assert coeffs_at(p, 1) == (1.0, -0.5, 0.3)
        assert coeffs_at(p, 0) == (2.0, -1.5, -0.2)

    def test_equal_phases(self):
        p = MaterialParams(1.5, 1.5, -1.0, -0.5, 0.0, 0.0, 1.0)
        assert coeffs_at(p, 0)[0] == coeffs_at(p, 1)[0]


class TestBending:
    def test_unit_sphere(self, sphere400, canonical):
        assert bending_energy(sphere400, None, canonical) == pytest.approx(8 * math.pi, rel=1e-3)

    @pytest.mark.parametrize("radius", [0.5, 1.0, 2.0])
    def test_matched_spontaneous_curvature(self, radius):
        p = MaterialParams.uniform(1.0, -1.0, 2.0 / radius, 1.0)
        assert abs(bending_energy(sphere_curve(400, radius), None, p)) <= 1e-6

    def test_two_rigidities(self, sphere400):
        p = MaterialParams(1.0, 2.0, -1.0, -1.0, 0.0, 0.0, 1.0)
        assert bending_energy(sphere400, EQUATOR, p) == pytest.approx(12 * math.pi, rel=1e-3)

    def test_profile_against_quadrature(self):
        c = oracles.profile_curve(PROFILE, 400)
        p0 = MaterialParams.uniform(1.0, -1.0, 0.0, 1.0)
        p1 = MaterialParams.uniform(1.0, -1.0, 1.5, 1.0)
        assert bending_energy(c, None, p0) == pytest.approx(PROFILE_BENDING, rel=1e-4)
        assert bending_energy(c, None, p1) == pytest.approx(PROFILE_BENDING_H0, rel=1e-4)


class TestGaussian:
    def test_unit_sphere(self, sphere400, canonical):
        assert gaussian_energy(sphere400, None, canonical) == pytest.approx(-4 * math.pi, rel=1e-3)

    def test_two_phases(self, sphere400):
        p = MaterialParams(1.0, 1.0, -1.0, -0.5, 0.0, 0.0, 1.0)
        assert gaussian_energy(sphere400, EQUATOR, p) == pytest.approx(-3 * math.pi, rel=1e-3)

    def test_gauss_bonnet_second_order(self):
        p = MaterialParams.uniform(1.0, -0.7, 0.0, 1.0)
        errs = [
            abs(gaussian_energy(oracles.profile_curve(PROFILE, n), None, p) + 0.7 * 4 * math.pi)
            for n in (200, 400)
        ]
        assert 3.5 < errs[0] / errs[1] < 4.5


class TestLine:
    def test_equator(self, sphere400, canonical):
        assert line_energy(sphere400, EQUATOR, canonical) == pytest.approx(2 * math.pi, rel=1e-12)

    def test_no_jumps_exact_zero(self, sphere400, canonical):
        assert line_energy(sphere400, PhaseLayout.constant(1), canonical) == 0.0
        assert line_energy(sphere400, None, canonical) == 0.0

    def test_scales_with_sigma(self, sphere400):
        p = MaterialParams.uniform(1.0, -1.0, 0.0, 3.5)
        assert line_energy(sphere400, EQUATOR, p) == pytest.approx(7 * math.pi, rel=1e-12)


class TestHelfrich:
    def test_sphere(self, sphere400, canonical):
        b = helfrich_energy(sphere400, PhaseLayout.constant(1), canonical)
        assert b.total == pytest.approx(4 * math.pi, rel=1e-3)

    def test_equatorial_split(self, sphere400, canonical):
        assert helfrich_energy(sphere400, EQUATOR, canonical).total == pytest.approx(6 * math.pi, rel=1e-3)

    def test_reparametrization_invariance(self, canonical):
        n = 400
        s = np.arange(n + 1) / n
        s = s + 0.05 * np.sin(2 * np.pi * s) / (2 * np.pi)
        c = oracles.profile_curve(PROFILE, n)
        th = np.pi * s
        r = 1 + 0.15 * np.cos(2 * th) - 0.05 * np.cos(3 * th)
        x = r * np.sin(th)
        x[0] = x[-1] = 0.0
        warped = GeneratorCurve(x, -r * np.cos(th))
        e0 = helfrich_energy(c, None, canonical).total
        e1 = helfrich_energy(reparametrize_constant_speed(warped), None, canonical).total
        assert e1 == pytest.approx(e0, rel=1e-4)

    def test_breakdown_additivity_exact(self, sphere400, canonical):
        b = helfrich_energy(sphere400, EQUATOR, canonical)
        assert b.total == b.bending + b.gaussian + b.line
        assert isinstance(b, EnergyBreakdown)


class TestSystem:
    def test_two_spheres(self, sphere400, canonical):
        single = helfrich_energy(sphere400, PhaseLayout(), canonical)
        other = sphere400.translated(5.0)
        b = system_energy(VesicleSystem(((sphere400, PhaseLayout()), (other, PhaseLayout()))), canonical)
        assert b.bending == pytest.approx(2 * single.bending, rel=1e-12)
        assert b.gaussian == pytest.approx(2 * single.gaussian, rel=1e-12)
        assert len(b.components) == 2

    def test_singleton(self, sphere400, canonical):
        a = system_energy(VesicleSystem.single(sphere400, EQUATOR), canonical)
        b = helfrich_energy(sphere400, EQUATOR, canonical)
        assert (a.bending, a.gaussian, a.line) == (b.bending, b.gaussian, b.line)

    def test_degenerate_component_rejected(self, sphere400):
        point_like = GeneratorCurve(np.zeros(9), np.linspace(0.0, 1e-9, 9))
        with pytest.raises(InvalidSystemError):
            VesicleSystem(((sphere400, PhaseLayout()), (point_like, PhaseLayout())))

    def test_empty_rejected(self):
        with pytest.raises(InvalidSystemError):
            VesicleSystem(())


def _perturbed_sphere(n=120, seed=3):
    rng = np.random.default_rng(seed)
    base = sphere_curve(n)
    dx, dz = oracles.smooth_direction(rng, base.t)
    x = base.x + 0.05 * dx
    x[0] = x[-1] = 0.0
    return GeneratorCurve(x, base.z + 0.05 * dz)


def _central4(f, h):
    return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h)


class TestGradient:
    def test_per_coordinate_finite_differences(self):
        # fourth-order central differences: a single node enters the
        # curvature through 1/h^2 stencils, so the second-order formula's
        # truncation error would dominate at this step
        c = _perturbed_sphere()
        p = MaterialParams(1.0, 1.7, -0.8, -1.2, 0.4, -0.3, 2.0)
        lay = PhaseLayout(1, (0.4321,))
        node, jump = energy_gradient(c, lay, p)
        step = 1e-5

        def energy_at(i, k, d):
            s = c.samples.copy()
            s[i, k] += d
            return helfrich_energy(GeneratorCurve(s[:, 0], s[:, 1]), lay, p).total

        rng = np.random.default_rng(0)
        for i in rng.choice(np.arange(1, c.n_segments), size=25, replace=False):
            for k in (0, 1):
                fd = _central4(lambda d: energy_at(i, k, d), step)
                assert node[i, k] == pytest.approx(fd, rel=1e-5, abs=1e-9)
        fd_jump = _central4(lambda d: helfrich_energy(c, PhaseLayout(1, (0.4321 + d,)), p).total, step)
        assert jump[0] == pytest.approx(fd_jump, rel=1e-5)

    def test_jump_gradient_at_equator_vanishes(self, sphere400, canonical):
        _, jump = energy_gradient(sphere400, EQUATOR, canonical)
        assert abs(jump[0]) <= 1e-9

    def test_z_translation(self, canonical):
        c = _perturbed_sphere(400)
        node, _ = energy_gradient(c, PhaseLayout(1, (0.37,)), canonical)
        assert abs(node[:, 1].sum()) <= 1e-8

    def test_shapes(self, sphere400, canonical):
        node, jump = energy_gradient(sphere400, PhaseLayout(1, (0.3, 0.6)), canonical)
        assert node.shape == (401, 2) and jump.shape == (2,)


# --- properties ------------------------------------------------------------

rigidity = st.floats(0.2, 5.0)
ratio = st.floats(-1.95, -0.05)


@st.composite
def material(draw, h0=None):
    kA, kB = draw(rigidity), draw(rigidity)
    H0 = st.floats(-2, 2) if h0 is None else st.just(h0)
    return MaterialParams(
        kA, kB, kA * draw(ratio), kB * draw(ratio), draw(H0), draw(H0), draw(st.floats(0.1, 10))
    )


layouts = st.sampled_from(
    [PhaseLayout(), PhaseLayout(0), PhaseLayout(1, (0.5,)), PhaseLayout(0, (0.21, 0.63)), PhaseLayout(1, (0.137,))]
)


@given(material(), layouts)
def test_breakdown_total_is_sum(params, layout):
    c = oracles.profile_curve(PROFILE, 80)
    b = helfrich_energy(c, layout, params)
    assert b.total == b.bending + b.gaussian + b.line


@given(material(h0=0.0), layouts)
def test_scaling_law(params, layout):
    c = oracles.profile_curve(PROFILE, 80)
    a = helfrich_energy(c, layout, params)
    b = helfrich_energy(c.scaled(2.0), layout, params)
    assert b.bending == pytest.approx(a.bending, rel=1e-6)
    assert b.gaussian == pytest.approx(a.gaussian, rel=1e-6)
    assert b.line == pytest.approx(2 * a.line, rel=1e-6)


@given(material(h0=0.0), st.floats(1.01, 3.0))
def test_bending_increases_with_phase_A_rigidity(params, factor):
    c = sphere_curve(80)
    lay = PhaseLayout(1, (0.4,))
    stiffer = MaterialParams(
        params.kappa_H_A * factor, params.kappa_H_B, params.kappa_G_A * factor, params.kappa_G_B,
        0.0, 0.0, params.sigma,
    )
    assert bending_energy(c, lay, stiffer) > bending_energy(c, lay, params)


@given(st.integers(0, 10_000))
def test_component_additivity(seed):
    rng = np.random.default_rng(seed)
    p = MaterialParams.uniform(1.0, -0.6, 0.3, 1.0)
    comps = []
    for k in range(3):
        c = oracles.profile_curve(oracles.random_profile(rng), 60, scale=rng.uniform(0.5, 2)).translated(4.0 * k)
        comps.append((c, PhaseLayout(int(rng.integers(2)), (float(rng.uniform(0.1, 0.9)),))))
    total = system_energy(VesicleSystem(tuple(comps)), p)
    parts = [helfrich_energy(c, l, p) for c, l in comps]
    assert total.bending == pytest.approx(sum(b.bending for b in parts), rel=1e-12)
    assert total.line == pytest.approx(sum(b.line for b in parts), rel=1e-12)


def test_evaluate_component_gradient_consistency(canonical):
    c = _perturbed_sphere(60)
    ev = evaluate_component(c.x, c.z, EQUATOR, canonical, gradient=True)
    node, jump = energy_gradient(c, EQUATOR, canonical)
    assert np.array_equal(ev.energy_grad, node)
    assert np.array_equal(ev.energy_jump_grad, jump)
