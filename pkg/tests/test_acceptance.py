"""The ten acceptance criteria, one test each.

Every test records a ``criterion N: PASS|FAIL`` line; the lines are printed
as they happen (visible with ``-s``) and again in the terminal summary.
"""

import math
import time
from contextlib import contextmanager
from itertools import groupby

import numpy as np
import pytest

import oracles
from axivesicle.analysis import (
    ConstraintSet,
    coercivity_check,
    coercivity_constants,
    feasibility_check,
    gauss_bonnet_defect,
)
from axivesicle.cli import RunConfig, run_sweep
from axivesicle.energy import (
    MaterialParams,
    VesicleSystem,
    bending_energy,
    energy_gradient,
    gaussian_energy,
    helfrich_energy,
    line_energy,
)
from axivesicle.geometry import GeneratorCurve, enclosed_volume, sphere_curve, surface_area
from axivesicle.meshio import (
    Checkpoint,
    is_watertight,
    mesh_area,
    mesh_volume,
    read_checkpoint,
    revolve_to_mesh,
    write_checkpoint,
)
from axivesicle.optimizer import OptimizerConfig, init_system, minimize
from axivesicle.phase import PhaseLayout, complement, interface_length, phase_area

RESULTS: list[str] = []

AREA = 4 * math.pi
SPHERE_VOLUME = 4 * math.pi / 3
CANONICAL = MaterialParams.uniform(1.0, -1.0, 0.0, 1.0)


@contextmanager
def criterion(number, title):
    detail = []
    try:
        yield detail
    except BaseException:
        line = f"criterion {number}: FAIL  {title}" + (f"  [{'; '.join(detail)}]" if detail else "")
        RESULTS.append(line)
        print(line)
        raise
    line = f"criterion {number}: PASS  {title}" + (f"  [{'; '.join(detail)}]" if detail else "")
    RESULTS.append(line)
    print(line)


def second_order(coarse, fine, floor=1e-12):
    """Error decays at least like N^-2 (or is already at rounding level)."""
    return fine <= floor or coarse / fine >= 3.5


def test_c01_sphere_oracle():
    with criterion(1, "sphere oracle at N=400 with O(N^-2) decay") as d:
        errs = {}
        for n in (200, 400):
            c = sphere_curve(n)
            errs[n] = [
                abs(bending_energy(c, None, CANONICAL) - 8 * math.pi) / (8 * math.pi),
                abs(gaussian_energy(c, None, CANONICAL) + 4 * math.pi) / (4 * math.pi),
                abs(surface_area(c) - AREA) / AREA,
                abs(enclosed_volume(c) - SPHERE_VOLUME) / SPHERE_VOLUME,
            ]
        d.append("rel errors at 400: " + ", ".join(f"{e:.1e}" for e in errs[400]))
        assert all(e <= 1e-3 for e in errs[400])
        assert all(second_order(a, b) for a, b in zip(errs[200], errs[400]))


def test_c02_gauss_bonnet():
    with criterion(2, "Gauss-Bonnet on 20 random closed curves") as d:
        rng = np.random.default_rng(2)
        worst, slowest = 0.0, math.inf
        for _ in range(20):
            profile = oracles.random_profile(rng)
            coarse, fine = (gauss_bonnet_defect(oracles.profile_curve(profile, n)) for n in (200, 400))
            worst = max(worst, fine / (4 * math.pi))
            slowest = min(slowest, coarse / fine if fine > 1e-12 else math.inf)
            assert fine / (4 * math.pi) <= 1e-2
            assert second_order(coarse, fine)
        d.append(f"worst relative defect {worst:.1e}, slowest decay ratio {slowest:.2f}")


def _random_params(rng):
    kh = rng.uniform(0.2, 3.0, size=2)
    kg = -kh * rng.uniform(0.02, 1.98, size=2)
    h0 = rng.uniform(-2.0, 2.0, size=2)
    return MaterialParams(kh[0], kh[1], kg[0], kg[1], h0[0], h0[1], rng.uniform(0.05, 5.0))


def _random_system(rng):
    comps = []
    for i in range(int(rng.integers(1, 3))):
        curve = oracles.profile_curve(oracles.random_profile(rng), 100, scale=rng.uniform(0.5, 2.0))
        k = int(rng.integers(0, 3))
        jumps = tuple(sorted(rng.uniform(0.05, 0.95, size=k)))
        if k == 2 and jumps[1] - jumps[0] < 1e-3:
            jumps = ()
        comps.append((curve.translated(5.0 * i), PhaseLayout(int(rng.integers(0, 2)), jumps)))
    return VesicleSystem(tuple(comps))


def test_c03_coercivity():
    with criterion(3, "coercivity on 1000 random systems; hand-substituted constants") as d:
        cert = coercivity_constants(CANONICAL, epsilon=0.5)
        assert cert.c1_A == 1.0 and cert.c1_B == 1.0
        assert cert.c2_A == pytest.approx(1 / 6, abs=1e-15) and cert.c2_B == cert.c2_A
        rng = np.random.default_rng(3)
        failures = 0
        smallest_gap = math.inf
        for _ in range(1000):
            rep = coercivity_check(_random_system(rng), _random_params(rng))
            failures += not rep.satisfied
            smallest_gap = min(smallest_gap, rep.gap)
        d.append(f"{1000 - failures}/1000 satisfied, smallest gap {smallest_gap:.3g}")
        assert failures == 0


def test_c04_feasibility():
    with criterion(4, "feasibility bound") as d:
        rep = feasibility_check(ConstraintSet(AREA, 2 * math.pi, 4.0))
        assert rep.volume_bound == pytest.approx(SPHERE_VOLUME, rel=1e-14)
        assert rep.feasible
        assert not feasibility_check(ConstraintSet(AREA, 2 * math.pi, SPHERE_VOLUME)).feasible
        assert feasibility_check(ConstraintSet(AREA, 0.0, 4.0)).feasible
        assert feasibility_check(ConstraintSet(AREA, AREA, 4.0)).feasible
        assert not feasibility_check(ConstraintSet(AREA, AREA + 1e-9, 4.0)).feasible
        d.append(f"bound {rep.volume_bound:.12g}")


def _central(f, h):
    # fourth-order central stencil; see the note in test_c05
    return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h)


def test_c05_gradient():
    with criterion(5, "gradient vs central differences on 100 directions") as d:
        # two distinct phases with spontaneous curvature so every term is active
        p = MaterialParams(1.0, 1.7, -0.8, -1.2, 0.4, -0.3, 2.0)
        c = sphere_curve(400)
        lay = PhaseLayout(1, (0.5,))
        node, _ = energy_gradient(c, lay, p)
        rng = np.random.default_rng(11)
        worst = 0.0
        # the second-order formula at step 1e-5 carries ~1e-6 absolute
        # truncation, which exceeds 1e-5 relative on directions whose
        # derivative happens to be small; the fourth-order stencil does not
        for _ in range(100):
            dx, dz = oracles.smooth_direction(rng, c.t)

            def f(h):
                return helfrich_energy(GeneratorCurve(c.x + h * dx, c.z + h * dz), lay, p).total

            analytic = float(node[:, 0] @ dx + node[:, 1] @ dz)
            fd = _central(f, 1e-5)
            worst = max(worst, abs(analytic - fd) / abs(fd))
        shift = float(node[:, 1].sum())
        d.append(f"worst relative error {worst:.1e}; z-translation component {shift:.1e}")
        assert worst <= 1e-5
        assert abs(shift) <= 1e-8


PRESSED = ConstraintSet(AREA, 0.0, 0.95 * SPHERE_VOLUME)


def _pressed_run():
    s0 = init_system(PRESSED, 1, 400)
    t0 = time.perf_counter()
    s, report = minimize(s0, CANONICAL, PRESSED, OptimizerConfig(seed=0))
    return s0, s, report, time.perf_counter() - t0


@pytest.fixture(scope="module")
def pressed_runs():
    return _pressed_run(), _pressed_run()


@pytest.mark.slow
def test_c06_constrained_minimization(pressed_runs):
    with criterion(6, "single-phase constrained minimization at N=400") as d:
        s0, s, report, elapsed = pressed_runs[0]
        residuals = report.final_residuals
        d.append(
            f"{report.termination}, E {report.energy[0]:.6f} -> {report.energy[-1]:.6f}, "
            f"max residual {max(map(abs, residuals)):.1e}, {elapsed:.1f} s"
        )
        assert report.termination == "converged"
        assert max(abs(r) for r in residuals) <= 1e-6
        for _, group in groupby(zip(report.inner_phase, report.objective), key=lambda t: t[0]):
            values = [v for _, v in group]
            assert all(b <= a for a, b in zip(values, values[1:]))
        assert report.energy[-1] <= helfrich_energy(s0.curves[0], s0.layouts[0], CANONICAL).total
        assert elapsed <= 120.0


@pytest.mark.slow
def test_c07_two_phase_sweep(tmp_path):
    with criterion(7, "two-phase sigma sweep {0.1, 1, 10}") as d:
        # the round sphere sits on the feasibility bound, so the start is the
        # pressed spheroid split at its equator
        cs = ConstraintSet(AREA, 2 * math.pi, 0.95 * SPHERE_VOLUME)
        s0 = init_system(cs, 1, 200)
        start = interface_length(s0.curves[0], s0.layouts[0])
        cfg = RunConfig(params=CANONICAL, constraints=cs, resolution=200, threads=3, out=tmp_path)
        rows = run_sweep(cfg, "sigma", [0.1, 1.0, 10.0])
        lengths = [r["summary"]["interface_length"] for r in rows]
        d.append(f"initial {start:.4f}, final " + ", ".join(f"{x:.4f}" for x in lengths))
        for row in rows:
            summary = row["summary"]
            assert summary["termination"] == "converged"
            assert max(abs(summary[k]) for k in ("res_area", "res_volume", "res_phase")) <= 1e-6
            assert math.isfinite(summary["energy"])
        assert lengths[2] <= start <= 2 * math.pi
        assert all(b <= a for a, b in zip(lengths, lengths[1:]))


def test_c08_phase_edge_cases():
    with criterion(8, "phase and line edge cases") as d:
        # generator pinched onto the axis at t = 1/2
        n = 16
        t = np.arange(n + 1) / n
        x = np.abs(np.sin(2 * np.pi * t))
        x[[0, n // 2, n]] = 0.0
        pinched = GeneratorCurve(x, -np.cos(np.pi * t))
        assert line_energy(pinched, PhaseLayout(1, (0.5,)), CANONICAL) == 0.0
        c = sphere_curve(400)
        assert line_energy(c, PhaseLayout.constant(0), CANONICAL) == 0.0
        assert line_energy(c, PhaseLayout.constant(1), CANONICAL) == 0.0
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(50):
            curve = oracles.profile_curve(oracles.random_profile(rng), 200)
            k = int(rng.integers(1, 6))
            jumps = tuple(sorted(rng.uniform(0.01, 0.99, size=k)))
            if any(b - a < 1e-6 for a, b in zip(jumps, jumps[1:])):
                continue
            lay = PhaseLayout(int(rng.integers(0, 2)), jumps)
            total = phase_area(curve, lay) + phase_area(curve, complement(lay))
            worst = max(worst, abs(total / surface_area(curve) - 1))
        d.append(f"worst complement-sum error {worst:.1e}")
        assert worst <= 1e-10


def test_c09_round_trip(tmp_path):
    with criterion(9, "checkpoint and mesh round trip") as d:
        s0 = init_system(ConstraintSet(AREA, 2 * math.pi, 4.0), 1, 120)
        cp = Checkpoint(s0, CANONICAL, ConstraintSet(AREA, 2 * math.pi, 4.0), (0.1, -0.2, 1 / 3), 1e3, 7,
                        {"seed": 0, "draws": 12}, {"max_outer_iters": 30})
        write_checkpoint(cp, tmp_path / "cp.json")
        back = read_checkpoint(tmp_path / "cp.json")
        assert back == cp
        assert back.system.curves[0].x.tobytes() == cp.system.curves[0].x.tobytes()
        assert back.system.curves[0].z.tobytes() == cp.system.curves[0].z.tobytes()
        mesh = revolve_to_mesh(sphere_curve(400), PhaseLayout(1, (0.5,)), 64)
        ea = abs(mesh_area(mesh) / AREA - 1)
        ev = abs(mesh_volume(mesh) / SPHERE_VOLUME - 1)
        d.append(f"mesh area error {ea:.1e}, volume error {ev:.1e}")
        assert ea <= 1e-2 and ev <= 1e-2
        assert is_watertight(mesh)


@pytest.mark.slow
def test_c10_determinism(pressed_runs):
    with criterion(10, "identical traces from two seeded runs") as d:
        (_, a, ra, _), (_, b, rb, _) = pressed_runs
        d.append(f"{len(ra.energy)} trace rows")
        assert ra.traces() == rb.traces()
        assert ra.termination == rb.termination
        assert np.array_equal(a.curves[0].x, b.curves[0].x) and np.array_equal(a.curves[0].z, b.curves[0].z)
