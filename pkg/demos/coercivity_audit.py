"""Check the coercivity lower bound on random shapes.

For admissible parameters (-2 < kappa_G / kappa_H < 0 in both phases) the
energy bounds the integrated squared curvature from above:

    F >= C int (k1^2 + k2^2) dS - offset |S|

The script draws random smooth shapes and parameters and reports the
smallest margin ``F - (C Q - offset |S|)``. It also shows how the certificate
constant ``C`` degenerates as kappa_G / kappa_H approaches either end of the
admissible interval.

    python demos/coercivity_audit.py
"""

import numpy as np

from axivesicle import MaterialParams, PhaseLayout, VesicleSystem, coercivity_check, coercivity_constants
from axivesicle.geometry import GeneratorCurve

rng = np.random.default_rng(0)


def random_shape(n=200):
    th = np.pi * np.arange(n + 1) / n
    rho = np.ones_like(th)
    for k in range(2, 6):
        rho += rng.uniform(-0.06, 0.06) * np.cos(k * th)
    x = rho * np.sin(th)
    x[0] = x[-1] = 0.0
    return GeneratorCurve(x, -rho * np.cos(th))


margins = []
for _ in range(200):
    kh = rng.uniform(0.5, 2.0, 2)
    kg = -kh * rng.uniform(0.05, 1.95, 2)
    h0 = rng.uniform(-1.0, 1.0, 2)
    params = MaterialParams(kh[0], kh[1], kg[0], kg[1], h0[0], h0[1], rng.uniform(0.1, 3.0))
    layout = PhaseLayout(1, (float(rng.uniform(0.2, 0.8)),))
    rep = coercivity_check(VesicleSystem.single(random_shape(), layout), params)
    margins.append(rep.gap)
print(f"200 random systems: all satisfied = {min(margins) >= 0}, smallest margin {min(margins):.4g}")

print()
print(f"{'kappa_G/kappa_H':>16} {'epsilon':>10} {'C':>10}")
for ratio in (-0.01, -0.5, -1.0, -1.5, -1.99):
    cert = coercivity_constants(MaterialParams.uniform(1.0, ratio, 0.0, 1.0))
    print(f"{ratio:16.2f} {cert.epsilon:10.3g} {cert.C:10.4f}")
