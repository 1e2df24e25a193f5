"""Energy of a round vesicle, with and without a phase boundary.

A unit sphere with kappa_H = 1, kappa_G = -1 and no spontaneous curvature
has bending energy 8 pi and Gaussian energy -4 pi. Splitting it at the
equator adds one interface circle of length 2 pi. Area and volume errors
shrink about 4x per doubling of N, and the bending error faster.

    python demos/sphere_energies.py
"""

import math

from axivesicle import MaterialParams, PhaseLayout, helfrich_energy, sphere_curve
from axivesicle.geometry import enclosed_volume, surface_area

params = MaterialParams.uniform(kappa_H=1.0, kappa_G=-1.0, H0=0.0, sigma=1.0)

print(f"{'N':>5} {'area err':>10} {'volume err':>10} {'bending err':>12}")
for n in (50, 100, 200, 400):
    c = sphere_curve(n)
    e = helfrich_energy(c, None, params)
    print(
        f"{n:5d} {abs(surface_area(c) - 4 * math.pi):10.2e} "
        f"{abs(enclosed_volume(c) - 4 * math.pi / 3):10.2e} "
        f"{abs(e.bending - 8 * math.pi):12.2e}"
    )

split = helfrich_energy(sphere_curve(400), PhaseLayout(1, (0.5,)), params)
print()
print(f"equatorial split: bending {split.bending:.6f}  gaussian {split.gaussian:.6f}  line {split.line:.6f}")
print(f"                  (8 pi = {8 * math.pi:.6f}, -4 pi = {-4 * math.pi:.6f}, 2 pi = {2 * math.pi:.6f})")

# spontaneous curvature matching the sphere removes the bending term
matched = MaterialParams.uniform(kappa_H=1.0, kappa_G=-1.0, H0=2.0, sigma=1.0)
print(f"H0 = 2 on the unit sphere: bending {helfrich_energy(sphere_curve(400), None, matched).bending:.2e}")
