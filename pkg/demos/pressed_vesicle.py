"""Minimize a single-phase vesicle at 95% of the sphere's volume.

The start is the prolate spheroid with the target area and volume. The
minimizer keeps the area 4 pi and the volume fixed, and lowers the
bending energy from the spheroid's value. The result is written as a curve
CSV and a revolved OBJ mesh.

    python demos/pressed_vesicle.py [outdir]
"""

import math
import sys
from pathlib import Path

from axivesicle import ConstraintSet, MaterialParams, OptimizerConfig, init_system, minimize
from axivesicle.meshio import revolve_to_mesh, write_curve, write_mesh

out = Path(sys.argv[1] if len(sys.argv) > 1 else "pressed_vesicle_out")
out.mkdir(exist_ok=True)

params = MaterialParams.uniform(kappa_H=1.0, kappa_G=-1.0, H0=0.0, sigma=1.0)
target = ConstraintSet(total_area=4 * math.pi, phase_area=0.0, volume=0.95 * 4 * math.pi / 3)

start = init_system(target, n_components=1, resolution=200)
final, report = minimize(start, params, target, OptimizerConfig(seed=0))

print(f"termination      {report.termination} after {report.iteration[-1]} steps, {report.wall_time:.1f} s")
print(f"energy           {report.energy[0]:.6f} -> {report.energy[-1]:.6f}")
print("residuals        area {:.1e}  volume {:.1e}  phase {:.1e}".format(*report.final_residuals))

curve = final.curves[0]
height = curve.z[-1] - curve.z[0]
print(f"shape            height {height:.4f}, equatorial radius {curve.x.max():.4f}")

write_curve(curve, out / "curve.csv")
write_mesh(revolve_to_mesh(curve, final.layouts[0], 64), out / "vesicle.obj")
print(f"wrote {out / 'curve.csv'} and {out / 'vesicle.obj'}")
