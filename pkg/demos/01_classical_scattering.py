"""
Classical scattering on a surface of revolution with two cylindrical ends.

A geodesic enters through the section on one end with angular momentum eta
and leaves through a section with the same eta (eta is conserved by the
rotational symmetry).  What changes is the angle theta and, for the
hourglass, which end it leaves from.

Run:  python3 demos/01_classical_scattering.py
"""

import math

from cylscat import bulge, cylinder, eta_c, hourglass
from cylscat.classical import BoundaryPoint, cylinder_kappa, kappa_quadrature, rotation_number, scattering_map

# On the flat cylinder the trajectory is a helix and the exit angle has a
# closed form; the integrator reproduces it.
cyl = cylinder()
b = BoundaryPoint("R", 0.0, 0.6)
res = scattering_map(b, cyl)
print("flat cylinder, eta = 0.6")
print(f"  flow:        end {res.exit.end} theta {res.exit.theta % (2 * math.pi):.12f}  t+ {res.t_plus:.6f}")
print(f"  closed form: end L theta {cylinder_kappa(b, cyl).theta % (2 * math.pi):.12f}")

# A bulge (profile with one maximum) never traps: every trajectory crosses.
# Its exit angle is a one-dimensional integral, a second independent check.
bul = bulge()
print("\nbulge, one incoming point per eta")
for eta in (0.0, 0.3, 0.6, 0.9):
    b = BoundaryPoint("L", 1.0, eta)
    flowed = scattering_map(b, bul).exit
    quad = kappa_quadrature(b, bul)
    print(f"  eta {eta:.1f}: flow theta {flowed.theta:.10f}, quadrature {quad.theta:.10f}, "
          f"rotation number {rotation_number(eta, bul):.4f}")

# The hourglass has a neck: below the critical angular momentum eta_c the
# geodesic passes through, above it the geodesic turns back, and exactly at
# eta_c it spirals onto the closed geodesic around the neck.
hg = hourglass()
ec = eta_c(hg.profile)
print(f"\nhourglass, eta_c = {ec:.4f}")
for eta in (0.3, ec - 0.01, ec + 0.01, 0.9):
    r = scattering_map(BoundaryPoint("L", 0.0, eta), hg)
    outcome = f"exits on {r.exit.end}" if r.exited else "trapped"
    print(f"  eta {eta:.4f}: {outcome}, t+ {r.t_plus:.3f}")
r = scattering_map(BoundaryPoint("L", 0.0, ec), hg)
print(f"  eta = eta_c: {'exits' if r.exited else 'trapped'} ({r.reason})")
