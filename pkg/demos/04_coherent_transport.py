"""
Coherent states follow classical trajectories.

A coherent state concentrated at a point y of the boundary phase space
(end, theta, eta) is mapped by the unitary scattering matrix to a state
concentrated near kappa(y).  The Husimi distribution locates it; the
distance to kappa(y) shrinks like sqrt(h) or faster.

Run:  python3 demos/04_coherent_transport.py
"""

import math

from cylscat import bulge, hourglass
from cylscat.phasespace import fio_check

centers = [("L", 0.5, 0.4), ("R", 2.0, -0.5), ("L", 3.5, 0.5)]
rep = fio_check(centers, bulge(h=0.02))
for h in (0.02, 0.005):
    print(f"bulge h={h}")
    for r in rep.at(h):
        print(f"  y={r.y}: kappa -> ({r.kappa_y[0]}, {r.kappa_y[1] % (2 * math.pi):.3f}, {r.kappa_y[2]:.2f}), "
              f"Husimi centre ({r.center.end}, {r.center.theta:.3f}, {r.center.eta:.3f}), "
              f"distance {r.dist / math.sqrt(h):.2f} sqrt(h)")

# On the hourglass the end the state leaves from depends on eta.
rep = fio_check([("L", 1.0, 0.4), ("L", 1.0, 0.85)], hourglass(h=0.02), (0.02,))
for r in rep.rows:
    print(f"hourglass eta0={r.y[2]}: classical end {r.kappa_y[0]}, quantum end {r.center.end}")
