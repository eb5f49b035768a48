"""
Eigenphases of the scattering matrix and their distribution.

The number of open channels grows like 4/h (two unit circles).  For the
bulge the eigenphases spread out over the circle as h -> 0 and the
empirical distribution approaches the uniform one.  The scaled traces
h Tr S_U^k (k != 0) must eventually vanish too, but at these h the even
powers are still dominated by eta-circles on which kappa^k has fixed
points, and they oscillate with h instead of decreasing.

Run:  python3 demos/05_eigenphases.py
"""

from cylscat import bulge
from cylscat.spectral import equidist_sweep

rep = equidist_sweep(bulge(), [0.04, 0.02, 0.01, 0.005])
print("   h     dim   h*dim   cdf-dev  |h Tr S|  |h Tr S^2|  |h Tr S^3|  |h Tr S^4|")
for p in rep.points:
    tr = "  ".join(f"{abs(p.traces[f'e{k}']):9.4f}" for k in range(1, 5))
    print(f"{p.h:6.3f} {p.dim:6d} {p.h * p.dim:7.3f} {p.cdf_dev:8.4f} {tr}")
