"""
Growth of the weighted resolvent as h -> 0.

For the radial model operator -h^2 d^2/ds^2 + tau f^-4 - 1 the weighted
outgoing resolvent grows like 1/h uniformly in tau away from 1.  The
outgoing condition is imposed with an absorbing layer; halving its strength
checks that the layer does not affect the result.

Run:  python3 demos/06_resolvent.py
"""

from cylscat import bulge
from cylscat.resolvent import WeightedResolventProblem, resolvent_sweep

prob = WeightedResolventProblem(bulge())
sw = resolvent_sweep(prob, (0.1, 0.05, 0.025))
for p in sw.points:
    print(f"h={p.h:<6} sup_tau norm {p.value:8.3f} (at tau={p.tau_at_max:.2f}), "
          f"h * norm {p.h * p.value:.3f}, half-absorber ratio {p.absorber_ratio:.4f}")
print(f"log-log slope {sw.slope():.3f}")
