"""
Invariant and oracle suites behind ``cylscat verify``.

Each check returns a CheckResult with the measured defect and its tolerance.
The suites are small versions of the test-suite properties, sized to run in
seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import assemble, free_blocks, shift_origin_smatrix
from .classical import BoundaryPoint, cylinder_kappa, kappa, kappa_quadrature
from .geometry import ModelSpec, bulge, cylinder, hourglass
from .phasespace import coherent_state
from .spectral import WEYL_LIMIT, eigenphases, trace_power_direct, weyl_count

TWO_PI = 2.0 * math.pi


@dataclass
class CheckResult:
    suite: str
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def as_dict(self):
        return {"suite": self.suite, "check": self.name, "value": float(self.value), "tol": self.tol,
                "passed": self.passed}


def _angle_diff(a, b):
    return abs((a - b + math.pi) % TWO_PI - math.pi)


def _point_defect(p: BoundaryPoint, q: BoundaryPoint) -> float:
    if p.end != q.end:
        return math.inf
    return max(_angle_diff(p.theta, q.theta), abs(p.eta - q.eta))


def _sample_points(n=12, eta_max=0.9, seed=7):
    rng = np.random.default_rng(seed)
    ends = rng.choice(["L", "R"], n)
    return [BoundaryPoint(str(e), float(t), float(x))
            for e, t, x in zip(ends, rng.uniform(0, TWO_PI, n), rng.uniform(-eta_max, eta_max, n))]


def _time_reversal(spec: ModelSpec, pts) -> float:
    worst = 0.0
    for b in pts:
        back = kappa(kappa(b, spec).reflected(), spec).reflected()
        worst = max(worst, _point_defect(back, b))
    return worst


def free_suite(h: float = 0.1, scale: float = 1.0):
    spec = cylinder(h=h)
    pts = _sample_points()
    out = []
    out.append(CheckResult("free", "kappa_flow_vs_closed_form",
                           max(_point_defect(kappa(b, spec), cylinder_kappa(b, spec)) for b in pts), 1e-8 * scale))
    out.append(CheckResult("free", "kappa_quadrature_vs_closed_form",
                           max(_point_defect(kappa_quadrature(b, spec), cylinder_kappa(b, spec)) for b in pts),
                           1e-8 * scale))
    out.append(CheckResult("free", "time_reversal", _time_reversal(spec, pts[:6]), 1e-6 * scale))
    S, SU = assemble(spec)
    out.append(CheckResult("free", "smatrix_closed_form", float(np.max(np.abs(S.blocks - free_blocks(spec)))),
                           1e-8 * scale))
    out.append(CheckResult("free", "unitarity", SU.unitarity_defect(), 1e-8 * scale))
    shifted = assemble(spec.with_offset(0.5))[0]
    out.append(CheckResult("free", "origin_shift_conjugation",
                           float(np.max(np.abs(shift_origin_smatrix(S, 0.5).blocks - shifted.blocks))), 1e-6 * scale))
    ps = eigenphases(SU)
    out.append(CheckResult("free", "eigenphase_trace_vs_direct",
                           max(abs(ps.power_sum(k) - trace_power_direct(SU, k)) for k in range(1, 5)), 1e-8 * scale))
    w = weyl_count(0.01)
    out.append(CheckResult("free", "weyl_count_h0.01", abs(w.scaled - WEYL_LIMIT), 0.2 * scale))
    g = coherent_state(("L", 1.0, 0.3), h, SU.channels)
    out.append(CheckResult("free", "coherent_state_norm", abs(np.linalg.norm(g.vector()) - 1.0), 1e-12 * scale))
    return out


def _curved_suite(name, spec, scale):
    out = []
    S, SU = assemble(spec)
    out.append(CheckResult(name, "unitarity", SU.unitarity_defect(), 1e-8 * scale))
    out.append(CheckResult(name, "symmetry", SU.symmetry_defect(), 1e-8 * scale))
    pts = [b for b in _sample_points(eta_max=0.95) if name != "hourglass" or abs(abs(b.eta) - spec.profile.f_min**2) > 0.05]
    out.append(CheckResult(name, "time_reversal", _time_reversal(spec, pts[:6]), 1e-6 * scale))
    if name == "bulge":
        defect = max(_point_defect(kappa(b, spec), kappa_quadrature(b, spec)) for b in pts[:6])
        out.append(CheckResult(name, "kappa_flow_vs_quadrature", defect, 1e-6 * scale))
    return out


def bulge_suite(h: float = 0.1, scale: float = 1.0):
    return _curved_suite("bulge", bulge(h=h), scale)


def hourglass_suite(h: float = 0.1, scale: float = 1.0):
    return _curved_suite("hourglass", hourglass(h=h), scale)


SUITES = {"free": free_suite, "bulge": bulge_suite, "hourglass": hourglass_suite}


def run_suite(name: str, scale: float = 1.0):
    if name == "all":
        return [r for fn in SUITES.values() for r in fn(scale=scale)]
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](scale=scale)
