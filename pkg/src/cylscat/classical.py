"""
Hamilton flow of p = rho^2 + f(s)^-4 eta^2 + V0(s) and the scattering map.

Coordinates on T*X are (s, theta, rho, eta).  The equations of motion are

    s'     = 2 rho
    theta' = 2 f^-4 eta
    rho'   = 4 f^-5 f' eta^2 - V0'
    eta'   = 0

The scattering map launches from the section r = 0 of one end with inward
radial momentum and follows the flow until the trajectory crosses a section
outward.  Since eta is conserved and (s, rho) do not depend on theta, the
angular drift and the flight time of a transit are also available as
one-dimensional integrals in s; those give the independent oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import IntegratorFailure, QuadratureFailure, Trapped
from .geometry import ModelSpec, eval_profile

TWO_PI = 2.0 * math.pi
T_MAX = 1e3


@dataclass(frozen=True)
class PhasePoint:
    s: float
    theta: float
    rho: float
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)


@dataclass(frozen=True)
class BoundaryPoint:
    """Point (theta, eta) of the open ball bundle over one end's circle."""

    end: str
    theta: float
    eta: float

    def __post_init__(self):
        if self.end not in ("L", "R"):
            raise ValueError(f"unknown end {self.end!r}")
        if not abs(self.eta) < 1:
            raise ValueError("boundary points need |eta| < 1")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    def reflected(self) -> "BoundaryPoint":
        """(theta, eta)' = (theta, -eta) on the same end."""
        return BoundaryPoint(self.end, self.theta, -self.eta)


@dataclass
class FlowResult:
    exited: bool
    t: float
    energy_drift: float
    exit: Optional[BoundaryPoint] = None
    final: Optional[PhasePoint] = None
    reason: str = ""
    trajectory: Optional[dict] = field(default=None, repr=False)

    @property
    def t_plus(self) -> float:
        return self.t if self.exited else math.nan

    @property
    def trapped(self) -> bool:
        return not self.exited


def hamiltonian(pt: PhasePoint, spec: ModelSpec) -> float:
    f, _, _ = eval_profile(spec.profile, pt.s)
    return pt.rho**2 + pt.eta**2 / f**4 + float(spec.V0(pt.s))


def _energy(y, spec):
    f, _, _ = eval_profile(spec.profile, y[0])
    return y[2] ** 2 + y[3] ** 2 / f**4 + spec.V0(y[0])


def _radial_force(s, eta, spec):
    """-d/ds of the effective radial potential eta^2 f^-4 + V0."""
    f, df, _ = eval_profile(spec.profile, s)
    return 4.0 * eta**2 * df / f**5 - float(spec.dV0(s))


def flow(
    start: PhasePoint,
    spec: ModelSpec,
    t_max: float = T_MAX,
    rtol: float = 1e-12,
    atol: float = 1e-13,
    equilibrium_tol: float = 1e-5,
    record: bool = False,
) -> FlowResult:
    """Integrate the Hamilton flow until the trajectory leaves through a section.

    The run stops at the first outward crossing of |s| = section (root-refined
    by the integrator's event location), or when the horizon ``t_max`` is
    passed, or when the radial motion comes within ``equilibrium_tol`` of a
    hyperbolic rest point (rho = 0 and zero radial force).  In the last case
    the trajectory is on a stable manifold up to rounding; anything the
    integrator would do afterwards is amplified round-off, so the point is
    reported as trapped.
    """
    prof = spec.profile
    has_v0 = not spec.potential.V0.is_zero
    s_sec = spec.section
    eta = start.eta

    def rhs(t, y):
        s, _, rho, _ = y
        f, df, _ = eval_profile(prof, s)
        drho = 4.0 * eta**2 * df / f**5
        if has_v0:
            drho -= float(spec.dV0(s))
        return (2.0 * rho, 2.0 * eta / f**4, drho, 0.0)

    def leave(t, y):
        return y[0] ** 2 - s_sec**2

    leave.terminal = True
    leave.direction = 1

    def rest(t, y):
        return y[2] ** 2 + _radial_force(y[0], eta, spec) ** 2 - equilibrium_tol**2

    rest.terminal = True
    rest.direction = -1

    y0 = np.array([start.s, start.theta, start.rho, start.eta], dtype=float)
    # The motion is exactly linear on the ends, where the error estimate is
    # zero; without a cap the step grows until it jumps over the core.
    scales = [prof.width] + [t.width for t in (spec.potential.V0,) if not t.is_zero]
    max_step = 0.05 * min(scales)
    sol = integrate.solve_ivp(
        rhs, (0.0, t_max), y0, method="DOP853", rtol=rtol, atol=atol,
        events=(leave, rest), dense_output=False, max_step=max_step,
    )
    if sol.status == -1:
        raise IntegratorFailure(sol.message)
    e0 = _energy(y0, spec)
    energies = np.array([_energy(sol.y[:, j], spec) for j in range(sol.y.shape[1])])
    drift = float(np.max(np.abs(energies - e0)))
    traj = {"t": sol.t, "y": sol.y} if record else None

    if sol.t_events[0].size:
        t_exit = float(sol.t_events[0][0])
        y = sol.y_events[0][0]
        drift = max(drift, abs(_energy(y, spec) - e0))
        end = "R" if y[0] > 0 else "L"
        out_eta = float(y[3])
        final = PhasePoint(*y)
        exit_pt = BoundaryPoint(end, y[1], out_eta) if abs(out_eta) < 1 else None
        return FlowResult(True, t_exit, drift, exit_pt, final, "exited", traj)
    y = sol.y[:, -1]
    reason = "equilibrium" if sol.t_events[1].size else "horizon"
    return FlowResult(False, float(sol.t[-1]), drift, None, PhasePoint(*y), reason, traj)


def launch_point(b: BoundaryPoint, spec: ModelSpec) -> PhasePoint:
    """Inward covector on the section over ``b`` on the energy shell p = 1."""
    sign = 1.0 if b.end == "R" else -1.0
    s = sign * spec.section
    rho_sq = 1.0 - b.eta**2 - float(spec.V0(s))
    if rho_sq <= 0:
        raise ValueError("no inward momentum on the energy shell at the section")
    # inward means towards s = 0
    return PhasePoint(s, b.theta, -sign * math.sqrt(rho_sq), b.eta)


def scattering_map(b: BoundaryPoint, spec: ModelSpec, t_max: float = T_MAX, **kw) -> FlowResult:
    """kappa(b) by integrating the flow from the section of ``b``'s end.

    Returns the FlowResult; ``result.exit`` is kappa(b) and ``result.t`` the
    flight time t_+ when ``result.exited``.
    """
    return flow(launch_point(b, spec), spec, t_max=t_max, **kw)


def kappa(b: BoundaryPoint, spec: ModelSpec, t_max: float = T_MAX, **kw) -> BoundaryPoint:
    """kappa(b), raising Trapped when b is not in the domain within ``t_max``."""
    res = scattering_map(b, spec, t_max=t_max, **kw)
    if not res.exited:
        raise Trapped(f"{b} trapped ({res.reason}) before t={t_max}", t_max)
    return res.exit


# --- quadrature oracles ----------------------------------------------------


def _transit_integrals(eta: float, spec: ModelSpec):
    """Angular drift and flight time of one monotone transit between sections.

    drift = eta * int f^-4 / sqrt(1 - eta^2 f^-4 - V0) ds
    time  = int 1 / (2 sqrt(1 - eta^2 f^-4 - V0)) ds

    over [-section, section].  The free stretches a <= |s| <= section have a
    constant integrand and are done in closed form.
    """
    a = spec.a
    tail = 2.0 * (spec.section - a)
    root0 = math.sqrt(1.0 - eta**2)
    prof = spec.profile

    def radial(s):
        f, _, _ = eval_profile(prof, s)
        val = 1.0 - eta**2 / f**4 - float(spec.V0(s))
        if val <= 0:
            raise QuadratureFailure(f"turning point at s={s:.6g} for eta={eta}: no monotone transit")
        return f, math.sqrt(val)

    def drift_core(s):
        f, r = radial(s)
        return 1.0 / (f**4 * r)

    def time_core(s):
        _, r = radial(s)
        return 0.5 / r

    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=200)
    # the bump is symmetric about 0 in shape but V0 need not be, integrate halves
    d1, e1 = integrate.quad(drift_core, -a, 0.0, **opts)
    d2, e2 = integrate.quad(drift_core, 0.0, a, **opts)
    t1, _ = integrate.quad(time_core, -a, 0.0, **opts)
    t2, _ = integrate.quad(time_core, 0.0, a, **opts)
    if e1 + e2 > 1e-9 * max(1.0, abs(d1 + d2)):
        raise QuadratureFailure(f"quadrature error estimate {e1 + e2:.2e} too large at eta={eta}")
    drift = eta * (d1 + d2 + tail / root0)
    t_plus = t1 + t2 + 0.5 * tail / root0
    return drift, t_plus


def kappa_quadrature(b: BoundaryPoint, spec: ModelSpec) -> BoundaryPoint:
    """kappa(b) from the transit integral (monotone-transit models only).

    For V0 = 0 the drift is eta * int 1/(f^2 sqrt(f^4 - eta^2)) ds over
    [-a-4, a+4]; for the flat cylinder it reduces to 2(a+4) eta/sqrt(1-eta^2).
    """
    drift, _ = _transit_integrals(b.eta, spec)
    other = "L" if b.end == "R" else "R"
    return BoundaryPoint(other, b.theta + drift, b.eta)


def flight_time_quadrature(eta: float, spec: ModelSpec) -> float:
    return _transit_integrals(eta, spec)[1]


def transit_drift(eta: float, spec: ModelSpec) -> float:
    return _transit_integrals(eta, spec)[0]


def rotation_number(eta: float, spec: ModelSpec) -> float:
    """Rotation angle of the return map kappa o kappa at fixed eta.

    Convention: delta_theta(eta) = 2 * (single-transit drift), i.e. the theta
    component of kappa^2 is theta + delta_theta(eta).  For the flat cylinder
    with a = 1 and eta = 0.6 this is 15.0.
    """
    return 2.0 * transit_drift(eta, spec)


def cylinder_kappa(b: BoundaryPoint, spec: ModelSpec) -> BoundaryPoint:
    """Closed form for the flat cylinder: theta + 2 L eta / sqrt(1 - eta^2)."""
    other = "L" if b.end == "R" else "R"
    return BoundaryPoint(other, b.theta + 2.0 * spec.section * b.eta / math.sqrt(1.0 - b.eta**2), b.eta)


# --- origin shifts ---------------------------------------------------------


def free_shift(b: BoundaryPoint, c: float) -> BoundaryPoint:
    """Free flow along the end over radial distance c: theta += c eta / sqrt(1-eta^2)."""
    return BoundaryPoint(b.end, b.theta + c * b.eta / math.sqrt(1.0 - b.eta**2), b.eta)


def shift_origin_map(b: BoundaryPoint, c: float, spec: ModelSpec, t_max: float = T_MAX, **kw) -> BoundaryPoint:
    """Scattering map for sections moved outward by ``c``, as vartheta o kappa o vartheta.

    Raises Trapped if the conjugated point is not in the domain of kappa.
    """
    inner = kappa(free_shift(b, c), spec, t_max=t_max, **kw)
    return free_shift(inner, c)


# --- domain scans ----------------------------------------------------------


@dataclass
class DomainScan:
    end: str
    thetas: np.ndarray
    etas: np.ndarray
    exited: np.ndarray  # (n_eta, n_theta) bool
    t_plus: np.ndarray
    theta_out: np.ndarray
    eta_out: np.ndarray
    end_out: np.ndarray
    energy_drift: np.ndarray

    @property
    def trapped_fraction(self) -> float:
        return float(1.0 - self.exited.mean())

    def rows(self):
        for i, eta in enumerate(self.etas):
            for j, th in enumerate(self.thetas):
                ok = bool(self.exited[i, j])
                yield {
                    "end": self.end,
                    "theta": float(th),
                    "eta": float(eta),
                    "outcome": "exited" if ok else "trapped",
                    "t_plus": float(self.t_plus[i, j]),
                    "theta_out": float(self.theta_out[i, j]),
                    "eta_out": float(self.eta_out[i, j]),
                    "energy_drift": float(self.energy_drift[i, j]),
                }


def domain_scan(spec: ModelSpec, thetas, etas, t_max: float = T_MAX, end: str = "R", **kw) -> DomainScan:
    """Label each (theta, eta) cell as exited or trapped.

    The radial motion does not depend on theta and the angular motion is a
    rigid rotation, so one trajectory per eta value serves every theta.
    """
    thetas = np.asarray(thetas, dtype=float)
    etas = np.asarray(etas, dtype=float)
    shape = (len(etas), len(thetas))
    exited = np.zeros(shape, dtype=bool)
    t_plus = np.full(shape, np.nan)
    theta_out = np.full(shape, np.nan)
    eta_out = np.full(shape, np.nan)
    end_out = np.full(shape, "", dtype=object)
    drift = np.zeros(shape)
    for i, eta in enumerate(etas):
        res = scattering_map(BoundaryPoint(end, 0.0, eta), spec, t_max=t_max, **kw)
        drift[i] = res.energy_drift
        if res.exited:
            exited[i] = True
            t_plus[i] = res.t
            theta_out[i] = np.mod(thetas + res.exit.theta, TWO_PI)
            eta_out[i] = res.exit.eta
            end_out[i] = res.exit.end
    return DomainScan(end, thetas, etas, exited, t_plus, theta_out, eta_out, end_out, drift)
