"""
Weighted resolvent norm of the radial model operator

    Q_tau = -h^2 d^2/ds^2 + tau phi(s) - 1,   phi = f^-4,

with the outgoing boundary value realized by a complex absorbing potential
-i W_abs near the ends of [-L_res, L_res].  The quantity estimated is the
operator norm of w (Q_tau - i W_abs)^{-1} w with w(s) = (1 + |s|)^{-(1+alpha)/2},
by power iteration on A A^* with tridiagonal solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .errors import NonConvergedPowerIteration
from .geometry import ModelSpec, eval_profile


@dataclass(frozen=True)
class WeightedResolventProblem:
    spec: ModelSpec
    eps: float = 0.1
    alpha: float = 1.0
    n_tau: int = 21
    extent: float = 40.0  # L_res = a + extent
    layer: float = 10.0
    strength: float = 1.0
    points_per_h: float = 20.0

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.n_tau < 2:
            raise ValueError("need at least two tau points")
        if not 0 < self.layer < self.extent:
            raise ValueError("absorbing layer must fit inside the box")

    @property
    def L_res(self) -> float:
        return self.spec.a + self.extent

    @property
    def taus(self) -> np.ndarray:
        return np.linspace(0.0, 1.0 - self.eps, self.n_tau)

    def grid(self, h: float) -> np.ndarray:
        ds = h / self.points_per_h
        n = int(math.ceil(2 * self.L_res / ds)) + 1
        return np.linspace(-self.L_res, self.L_res, n)

    def weight(self, s) -> np.ndarray:
        return (1.0 + np.abs(s)) ** (-(1.0 + self.alpha) / 2.0)

    def phi(self, s) -> np.ndarray:
        f, _, _ = eval_profile(self.spec.profile, s)
        return f**-4

    def absorber(self, s) -> np.ndarray:
        start = self.L_res - self.layer
        x = np.clip((np.abs(s) - start) / self.layer, 0.0, None)
        return self.strength * x**2


def _banded(prob: WeightedResolventProblem, tau: float, h: float, s: np.ndarray):
    ds = s[1] - s[0]
    n = len(s)
    diag = 2.0 * h * h / ds**2 + tau * prob.phi(s) - 1.0 - 1j * prob.absorber(s)
    off = -h * h / ds**2
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return ab


@dataclass
class NormEstimate:
    tau: float
    h: float
    norm: float
    iterations: int


def weighted_resolvent_norm(prob: WeightedResolventProblem, tau: float, h: float, tol: float = 1e-4,
                            max_iter: int = 500, seed: int = 0) -> NormEstimate:
    """||w (Q_tau - i W_abs)^{-1} w|| by power iteration on A A^*.

    The discretized operator is complex symmetric, so A^* v = w conj(H^{-1} conj(w v)).
    """
    if tau > 1.0 - prob.eps + 1e-12:
        raise ValueError(f"tau={tau} exceeds 1 - eps")
    s = prob.grid(h)
    ab = _banded(prob, tau, h, s)
    w = prob.weight(s)

    def A(v):
        return w * linalg.solve_banded((1, 1), ab, w * v, check_finite=False)

    def A_adj(v):
        return w * np.conj(linalg.solve_banded((1, 1), ab, np.conj(w * v), check_finite=False))

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(len(s)) + 1j * rng.standard_normal(len(s))
    v /= np.linalg.norm(v)
    lam_old = 0.0
    for it in range(1, max_iter + 1):
        x = A_adj(v)
        y = A(x)
        lam = float(np.linalg.norm(y))  # estimate of sigma_max^2
        v = y / lam
        if it > 2 and abs(lam - lam_old) <= tol * lam:
            return NormEstimate(tau, h, math.sqrt(lam), it)
        lam_old = lam
    raise NonConvergedPowerIteration(f"tau={tau}, h={h}: no convergence in {max_iter} iterations")


@dataclass
class SupEstimate:
    h: float
    value: float
    tau_at_max: float
    norms: np.ndarray
    absorber_ratio: float = field(default=float("nan"))

    @property
    def absorber_sensitive(self) -> bool:
        return not abs(self.absorber_ratio - 1.0) <= 0.05


def sup_over_tau(prob: WeightedResolventProblem, h: float, check_absorber: bool = True, **kw) -> SupEstimate:
    """max over the tau grid; with ``check_absorber`` the maximizing tau is re-solved at half strength."""
    norms = np.array([weighted_resolvent_norm(prob, t, h, **kw).norm for t in prob.taus])
    j = int(np.argmax(norms))
    ratio = float("nan")
    if check_absorber:
        half = replace(prob, strength=0.5 * prob.strength)
        ratio = weighted_resolvent_norm(half, float(prob.taus[j]), h, **kw).norm / norms[j]
    return SupEstimate(h, float(norms[j]), float(prob.taus[j]), norms, ratio)


@dataclass
class ResolventSweep:
    points: list

    @property
    def hs(self) -> np.ndarray:
        return np.array([p.h for p in self.points])

    @property
    def sups(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def slope(self) -> float:
        """Least-squares slope of log sup against log h."""
        return float(np.polyfit(np.log(self.hs), np.log(self.sups), 1)[0])

    def rows(self, prob: WeightedResolventProblem):
        for p in self.points:
            for t, val in zip(prob.taus, p.norms):
                ratio = p.absorber_ratio if t == p.tau_at_max else float("nan")
                yield {"tau": float(t), "h": p.h, "norm": float(val), "absorber_check_ratio": ratio}


def resolvent_sweep(prob: WeightedResolventProblem, hs, **kw) -> ResolventSweep:
    return ResolventSweep([sup_over_tau(prob, h, **kw) for h in hs])
