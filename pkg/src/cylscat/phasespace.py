"""
Coherent states on the two cross-section circles, anti-Wick quantization,
Husimi densities, and the packet-transport check of S_U against kappa.

A state on H_Y is a vector of mode coefficients in the end-major channel order
of ``ChannelSet.labels()``.  The coherent state at (end, theta0, eta0) lives on
one end with coefficients

    c_m = N exp(-h (m - eta0/h)^2 / 2 - i m theta0),

so |c_m|^2 is a Gaussian in eta = h m of variance h/2 and the wave function
sum_m c_m e^{i m theta} is a Gaussian in theta of variance h/2 (up to
periodization) centred at theta0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .channels import assemble
from .classical import BoundaryPoint, kappa
from .errors import DegenerateState, TooCloseToEdge
from .geometry import ENDS, ChannelSet, ModelSpec, open_channels

TWO_PI = 2.0 * math.pi


def _full_norm(h: float) -> float:
    """N with sum over all m in Z of N^2 exp(-h (m - x)^2) ~ 1, i.e. (h/pi)^(1/4)."""
    return (h / math.pi) ** 0.25


def gaussian_profile(modes, eta0: float, h: float) -> np.ndarray:
    """exp(-h (m - eta0/h)^2 / 2) for each mode."""
    m = np.asarray(modes, dtype=float)
    return np.exp(-0.5 * h * (m - eta0 / h) ** 2)


def wrap_angle(x):
    """Map angles to (-pi, pi]."""
    return -((-np.asarray(x) + math.pi) % TWO_PI - math.pi)


@dataclass
class CoherentState:
    end: str
    theta0: float
    eta0: float
    h: float
    channels: ChannelSet
    coeffs: np.ndarray  # on the open modes of ``end``

    @property
    def center(self):
        return (self.end, self.theta0, self.eta0)

    def vector(self) -> np.ndarray:
        """Embedding into H_Y (length 2 n, end-major)."""
        n = self.channels.n_modes
        out = np.zeros(2 * n, dtype=complex)
        j = ENDS.index(self.end)
        out[j * n:(j + 1) * n] = self.coeffs
        return out

    def mass_outside(self, k: float = 5.0) -> float:
        """Mode-space mass with |h m - eta0| > k sqrt(h)."""
        far = np.abs(self.h * self.channels.modes - self.eta0) > k * math.sqrt(self.h)
        return float(np.sum(np.abs(self.coeffs[far]) ** 2))


def edge_limit(h: float) -> float:
    """Largest admissible |eta0|: one standard deviation sqrt(h/2) of |c_m|^2 inside |eta| = 1."""
    return 1.0 - math.sqrt(0.5 * h)


def coherent_state(center, h: float, channels: ChannelSet | None = None, spec: ModelSpec | None = None) -> CoherentState:
    """Normalized coherent state restricted to the open channels.

    ``center`` is (end, theta0, eta0).  The channel set is taken from
    ``channels``, else from ``spec``, else the default threshold rule at ``h``.
    """
    end, theta0, eta0 = center
    if end not in ENDS:
        raise ValueError(f"unknown end {end!r}")
    limit = edge_limit(h)
    if abs(eta0) > limit:
        raise TooCloseToEdge(f"|eta0|={abs(eta0)} exceeds 1 - sqrt(h/2) = {limit:.4f}")
    if channels is None:
        channels = open_channels(spec) if spec is not None else open_channels(ModelSpec(h=h))
    m = channels.modes
    c = gaussian_profile(m, eta0, h) * np.exp(-1j * m * theta0)
    c = c / np.linalg.norm(c)
    return CoherentState(end, float(theta0) % TWO_PI, float(eta0), h, channels, c)


def gaussian_overlap(d_theta: float, d_eta: float, h: float) -> float:
    """|<g_y, g_y'>| for untruncated coherent states: exp(-(d_theta^2 + d_eta^2) / (4 h))."""
    return math.exp(-(d_theta**2 + d_eta**2) / (4.0 * h))


# --- Husimi densities ---------------------------------------------------------


@dataclass
class HusimiGrid:
    """|<g_(end, theta, eta), u>|^2 on a product grid, shape (2, n_theta, n_eta)."""

    thetas: np.ndarray
    etas: np.ndarray
    values: np.ndarray
    h: float

    def end_mass(self) -> np.ndarray:
        return self.values.sum(axis=(1, 2))

    def total_mass(self) -> float:
        return float(self.values.sum())


def default_eta_grid(h: float, eta_max: float = 1.0, per_width: int = 8) -> np.ndarray:
    step = math.sqrt(h) / per_width
    n = int(math.ceil(2 * eta_max / step)) + 1
    return np.linspace(-eta_max, eta_max, n)


def _theta_points(channels: ChannelSet, factor: int = 2) -> int:
    m_max = int(np.max(np.abs(channels.modes))) if channels.n_modes else 0
    return sfft.next_fast_len(factor * m_max + 1)


def _mode_transform(weights, modes, n_theta):
    """sum_m weights[..., m] e^{i m theta_j} on theta_j = 2 pi j / n_theta."""
    arr = np.zeros(weights.shape[:-1] + (n_theta,), dtype=complex)
    arr[..., np.asarray(modes) % n_theta] = weights
    return n_theta * sfft.ifft(arr, axis=-1)


def husimi(u, channels: ChannelSet, h: float, etas=None, n_theta: int | None = None) -> HusimiGrid:
    """Husimi density of the channel vector ``u`` on both ends.

    Uses coherent states with the full-lattice normalization (h/pi)^(1/4), so
    the density integrates to ||u||^2 against (2 pi h)^-1 dtheta deta.
    """
    u = np.asarray(u, dtype=complex).reshape(2, -1)
    etas = default_eta_grid(h) if etas is None else np.asarray(etas, dtype=float)
    n_theta = _theta_points(channels) if n_theta is None else n_theta
    m = channels.modes
    G = _full_norm(h) * gaussian_profile(m[None, :], etas[:, None], h)  # (n_eta, n_modes)
    vals = np.empty((2, n_theta, len(etas)))
    for j in range(2):
        amp = _mode_transform(G * u[j][None, :], m, n_theta)  # (n_eta, n_theta)
        vals[j] = (np.abs(amp) ** 2).T
    thetas = TWO_PI * np.arange(n_theta) / n_theta
    return HusimiGrid(thetas, etas, vals, h)


@dataclass
class HusimiCenter:
    end: str
    theta: float
    eta: float
    end_fraction: float
    degenerate: bool = False


def husimi_center(u, channels: ChannelSet, h: float, grid: HusimiGrid | None = None,
                  threshold: float = 0.01, strict: bool = False) -> HusimiCenter:
    """Dominant end, circular-mean theta and mean eta over cells above ``threshold`` x peak.

    An end split worse than 60/40 is flagged as degenerate (a warning, or
    DegenerateState with ``strict``).
    """
    u = np.asarray(u, dtype=complex)
    if not np.any(u):
        raise ValueError("zero state has no Husimi centre")
    if grid is None:
        grid = husimi(u, channels, h)
    mass = grid.end_mass()
    j = int(np.argmax(mass))
    frac = float(mass[j] / mass.sum())
    degenerate = frac < 0.6
    if degenerate:
        msg = f"end mass split {frac:.2f} below 60/40"
        if strict:
            raise DegenerateState(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    vals = grid.values[j]
    w = np.where(vals >= threshold * vals.max(), vals, 0.0)
    th = grid.thetas[:, None]
    theta = math.atan2(float(np.sum(w * np.sin(th))), float(np.sum(w * np.cos(th)))) % TWO_PI
    eta = float(np.sum(w * grid.etas[None, :]) / np.sum(w))
    return HusimiCenter(ENDS[j], theta, eta, frac, degenerate)


def phase_distance(a, b) -> float:
    """Euclidean distance in (wrapped d_theta, d_eta) between (theta, eta) pairs."""
    return math.hypot(float(wrap_angle(a[0] - b[0])), a[1] - b[1])


# --- anti-Wick quantization ---------------------------------------------------


def anti_wick(psi, channels: ChannelSet, h: float, etas=None, n_theta: int | None = None,
              eta_max: float = 1.0) -> np.ndarray:
    """(2 pi h)^-1 sum over the grid of psi(y) |g_y><g_y| dtheta deta, on H_Y.

    ``psi(end, theta, eta)`` is evaluated on broadcast arrays (theta along
    axis 0, eta along axis 1) and may also be a constant.  The eta integral
    uses the trapezoid rule on ``etas`` (default: spacing sqrt(h)/8 on
    [-eta_max, eta_max]); the theta integral is exact for trigonometric
    polynomials of degree below ``n_theta`` / 2, with ``n_theta`` at least
    4 max|m| + 1 so that no mode difference aliases.
    """
    etas = default_eta_grid(h, eta_max) if etas is None else np.asarray(etas, dtype=float)
    n_theta = _theta_points(channels, 4) if n_theta is None else n_theta
    thetas = TWO_PI * np.arange(n_theta) / n_theta
    m = channels.modes
    n = len(m)
    w_eta = np.full(len(etas), etas[1] - etas[0]) if len(etas) > 1 else np.ones(1)
    w_eta[[0, -1]] *= 0.5
    G = _full_norm(h) * gaussian_profile(m[None, :], etas[:, None], h)  # (n_eta, n)
    diff = (m[:, None] - m[None, :]) % n_theta
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    for j, end in enumerate(ENDS):
        vals = psi(end, thetas[:, None], etas[None, :]) if callable(psi) else psi
        vals = np.broadcast_to(np.asarray(vals, dtype=complex), (n_theta, len(etas)))
        # hat_psi[d, eta] = sum_theta psi e^{-i d theta} dtheta
        hat = sfft.fft(vals, axis=0) * (TWO_PI / n_theta)
        block = np.einsum("e,em,ek,emk->mk", w_eta, G, G, hat[diff].transpose(2, 0, 1), optimize=True)
        out[j * n:(j + 1) * n, j * n:(j + 1) * n] = block / (TWO_PI * h)
    return out


# --- transport check ----------------------------------------------------------


@dataclass
class FIORow:
    y: tuple
    kappa_y: tuple
    center: HusimiCenter
    dist: float
    h: float

    @property
    def end_match(self) -> bool:
        return self.center.end == self.kappa_y[0]

    def as_dict(self):
        return {
            "y_end": self.y[0], "theta0": self.y[1], "eta0": self.y[2],
            "kappa_end": self.kappa_y[0], "kappa_theta": self.kappa_y[1], "kappa_eta": self.kappa_y[2],
            "center_end": self.center.end, "center_theta": self.center.theta, "center_eta": self.center.eta,
            "dist": self.dist, "h": self.h,
        }


@dataclass
class FIOReport:
    rows: list

    def at(self, h: float):
        return [r for r in self.rows if r.h == h]

    def median_distance(self, h: float) -> float:
        return float(np.median([r.dist for r in self.at(h)]))

    def end_match_fraction(self, h: float) -> float:
        rows = self.at(h)
        return sum(r.end_match for r in rows) / len(rows)

    def scaling_ratio(self, h_fine: float, h_coarse: float) -> float:
        return self.median_distance(h_fine) / self.median_distance(h_coarse)


def transport(center, spec: ModelSpec, SU=None, threshold: float = 0.01) -> FIORow:
    """Husimi centre of S_U g_y against kappa(y) at ``spec.h``."""
    if SU is None:
        SU = assemble(spec)[1]
    g = coherent_state(center, spec.h, SU.channels)
    out = SU.apply(g.vector())
    c = husimi_center(out, SU.channels, spec.h, threshold=threshold)
    k = kappa(BoundaryPoint(*center), spec)
    dist = phase_distance((c.theta, c.eta), (k.theta, k.eta))
    return FIORow(tuple(center), (k.end, k.theta, k.eta), c, dist, spec.h)


def fio_check(centers, spec: ModelSpec, hs=None, threshold: float = 0.01) -> FIOReport:
    """Tabulate transport distances at each h in ``hs`` (default h and h/4)."""
    hs = (spec.h, spec.h / 4) if hs is None else hs
    rows = []
    for h in hs:
        sp = spec.with_h(h)
        SU = assemble(sp)[1]
        rows.extend(transport(c, sp, SU, threshold) for c in centers)
    return FIOReport(rows)
