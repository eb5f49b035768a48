"""
Time-dependent route to the scattering matrix, one transverse mode at a time.

For a multiplier psi2(h^2 Delta_Y) supported where every trajectory leaves the
core before t_psi, the scattering matrix satisfies (up to O(h^infinity))

    S psi2 = e^{i t_psi / h} tau^{-1} psi_sp T_+ (chi_M - chi_1)
             e^{-i t_psi P / h} tau R_- psi_sp psi2,

with R_- g = chi(r) e^{-i r tau / h} g an incoming packet on one end and
T_+ f = int e^{-i r tau / h} f dr the outgoing-coefficient readout.  Rotational
symmetry reduces everything to scalars per mode, so a column of S psi2 costs
one 1D evolution.

The default evolution is a Chebyshev expansion of e^{-itP/h} on a periodic
Fourier grid; the initial packet is built directly in Fourier space and
filtered to incoming momenta near the energy shell, so nothing outruns the
box and nothing lingers at the window edges.  A Crank-Nicolson
stepper on the same grid (second-order differences, Dirichlet ends) is
available as ``method="crank_nicolson"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import fft as sfft
from scipy import integrate, linalg, special

from .channels import assemble, effective_potential
from .classical import BoundaryPoint, scattering_map
from .errors import BoundaryContamination, GridTooCoarse, Trapped
from .geometry import ENDS, ModelSpec, bump, open_channels

# Momentum pre-filter on the initial packet: a Gaussian in h k along the
# incoming direction, centred on the incoming energy-1 momenta tau in
# [sqrt(0.3), 1].  The readout T_+ only sees the energy-1 component, which the
# filter scales by g(tau) exactly, so the result is divided by g(tau).  The
# filter keeps the packet well localized in s and makes components slower than
# 2 FILTER_SLOW or faster than 2 FILTER_FAST negligible.
FILTER_CENTER = 0.775
FILTER_SIGMA = 0.13
FILTER_SLOW = 0.35
FILTER_FAST = 1.5
# the box must also hold the far tail of the filter, up to this h k
FILTER_EDGE = 1.75
# the low-pass projection of U_m starts rolling off at this h q; backscattering
# on the energy shell needs wavenumbers up to 2 tau / h <= 2 / h
POTENTIAL_PASS = 2.2
CLEARANCE_TOL = 1e-8


def smooth_step(x):
    """C^infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[x >= 1] = 1.0
    mid = (x > 0) & (x < 1)
    xm = x[mid]
    a = np.exp(-1.0 / xm)
    b = np.exp(-1.0 / (1.0 - xm))
    out[mid] = a / (a + b)
    return out


def half_bump(x, support: float = 0.7):
    """beta(x / support) for x >= 0: equal to 1 at 0, vanishing for x >= support."""
    x = np.asarray(x, dtype=float)
    return np.where(x < support, bump(np.clip(x / support, -1.0, 1.0))[0], 0.0)


_BUMP_MASS = integrate.quad(lambda x: float(bump(x)[0]), -1.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


@dataclass(frozen=True)
class CutoffConfig:
    """Cutoffs and times for the propagator identity.

    chi is the normalized bump on (-1/4, 0); chi_j(r) is 1 for r < -2 + j and
    0 for r > -3/2 + j; psi_sp(x) is 1 on [0, b_psi] and 0 from ``psi_sp_edge``.
    """

    t_psi: float
    M: int
    b_psi: float = 0.75
    psi_sp_edge: float = 0.95

    def __post_init__(self):
        if self.t_psi <= 0:
            raise ValueError("t_psi must be positive")
        if self.M < math.ceil(2 * self.t_psi) + 2:
            raise ValueError("M must be at least ceil(2 t_psi) + 2")
        if not 0 < self.b_psi < self.psi_sp_edge <= 1:
            raise ValueError("need 0 < b_psi < psi_sp_edge <= 1")

    @classmethod
    def from_time(cls, t_psi: float, max_speed: float = 2.0 * FILTER_FAST, **kw) -> "CutoffConfig":
        """M = ceil(max_speed * t_psi) + 2, so the fastest component stays inside the window."""
        speed = max(max_speed, 2.0)
        return cls(t_psi=t_psi, M=int(math.ceil(speed * t_psi)) + 2, **kw)

    @staticmethod
    def chi(r):
        r = np.asarray(r, dtype=float)
        x = (r + 0.125) / 0.125
        return bump(x)[0] / (0.125 * _BUMP_MASS)

    @staticmethod
    def chi_j(j: int, r):
        return 1.0 - smooth_step((np.asarray(r, dtype=float) - (-2.0 + j)) / 0.5)

    def window(self, r):
        """chi_M - chi_1: 1 on [-1/2, M - 2], 0 for r < -1 or r > M - 3/2."""
        return self.chi_j(self.M, r) - self.chi_j(1, r)

    def psi_sp(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 - smooth_step((x - self.b_psi) / (self.psi_sp_edge - self.b_psi))

    def box_halfwidth(self, spec: ModelSpec) -> float:
        """Half-width of the periodic box.

        It holds the window and the distance 2 FILTER_EDGE t_psi covered by
        the fastest non-negligible component, with a margin that grows with h
        because the packet's tails beyond that front are wider at large h.
        """
        reach = max(float(self.M), 2.0 * FILTER_EDGE * self.t_psi)
        extra = 0.2 + 20.0 * max(0.0, spec.h - 0.05)
        return spec.section + (1.0 + extra) * reach + 2.0


def max_flight_time(spec: ModelSpec, etas, t_max: float = 1e3) -> float:
    """Largest classical flight time t_+ over the given |eta| values and both ends."""
    worst = 0.0
    for eta in etas:
        for end in ENDS:
            res = scattering_map(BoundaryPoint(end, 0.0, float(eta)), spec, t_max=t_max)
            if not res.exited:
                raise Trapped(f"eta={eta} on {end} is trapped; shrink the multiplier support", t_max)
            worst = max(worst, res.t)
    return worst


def cutoffs_for(spec: ModelSpec, multiplier=half_bump, margin: float = 1.2, pad: float = 1.0,
                stretch: float = 1.0, **kw) -> CutoffConfig:
    """Admissible cutoffs for the modes where ``multiplier`` is nonzero.

    t_psi is the larger of margin * sup t_+ + pad and the time the slowest
    filtered component needs to cross both free stretches (2 section + 1 at
    speed 2 FILTER_SLOW, with the same margin); ``stretch`` scales the result.
    """
    ch = open_channels(spec)
    w = multiplier((spec.h * ch.modes) ** 2)
    etas = np.unique(np.abs(spec.h * ch.modes[w != 0]))
    t_sup = max_flight_time(spec, etas) if len(etas) else 0.0
    t_slow = (2.0 * spec.section + 1.0) / (2.0 * FILTER_SLOW)
    return CutoffConfig.from_time(stretch * margin * max(t_sup, t_slow) + pad, **kw)


def momentum_filter(hk, end: str):
    """Incoming-direction filter g(h k) for a packet launched on ``end``."""
    x = -np.asarray(hk) if end == "R" else np.asarray(hk)
    return np.exp(-0.5 * ((x - FILTER_CENTER) / FILTER_SIGMA) ** 2)


@dataclass
class WaveState1D:
    """Mode-m wave function on the periodic grid s_n = -L + n ds, n < N."""

    m: int
    h: float
    L: float
    values: np.ndarray
    time: float = 0.0

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def ds(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def grid(self) -> np.ndarray:
        return -self.L + self.ds * np.arange(self.n)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.ds))

    def edge_fraction(self, cells: int = 2) -> float:
        """L^2 mass within ``cells`` of either edge, relative to the norm."""
        v = self.values
        edge = np.concatenate((v[..., :cells], v[..., -cells:]), axis=-1)
        nrm = self.norm()
        return float(np.sqrt(np.sum(np.abs(edge) ** 2) * self.ds) / nrm) if nrm > 0 else 0.0


def grid_size(L: float, h: float, oversample: float = 2.0) -> int:
    """Fast FFT length with Nyquist wavenumber >= oversample * FILTER_EDGE / h."""
    k_nyq = oversample * FILTER_EDGE / h
    return sfft.next_fast_len(int(math.ceil(2.0 * L * k_nyq / math.pi)))


def _wavenumbers(n: int, ds: float) -> np.ndarray:
    return 2.0 * np.pi * sfft.fftfreq(n, ds)


def _r_on_end(s, end: str, spec: ModelSpec):
    sign = 1.0 if end == "R" else -1.0
    return sign * s - spec.section


def build_R_minus_mode(
    m: int, spec: ModelSpec, cfg: CutoffConfig, end: str = "R", L: float | None = None,
    n: int | None = None, scaled: bool = True, filtered: bool = True, quad_nodes: int = 400,
) -> WaveState1D:
    """Incoming packet chi(r) e^{-i r tau/h} on ``end``, scaled by tau psi_sp(h^2 m^2).

    The grid values are the band-limited interpolant whose Fourier
    coefficients are the exact integrals of the packet; with ``filtered`` they
    are multiplied by the incoming-direction filter g(h k).
    """
    if end not in ENDS:
        raise ValueError(f"unknown end {end!r}")
    h = spec.h
    tau = math.sqrt(1.0 - (h * m) ** 2)
    L = cfg.box_halfwidth(spec) if L is None else L
    n = grid_size(L, h) if n is None else n
    ds = 2.0 * L / n
    scale = tau * float(cfg.psi_sp((h * m) ** 2)) if scaled else 1.0
    if scale == 0.0:
        return WaveState1D(int(m), h, L, np.zeros(n, dtype=complex))
    k = _wavenumbers(n, ds)
    # Gauss-Legendre over the support of chi
    x, w = np.polynomial.legendre.leggauss(quad_nodes)
    r = -0.125 + 0.125 * x
    w = 0.125 * w
    sign = 1.0 if end == "R" else -1.0
    s = sign * (r + spec.section)
    f = CutoffConfig.chi(r) * np.exp(-1j * r * tau / h) * w
    coef = (np.exp(-1j * np.outer(k, s)) @ f) / (2.0 * L)
    if filtered:
        coef = coef * momentum_filter(h * k, end)
    # values at s_j = -L + j ds
    vals = n * sfft.ifft(coef * np.exp(-1j * k * L))
    return WaveState1D(int(m), h, L, scale * vals)


def apply_T_minus_mode(state: WaveState1D, m: int, h: float, end: str, spec: ModelSpec) -> complex:
    """int e^{+i r tau/h} u dr over ``end`` (left inverse of the unscaled R_-)."""
    tau = math.sqrt(1.0 - (h * m) ** 2)
    r = _r_on_end(state.grid, end, spec)
    on_end = r > -spec.section
    integrand = np.where(on_end, np.exp(1j * r * tau / h) * state.values, 0.0)
    return complex(np.sum(integrand) * state.ds)


def apply_T_plus_mode(state: WaveState1D, m: int, h: float, end: str, spec: ModelSpec,
                      cfg: CutoffConfig | None = None) -> complex:
    """int e^{-i r tau/h} (chi_M - chi_1)(r) u dr over ``end``.

    Without ``cfg`` the window is omitted and the whole end is integrated.
    The integrand is band-limited well below the grid's Nyquist limit, so the
    periodic trapezoid sum is spectrally accurate.
    """
    tau = math.sqrt(1.0 - (h * m) ** 2)
    r = _r_on_end(state.grid, end, spec)
    weight = cfg.window(r) if cfg is not None else (r > -spec.section).astype(float)
    return complex(np.sum(np.exp(-1j * r * tau / h) * weight * state.values) * state.ds)


# --- evolution --------------------------------------------------------------


def _chebyshev_evolve(values, U, h, ds, t, workers=None, tol=1e-15):
    """e^{-i t P / h} u for P = -h^2 d^2/ds^2 + U on the periodic grid.

    ``values`` and ``U`` have shape (..., n); each row is evolved with its own
    potential.  Chebyshev expansion with Bessel coefficients.
    """
    n = values.shape[-1]
    k = _wavenumbers(n, ds)
    kin = (h * k) ** 2
    e_min = min(float(np.min(U)), 0.0) - 1e-3
    e_max = float(kin.max() + np.max(U)) + 1e-3
    c = 0.5 * (e_max + e_min)
    rad = 0.5 * (e_max - e_min)
    alpha = rad * t / h
    if alpha == 0:
        return values.copy()
    # number of terms: J_k(alpha) decays super-exponentially once k > alpha
    K = int(alpha + 30.0 * alpha ** (1.0 / 3.0) + 30)
    orders = np.arange(K + 1)
    jv = special.jv(orders, alpha)
    while abs(jv[-1]) > tol and K < 4 * alpha + 200:
        K += 20
        orders = np.arange(K + 1)
        jv = special.jv(orders, alpha)
    coeffs = 2.0 * (-1j) ** orders * jv
    coeffs[0] = jv[0]

    shifted = (U - c) / rad

    def apply(v):
        return sfft.ifft(kin / rad * sfft.fft(v, axis=-1, workers=workers), axis=-1, workers=workers) + shifted * v

    prev = values.astype(complex)
    cur = apply(prev)
    acc = coeffs[0] * prev + coeffs[1] * cur
    for j in range(2, K + 1):
        prev, cur = cur, 2.0 * apply(cur) - prev
        acc += coeffs[j] * cur
    return np.exp(-1j * c * t / h) * acc


def _crank_nicolson_evolve(values, U, h, ds, t, dt=None):
    """Crank-Nicolson steps for one row with second-order differences, Dirichlet ends."""
    n = values.shape[-1]
    if dt is None:
        dt = 0.05 * h
    steps = max(1, int(math.ceil(t / dt)))
    dt = t / steps
    off = -h * h / ds**2
    diag = 2.0 * h * h / ds**2 + U
    lam = 0.5j * dt / h
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = lam * off
    ab[1] = 1.0 + lam * diag
    ab[2, :-1] = lam * off
    v = values.astype(complex)
    for _ in range(steps):
        rhs = (1.0 - lam * diag) * v
        rhs[1:] -= lam * off * v[:-1]
        rhs[:-1] -= lam * off * v[1:]
        v = linalg.solve_banded((1, 1), ab, rhs, check_finite=False)
    return v


def band_limited_potential(spec: ModelSpec, m: int, L: float, n: int, refine: int = 8) -> np.ndarray:
    """Grid values of a smooth low-pass projection of U_m.

    Plain point samples would act as the aliased interpolant of U_m, whose
    error at low wavenumbers accumulates in the phase over long times.  The
    projected potential differs from U_m only at wavenumbers above
    POTENTIAL_PASS / h, which no transition on the packet's energy shell
    uses.  Its Fourier coefficients come from samples on a ``refine`` times
    finer grid.
    """
    nf = n * refine
    fine = -L + (2.0 * L / nf) * np.arange(nf)
    coef = sfft.fft(effective_potential(spec, m, fine))
    idx = np.rint(sfft.fftfreq(n) * n).astype(int)
    # smooth roll-off between POTENTIAL_PASS / h and the Nyquist wavenumber
    # keeps the projected potential localized in s
    q = np.abs(idx) * (np.pi / L) * spec.h
    q_nyq = (n / 2) * (np.pi / L) * spec.h
    if q_nyq <= POTENTIAL_PASS:
        raise GridTooCoarse(f"grid Nyquist h k = {q_nyq:.2f} must exceed {POTENTIAL_PASS}")
    taper = 1.0 - smooth_step((q - POTENTIAL_PASS) / (q_nyq - POTENTIAL_PASS))
    low = coef[idx % nf] * taper
    return sfft.ifft(low).real / refine


def mode_grid_potential(state: WaveState1D, spec: ModelSpec) -> np.ndarray:
    return band_limited_potential(spec, state.m, state.L, state.n)


def evolve(state: WaveState1D, t: float, spec: ModelSpec, method: str = "chebyshev",
           segments: int = 1, check_clearance: bool = True, dt=None, workers=None) -> WaveState1D:
    """Apply e^{-i t P/h} with P = -h^2 d^2/ds^2 + U_m(s).

    The evolution is split into ``segments`` pieces and the boundary
    clearance is checked after each; BoundaryContamination is raised when more
    than 1e-8 of the norm sits within two cells of the box edge.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return replace(state, values=state.values.copy())
    U = mode_grid_potential(state, spec)
    v = state.values
    for _ in range(segments):
        if method == "chebyshev":
            v = _chebyshev_evolve(v, U, state.h, state.ds, t / segments, workers=workers)
        elif method == "crank_nicolson":
            v = _crank_nicolson_evolve(v, U, state.h, state.ds, t / segments, dt=dt)
        else:
            raise ValueError(f"unknown method {method!r}")
        out = WaveState1D(state.m, state.h, state.L, v, state.time + t)
        if check_clearance and out.edge_fraction() > CLEARANCE_TOL:
            raise BoundaryContamination(f"mode {state.m}: edge mass {out.edge_fraction():.2e}")
    return out


# --- the identity ------------------------------------------------------------


@dataclass
class PropagatorResult:
    """Blocks of S psi2 from both routes, shape (n_modes, 2, 2) in (L, R) order."""

    h: float
    modes: np.ndarray
    weights: np.ndarray  # psi2(h^2 m^2)
    propagator: np.ndarray
    stationary: np.ndarray
    cfg: CutoffConfig
    max_edge_fraction: float

    def column_errors(self) -> np.ndarray:
        """Relative error per (mode, incoming end) column, nan where psi2 = 0."""
        diff = np.linalg.norm(self.propagator - self.stationary, axis=1)
        ref = np.linalg.norm(self.stationary, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(ref > 0, diff / ref, np.nan)

    def max_relative_error(self) -> float:
        err = self.column_errors()
        return float(np.nanmax(err))

    def rows(self):
        for idx, m in enumerate(self.modes):
            for j, e_in in enumerate(ENDS):
                for i, e_out in enumerate(ENDS):
                    st = self.stationary[idx, i, j]
                    pr = self.propagator[idx, i, j]
                    ref = np.linalg.norm(self.stationary[idx, :, j])
                    yield {
                        "m": int(m), "end_in": e_in, "end_out": e_out,
                        "route_stationary_re": st.real, "route_stationary_im": st.imag,
                        "route_propagator_re": pr.real, "route_propagator_im": pr.imag,
                        "abs_err": abs(pr - st),
                        "rel_err": abs(pr - st) / ref if ref > 0 else 0.0,
                    }


def smatrix_via_propagator(spec: ModelSpec, cfg: CutoffConfig | None = None, multiplier=half_bump,
                           modes=None, workers=None, oversample: float = 2.0, segments: int = 2,
                           chunk: int = 32, use_symmetry: bool = True) -> PropagatorResult:
    """Columns of S psi2(h^2 Delta_Y) by the propagator identity, with the stationary blocks.

    Only modes m >= 0 are evolved by default; U_m depends on m^2, so
    negative modes carry identical blocks.
    """
    h = spec.h
    if cfg is None:
        cfg = cutoffs_for(spec, multiplier)
    ch = open_channels(spec)
    if modes is None:
        modes = ch.modes[ch.modes >= 0]
    modes = np.asarray(modes, dtype=int)
    weights = multiplier((h * modes) ** 2)
    L = cfg.box_halfwidth(spec)
    n = grid_size(L, h, oversample)
    ds = 2.0 * L / n
    S_full, _ = assemble(spec)
    stationary = np.array([S_full.block(int(m)) for m in modes]) * weights[:, None, None]

    prop = np.zeros((len(modes), 2, 2), dtype=complex)
    # for a mirror-symmetric model the column from L is the mirror of the one from R
    ends_run = (1,) if spec.is_mirror_symmetric() and use_symmetry else (0, 1)
    active = [(idx, j) for idx in range(len(modes)) if weights[idx] != 0 for j in ends_run]
    worst_edge = 0.0
    for start in range(0, len(active), chunk):
        batch = active[start:start + chunk]
        init = np.empty((len(batch), n), dtype=complex)
        U = np.empty((len(batch), n))
        for b, (idx, j) in enumerate(batch):
            m = int(modes[idx])
            st = build_R_minus_mode(m, spec, cfg, ENDS[j], L=L, n=n)
            init[b] = st.values * weights[idx]
            U[b] = band_limited_potential(spec, m, L, n)
        v = init
        for _ in range(segments):
            v = _chebyshev_evolve(v, U, h, ds, cfg.t_psi / segments, workers=workers)
            edge = np.concatenate((v[:, :2], v[:, -2:]), axis=1)
            frac = np.sqrt(np.sum(np.abs(edge) ** 2, axis=1) / np.maximum(np.sum(np.abs(v) ** 2, axis=1), 1e-300))
            worst_edge = max(worst_edge, float(frac.max()))
            if frac.max() > CLEARANCE_TOL:
                raise BoundaryContamination(f"edge mass {frac.max():.2e} exceeds {CLEARANCE_TOL}")
        for b, (idx, j) in enumerate(batch):
            m = int(modes[idx])
            tau = math.sqrt(1.0 - (h * m) ** 2)
            g = float(momentum_filter(-tau, "R"))
            pref = np.exp(1j * cfg.t_psi / h) / tau * float(cfg.psi_sp((h * m) ** 2)) / g
            state = WaveState1D(m, h, L, v[b], cfg.t_psi)
            for i, e_out in enumerate(ENDS):
                prop[idx, i, j] = pref * apply_T_plus_mode(state, m, h, e_out, spec, cfg)
    if ends_run == (1,):
        prop[:, 0, 0] = prop[:, 1, 1]
        prop[:, 1, 0] = prop[:, 0, 1]
    return PropagatorResult(h, modes, weights, prop, stationary, cfg, worst_edge)
