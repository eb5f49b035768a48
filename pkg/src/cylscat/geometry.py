"""
Model family: warped-product surfaces R_s x S^1 with two cylindrical ends.

The metric is ds^2 + f(s)^4 dtheta^2 with a profile f that equals 1 outside
[-a, a].  Each end carries the coordinate r = |s| - (a + 4) - c, where c is the
origin offset, so the scattering sections {r = 0} sit at |s| = a + 4 + c.

Profiles are f(s) = 1 + A * beta(s / w) with the C^infinity bump
beta(x) = exp(1 - 1/(1 - x^2)) on |x| < 1 (beta(0) = 1), so A > 0 gives a bulge
with maximum 1 + A and -1 < A < 0 an hourglass with neck radius 1 + A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NotHourglass, ThresholdCollision

ENDS = ("L", "R")
# Distance in r between the compact part |s| <= a and the section r = 0.
SECTION_GAP = 4.0


def bump(x):
    """Return beta(x), beta'(x), beta''(x) for the unit bump on (-1, 1)."""
    x = np.asarray(x, dtype=float)
    b = np.zeros_like(x)
    db = np.zeros_like(x)
    d2b = np.zeros_like(x)
    u = 1.0 - x * x
    # exp(1 - 1/u) underflows long before the polynomial factors overflow
    inside = u > 1e-3
    xi, ui = x[inside], u[inside]
    bi = np.exp(1.0 - 1.0 / ui)
    g1 = -2.0 * xi / ui**2
    g2 = -2.0 / ui**2 - 8.0 * xi**2 / ui**3
    b[inside] = bi
    db[inside] = bi * g1
    d2b[inside] = bi * (g1 * g1 + g2)
    return b, db, d2b


@dataclass(frozen=True)
class ProfileFunction:
    """Warping profile f(s) = 1 + amplitude * beta(s / width).

    ``width`` is the smoothness scale (half-width of the bump); it defaults to
    the half-width ``a`` of the compact part and may not exceed it.
    """

    kind: str = "constant"
    amplitude: float = 0.0
    a: float = 1.0
    width: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "bulge", "hourglass"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.a <= 0:
            raise ValueError("half-width a must be positive")
        if self.width is None:
            object.__setattr__(self, "width", float(self.a))
        if not 0 < self.width <= self.a:
            raise ValueError("bump width must lie in (0, a]")
        A = self.amplitude
        if self.kind == "constant" and A != 0:
            raise ValueError("constant profile requires amplitude 0")
        if self.kind == "bulge" and not A > 0:
            raise ValueError("bulge requires amplitude > 0")
        if self.kind == "hourglass" and not -1 < A < 0:
            raise ValueError("hourglass requires -1 < amplitude < 0")

    def __call__(self, s):
        return eval_profile(self, s)

    @property
    def f_min(self) -> float:
        return 1.0 + min(self.amplitude, 0.0)

    @property
    def f_max(self) -> float:
        return 1.0 + max(self.amplitude, 0.0)


def _bump_scalar(x: float):
    u = 1.0 - x * x
    if u <= 1e-3:
        return 0.0, 0.0, 0.0
    b = math.exp(1.0 - 1.0 / u)
    g1 = -2.0 * x / (u * u)
    g2 = -2.0 / (u * u) - 8.0 * x * x / (u * u * u)
    return b, b * g1, b * (g1 * g1 + g2)


def eval_profile(p: ProfileFunction, s):
    """Evaluate (f, f', f'') at ``s`` (scalar or array)."""
    w = p.width
    A = p.amplitude
    if isinstance(s, float):
        b, db, d2b = _bump_scalar(s / w)
        return 1.0 + A * b, A * db / w, A * d2b / (w * w)
    scalar = np.ndim(s) == 0
    s = np.asarray(s, dtype=float)
    b, db, d2b = bump(s / w)
    f = 1.0 + A * b
    df = A * db / w
    d2f = A * d2b / w**2
    if scalar:
        return float(f), float(df), float(d2f)
    return f, df, d2f


@dataclass(frozen=True)
class PotentialTerm:
    """Smooth compactly supported term beta(s/w) * sum_k c_k (s/w)^k."""

    coeffs: tuple = (0.0,)
    width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.width <= 0:
            raise ValueError("potential width must be positive")

    @classmethod
    def bump(cls, amplitude: float, width: float = 1.0) -> "PotentialTerm":
        return cls((amplitude,), width)

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coeffs)

    @property
    def is_even(self) -> bool:
        return all(c == 0.0 for c in self.coeffs[1::2])

    def value(self, s):
        if self.is_zero:
            return 0.0 if isinstance(s, float) else np.zeros(np.shape(s))
        if isinstance(s, float):
            x = s / self.width
            return _bump_scalar(x)[0] * sum(c * x**k for k, c in enumerate(self.coeffs))
        x = np.asarray(s, dtype=float) / self.width
        b, _, _ = bump(x)
        return b * np.polynomial.polynomial.polyval(x, self.coeffs)

    def derivative(self, s):
        if self.is_zero:
            return 0.0 if isinstance(s, float) else np.zeros(np.shape(s))
        x = np.asarray(s, dtype=float) / self.width
        b, db, _ = bump(x)
        c = self.coeffs
        poly = np.polynomial.polynomial.polyval(x, c)
        dpoly = np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(c)) if len(c) > 1 else 0.0
        return (db * poly + b * dpoly) / self.width


ZERO = PotentialTerm()


@dataclass(frozen=True)
class PotentialSpec:
    """V = V0 + h^2 V2, plus the h^2 W term of the flat-cylinder model.

    Only V0 is seen by the classical flow; V2 and W enter the quantum
    problem at order h^2.
    """

    V0: PotentialTerm = ZERO
    V2: PotentialTerm = ZERO
    W: PotentialTerm = ZERO

    def support_halfwidth(self) -> float:
        return max((t.width for t in (self.V0, self.V2, self.W) if not t.is_zero), default=0.0)


@dataclass(frozen=True)
class ModelSpec:
    profile: ProfileFunction = field(default_factory=ProfileFunction)
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    h: float = 0.1
    origin_offset: float = 0.0
    delta_thr: float = 1e-3

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.potential.support_halfwidth() > self.a:
            raise ValueError("potential must be supported in [-a, a]")
        if self.origin_offset <= -SECTION_GAP:
            raise ValueError("origin offset must exceed -4")
        if not 0 <= self.delta_thr < 1:
            raise ValueError("delta_thr must lie in [0, 1)")

    @property
    def a(self) -> float:
        return self.profile.a

    @property
    def section(self) -> float:
        """|s| at which the section r = 0 sits."""
        return self.a + SECTION_GAP + self.origin_offset

    def with_h(self, h: float) -> "ModelSpec":
        return replace(self, h=h)

    def with_offset(self, c: float) -> "ModelSpec":
        return replace(self, origin_offset=c)

    def is_mirror_symmetric(self) -> bool:
        """True when the model is invariant under s -> -s (profiles always are)."""
        pot = self.potential
        return pot.V0.is_even and pot.V2.is_even and pot.W.is_even

    def V0(self, s):
        return self.potential.V0.value(s)

    def dV0(self, s):
        return self.potential.V0.derivative(s)


def r_of_s(s, spec: ModelSpec):
    """Return (end, r) for a point on one of the ends (|s| > a)."""
    s = float(s)
    if abs(s) <= spec.a:
        raise ValueError("point lies in the compact part |s| <= a")
    end = "R" if s > 0 else "L"
    return end, abs(s) - spec.section


def s_of_r(r, end: str, spec: ModelSpec):
    if end not in ENDS:
        raise ValueError(f"unknown end {end!r}")
    sign = 1.0 if end == "R" else -1.0
    return sign * (np.asarray(r, dtype=float) + spec.section)


@dataclass(frozen=True)
class ChannelSet:
    """Open transverse modes of the unit circle, shared by both ends.

    Channels are ordered end-major: all L modes (sorted by m), then all R modes.
    """

    h: float
    modes: np.ndarray
    tau: np.ndarray
    threshold_modes: tuple = ()
    ends: tuple = ENDS

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def dim(self) -> int:
        return len(self.ends) * len(self.modes)

    def labels(self):
        return [(e, int(m)) for e in self.ends for m in self.modes]


def open_channels(spec: ModelSpec, strict: bool = False) -> ChannelSet:
    """Modes m with h^2 m^2 <= 1 - delta_thr.

    Modes with |1 - h^2 m^2| < delta_thr are reported in ``threshold_modes`` and
    left out; with ``strict=True`` they raise ThresholdCollision instead.
    """
    h, d = spec.h, spec.delta_thr
    m_top = int(math.floor(1.0 / h)) + 2
    m = np.arange(-m_top, m_top + 1)
    gap = 1.0 - (h * m) ** 2
    near = (np.abs(gap) < d) | (gap == 0.0)
    if strict and near.any():
        raise ThresholdCollision(f"modes {m[near].tolist()} within {d} of threshold at h={h}")
    keep = (gap >= d) & (gap > 0.0)
    modes = m[keep]
    return ChannelSet(
        h=h,
        modes=modes,
        tau=np.sqrt(1.0 - (h * modes) ** 2),
        threshold_modes=tuple(int(x) for x in m[near]),
    )


def eta_c(p: ProfileFunction) -> float:
    """Critical angular momentum of an hourglass: |eta| = f_min^2.

    Geodesics with |eta| < eta_c pass the neck; |eta| > eta_c turn back.
    """
    if p.kind != "hourglass":
        raise NotHourglass(f"eta_c needs an hourglass profile, got {p.kind}")
    return p.f_min**2


def cylinder(a: float = 1.0, h: float = 0.1, W: PotentialTerm = ZERO, **kw) -> ModelSpec:
    return ModelSpec(ProfileFunction("constant", 0.0, a), PotentialSpec(W=W), h=h, **kw)


def bulge(amplitude: float = 0.3, a: float = 1.0, h: float = 0.1, **kw) -> ModelSpec:
    return ModelSpec(ProfileFunction("bulge", amplitude, a), h=h, **kw)


def hourglass(f_min: float = 0.8, a: float = 1.0, h: float = 0.1, **kw) -> ModelSpec:
    return ModelSpec(ProfileFunction("hourglass", f_min - 1.0, a), h=h, **kw)
