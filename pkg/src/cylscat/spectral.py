"""
Eigenphases of S_U, trace functionals, Weyl counts and equidistribution sweeps.

S_U is block diagonal over the transverse modes, so each eigenvalue pair
comes from a closed-form 2x2 eigendecomposition.  With two unit circles as
cross-section, the number of open channels is about 4/h, and for a
non-trapping model with rotation number free of resonances the scaled traces
h Tr f(S_U) of trigonometric polynomials f = sum_k a_k e^{i k theta} tend to
(4 / 2 pi) int f = 4 a_0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import BlockScatteringMatrix, assemble
from .classical import rotation_number
from .errors import NonUnitaryInput, NotHourglass
from .geometry import ModelSpec, eta_c, open_channels

TWO_PI = 2.0 * math.pi
# limit of h dim H_Y: c_1 vol(Y) with c_1 = 1/pi and vol(Y) = 2 * 2 pi
WEYL_LIMIT = 4.0
MAX_DEGREE = 8


@dataclass
class PhaseShiftSet:
    """Eigenphases in [0, 2 pi), two per mode block."""

    modes: np.ndarray
    phases: np.ndarray  # (n_modes, 2), each row sorted
    h: float
    model_id: str = ""
    modulus_defect: float = 0.0

    @property
    def count(self) -> int:
        return self.phases.size

    def sorted(self) -> np.ndarray:
        return np.sort(self.phases.ravel())

    def power_sum(self, k: int) -> complex:
        """Tr S_U^k = sum over eigenphases of e^{i k phase}."""
        if k == 0:
            return complex(self.count)
        return complex(np.sum(np.exp(1j * k * self.phases)))


def block_eigenvalues(blocks) -> np.ndarray:
    """Eigenvalues of each 2x2 block, (n, 2), from the characteristic polynomial."""
    B = np.asarray(blocks)
    tr = B[:, 0, 0] + B[:, 1, 1]
    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    disc = np.sqrt(tr * tr - 4.0 * det)
    # choose the root of larger modulus first so tr + disc never cancels;
    # the other root then follows from the product det without cancellation
    disc = np.where((np.conj(tr) * disc).real < 0, -disc, disc)
    lam1 = 0.5 * (tr + disc)
    lam2 = np.where(lam1 != 0, det / np.where(lam1 == 0, 1.0, lam1), 0.0)
    return np.stack((lam1, lam2), axis=1)


def eigenphases(SU: BlockScatteringMatrix, tol: float = 1e-6, model_id: str = "") -> PhaseShiftSet:
    if SU.unitarity_defect() > tol:
        raise NonUnitaryInput(f"unitarity defect {SU.unitarity_defect():.2e} exceeds {tol}")
    lam = block_eigenvalues(SU.blocks)
    defect = float(np.max(np.abs(np.abs(lam) - 1.0))) if lam.size else 0.0
    ph = np.sort(np.mod(np.angle(lam), TWO_PI), axis=1)
    # angles that round to 2 pi belong at 0
    ph[ph >= TWO_PI] = 0.0
    return PhaseShiftSet(np.asarray(SU.modes), ph, SU.h, model_id, defect)


def trace_power_direct(SU: BlockScatteringMatrix, k: int) -> complex:
    """Tr S_U^k from blockwise matrix powers (independent of the eigenphases)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    P = np.linalg.matrix_power(SU.blocks, k)
    return complex(np.trace(P, axis1=1, axis2=2).sum())


def trace_functional(ps: PhaseShiftSet, coeffs) -> complex:
    """sum_k a_k Tr S_U^k for f = sum_k a_k e^{i k theta}; ``coeffs`` maps k to a_k."""
    coeffs = dict(coeffs)
    if coeffs and max(abs(k) for k in coeffs) > MAX_DEGREE:
        raise ValueError(f"trigonometric degree above {MAX_DEGREE}")
    return complex(sum(a * ps.power_sum(k) for k, a in coeffs.items()))


def functional_target(coeffs) -> complex:
    """Limit of h Tr f(S_U): (c_1 vol(Y) / 2 pi) int f = 4 a_0."""
    return WEYL_LIMIT * complex(dict(coeffs).get(0, 0.0))


@dataclass
class WeylCount:
    h: float
    dim: int

    @property
    def scaled(self) -> float:
        return self.h * self.dim

    @property
    def ratio(self) -> float:
        return self.scaled / WEYL_LIMIT


def weyl_count(h: float, delta_thr: float = 1e-3) -> WeylCount:
    return WeylCount(h, open_channels(ModelSpec(h=h, delta_thr=delta_thr)).dim)


# --- distribution statistics ---------------------------------------------------


def cdf_deviation(phases) -> float:
    """sup over theta of |empirical CDF - theta / 2 pi| (Kolmogorov statistic)."""
    x = np.sort(np.asarray(phases, dtype=float).ravel()) / TWO_PI
    n = len(x)
    if n == 0:
        return 0.0
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - x), np.max(x - (i - 1) / n)))


def histogram(phases, bins: int = 32):
    counts, edges = np.histogram(np.asarray(phases).ravel(), bins=bins, range=(0.0, TWO_PI))
    return counts, edges


def fixed_point_count(spec: ModelSpec, power: int, etas) -> int:
    """Number of eta in the scan where power * delta_theta(eta) crosses 2 pi Z.

    delta_theta is the rotation angle of kappa^2 at fixed eta, so these are the
    eta-circles on which kappa^(2 power) has fixed points.
    """
    vals = np.array([power * rotation_number(float(e), spec) for e in etas]) / TWO_PI
    fl = np.floor(vals)
    return int(np.sum(np.abs(np.diff(fl))))


@dataclass
class FixedPointScan:
    power: int
    counts: tuple  # counts at successively refined grids

    @property
    def isolated(self) -> bool:
        """Counts stable under refinement: crossings are isolated points."""
        return len(set(self.counts)) == 1


def fixed_point_scan(spec: ModelSpec, power: int, eta_max: float = 0.95, sizes=(401, 801)) -> FixedPointScan:
    counts = tuple(fixed_point_count(spec, power, np.linspace(-eta_max, eta_max, n)) for n in sizes)
    return FixedPointScan(power, counts)


# --- sweeps -------------------------------------------------------------------


def trig_functionals(max_power: int = 4):
    """Default test functionals: f_k = e^{i k theta} for k = 0..max_power."""
    return {f"e{k}": {k: 1.0} for k in range(max_power + 1)}


@dataclass
class EquidistPoint:
    h: float
    dim: int
    traces: dict  # f_id -> h Tr f(S_U)
    targets: dict
    cdf_dev: float
    counts: np.ndarray
    phases: PhaseShiftSet = field(repr=False, default=None)


@dataclass
class EquidistReport:
    model_id: str
    points: list
    caveat: str = ""

    def scaled_trace(self, f_id: str) -> np.ndarray:
        return np.array([p.traces[f_id] for p in self.points])

    @property
    def hs(self) -> np.ndarray:
        return np.array([p.h for p in self.points])

    def rows(self):
        for p in self.points:
            for f_id, val in p.traces.items():
                tgt = p.targets[f_id]
                yield {
                    "h": p.h, "dim": p.dim, "f_id": f_id,
                    "re_trace_scaled": val.real, "im_trace_scaled": val.imag,
                    "target_re": tgt.real, "target_im": tgt.imag, "cdf_dev": p.cdf_dev,
                }


def equidist_sweep(spec: ModelSpec, hs, functionals=None, bins: int = 32, allow_unverified: bool = False,
                   model_id: str | None = None, unitary_tol: float = 1e-6) -> EquidistReport:
    """h Tr f(S_U) for each h and test functional, with the eigenphase CDF deviation.

    The limit theorem needs a non-trapping model whose return map has fixed
    points only on a null set; that is checked here for the bulge only, so
    other profiles need ``allow_unverified`` and carry a caveat in the report.
    """
    caveat = ""
    if spec.profile.kind == "hourglass":
        if not allow_unverified:
            raise ValueError("hourglass equidistribution hypotheses are unverified; pass allow_unverified=True")
        caveat = "hourglass: trapped set and fixed-point hypotheses not verified"
    functionals = trig_functionals() if functionals is None else functionals
    model_id = model_id or spec.profile.kind
    points = []
    for h in hs:
        SU = assemble(spec.with_h(h))[1]
        ps = eigenphases(SU, tol=unitary_tol, model_id=model_id)
        traces = {fid: h * trace_functional(ps, c) for fid, c in functionals.items()}
        targets = {fid: functional_target(c) for fid, c in functionals.items()}
        counts, _ = histogram(ps.phases, bins)
        points.append(EquidistPoint(h, ps.count, traces, targets, cdf_deviation(ps.phases), counts, ps))
    return EquidistReport(model_id, points, caveat)


# --- hourglass dichotomy ------------------------------------------------------


@dataclass
class DichotomyRow:
    m: int
    hm: float
    trans: float  # |t|^2
    refl: float  # |r_L|^2
    band: str

    @property
    def passed(self) -> bool | None:
        if self.band == "transmit":
            return self.refl <= 0.01
        if self.band == "reflect":
            return self.trans <= 0.01
        return None


@dataclass
class DichotomyReport:
    eta_c: float
    h: float
    rows: list

    def band(self, name: str):
        return [r for r in self.rows if r.band == name]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows if r.passed is not None)


def dichotomy_report(spec: ModelSpec, S: BlockScatteringMatrix | None = None, gap: float = 0.1,
                     upper: float = 0.9) -> DichotomyReport:
    """Per-mode |t|^2, |r|^2 for m >= 0 with the bands around eta_c.

    transmit: h m <= eta_c - gap (reflection should vanish);
    reflect:  eta_c + gap <= h m <= upper (transmission should vanish);
    tunnel:   everything else (not graded).
    """
    if spec.profile.kind != "hourglass":
        raise NotHourglass("dichotomy needs an hourglass profile")
    ec = eta_c(spec.profile)
    if S is None:
        S = assemble(spec)[0]
    rows = []
    for m, B in zip(S.modes, S.blocks):
        if m < 0:
            continue
        hm = spec.h * m
        if hm <= ec - gap:
            band = "transmit"
        elif ec + gap <= hm <= upper:
            band = "reflect"
        else:
            band = "tunnel"
        rows.append(DichotomyRow(int(m), hm, float(abs(B[1, 0]) ** 2), float(abs(B[0, 0]) ** 2), band))
    return DichotomyReport(ec, spec.h, rows)


# --- plot scripts ---------------------------------------------------------------


def histogram_script(data_file: str, title: str = "eigenphase histogram") -> str:
    """gnuplot script plotting ``data_file`` with columns (bin_left, bin_right, count)."""
    return (
        "set terminal pngcairo size 800,500\n"
        f"set output '{data_file}.png'\n"
        f"set title '{title}'\n"
        "set xlabel 'phase'\nset ylabel 'count'\n"
        "set xrange [0:2*pi]\nset style fill solid 0.5\n"
        f"plot '{data_file}' using (($1+$2)/2):3:($2-$1) with boxes notitle\n"
    )


def trend_script(data_file: str, title: str = "scaled traces") -> str:
    """gnuplot script for columns (h, |h Tr f|) on log-log axes."""
    return (
        "set terminal pngcairo size 800,500\n"
        f"set output '{data_file}.png'\n"
        f"set title '{title}'\n"
        "set logscale xy\nset xlabel 'h'\nset ylabel '|h Tr f(S_U)|'\n"
        f"plot '{data_file}' using 1:2 with linespoints notitle\n"
    )
