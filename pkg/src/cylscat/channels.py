"""
Per-mode radial scattering and the block scattering matrix.

Conjugating h^2 Delta_X by f turns each transverse mode e^{i m theta} into the
one-dimensional problem

    -h^2 v'' + U_m(s) v = v,
    U_m = h^2 f''/f + h^2 m^2 f^-4 + V0 + h^2 (V2 + W),

with U_m = h^2 m^2 outside [-a, a], so v = A e^{iks} + B e^{-iks} there with
k = sqrt(1 - h^2 m^2)/h.  The two scattering solutions are integrated from
the outgoing side (start with a pure transmitted wave, integrate across the
core, read the incoming/reflected amplitudes), which keeps the integration
stable under a tunnelling barrier.

Blocks are 2x2 in (L, R) order: entry [i, j] is the outgoing coefficient on
end i produced by unit incoming data on end j, with both read on the r = 0
sections.  Moving the sections from s = 0 to |s| = a + 4 + c multiplies
every entry by exp(2 i k (a + 4 + c)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import GridTooCoarse, NonUnitary
from .geometry import ChannelSet, ModelSpec, eval_profile, open_channels

MIN_POINTS_PER_WAVELENGTH = 20


def _base_potential(spec: ModelSpec, s):
    """The mode-independent part h^2 f''/f + V0 + h^2 (V2 + W) and f^-4."""
    h = spec.h
    f, _, d2f = eval_profile(spec.profile, s)
    pot = spec.potential
    base = h * h * d2f / f + pot.V0.value(s) + h * h * (pot.V2.value(s) + pot.W.value(s))
    return base, f**-4


def effective_potential(spec: ModelSpec, m, s):
    """U_m(s) for mode(s) ``m``; broadcasts m against s."""
    base, phi = _base_potential(spec, s)
    m = np.asarray(m, dtype=float)
    return base + spec.h**2 * m**2 * phi


@dataclass
class ModePotential:
    """Effective potential of one transverse mode, sampled on ``grid``."""

    m: int
    spec: ModelSpec
    grid: np.ndarray
    U: np.ndarray
    k: float

    @property
    def tau(self) -> float:
        return self.k * self.spec.h


def mode_potential(m: int, spec: ModelSpec, grid=None) -> ModePotential:
    h = spec.h
    tau_sq = 1.0 - (h * m) ** 2
    if tau_sq <= 0:
        raise ValueError(f"mode {m} is closed at h={h}")
    if grid is None:
        L = spec.a + 1.0
        grid = np.linspace(-L, L, 2001)
    grid = np.asarray(grid, dtype=float)
    return ModePotential(int(m), spec, grid, effective_potential(spec, m, grid), np.sqrt(tau_sq) / h)


@dataclass
class ModeBlock:
    m: int
    k: float
    S: np.ndarray  # 2x2 complex, (L, R) ordering
    unitarity_defect: float

    @property
    def r_L(self):
        return self.S[0, 0]

    @property
    def r_R(self):
        return self.S[1, 1]

    @property
    def t_LR(self):
        """Outgoing on R from incoming on L."""
        return self.S[1, 0]

    @property
    def t_RL(self):
        return self.S[0, 1]


def _solve_modes(spec: ModelSpec, modes, rtol=1e-12, points_per_wavelength=MIN_POINTS_PER_WAVELENGTH, match_pad=1.0):
    """Return blocks (n, 2, 2) phase-referenced to the r = 0 sections."""
    if points_per_wavelength < MIN_POINTS_PER_WAVELENGTH:
        raise GridTooCoarse(f"need at least {MIN_POINTS_PER_WAVELENGTH} points per wavelength")
    h = spec.h
    modes = np.asarray(modes, dtype=float)
    n = len(modes)
    k = np.sqrt(1.0 - (h * modes) ** 2) / h
    L = spec.a + match_pad
    inv_h2 = 1.0 / (h * h)
    msq = modes**2
    # local wavelength is bounded below by 2 pi h / sqrt(1 - min U)
    probe = np.linspace(-spec.a, spec.a, 801)
    base, _ = _base_potential(spec, probe)
    kmax = np.sqrt(max(1.0 - base.min(), 1e-12)) / h
    max_step = 2 * np.pi / kmax / points_per_wavelength

    # Both scattering solutions are integrated in one sweep from s = L down
    # to s = -L.  The one incoming from R is carried in the mirrored variable
    # u(sigma) = v(-sigma), which obeys u'' = q(-sigma) u.
    def rhs(s, y):
        b1, p1 = _base_potential(spec, s)
        b2, p2 = _base_potential(spec, -s)
        q1 = (b1 - 1.0) * inv_h2 + msq * p1
        q2 = (b2 - 1.0) * inv_h2 + msq * p2
        return np.concatenate((y[2 * n:], q1 * y[:n], q2 * y[n:2 * n]))

    ekL = np.exp(1j * k * L)
    # from L: pure transmitted e^{iks} at s = +L
    # from R: pure transmitted e^{-iks} at s = -L, i.e. u = e^{ik sigma} at sigma = +L
    v0 = np.concatenate((ekL, ekL))
    w0 = np.concatenate((1j * k * ekL, 1j * k * ekL))
    sol = integrate.solve_ivp(
        rhs, (L, -L), np.concatenate((v0, w0)), method="DOP853",
        rtol=rtol, atol=1e-300, max_step=max_step, t_eval=[-L],
    )
    if not sol.success:
        raise RuntimeError(sol.message)
    y = sol.y[:, -1]
    vL, vR = y[:n], y[n:2 * n]
    wL, wR = y[2 * n:3 * n], -y[3 * n:]  # d/ds = -d/dsigma

    # from L: at s = -L decompose v = A e^{iks} + B e^{-iks}
    A_l = 0.5 * (vL + wL / (1j * k)) * np.exp(1j * k * L)
    B_l = 0.5 * (vL - wL / (1j * k)) * np.exp(-1j * k * L)
    t_from_L = 1.0 / A_l
    r_L = B_l / A_l
    # from R: the mirrored solution was evaluated at s = +L
    A_r = 0.5 * (vR + wR / (1j * k)) * np.exp(-1j * k * L)
    B_r = 0.5 * (vR - wR / (1j * k)) * np.exp(1j * k * L)
    t_from_R = 1.0 / B_r
    r_R = A_r / B_r

    blocks = np.empty((n, 2, 2), dtype=complex)
    blocks[:, 0, 0] = r_L
    blocks[:, 1, 0] = t_from_L
    blocks[:, 0, 1] = t_from_R
    blocks[:, 1, 1] = r_R
    blocks *= np.exp(2j * k * spec.section)[:, None, None]
    return blocks, k


def unitarity_defect(B) -> float:
    B = np.asarray(B)
    eye = np.eye(B.shape[-1])
    return float(np.max(np.linalg.norm(np.conj(np.swapaxes(B, -1, -2)) @ B - eye, ord=2, axis=(-2, -1))))


def solve_stationary(mp: ModePotential, check: bool = True, **kw) -> ModeBlock:
    blocks, k = _solve_modes(mp.spec, [mp.m], **kw)
    defect = unitarity_defect(blocks[0])
    if check and defect > 1e-6:
        raise NonUnitary(f"mode {mp.m}: unitarity defect {defect:.2e}")
    return ModeBlock(mp.m, float(k[0]), blocks[0], defect)


@dataclass
class BlockScatteringMatrix:
    """Rotationally symmetric scattering matrix as 2x2 blocks per mode."""

    h: float
    channels: ChannelSet
    blocks: np.ndarray  # (n_modes, 2, 2)
    normalized: bool = True
    origin_offset: float = 0.0
    defects: np.ndarray = field(default=None, repr=False)

    @property
    def modes(self):
        return self.channels.modes

    @property
    def tau(self):
        return self.channels.tau

    @property
    def dim(self) -> int:
        return 2 * len(self.modes)

    def block(self, m: int) -> np.ndarray:
        idx = np.searchsorted(self.modes, m)
        if idx >= len(self.modes) or self.modes[idx] != m:
            raise KeyError(f"mode {m} not open")
        return self.blocks[idx]

    def to_dense(self) -> np.ndarray:
        """Full matrix in the end-major channel order of ChannelSet.labels()."""
        n = len(self.modes)
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        idx = np.arange(n)
        for i in range(2):
            for j in range(2):
                out[i * n + idx, j * n + idx] = self.blocks[:, i, j]
        return out

    def apply(self, u) -> np.ndarray:
        """Multiply a channel vector (length 2n, end-major) by the matrix."""
        u = np.asarray(u).reshape(2, -1)
        out = np.einsum("mij,jm->im", self.blocks, u)
        return out.reshape(-1)

    def unitarity_defect(self) -> float:
        return unitarity_defect(self.blocks)

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.blocks - np.swapaxes(self.blocks, 1, 2))))

    def rows(self):
        for m, tau, B, d in zip(self.modes, self.tau, self.blocks, self.defects):
            yield {
                "m": int(m), "tau_m": float(tau),
                "re_rL": B[0, 0].real, "im_rL": B[0, 0].imag,
                "re_t": B[1, 0].real, "im_t": B[1, 0].imag,
                "re_rR": B[1, 1].real, "im_rR": B[1, 1].imag,
                "unitarity_defect": float(d),
            }


def quarter_power_normalize(blocks, tau_L, tau_R=None):
    """S_U = (I - h^2 Delta_Y)^{1/4} S (I - h^2 Delta_Y)^{-1/4} per block.

    With both ends the unit circle tau_L = tau_R and this is the identity map.
    """
    tau_R = tau_L if tau_R is None else tau_R
    d = np.stack((np.sqrt(tau_L), np.sqrt(tau_R)), axis=-1)
    return blocks * (d[:, :, None] / d[:, None, :])


def assemble(spec: ModelSpec, strict: bool = False, check: bool = True, **kw):
    """Solve every open mode; returns (S, S_U) as BlockScatteringMatrix pairs."""
    ch = open_channels(spec, strict=strict)
    if ch.n_modes == 0:
        raise ValueError("no open channels")
    # U_m depends on m^2 only: solve m >= 0 and mirror
    nonneg = np.unique(np.abs(ch.modes))
    b_half, _ = _solve_modes(spec, nonneg, **kw)
    pos = np.searchsorted(nonneg, np.abs(ch.modes))
    blocks = b_half[pos]
    defects = np.array([unitarity_defect(b) for b in blocks])
    if check and defects.max() > 1e-6:
        raise NonUnitary(f"unitarity defect {defects.max():.2e}")
    S = BlockScatteringMatrix(spec.h, ch, blocks, normalized=False, origin_offset=spec.origin_offset, defects=defects)
    SU = BlockScatteringMatrix(
        spec.h, ch, quarter_power_normalize(blocks, ch.tau), normalized=True,
        origin_offset=spec.origin_offset, defects=defects,
    )
    return S, SU


def assemble_unitary(spec: ModelSpec, **kw) -> BlockScatteringMatrix:
    return assemble(spec, **kw)[1]


def free_blocks(spec: ModelSpec, modes=None) -> np.ndarray:
    """Closed form for U = h^2 m^2: [[0, e^{i phi}], [e^{i phi}, 0]], phi = 2 L tau/h."""
    if modes is None:
        modes = open_channels(spec).modes
    tau = np.sqrt(1.0 - (spec.h * np.asarray(modes, dtype=float)) ** 2)
    ph = np.exp(2j * spec.section * tau / spec.h)
    out = np.zeros((len(tau), 2, 2), dtype=complex)
    out[:, 0, 1] = ph
    out[:, 1, 0] = ph
    return out


def shift_origin_smatrix(S: BlockScatteringMatrix, d: float) -> BlockScatteringMatrix:
    """Move the sections outward by ``d``: S' = e^{i d tau/h} S e^{i d tau/h}."""
    phase = np.exp(2j * d * S.tau / S.h)
    return BlockScatteringMatrix(
        S.h, S.channels, S.blocks * phase[:, None, None], S.normalized,
        S.origin_offset + d, S.defects,
    )


def write_matrix(path, S: BlockScatteringMatrix, header_lines=()):
    """Plain-text export: one line per nonzero entry ``row col re im``.

    Rows and columns index channels in end-major order; a comment header lists
    the channel labels as ``index end m``.
    """
    dense = S.to_dense()
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(f"# h={S.h!r} dim={S.dim} normalized={S.normalized} origin_offset={S.origin_offset!r}\n")
        for i, (e, m) in enumerate(S.channels.labels()):
            fh.write(f"# channel {i} {e} {m}\n")
        rows, cols = np.nonzero(dense)
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j} {dense[i, j].real:.17e} {dense[i, j].imag:.17e}\n")


def read_matrix(path) -> np.ndarray:
    dim = None
    entries = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("dim="):
                        dim = int(tok[4:])
                continue
            i, j, re, im = line.split()
            entries.append((int(i), int(j), float(re) + 1j * float(im)))
    out = np.zeros((dim, dim), dtype=complex)
    for i, j, z in entries:
        out[i, j] = z
    return out
