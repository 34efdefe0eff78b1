"""Hamiltonians of the bilayer half-BHZ model and its Floquet-lattice image.

Internal basis order is (1A, 1B, 2A, 2B); Kronecker products are
layer (x) orbital throughout. hbar = 1; all energies are in units of the
intra-layer hopping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import GOLDEN_RATIO

SIGMA_0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class ModelParams:
    """Static model: layer masses m1, m2, inter-layer hopping g, drive scale eta."""

    m1: float
    m2: float
    g: float
    eta: float = 1.0

    def __post_init__(self):
        vals = (self.m1, self.m2, self.g, self.eta)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("model parameters must be finite")
        if self.eta <= 0:
            raise ValueError("eta must be positive")


@dataclass(frozen=True)
class DriveConfig:
    """Two incommensurate drives: frequencies (rad/time) and initial phases (rad)."""

    omega1: float = 0.1
    omega2: float = 0.1 * GOLDEN_RATIO
    phi1: float = 0.0
    phi2: float = 0.0

    def __post_init__(self):
        vals = (self.omega1, self.omega2, self.phi1, self.phi2)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("drive parameters must be finite")
        if self.omega1 <= 0 or self.omega2 <= 0:
            raise ValueError("drive frequencies must be positive")
        if self.omega1 == self.omega2:
            raise ValueError("drive frequencies must differ")

    def phases(self, t):
        """Drifting drive phases Omega(t) = (omega1*t + phi1, omega2*t + phi2)."""
        t = np.asarray(t, dtype=float)
        return self.omega1 * t + self.phi1, self.omega2 * t + self.phi2


def _wrap_angle(x: float) -> float:
    """Wrap into (-pi, pi]."""
    if not math.isfinite(x):
        raise ValueError("momentum must be finite")
    return x - 2 * math.pi * math.ceil((x - math.pi) / (2 * math.pi))


@dataclass(frozen=True)
class BZPoint:
    """Point of the (Floquet) Brillouin zone, wrapped into (-pi, pi]^2."""

    kx: float
    ky: float

    def __post_init__(self):
        object.__setattr__(self, "kx", _wrap_angle(self.kx))
        object.__setattr__(self, "ky", _wrap_angle(self.ky))


def bloch_stack(p: ModelParams, kx, ky) -> np.ndarray:
    """Bare h(k) on arrays of momenta; returns (..., 4, 4). eta is NOT applied."""
    kx = np.asarray(kx, dtype=float)
    ky = np.asarray(ky, dtype=float)
    c = np.cos(kx) + np.cos(ky)
    off = np.sin(kx) - 1j * np.sin(ky)
    h = np.zeros(np.broadcast(kx, ky).shape + (4, 4), dtype=complex)
    h[..., 0, 0] = -p.m1 + c
    h[..., 1, 1] = p.m1 - c
    h[..., 2, 2] = -p.m2 + c
    h[..., 3, 3] = p.m2 - c
    h[..., 0, 1] = off
    h[..., 1, 0] = np.conj(off)
    h[..., 2, 3] = off
    h[..., 3, 2] = np.conj(off)
    h[..., 0, 2] = p.g
    h[..., 2, 0] = p.g
    h[..., 1, 3] = p.g
    h[..., 3, 1] = p.g
    return h


def bloch_hamiltonian(p: ModelParams, k: BZPoint) -> np.ndarray:
    """Momentum-space Hamiltonian h(k) of the bare bilayer model (no eta)."""
    return bloch_stack(p, k.kx, k.ky)


def floquet_hamiltonian(p: ModelParams, d: DriveConfig, t: float) -> np.ndarray:
    """Driven Hamiltonian eta * h(omega*t + phi) at time t."""
    o1, o2 = d.phases(t)
    return p.eta * bloch_stack(p, o1, o2)


def floquet_stack(p: ModelParams, d: DriveConfig, times: np.ndarray) -> np.ndarray:
    """Driven Hamiltonian on an array of times; returns (L, 4, 4)."""
    o1, o2 = d.phases(times)
    return p.eta * bloch_stack(p, o1, o2)


def drive_generator_rate(p: ModelParams, d: DriveConfig, t: float, m: int) -> np.ndarray:
    """Time derivative of the m-th drive component of the driven Hamiltonian.

    dH_m/dt = eta * omega_m * [cos(Om_m) sigma0 (x) sigma_{x|y}
                               - sin(Om_m) sigma0 (x) sigma_z],
    with sigma_x for drive 1 and sigma_y for drive 2. The eta factor is
    included: energy bookkeeping must use the physical Hamiltonian.
    """
    if m == 1:
        om, arg = d.omega1, d.omega1 * t + d.phi1
        transverse = SIGMA_X
    elif m == 2:
        om, arg = d.omega2, d.omega2 * t + d.phi2
        transverse = SIGMA_Y
    else:
        raise ValueError(f"drive index must be 1 or 2, got {m!r}")
    return p.eta * om * (
        np.cos(arg) * np.kron(SIGMA_0, transverse) - np.sin(arg) * np.kron(SIGMA_0, SIGMA_Z)
    )


@dataclass(frozen=True)
class FloquetWindow:
    """Truncated photon-number window: all integer sites (n1, n2) with |ni| <= radius."""

    radius: int

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("window radius must be >= 1")

    @property
    def sites(self) -> list[tuple[int, int]]:
        r = self.radius
        return [(n1, n2) for n1 in range(-r, r + 1) for n2 in range(-r, r + 1)]

    @property
    def site_count(self) -> int:
        return (2 * self.radius + 1) ** 2


@dataclass
class BandedComplexMatrix:
    """Hermitian operator on the truncated Floquet lattice, stored block-wise.

    blocks maps (site, site') -> 4x4 array for site' = site and the two
    positive-direction neighbors; Hermitian conjugates are implied.
    """

    window: FloquetWindow
    blocks: dict = field(repr=False)

    @property
    def dimension(self) -> int:
        return 4 * self.window.site_count

    def block(self, src: tuple[int, int], dst: tuple[int, int]) -> np.ndarray:
        """Hopping block <dst| H |src> (4x4); zero block if not stored."""
        if (src, dst) in self.blocks:
            return self.blocks[(src, dst)]
        if (dst, src) in self.blocks:
            return self.blocks[(dst, src)].conj().T
        return np.zeros((4, 4), dtype=complex)

    def to_dense(self) -> np.ndarray:
        sites = self.window.sites
        index = {s: i for i, s in enumerate(sites)}
        h = np.zeros((self.dimension, self.dimension), dtype=complex)
        for (src, dst), blk in self.blocks.items():
            a, b = 4 * index[src], 4 * index[dst]
            h[b:b + 4, a:a + 4] = blk
            if src != dst:
                h[a:a + 4, b:b + 4] = blk.conj().T
        return h

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense spectral decomposition (quasi-energies ascending)."""
        return np.linalg.eigh(self.to_dense())

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.to_dense())

    def site_weights(self, vectors: np.ndarray) -> np.ndarray:
        """Per-site probability weight of each eigenvector column: (site_count, nvec)."""
        ns = self.window.site_count
        return (np.abs(vectors.reshape(ns, 4, -1)) ** 2).sum(axis=1)


def floquet_lattice_hamiltonian(p: ModelParams, d: DriveConfig,
                                w: FloquetWindow) -> BandedComplexMatrix:
    """Driven model materialized on the truncated Floquet lattice.

    On-site block: eta*(-(m1+m2)/2 sz' + (m2-m1)/2 szsz + g sxs0) - n.omega;
    hop to n+e1: eta/2 e^{i phi1}(sigma0 sz - i sigma0 sx), and with sy for e2.
    Open boundary: hops leaving the window are dropped.
    """
    onsite = p.eta * (
        -(p.m1 + p.m2) / 2 * np.kron(SIGMA_0, SIGMA_Z)
        + (p.m2 - p.m1) / 2 * np.kron(SIGMA_Z, SIGMA_Z)
        + p.g * np.kron(SIGMA_X, SIGMA_0)
    )
    hop1 = p.eta / 2 * np.exp(1j * d.phi1) * (
        np.kron(SIGMA_0, SIGMA_Z) - 1j * np.kron(SIGMA_0, SIGMA_X))
    hop2 = p.eta / 2 * np.exp(1j * d.phi2) * (
        np.kron(SIGMA_0, SIGMA_Z) - 1j * np.kron(SIGMA_0, SIGMA_Y))
    sites = set(w.sites)
    blocks = {}
    eye4 = np.eye(4, dtype=complex)
    for site in w.sites:
        n1, n2 = site
        blocks[(site, site)] = onsite - (n1 * d.omega1 + n2 * d.omega2) * eye4
        for dn, blk in (((1, 0), hop1), ((0, 1), hop2)):
            dst = (n1 + dn[0], n2 + dn[1])
            if dst in sites:
                blocks[(site, dst)] = blk
    return BandedComplexMatrix(window=w, blocks=blocks)
