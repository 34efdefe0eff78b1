"""Trotterized evolution of the driven 4-level system.

The propagator product is applied state-wise: each step multiplies the
current states by exp(-i H(t_j) dt), never forming the accumulated unitary.
Internally steps are processed in vectorized chunks (batched spectral
propagators plus a segmented prefix scan), which changes nothing observable:
states at every step are produced in order and handed to observers at full
resolution, while only every stride-th state is recorded.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import model, smallmat, topology
from .constants import DEGENERATE_STATE_TOL, NORM_DRIFT_TOL

CHUNK_STEPS = 8192
SEGMENT = 64
MAX_STEPS = 2 ** 31


class Evaluation(enum.Enum):
    """Where the drive is sampled inside each step of length dt."""

    LEFT_ENDPOINT = "left"
    MIDPOINT = "midpoint"


@dataclass(frozen=True)
class SimConfig:
    total_time: float
    dt: float = 1e-3
    stride: int = 100
    evaluation: Evaluation = Evaluation.LEFT_ENDPOINT

    def __post_init__(self):
        if not (math.isfinite(self.total_time) and self.total_time >= 0):
            raise ValueError("total_time must be finite and non-negative")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be finite and positive")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        n = self.total_time / self.dt
        if n > MAX_STEPS:
            raise ValueError(f"step count {n:.3g} exceeds limit {MAX_STEPS}")
        if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
            raise ValueError("total_time must be an integral number of steps")

    @property
    def n_steps(self) -> int:
        return int(round(self.total_time / self.dt))


@dataclass(frozen=True)
class Trajectory:
    """Recorded instants and states (n_recorded, n_states, 4) with run metadata."""

    times: np.ndarray
    states: np.ndarray
    params: model.ModelParams
    drive: model.DriveConfig
    sim: SimConfig

    def to_csv(self, path) -> None:
        """Columns: t, then Re/Im of the 4 amplitudes for each initial state."""
        n_states = self.states.shape[1]
        header = ["t"]
        for s in range(n_states):
            for a in range(4):
                header += [f"state{s}_re{a}", f"state{s}_im{a}"]
        flat = self.states.reshape(len(self.times), -1)
        data = np.column_stack([self.times] +
                               [col for a in range(flat.shape[1])
                                for col in (flat[:, a].real, flat[:, a].imag)])
        np.savetxt(path, data, delimiter=",", header=",".join(header), comments="")


@dataclass(frozen=True)
class AdiabaticityReport:
    """Worst instantaneous-band fidelity along a trajectory and the driving ratio."""

    min_fidelity: float
    ratio: float


class NumericalDriftError(RuntimeError):
    """State norms drifted beyond tolerance during evolution."""


class DegenerateInitialState(RuntimeError):
    """Eigenstate preparation hit a degenerate spectrum at t = 0."""


def prepare_eigenstate(p: model.ModelParams, d: model.DriveConfig, band: int) -> np.ndarray:
    """band-th (1-based, ascending) eigenvector of the driven Hamiltonian at t = 0."""
    if band not in (1, 2, 3, 4):
        raise ValueError("band index must be in 1..4")
    sol = smallmat.hermitian_eig(model.floquet_hamiltonian(p, d, 0.0))
    gaps = np.diff(sol.eigenvalues)
    b = band - 1
    for nb in (b - 1, b):
        if 0 <= nb < 3 and gaps[nb] < DEGENERATE_STATE_TOL:
            raise DegenerateInitialState(
                f"bands {nb + 1} and {nb + 2} are degenerate at t = 0 "
                f"(gap {gaps[nb]:.2e})")
    return sol.band(band)


def _run_chunk(p, d, sim, psi, start, length):
    """Propagate `length` steps from step index `start`.

    Returns (pre_step_states, carry): pre_step_states[j] is the state at
    step start+j before that step's propagator; carry is the state after
    the last step. psi has shape (S, 4).
    """
    tj = (start + np.arange(length)) * sim.dt
    if sim.evaluation is Evaluation.MIDPOINT:
        tj = tj + sim.dt / 2
    h = model.floquet_stack(p, d, tj)
    u = smallmat.propagator_stack(h, sim.dt)
    if length >= SEGMENT and length % SEGMENT == 0:
        nseg = length // SEGMENT
        us = u.reshape(nseg, SEGMENT, 4, 4)
        pref = np.empty_like(us)
        pref[:, 0] = us[:, 0]
        for j in range(1, SEGMENT):
            pref[:, j] = us[:, j] @ pref[:, j - 1]
        seg_start = np.empty((nseg + 1,) + psi.shape, dtype=complex)
        seg_start[0] = psi
        for b in range(nseg):
            seg_start[b + 1] = seg_start[b] @ pref[b, SEGMENT - 1].T
        states = np.empty((length + 1,) + psi.shape, dtype=complex)
        states[0] = psi
        inner = np.einsum("bjik,bsk->bjsi", pref[:, :SEGMENT - 1], seg_start[:-1])
        states[1:].reshape(nseg, SEGMENT, *psi.shape)[:, :SEGMENT - 1] = inner
        states[SEGMENT::SEGMENT] = seg_start[1:]
    else:
        states = np.empty((length + 1,) + psi.shape, dtype=complex)
        states[0] = psi
        for j in range(length):
            states[j + 1] = states[j] @ u[j].T
    return states[:-1], states[-1]


def evolve(p: model.ModelParams, d: model.DriveConfig, sim: SimConfig,
           initial, observers=()) -> Trajectory:
    """Evolve one or more initial states under the driven Hamiltonian.

    Observers are callables invoked in step order as observer(times, states)
    with full-resolution arrays: times (L,), states (L, n_states, 4); row j
    is the state at times[j] before that step's propagator is applied. The
    final instant t = T is delivered as a last length-1 call.
    """
    psi = np.array([smallmat.require_state(s) for s in initial], dtype=complex)
    n = sim.n_steps
    rec_idx = [0]
    rec_states = [psi.copy()]
    done = 0
    while done < n:
        length = min(CHUNK_STEPS, n - done)
        if length >= SEGMENT:
            length -= length % SEGMENT
        states, psi = _run_chunk(p, d, sim, psi, done, length)
        times = (done + np.arange(length)) * sim.dt
        for obs in observers:
            obs(times, states)
        first = (-done) % sim.stride
        for j in range(first, length, sim.stride):
            if done + j > 0:
                rec_idx.append(done + j)
                rec_states.append(states[j])
        done += length
    # final instant
    for obs in observers:
        obs(np.array([n * sim.dt]), psi[None])
    if rec_idx[-1] != n:
        rec_idx.append(n)
        rec_states.append(psi)
    states_arr = np.array(rec_states)
    norms = np.linalg.norm(states_arr, axis=2)
    drift = np.abs(norms - 1.0).max()
    if drift > NORM_DRIFT_TOL:
        raise NumericalDriftError(f"state norm drifted by {drift:.3e}")
    return Trajectory(times=np.array(rec_idx, dtype=float) * sim.dt,
                      states=states_arr, params=p, drive=d, sim=sim)


def adiabaticity(traj: Trajectory) -> AdiabaticityReport:
    """Fidelity of recorded states against the instantaneous eigenbasis.

    For each initial state the comparison subspace is spanned by the bands
    populated at t = 0 (weight > 1e-6); single-band initial states reduce to
    the matching-index overlap. The ratio is eta * direct gap / max(omega).
    """
    h0 = model.floquet_hamiltonian(traj.params, traj.drive, 0.0)
    w0, v0 = np.linalg.eigh(h0)
    weights0 = np.abs(np.einsum("ab,sb->sa", v0.conj().T, traj.states[0])) ** 2
    populated = weights0 > 1e-6  # (S, 4)

    h = model.floquet_stack(traj.params, traj.drive, traj.times)
    _, v = np.linalg.eigh(h)  # (T, 4, 4)
    # overlaps of each recorded state with each instantaneous band
    amp = np.einsum("tab,tsa->tsb", v.conj(), traj.states)
    proj = (np.abs(amp) ** 2 * populated[None]).sum(axis=2)
    gap = topology.gap_scan(traj.params).direct_gap
    ratio = traj.params.eta * gap / max(traj.drive.omega1, traj.drive.omega2)
    return AdiabaticityReport(min_fidelity=float(proj.min()), ratio=float(ratio))
