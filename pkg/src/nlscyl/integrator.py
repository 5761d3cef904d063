"""Strang split-step integration of i u_t + Lap u = |u|^{p-1} u.

Both substeps are solved exactly: the free flow is a unimodular Fourier
multiplier and the nonlinear flow is the pointwise phase rotation
u -> u exp(-i dt |u|^{p-1}).  Mass is therefore conserved to roundoff.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, SimulationError
from .grid import (
    ComplexField,
    ConservedPair,
    _tail_fraction_raw,
    boundary_mass_fraction,
    conserved,
    physical,
)
from .linear import free_phase, propagate_free

log = logging.getLogger(__name__)


class Flag(str, enum.Enum):
    OUT_OF_DOMAIN = "OUT_OF_DOMAIN"
    UNDER_RESOLVED = "UNDER_RESOLVED"


def geometric_ladder(t_start: float, t_end: float, per_octave: int = 4) -> list[float]:
    """t_start * 2^(j/per_octave) clipped to [t_start, t_end], end point included."""
    base = t_start if t_start > 0 else 1.0
    n = int(np.floor(per_octave * np.log2(t_end / base) + 1e-9))
    times = [base * 2.0 ** (j / per_octave) for j in range(n + 1)]
    if t_start <= 0:
        times = [t_start] + times
    if times[-1] < t_end * (1 - 1e-12):
        times.append(t_end)
    return times


@dataclass(frozen=True)
class SimConfig:
    p: float
    dt: float
    t0: float
    t_end: float
    snapshot_times: tuple[float, ...] = ()
    boundary_mass_tol: float = 1e-8
    amplitude: float = 1.0
    spectral_tail_tol: float = 1e-8
    monitor_every: int = 100
    nonlinear: bool = True
    sign: str = "defocusing"

    def __post_init__(self):
        if self.sign != "defocusing":
            raise ConfigurationError(f"only the defocusing equation is supported, got sign={self.sign!r}")
        if not self.p > 1:
            raise ConfigurationError(f"p must exceed 1, got {self.p}")
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not self.t0 < self.t_end:
            raise ConfigurationError(f"need t0 < t_end, got {self.t0} >= {self.t_end}")
        if self.monitor_every < 1:
            raise ConfigurationError("monitor_every must be >= 1")
        ts = tuple(float(t) for t in self.snapshot_times)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigurationError("snapshot_times must be strictly increasing")
        if ts and (ts[0] < self.t0 - 1e-12 or ts[-1] > self.t_end + 1e-12):
            raise ConfigurationError("snapshot_times must lie in [t0, t_end]")
        object.__setattr__(self, "snapshot_times", ts)

    @property
    def n_steps(self) -> int:
        return int(round((self.t_end - self.t0) / self.dt))

    def step_time(self, n: int) -> float:
        return round(self.t0 + n * self.dt, 12)


@dataclass
class Trajectory:
    p: float
    snapshots: list[tuple[float, ComplexField]] = field(default_factory=list)
    conserved: list[tuple[float, ConservedPair]] = field(default_factory=list)
    # (t, boundary mass fraction, spectral tail fraction) at every check
    monitors: list[tuple[float, float, float]] = field(default_factory=list)
    flags: set[Flag] = field(default_factory=set)
    max_boundary_mass: float = 0.0
    max_spectral_tail: float = 0.0
    nonlinear: bool = True

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    def at(self, t: float, tol: float = 1e-9) -> ComplexField:
        for ts, f in self.snapshots:
            if abs(ts - t) <= tol * max(1.0, abs(t)):
                return f
        raise KeyError(f"no snapshot at t={t}")

    def has(self, t: float, tol: float = 1e-9) -> bool:
        return any(abs(ts - t) <= tol * max(1.0, abs(t)) for ts, _ in self.snapshots)

    @property
    def final(self) -> tuple[float, ComplexField]:
        return self.snapshots[-1]


def _phase_rotate(u: np.ndarray, dt: float, p: float) -> np.ndarray:
    # |u|^{p-1} as a real power of |u|^2
    a2 = u.real**2 + u.imag**2
    pw = a2 if p == 3 else a2 ** (0.5 * (p - 1))
    return u * np.exp(-1j * dt * pw)


def nonlinear_phase_step(u: ComplexField, dt: float, p: float) -> ComplexField:
    """Exact flow of i u_t = |u|^{p-1} u over time dt."""
    u = physical(u)
    return ComplexField(u.grid, _phase_rotate(u.values, dt, p))


def step_strang(u: ComplexField, t: float, dt: float, p: float, nonlinear: bool = True) -> ComplexField:
    """One symmetric step: free flow dt/2, nonlinear phase dt, free flow dt/2.

    The equation is autonomous, so ``t`` only labels the step.  Negative
    ``dt`` runs the same scheme backward.
    """
    v = propagate_free(u, 0.5 * dt)
    if nonlinear:
        v = nonlinear_phase_step(v, dt, p)
    return propagate_free(v, 0.5 * dt)


def evolve(
    u0: ComplexField,
    cfg: SimConfig,
    observer: Optional[Callable[[float, ComplexField], None]] = None,
    store_snapshots: bool = True,
) -> Trajectory:
    """Integrate from cfg.t0 to cfg.t_end starting at ``cfg.amplitude * u0``.

    Snapshot times are snapped to the step grid.  Boundary mass, spectral
    tail and conserved quantities are checked every ``monitor_every`` steps
    and at every snapshot.  Consecutive half-steps of the free flow are fused
    between outputs.
    """
    u0 = physical(u0)
    g = u0.grid
    n_total = cfg.n_steps
    if n_total < 1 or abs(cfg.t0 + n_total * cfg.dt - cfg.t_end) > 1e-9 * max(1.0, abs(cfg.t_end)):
        raise ConfigurationError(f"dt={cfg.dt} does not divide [{cfg.t0}, {cfg.t_end}]")

    snap_steps = {int(round((ts - cfg.t0) / cfg.dt)) for ts in cfg.snapshot_times}
    snap_steps.add(n_total)
    traj = Trajectory(p=cfg.p, nonlinear=cfg.nonlinear)

    def record(n: int, vals: np.ndarray, uh_raw: np.ndarray):
        t = cfg.step_time(n)
        if not np.all(np.isfinite(vals)):
            raise SimulationError(f"non-finite state at t={t}", t)
        field_ = ComplexField(g, vals)
        bm = boundary_mass_fraction(field_)
        tail = _tail_fraction_raw(np.abs(uh_raw) ** 2, g, 0.1, sorted_order=False) if uh_raw is not None else 0.0
        traj.monitors.append((t, bm, tail))
        traj.max_boundary_mass = max(traj.max_boundary_mass, bm)
        traj.max_spectral_tail = max(traj.max_spectral_tail, tail)
        if bm > cfg.boundary_mass_tol and Flag.OUT_OF_DOMAIN not in traj.flags:
            log.warning("boundary mass %.3e exceeds tolerance at t=%g", bm, t)
            traj.flags.add(Flag.OUT_OF_DOMAIN)
        if tail > cfg.spectral_tail_tol and Flag.UNDER_RESOLVED not in traj.flags:
            log.warning("spectral tail %.3e exceeds tolerance at t=%g", tail, t)
            traj.flags.add(Flag.UNDER_RESOLVED)
        traj.conserved.append((t, conserved(field_, cfg.p)))
        if n in snap_steps:
            if store_snapshots:
                traj.snapshots.append((t, field_))
            if observer is not None:
                observer(t, field_)

    u = cfg.amplitude * u0.values
    uh = sfft.fftn(u)
    record(0, u, uh)

    half = free_phase(g, 0.5 * cfg.dt)
    full = half * half
    pending = False
    for n in range(1, n_total + 1):
        uh *= full if pending else half
        u = sfft.ifftn(uh, overwrite_x=True)
        if cfg.nonlinear:
            u = _phase_rotate(u, cfg.dt, cfg.p)
        uh = sfft.fftn(u, overwrite_x=True)
        if n in snap_steps or n % cfg.monitor_every == 0:
            uh *= half
            pending = False
            record(n, sfft.ifftn(uh), uh)
        else:
            pending = True
    return traj
