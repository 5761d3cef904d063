"""Scattering diagnostics built on trajectories.

The commutator |J(t)|^s, power-law fits, pullback Cauchy increments and the
witness integral for the long-range regime all live here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, DomainError
from .grid import ComplexField, Space, inner, l2_norm, mixed_norm, physical, transform
from .integrator import Trajectory
from .linear import Direction, propagate_free, propagate_torus


class Mode(str, enum.Enum):
    SHORT_RANGE = "SHORT_RANGE"
    LONG_RANGE = "LONG_RANGE"


@dataclass(frozen=True)
class PowerFit:
    gamma_hat: float
    intercept: float
    r2: float
    window: tuple[float, float]


@dataclass
class NormSeries:
    name: str
    samples: list[tuple[float, float]] = field(default_factory=list)
    fit: Optional[PowerFit] = None

    def __post_init__(self):
        ts = [t for t, _ in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigurationError(f"series {self.name!r}: times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.samples], dtype=float)

    def value_at(self, t: float, tol: float = 1e-9) -> float:
        for ts, v in self.samples:
            if abs(ts - t) <= tol * max(1.0, abs(t)):
                return v
        raise KeyError(f"series {self.name!r} has no sample at t={t}")

    def fitted(self, window: Optional[tuple[float, float]] = None) -> "NormSeries":
        return NormSeries(self.name, list(self.samples), power_fit(self, window))


def default_window(series: NormSeries) -> tuple[float, float]:
    t1 = float(series.times[-1])
    return (t1 / 10.0, t1)


def power_fit(series: NormSeries, window: Optional[tuple[float, float]] = None) -> PowerFit:
    """Least squares of log(value) against log(t) over the window."""
    if window is None:
        window = default_window(series)
    t0, t1 = window
    t, v = series.times, series.values
    m = (t >= t0 * (1 - 1e-12)) & (t <= t1 * (1 + 1e-12))
    if m.sum() < 4:
        raise DomainError(f"series {series.name!r}: need >= 4 samples in [{t0}, {t1}], have {int(m.sum())}", code="TOO_FEW_SAMPLES")
    if np.any(t[m] <= 0) or np.any(v[m] <= 0):
        raise DomainError(f"series {series.name!r}: nonpositive time or value in fit window", code="NONPOSITIVE")
    X, Y = np.log(t[m]), np.log(v[m])
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_tot = np.sum((Y - Y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return PowerFit(float(-slope), float(intercept), float(r2), (float(t0), float(t1)))


def fit_decay(series: NormSeries, window: Optional[tuple[float, float]] = None) -> tuple[float, float]:
    """(gamma_hat, r2) with gamma_hat = -slope of the log-log fit."""
    f = power_fit(series, window)
    return f.gamma_hat, f.r2


# -- commutator operator -------------------------------------------------------


def chirp_t_min(grid) -> float:
    """Smallest t at which the chirp exp(i|y|^2/4t) is resolved at the box edge.

    The local wavenumber |y|/(2t) must stay below the Nyquist value
    pi N_y / L_y for |y| <= L_y/2.
    """
    return grid.L_y**2 / (2 * np.pi * grid.N_y)


def _chirp(grid, t: float, sign: float) -> np.ndarray:
    return np.exp(sign * 1j * grid.y_sq / (4.0 * t))


def j_operator(u: ComplexField, t: float, s: float) -> ComplexField:
    """|J(t)|^s u = M(t) (-t^2 Lap_y)^{s/2} M(-t) e^{-it d_xx} u, M(t) = e^{i|y|^2/4t}.

    s = 0 is allowed and gives e^{-it d_xx} u.
    """
    if not 0 <= s < 2:
        raise ConfigurationError(f"s must lie in (0, 2), got {s}")
    g = u.grid
    t_min = chirp_t_min(g)
    if not t > t_min:
        raise DomainError(f"t={t} below chirp resolution bound t_min={t_min:.4g}", code="CHIRP_UNRESOLVED")
    w = propagate_torus(u, t, Direction.INVERSE).values * _chirp(g, t, -1.0)
    if s > 0:
        axes = g.y_axes
        wh = sfft.fftn(w, axes=axes)
        wh *= (t * t * g.xi_sq_fft) ** (0.5 * s)
        w = sfft.ifftn(wh, axes=axes)
    return ComplexField(g, w * _chirp(g, t, 1.0))


def j_norm_conjugated(u: ComplexField, t: float, s: float, sobolev_x: int = 1) -> float:
    """||J(t)|^s u||_{L_y^2 H_x^1} (or L_y^2 L_x^2) through the conjugation identity.

    Since M(t)(2it grad)M(-t) = e^{itLap_y} y e^{-itLap_y}, the operator equals
    2^{-s} e^{itLap_y} |y|^s e^{-itLap_y} e^{-it d_xx}, so its norm is
    2^{-s} || |y|^s v(t) || with v the pullback.  No chirp is sampled, so this
    is usable at any t.
    """
    v = physical(pullback(u, t))
    g = u.grid
    w = ComplexField(g, v.values * g.y_sq ** (0.5 * s))
    return 2.0**-s * mixed_norm(w, 2, sobolev_x)


def _nonlinearity(u: ComplexField, p: float) -> ComplexField:
    u = physical(u)
    a = np.abs(u.values)
    return ComplexField(u.grid, a ** (p - 1) * u.values)


def lap_y(u: ComplexField) -> ComplexField:
    u = physical(u)
    axes = u.grid.y_axes
    uh = sfft.fftn(u.values, axes=axes)
    uh *= -u.grid.xi_sq_fft
    return ComplexField(u.grid, sfft.ifftn(uh, axes=axes))


def j_equation_residual(traj: Trajectory, t: float, s: float, p: float, delta: Optional[float] = None) -> float:
    """Relative L^2 residual of (i d_t + Lap_y) W = |J(t)|^s (|u|^{p-1} u), W = |J(t)|^s u.

    The time derivative is the central difference over snapshots at t +- delta
    (delta defaults to the distance to the next snapshot).  The result is
    normalized by ||W(t)||; a zero trajectory gives 0.
    """
    times = traj.times
    if delta is None:
        later = times[times > t + 1e-12]
        if later.size == 0:
            raise DomainError(f"no snapshot after t={t}", code="MISSING_SNAPSHOT")
        delta = float(later[0] - t)
    for tt in (t - delta, t, t + delta):
        if not traj.has(tt):
            raise DomainError(f"residual needs a snapshot at t={tt}", code="MISSING_SNAPSHOT")
    W = j_operator(traj.at(t), t, s)
    nW = l2_norm(W)
    if nW == 0:
        return 0.0
    Wp = j_operator(traj.at(t + delta), t + delta, s)
    Wm = j_operator(traj.at(t - delta), t - delta, s)
    r = 1j * (Wp.values - Wm.values) / (2 * delta) + lap_y(W).values
    if traj.nonlinear:
        r = r - j_operator(_nonlinearity(traj.at(t), p), t, s).values
    return l2_norm(ComplexField(W.grid, r)) / nW


# -- pullback and scattering ---------------------------------------------------


def pullback(u: ComplexField, t: float) -> ComplexField:
    """v(t) = e^{-it Lap} u(t)."""
    return propagate_free(u, -t)


def h1_norm(u: ComplexField) -> float:
    """Full H^1 norm with weight 1 + |xi|^2 + k^2."""
    uh = transform(u, Space.SPECTRAL)
    g = u.grid
    return float(np.sqrt(np.sum((1.0 + g.xi_sq + g.k_sq) * np.abs(uh.values) ** 2) * g.spectral_volume))


def _norm_fn(norm: str):
    if norm == "H1":
        return h1_norm
    if norm == "L2":
        return l2_norm
    raise ConfigurationError(f"norm must be 'H1' or 'L2', got {norm!r}")


def cauchy_increments(traj: Trajectory, ladder: Sequence[float], norm: str = "H1") -> NormSeries:
    """||v(t_{j+1}) - v(t_j)|| for consecutive ladder rungs, labelled by t_j."""
    nf = _norm_fn(norm)
    vs = [pullback(traj.at(t), t) for t in ladder]
    samples = [(float(a), nf(vb - va)) for a, va, vb in zip(ladder, vs, vs[1:])]
    return NormSeries(f"cauchy_increment_{norm}", samples)


def extract_scattering_state(traj: Trajectory, ladder: Optional[Sequence[float]] = None) -> ComplexField:
    """Final pullback v(T_end) as the numerical scattering state.

    When a ladder is given, the last H^1 Cauchy increment is attached to the
    result's notes as a tail estimate.
    """
    if traj.flags:
        names = ", ".join(sorted(f.value for f in traj.flags))
        raise DomainError(f"trajectory is flagged ({names}); no scattering state", code=sorted(f.value for f in traj.flags)[0])
    t_end, u_end = traj.final
    up = pullback(u_end, t_end)
    if ladder is not None and len(ladder) >= 2:
        inc = cauchy_increments(traj, ladder, "H1").samples[-1][1]
        up = up.with_values(up.values, notes=(f"tail estimate (last H1 increment): {inc:.6e}",))
    return up


def witness_integrand(traj: Trajectory, h: ComplexField, p: float) -> NormSeries:
    """Re <|u|^{p-1}u, e^{itLap} h> at each snapshot time."""
    if l2_norm(h) == 0:
        raise DomainError("witness h must be nonzero", code="DEGENERATE_WITNESS")
    out = []
    for t, u in traj.snapshots:
        if not traj.nonlinear:
            out.append((t, 0.0))
            continue
        out.append((t, inner(_nonlinearity(u, p), propagate_free(h, t)).real))
    return NormSeries("witness_integrand", out)


def profile_integrand(h: ComplexField, times: Sequence[float], p: float) -> NormSeries:
    """int |e^{itLap} h|^{p+1} dy dx: the witness integrand with u replaced by
    its putative free profile e^{itLap} h."""
    out = []
    for t in times:
        w = propagate_free(h, t)
        out.append((float(t), float(np.sum(np.abs(w.values) ** (p + 1)) * h.grid.cell_volume)))
    return NormSeries("profile_integrand", out)


def witness_integral(traj: Trajectory, h: ComplexField, p: float, max_spacing: float = 0.5) -> NormSeries:
    """Running trapezoid integral I(T) of the witness integrand over snapshot times.

    For a true solution I(T) = -Im <v(T) - v(t0), h>, which gives an
    independent check.
    """
    times = traj.times
    if times.size >= 2 and np.max(np.diff(times)) > max_spacing * (1 + 1e-9):
        raise DomainError(f"snapshot spacing {np.max(np.diff(times)):.3g} exceeds {max_spacing}", code="SPARSE_SNAPSHOTS")
    integrand = witness_integrand(traj, h, p)
    f = integrand.values
    I = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(times))])
    return NormSeries("witness_integral", [(float(t), float(v)) for t, v in zip(times, I)])


@dataclass
class ScatterReport:
    mode: Mode
    decay_fit: NormSeries
    j_norm_series: Optional[NormSeries]
    cauchy_increments: NormSeries
    witness_integral: Optional[NormSeries]
    verdicts: dict[str, bool] = field(default_factory=dict)
