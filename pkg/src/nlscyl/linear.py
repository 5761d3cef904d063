"""Free Schrodinger flow on the discretized cylinder and linear diagnostics.

Sign convention: i u_t + Laplacian u = 0, so the free flow multiplies the full
spectrum by exp(-i t (|xi|^2 + k^2)).  Every other module reuses this.
"""

from __future__ import annotations

import enum

import numpy as np
import scipy.fft as sfft

from .errors import DomainError
from .grid import (
    ComplexField,
    Space,
    boundary_mass_fraction,
    mixed_norm,
    physical,
    transform,
)


class Direction(str, enum.Enum):
    FORWARD = "FORWARD"
    INVERSE = "INVERSE"


def free_phase(grid, t: float) -> np.ndarray:
    """exp(-i t (|xi|^2 + k^2)) in FFT order."""
    return np.exp(-1j * t * (grid.xi_sq_fft + grid.k_sq_fft))


def propagate_free(u0: ComplexField, t: float) -> ComplexField:
    """Apply e^{it Laplacian} on R^d x T; returns a PHYSICAL field."""
    u0 = physical(u0)
    if t == 0:
        return u0
    g = u0.grid
    uh = sfft.fftn(u0.values)
    uh *= free_phase(g, t)
    return ComplexField(g, sfft.ifftn(uh))


def propagate_torus(u: ComplexField, t: float, direction: Direction | str = Direction.FORWARD) -> ComplexField:
    """Apply e^{+it d_xx} (FORWARD) or e^{-it d_xx} (INVERSE) in x only."""
    u = physical(u)
    g = u.grid
    sign = -1.0 if Direction(direction) == Direction.FORWARD else 1.0
    ax = g.x_axis
    uh = sfft.fft(u.values, axis=ax)
    uh *= np.exp(sign * 1j * t * g.k_sq_fft)
    return ComplexField(g, sfft.ifft(uh, axis=ax))


def dispersive_ratio(h: ComplexField, t: float, boundary_tol: float = 1e-8) -> float:
    """t^{d/2} ||e^{it Laplacian} h||_{L_y^inf H_x^1} / ||h||_{L_y^1 H_x^1}."""
    if not t > 0:
        raise DomainError(f"dispersive ratio needs t > 0, got {t}")
    denom = mixed_norm(h, 1, sobolev_x=1)
    if denom == 0:
        raise DomainError("degenerate data: ||h||_{L_y^1 H_x^1} = 0", code="DEGENERATE")
    ut = propagate_free(h, t)
    bm = boundary_mass_fraction(ut)
    if bm > boundary_tol:
        raise DomainError(f"boundary mass {bm:.3e} exceeds {boundary_tol:.1e} at t={t}", code="OUT_OF_DOMAIN")
    return t ** (h.grid.d / 2) * mixed_norm(ut, np.inf, sobolev_x=1) / denom


def lightcone_mass(h: ComplexField, t: float, K: float, allow_exit: bool = False) -> float:
    """Mass of e^{it Laplacian} h inside the cone |y| <= K t (sharp cutoff).

    A cone reaching the box edge raises ``DomainError`` unless ``allow_exit``
    is set, in which case the cone is simply clipped to the box.
    """
    if not (t > 0 and K > 0):
        raise DomainError("lightcone mass needs t > 0 and K > 0")
    g = h.grid
    if K * t >= 0.5 * g.L_y and not allow_exit:
        raise DomainError(f"cone radius K t = {K * t} leaves the box (L_y/2 = {0.5 * g.L_y})", code="CONE_EXITS_BOX")
    ut = propagate_free(h, t)
    inside = np.broadcast_to(np.sqrt(g.y_sq) <= K * t, g.shape)
    dens = np.abs(ut.values) ** 2
    return float(dens[inside].sum() * g.cell_volume)


def frequency_ball_mass(h: ComplexField, radius: float) -> float:
    """Spectral mass of h on |xi| <= radius (all torus modes).

    This is the large-time limit of ``lightcone_mass(h, t, K)`` with
    ``radius = K / 2``.
    """
    g = h.grid
    hh = transform(h, Space.SPECTRAL_Y)
    ball = np.broadcast_to(np.sqrt(g.xi_sq) <= radius, g.shape)
    return float(np.sum(np.abs(hh.values[ball]) ** 2) * g.spectral_volume * g.dx)
