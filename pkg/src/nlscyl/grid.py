"""Discretized cylinder, complex fields, spectral transforms and norms.

The transverse space R^d is truncated to the periodic box [-L_y/2, L_y/2)^d and
the torus direction is sampled on [0, 2*pi).  Values are stored with the y axes
first and the x axis last, so a d=1 field has shape ``(N_y, N_x)``.

Spectral representations use the unitary normalization

    F f(xi, k) = (2*pi)^(-(d+1)/2) * sum f(y, x) exp(-i (xi.y + k x)) dy^d dx,

sorted from the most negative wavenumber upward.  With spectral measure
``dxi^d * 1`` the discrete Parseval identity holds without extra factors, and
the y part coincides with the partial Fourier transform F_y on R^d.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError

SQRT_2PI = np.sqrt(2.0 * np.pi)


class Space(str, enum.Enum):
    PHYSICAL = "PHYSICAL"
    SPECTRAL = "SPECTRAL"
    SPECTRAL_Y = "SPECTRAL_Y"


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CylinderGrid:
    """Uniform grid on the box [-L_y/2, L_y/2)^d x [0, 2 pi)."""

    d: int
    L_y: float
    N_y: int
    N_x: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ConfigurationError(f"d must be 1 or 2, got {self.d}")
        if not (self.L_y > 0 and np.isfinite(self.L_y)):
            raise ConfigurationError(f"L_y must be positive, got {self.L_y}")
        for name in ("N_y", "N_x"):
            n = getattr(self, name)
            if int(n) != n or not _is_power_of_two(int(n)) or n < 8:
                raise ConfigurationError(f"{name} must be a power of two >= 8, got {n}")

    @property
    def dy(self) -> float:
        return self.L_y / self.N_y

    @property
    def dx(self) -> float:
        return 2.0 * np.pi / self.N_x

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.L_y

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N_y,) * self.d + (self.N_x,)

    @property
    def y_axes(self) -> tuple[int, ...]:
        return tuple(range(self.d))

    @property
    def x_axis(self) -> int:
        return self.d

    @property
    def cell_volume(self) -> float:
        return self.dy**self.d * self.dx

    @property
    def spectral_volume(self) -> float:
        return self.dxi**self.d

    @cached_property
    def y(self) -> np.ndarray:
        return -0.5 * self.L_y + self.dy * np.arange(self.N_y)

    @cached_property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(self.N_x)

    @cached_property
    def xi(self) -> np.ndarray:
        """Transverse wavenumbers (2 pi / L_y) * {-N_y/2, ..., N_y/2 - 1}."""
        return self.dxi * np.arange(-self.N_y // 2, self.N_y // 2)

    @cached_property
    def k(self) -> np.ndarray:
        return np.arange(-self.N_x // 2, self.N_x // 2).astype(float)

    @property
    def xi_max(self) -> float:
        return np.pi * self.N_y / self.L_y

    @property
    def k_max(self) -> float:
        return self.N_x / 2.0

    def _bcast(self, arr: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * (self.d + 1)
        shape[axis] = arr.size
        return arr.reshape(shape)

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays ``(y_1, ..., y_d, x)``."""
        return tuple(self._bcast(self.y, a) for a in self.y_axes) + (
            self._bcast(self.x, self.x_axis),
        )

    @cached_property
    def y_sq(self) -> np.ndarray:
        """|y|^2, broadcastable against field values."""
        return sum(self._bcast(self.y**2, a) for a in self.y_axes)

    @cached_property
    def y_abs_max(self) -> np.ndarray:
        """max_j |y_j| (box-shell coordinate), broadcastable."""
        out = self._bcast(np.abs(self.y), 0)
        for a in self.y_axes[1:]:
            out = np.maximum(out, self._bcast(np.abs(self.y), a))
        return out

    # wavenumbers in FFT (unshifted) order, used by the multiplier fast paths
    @cached_property
    def xi_fft(self) -> np.ndarray:
        return 2.0 * np.pi * sfft.fftfreq(self.N_y, self.dy)

    @cached_property
    def k_fft(self) -> np.ndarray:
        return sfft.fftfreq(self.N_x, 1.0 / self.N_x)

    @cached_property
    def xi_sq_fft(self) -> np.ndarray:
        return sum(self._bcast(self.xi_fft**2, a) for a in self.y_axes)

    @cached_property
    def k_sq_fft(self) -> np.ndarray:
        return self._bcast(self.k_fft**2, self.x_axis)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        """|xi|^2 on the sorted spectral lattice, broadcastable."""
        return sum(self._bcast(self.xi**2, a) for a in self.y_axes)

    @cached_property
    def k_sq(self) -> np.ndarray:
        return self._bcast(self.k**2, self.x_axis)

    @cached_property
    def _y_sign(self) -> np.ndarray:
        # exp(-i xi_m y_0) with y_0 = -L_y/2 is (-1)^m
        m = np.arange(-self.N_y // 2, self.N_y // 2)
        s = np.where(m % 2 == 0, 1.0, -1.0)
        out = self._bcast(s, 0)
        for a in self.y_axes[1:]:
            out = out * self._bcast(s, a)
        return out


def make_grid(d: int, L_y: float, N_y: int, N_x: int) -> CylinderGrid:
    return CylinderGrid(int(d), float(L_y), int(N_y), int(N_x))


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples of u(y, x) on a grid, tagged with their representation.

    Values are read-only; every operation returns a new field.  ``notes``
    carries diagnostic remarks attached by operations (e.g. a removed zero
    mode or a quadrature accuracy warning).
    """

    grid: CylinderGrid
    values: np.ndarray
    space: Space = Space.PHYSICAL
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if vals.flags.writeable:
            vals = vals.copy()
            vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "space", Space(self.space))

    @classmethod
    def zeros(cls, grid: CylinderGrid) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def from_function(cls, grid: CylinderGrid, func) -> "ComplexField":
        """Sample ``func(y_1, ..., y_d, x)`` on the physical grid."""
        vals = np.broadcast_to(func(*grid.mesh()), grid.shape)
        return cls(grid, np.array(vals, dtype=np.complex128))

    def with_values(self, values: np.ndarray, notes: tuple[str, ...] = ()) -> "ComplexField":
        return ComplexField(self.grid, values, self.space, notes)

    def _check_compatible(self, other: "ComplexField"):
        if self.grid != other.grid or self.space != other.space:
            raise ValueError("fields live on different grids or representations")

    def __add__(self, other: "ComplexField") -> "ComplexField":
        self._check_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        self._check_compatible(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "ComplexField":
        if isinstance(c, ComplexField):
            return NotImplemented
        return self.with_values(complex(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "ComplexField":
        return self.with_values(-self.values)


# -- transforms -------------------------------------------------------------


def _fwd_y(a: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    out = sfft.fftshift(sfft.fftn(a, axes=grid.y_axes), axes=grid.y_axes)
    out *= grid._y_sign * (grid.dy / SQRT_2PI) ** grid.d
    return out


def _inv_y(a: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    b = a * (grid._y_sign / (grid.dy / SQRT_2PI) ** grid.d)
    return sfft.ifftn(sfft.ifftshift(b, axes=grid.y_axes), axes=grid.y_axes)


def _fwd_x(a: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    ax = grid.x_axis
    return sfft.fftshift(sfft.fft(a, axis=ax), axes=ax) * (grid.dx / SQRT_2PI)


def _inv_x(a: np.ndarray, grid: CylinderGrid) -> np.ndarray:
    ax = grid.x_axis
    return sfft.ifft(sfft.ifftshift(a * (SQRT_2PI / grid.dx), axes=ax), axis=ax)


def transform(f: ComplexField, target: Space | str) -> ComplexField:
    """Change the representation of ``f`` to ``target``."""
    target = Space(target)
    src = f.space
    if src == target:
        return f
    g = f.grid
    a = f.values
    # route through the y-spectral-only representation
    if src == Space.PHYSICAL:
        a = _fwd_y(a, g)
    elif src == Space.SPECTRAL:
        a = _inv_x(a, g)
    if target == Space.PHYSICAL:
        a = _inv_y(a, g)
    elif target == Space.SPECTRAL:
        a = _fwd_x(a, g)
    return ComplexField(g, a, target, f.notes)


def physical(f: ComplexField) -> ComplexField:
    return transform(f, Space.PHYSICAL)


def _weight(f: ComplexField) -> float:
    g = f.grid
    if f.space == Space.PHYSICAL:
        return g.cell_volume
    if f.space == Space.SPECTRAL:
        return g.spectral_volume
    return g.spectral_volume * g.dx


def l2_norm(f: ComplexField) -> float:
    """Discrete L^2 norm in whatever representation ``f`` is held."""
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * _weight(f)))


def inner(f: ComplexField, h: ComplexField) -> complex:
    """Discrete <f, h> = sum f conj(h) (measure weights)."""
    f._check_compatible(h)
    return complex(np.vdot(h.values, f.values) * _weight(f))


# -- conserved quantities and norms -------------------------------------------


@dataclass(frozen=True)
class ConservedPair:
    mass: float
    energy: float


def mass(u: ComplexField) -> float:
    u = physical(u)
    return float(np.sum(np.abs(u.values) ** 2) * u.grid.cell_volume)


def _spectral_gradient_sq(u: ComplexField) -> float:
    """sum |grad u|^2 dV evaluated through Parseval."""
    uh = transform(u, Space.SPECTRAL)
    g = u.grid
    return float(np.sum((g.xi_sq + g.k_sq) * np.abs(uh.values) ** 2) * g.spectral_volume)


def energy(u: ComplexField, p: float) -> float:
    """0.5 |grad u|^2 + |u|^(p+1)/(p+1), integrated by the rectangle rule."""
    u = physical(u)
    pot = np.sum(np.abs(u.values) ** (p + 1)) * u.grid.cell_volume / (p + 1)
    return float(0.5 * _spectral_gradient_sq(u) + pot)


def conserved(u: ComplexField, p: float) -> ConservedPair:
    return ConservedPair(mass(u), energy(u, p))


def x_profile_norm(u: ComplexField, sobolev_x: int) -> np.ndarray:
    """Per-transverse-point L_x^2 (sobolev_x=0) or H_x^1 (sobolev_x=1) norm."""
    u = physical(u)
    g = u.grid
    if sobolev_x == 0:
        return np.sqrt(np.sum(np.abs(u.values) ** 2, axis=g.x_axis) * g.dx)
    if sobolev_x == 1:
        uk = _fwd_x(u.values, g)
        return np.sqrt(np.sum((1.0 + g.k_sq) * np.abs(uk) ** 2, axis=g.x_axis))
    raise ConfigurationError(f"sobolev_x must be 0 or 1, got {sobolev_x}")


def mixed_norm(u: ComplexField, r_y: float, sobolev_x: int = 0) -> float:
    """||u||_{L_y^r L_x^2} or ||u||_{L_y^r H_x^1}; r_y = inf gives the grid max."""
    if not r_y >= 1:
        raise ConfigurationError(f"r_y must be >= 1, got {r_y}")
    prof = x_profile_norm(u, sobolev_x)
    if np.isinf(r_y):
        return float(prof.max())
    dvol = u.grid.dy**u.grid.d
    return float((np.sum(prof**r_y) * dvol) ** (1.0 / r_y))


def gradient(u: ComplexField) -> list[np.ndarray]:
    """Physical-space components (d/dy_1, ..., d/dy_d, d/dx), computed spectrally."""
    g = u.grid
    uh = transform(u, Space.SPECTRAL).values
    comps = []
    for a in g.y_axes:
        comps.append(g._bcast(1j * g.xi, a))
    comps.append(g._bcast(1j * g.k, g.x_axis))
    return [transform(ComplexField(g, c * uh, Space.SPECTRAL), Space.PHYSICAL).values for c in comps]


def sigma_norm(u: ComplexField) -> float:
    """||<y>^2 u|| + ||<y> grad u|| + ||u||_{H^2}, with <y> = (1+|y|^2)^(1/2)."""
    return float(sum(sigma_norm_terms(u)))


def sigma_norm_terms(u: ComplexField) -> tuple[float, float, float]:
    u = physical(u)
    g = u.grid
    wy = 1.0 + g.y_sq
    weighted = np.sqrt(np.sum(wy**2 * np.abs(u.values) ** 2) * g.cell_volume)
    grad_sq = sum(np.abs(c) ** 2 for c in gradient(u))
    grad_term = np.sqrt(np.sum(wy * grad_sq) * g.cell_volume)
    uh = transform(u, Space.SPECTRAL).values
    h2 = np.sqrt(np.sum(((1.0 + g.xi_sq + g.k_sq) * np.abs(uh)) ** 2) * g.spectral_volume)
    return float(weighted), float(grad_term), float(h2)


def boundary_mass_fraction(u: ComplexField, shell: float = 0.1) -> float:
    """Relative mass in the outer ``shell`` fraction of the transverse box."""
    u = physical(u)
    dens = np.abs(u.values) ** 2
    total = dens.sum()
    if total == 0:
        return 0.0
    mask = np.broadcast_to(u.grid.y_abs_max > (1.0 - shell) * 0.5 * u.grid.L_y, dens.shape)
    return float(dens[mask].sum() / total)


def spectral_tail_fraction(u: ComplexField, top: float = 0.1) -> float:
    """Relative spectral mass on the top ``top`` fraction of |xi| or |k| modes."""
    g = u.grid
    uh = transform(u, Space.SPECTRAL).values
    return _tail_fraction_raw(np.abs(uh) ** 2, g, top, sorted_order=True)


def _tail_fraction_raw(power: np.ndarray, g: CylinderGrid, top: float, sorted_order: bool) -> float:
    total = power.sum()
    if total == 0:
        return 0.0
    xi = np.abs(g.xi if sorted_order else g.xi_fft)
    kk = np.abs(g.k if sorted_order else g.k_fft)
    mask = g._bcast(kk > (1.0 - top) * g.k_max, g.x_axis)
    for a in g.y_axes:
        mask = mask | g._bcast(xi > (1.0 - top) * g.xi_max, a)
    mask = np.broadcast_to(mask, power.shape)
    return float(power[mask].sum() / total)
