"""Fractional powers of the transverse Laplacian.

Two independent routes are provided:

* ``frac_laplacian_fourier`` applies |xi|^{+-s} directly in the y spectrum;
* ``frac_laplacian_resolvent`` builds (-Lap_y)^{-s/2} from resolvents,

      (-Lap)^{-s/2} u = c(s)^{-1} int_0^inf lam^{-s/2} (lam - Lap)^{-1} u dlam,

  discretized in lam = e^v with one Gauss-Legendre panel on each side of the
  split point.

The first serves as the oracle for the second.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy import integrate

from .errors import AccuracyWarning, ConfigurationError
from .grid import ComplexField, mixed_norm, physical


class Power(str, enum.Enum):
    POSITIVE = "POSITIVE"
    NEGATIVE = "NEGATIVE"


@dataclass(frozen=True)
class QuadratureScheme:
    """Log-substituted two-panel Gauss-Legendre rule for the lam integral.

    ``n_nodes`` is the total node count, split evenly between the panels
    [u_min, log(split_point)] and [log(split_point), u_max].  With
    ``tail_correction`` the pieces of the integral beyond u_min and u_max
    are added from their convergent series in e^{-v}.
    """

    n_nodes: int = 200
    split_point: float = 1.0
    u_min: float = -30.0
    u_max: float = 30.0
    tail_correction: bool = True

    def __post_init__(self):
        if self.n_nodes < 8:
            raise ConfigurationError(f"n_nodes must be >= 8, got {self.n_nodes}")
        if not self.split_point > 0:
            raise ConfigurationError("split_point must be positive")
        if not (self.u_min < np.log(self.split_point) < self.u_max):
            raise ConfigurationError("need u_min < log(split_point) < u_max")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes v_j and weights w_j in the substituted variable v = log(lam)."""
        v_split = np.log(self.split_point)
        n_lo = self.n_nodes // 2
        out_v, out_w = [], []
        for (a, b), n in (((self.u_min, v_split), n_lo), ((v_split, self.u_max), self.n_nodes - n_lo)):
            x, w = np.polynomial.legendre.leggauss(n)
            out_v.append(0.5 * (b - a) * x + 0.5 * (b + a))
            out_w.append(0.5 * (b - a) * w)
        return np.concatenate(out_v), np.concatenate(out_w)


def _check_s(s: float, allow_two: bool = False):
    hi_ok = s <= 2 if allow_two else s < 2
    if not (s > 0 and hi_ok):
        raise ConfigurationError(f"s must lie in (0, 2), got {s}")


def _y_multiplier(u: ComplexField, mult_fft: np.ndarray, notes: tuple[str, ...] = ()) -> ComplexField:
    u = physical(u)
    axes = u.grid.y_axes
    uh = sfft.fftn(u.values, axes=axes)
    uh *= mult_fft
    return ComplexField(u.grid, sfft.ifftn(uh, axes=axes), notes=u.notes + notes)


def _zero_mode_mass(u: ComplexField) -> float:
    g = u.grid
    uh0 = np.sum(u.values, axis=g.y_axes) * (g.dy / np.sqrt(2 * np.pi)) ** g.d
    return float(np.sum(np.abs(uh0) ** 2) * g.spectral_volume * g.dx)


def _zero_mode_note(u: ComplexField) -> tuple[str, ...]:
    u = physical(u)
    zm = _zero_mode_mass(u)
    total = float(np.sum(np.abs(u.values) ** 2) * u.grid.cell_volume)
    if total > 0 and zm > 1e-24 * total:
        return (f"zero mode removed: mass={zm:.6e}",)
    return ()


def frac_laplacian_fourier(u: ComplexField, s: float, sign: Power | str = Power.POSITIVE) -> ComplexField:
    """Apply (-Lap_y)^{s/2} (POSITIVE) or (-Lap_y)^{-s/2} (NEGATIVE).

    s = 2 is accepted as the limiting case -Lap_y.  For NEGATIVE powers the
    xi = 0 mode is projected out; if it carried mass the removal is recorded
    in ``notes``.
    """
    _check_s(s, allow_two=True)
    g = u.grid
    if Power(sign) == Power.POSITIVE:
        return _y_multiplier(u, g.xi_sq_fft ** (0.5 * s))
    xsq = g.xi_sq_fft
    mult = np.zeros_like(xsq)
    nz = xsq > 0
    mult[nz] = xsq[nz] ** (-0.5 * s)
    return _y_multiplier(u, mult, _zero_mode_note(u))


def resolvent_apply(u: ComplexField, lam: float) -> ComplexField:
    """(lam - Lap_y)^{-1} u."""
    if not lam > 0:
        raise ConfigurationError(f"resolvent parameter must be positive, got {lam}")
    return _y_multiplier(u, 1.0 / (lam + u.grid.xi_sq_fft))


@lru_cache(maxsize=256)
def _c_of_s_quad(s: float) -> float:
    # fold (1, inf) onto (0, 1) with tau -> 1/tau; both pieces carry an
    # algebraic endpoint singularity handled by QUADPACK's 'alg' weight
    lo, _ = integrate.quad(lambda t: 1.0 / (1.0 + t), 0.0, 1.0, weight="alg", wvar=(-0.5 * s, 0.0), epsabs=0, epsrel=1e-13, limit=200)
    hi, _ = integrate.quad(lambda t: 1.0 / (1.0 + t), 0.0, 1.0, weight="alg", wvar=(0.5 * s - 1.0, 0.0), epsabs=0, epsrel=1e-13, limit=200)
    return lo + hi


def c_of_s(s: float) -> float:
    """c(s) = int_0^inf tau^{-s/2} (1 + tau)^{-1} dtau, by adaptive quadrature."""
    _check_s(s)
    if not 0.05 <= s <= 1.95:
        warnings.warn(f"c(s) integral is nearly divergent at s={s}", AccuracyWarning, stacklevel=2)
    return _c_of_s_quad(float(s))


def c_of_s_closed_form(s: float) -> float:
    return float(np.pi / np.sin(0.5 * np.pi * s))


def _tail_upper(A: np.ndarray, s: float, u_max: float, terms: int = 30) -> np.ndarray:
    # int_{u_max}^inf e^{-v s/2} / (1 + A e^{-v}) dv, expanded in A e^{-v}
    out = np.zeros_like(A)
    for k in range(terms):
        out += (-A) ** k * np.exp(-(k + 0.5 * s) * u_max) / (k + 0.5 * s)
    return out


def _tail_lower(A: np.ndarray, s: float, u_min: float, terms: int = 30) -> np.ndarray:
    # int_{-inf}^{u_min} e^{v(1-s/2)} / (e^v + A) dv, expanded in e^v / A
    out = np.zeros_like(A)
    for k in range(terms):
        out += (-1.0) ** k * A ** (-k - 1.0) * np.exp((k + 1 - 0.5 * s) * u_min) / (k + 1 - 0.5 * s)
    return out


def resolvent_symbol(A: np.ndarray, s: float, q: QuadratureScheme) -> tuple[np.ndarray, bool]:
    """Quadrature value of c(s)^{-1} int lam^{-s/2} (lam + A)^{-1} dlam for A > 0.

    Returns the symbol and whether the truncation window was wide enough.
    """
    A = np.asarray(A, dtype=float)
    v, w = q.nodes()
    lam = np.exp(v)
    # integrand in v carries the Jacobian dlam = lam dv
    weights = w * lam ** (1.0 - 0.5 * s)
    sym = (weights[:, None] / (lam[:, None] + A.ravel()[None, :])).sum(axis=0).reshape(A.shape)
    ok = bool(np.all(q.u_min < np.log(A)) and np.all(np.log(A) < q.u_max))
    if q.tail_correction:
        up_ok = A * np.exp(-q.u_max) < 0.5
        lo_ok = np.exp(q.u_min) / A < 0.5
        sym = sym + np.where(up_ok, _tail_upper(np.where(up_ok, A, 0.0), s, q.u_max), 0.0)
        sym = sym + np.where(lo_ok, _tail_lower(np.where(lo_ok, A, 1.0), s, q.u_min), 0.0)
    return sym / c_of_s(s), ok


def frac_laplacian_resolvent(u: ComplexField, s: float, q: QuadratureScheme | None = None) -> ComplexField:
    """(-Lap_y)^{-s/2} u assembled from resolvents at the quadrature nodes.

    The resolvents are diagonal in the y spectrum, so the weighted sum over
    nodes is accumulated as one symbol and applied with a single transform
    pair.
    """
    _check_s(s)
    q = q or QuadratureScheme()
    g = u.grid
    xsq = g.xi_sq_fft
    nz = xsq > 0
    mult = np.zeros_like(xsq)
    sym, ok = resolvent_symbol(xsq[nz], s, q)
    mult[nz] = sym
    notes = _zero_mode_note(u)
    if not ok:
        msg = (
            f"quadrature window [{q.u_min}, {q.u_max}] does not cover log|xi|^2 in "
            f"[{np.log(xsq[nz].min()):.2f}, {np.log(xsq[nz].max()):.2f}]"
        )
        warnings.warn(msg, AccuracyWarning, stacklevel=2)
        notes = notes + ("accuracy warning: " + msg,)
    return _y_multiplier(u, mult, notes)


@dataclass(frozen=True)
class InterpolationWitness:
    lhs: float
    term_a: float
    term_b: float
    s: float
    eta: float
    mu: float

    @property
    def quotient(self) -> float:
        den = self.term_a + self.term_b
        return self.lhs / den if den > 0 else 0.0


def interpolation_exponents(d: int, p: float, s: float) -> tuple[float, float]:
    """(eta, mu) from the Holder split: 1/2 - 1/gam = s/d, mu = 2 gam,
    (1 - eta)/mu + eta/2 = 1/(2p)."""
    inv_gam = 0.5 - s / d
    if not 0 < inv_gam < 1.0 / (2 * p):
        raise ConfigurationError(f"s={s} outside the interpolation range for d={d}, p={p}")
    inv_mu = 0.5 * inv_gam
    eta = (1.0 / (2 * p) - inv_mu) / (0.5 - inv_mu)
    return eta, 1.0 / inv_mu


def default_s(d: int, p: float, eps: float = 0.01) -> float:
    return 0.5 * d * (1.0 - 1.0 / p) + eps


def interpolation_witness(u: ComplexField, s: float | None, p: float, eps: float = 0.01) -> InterpolationWitness:
    """Both sides of ||u||_{L^2p} <= C ||D^s u|| + C ||D^s u||^{1-eta} ||u||^eta.

    Norms are L_y^r H_x^1; for x-independent data this is a constant multiple
    of the pure-y norms, which leaves the quotient unchanged.
    """
    d = u.grid.d
    if s is None:
        s = default_s(d, p, eps)
    eta, mu = interpolation_exponents(d, p, s)
    lhs = mixed_norm(u, 2 * p, sobolev_x=1)
    term_a = mixed_norm(frac_laplacian_fourier(u, s, Power.POSITIVE), 2, sobolev_x=1)
    l2 = mixed_norm(u, 2, sobolev_x=1)
    term_b = term_a ** (1 - eta) * l2**eta if term_a > 0 else 0.0
    return InterpolationWitness(lhs, term_a, term_b, s, eta, mu)
