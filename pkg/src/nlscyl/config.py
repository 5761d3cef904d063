"""Experiment configuration files.

Format: one ``key = value`` per line, ``#`` starts a comment, ``[section]``
headers group keys.  Every key belongs to exactly one section; keys before
the first header belong to ``[experiment]``.  Lists are comma separated.

Defaults depend on the experiment name and are listed in ``DEFAULTS``.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import ConfigurationError
from .grid import ComplexField, CylinderGrid, make_grid
from .integrator import SimConfig


class ExperimentName(str, enum.Enum):
    LINEAR_DECAY = "LINEAR_DECAY"
    SMALL_DATA_SCATTER = "SMALL_DATA_SCATTER"
    LONG_RANGE_NONSCATTER = "LONG_RANGE_NONSCATTER"
    FRAC_ORACLE = "FRAC_ORACLE"


class TorusProfile(str, enum.Enum):
    CONSTANT = "CONSTANT"
    SINGLE_MODE = "SINGLE_MODE"


@dataclass(frozen=True)
class ExperimentSpec:
    name: ExperimentName
    out_dir: str = "out"
    seed: Optional[int] = None
    # grid
    d: int = 1
    L_y: float = 1200.0
    N_y: int = 4096
    N_x: int = 32
    # time stepping
    p: float = 4.0
    dt: float = 0.01
    t0: float = 1.0
    t_end: float = 100.0
    amplitude: float = 0.05
    boundary_mass_tol: float = 1e-8
    spectral_tail_tol: float = 1e-8
    monitor_every: int = 100
    snapshot_spacing: float = 0.5
    # initial data: exp(-|y - center|^2 / (2 width^2)) * torus profile
    width: float = 2.0
    center: float = 0.0
    torus_profile: TorusProfile = TorusProfile.CONSTANT
    k0: int = 1
    # diagnostics
    s_eps: float = 0.01
    ladder: tuple[float, ...] = (10.0, 20.0, 40.0, 80.0)
    residual_time: float = 80.0
    residual_delta: float = 0.02
    lightcone_K: float = 1.0
    lightcone_times: tuple[float, ...] = (25.0, 50.0, 100.0)
    decay_t_min: float = 10.0
    per_octave: int = 4
    frac_s: tuple[float, ...] = (0.3, 0.385, 0.5, 1.0)
    frac_nodes: int = 200
    frac_band: float = 0.25
    n_family: int = 50
    family_p: float = 4.0

    def grid(self) -> CylinderGrid:
        return make_grid(self.d, self.L_y, self.N_y, self.N_x)

    def sim_config(self, snapshot_times=()) -> SimConfig:
        return SimConfig(
            p=self.p,
            dt=self.dt,
            t0=self.t0,
            t_end=self.t_end,
            snapshot_times=tuple(snapshot_times),
            boundary_mass_tol=self.boundary_mass_tol,
            amplitude=self.amplitude,
            spectral_tail_tol=self.spectral_tail_tol,
            monitor_every=self.monitor_every,
        )

    def initial_profile(self, grid: Optional[CylinderGrid] = None) -> ComplexField:
        """Unit-amplitude datum; the amplitude is applied by the integrator."""
        g = grid or self.grid()
        r2 = sum((c - self.center) ** 2 for c in g.mesh()[: g.d])
        vals = np.exp(-r2 / (2 * self.width**2)).astype(complex)
        x = g.mesh()[-1]
        if self.torus_profile == TorusProfile.SINGLE_MODE:
            vals = vals * np.exp(1j * self.k0 * x)
        else:
            vals = vals * np.ones_like(x)
        return ComplexField(g, np.broadcast_to(vals, g.shape))

    def resolved(self) -> dict[str, Any]:
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, enum.Enum):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            out[k] = v
        return out


DEFAULTS: dict[ExperimentName, dict[str, Any]] = {
    ExperimentName.LINEAR_DECAY: dict(amplitude=1.0, t0=0.0, p=3.0),
    ExperimentName.SMALL_DATA_SCATTER: dict(p=4.0, amplitude=0.05, t0=1.0),
    ExperimentName.LONG_RANGE_NONSCATTER: dict(p=2.0, amplitude=0.3, t0=0.0),
    ExperimentName.FRAC_ORACLE: dict(p=4.0, amplitude=1.0, t0=0.0),
}

SECTIONS: dict[str, tuple[str, ...]] = {
    "experiment": ("name", "out_dir", "seed"),
    "grid": ("d", "L_y", "N_y", "N_x"),
    "simulation": (
        "p", "dt", "t0", "t_end", "amplitude", "boundary_mass_tol", "spectral_tail_tol",
        "monitor_every", "snapshot_spacing",
    ),
    "data": ("width", "center", "torus_profile", "k0"),
    "diagnostics": (
        "s_eps", "ladder", "residual_time", "residual_delta", "lightcone_K", "lightcone_times",
        "decay_t_min", "per_octave", "frac_s", "frac_nodes", "frac_band", "n_family", "family_p",
    ),
}

_TYPES = {f.name: f.type for f in fields(ExperimentSpec)}


def _convert(key: str, raw: str, line: int):
    typ = _TYPES[key]
    try:
        if key == "name":
            return ExperimentName(raw.upper())
        if key == "torus_profile":
            return TorusProfile(raw.upper())
        if typ.startswith("tuple"):
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if typ.startswith("int") or typ.startswith("Optional[int]"):
            return int(raw)
        if typ == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"line {line}: cannot parse value {raw!r} for key {key!r}") from None


def _positive_pow2(n: int) -> bool:
    return n >= 8 and (n & (n - 1)) == 0


def _check(key: str, ok: bool, value, rule: str, lines: dict[str, int]):
    if not ok:
        where = f"line {lines[key]}: " if key in lines else ""
        raise ConfigurationError(f"{where}{key} = {value!r} out of range ({rule})")


def validate(spec: ExperimentSpec, lines: Optional[dict[str, int]] = None) -> ExperimentSpec:
    lines = lines or {}
    c = lambda k, ok, rule: _check(k, ok, getattr(spec, k), rule, lines)  # noqa: E731
    c("d", spec.d in (1, 2), "1 or 2")
    c("L_y", spec.L_y > 0, "> 0")
    c("N_y", _positive_pow2(spec.N_y), "power of two >= 8")
    c("N_x", _positive_pow2(spec.N_x), "power of two >= 8")
    c("p", spec.p > 1, "> 1")
    c("dt", spec.dt > 0, "> 0")
    c("t0", spec.t0 >= 0, ">= 0")
    c("t_end", spec.t_end > spec.t0, "> t0")
    c("amplitude", spec.amplitude >= 0, ">= 0")
    c("boundary_mass_tol", 0 < spec.boundary_mass_tol < 1, "in (0, 1)")
    c("spectral_tail_tol", 0 < spec.spectral_tail_tol < 1, "in (0, 1)")
    c("monitor_every", spec.monitor_every >= 1, ">= 1")
    c("snapshot_spacing", 0 < spec.snapshot_spacing <= 0.5, "in (0, 0.5]")
    c("width", spec.width > 0, "> 0")
    c("k0", abs(spec.k0) < spec.N_x // 2, "|k0| < N_x/2")
    c("s_eps", 0 < spec.s_eps < 0.5, "in (0, 0.5)")
    c("ladder", len(spec.ladder) >= 2 and all(b > a > 0 for a, b in zip(spec.ladder, spec.ladder[1:])), "increasing positive, >= 2 rungs")
    c("residual_delta", spec.residual_delta > 0, "> 0")
    c("lightcone_K", spec.lightcone_K > 0, "> 0")
    c("lightcone_times", all(t > 0 for t in spec.lightcone_times), "positive")
    c("decay_t_min", spec.decay_t_min > 0, "> 0")
    c("per_octave", spec.per_octave >= 1, ">= 1")
    c("frac_s", all(0 < s < 2 for s in spec.frac_s) and list(spec.frac_s) == sorted(set(spec.frac_s)), "increasing, in (0, 2)")
    c("frac_nodes", spec.frac_nodes >= 8, ">= 8")
    c("frac_band", 0 < spec.frac_band <= 1, "in (0, 1]")
    c("n_family", spec.n_family >= 1, ">= 1")
    c("family_p", spec.family_p > 1, "> 1")
    if spec.name == ExperimentName.FRAC_ORACLE and spec.seed is None:
        raise ConfigurationError("seed is required for FRAC_ORACLE (randomized oracle fields)")
    if spec.seed is not None:
        c("seed", 0 <= spec.seed < 2**64, "unsigned 64-bit")
    return spec


def parse_text(text: str, overrides: Optional[dict[str, Any]] = None) -> ExperimentSpec:
    section = "experiment"
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigurationError(f"line {lineno}: malformed section header {line!r}")
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ConfigurationError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in SECTIONS[section]:
            home = [s for s, ks in SECTIONS.items() if key in ks]
            hint = f" (belongs in [{home[0]}])" if home else ""
            raise ConfigurationError(f"line {lineno}: unknown key {key!r} in [{section}]{hint}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        values[key] = _convert(key, raw, lineno)
        lines[key] = lineno
    if "name" not in values:
        raise ConfigurationError("missing required key 'name'")
    name = values.pop("name")
    merged = dict(DEFAULTS[name])
    merged.update(values)
    for k, v in (overrides or {}).items():
        if v is not None:
            merged[k] = v
            lines.pop(k, None)
    return validate(ExperimentSpec(name=name, **merged), lines)


def parse_config(path, overrides: Optional[dict[str, Any]] = None) -> ExperimentSpec:
    """Read and validate a configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    return parse_text(path.read_text(), overrides)


def with_overrides(spec: ExperimentSpec, **kw) -> ExperimentSpec:
    return validate(replace(spec, **kw))
