"""Shared types, unit conventions and parameter handling.

Frequencies, rates, detunings and Rabi half-amplitudes are stored in units of
the natural linewidth unit ``gamma`` (``gamma_SI`` rad/s).  SI values appear only
where a quantity leaves the gamma-scaled world: the susceptibility prefactor,
Doppler widths and pulse times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from scipy.constants import c

__all__ = [
    "NvaporError",
    "ValidationError",
    "PoleError",
    "NumericalDegeneracyError",
    "SystemParams",
    "DensityComponent",
    "PropagatorFactors",
    "ResponseSpectrum",
    "build_params",
    "intensity_of",
    "load_config",
    "chi_prefactor",
]

A_EINSTEIN_K39 = 2 * math.pi * 6.079e6
LAMBDA_K39_D1 = 770.108e-9
DEFAULT_OMEGA_P = 2 * math.pi * c / LAMBDA_K39_D1
DEFAULT_DENSITY = 1e18  # 1e12 cm^-3

# mW/cm^2 per (G/gamma)^2; fixed by G = 0.5 gamma <-> 0.415 mW/cm^2
INTENSITY_PER_G2 = 1.66


class NvaporError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(NvaporError, ValueError):
    pass


class PoleError(NvaporError, ArithmeticError):
    """A response denominator (or sideband matrix) is singular."""

    def __init__(self, message: str, omega_pc: float | None = None, cond: float | None = None):
        super().__init__(message)
        self.omega_pc = omega_pc
        self.cond = cond


class NumericalDegeneracyError(NvaporError, np.linalg.LinAlgError):
    def __init__(self, message: str, cond: float):
        super().__init__(message)
        self.cond = cond


@dataclass(frozen=True)
class SystemParams:
    """Full parameter set of the driven four-level system.

    ``gamma1`` is the decay rate shared by 3->1 and 4->2 (the probe-coupled
    transitions), ``gamma2`` the rate shared by 4->1 and 3->2.  ``Gamma1``,
    ``Gamma2`` and ``Gamma3`` damp the ground-excited, 1-2 and 3-4 coherences.
    ``g`` is recorded for reference only; every result is linear in it.
    """

    gamma1: float = 2.0
    gamma2: float = 1.0
    gamma_coll: float = 0.0
    Gamma1: float = 1.5
    Gamma2: float = 0.0
    Gamma3: float = 3.0
    G1: complex = 1.0
    G2: complex = 1.0
    g: complex = 1e-3
    Delta: float = 0.0
    delta: float = 0.0
    N_density: float = DEFAULT_DENSITY
    omega_p: float = DEFAULT_OMEGA_P
    gamma_SI: float = A_EINSTEIN_K39 / 6
    A_einstein: float = A_EINSTEIN_K39

    @property
    def omega_pc(self) -> float:
        """Probe-control frequency difference, delta - Delta."""
        return self.delta - self.Delta

    @property
    def equal_drive(self) -> bool:
        scale = max(abs(self.G1), abs(self.G2))
        return abs(self.G1 - self.G2) <= 1e-12 * scale

    def with_(self, **changes: Any) -> SystemParams:
        """Copy with fields replaced.  Derived rates are *not* recomputed."""
        return replace(self, **changes)

    def with_drive(self, G1: complex, G2: complex | None = None) -> SystemParams:
        return replace(self, G1=G1, G2=G1 if G2 is None else G2)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, complex):
                out[f.name] = v.real if v.imag == 0 else [v.real, v.imag]
            else:
                out[f.name] = v
        return out


PARAM_KEYS = tuple(f.name for f in fields(SystemParams))
_RATE_KEYS = ("gamma1", "gamma2", "gamma_coll", "Gamma1", "Gamma2", "Gamma3", "gamma_SI", "A_einstein")
_COMPLEX_KEYS = ("G1", "G2", "g")


def build_params(config: Mapping[str, Any] | None = None) -> SystemParams:
    """Build a validated :class:`SystemParams` from a flat key/value mapping.

    Missing keys take their defaults (gamma13 = gamma24 = 2 gamma,
    gamma23 = gamma14 = gamma, no collisions, N = 1e12 cm^-3).  The dephasing
    rates are derived from the decay rates unless given explicitly::

        Gamma1 = (gamma1 + gamma2)/2 + gamma_coll
        Gamma2 = gamma_coll
        Gamma3 = gamma1 + gamma2 + gamma_coll

    ``gamma_SI`` defaults to ``A_einstein / 6``.
    """
    config = dict(config or {})
    unknown = sorted(set(config) - set(PARAM_KEYS))
    if unknown:
        raise ValidationError(
            f"unknown parameter(s) {', '.join(unknown)}; accepted keys: {', '.join(PARAM_KEYS)}"
        )

    values: dict[str, Any] = {}
    for key, raw in config.items():
        if key in _COMPLEX_KEYS:
            v = complex(raw)
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValidationError(f"{key} must be finite, got {raw!r}")
        else:
            if isinstance(raw, complex):
                raise ValidationError(f"{key} must be real, got {raw!r}")
            v = float(raw)
            if not math.isfinite(v):
                raise ValidationError(f"{key} must be finite, got {raw!r}")
        values[key] = v

    for key in _RATE_KEYS:
        if key in values and values[key] < 0:
            raise ValidationError(f"{key} must be >= 0, got {values[key]}")
    if values.get("N_density", 0.0) < 0:
        raise ValidationError(f"N_density must be >= 0, got {values['N_density']}")
    if values.get("omega_p", 1.0) <= 0:
        raise ValidationError(f"omega_p must be > 0, got {values['omega_p']}")

    defaults = SystemParams()
    g1 = values.get("gamma1", defaults.gamma1)
    g2 = values.get("gamma2", defaults.gamma2)
    coll = values.get("gamma_coll", defaults.gamma_coll)
    values.setdefault("Gamma1", 0.5 * (g1 + g2) + coll)
    values.setdefault("Gamma2", coll)
    values.setdefault("Gamma3", g1 + g2 + coll)
    a_coeff = values.get("A_einstein", defaults.A_einstein)
    values.setdefault("gamma_SI", a_coeff / 6)
    if values["gamma_SI"] == 0:
        raise ValidationError("gamma_SI must be > 0")
    return SystemParams(**values)


def intensity_of(G: float) -> float:
    """Control intensity in mW/cm^2 for a Rabi half-amplitude ``G`` (in gamma)."""
    return INTENSITY_PER_G2 * float(G) ** 2


def chi_prefactor(params: SystemParams) -> float:
    """3 N c^3 / (2 omega_p^3); multiplies the gamma-scaled coherence."""
    return 3.0 * params.N_density * c**3 / (2.0 * params.omega_p**3)


def _parse_number(text: str) -> float | complex:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        return complex(text.replace(" ", ""))


def load_config(path: str | Path) -> dict[str, float | complex]:
    """Read a flat ``key = number`` file (``#`` starts a comment)."""
    out: dict[str, float | complex] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = number'")
        key, _, value = line.partition("=")
        key = key.strip()
        try:
            out[key] = _parse_number(value)
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: {key} is not a number: {value.strip()!r}") from None
    return out


@dataclass(frozen=True)
class DensityComponent:
    """One Fourier order of the density operator.

    ``order`` 0 is the probe-free steady state (dimensionless); orders -1 and
    +1 are the sideband amplitudes per unit probe Rabi frequency (1/gamma).
    """

    order: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.order not in (-1, 0, 1):
            raise ValidationError(f"order must be -1, 0 or +1, got {self.order}")
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError(f"matrix must be 4x4, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __getitem__(self, idx: tuple[int, int]) -> complex:
        """1-based element access, ``rho[3, 1]`` is rho_31."""
        i, j = idx
        return complex(self.matrix[i - 1, j - 1])

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


@dataclass(frozen=True)
class PropagatorFactors:
    p: complex
    q: complex
    r: complex
    s: complex
    u: complex

    @classmethod
    def at(cls, params: SystemParams, omega_pc, Delta=None) -> PropagatorFactors:
        """Evaluate the kernel at ``omega_pc`` (scalars or broadcastable arrays)."""
        Delta = params.Delta if Delta is None else Delta
        p = -params.Gamma1 + 1j * np.asarray(omega_pc)
        q = p - 1j * np.asarray(Delta)
        r = -params.Gamma2 + 1j * np.asarray(omega_pc)
        s = p + 1j * np.asarray(Delta)
        u = -params.Gamma3 + 1j * np.asarray(omega_pc)
        if all(np.ndim(x) == 0 for x in (p, q, r, s, u)):
            return cls(complex(p), complex(q), complex(r), complex(s), complex(u))
        return cls(p, q, r, s, u)


@dataclass(frozen=True)
class ResponseSpectrum:
    """Sampled probe response on a detuning grid.

    ``delta`` is in gamma, ``rho_pi`` is the gamma-scaled coherence per unit
    probe Rabi frequency, ``chi`` the dimensionless susceptibility.  Grid
    points where a response denominator vanished are flagged in ``pole`` and
    carry NaN.
    """

    delta: np.ndarray
    rho_pi: np.ndarray
    chi: np.ndarray
    pole: np.ndarray
    params: SystemParams
    meta: dict = field(default_factory=dict)

    @property
    def dispersion(self) -> np.ndarray:
        return self.chi.real

    @property
    def absorption(self) -> np.ndarray:
        return self.chi.imag

    def __len__(self) -> int:
        return len(self.delta)
