"""First-order probe coherences rho_31^(-1), rho_42^(-1) and the susceptibility.

All coherences are per unit probe Rabi frequency and scaled by gamma, so the
numbers returned here are dimensionless.  Three independent routes are
provided: the equal-drive closed form, the general closed form split into
population-difference (A) and control-coherence (B, C) terms, and a brute
force solve of the 16-component sideband equations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DensityComponent,
    PoleError,
    PropagatorFactors,
    ResponseSpectrum,
    SystemParams,
    ValidationError,
    chi_prefactor,
)
from .steady_state import (
    COND_LIMIT,
    _TRACE_IDX,
    _TRACE_ROW,
    liouvillian,
    steady_state_batch,
    zeroth_order,
)

__all__ = [
    "CoherenceBreakdown",
    "response_equal_G",
    "response_general",
    "response_numeric",
    "sideband_components",
    "rho_pi_values",
    "susceptibility",
    "POLE_EPS",
]

POLE_EPS = 1e-300

# probe coupling |3><1| + |4><2| (0-based)
_PROBE = np.zeros((4, 4), dtype=complex)
_PROBE[2, 0] = _PROBE[3, 1] = 1.0


@dataclass(frozen=True)
class CoherenceBreakdown:
    A1: complex
    B1: complex
    C1: complex
    A2: complex
    B2: complex
    C2: complex
    rho31: complex
    rho42: complex
    rho_pi: complex

    def __post_init__(self):
        for name, parts in (("rho31", (self.A1, self.B1, self.C1)), ("rho42", (self.A2, self.B2, self.C2))):
            total = getattr(self, name)
            resid = np.abs(np.asarray(total) - sum(parts))
            scale = np.maximum(1.0, np.abs(np.asarray(total)))
            if np.any(resid > 1e-14 * scale):
                raise ValueError(f"{name} does not equal the sum of its terms")


def _general_terms(params: SystemParams, omega_pc, rho0, Delta=None):
    """Vectorised A/B/C terms.  ``rho0`` has shape ``(..., 4, 4)``."""
    f = PropagatorFactors.at(params, omega_pc, Delta)
    p, q, r, s, u = f.p, f.q, f.r, f.s, f.u
    G1, G2 = params.G1, params.G2
    a1, a2 = abs(G1) ** 2, abs(G2) ** 2
    rho11, rho22 = rho0[..., 0, 0], rho0[..., 1, 1]
    rho33, rho44 = rho0[..., 2, 2], rho0[..., 3, 3]
    rho14, rho23 = rho0[..., 0, 3], rho0[..., 1, 2]

    base = q * r * s * u + (a1 - a2) ** 2
    d1 = base + a2 * (q * r + s * u) + a1 * (q * u + r * s)
    d2 = base + a2 * (q * u + r * s) + a1 * (q * r + s * u)
    with np.errstate(divide="ignore", invalid="ignore"):
        A1 = -1j * (r * s * u + a2 * r + a1 * u) * (rho11 - rho33) / d1
        B1 = (s * u + a2 - a1) * G2 * rho23 / d1
        C1 = (r * s - a2 + a1) * G1 * rho14 / d1
        A2 = -1j * (r * s * u + a1 * r + a2 * u) * (rho22 - rho44) / d2
        B2 = (s * u + a1 - a2) * G1 * rho14 / d2
        C2 = (r * s - a1 + a2) * G2 * rho23 / d2
    pole = (np.abs(d1) < POLE_EPS) | (np.abs(d2) < POLE_EPS)
    return (A1, B1, C1, A2, B2, C2), pole


def response_general(params: SystemParams, omega_pc, zeroth=None) -> CoherenceBreakdown:
    """General closed-form first-order response, valid for G1 != G2.

    ``omega_pc`` may be a scalar (raises :class:`PoleError` on a vanishing
    denominator) or an array, in which case every field of the result is an
    array and singular points hold NaN.
    """
    zeroth = zeroth_order(params) if zeroth is None else zeroth
    rho0 = zeroth.rho0.matrix
    terms, pole = _general_terms(params, omega_pc, rho0)
    if np.ndim(omega_pc) == 0:
        if pole:
            raise PoleError(f"response denominator vanishes at omega_pc = {float(omega_pc):g}", float(omega_pc))
        terms = tuple(complex(t) for t in terms)
    else:
        terms = tuple(np.where(pole, complex(np.nan, np.nan), t) for t in terms)
    A1, B1, C1, A2, B2, C2 = terms
    rho31 = A1 + B1 + C1
    rho42 = A2 + B2 + C2
    return CoherenceBreakdown(A1, B1, C1, A2, B2, C2, rho31, rho42, rho31 + rho42)


def response_equal_G(params: SystemParams, omega_pc: float, zeroth=None) -> tuple[complex, complex]:
    """Equal-drive closed form; both probe coherences coincide."""
    if not params.equal_drive:
        raise ValidationError("equal-drive formula requires G1 == G2")
    zeroth = zeroth_order(params) if zeroth is None else zeroth
    f = PropagatorFactors.at(params, omega_pc)
    a = abs(params.G1) ** 2
    ru = -params.Gamma2 - params.Gamma3 + 2j * omega_pc
    num = (-1j * f.r * f.s * f.u + omega_pc * a / (-1j * params.Delta + params.Gamma1) * ru) * zeroth.rho_pd
    den = f.q * f.r * f.s * f.u + 2 * a * f.p * ru
    if abs(den) < POLE_EPS:
        raise PoleError(f"response denominator vanishes at omega_pc = {omega_pc:g}", omega_pc)
    value = complex(num / den)
    return value, value


def _sideband_solve(params: SystemParams, omega_pc: float, order: int, rho0: np.ndarray) -> np.ndarray:
    # order -1:  (L + i w) x = -i [P, rho0];  order +1:  (L - i w) x = -i [P^dag, rho0]
    P = _PROBE if order == -1 else _PROBE.conj().T
    A = liouvillian(params) - order * 1j * omega_pc * np.eye(16)
    b = (-1j * (P @ rho0 - rho0 @ P)).reshape(16)
    # sideband amplitudes are traceless
    A[_TRACE_ROW, :] = 0
    A[_TRACE_ROW, _TRACE_IDX] = 1
    b[_TRACE_ROW] = 0
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise PoleError(
            f"sideband system singular at omega_pc = {omega_pc:g} (cond ~ {cond:.3e})", omega_pc, cond
        )
    return np.linalg.solve(A, b).reshape(4, 4)


def sideband_components(params: SystemParams, omega_pc: float, zeroth=None):
    """Numerically solved ``(rho^(-1), rho^(+1))`` as :class:`DensityComponent` objects."""
    zeroth = zeroth_order(params) if zeroth is None else zeroth
    rho0 = zeroth.rho0.matrix
    minus = _sideband_solve(params, omega_pc, -1, rho0)
    plus = _sideband_solve(params, omega_pc, +1, rho0)
    return DensityComponent(-1, minus), DensityComponent(1, plus)


def response_numeric(params: SystemParams, omega_pc: float, zeroth=None) -> tuple[complex, complex]:
    """Brute-force first-order coherences from the sideband equations."""
    zeroth = zeroth_order(params) if zeroth is None else zeroth
    x = _sideband_solve(params, omega_pc, -1, zeroth.rho0.matrix)
    return complex(x[2, 0]), complex(x[3, 1])


def rho_pi_values(params: SystemParams, delta, Delta=None, rho0=None):
    """rho_pi on arrays of probe detuning (and optionally control detuning).

    Returns ``(rho_pi, pole_mask)`` broadcast over ``delta`` and ``Delta``.
    """
    delta = np.asarray(delta, dtype=float)
    Delta = np.asarray(params.Delta if Delta is None else Delta, dtype=float)
    if rho0 is None:
        rho0 = steady_state_batch(params, Delta)
    terms, pole = _general_terms(params, delta - Delta, rho0, Delta)
    A1, B1, C1, A2, B2, C2 = terms
    value = (A1 + B1 + C1) + (A2 + B2 + C2)
    value = np.where(pole, complex(np.nan, np.nan), value)
    return value, np.broadcast_to(pole, value.shape)


def susceptibility(params: SystemParams, delta_grid) -> ResponseSpectrum:
    """chi_pi = 3 N c^3 / (2 omega_p^3) * rho_pi on a probe-detuning grid."""
    delta = np.asarray(delta_grid, dtype=float)
    if delta.ndim != 1 or delta.size == 0:
        raise ValidationError("delta grid must be a non-empty 1-D sequence")
    if delta.size > 1 and np.any(np.diff(delta) <= 0):
        raise ValidationError("delta grid must be strictly increasing")
    rho_pi, pole = rho_pi_values(params, delta)
    chi = chi_prefactor(params) * rho_pi
    return ResponseSpectrum(delta, rho_pi, chi, np.array(pole), params, {"poles": int(pole.sum())})
