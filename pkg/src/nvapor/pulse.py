"""Gaussian probe pulse through a slab of the driven vapour.

The envelope eps(t) = eps0 exp(-sigma^2 t^2 / 4) is propagated spectrally: each
component exp(-i Omega t) picks up exp[i (omega/c) 2 pi chi(omega) L] with
omega = omega_p + Omega, on top of the vacuum phase, which the retarded time
tau = t - L/c removes.  The input spectrum is built analytically and the gain
exponent is added to it in log form, so spectral regions where the input is
zero stay zero even under strong gain.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c

from .core import PoleError, SystemParams, ValidationError, chi_prefactor
from .linear_response import rho_pi_values
from .steady_state import zeroth_order

log = logging.getLogger(__name__)

__all__ = ["PulseSpec", "PulseTrace", "BandwidthWarning", "propagate", "delay_to_group_index", "peak_time"]

# exp(x) underflows to exactly zero for x < _LOG_FLOOR
_LOG_FLOOR = -745.0
_MAX_SAMPLES = 2**22


class BandwidthWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PulseSpec:
    """Input pulse and medium length.

    ``sigma`` is the spectral width in rad/s, ``L`` the medium length in m.
    The time window spans ``+-half_width / sigma`` with ``n_samples`` points.
    """

    sigma: float = 2 * math.pi * 5e3
    eps0: float = 1.0
    L: float = 0.01
    half_width: float = 8.0
    n_samples: int = 2**14

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be > 0, got {self.sigma}")
        if not self.L > 0:
            raise ValidationError(f"L must be > 0, got {self.L}")
        n = self.n_samples
        if n < 2**12 or n & (n - 1):
            raise ValidationError(f"n_samples must be a power of two >= 4096, got {n}")
        if not self.half_width > 0:
            raise ValidationError("half_width must be > 0")


@dataclass(frozen=True)
class PulseTrace:
    """Output envelopes on the retarded-time axis ``tau`` (s).

    ``delay`` is positive for a delayed pulse and negative for an advanced one.
    """

    tau: np.ndarray
    envelope_medium: np.ndarray
    envelope_vacuum: np.ndarray
    delay: float
    peak_ratio: float
    notes: list[str] = field(default_factory=list)

    @property
    def energy_ratio(self) -> float:
        return float(np.sum(self.envelope_medium**2) / np.sum(self.envelope_vacuum**2))


def peak_time(t: np.ndarray, y: np.ndarray) -> float:
    """Peak position refined by a parabola through the maximum sample and its neighbours."""
    i = int(np.argmax(y))
    if i == 0 or i == len(y) - 1:
        return float(t[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    den = y0 - 2 * y1 + y2
    off = 0.5 * (y0 - y2) / den if den != 0 else 0.0
    return float(t[i] + off * (t[1] - t[0]))


def _to_time(spectrum: np.ndarray, f: np.ndarray, t0: float, dt: float) -> np.ndarray:
    # eps(t_n) = 1/(N dt) sum_k eps~(Omega_k) exp(-i Omega_k t_n), Omega_k = -2 pi f_k
    return np.fft.ifft(spectrum * np.exp(2j * np.pi * f * t0)) / dt


def propagate(params: SystemParams, spec: PulseSpec | None = None) -> PulseTrace:
    spec = PulseSpec() if spec is None else spec
    notes: list[str] = []

    drive = (abs(params.G1) ** 2 + abs(params.G2) ** 2) / 2
    window = drive / params.Gamma1 * params.gamma_SI if params.Gamma1 > 0 else math.inf
    if 3 * spec.sigma > window:
        msg = (
            f"pulse bandwidth 3*sigma = {3 * spec.sigma:.3e} rad/s exceeds the transparency/gain "
            f"window ~{window:.3e} rad/s"
        )
        notes.append(msg)
        warnings.warn(msg, BandwidthWarning, stacklevel=2)

    n, half = spec.n_samples, spec.half_width
    while True:
        tau, f, vac_spec, med_spec, group_delay = _spectra(params, spec, n, half)
        # the delayed pulse must clear the window edge by ~6/sigma, else it wraps
        if abs(group_delay) * spec.sigma + 6 <= half or n >= _MAX_SAMPLES:
            break
        n, half = 2 * n, 2 * half
    if half != spec.half_width:
        msg = f"time window widened to +-{half:g}/sigma ({n} samples) to hold a {group_delay:.3e} s delay"
        notes.append(msg)
        log.info(msg)

    dt = tau[1] - tau[0]
    vacuum = np.abs(_to_time(vac_spec, f, tau[0], dt))
    medium = np.abs(_to_time(med_spec, f, tau[0], dt))

    delay = peak_time(tau, medium) - peak_time(tau, vacuum)
    return PulseTrace(tau, medium, vacuum, delay, float(medium.max() / vacuum.max()), notes)


def _spectra(params: SystemParams, spec: PulseSpec, n: int, half: float):
    T = half / spec.sigma
    dt = 2 * T / n
    tau = -T + dt * np.arange(n)
    f = np.fft.fftfreq(n, dt)
    Omega = -2 * np.pi * f

    log_in = math.log(spec.eps0 * 2 * math.sqrt(math.pi) / spec.sigma) - (Omega / spec.sigma) ** 2
    band = log_in > _LOG_FLOOR

    log_out = np.full(n, -np.inf + 0j)
    phase = np.zeros(n)
    if params.N_density > 0:
        zeroth = zeroth_order(params)
        delta = params.delta + Omega[band] / params.gamma_SI
        rho, pole = rho_pi_values(params, delta, rho0=zeroth.rho0.matrix)
        if np.any(pole):
            bad = float(Omega[band][np.argmax(pole)])
            raise PoleError(f"response pole inside the pulse band at Omega = {bad:.6e} rad/s", bad / params.gamma_SI)
        chi = chi_prefactor(params) * rho
        k_excess = (params.omega_p + Omega[band]) / c * 2 * math.pi * chi
        log_out[band] = log_in[band] + 1j * k_excess * spec.L
        phase[band] = (k_excess * spec.L).real
    else:
        log_out[band] = log_in[band]

    # exp(-i Omega t + i phi(Omega)) peaks at t = dphi/dOmega
    group_delay = float((phase[-1] - phase[1]) / (Omega[-1] - Omega[1]))

    vac_spec = np.where(band, np.exp(log_in), 0.0)
    med_spec = np.zeros(n, dtype=complex)
    med_spec[band] = np.exp(log_out[band])
    return tau, f, vac_spec, med_spec, group_delay


def delay_to_group_index(delay: float, L: float) -> float:
    """Group index implied by a pulse delay over length ``L``: 1 + c delay / L."""
    if not L > 0:
        raise ValidationError(f"L must be > 0, got {L}")
    return 1 + c * delay / L
