"""Probe-free steady state of the four-level system.

Levels are indexed 1..4 in the physics and 0..3 in arrays: |1>, |2> ground,
|3>, |4> excited.  The control couples 1-4 (``G1``) and 2-3 (``G2``); the
probe couples 1-3 and 2-4.  Density matrices are vectorised row-major, so
``rho[i, j]`` sits at ``4*i + j``.

The rotating-frame Hamiltonian is::

    H = Delta (|3><3| + |4><4|) - (G1 |4><1| + G2 |3><2| + h.c.)

which gives, for example, d/dt rho_41 = -(i Delta + Gamma1) rho_41
+ i G1 (rho_11 - rho_44) + ...
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DensityComponent, NumericalDegeneracyError, SystemParams, ValidationError

__all__ = [
    "ZerothOrder",
    "zeroth_order_analytic",
    "zeroth_order_numeric",
    "zeroth_order",
    "hamiltonian",
    "liouvillian",
    "steady_state_batch",
    "COND_LIMIT",
]

COND_LIMIT = 1e12
_TRACE_ROW = 0  # the d/dt rho_11 row is swapped for sum(rho_ii) = 1
_TRACE_IDX = np.array([0, 5, 10, 15])

# (excited, ground, which rate) for the four spontaneous channels
_DECAY_CHANNELS = ((2, 0, "gamma1"), (3, 1, "gamma1"), (3, 0, "gamma2"), (2, 1, "gamma2"))


@dataclass(frozen=True)
class ZerothOrder:
    """Steady state with the probe off.

    ``x`` is the optical pumping rate of the 1-4 transition,
    2|G1|^2 Gamma1 / (Delta^2 + Gamma1^2) (equal to that of 2-3 when the drive
    components are equal), and ``rho_pd`` is rho_11 - rho_33.
    """

    rho0: DensityComponent
    x: float
    rho_pd: float

    def __getitem__(self, idx):
        return self.rho0[idx]


def _pump_rate(G: complex, params: SystemParams, Delta: float) -> float:
    if G == 0:
        return 0.0
    return 2 * abs(G) ** 2 * params.Gamma1 / (Delta**2 + params.Gamma1**2)


def hamiltonian(params: SystemParams, Delta: float | None = None) -> np.ndarray:
    """Rotating-frame control Hamiltonian (units of gamma, hbar = 1)."""
    Delta = params.Delta if Delta is None else Delta
    H = np.zeros((4, 4), dtype=complex)
    H[2, 2] = H[3, 3] = Delta
    H[3, 0] = -params.G1
    H[0, 3] = -np.conj(params.G1)
    H[2, 1] = -params.G2
    H[1, 2] = -np.conj(params.G2)
    return H


def _commutator_super(H: np.ndarray) -> np.ndarray:
    eye = np.eye(4)
    return -1j * (np.kron(H, eye) - np.kron(eye, H.T))


def _dissipator(params: SystemParams) -> np.ndarray:
    D = np.zeros((16, 16), dtype=complex)
    for e, gnd, name in _DECAY_CHANNELS:
        rate = getattr(params, name)
        D[5 * gnd, 5 * e] += rate
        D[5 * e, 5 * e] -= rate
    for i in range(4):
        for j in range(4):
            if i == j:
                continue
            pair = {i, j}
            if pair == {0, 1}:
                rate = params.Gamma2
            elif pair == {2, 3}:
                rate = params.Gamma3
            else:
                rate = params.Gamma1
            D[4 * i + j, 4 * i + j] -= rate
    return D


def liouvillian(params: SystemParams, Delta: float | None = None) -> np.ndarray:
    """16x16 generator of the probe-free master equation."""
    return _commutator_super(hamiltonian(params, Delta)) + _dissipator(params)


def _liouvillian_stack(params: SystemParams, Deltas: np.ndarray) -> np.ndarray:
    # L is affine in Delta: L(Delta) = L(0) + Delta * dL
    L0 = liouvillian(params, 0.0)
    dL = liouvillian(params, 1.0) - L0
    return L0[None] + np.asarray(Deltas, dtype=float)[:, None, None] * dL[None]


def _with_trace_row(A: np.ndarray) -> np.ndarray:
    A = A.copy()
    A[..., _TRACE_ROW, :] = 0
    A[..., _TRACE_ROW, _TRACE_IDX] = 1
    return A


def _undriven_state() -> np.ndarray:
    return np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)


def _analytic_matrices(params: SystemParams, Deltas: np.ndarray) -> np.ndarray:
    Deltas = np.asarray(Deltas, dtype=float)
    G = params.G1
    if G == 0:
        return np.broadcast_to(_undriven_state(), Deltas.shape + (4, 4)).copy()
    g12 = params.gamma1 + params.gamma2
    x = 2 * abs(G) ** 2 * params.Gamma1 / (Deltas**2 + params.Gamma1**2)
    ground = (g12 + x) / (2 * (g12 + 2 * x))
    excited = x / (2 * (g12 + 2 * x))
    rho_pd = g12 / (2 * (g12 + 2 * x))
    coh = -1j * np.conj(G) / (-1j * Deltas + params.Gamma1) * rho_pd

    rho = np.zeros(Deltas.shape + (4, 4), dtype=complex)
    rho[..., 0, 0] = rho[..., 1, 1] = ground
    rho[..., 2, 2] = rho[..., 3, 3] = excited
    rho[..., 0, 3] = rho[..., 1, 2] = coh
    rho[..., 3, 0] = rho[..., 2, 1] = np.conj(coh)
    return rho


def zeroth_order_analytic(params: SystemParams) -> ZerothOrder:
    """Closed-form steady state for equal drive components."""
    if not params.equal_drive:
        raise ValidationError("analytic path requires equal components; use numeric solver")
    rho = _analytic_matrices(params, np.array(params.Delta))
    x = _pump_rate(params.G1, params, params.Delta)
    return ZerothOrder(DensityComponent(0, rho), x, float((rho[0, 0] - rho[2, 2]).real))


def _solve_numeric(A: np.ndarray) -> np.ndarray:
    A = _with_trace_row(A)
    cond = np.linalg.cond(A)
    worst = float(np.max(cond))
    if not np.isfinite(worst) or worst > COND_LIMIT:
        raise NumericalDegeneracyError(
            f"steady-state system is singular or ill-conditioned (cond ~ {worst:.3e})", worst
        )
    b = np.zeros(A.shape[:-1], dtype=complex)
    b[..., _TRACE_ROW] = 1.0
    return np.linalg.solve(A, b[..., None])[..., 0].reshape(A.shape[:-2] + (4, 4))


def zeroth_order_numeric(params: SystemParams) -> ZerothOrder:
    """Steady state from the full 16-unknown linear system.

    One population equation is replaced by the trace condition.  With both
    drive components exactly zero the ground manifold is left in its
    unpolarised state (the zero-drive limit of the analytic result).
    """
    if params.G1 == 0 and params.G2 == 0:
        rho = _undriven_state()
    else:
        rho = _solve_numeric(liouvillian(params))
    return ZerothOrder(
        DensityComponent(0, rho),
        _pump_rate(params.G1, params, params.Delta),
        float((rho[0, 0] - rho[2, 2]).real),
    )


def zeroth_order(params: SystemParams) -> ZerothOrder:
    """Analytic state when the drive components are equal, numeric otherwise."""
    if params.equal_drive:
        return zeroth_order_analytic(params)
    return zeroth_order_numeric(params)


def steady_state_batch(params: SystemParams, Deltas) -> np.ndarray:
    """Steady-state matrices for many control detunings, shape ``Deltas.shape + (4, 4)``."""
    Deltas = np.asarray(Deltas, dtype=float)
    if params.equal_drive:
        return _analytic_matrices(params, Deltas)
    if params.G1 == 0 and params.G2 == 0:
        return np.broadcast_to(_undriven_state(), Deltas.shape + (4, 4)).copy()
    flat = Deltas.reshape(-1)
    rho = _solve_numeric(_liouvillian_stack(params, flat))
    return rho.reshape(Deltas.shape + (4, 4))
