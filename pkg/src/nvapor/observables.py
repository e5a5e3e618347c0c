"""Group index, control-field sweeps and dressed-state analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.constants import c
from scipy.optimize import bisect

from .core import PoleError, SystemParams, ValidationError, chi_prefactor
from .linear_response import CoherenceBreakdown, response_general, rho_pi_values
from .steady_state import zeroth_order

__all__ = [
    "GroupIndexPoint",
    "SweepResult",
    "ContourResult",
    "DressedStates",
    "group_index",
    "group_index_from",
    "sweep_G",
    "sweep_G1",
    "sweep_contour",
    "find_crossings",
    "dressed_states",
    "decompose_contributions",
    "DEFAULT_STEP",
]

DEFAULT_STEP = 1e-4  # gamma
CROSSING_TOL = 1e-4  # gamma
FD_WARN = 1e-3


@dataclass(frozen=True)
class GroupIndexPoint:
    """Group index at one control setting.

    ``d_re_chi_d_omega`` is in s/rad; ``fd_mismatch`` is the relative
    difference between the 3- and 5-point derivative estimates.  Points where
    the response could not be evaluated carry NaN and a ``flag``.
    """

    G1: complex
    G2: complex
    Delta: float
    n_g: float
    v_g: float
    re_chi: float
    d_re_chi_d_omega: float
    delta: float = 0.0
    omega_p: float = float("nan")
    fd_mismatch: float = 0.0
    flag: str | None = None

    def __post_init__(self):
        if self.flag is not None:
            return
        assembled = 1 + 2 * math.pi * self.re_chi + 2 * math.pi * self.omega_p * self.d_re_chi_d_omega
        terms = 1 + abs(2 * math.pi * self.re_chi) + abs(2 * math.pi * self.omega_p * self.d_re_chi_d_omega)
        if abs(assembled - self.n_g) > 1e-12 * terms:
            raise ValueError("n_g is inconsistent with its Re chi terms")

    @property
    def ok(self) -> bool:
        return self.flag is None

    @classmethod
    def flagged(cls, params: SystemParams, reason: str) -> GroupIndexPoint:
        nan = float("nan")
        return cls(params.G1, params.G2, params.Delta, nan, nan, nan, nan, params.delta, params.omega_p, nan, reason)


def group_index_from(
    chi_at: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    params: SystemParams,
    h: float = DEFAULT_STEP,
    delta0: float | None = None,
) -> GroupIndexPoint:
    """Group index from any susceptibility callable ``chi_at(delta) -> (chi, pole)``.

    The derivative is a central difference of step ``h`` (in gamma); a
    5-point stencil is evaluated alongside as a check.
    """
    delta0 = params.delta if delta0 is None else delta0
    offsets = np.array([-2, -1, 0, 1, 2]) * h
    chi, pole = chi_at(delta0 + offsets)
    if np.any(pole) or not np.all(np.isfinite(chi)):
        bad = float((delta0 + offsets)[np.argmax(np.asarray(pole) | ~np.isfinite(chi))])
        raise PoleError(
            f"response pole within the derivative stencil near delta = {bad:g} gamma; "
            "evaluate at a shifted detuning",
            bad - params.Delta,
        )
    f = chi.real
    d3 = (f[3] - f[1]) / (2 * h)
    d5 = (-f[4] + 8 * f[3] - 8 * f[1] + f[0]) / (12 * h)
    mismatch = abs(d3 - d5) / abs(d5) if d5 != 0 else abs(d3 - d5)
    d_omega = d3 / params.gamma_SI
    re_chi = float(f[2])
    n_g = 1 + 2 * math.pi * re_chi + 2 * math.pi * params.omega_p * d_omega
    v_g = c / n_g if n_g != 0 else math.inf
    return GroupIndexPoint(
        params.G1, params.G2, params.Delta, n_g, v_g, re_chi, d_omega, delta0, params.omega_p, mismatch
    )


def _chi_callable(params: SystemParams):
    zeroth = zeroth_order(params)
    pref = chi_prefactor(params)

    def chi_at(delta):
        rho, pole = rho_pi_values(params, delta, rho0=zeroth.rho0.matrix)
        return pref * rho, pole

    return chi_at


def group_index(params: SystemParams, h: float = DEFAULT_STEP, delta0: float | None = None) -> GroupIndexPoint:
    """Group index n_g = 1 + 2 pi Re chi + 2 pi omega_p d(Re chi)/d(omega_p) at ``params.delta``."""
    return group_index_from(_chi_callable(params), params, h, delta0)


def _safe_point(params: SystemParams, h: float) -> GroupIndexPoint:
    try:
        return group_index(params, h)
    except (PoleError, np.linalg.LinAlgError) as exc:
        return GroupIndexPoint.flagged(params, str(exc))


def _point_equal(params: SystemParams, h: float, G: float) -> GroupIndexPoint:
    return _safe_point(params.with_drive(G), h)


def _point_g1(params: SystemParams, h: float, G2: complex, G1: float) -> GroupIndexPoint:
    return _safe_point(params.with_drive(G1, G2), h)


def _point_pair(params: SystemParams, h: float, pair: tuple[float, float]) -> GroupIndexPoint:
    return _safe_point(params.with_drive(*pair), h)


def find_crossings(
    grid: Sequence[float], values: Sequence[float], f: Callable[[float], float], tol: float = CROSSING_TOL
) -> list[float]:
    """Roots of ``f`` (= n_g - 1) bracketed by sign changes of sampled ``values``."""
    grid = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    roots = []
    for i in range(len(grid) - 1):
        a, b = v[i], v[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0:
            roots.append(float(grid[i]))
        elif a * b < 0:
            roots.append(float(bisect(f, grid[i], grid[i + 1], xtol=tol)))
    if len(v) and v[-1] == 0:
        roots.append(float(grid[-1]))
    return roots


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("grid must be a non-empty 1-D sequence")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly increasing")
    return grid


@dataclass(frozen=True)
class SweepResult:
    """Ordered group-index samples plus the located n_g = 1 crossings."""

    grid: np.ndarray
    points: list[GroupIndexPoint]
    crossings: list[float] = field(default_factory=list)
    valley: tuple[float, float] | None = None

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def n_g(self) -> np.ndarray:
        return np.array([p.n_g for p in self.points])

    @property
    def flagged(self) -> list[int]:
        return [i for i, p in enumerate(self.points) if not p.ok]


def _n_g_minus_one(point_fn) -> Callable[[float], float]:
    def f(x: float) -> float:
        return point_fn(x).n_g - 1.0

    return f


def sweep_G(params: SystemParams, G_grid: Iterable[float], mapper=map, h: float = DEFAULT_STEP) -> SweepResult:
    """n_g versus the common drive amplitude G = G1 = G2.

    ``mapper`` lets the caller supply a parallel ``map`` (e.g. an executor's);
    results are always returned in grid order.
    """
    grid = _check_grid(list(G_grid))
    fn = partial(_point_equal, params, h)
    points = list(mapper(fn, grid))
    crossings = find_crossings(grid, [p.n_g - 1 for p in points], _n_g_minus_one(fn))
    return SweepResult(grid, points, crossings)


def sweep_G1(
    params: SystemParams, G1_grid: Iterable[float], G2: float, mapper=map, h: float = DEFAULT_STEP
) -> SweepResult:
    """n_g versus G1 at fixed G2; a pair of crossings bounds the valley of anomaly."""
    grid = _check_grid(list(G1_grid))
    fn = partial(_point_g1, params, h, G2)
    points = list(mapper(fn, grid))
    values = [p.n_g - 1 for p in points]
    crossings = find_crossings(grid, values, _n_g_minus_one(fn))
    valley = None
    if len(crossings) >= 2:
        mid = 0.5 * (crossings[0] + crossings[1])
        if fn(mid).n_g < 1:
            valley = (crossings[0], crossings[1])
    return SweepResult(grid, points, crossings, valley)


@dataclass(frozen=True)
class ContourResult:
    """``n_g[i, j]`` is the group index at ``G1_grid[i]``, ``G2_grid[j]``."""

    G1_grid: np.ndarray
    G2_grid: np.ndarray
    n_g: np.ndarray
    flags: np.ndarray
    argmin: tuple[float, float]
    minimum: float


def sweep_contour(
    params: SystemParams, G1_grid: Iterable[float], G2_grid: Iterable[float], mapper=map, h: float = DEFAULT_STEP
) -> ContourResult:
    g1 = _check_grid(list(G1_grid))
    g2 = _check_grid(list(G2_grid))
    pairs = [(a, b) for a in g1 for b in g2]
    points = list(mapper(partial(_point_pair, params, h), pairs))
    n_g = np.array([p.n_g for p in points]).reshape(len(g1), len(g2))
    flags = np.array([not p.ok for p in points]).reshape(n_g.shape)
    if np.all(flags):
        return ContourResult(g1, g2, n_g, flags, (math.nan, math.nan), math.nan)
    i, j = np.unravel_index(np.nanargmin(n_g), n_g.shape)
    return ContourResult(g1, g2, n_g, flags, (float(g1[i]), float(g2[j])), float(n_g[i, j]))


@dataclass(frozen=True)
class DressedStates:
    """Eigenpairs of the two resonant drive blocks.

    State vectors are given in the full 4-level basis, ordered (+, -).
    """

    energies_14: np.ndarray
    states_14: np.ndarray
    energies_23: np.ndarray
    states_23: np.ndarray
    amplitude_sum: complex


def _dressed_block(G: complex, lower: int, upper: int):
    if G == 0:
        # zero-drive limit of (|g> +- |e>)/sqrt(2)
        vecs = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
        energies = np.zeros(2)
    else:
        block = np.array([[0, G], [np.conj(G), 0]], dtype=complex)
        energies, vecs = np.linalg.eigh(block)
        energies, vecs = energies[::-1], vecs[:, ::-1]
        vecs = vecs * (np.abs(vecs[0]) / vecs[0])  # ground component real positive
    full = np.zeros((4, 2), dtype=complex)
    full[lower], full[upper] = vecs[0], vecs[1]
    return energies, full


def probe_dipole(mu31: complex = 1.0, mu42: complex = 1.0) -> np.ndarray:
    """Dipole operator of the pi-polarised probe transitions; mu_21 = mu_34 = 0."""
    mu = np.zeros((4, 4), dtype=complex)
    mu[2, 0], mu[3, 1] = mu31, mu42
    return mu + mu.conj().T


def dressed_states(G: complex, dipole: np.ndarray | None = None) -> DressedStates:
    """Dressed states |+-> of the 1-4 and 2-3 blocks and the total probe amplitude.

    The returned ``amplitude_sum`` is sum over alpha, beta of
    <alpha|_23 mu |beta>_14, which reduces to 2 mu_21 and therefore vanishes for
    the dipole-forbidden 1-2 transition.
    """
    mu = probe_dipole() if dipole is None else np.asarray(dipole)
    e14, s14 = _dressed_block(G, 0, 3)
    e23, s23 = _dressed_block(G, 1, 2)
    total = complex(np.sum(s23.conj().T @ mu @ s14))
    return DressedStates(e14, s14, e23, s23, total)


def decompose_contributions(params: SystemParams, delta_grid) -> CoherenceBreakdown:
    """A/B/C terms of rho_31^(-1) and rho_42^(-1) sampled over ``delta_grid``.

    Every field of the returned breakdown is an array aligned with the grid.
    """
    delta = _check_grid(delta_grid)
    return response_general(params, delta - params.Delta)
