import math

import numpy as np
import pytest
from scipy.constants import c
from scipy.interpolate import CubicSpline

from nvapor.core import PoleError, build_params, chi_prefactor
from nvapor.linear_response import susceptibility
from nvapor.observables import (
    GroupIndexPoint,
    decompose_contributions,
    dressed_states,
    find_crossings,
    group_index,
    group_index_from,
    sweep_contour,
    sweep_G,
    sweep_G1,
)

BASE = build_params({})


def test_vacuum_group_index_is_one():
    pt = group_index(build_params({"N_density": 0}))
    assert pt.n_g == 1 and pt.v_g == c


@pytest.mark.parametrize("G, expected, tol", [(1.0, 9.8e5, 0.05), (2.4, -1.5e5, 0.05), (0.1, 3.2e8, 0.05)])
def test_quoted_group_indices(G, expected, tol):
    assert group_index(BASE.with_drive(G)).n_g == pytest.approx(expected, rel=tol)


def test_point_assembly_and_velocity():
    pt = group_index(BASE.with_drive(1.0))
    assembled = 1 + 2 * math.pi * pt.re_chi + 2 * math.pi * pt.omega_p * pt.d_re_chi_d_omega
    assert pt.n_g == pytest.approx(assembled, rel=1e-12)
    assert pt.v_g * pt.n_g == pytest.approx(c, rel=1e-14)
    assert abs(pt.re_chi) < 1e-12
    assert pt.fd_mismatch < 1e-6


def test_point_rejects_inconsistent_terms():
    with pytest.raises(ValueError):
        GroupIndexPoint(1, 1, 0, 5.0, c / 5, 0.0, 0.0, 0.0, 1e15)


def test_negative_group_velocity_reported():
    pt = group_index(BASE.with_drive(2.0))
    assert pt.n_g < 0 and pt.v_g < 0


@pytest.mark.parametrize("G", [0.1, 1.0, 2.0, 2.4])
def test_derivative_matches_dense_spline(G):
    p = BASE.with_drive(G)
    pt = group_index(p)
    grid = np.linspace(-2e-3, 2e-3, 81)
    spline = CubicSpline(grid, susceptibility(p, grid).dispersion)
    d = spline(0.0, 1) / p.gamma_SI
    assert pt.d_re_chi_d_omega == pytest.approx(d, rel=1e-3)


def test_pole_in_stencil_raises_with_advice():
    def chi_at(delta):
        pole = np.abs(delta) < 1.5e-4
        return np.where(pole, np.nan, delta).astype(complex), pole

    with pytest.raises(PoleError, match="shifted"):
        group_index_from(chi_at, BASE)


def test_sweep_sign_structure_and_crossing():
    res = sweep_G(BASE, np.linspace(0.2, 3.0, 15))
    assert len(res.crossings) == 1 and 1.4 <= res.crossings[0] <= 1.6
    ng = res.n_g
    assert np.all(ng[res.grid < 1.4] > 1) and np.all(ng[res.grid > 1.6] < 1)


def test_large_drive_tends_to_vacuum():
    res = sweep_G(BASE, [10.0, 20.0, 40.0])
    dev = np.abs(res.n_g - 1)
    assert np.all(np.diff(dev) < 0)
    assert np.all(res.n_g < 1)


def test_sweep_order_independent_of_mapper():
    grid = [0.5, 1.0, 1.5]
    a = sweep_G(BASE, grid)
    b = sweep_G(BASE, grid, mapper=lambda f, xs: list(reversed([f(x) for x in reversed(list(xs))])))
    assert np.array_equal(a.n_g, b.n_g)


def test_valley_of_anomaly():
    res = sweep_G1(BASE, np.linspace(0.1, 6, 60), 1.5)
    assert len(res.crossings) == 2
    assert res.crossings[0] == pytest.approx(1.5, abs=0.05)
    assert res.crossings[1] == pytest.approx(2.6, abs=0.05)
    assert res.valley == tuple(res.crossings)
    assert group_index(BASE.with_drive(2.0, 1.5)).n_g < 1


def test_vacuum_points_are_transparent():
    for G1 in sweep_G1(BASE, np.linspace(0.1, 6, 60), 1.5).crossings:
        spec = susceptibility(BASE.with_drive(G1, 1.5), [0.0])
        assert abs(spec.absorption[0]) < 1e-15


def test_no_valley_for_weak_second_component():
    res = sweep_G1(BASE, np.linspace(0.1, 6, 60), 1.0)
    assert res.crossings == [] and res.valley is None
    assert np.all(res.n_g > 1)


def test_contour_symmetry_and_degenerate_corner():
    grid = [0.0, 1.0, 2.0, 2.25, 3.0]
    res = sweep_contour(BASE, grid, grid)
    assert res.flags[0, 0] and np.isnan(res.n_g[0, 0])
    ok = ~res.flags
    assert np.allclose(res.n_g[ok], res.n_g.T[ok], rtol=1e-8, atol=0)
    assert res.argmin == (2.25, 2.25)


def test_find_crossings_bisects_sign_changes():
    f = lambda x: x**2 - 2
    grid = np.linspace(-3, 3, 7)
    roots = find_crossings(grid, f(grid), f)
    assert roots == pytest.approx([-math.sqrt(2), math.sqrt(2)], abs=1e-4)


@pytest.mark.parametrize("G", [0.5, 1.0, 3.0, 1 + 1j])
def test_dressed_states(G):
    ds = dressed_states(G)
    assert np.allclose(ds.energies_14, [abs(G), -abs(G)], rtol=0, atol=1e-15)
    assert np.allclose(ds.energies_23, [abs(G), -abs(G)], rtol=0, atol=1e-15)
    assert abs(ds.amplitude_sum) < 1e-14
    if np.isreal(G):
        s = 1 / math.sqrt(2)
        assert np.allclose(ds.states_14[[0, 3]], [[s, s], [s, -s]])
        assert np.allclose(ds.states_23[[1, 2]], [[s, s], [s, -s]])


def test_dressed_states_undriven():
    ds = dressed_states(0.0)
    assert np.array_equal(ds.energies_14, [0.0, 0.0])
    assert abs(ds.amplitude_sum) < 1e-14


def test_amplitude_sum_measures_forbidden_transition():
    mu = np.zeros((4, 4), dtype=complex)
    mu[1, 0] = mu[0, 1] = 0.3
    assert dressed_states(1.0, mu).amplitude_sum == pytest.approx(0.6)


def test_decomposition_table():
    grid = np.linspace(-3, 3, 61)
    br = decompose_contributions(BASE.with_drive(1.5), grid)
    assert br.A1.shape == grid.shape
    centre = np.argmin(np.abs(grid))
    assert abs((br.A1 + br.B1 + br.C1)[centre].imag) < 1e-15
    assert np.allclose(br.rho_pi * chi_prefactor(BASE), susceptibility(BASE.with_drive(1.5), grid).chi)
