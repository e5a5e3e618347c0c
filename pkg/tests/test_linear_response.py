import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from nvapor.core import PoleError, ValidationError, build_params, chi_prefactor
from nvapor.linear_response import (
    CoherenceBreakdown,
    response_equal_G,
    response_general,
    response_numeric,
    sideband_components,
    susceptibility,
)

drive = st.one_of(st.just(0.0), st.floats(1e-3, 5))
detuning = st.floats(-5, 5)
omega = st.floats(-10, 10)


def rel(a, b, floor=1e-6):
    # relative error, floored so that exact zeros compare at a round-off level
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), floor))


def regular(G1, G2, w):
    # undriven with undamped ground coherence: genuine pole at omega_pc = 0
    return bool(G1 or G2 or abs(w) > 1e-3)


@pytest.mark.parametrize(
    "G, w, expected",
    [
        (0.5, 1.0, -0.04895104895104895 + 0.2097902097902098j),
        (2.0, 2.0, 0.01014634146341463 - 0.017365853658536583j),
        (2.0, -2.0, -0.01014634146341463 - 0.017365853658536583j),
    ],
)
def test_equal_drive_fixtures(G, w, expected):
    p = build_params({"G1": G, "G2": G})
    a, b = response_equal_G(p, w)
    assert a == b
    assert a == pytest.approx(expected, rel=1e-12)
    assert response_numeric(p, w)[0] == pytest.approx(expected, rel=1e-12)


def test_unequal_detuned_fixture():
    p = build_params({"G1": 2, "G2": 1, "Delta": 0.7})
    br = response_general(p, 1.3)
    assert br.rho31 == pytest.approx(0.02421949989519326 - 0.039091064592697095j, rel=1e-12)
    assert br.rho42 == pytest.approx(0.07987078817869223 + 0.03351556028782915j, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(drive, drive, detuning, omega)
def test_general_closed_form_matches_sideband_solve(G1, G2, Delta, w):
    assume(regular(G1, G2, w))
    p = build_params({"G1": G1, "G2": G2, "Delta": Delta})
    br = response_general(p, w)
    assert rel((br.rho31, br.rho42), response_numeric(p, w)) < 1e-10


@settings(max_examples=100, deadline=None)
@given(drive, detuning, omega)
def test_equal_drive_formula_matches_general(G, Delta, w):
    assume(regular(G, G, w))
    p = build_params({"G1": G, "G2": G, "Delta": Delta})
    eq = response_equal_G(p, w)
    br = response_general(p, w)
    assert rel(eq, (br.rho31, br.rho42), floor=1e-4) < 1e-12
    assert rel(eq, response_numeric(p, w)) < 1e-10


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.05, 5), st.floats(0, 2 * np.pi), st.floats(0.05, 5), st.floats(0, 2 * np.pi), detuning, omega
)
def test_complex_phases_propagate(a1, phi1, a2, phi2, Delta, w):
    p = build_params({"G1": a1 * np.exp(1j * phi1), "G2": a2 * np.exp(1j * phi2), "Delta": Delta})
    br = response_general(p, w)
    assert rel((br.rho31, br.rho42), response_numeric(p, w)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(drive, drive, detuning, omega)
def test_swap_invariance(G1, G2, Delta, w):
    assume(regular(G1, G2, w))
    a = response_general(build_params({"G1": G1, "G2": G2, "Delta": Delta}), w)
    b = response_general(build_params({"G1": G2, "G2": G1, "Delta": Delta}), w)
    assert a.rho_pi == pytest.approx(b.rho_pi, rel=1e-10, abs=1e-14)
    assert a.rho31 == pytest.approx(b.rho42, rel=1e-10, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(drive, drive, detuning)
def test_transparent_at_two_photon_resonance(G1, G2, Delta):
    assume(G1 or G2)
    br = response_general(build_params({"G1": G1, "G2": G2, "Delta": Delta}), 0.0)
    assert abs(br.rho_pi.imag) < 1e-12


@settings(max_examples=30, deadline=None)
@given(drive, drive, detuning, omega)
def test_sidebands_are_conjugate_transposes(G1, G2, Delta, w):
    assume(regular(G1, G2, w))
    minus, plus = sideband_components(build_params({"G1": G1, "G2": G2, "Delta": Delta}), w)
    assert np.max(np.abs(plus.matrix - minus.matrix.conj().T)) < 1e-10 * max(1, np.max(np.abs(minus.matrix)))
    assert abs(minus.trace) < 1e-12


def test_resonant_response_vanishes_exactly():
    p = build_params({"G1": 1.3, "G2": 1.3})
    assert response_equal_G(p, 0.0) == (0, 0)
    assert all(abs(v) < 1e-14 for v in response_numeric(p, 0.0))


@pytest.mark.parametrize("G", [0.1, 0.5, 1.0, 1.5, 2.4, 5.0])
def test_no_C1_at_two_photon_resonance(G):
    br = response_general(build_params({"G1": G, "G2": G}), 0.0)
    assert br.C1 == 0


def test_coherence_terms_outweigh_population_term_near_sidebands():
    br = response_general(build_params({"G1": 1.5, "G2": 1.5}), np.array([-1.5, 1.5]))
    coh = br.B1.imag + br.C1.imag
    assert np.all(coh < 0)
    assert np.all(np.abs(coh) > br.A1.imag)


def test_A1_B1_cancel_at_two_photon_resonance():
    for Delta in (0.0, 1.2):
        br = response_general(build_params({"G1": 1.5, "G2": 1.5, "Delta": Delta}), 0.0)
        assert br.A1.imag == pytest.approx(-br.B1.imag, abs=1e-14)


def test_breakdown_checks_sums():
    with pytest.raises(ValueError):
        CoherenceBreakdown(1, 1, 1, 0, 0, 0, 2.0, 0, 2.0)


def test_equal_formula_rejects_unequal_drive():
    with pytest.raises(ValidationError):
        response_equal_G(build_params({"G1": 2, "G2": 1}), 0.5)


def test_pole_reported_with_frequency():
    p = build_params({"gamma1": 0, "gamma2": 0, "G1": 0, "G2": 0})
    with pytest.raises(PoleError) as err:
        response_general(p, 0.0)
    assert err.value.omega_pc == 0.0
    with pytest.raises(PoleError):
        response_numeric(p, 0.0)


def test_array_pole_flags_instead_of_raising():
    p = build_params({"gamma1": 0, "gamma2": 0, "G1": 0, "G2": 0})
    br = response_general(p, np.array([0.0, 1.0]))
    assert np.isnan(br.rho_pi[0]) and np.isfinite(br.rho_pi[1])


def test_weak_drive_absorbs_everywhere():
    spec = susceptibility(build_params({"G1": 0.5, "G2": 0.5}), np.linspace(-6, 6, 1201))
    assert np.all(spec.rho_pi.imag >= -1e-15)


def test_strong_drive_gain_doublet():
    spec = susceptibility(build_params({"G1": 2, "G2": 2}), np.array([-2.0, 2.0]))
    assert np.all(spec.absorption < 0)


def test_empty_medium():
    spec = susceptibility(build_params({"N_density": 0}), np.linspace(-3, 3, 61))
    assert np.all(spec.chi == 0)


def test_symmetric_grid_parity():
    spec = susceptibility(build_params({"G1": 0.8, "G2": 0.8}), np.linspace(-6, 6, 241))
    assert np.allclose(spec.dispersion, -spec.dispersion[::-1], rtol=0, atol=1e-15)
    assert np.allclose(spec.absorption, spec.absorption[::-1], rtol=0, atol=1e-15)


def test_flat_dispersion_at_vacuum_point():
    h = 1e-4
    grid = np.array([-h, h])
    slope = lambda G: np.diff(susceptibility(build_params({"G1": G, "G2": G}), grid).dispersion)[0] / (2 * h)
    assert abs(slope(1.5)) < 1e-6 * abs(slope(1.0))


def test_chi_is_prefactor_times_rho():
    p = build_params({"G1": 1.1, "G2": 0.6})
    spec = susceptibility(p, np.linspace(-1, 1, 5))
    assert np.allclose(spec.chi, chi_prefactor(p) * spec.rho_pi, rtol=1e-15)


def test_grid_must_increase():
    with pytest.raises(ValidationError):
        susceptibility(build_params({}), [0.0, -1.0])
