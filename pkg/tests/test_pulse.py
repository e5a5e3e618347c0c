import warnings

import numpy as np
import pytest
from scipy.constants import c

from nvapor.core import PoleError, ValidationError, build_params
from nvapor.observables import group_index
from nvapor.pulse import BandwidthWarning, PulseSpec, delay_to_group_index, peak_time, propagate

BASE = build_params({})


def test_spec_validation():
    for kw in ({"sigma": 0}, {"L": -1}, {"n_samples": 3000}, {"n_samples": 2048}):
        with pytest.raises(ValidationError):
            PulseSpec(**kw)


def test_empty_medium_is_vacuum():
    trace = propagate(build_params({"N_density": 0}))
    assert np.array_equal(trace.envelope_medium, trace.envelope_vacuum)
    assert trace.delay == 0


def test_vacuum_envelope_is_input_gaussian():
    spec = PulseSpec()
    trace = propagate(build_params({"N_density": 0}), spec)
    dt = trace.tau[1] - trace.tau[0]
    assert abs(trace.tau[np.argmax(trace.envelope_vacuum)]) <= dt
    expected = np.exp(-(spec.sigma * trace.tau) ** 2 / 4)
    # away from the edges, where periodic images of the FFT add ~exp(-16)
    centre = np.abs(spec.sigma * trace.tau) < 4
    assert np.max(np.abs(trace.envelope_vacuum - expected)[centre]) < 1e-12
    assert np.all(trace.envelope_medium >= 0)


def test_unit_drive_delay():
    trace = propagate(BASE.with_drive(1.0))
    assert trace.delay == pytest.approx(30e-6, rel=0.15)
    assert trace.notes == []


def test_vanishing_delay_at_vacuum_point():
    d1 = propagate(BASE.with_drive(1.0)).delay
    assert abs(propagate(BASE.with_drive(1.5)).delay) < 0.02 * d1


def test_advancement_in_gain_doublet():
    assert propagate(BASE.with_drive(2.0)).delay == pytest.approx(-4.71e-6, rel=0.15)


@pytest.mark.parametrize("G", [1.0, 2.0])
def test_delay_agrees_with_group_index(G):
    p = BASE.with_drive(G)
    ng = delay_to_group_index(propagate(p).delay, 0.01)
    assert ng == pytest.approx(group_index(p).n_g, rel=0.1)


def test_long_delay_widens_window():
    p = BASE.with_drive(0.5)
    trace = propagate(p)
    assert trace.notes and len(trace.tau) > PulseSpec().n_samples
    assert delay_to_group_index(trace.delay, 0.01) == pytest.approx(group_index(p).n_g, rel=0.01)


def test_energy_sign_consistency():
    absorbing = propagate(BASE.with_drive(1.0))
    amplifying = propagate(BASE.with_drive(2.0))
    assert absorbing.energy_ratio <= 1
    assert amplifying.energy_ratio >= 1


def test_bandwidth_warning():
    with pytest.warns(BandwidthWarning):
        trace = propagate(BASE.with_drive(0.05), PulseSpec(sigma=2 * np.pi * 50e3))
    assert any("bandwidth" in note for note in trace.notes)


def test_no_warning_inside_window():
    with warnings.catch_warnings():
        warnings.simplefilter("error", BandwidthWarning)
        propagate(BASE.with_drive(1.0))


def test_pole_inside_band_is_fatal():
    p = build_params({"gamma1": 0, "gamma2": 0, "G1": 0, "G2": 0})
    with pytest.raises(PoleError, match="Omega"):
        propagate(p, PulseSpec(sigma=1e3))


def test_delay_to_group_index():
    assert delay_to_group_index(0.0, 0.01) == 1
    assert delay_to_group_index(-4.71e-6, 0.01) == pytest.approx(-1.4e5, rel=0.02)
    assert delay_to_group_index(30e-6, 0.01) == pytest.approx(9.0e5, rel=0.01)
    assert delay_to_group_index(1e-6, 1.0) == 1 + c * 1e-6
    with pytest.raises(ValidationError):
        delay_to_group_index(1e-6, 0)


def test_peak_time_interpolates():
    t = np.linspace(-1, 1, 201)
    assert peak_time(t, np.exp(-((t - 0.0123) ** 2) / 0.02)) == pytest.approx(0.0123, abs=2e-4)
