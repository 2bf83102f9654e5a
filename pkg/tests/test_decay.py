import numpy as np
import pytest
from hypothesis import given, strategies as st

from hokdv.decay import (
    BREAKDOWN_FACTOR, DecayCheckError, InvalidRunError, LinearData, check_linear_decay, check_lp_decay,
    check_nonlinear_decay, elliptic_envelope, envelope, linear_decay_suite, loglog_fit, lp_admissible,
    lp_exponent, peak_envelope,
)
from hokdv.evolution import InvariantLedger, Trajectory, choose_grid, initial_data, run
from hokdv.params import EquationParams
from hokdv.spectral import SpectralField, apply_propagator, make_grid

SHORT = (16.0, 64.0, 256.0)


@given(st.floats(0.5, 1e4), st.sampled_from([5, 7, 9]))
def test_envelope_at_origin(t, n):
    # <0> = 1, so the envelope reduces to t^(-1/n)
    assert envelope(t, 0.0, n) == pytest.approx(t ** (-1 / n), rel=1e-15)
    assert elliptic_envelope(t, 0.0, n) == pytest.approx(t ** (-1 / n), rel=1e-15)


def test_lp_exponent_and_admissibility():
    assert lp_exponent(5, 0.0, 8.0) == pytest.approx(-0.175, abs=1e-15)
    assert lp_admissible(5, 0.0, 8.0)
    assert not lp_admissible(5, 0.0, 2.0)
    with pytest.raises(DecayCheckError):
        check_lp_decay(LinearData.gaussian(), 5, SHORT, 0.0, 2.0)


def test_beta_range():
    with pytest.raises(DecayCheckError):
        check_linear_decay(LinearData.gaussian(), 5, SHORT, betas=(4.0,))


def test_zero_data_vacuous():
    rep = check_linear_decay(LinearData(lambda xi: 0 * xi, 2.0), 5, SHORT)
    assert rep.passed() and rep.flags["zero_data"]
    assert all(np.all(rep.sup_ratio[0.0] == 0) for _ in [0])


def test_loglog_fit_power_law():
    x = np.geomspace(1, 1000, 7)
    f = loglog_fit(x, 3 * x**-0.4)
    assert f.slope == pytest.approx(-0.4, abs=1e-12) and f.span == pytest.approx(3.0)
    assert not f.low_confidence
    assert loglog_fit([1.0, 2.0], [1.0, 1.0]).low_confidence


def test_peak_envelope_of_sampled_cosine():
    x = np.linspace(0, 40, 4001)
    xp, amp = peak_envelope(2.5 * np.cos(x), x)
    assert np.abs(amp - 2.5).max() < 1e-5
    assert np.abs(np.cos(xp) ** 2 - 1).max() < 1e-8


def test_linear_run_ratios_short():
    rep = check_linear_decay(LinearData.gaussian(), 5, SHORT, betas=(0.0, 1.0))
    for b in (0.0, 1.0):
        r = rep.sup_ratio[b]
        assert np.all(np.isfinite(r)) and np.all(r > 0)
        assert rep.flags[f"sup_ratio_stable_beta{b:g}"]
    assert abs(rep.time_fit[0.0].slope + 1 / 5) <= 0.03
    assert np.all(rep.boundary <= 1e-8)


@pytest.mark.slow
def test_linear_suite_n5():
    res = linear_decay_suite(5)
    c = res["checks"]
    for name in ("time_exponent", "spatial_exponent", "sup_ratio_stable", "lp_exponent_q8"):
        assert c[name]["passed"], c[name]
    # the elliptic-region fit is far steeper than the <z>^-1 envelope: smooth data decays faster
    assert c["elliptic_exponent"]["measured"] <= -1 + 0.07


def _synthetic(jump_at, factor=5.0, n=5, p=2):
    params = EquationParams(n, p)
    g = make_grid(400.0, 1024)
    u0 = SpectralField.from_physical(g, 0.05 * np.exp(-(g.x / 6) ** 2))
    times = np.geomspace(1.0, 20.0, 20)
    fields = [(factor if t >= jump_at else 1.0) * apply_propagator(u0, t - 1.0, n) for t in times]
    led = InvariantLedger()
    return Trajectory(params, g, times, fields, led, np.zeros(20), np.zeros(20), eps=0.05)


def test_breakdown_detector_fires_on_growth():
    tr = _synthetic(jump_at=12.0)
    rep = check_nonlinear_decay(tr)
    first = tr.times[tr.times >= 12.0][0]
    assert rep.breakdown_time == pytest.approx(first)
    assert not rep.flags["no_breakdown"]
    r = rep.sup_ratio[0.0]
    assert r[tr.times >= 12.0].min() > BREAKDOWN_FACTOR * np.median(r)


def test_breakdown_detector_quiet_on_linear_flow():
    rep = check_nonlinear_decay(_synthetic(jump_at=np.inf))
    assert rep.breakdown_time is None and rep.flags["no_breakdown"]


def test_nonlinear_zero_and_invalid():
    tr = _synthetic(jump_at=np.inf)
    tr0 = Trajectory(tr.params, tr.grid, tr.times, [0 * f for f in tr.fields], tr.ledger, tr.boundary, tr.tail,
                     eps=0.0)
    rep = check_nonlinear_decay(tr0)
    assert rep.passed() and rep.flags["zero_data"]
    bad = Trajectory(tr.params, tr.grid, tr.times, tr.fields, tr.ledger, tr.boundary, tr.tail, valid=False,
                     notes=["boundary mass 1e-6"])
    with pytest.raises(InvalidRunError):
        check_nonlinear_decay(bad)


@pytest.mark.slow
def test_small_data_nonlinear_run_has_no_breakdown():
    params = EquationParams(5, 2)
    band = (0.8, 1.2)
    g = choose_grid(params, 499.0, 1.5, bandlimit=band, xi_resolve=3.6)
    u0 = initial_data(g, params, eps=0.05, width=1.5, bandlimit=band)
    tr = run(params, u0, 500.0, sample_times=np.geomspace(1, 500, 40), eps=0.05)
    assert tr.valid
    rep = check_nonlinear_decay(tr, betas=(0.0, 1.0))
    assert rep.flags["no_breakdown"]
    for b in (0.0, 1.0):
        r = rep.sup_ratio[b]
        assert np.all(np.isfinite(r)) and r.max() <= BREAKDOWN_FACTOR * np.median(r)
