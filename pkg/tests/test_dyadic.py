import numpy as np
import pytest
from hypothesis import given, strategies as st

from hokdv.dyadic import (
    ORTHO_LOWER, ORTHO_UPPER, dyad_range, freqloc_report, lp_below, lp_piece, orthogonality_bounds, phi, psi,
)
from hokdv.evolution import choose_grid, initial_data, run
from hokdv.params import EquationParams
from hokdv.spectral import SpectralField, l2_norm, make_grid, to_profile


def test_phi_and_psi_support():
    x = np.linspace(-5, 5, 20001)
    assert np.all(phi(x[np.abs(x) <= 1]) == 1) and np.all(phi(x[np.abs(x) >= 2]) == 0)
    p = psi(x)
    assert np.all(p[(np.abs(x) <= 0.5) | (np.abs(x) >= 2)] == 0)
    assert np.all(p >= 0)


@given(st.floats(-10.0, 10.0).filter(lambda v: abs(v) > 2.0**-10))
def test_partition_of_unity(xi):
    total = sum(psi(xi / 2.0**j) for j in range(-14, 14))
    assert abs(total - 1.0) <= 1e-14


def test_pieces_resum_to_field():
    g = make_grid(200.0, 1024)
    u = SpectralField.from_physical(g, np.exp(-g.x**2 / 4) * (1 + 0.2 * g.x))
    lo, hi = dyad_range(g)
    total = lp_below(u, lo)
    for j in range(lo, hi + 1):
        total = total + lp_piece(u, j)
    assert np.abs(total.fourier - u.fourier).max() <= 1e-10 * np.abs(u.fourier).max()


def test_band_in_one_to_two_touches_two_pieces():
    # psi(xi) and psi(xi/2) overlap on [1, 2]; no other piece meets that band
    g = make_grid(400.0, 2048)
    xi = np.abs(g.xi)
    uh = np.where((xi > 1.05) & (xi < 1.95), np.exp(-1 / ((xi - 1) * (2 - xi) + 1e-300)), 0.0)
    u = SpectralField.from_fourier(g, uh)
    nz = [j for j in range(-6, 6) if l2_norm(lp_piece(u, j)) > 0]
    assert nz == [0, 1]
    s = lp_piece(u, 0) + lp_piece(u, 1)
    assert np.abs(s.fourier - u.fourier).max() <= 1e-14


def test_band_inside_single_piece_plateau():
    # a narrow band at xi ~ 1 meets only the pieces j=0 (psi = 1 there) and none other
    g = make_grid(400.0, 2048)
    xi = np.abs(g.xi)
    uh = np.where(np.abs(xi - 1.0) < 0.5 * g.dxi, 1.0, 0.0)
    u = SpectralField.from_fourier(g, uh)
    nz = [j for j in range(-6, 6) if l2_norm(lp_piece(u, j)) > 1e-15]
    assert nz == [0]


def test_almost_orthogonality():
    # sum_j psi_j^2 ranges over [1/2, 1]: direct computation on a fine grid
    xi = np.linspace(1.0, 2.0, 100001)
    s2 = psi(xi) ** 2 + psi(xi / 2) ** 2
    assert abs(s2.min() - ORTHO_LOWER) < 1e-8 and abs(s2.max() - ORTHO_UPPER) < 1e-12
    rng = np.random.default_rng(0)
    g = make_grid(100.0, 512)
    for _ in range(10):
        u = SpectralField.from_physical(g, rng.standard_normal(512) * np.exp(-g.x**2 / 50))
        r = orthogonality_bounds(u)
        assert ORTHO_LOWER <= r <= ORTHO_UPPER


def test_freqloc_needs_n_for_bare_field():
    g = make_grid(100.0, 256)
    with pytest.raises(ValueError):
        freqloc_report(SpectralField.zeros(g), 1.0)
    with pytest.raises(ValueError):
        freqloc_report(SpectralField.zeros(g), 1.0, n=5, alpha=0.7)


def test_freqloc_prefactor_bounded_along_run():
    params = EquationParams(5, 2)
    g = choose_grid(params, 49.0, 6.0)
    u0 = initial_data(g, params, eps=0.05, width=6.0)
    tr = run(params, u0, 50.0, sample_times=np.geomspace(1, 50, 6), t0=1.0, eps=0.05)
    assert tr.valid
    pref = []
    for t, u in zip(tr.times, tr.fields):
        rep = freqloc_report(to_profile(u, t, params), t)
        assert rep.rows and all(np.isfinite(r.ratios).all() for r in rep.rows)
        pref.append(rep.prefactor)
        rows = rep.csv_rows()
        assert rows[0][0] == "t" and len(rows) == len(rep.rows) + 1
    # a small-data run keeps the fitted prefactor of order eps, uniformly in t
    assert max(pref) <= 2 * min(pref)
    assert max(pref) < 0.1
