from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import expm

from cascade.core import PhysicalParams
from cascade.discrete import (
    decay_window,
    giant_atom_power,
    ridge_ratio,
    single_b_k,
    single_energy_power,
    single_probabilities,
    single_spectrum,
    small_system_power,
    small_system_probabilities,
    small_system_spectrum,
    small_system_spectrum_total,
    superradiant_populations,
    two_atom_power,
    two_atom_probabilities,
    two_atom_rates,
    two_atom_spectrum,
    two_atom_spectrum_total,
)
from cascade.errors import RegimeMismatch

T_GRID = np.concatenate([[0.0], np.geomspace(1e-2, 500.0, 400)])


# -- independent references: rate equations integrated numerically -------------------


def _propagate(rate_matrix, y0, t_eval):
    """Exact solution of the linear rate equations dy/dt = M y."""
    return np.array([expm(rate_matrix * t) @ y0 for t in t_eval]).T


def two_atom_rate_ode(t_eval, k0r, gamma):
    """a decays at 2*gamma into the (+) and (-) channels, which decay at G+ and G-."""
    gp = gamma * (1 + math.sin(k0r) / k0r) if k0r else 2 * gamma
    gm = 2 * gamma - gp
    M = np.array([[-2 * gamma, 0, 0], [gp, -gp, 0], [gm, 0, -gm]])
    return _propagate(M, np.array([1.0, 0.0, 0.0]), t_eval)


def small_rate_ode(t_eval, n, gamma):
    """a decays at 2(N-1)*gamma into the symmetric one-excitation state, which decays at N*gamma."""
    M = np.array([[-2 * (n - 1) * gamma, 0], [2 * (n - 1) * gamma, -n * gamma]])
    return _propagate(M, np.array([1.0, 0.0]), t_eval)


def derivative(f, t, h=1e-3):
    """Five-point central difference."""
    return (f(t - 2 * h) - 8 * f(t - h) + 8 * f(t + h) - f(t + 2 * h)) / (12 * h)


def photon_power(prob_b, prob_c, t, gamma):
    """P/(hbar Omega Gamma) = d/dt (|b|^2 + 2|c|^2) / Gamma on resonance."""
    return derivative(lambda s: prob_b(s) + 2 * prob_c(s), t) / gamma


# -- helpers -------------------------------------------------------------------------


def test_decay_window_limits():
    t = np.array([0.0, 1.0, 10.0])
    np.testing.assert_allclose(decay_window(0.0, t), t)
    np.testing.assert_allclose(decay_window(0.3, t), (1 - np.exp(-0.3 * t)) / 0.3, rtol=1e-15)
    assert decay_window(1e-12, 2.0) == pytest.approx(2.0, rel=1e-11)


# -- single atom ---------------------------------------------------------------------


def test_single_b_k_initial_value(params):
    assert single_b_k(0.0, 1.0, 1.0, params) == pytest.approx(1.0, abs=1e-15)


def test_single_b_k_long_time_keeps_only_bounded_dressing_term(params):
    t = 1e4
    for wk, wk1 in [(1.0, 1.0), (1.03, 1.0), (0.98, 1.01)]:
        ak = params.omega - wk - 0.05j
        a1 = params.omega - wk1 - 0.05j
        expected = params.g**2 * np.exp(-1j * (wk + wk1) * t) / (ak * a1)
        assert single_b_k(t, wk, wk1, params) == pytest.approx(expected, abs=1e-14)


def test_single_b_k_continuous_across_diagonal(params):
    t = np.linspace(0, 40, 81)
    for eps in (2e-4, 5e-5):
        series = single_b_k(t, 1.0 + eps * params.gamma * 0.999, 1.0, params)
        generic = single_b_k(t, 1.0 + eps * params.gamma * 1.001 + 1e-3 * params.gamma, 1.0, params)
        # both branches agree with a finely sampled neighbour to O(x) smoothness
        assert np.abs(series - single_b_k(t, 1.0 + 1.0001e-3 * params.gamma, 1.0, params)).max() < 1e-4
        assert np.all(np.isfinite(generic))


def test_single_b_k_generic_matches_direct_formula(params):
    t, wk, wk1 = 7.3, 1.04, 0.99
    om, h = params.omega, 0.05
    a1 = om - wk1 - 1j * h
    ak = om - wk - 1j * h
    env = math.exp(-h * t)
    ref = params.g**2 * (
        np.exp(-1j * (wk + om) * t) * env / ((wk - wk1) * a1)
        + np.exp(-1j * (wk1 + om) * t) * env / ((wk1 - wk) * ak)
        + np.exp(-1j * (wk + wk1) * t) / (ak * a1)
    )
    assert single_b_k(t, wk, wk1, params) == pytest.approx(ref, rel=1e-13)


def test_single_probabilities_examples(params):
    pb, pc, pt = single_probabilities(0.0, params)
    assert pb == pytest.approx(1 - 8 * params.g**2 / params.gamma**2, abs=1e-15)
    assert pb == pytest.approx(0.98, abs=1e-12)
    assert pc == pytest.approx(0.0, abs=1e-15)
    assert pt == pytest.approx(pb + pc)
    _, pc_inf, _ = single_probabilities(1e4, params)
    assert pc_inf == pytest.approx(1 + 4 * params.g**2 / params.gamma**2, abs=1e-12)
    assert pc_inf == pytest.approx(1.01, abs=1e-12)


def test_single_total_is_not_conserved_at_intermediate_times(params):
    t = np.linspace(0, 100, 1001)
    _, _, pt = single_probabilities(t, params)
    dev = np.abs(pt - 1).max()
    assert 1e-3 < dev < 10 * params.g**2 / params.gamma**2


def test_single_probabilities_off_resonance_match_direct_formula(params):
    t, wk1 = 12.0, 1.07
    d = params.omega - wk1
    lor = d * d + 0.25 * params.gamma**2
    z = (d + 0.5j * params.gamma) ** 2 * np.exp(1j * d * t)
    pb_ref = math.exp(-params.gamma * t) + params.g**2 * math.exp(-0.05 * t) / lor**2 * 2 * z.real
    pc_ref = 1 - math.exp(-params.gamma * t) + params.g**2 * (
        1 - 2 * math.exp(-0.05 * t) * math.cos(d * t) + math.exp(-params.gamma * t)
    ) / lor
    pb, pc, _ = single_probabilities(t, params, wk1)
    assert pb == pytest.approx(pb_ref, rel=1e-13)
    assert pc == pytest.approx(pc_ref, rel=1e-13)


def test_single_spectrum_shape(params):
    dw = 0.01
    w = 1.0 + dw * np.arange(-200, 201)
    wk, wp = np.meshgrid(w, w, indexing="ij")
    rho = single_spectrum(wk, wp, params, 1.0, d_omega=dw)
    i0 = 200
    assert rho.max() == rho[i0, i0]
    off = np.ones_like(rho, dtype=bool)
    off[i0, :] = off[:, i0] = False
    assert np.all(rho[off] == 0)
    # Lorentzian half maximum at omega +- gamma/2 on the incident column
    # grid sum: one pair, plus the interference of both indicator terms in the
    # resonant diagonal cell, 2*dw/(pi*gamma), minus the Lorentzian tails beyond the grid
    tails = 1 - (2 / np.pi) * np.arctan(2.0 / (params.gamma / 2))
    expected = 1 + 2 * dw / (np.pi * params.gamma) - tails
    assert rho.sum() * dw * dw == pytest.approx(expected, abs=1e-4)
    # off resonance the free photon is a Lorentzian about omega with HWHM gamma/2
    wk1 = 1.3
    peak = single_spectrum(wk1, params.omega, params, wk1, d_omega=dw)
    for side in (-1, 1):
        half = single_spectrum(wk1, params.omega + side * params.gamma / 2, params, wk1, d_omega=dw)
        assert half == pytest.approx(0.5 * peak, rel=1e-12)


def test_single_power_initial_value_and_long_time_decay(params):
    _, p0 = single_energy_power(0.0, params)
    assert p0 == pytest.approx(1.0, abs=0.05)
    t = np.linspace(150, 400, 500)
    _, p = single_energy_power(t, params)
    assert np.all(np.diff(p) < 0)


def test_single_energy_long_time_limit(params):
    for wk1 in (1.0, 1.1):
        e, _ = single_energy_power(1e5, params, wk1)
        lor = (params.omega - wk1) ** 2 + params.gamma**2 / 4
        assert e == pytest.approx(params.omega + wk1 + 2 * params.g**2 * wk1 / lor, rel=1e-12)


def test_single_energy_on_resonance_matches_probabilities(params):
    t = np.linspace(0, 100, 201)
    pb, pc, _ = single_probabilities(t, params)
    e, _ = single_energy_power(t, params)
    np.testing.assert_allclose(e, params.omega * (pb + 2 * pc), rtol=1e-13)


def test_single_power_is_energy_derivative(params):
    for wk1 in (1.0, 1.05):
        for t in (0.5, 8.0, 30.0):
            de = derivative(lambda s: single_energy_power(s, params, wk1)[0], t)
            _, p = single_energy_power(t, params, wk1)
            assert p == pytest.approx(de / (params.omega * params.gamma), rel=1e-7, abs=1e-10)


# -- two atoms -----------------------------------------------------------------------


def test_two_atom_rates_examples(params):
    r = two_atom_rates(0.0, params)
    assert (r.gamma_plus, r.gamma_minus) == (0.2, 0.0)
    r = two_atom_rates(1.0, params)
    assert r.gamma_plus == pytest.approx(0.18414710, abs=1e-8)
    assert r.gamma_minus == pytest.approx(0.01585290, abs=1e-8)
    r = two_atom_rates(1e9, params)
    assert r.gamma_plus == pytest.approx(0.1, abs=1e-9)
    assert r.gamma_minus == pytest.approx(0.1, abs=1e-9)


@pytest.mark.parametrize("k0r", [0.0, 0.3, 1.0, 4.0, 10.0])
def test_two_atom_probabilities_match_rate_equations(params, k0r):
    a, bp, bm = two_atom_rate_ode(T_GRID, k0r, params.gamma)
    pa, pb, pc, pt = two_atom_probabilities(T_GRID, k0r, params)
    plus, minus = superradiant_populations(T_GRID, k0r, params)
    np.testing.assert_allclose(pa, a, atol=1e-12)
    np.testing.assert_allclose(plus, bp, atol=1e-12)
    np.testing.assert_allclose(minus, bm, atol=1e-12)
    np.testing.assert_allclose(pb, bp + bm, atol=1e-12)
    np.testing.assert_allclose(pc, 1 - a - bp - bm, atol=1e-12)
    np.testing.assert_allclose(pt, 1.0, atol=1e-12)


def test_two_atom_printed_form_away_from_degeneracy(params):
    r = two_atom_rates(1.0, params)
    gp, gm, g = r.gamma_plus, r.gamma_minus, params.gamma
    t = T_GRID
    ref = gp / gm * (np.exp(-gp * t) - np.exp(-2 * g * t)) + gm / gp * (np.exp(-gm * t) - np.exp(-2 * g * t))
    np.testing.assert_allclose(two_atom_probabilities(t, 1.0, params)[1], ref, rtol=1e-12, atol=1e-15)


def test_two_atom_small_separation_limit(params):
    t = T_GRID
    g = params.gamma
    pb = two_atom_probabilities(t, 0.0, params)[1]
    np.testing.assert_allclose(pb, 2 * g * t * np.exp(-2 * g * t), rtol=1e-13, atol=1e-300)
    # just off the degenerate point the subradiant channel holds O(G-/gamma) ~ 1e-11
    # of population; catastrophic cancellation would give errors near 1e-5
    pb_near = two_atom_probabilities(t, 1e-5, params)[1]
    np.testing.assert_allclose(pb_near, 2 * g * t * np.exp(-2 * g * t), rtol=1e-6, atol=1e-10)


def test_two_atom_initial_condition(params):
    assert two_atom_probabilities(0.0, 1.0, params) == (1.0, 0.0, 0.0, 1.0)
    assert superradiant_populations(0.0, 1.0, params) == (0.0, 0.0)


def test_superradiant_split_large_separation(params):
    t = T_GRID
    plus, minus = superradiant_populations(t, 1e9, params)
    pb = two_atom_probabilities(t, 1e9, params)[1]
    np.testing.assert_allclose(plus, 0.5 * pb, rtol=1e-7, atol=1e-15)
    np.testing.assert_allclose(minus, 0.5 * pb, rtol=1e-7, atol=1e-15)


def test_superradiant_channel_peaks_earlier_and_higher(params):
    t = np.linspace(0, 200, 20001)
    plus, minus = superradiant_populations(t, 1.0, params)
    assert plus.max() > minus.max()
    assert t[plus.argmax()] < t[minus.argmax()]


@pytest.mark.parametrize("k0r", [0.0, 0.5, 1.0, 2.0, 10.0])
def test_two_atom_power_matches_derivative_of_photon_number(params, k0r):
    pb = lambda s: two_atom_probabilities(s, k0r, params)[1]
    pc = lambda s: two_atom_probabilities(s, k0r, params)[2]
    for t in (0.3, 5.0, 20.0, 80.0):
        ref = photon_power(pb, pc, t, params.gamma)
        assert two_atom_power(t, k0r, params)[3] == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_two_atom_power_channels_sum_to_total(params):
    pp, pm, pc, pt = two_atom_power(T_GRID, 1.0, params)
    np.testing.assert_allclose(pp + pm + pc, pt, rtol=1e-12, atol=1e-15)


def test_two_atom_power_printed_channel_forms(params):
    r = two_atom_rates(1.0, params)
    gp, gm, g = r.gamma_plus, r.gamma_minus, params.gamma
    t = np.linspace(0, 300, 301)
    e2 = np.exp(-2 * g * t)
    p_plus_ref = gp / gm * (2 * g * e2 - gp * np.exp(-gp * t))
    p_minus_ref = gm / gp * (2 * g * e2 - gm * np.exp(-gm * t))
    pp, pm, _, _ = two_atom_power(t, 1.0, params)
    np.testing.assert_allclose(pp * g, p_plus_ref, rtol=1e-9, atol=1e-13)
    np.testing.assert_allclose(pm * g, p_minus_ref, rtol=1e-9, atol=1e-13)


@pytest.mark.parametrize("k0r", [0.0, 1.0, 10.0, 100.0])
def test_two_atom_spectrum_symmetric_with_ridge(params, k0r):
    x, y = 1.013, 0.962
    assert two_atom_spectrum(x, y, k0r, params) == pytest.approx(two_atom_spectrum(y, x, k0r, params), rel=1e-15)
    d = 2 * params.gamma
    on = two_atom_spectrum(1 + d, 1 - d, k0r, params)
    off = two_atom_spectrum(1 + d, 1 + d, k0r, params)
    assert on > off


@pytest.mark.parametrize("k0r", [0.1, 1.0, 10.0])
def test_two_atom_spectrum_integrates_to_one(params, k0r):
    assert two_atom_spectrum_total(k0r, params) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("k0r", [0.5, 1.0, 3.0])
def test_two_atom_spectrum_channel_weights_follow_branching(params, k0r):
    """Each channel carries its branching fraction G_pm / (2 gamma) of the pairs."""
    from cascade.core import pair_plane_integral
    from cascade.discrete import _two_atom_term

    r = two_atom_rates(k0r, params)
    for g_pm in (r.gamma_plus, r.gamma_minus):
        val = pair_plane_integral(lambda x, y: _two_atom_term(x, y, g_pm, params.gamma), g_pm / 2, g_pm)
        assert val == pytest.approx(g_pm / (2 * params.gamma), rel=1e-6)


def test_two_atom_spectrum_window_quadrature(params):
    """Plain nested quadrature on finite windows, independent of the plane mapping.

    Lorentzian tails leave a deficit proportional to 1/W, about 1.6% at a
    +-40 gamma window, so the full-plane value is approached as W grows.
    """
    from scipy.integrate import dblquad

    deficits = []
    for W in (40 * params.gamma, 400 * params.gamma):
        val, _ = dblquad(
            lambda y, x: two_atom_spectrum(x, y, 1.0, params),
            1 - W, 1 + W, 1 - W, 1 + W, epsabs=1e-10, epsrel=1e-8,
        )
        deficits.append(1.0 - val)
    assert 0 < deficits[1] < deficits[0]
    assert deficits[0] / deficits[1] == pytest.approx(10.0, rel=0.05)
    assert deficits[1] < 2e-3


def test_ridge_ratio_definition(params):
    f = lambda x, y: two_atom_spectrum(x, y, 1.0, params)
    d = 0.2
    assert ridge_ratio(f, 1.0, d) == pytest.approx(f(1 + d, 1 - d) / f(1 + d, 1 + d))


# -- small systems --------------------------------------------------------------------


@pytest.mark.parametrize("n", [3, 5, 10, 100])
def test_small_probabilities_match_rate_equations(params, n):
    a, b = small_rate_ode(T_GRID, n, params.gamma)
    pa, pb, pc, pt = small_system_probabilities(T_GRID, n, params)
    np.testing.assert_allclose(pa, a, atol=1e-12)
    np.testing.assert_allclose(pb, b, atol=1e-12)
    np.testing.assert_allclose(pc, 1 - a - b, atol=1e-12)
    np.testing.assert_allclose(pt, 1.0, atol=1e-12)


def test_small_probabilities_examples(params):
    assert small_system_probabilities(0.0, 10, params) == (1.0, 0.0, 0.0, 1.0)
    t = np.linspace(0, 10, 11)
    np.testing.assert_allclose(small_system_probabilities(t, 10, params)[0], np.exp(-1.8 * t), rtol=1e-15)


def test_small_printed_form(params):
    n, g, t = 7, params.gamma, T_GRID
    pb = 2 * (n - 1) / (n - 2) * (np.exp(-n * g * t) - np.exp(-2 * (n - 1) * g * t))
    pc = 1 - 2 * (n - 1) / (n - 2) * np.exp(-n * g * t) + n / (n - 2) * np.exp(-2 * (n - 1) * g * t)
    _, b, c, _ = small_system_probabilities(t, n, params)
    np.testing.assert_allclose(b, pb, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(c, pc, rtol=1e-12, atol=1e-14)


def test_small_two_atom_limit_matches_two_atom_regime(params):
    small = small_system_probabilities(T_GRID, 2, params)
    two = two_atom_probabilities(T_GRID, 0.0, params)
    for s, t in zip(small, two):
        np.testing.assert_allclose(s, t, atol=1e-12)


def test_small_system_rejects_n_two_for_spectrum_and_power(params):
    with pytest.raises(RegimeMismatch):
        small_system_spectrum(1.0, 1.0, 2, params)
    with pytest.raises(RegimeMismatch):
        small_system_power(0.0, 2, params)


@pytest.mark.parametrize("n", [3, 5, 10, 100])
def test_small_power_peak_value(params, n):
    assert small_system_power(0.0, n, params) == 2 * (n - 1)


@pytest.mark.parametrize("n", [3, 5, 10])
def test_small_power_matches_derivative_of_photon_number(params, n):
    pb = lambda s: small_system_probabilities(s, n, params)[1]
    pc = lambda s: small_system_probabilities(s, n, params)[2]
    for t in (0.1, 1.0, 6.0):
        ref = photon_power(pb, pc, t, params.gamma)
        assert small_system_power(t, n, params) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("n", [3, 5, 10, 20, 50, 100])
def test_small_power_monotone(params, n):
    t = np.linspace(0, 50 / (n * params.gamma), 4001)
    assert np.all(np.diff(small_system_power(t, n, params)) < 0)


def test_giant_atom_limit(params):
    n = 100
    t = np.linspace(0, 3 / (n * params.gamma), 301)
    exact = small_system_power(t, n, params)
    giant = giant_atom_power(t, n, params)
    assert np.abs(giant / exact - 1).max() < 0.05


def test_small_spectrum_symmetric(params):
    assert small_system_spectrum(1.02, 0.97, 5, params) == pytest.approx(
        small_system_spectrum(0.97, 1.02, 5, params), rel=1e-15
    )


@pytest.mark.parametrize("n", [3, 5, 10])
def test_small_spectrum_integrates_to_one(params, n):
    assert small_system_spectrum_total(n, params) == pytest.approx(1.0, abs=1e-3)


def test_small_ridge_weakens_with_n(params):
    d = 2 * params.gamma
    ratios = [ridge_ratio(lambda x, y, n=n: small_system_spectrum(x, y, n, params), 1.0, d) for n in (3, 5, 10)]
    assert ratios[0] > ratios[1] > ratios[2]


def test_peak_power_at_time_zero(params):
    t = np.linspace(0, 100, 20001)
    for k0r in (0.0, 0.5, 1.0, 2.0, 10.0):
        p = two_atom_power(t, k0r, params)[3]
        assert p.argmax() == 0
    for n in (3, 10):
        assert small_system_power(t, n, params).argmax() == 0
