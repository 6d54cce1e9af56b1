from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from cascade.continuum import (
    ContinuumMode,
    SchmidtSpectrum,
    basis_amplitudes,
    basis_overlap,
    continuum_power,
    continuum_probabilities,
    continuum_spectrum,
    continuum_spectrum_total,
    entropy_sweep,
    normalize_modes,
    schmidt_spectrum,
    two_mode_coeffs,
    von_neumann_entropy,
)
from cascade.core import Continuum
from cascade.discrete import small_system_probabilities, small_system_power
from cascade.errors import UnnormalizedInitialState
from cascade.specfun import lambda_l

LAM0 = lambda_l(0, 100, 4.0)


def s_wave(n=100, k0R=4.0):
    return normalize_modes(Continuum(n, k0R, ((0, 0, 1.0),))).modes


def test_normalization_rescales_and_reports():
    table = normalize_modes(Continuum(100, 4.0, ((0, 0, 1.0),)))
    (mode,) = table.modes
    assert mode.weight == pytest.approx(1.0, rel=1e-15)
    assert abs(mode.a0) ** 2 == pytest.approx(8 * math.pi**2 / LAM0**2, rel=1e-14)
    assert table.scale == pytest.approx(math.sqrt(8 * math.pi**2) / LAM0, rel=1e-14)
    assert table.raw == ((0, 0, 1.0 + 0j),)
    assert table.dropped == ()
    assert table.lambda_table() == {0: LAM0}


def test_normalization_drops_negligible_modes():
    # lambda_l collapses for l >> k0R
    table = normalize_modes(Continuum(100, 0.5, ((0, 0, 1.0), (12, 0, 1.0))))
    assert [(l, m) for l, m, _ in table.dropped] == [(12, 0)]
    assert [m.l for m in table.modes] == [0]


def test_unnormalized_modes_are_rejected():
    bad = (ContinuumMode(0, 0, 1.0, LAM0),)
    with pytest.raises(UnnormalizedInitialState):
        continuum_probabilities(0.0, bad, None)
    with pytest.raises(UnnormalizedInitialState):
        schmidt_spectrum(bad)


def test_mode_validation():
    with pytest.raises(ValueError):
        ContinuumMode(1, 2, 1.0, 1.0)
    with pytest.raises(ValueError):
        ContinuumMode(0, 0, 1.0, 0.0)


def test_probability_examples(params):
    modes = s_wave()
    assert continuum_probabilities(0.0, modes, params) == pytest.approx((1.0, 0.0, 0.0, 1.0), abs=1e-15)
    t = np.linspace(0, 5, 51)
    pa = continuum_probabilities(t, modes, params)[0]
    np.testing.assert_allclose(pa, np.exp(-2 * LAM0 * params.gamma * t), rtol=1e-13)
    assert continuum_probabilities(1e4, modes, params) == pytest.approx((0.0, 0.0, 1.0, 1.0), abs=1e-14)


def test_probabilities_match_per_mode_rate_equations(params):
    """Each partial wave: a decays at 2*lam*gamma into b, which decays at lam*gamma."""
    from scipy.linalg import expm

    geom = Continuum(100, 4.0, ((0, 0, 1.0), (1, -1, 0.3), (1, 1, 0.3), (2, 0, 0.7j)))
    modes = normalize_modes(geom).modes
    t = np.geomspace(1e-3, 20, 60)
    ref = np.zeros((3, t.size))
    for m in modes:
        r = m.lam * params.gamma
        M = np.array([[-2 * r, 0, 0], [2 * r, -r, 0], [0, r, 0]])
        ref += m.weight * np.array([expm(M * s) @ [1.0, 0, 0] for s in t]).T
    got = continuum_probabilities(t, modes, params)
    for g, r in zip(got[:3], ref):
        np.testing.assert_allclose(g, r, atol=1e-13)
    np.testing.assert_allclose(got[3], 1.0, atol=1e-12)


def test_small_sphere_reduces_to_small_system(params):
    n = 100
    modes = s_wave(n, 0.05)
    assert modes[0].lam == pytest.approx(n, rel=0.01)
    t = np.linspace(0, 5 / (n * params.gamma), 201)
    cont = continuum_probabilities(t, modes, params)
    small = small_system_probabilities(t, n, params)
    # compared as probabilities (absolute): the relative error in the tail of
    # prob_a grows with t because the two decay rates differ by 2 * (N - 1 - lam0)
    for c, s in zip(cont[:3], small[:3]):
        assert np.abs(c - s).max() < 0.02


def test_spectrum_factorizes_for_single_mode(params):
    modes = s_wave()
    w = 1.0 + np.linspace(-3, 3, 13)
    rho = continuum_spectrum(w[:, None], w[None, :], modes, params)
    u, s, vh = np.linalg.svd(rho)
    assert s[1] / s[0] < 1e-13
    assert rho[6, 6] == rho.max()


def test_spectrum_half_width(params):
    modes = s_wave()
    peak = continuum_spectrum(1.0, 1.0, modes, params)
    hw = LAM0 * params.gamma / 2
    for side in (-1, 1):
        assert continuum_spectrum(1.0 + side * hw, 1.0, modes, params) == pytest.approx(peak / 2, rel=1e-13)


def test_spectrum_integrates_to_one(params):
    modes = normalize_modes(Continuum(100, 4.0, ((0, 0, 1.0), (1, 0, 0.5)))).modes
    assert continuum_spectrum_total(modes, params) == pytest.approx(1.0, abs=1e-3)
    # per-axis Lorentzian integral, computed independently
    total = 0.0
    for m in modes:
        h = m.lam * params.gamma / 2
        axis, _ = quad(lambda x: 1 / (x * x + h * h), -np.inf, np.inf)
        total += params.gamma**2 / (32 * math.pi**4) * m.lam**4 * abs(m.a0) ** 2 * axis**2
    assert total == pytest.approx(1.0, rel=1e-10)


def test_schmidt_examples():
    assert schmidt_spectrum(s_wave()).weights.tolist() == pytest.approx([1.0])
    coeffs = two_mode_coeffs(0.5, 100, 4.0)
    modes = normalize_modes(Continuum(100, 4.0, coeffs)).modes
    assert schmidt_spectrum(modes).weights == pytest.approx([0.5, 0.5], abs=1e-14)
    lam = [lambda_l(l, 100, 4.0) for l in range(3)]
    three = tuple((l, 0, 1.0 / lam[l]) for l in range(3))
    modes = normalize_modes(Continuum(100, 4.0, three)).modes
    assert schmidt_spectrum(modes).weights == pytest.approx([1 / 3] * 3, abs=1e-14)


def test_schmidt_weights_match_coefficient_definition(params):
    geom = Continuum(100, 4.0, ((0, 0, 0.4), (1, 0, 1.0), (2, -2, 0.2j), (2, 2, 0.2j)))
    modes = normalize_modes(geom).modes
    for (l, m, sigma), mode in zip(schmidt_spectrum(modes).entries, modes):
        c = math.sqrt(2) * mode.lam * mode.a0 / (4 * math.pi)
        assert sigma == pytest.approx(abs(c) ** 2, rel=1e-14)
    assert schmidt_spectrum(modes).weights.sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        SchmidtSpectrum(((0, 0, -0.1),))


def test_entropy_examples():
    assert von_neumann_entropy([1.0]) == 0.0
    assert von_neumann_entropy([0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)
    assert von_neumann_entropy([0.9, 0.1]) == pytest.approx(0.325083, abs=1e-6)
    assert von_neumann_entropy([0.0, 1.0]) == 0.0
    with pytest.raises(ValueError):
        von_neumann_entropy([1.2, -0.2])


def test_entropy_sweep_peaks_at_half():
    sig, ent = entropy_sweep(100, 4.0, 101)
    assert sig[ent.argmax()] == pytest.approx(0.5)
    assert ent.max() == pytest.approx(math.log(2), abs=1e-12)
    assert ent[0] == 0.0 and ent[-1] == 0.0
    np.testing.assert_allclose(ent, ent[::-1], atol=1e-14)


def test_power_examples(params):
    modes = s_wave()
    assert continuum_power(0.0, modes, params) == pytest.approx(2 * LAM0, rel=1e-14)
    small = s_wave(100, 1e-3)
    assert continuum_power(0.0, small, params) == pytest.approx(2 * 100, rel=1e-5)
    assert continuum_power(0.0, small, params) == pytest.approx(small_system_power(0.0, 100, params), rel=0.011)
    t = np.linspace(0, 20, 401)
    mixed = normalize_modes(Continuum(100, 4.0, ((0, 0, 1.0), (1, 0, 1.0), (3, 0, 2.0)))).modes
    assert np.all(np.diff(continuum_power(t, mixed, params)) < 0)


def test_power_is_derivative_of_photon_number(params):
    modes = normalize_modes(Continuum(100, 4.0, ((0, 0, 1.0), (2, 0, 0.3)))).modes

    def photons(s):
        _, pb, pc, _ = continuum_probabilities(s, modes, params)
        return pb + 2 * pc

    for t in (0.01, 0.5, 3.0):
        h = 1e-4
        d = (photons(t - 2 * h) - 8 * photons(t - h) + 8 * photons(t + h) - photons(t + 2 * h)) / (12 * h)
        assert continuum_power(t, modes, params) == pytest.approx(d / params.gamma, rel=1e-8)


def test_basis_phases(params):
    psi0, phi0 = basis_amplitudes(1.02, 1, 0, (0.3, 0.2), 0.0, params, LAM0)
    psi, phi = basis_amplitudes(1.02, 1, 0, (0.3, 0.2), 2.5, params, LAM0)
    assert psi / psi0 == pytest.approx(np.exp(1j * 1.02 * 2.5), abs=1e-14)
    assert phi / phi0 == pytest.approx(np.exp(-1j * 1.02 * 2.5), abs=1e-14)
    with pytest.raises(ValueError):
        basis_amplitudes(1.0, 1, 2, (0.0, 0.0), 0.0, params, LAM0)


@pytest.mark.parametrize("which", ["psi", "phi"])
def test_basis_orthonormality(params, which):
    lam = {l: lambda_l(l, 100, 4.0) for l in range(3)}
    for l, m in [(0, 0), (1, -1), (2, 1)]:
        assert basis_overlap((l, m, lam[l]), (l, m, lam[l]), params, which) == pytest.approx(1.0, abs=1e-6)
    assert abs(basis_overlap((0, 0, lam[0]), (1, 0, lam[1]), params, which)) < 1e-8
    assert abs(basis_overlap((2, 1, lam[2]), (2, -1, lam[2]), params, which)) < 1e-8
