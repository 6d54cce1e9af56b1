"""Closed forms for the single-atom, two-atom and small-system regimes.

All functions are vectorized over time or frequency arrays.  Probabilities
are dimensionless, energies carry units of hbar times the frequency unit and
power is reported in units of hbar*omega*gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PhysicalParams, pair_plane_integral
from .errors import RegimeMismatch
from .specfun import sinc


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def decay_window(x: float, t) -> np.ndarray:
    """(1 - exp(-x*t))/x, continued to t at x = 0.

    This is the removable-singular combination behind every degenerate-rate
    limit below.  ``expm1`` keeps full relative precision for small x*t.
    """
    t = _as_array(t)
    if x == 0.0:
        return t.copy()
    return -np.expm1(-x * t) / x


# -- single atom --------------------------------------------------------------


def _single_terms(params: PhysicalParams, omega_k1: float):
    det = params.omega - omega_k1
    lor = det * det + 0.25 * params.gamma**2
    return det, lor


def single_b_k(t, omega_k, omega_k1: float, params: PhysicalParams):
    """Photon-plus-excited-atom amplitude b_k(t) with the incident photon in k1.

    Lowest order plus the g^2 correction.  The diagonal mode omega_k ==
    omega_k1 carries the Kronecker term; the correction terms are evaluated
    through their limit when omega_k approaches omega_k1.
    """
    t = _as_array(t)
    wk = _as_array(omega_k)
    t, wk = np.broadcast_arrays(t, wk)
    om, gam = params.omega, params.gamma
    half = 0.5 * gam
    a1 = om - omega_k1 - 1j * half
    ak = om - wk - 1j * half
    x = wk - omega_k1
    env = np.exp(-half * t)

    out = np.where(np.abs(x) <= 1e-6 * gam, np.exp(-1j * (om + wk) * t) * env, 0.0 + 0.0j)

    small = np.abs(x) < 1e-3 * gam
    # Generic branch: three poles at omega + omega_k, omega + omega_k1 and
    # omega_k + omega_k1, with the atomic line width on the first two.
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = np.where(small, 1.0, x)
        corr = (
            np.exp(-1j * (wk + om) * t) * env / (xs * a1)
            - np.exp(-1j * (omega_k1 + om) * t) * env / (xs * ak)
            + np.exp(-1j * (wk + omega_k1) * t) / (ak * a1)
        )
    # Near the diagonal, expand the bracket in x = omega_k - omega_k1 to
    # second order about the double pole.
    if np.any(small):
        ph = np.exp(-1j * (omega_k1 + om) * t) * env
        ph2 = np.exp(-1j * 2.0 * omega_k1 * t)
        xx = np.where(small, x, 0.0)
        # f(x) = [e^{-i x t} - 1]/(x a1) ... collected by series below.
        series = _single_diag_series(t, xx, a1, ph, ph2)
        corr = np.where(small, series, corr)
    out = out + params.g**2 * corr
    return out if out.ndim else complex(out)


def _single_diag_series(t, x, a1, ph, ph2):
    """Second-order expansion of the g^2 bracket around omega_k = omega_k1.

    With A = a1 - x (the detuning factor of mode k) the bracket is
        ph*e^{-ixt}/(x*a1) - ph/(x*A) + ph2*e^{-ixt}/(A*a1).
    Writing 1/A = sum x^n/a1^(n+1) and expanding e^{-ixt}, the 1/x poles
    cancel and the remainder is a power series in x.
    """
    it = 1j * t
    # ph * [ (e^{-ixt} - 1)/x - sum_{n>=1} x^{n-1}/a1^n ] / a1
    p0 = -it - 1.0 / a1
    p1 = (it * it) / 2.0 - 1.0 / a1**2
    p2 = -(it**3) / 6.0 - 1.0 / a1**3
    first = ph / a1 * (p0 + x * p1 + x * x * p2)
    # ph2 * e^{-ixt} * sum_n x^n/a1^(n+2)
    e = 1.0 - it * x + (it * x) ** 2 / 2.0
    second = ph2 * e * (1.0 / a1**2 + x / a1**3 + x * x / a1**4)
    return first + second


def single_probabilities(t, params: PhysicalParams, omega_k1: float = 1.0):
    """(prob_b, prob_c, p_total) with an incident photon at omega_k1.

    The total is not forced to one: the on-shell evaluation leaves an
    O(g^2/gamma^2) excess at intermediate times.
    """
    t = _as_array(t)
    det, lor = _single_terms(params, omega_k1)
    half = 0.5 * params.gamma
    g2 = params.g**2
    z = (det + 1j * half) ** 2 * np.exp(1j * det * t)
    prob_b = np.exp(-params.gamma * t) + g2 * np.exp(-half * t) / lor**2 * 2.0 * z.real
    prob_c = -np.expm1(-params.gamma * t) + g2 * (
        1.0 - 2.0 * np.exp(-half * t) * np.cos(det * t) + np.exp(-params.gamma * t)
    ) / lor
    return _out(prob_b), _out(prob_c), _out(prob_b + prob_c)


def single_spectrum(omega_k, omega_p, params: PhysicalParams, omega_k1: float = 1.0, d_omega: float | None = None):
    """Long-time two-photon density for the stimulated single atom.

    One photon sits in the incident mode; the Kronecker delta on that mode
    becomes an indicator on the grid cell containing omega_k1 with weight
    1/d_omega, so the density integrates to one over the grid.  The free
    photon is a Lorentzian of half-width gamma/2 about omega.
    """
    d_omega = 0.1 * params.gamma if d_omega is None else float(d_omega)
    if d_omega <= 0:
        raise ValueError(f"d_omega must be > 0, got {d_omega}")
    wk, wp = np.broadcast_arrays(_as_array(omega_k), _as_array(omega_p))
    half = 0.5 * params.gamma

    def ind(w):
        x = w - omega_k1
        return ((x >= -0.5 * d_omega) & (x < 0.5 * d_omega)).astype(float)

    amp = ind(wk) / (wp - params.omega + 1j * half) + ind(wp) / (wk - params.omega + 1j * half)
    rho = params.gamma / (4.0 * math.pi * d_omega) * np.abs(amp) ** 2
    return _out(rho)


def single_energy_power(t, params: PhysicalParams, omega_k1: float = 1.0):
    """Field energy (units hbar) and radiated power (units hbar*omega*gamma).

    Both are the on-shell closed forms including the g^2 stimulated terms.
    The e^{-gamma t} term inside the energy bracket has weight 1, which
    makes the power exactly dE/dt and, on resonance, makes the energy equal
    omega*(|b|^2 + 2|c|^2) built from the probabilities.
    """
    t = _as_array(t)
    om, gam, g2 = params.omega, params.gamma, params.g**2
    det, lor = _single_terms(params, omega_k1)
    env = np.exp(-0.5 * gam * t)
    cos, sin = np.cos(det * t), np.sin(det * t)
    pref = 2.0 * g2 * omega_k1 / lor
    energy = (om + omega_k1) - om * np.exp(-gam * t) + pref * (
        1.0
        - gam * det * env * sin / lor
        - (1.0 + 0.5 * gam**2 / lor) * env * cos
        + np.exp(-gam * t)
    )
    power = om * gam * np.exp(-gam * t) + g2 * omega_k1 / lor * (
        (-1.0 + gam**2 / lor) * gam * env * cos
        + 2.0 * (1.0 + gam**2 / lor) * det * env * sin
        - 2.0 * gam * np.exp(-gam * t)
    )
    return _out(energy), _out(power / (om * gam))


NARROW_CHANNEL = 1e-6

# -- two atoms ------------------------------------------------------------------


@dataclass(frozen=True)
class TwoAtomRates:
    """Decay rates of the symmetric and antisymmetric one-excitation states."""

    gamma_plus: float
    gamma_minus: float
    gamma: float
    k0r: float

    def __post_init__(self):
        if abs(self.gamma_plus + self.gamma_minus - 2.0 * self.gamma) > 1e-12 * self.gamma:
            raise ValueError("rates violate gamma_plus + gamma_minus = 2*gamma")


def two_atom_rates(k0r: float, params: PhysicalParams) -> TwoAtomRates:
    """gamma*(1 +/- sinc(k0 r)); gamma_minus is set so the sum is exact."""
    if k0r < 0:
        raise ValueError(f"k0r must be >= 0, got {k0r}")
    gp = params.gamma * (1.0 + sinc(k0r))
    gm = 2.0 * params.gamma - gp
    return TwoAtomRates(gp, gm, params.gamma, float(k0r))


def superradiant_populations(t, k0r: float, params: PhysicalParams):
    """Populations of the symmetric (+) and antisymmetric (-) mixed states.

    (G+/G-)(e^{-G+ t} - e^{-2 gamma t}) rewritten as G+ e^{-G+ t} W(G-, t)
    with W the decay window, which stays finite as G- -> 0.
    """
    r = two_atom_rates(k0r, params)
    t = _as_array(t)
    plus = r.gamma_plus * np.exp(-r.gamma_plus * t) * decay_window(r.gamma_minus, t)
    minus = r.gamma_minus * np.exp(-r.gamma_minus * t) * decay_window(r.gamma_plus, t)
    return _out(plus), _out(minus)


def two_atom_probabilities(t, k0r: float, params: PhysicalParams):
    """(prob_a, prob_b, prob_c, p_total) for two initially excited atoms."""
    t = _as_array(t)
    plus, minus = superradiant_populations(t, k0r, params)
    prob_a = np.exp(-2.0 * params.gamma * t)
    prob_b = plus + minus
    prob_c = -np.expm1(-2.0 * params.gamma * t) - prob_b
    return _out(prob_a), _out(prob_b), _out(prob_c), _out(prob_a + prob_b + prob_c)


def two_atom_power(t, k0r: float, params: PhysicalParams):
    """(p_plus, p_minus, p_c, p_total) in units of hbar*omega*gamma.

    p_plus and p_minus come from the two mixed-state channels, p_c from the
    two-photon state.  The forms are regrouped so that G- -> 0 is regular.
    """
    r = two_atom_rates(k0r, params)
    gp, gm, gam = r.gamma_plus, r.gamma_minus, r.gamma
    t = _as_array(t)
    e2 = np.exp(-2.0 * gam * t)
    ep = np.exp(-gp * t)
    em = np.exp(-gm * t)
    wm = decay_window(gm, t)
    p_plus = gp * e2 - gp * gp * ep * wm
    p_minus = (gm / gp) * (2.0 * gam * e2 - gm * em)
    total = gp * ep * (2.0 * gam * wm - 1.0) + 4.0 * gam * e2 - 2.0 * gam * (gm / gp) * e2 + (gm * gm / gp) * em
    p_c = total - p_plus - p_minus
    s = params.omega / (params.omega * gam)
    return _out(p_plus * s), _out(p_minus * s), _out(p_c * s), _out(total * s)


def _two_atom_term(x, y, g_pm: float, gam: float):
    s = x + y
    return (
        g_pm**2
        * (s * s + g_pm**2)
        / (8.0 * math.pi**2 * (s * s + gam**2) * (x * x + 0.25 * g_pm**2) * (y * y + 0.25 * g_pm**2))
    )


def two_atom_spectrum(omega_k, omega_p, k0r: float, params: PhysicalParams):
    """Two-photon spectral density after both atoms have decayed."""
    r = two_atom_rates(k0r, params)
    x = params.omega - _as_array(omega_k)
    y = params.omega - _as_array(omega_p)
    rho = 0.0
    for g_pm in (r.gamma_plus, r.gamma_minus):
        if g_pm > 0:
            rho = rho + _two_atom_term(x, y, g_pm, r.gamma)
    return _out(np.asarray(rho, dtype=float))


def two_atom_spectrum_total(k0r: float, params: PhysicalParams) -> float:
    """Integral of the two-atom density over the whole plane.

    Each channel is integrated separately with coordinates matched to its
    own line width.  A channel narrower than 1e-6*gamma carries a weight
    below 1e-5 and is skipped, since adaptive quadrature cannot resolve it.
    """
    r = two_atom_rates(k0r, params)
    total = 0.0
    for g_pm in (r.gamma_plus, r.gamma_minus):
        if g_pm > NARROW_CHANNEL * r.gamma:
            total += pair_plane_integral(
                lambda x, y, g=g_pm: _two_atom_term(x, y, g, r.gamma), 0.5 * g_pm, g_pm
            )
    return total


# -- small systems ----------------------------------------------------------------


def _check_n(n_atoms: int, minimum: int) -> int:
    if int(n_atoms) != n_atoms or n_atoms < 2:
        raise ValueError(f"n_atoms must be an integer >= 2, got {n_atoms}")
    if n_atoms < minimum:
        raise RegimeMismatch(
            f"the small-system form needs N >= {minimum}; use the two-atom functions at k0r = 0"
        )
    return int(n_atoms)


def small_system_probabilities(t, n_atoms: int, params: PhysicalParams):
    """(prob_a, prob_b, prob_c, p_total) for N atoms sharing one phase.

    N = 2 is the continuous limit of the general-N form.
    """
    n = _check_n(n_atoms, 2)
    gam = params.gamma
    t = _as_array(t)
    prob_a = np.exp(-2.0 * (n - 1) * gam * t)
    prob_b = 2.0 * (n - 1) * gam * np.exp(-n * gam * t) * decay_window((n - 2) * gam, t)
    prob_c = -np.expm1(-2.0 * (n - 1) * gam * t) - prob_b
    return _out(prob_a), _out(prob_b), _out(prob_c), _out(prob_a + prob_b + prob_c)


def _small_term(x, y, n: int, gam: float):
    s = x + y
    return (
        n * (n - 1) * gam**2 * (s * s + n * n * gam**2)
        / (
            4.0 * math.pi**2
            * (s * s + (n - 1) ** 2 * gam**2)
            * (x * x + 0.25 * n * n * gam**2)
            * (y * y + 0.25 * n * n * gam**2)
        )
    )


def small_system_spectrum(omega_k, omega_p, n_atoms: int, params: PhysicalParams):
    """Two-photon spectral density of the N-atom small system (N >= 3)."""
    n = _check_n(n_atoms, 3)
    x = params.omega - _as_array(omega_k)
    y = params.omega - _as_array(omega_p)
    return _out(_small_term(x, y, n, params.gamma))


def small_system_spectrum_total(n_atoms: int, params: PhysicalParams) -> float:
    n = _check_n(n_atoms, 3)
    gam = params.gamma
    return pair_plane_integral(lambda x, y: _small_term(x, y, n, gam), 0.5 * n * gam, n * gam)


def small_system_power(t, n_atoms: int, params: PhysicalParams):
    """Total radiated power in units of hbar*omega*gamma (N >= 3).

    Written as 2(N-1) e^{-N gamma t}(1 + 2 gamma W((N-2) gamma, t)), so the
    peak value 2(N-1) at t = 0 is exact.
    """
    n = _check_n(n_atoms, 3)
    gam = params.gamma
    t = _as_array(t)
    p = 2.0 * (n - 1) * np.exp(-n * gam * t) * (1.0 + 2.0 * gam * decay_window((n - 2) * gam, t))
    return _out(p)


def giant_atom_power(t, n_atoms: int, params: PhysicalParams):
    """Large-N limit 2N e^{-N gamma t} of the small-system power."""
    t = _as_array(t)
    return _out(2.0 * n_atoms * np.exp(-n_atoms * params.gamma * t))


# -- shared diagnostics -------------------------------------------------------------


def ridge_ratio(spectrum, omega: float, offset: float) -> float:
    """rho(omega+d, omega-d) / rho(omega+d, omega+d).

    Values above one mean weight is concentrated on the energy-conserving
    anti-diagonal; one means the two photons are uncorrelated.
    """
    on = spectrum(omega + offset, omega - offset)
    off = spectrum(omega + offset, omega + offset)
    return float(on / off)
