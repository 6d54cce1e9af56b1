"""Closed forms for a uniform sphere of atoms treated as a continuum.

The pair amplitude is expanded in spherical harmonics; each (l, m) term
decays independently at the collective rate lambda_l*gamma.  Initial
coefficients are rescaled by one global factor so the state is normalized:
sum_lm lambda_l^2 |a_lm(0)|^2 / (8 pi^2) = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .core import Continuum, PhysicalParams, pair_plane_integral
from .errors import UnnormalizedInitialState
from .specfun import lambda_l, spherical_harmonic

NORM_TOL = 1e-9
TRUNCATION = 1e-6
EIGHT_PI2 = 8.0 * math.pi**2


@dataclass(frozen=True)
class ContinuumMode:
    """One angular term: indices, initial coefficient and eigenvalue."""

    l: int
    m: int
    a0: complex
    lam: float

    def __post_init__(self):
        if self.l < 0 or abs(self.m) > self.l:
            raise ValueError(f"invalid angular indices (l={self.l}, m={self.m})")
        if not self.lam > 0:
            raise ValueError(f"eigenvalue must be > 0, got {self.lam}")

    @property
    def weight(self) -> float:
        """lambda_l^2 |a_lm(0)|^2 / (8 pi^2), this mode's share of the norm."""
        return self.lam**2 * abs(self.a0) ** 2 / EIGHT_PI2


@dataclass(frozen=True)
class ModeTable:
    """Normalized modes plus a record of how they were obtained."""

    modes: tuple
    raw: tuple
    scale: float
    dropped: tuple = field(default=())

    def lambda_table(self) -> dict:
        return {m.l: m.lam for m in self.modes}


def normalize_modes(geom: Continuum) -> ModeTable:
    """Attach eigenvalues to the initial coefficients and normalize them.

    Terms whose eigenvalue is below TRUNCATION times the largest eigenvalue
    are dropped and listed in ``dropped``.  ``raw`` keeps the coefficients
    as given and ``scale`` is the factor applied to all of them.
    """
    coeffs = tuple((int(l), int(m), complex(a)) for l, m, a in geom.initial_coeffs)
    l_top = max(max(l for l, _, _ in coeffs), int(math.ceil(geom.k0R)) + 2)
    lams = {l: lambda_l(l, geom.n_atoms, geom.k0R) for l in range(l_top + 1)}
    cut = TRUNCATION * max(lams.values())

    kept, dropped = [], []
    for l, m, a in coeffs:
        (kept if lams[l] >= cut else dropped).append((l, m, a))
    norm = sum(lams[l] ** 2 * abs(a) ** 2 for l, _, a in kept) / EIGHT_PI2
    if not norm > 0:
        raise UnnormalizedInitialState("initial coefficients carry no weight after truncation")
    scale = 1.0 / math.sqrt(norm)
    modes = tuple(ContinuumMode(l, m, a * scale, lams[l]) for l, m, a in kept)
    return ModeTable(modes, coeffs, scale, tuple(dropped))


def _checked(modes: Sequence[ContinuumMode]) -> Sequence[ContinuumMode]:
    total = sum(m.weight for m in modes)
    if abs(total - 1.0) > NORM_TOL:
        raise UnnormalizedInitialState(
            f"sum lambda^2 |a|^2 / 8pi^2 = {total:.12g}; normalize the modes first"
        )
    return modes


def _arrays(modes: Sequence[ContinuumMode]):
    lam = np.array([m.lam for m in modes])
    w = np.array([abs(m.a0) ** 2 for m in modes])
    return lam, w


def continuum_probabilities(t, modes: Sequence[ContinuumMode], params: PhysicalParams):
    """(prob_a, prob_b, prob_c, p_total) summed over the angular terms."""
    lam, w = _arrays(_checked(modes))
    t = np.asarray(t, dtype=float)
    x = np.multiply.outer(t, lam * params.gamma)
    e1 = np.exp(-x)
    weight = lam**2 * w / EIGHT_PI2
    prob_a = (e1 * e1) @ weight
    prob_b = 2.0 * (e1 * (-np.expm1(-x))) @ weight
    prob_c = np.expm1(-x) ** 2 @ weight
    total = prob_a + prob_b + prob_c
    if t.ndim == 0:
        return float(prob_a), float(prob_b), float(prob_c), float(total)
    return prob_a, prob_b, prob_c, total


def _lorentz_pair(x, y, lam: float, gam: float):
    h2 = 0.25 * (lam * gam) ** 2
    return 1.0 / ((x * x + h2) * (y * y + h2))


def continuum_spectrum(omega_k, omega_p, modes: Sequence[ContinuumMode], params: PhysicalParams):
    """Two-photon density: a weighted sum of products of Lorentzians.

    Each term has half-width lambda_l*gamma/2 on both axes, so a single term
    carries no correlation between the photon frequencies.
    """
    lam, w = _arrays(_checked(modes))
    gam = params.gamma
    x = params.omega - np.asarray(omega_k, dtype=float)
    y = params.omega - np.asarray(omega_p, dtype=float)
    rho = 0.0
    for li, wi in zip(lam, w):
        rho = rho + gam**2 / (32.0 * math.pi**4) * li**4 * wi * _lorentz_pair(x, y, li, gam)
    rho = np.asarray(rho, dtype=float)
    return float(rho) if rho.ndim == 0 else rho


def continuum_spectrum_total(modes: Sequence[ContinuumMode], params: PhysicalParams) -> float:
    """Integral of the continuum density over the whole plane, term by term."""
    gam = params.gamma
    total = 0.0
    for m in _checked(modes):
        pref = gam**2 / (32.0 * math.pi**4) * m.lam**4 * abs(m.a0) ** 2
        total += pref * pair_plane_integral(
            lambda x, y, lam=m.lam: _lorentz_pair(x, y, lam, gam), 0.5 * m.lam * gam, m.lam * gam
        )
    return total


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Schmidt weights sigma_lm of the emitted two-photon state."""

    entries: tuple

    def __post_init__(self):
        for l, m, s in self.entries:
            if s < 0:
                raise ValueError(f"negative Schmidt weight for (l={l}, m={m})")

    @property
    def weights(self) -> np.ndarray:
        return np.array([s for _, _, s in self.entries], dtype=float)


def schmidt_spectrum(modes: Sequence[ContinuumMode]) -> SchmidtSpectrum:
    """sigma_lm = |sqrt(2) lambda_l a_lm(0) / (4 pi)|^2 for each term."""
    entries = tuple((m.l, m.m, m.weight) for m in _checked(modes))
    return SchmidtSpectrum(entries)


def von_neumann_entropy(spectrum: SchmidtSpectrum | Iterable[float]) -> float:
    """S = -sum sigma ln sigma with 0 ln 0 = 0."""
    if isinstance(spectrum, SchmidtSpectrum):
        sigma = spectrum.weights
    else:
        sigma = np.asarray(list(spectrum), dtype=float)
    if np.any(sigma < 0):
        raise ValueError("Schmidt weights must be non-negative")
    nz = sigma[sigma > 0]
    # weights of 1 + eps would otherwise give -0.0 or -1e-16
    return max(0.0, float(-np.sum(nz * np.log(nz))))


def continuum_power(t, modes: Sequence[ContinuumMode], params: PhysicalParams):
    """Radiated power in units of hbar*omega*gamma."""
    lam, w = _arrays(_checked(modes))
    t = np.asarray(t, dtype=float)
    p = np.exp(-np.multiply.outer(t, lam * params.gamma)) @ (lam**3 * w) / (4.0 * math.pi**2)
    return float(p) if p.ndim == 0 else p


def two_mode_coeffs(sigma00: float, n_atoms: int, k0R: float) -> tuple:
    """s-wave plus p_z-wave coefficients giving Schmidt weights (sigma00, 1 - sigma00)."""
    if not 0.0 <= sigma00 <= 1.0:
        raise ValueError(f"sigma00 must lie in [0, 1], got {sigma00}")
    lam0 = lambda_l(0, n_atoms, k0R)
    lam1 = lambda_l(1, n_atoms, k0R)
    a00 = math.sqrt(EIGHT_PI2 * sigma00) / lam0
    a10 = math.sqrt(EIGHT_PI2 * (1.0 - sigma00)) / lam1
    return ((0, 0, complex(a00)), (1, 0, complex(a10)))


def entropy_sweep(n_atoms: int = 100, k0R: float = 4.0, n_points: int = 101):
    """Entropy across the s/p_z two-mode family as sigma00 runs over [0, 1]."""
    sig = np.linspace(0.0, 1.0, n_points)
    ent = np.empty_like(sig)
    for i, s in enumerate(sig):
        table = normalize_modes(Continuum(n_atoms, k0R, two_mode_coeffs(s, n_atoms, k0R)))
        ent[i] = von_neumann_entropy(schmidt_spectrum(table.modes))
    return sig, ent


# -- single-photon bases --------------------------------------------------------


def basis_amplitudes(omega, l: int, m: int, direction, t, params: PhysicalParams, lam: float):
    """Amplitudes (psi_lm, phi_lm) of the single-photon Schmidt bases.

    ``direction`` is (theta, phi) of the photon wavevector.  psi carries
    e^{+i omega t} and phi carries e^{-i omega t}; both are Lorentzians of
    half-width lam*gamma/2 in frequency.
    """
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l (l={l}, m={m})")
    theta, az = direction
    ylm = spherical_harmonic(l, m, theta, az)
    omega = np.asarray(omega, dtype=float)
    half = 0.5j * lam * params.gamma
    pref = math.sqrt(4.0 * math.pi * lam) * params.g
    psi = pref * (-1j) ** l * np.exp(1j * omega * t) / (omega - params.omega - half) * ylm
    phi = pref * (1j) ** l * np.exp(-1j * omega * t) / (omega - params.omega + half) * ylm
    return psi, phi


def onshell_measure(params: PhysicalParams) -> float:
    """Density that turns a mode sum into gamma/(8 pi^2 g^2) int d omega d k_hat."""
    if params.g <= 0:
        raise ValueError("the on-shell measure needs g > 0")
    return params.gamma / (EIGHT_PI2 * params.g**2)


def basis_overlap(
    first: tuple,
    second: tuple,
    params: PhysicalParams,
    which: str = "psi",
    n_theta: int = 24,
    n_phi: int = 48,
) -> complex:
    """On-shell inner product of two basis functions.

    ``first`` and ``second`` are (l, m, lam).  The time phases cancel in the
    product, so the result is time independent.  The frequency integral runs
    over the whole line by adaptive quadrature; the angular integral uses a
    Gauss-Legendre by trapezoid product rule, exact for the degrees used.
    """
    if which not in ("psi", "phi"):
        raise ValueError(f"which must be 'psi' or 'phi', got {which!r}")
    (l1, m1, lam1), (l2, m2, lam2) = first, second
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    th, ph = np.meshgrid(np.arccos(x), 2.0 * math.pi * np.arange(n_phi) / n_phi, indexing="ij")
    wt = np.outer(wx, np.full(n_phi, 2.0 * math.pi / n_phi))
    y1 = spherical_harmonic(l1, m1, th, ph)
    y2 = spherical_harmonic(l2, m2, th, ph)
    angular = complex(np.sum(wt * y1 * np.conj(y2))) if which == "psi" else complex(np.sum(wt * np.conj(y1) * y2))

    sgn = -1.0 if which == "psi" else 1.0
    g, om, gam = params.g, params.omega, params.gamma

    def radial(w):
        f1 = math.sqrt(4.0 * math.pi * lam1) * g * (sgn * 1j) ** l1 / (w - om + sgn * 0.5j * lam1 * gam)
        f2 = math.sqrt(4.0 * math.pi * lam2) * g * (sgn * 1j) ** l2 / (w - om + sgn * 0.5j * lam2 * gam)
        return f1 * np.conj(f2) if which == "psi" else np.conj(f1) * f2

    re, _ = integrate.quad(lambda w: radial(w).real, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
    im, _ = integrate.quad(lambda w: radial(w).imag, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-11, limit=400)
    return onshell_measure(params) * complex(re, im) * angular
