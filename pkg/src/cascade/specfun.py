"""Special functions and geometry factors.

Spherical Bessel functions and spherical harmonics come from
``scipy.special``; this module adds the pieces built on them: the
continuum eigenvalues lambda_l and couplings beta_l, and the Lamb-shift
diagnostics of a cutoff-regularized scalar field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import PhysicalParams
from .errors import CutoffBelowResonance

GL_NODES = 64


def sinc(x):
    """Unnormalized sinc, sin(x)/x with sinc(0) = 1."""
    out = np.sinc(np.asarray(x, dtype=float) / np.pi)
    return float(out) if out.ndim == 0 else out


def spherical_bessel_j(l: int, x):
    """Spherical Bessel function j_l(x) for l >= -1.

    j_{-1}(x) = cos(x)/x extends the family downward; it is what the closed
    form for lambda_0 needs.
    """
    if int(l) != l or l < -1:
        raise ValueError(f"spherical_bessel_j needs integer l >= -1, got {l}")
    x = np.asarray(x, dtype=float)
    if l == -1:
        with np.errstate(divide="ignore"):
            out = np.cos(x) / x
    else:
        out = special.spherical_jn(int(l), x)
    return float(out) if out.ndim == 0 else out


def spherical_harmonic(l: int, m: int, theta, phi):
    """Complex Y_lm(theta, phi) with the Condon-Shortley phase.

    ``theta`` is the polar angle and ``phi`` the azimuth.
    """
    if int(l) != l or int(m) != m or l < 0 or abs(m) > l:
        raise ValueError(f"spherical_harmonic needs integers |m| <= l, got l={l}, m={m}")
    out = special.sph_harm_y(int(l), int(m), np.asarray(theta, float), np.asarray(phi, float))
    return complex(out) if np.ndim(out) == 0 else out


def _gauss_legendre_panels(upper: float, wavenumber: float):
    """Nodes and weights on [0, upper] with GL_NODES points per wavelength."""
    n_panels = max(1, int(math.ceil(upper * max(wavenumber, 1.0) / (2.0 * math.pi))))
    x0, w0 = np.polynomial.legendre.leggauss(GL_NODES)
    edges = np.linspace(0.0, upper, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    weights = (half[:, None] * w0[None, :]).ravel()
    return nodes, weights


def lambda_l(l: int, n_atoms: int, k0R: float) -> float:
    """Eigenvalue of the uniform-sphere kernel for partial wave ``l``.

    (3N/2) [j_l(x)^2 - j_{l-1}(x) j_{l+1}(x)] at x = k0*R.
    """
    if l < 0:
        raise ValueError(f"l must be >= 0, got {l}")
    x = float(k0R)
    if x <= 0:
        raise ValueError(f"k0R must be > 0, got {k0R}")
    jl = spherical_bessel_j(l, x)
    return float(1.5 * n_atoms * (jl * jl - spherical_bessel_j(l - 1, x) * spherical_bessel_j(l + 1, x)))


def lambda_l_quadrature(l: int, n_atoms: int, k0R: float) -> float:
    """Radial integral 4*pi*rho0 * int_0^R r^2 j_l(k0 r)^2 dr."""
    return beta_l(l, 1.0, n_atoms, k0R)


def beta_l(l: int, k: float, n_atoms: int, k0R: float) -> float:
    """Coupling 4*pi*rho0 * int_0^R r^2 j_l(k0 r) j_l(k r) dr.

    ``k`` is measured in units of k0, so beta_l(l, 1, ...) = lambda_l.
    """
    if k <= 0:
        raise ValueError(f"k must be > 0, got {k}")
    u, w = _gauss_legendre_panels(float(k0R), float(k))
    integrand = u * u * special.spherical_jn(l, u) * special.spherical_jn(l, k * u)
    return float(3.0 * n_atoms / k0R**3 * np.dot(w, integrand))


@dataclass(frozen=True)
class CutoffSpec:
    """Short-wavelength cutoff Lambda, measured in units of 1/k0."""

    lambda_cut: float

    @property
    def kappa(self) -> float:
        """Cutoff wavenumber 2*pi/Lambda in units of k0."""
        return 2.0 * math.pi / self.lambda_cut

    def check(self) -> "CutoffSpec":
        if not self.lambda_cut > 0 or self.kappa <= 1.0:
            raise CutoffBelowResonance(
                f"cutoff 2*pi/Lambda = {self.kappa:.4g} k0 must exceed the resonance k0"
            )
        return self


@dataclass(frozen=True)
class SelfEnergy:
    """Sigma = delta_omega - i*gamma/2."""

    delta_omega: float
    gamma: float

    @property
    def sigma(self) -> complex:
        return complex(self.delta_omega, -0.5 * self.gamma)


def self_energy(params: PhysicalParams, cutoff: CutoffSpec) -> SelfEnergy:
    """Lamb shift and decay rate of a single atom.

    The principal-value mode sum up to the cutoff kappa*k0 gives
    delta_omega = -(gamma/2pi) [kappa^2/2 + kappa + ln(kappa - 1)].
    """
    kappa = cutoff.check().kappa
    shift = -params.gamma / (2.0 * math.pi) * (0.5 * kappa**2 + kappa + math.log(kappa - 1.0))
    return SelfEnergy(shift, params.gamma)


@dataclass(frozen=True)
class InteractionEnergy:
    """Exchange shift and cross decay rate of an atom pair."""

    delta_omega_r: float
    gamma_r: float
    valid: bool


SMALL_SEPARATION = 0.1


def interaction_energy(k0r: float, params: PhysicalParams, cutoff: CutoffSpec) -> InteractionEnergy:
    """Pair interaction Delta = delta_omega_r - i*gamma_r/2.

    The real part uses the small-separation expansion; ``valid`` is False
    when k0*r is not small (or zero) and the value should not be trusted.
    """
    if k0r < 0:
        raise ValueError(f"k0r must be >= 0, got {k0r}")
    gamma_r = params.gamma * sinc(k0r)
    kappa = cutoff.check().kappa
    if k0r == 0:
        return InteractionEnergy(math.nan, gamma_r, False)
    x = float(k0r)
    shift = params.gamma / (2.0 * math.pi) * (
        (math.cos(kappa * x) - 1.0) / (x * x) + math.pi / (2.0 * x) + math.log(x)
    )
    return InteractionEnergy(shift, gamma_r, x < SMALL_SEPARATION)
