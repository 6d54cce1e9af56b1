"""Shared domain types, unit conventions and validation.

Units: hbar = c = 1 and the atomic frequency ``omega`` sets the frequency
scale (default 1).  Times are in units of 1/omega and radiated power is
reported in units of hbar*omega*gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np
from scipy import integrate

from .errors import (
    AsymmetricInitialCoeffs,
    BadGeometry,
    ConfigError,
    CouplingTooStrong,
    NonPositiveFrequency,
)

EPS = 1e-9
MAX_WEAK_COUPLING = 0.05


@dataclass(frozen=True)
class PhysicalParams:
    """Atomic frequency, single-atom decay rate and atom-field coupling."""

    omega: float = 1.0
    gamma: float = 0.1
    g: float = 0.005

    @property
    def weak_coupling(self) -> bool:
        return self.g / self.omega <= MAX_WEAK_COUPLING


@dataclass(frozen=True)
class SingleAtom:
    """One excited atom plus one incident photon at ``omega_k1``."""

    omega_k1: float = 1.0
    n_atoms = 1


@dataclass(frozen=True)
class TwoAtom:
    """Two excited atoms at dimensionless separation k0*r."""

    k0r: float = 1.0
    n_atoms = 2


@dataclass(frozen=True)
class SmallSystem:
    """N atoms confined well inside one wavelength (all phases equal)."""

    n_atoms: int = 3


@dataclass(frozen=True)
class Continuum:
    """Uniform sphere of N atoms with radius k0*R.

    ``initial_coeffs`` lists ``(l, m, a_lm(0))`` triples for the pair
    amplitude expanded in spherical harmonics.
    """

    n_atoms: int = 100
    k0R: float = 4.0
    initial_coeffs: tuple = ((0, 0, 1.0 + 0.0j),)


Geometry = Union[SingleAtom, TwoAtom, SmallSystem, Continuum]


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return value


def _normalize_coeffs(coeffs) -> tuple:
    out = {}
    for entry in coeffs:
        if len(entry) != 3:
            raise BadGeometry(f"coefficient entries are (l, m, a), got {entry!r}")
        l, m, a = entry
        if int(l) != l or int(m) != m:
            raise BadGeometry(f"l and m must be integers, got ({l}, {m})")
        l, m = int(l), int(m)
        if l < 0 or abs(m) > l:
            raise BadGeometry(f"invalid angular indices (l={l}, m={m})")
        a = complex(a)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise BadGeometry(f"non-finite coefficient for (l={l}, m={m})")
        if (l, m) in out:
            raise BadGeometry(f"duplicate coefficient for (l={l}, m={m})")
        out[(l, m)] = a
    if not out:
        raise BadGeometry("continuum regime needs at least one coefficient")
    for (l, m), a in out.items():
        partner = out.get((l, -m), 0.0)
        if abs(partner - a) > EPS * max(1.0, abs(a)):
            raise AsymmetricInitialCoeffs(
                f"a(l={l}, m={-m}) = {partner} differs from a(l={l}, m={m}) = {a}"
            )
    return tuple((l, m, out[(l, m)]) for l, m in sorted(out))


def validate_params(params: PhysicalParams, geom: Geometry) -> tuple[PhysicalParams, Geometry]:
    """Check every invariant and return normalized copies of the inputs."""
    omega = _finite("omega", params.omega)
    gamma = _finite("gamma", params.gamma)
    g = _finite("g", params.g)
    if omega <= 0 or gamma <= 0:
        raise NonPositiveFrequency(f"omega and gamma must be > 0 (omega={omega}, gamma={gamma})")
    if g < 0:
        raise NonPositiveFrequency(f"coupling g must be >= 0, got {g}")
    if g / omega > MAX_WEAK_COUPLING:
        raise CouplingTooStrong(
            f"g/omega = {g / omega:.4g} exceeds the weak-coupling limit {MAX_WEAK_COUPLING}"
        )
    params = PhysicalParams(omega, gamma, g)

    if isinstance(geom, SingleAtom):
        w = _finite("omega_k1", geom.omega_k1)
        if w <= 0:
            raise NonPositiveFrequency(f"omega_k1 must be > 0, got {w}")
        geom = SingleAtom(w)
    elif isinstance(geom, TwoAtom):
        k0r = _finite("k0r", geom.k0r)
        if k0r < 0:
            raise BadGeometry(f"k0r must be >= 0, got {k0r}")
        geom = TwoAtom(k0r)
    elif isinstance(geom, SmallSystem):
        if int(geom.n_atoms) != geom.n_atoms or geom.n_atoms < 2:
            raise BadGeometry(f"n_atoms must be an integer >= 2, got {geom.n_atoms}")
        geom = SmallSystem(int(geom.n_atoms))
    elif isinstance(geom, Continuum):
        if int(geom.n_atoms) != geom.n_atoms or geom.n_atoms < 2:
            raise BadGeometry(f"n_atoms must be an integer >= 2, got {geom.n_atoms}")
        k0R = _finite("k0R", geom.k0R)
        if k0R <= 0:
            raise BadGeometry(f"k0R must be > 0, got {k0R}")
        geom = Continuum(int(geom.n_atoms), k0R, _normalize_coeffs(geom.initial_coeffs))
    else:
        raise BadGeometry(f"unknown geometry {geom!r}")
    return params, geom


def _frozen(x, dtype=complex) -> np.ndarray:
    arr = np.array(x, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TwoExcitationState:
    """Amplitudes of the two-excitation sector on a discrete mode set.

    ``a[i, j]``: atoms i and j excited, ``b[i, k]``: atom i excited and one
    photon in mode k, ``c[k, p]``: two photons.  Arrays are copied and
    frozen on construction.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    mode_set: object = None

    def __post_init__(self):
        a, b, c = _frozen(self.a), _frozen(self.b), _frozen(self.c)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"a must be square, got shape {a.shape}")
        if b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise ValueError(f"b must be (n_atoms, n_modes), got shape {b.shape}")
        if c.shape != (b.shape[1], b.shape[1]):
            raise ValueError(f"c must be (n_modes, n_modes), got shape {c.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @classmethod
    def zeros(cls, n_atoms: int, n_modes: int, mode_set=None) -> "TwoExcitationState":
        return cls(
            np.zeros((n_atoms, n_atoms)),
            np.zeros((n_atoms, n_modes)),
            np.zeros((n_modes, n_modes)),
            mode_set,
        )

    @property
    def n_atoms(self) -> int:
        return self.a.shape[0]

    @property
    def n_modes(self) -> int:
        return self.c.shape[0]

    def symmetry_residual(self) -> float:
        """Largest violation of a_ij = a_ji, a_ii = 0 and c_kp = c_pk."""
        res = 0.0
        if self.a.size:
            res = max(np.abs(self.a - self.a.T).max(), np.abs(np.diag(self.a)).max())
        if self.c.size:
            res = max(res, np.abs(self.c - self.c.T).max())
        return float(res)

    def symmetrized(self) -> "TwoExcitationState":
        """Project onto the bosonic-symmetric subspace."""
        a = 0.5 * (self.a + self.a.T)
        np.fill_diagonal(a, 0.0)
        c = 0.5 * (self.c + self.c.T)
        return replace(self, a=a, b=self.b, c=c)

    def check(self, tol: float = EPS) -> "TwoExcitationState":
        res = self.symmetry_residual()
        if res > tol:
            raise ValueError(f"state violates exchange symmetry by {res:.3g}")
        return self


def mode_probabilities(state: TwoExcitationState) -> tuple[float, float, float, float]:
    """Mode-independent probabilities |a|^2, |b|^2, |c|^2 and their total."""
    pa = 2.0 * float(np.sum(np.abs(state.a) ** 2))
    pb = float(np.sum(np.abs(state.b) ** 2))
    pc = 2.0 * float(np.sum(np.abs(state.c) ** 2))
    return pa, pb, pc, pa + pb + pc


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Sampled probabilities and radiated power (units hbar*omega*gamma)."""

    times: np.ndarray
    prob_a: np.ndarray
    prob_b: np.ndarray
    prob_c: np.ndarray
    p_total: np.ndarray
    power: np.ndarray
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("times", "prob_a", "prob_b", "prob_c", "p_total", "power"):
            object.__setattr__(self, name, _frozen(getattr(self, name), float))
        object.__setattr__(
            self, "extra", {k: _frozen(v, float) for k, v in self.extra.items()}
        )
        n = self.times.size
        for name in ("prob_a", "prob_b", "prob_c", "p_total", "power", *self.extra):
            col = getattr(self, name) if name in self.__dataclass_fields__ else self.extra[name]
            if col.shape != (n,):
                raise ValueError(f"column {name} has shape {col.shape}, expected ({n},)")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        for name in ("prob_a", "prob_b", "prob_c"):
            if n and getattr(self, name).min() < -EPS:
                raise ValueError(f"{name} has negative entries")

    def columns(self) -> dict:
        cols = {
            "t": self.times,
            "prob_a": self.prob_a,
            "prob_b": self.prob_b,
            "prob_c": self.prob_c,
            "p_total": self.p_total,
            "power": self.power,
        }
        cols.update(self.extra)
        return cols


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Two-photon spectral density sampled on a rectangular grid."""

    omega_k: np.ndarray
    omega_p: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        for name in ("omega_k", "omega_p", "rho"):
            object.__setattr__(self, name, _frozen(getattr(self, name), float))
        if self.rho.shape != (self.omega_k.size, self.omega_p.size):
            raise ValueError("rho shape does not match the axes")
        if self.rho.size and self.rho.min() < -EPS:
            raise ValueError("spectral density must be non-negative")

    def is_symmetric(self, tol: float = EPS) -> bool:
        if self.omega_k.shape != self.omega_p.shape or not np.allclose(self.omega_k, self.omega_p):
            return False
        scale = max(float(np.abs(self.rho).max()), 1e-300)
        return bool(np.abs(self.rho - self.rho.T).max() <= tol * scale)

    def total(self) -> float:
        """Riemann sum of the density over the grid cells."""
        dk = np.gradient(self.omega_k) if self.omega_k.size > 1 else np.ones(1)
        dp = np.gradient(self.omega_p) if self.omega_p.size > 1 else np.ones(1)
        return float(dk @ self.rho @ dp)


def default_time_grid(params: PhysicalParams, n: int = 400, t_max: float | None = None) -> np.ndarray:
    """t = 0 followed by ``n`` log-spaced points on [1e-3/gamma, t_max]."""
    t_max = 50.0 / params.gamma if t_max is None else float(t_max)
    t_min = min(1e-3 / params.gamma, t_max / 10.0)
    return np.concatenate([[0.0], np.geomspace(t_min, t_max, n)])


def pair_plane_integral(
    f: Callable[[float, float], float],
    width: float,
    sum_width: float,
    epsabs: float = 1e-12,
    epsrel: float = 1e-10,
) -> float:
    """Integrate a two-photon density f(x, y) over the whole plane.

    ``f`` must be invariant under x <-> y and under (x, y) -> (-x, -y), which
    holds for every detuning-space density here.  The plane is folded onto
    s = x + y > 0, x < s/2 (a quarter of the area), and both coordinates are
    mapped by x = width*tan(u), s = sum_width*tan(v) so Lorentzian tails
    are included exactly instead of being cut at a finite window.  ``width``
    is the single-photon half-width and ``sum_width`` the scale of structure
    along the anti-diagonal.
    """
    h = 0.5 * math.pi

    def mapped(u, v):
        cu, cv = math.cos(u), math.cos(v)
        if cu == 0.0 or cv == 0.0:
            return 0.0
        s = sum_width * math.tan(v)
        x = width * math.tan(u)
        return f(x, s - x) * width * sum_width / (cu * cu * cv * cv)

    def upper(v):
        return h if v >= h else math.atan(sum_width * math.tan(v) / (2.0 * width))

    val, _ = integrate.dblquad(mapped, 0.0, h, -h, upper, epsabs=epsabs, epsrel=epsrel)
    return 4.0 * float(val)
