"""Brute-force reference dynamics on a discretized photon-mode set.

The two-excitation amplitudes (a, b, c) are advanced with fixed-step
classical RK4 in the interaction picture, where free evolution is removed
exactly and only the (slow) couplings remain.  Because dc/dt depends on b
alone, every RK4 stage touches the c matrix through a single matrix
product, and the step ends with one in-place rank-k update of c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import blas
from scipy.special import spherical_jn

from .core import (
    PhysicalParams,
    SingleAtom,
    SmallSystem,
    SpectralGrid,
    TimeSeries,
    TwoAtom,
    TwoExcitationState,
    mode_probabilities,
)
from .errors import (
    BadGeometry,
    ConfigError,
    GridTooCoarse,
    NotConverged,
    OutOfMemoryGuard,
    StepTooLarge,
    WindowTooNarrow,
)

MEMORY_LIMIT_BYTES = 2 * 1024**3
MIN_WINDOW = 20.0  # in units of gamma
MIN_POINTS_PER_GAMMA = 8.0
NORM_DRIFT_LIMIT = 1e-6
STEP_LIMIT = 0.1


@dataclass(frozen=True)
class GridSpec:
    """Frequency discretization.

    ``window`` (W) and ``d_omega`` default to 40*gamma and gamma/10.  When
    ``d_omega_min`` is set the spacing is graded: it starts at
    ``d_omega_min`` on resonance and grows linearly with slope ``grading``
    until it reaches ``d_omega``.  Each mode's coupling follows its own cell
    width, so the coupling density stays flat.
    """

    window: float | None = None
    d_omega: float | None = None
    d_omega_min: float | None = None
    grading: float = 0.05
    lmax: int = 12
    angular: str = "partial_wave"
    n_directions: int = 64
    on_shell: bool = True


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Discrete photon modes and their couplings to each atom.

    ``coupling[j, k]`` is the coupling of atom j to mode k; ``block[k]``
    indexes the frequency bin of mode k, so that several angular channels
    can share one frequency.
    """

    kind: str
    frequencies: np.ndarray
    coupling: np.ndarray
    block: np.ndarray
    block_frequencies: np.ndarray
    cell: np.ndarray
    window: float
    omega0: float
    channel_l: np.ndarray | None = None

    @property
    def d_omega(self) -> float:
        """Largest frequency-cell width."""
        return float(self.cell.max())

    @property
    def n_modes(self) -> int:
        return self.frequencies.size

    @property
    def n_atoms(self) -> int:
        return self.coupling.shape[0]

    @property
    def detunings(self) -> np.ndarray:
        return self.frequencies - self.omega0

    def with_coupling_scale(self, scale: float) -> "ModeSet":
        """Same modes with every coupling multiplied by ``scale`` (0 decouples)."""
        return replace(self, kind=self.kind, coupling=self.coupling * float(scale))

    def decay_matrix(self) -> np.ndarray:
        """Collective decay rates 2*pi/cell * sum_k G_ik conj(G_jk), one matrix per frequency bin."""
        nb = self.block_frequencies.size
        per_bin = np.zeros((nb, self.n_atoms, self.n_atoms), dtype=complex)
        for i in range(self.n_atoms):
            for j in range(self.n_atoms):
                prod = self.coupling[i] * np.conj(self.coupling[j])
                per_bin[:, i, j] = np.bincount(self.block, prod.real, nb) + 1j * np.bincount(
                    self.block, prod.imag, nb
                )
        return 2.0 * math.pi / self.cell[:, None, None] * per_bin

    def bright(self) -> "ModeSet":
        """Exact reduction to the modes that couple to at least one atom.

        Within each frequency bin only the span of the atoms' coupling
        vectors is reachable from an initially photon-free state, so the
        remaining combinations are dropped.
        """
        nb = self.block_frequencies.size
        counts = np.bincount(self.block, minlength=nb)
        width = int(counts[0])
        if np.any(counts != width) or width <= self.n_atoms:
            return self
        order = np.argsort(self.block, kind="stable")
        g = self.coupling[:, order].reshape(self.n_atoms, nb, width).transpose(1, 0, 2)
        u, s, _ = np.linalg.svd(g, full_matrices=False)
        reduced = (u * s[:, None, :]).transpose(1, 0, 2).reshape(self.n_atoms, -1)
        block = np.repeat(np.arange(nb), self.n_atoms)
        return ModeSet(
            kind=self.kind + "-bright",
            frequencies=self.block_frequencies[block],
            coupling=reduced,
            block=block,
            block_frequencies=self.block_frequencies,
            cell=self.cell,
            window=self.window,
            omega0=self.omega0,
        )


def _frequency_grid(params: PhysicalParams, grid: GridSpec) -> tuple[np.ndarray, np.ndarray, float]:
    """Grid frequencies, their cell widths and the realized half-width."""
    gamma = params.gamma
    window = 40.0 * gamma if grid.window is None else float(grid.window)
    d_omega = gamma / 10.0 if grid.d_omega is None else float(grid.d_omega)
    if not d_omega > 0 or d_omega > gamma / MIN_POINTS_PER_GAMMA * (1 + 1e-12):
        raise GridTooCoarse(
            f"d_omega = {d_omega:.4g} gives fewer than {MIN_POINTS_PER_GAMMA:g} points per gamma"
        )
    if window < MIN_WINDOW * gamma * (1 - 1e-12):
        raise WindowTooNarrow(f"window {window:.4g} is below {MIN_WINDOW:g} gamma")
    if grid.d_omega_min is None:
        n = int(round(window / d_omega))
        det = d_omega * np.arange(-n, n + 1)
        return params.omega + det, np.full(det.size, d_omega), n * d_omega

    fine = float(grid.d_omega_min)
    if not 0 < fine <= d_omega or grid.grading < 0:
        raise ConfigError("graded grid needs 0 < d_omega_min <= d_omega and grading >= 0")
    pos = [0.0]
    while pos[-1] < window * (1 - 1e-12):
        x = pos[-1]
        pos.append(x + min(d_omega, fine + grid.grading * x))
    pos = np.array(pos[1:])
    det = np.concatenate([-pos[::-1], [0.0], pos])
    edges = np.concatenate([[det[0] - 0.5 * (det[1] - det[0])], 0.5 * (det[1:] + det[:-1]),
                            [det[-1] + 0.5 * (det[-1] - det[-2])]])
    return params.omega + det, np.diff(edges), float(pos[-1])


def _fibonacci_directions(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    cos_theta = 1.0 - 2.0 * i / n
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    sin_theta = np.sqrt(1.0 - cos_theta**2)
    return np.stack([sin_theta * np.cos(phi), sin_theta * np.sin(phi), cos_theta], axis=1)


def build_mode_set(regime, params: PhysicalParams, grid: GridSpec | None = None) -> ModeSet:
    """Discretize the photon field for a regime.

    Single-atom and small-system regimes use one mode per frequency with
    coupling sqrt(gamma*d_omega/2pi) (all position phases equal).  The
    two-atom regime places the atoms at +-r/2 on the polar axis and keeps
    the m = 0 partial waves l = 0..lmax, which are the only channels the
    pair couples to.
    """
    grid = GridSpec() if grid is None else grid
    freqs, cell, window = _frequency_grid(params, grid)
    nf = freqs.size
    g0 = np.sqrt(params.gamma * cell / (2.0 * math.pi))
    common = dict(cell=cell, window=window, omega0=params.omega, block_frequencies=freqs)

    if isinstance(regime, (SingleAtom, SmallSystem)):
        return ModeSet(
            kind="reduced1d",
            frequencies=freqs,
            coupling=np.tile(g0.astype(complex), (regime.n_atoms, 1)),
            block=np.arange(nf),
            **common,
        )
    if not isinstance(regime, TwoAtom):
        raise BadGeometry(f"no discrete mode set for regime {type(regime).__name__}")

    if grid.on_shell:
        k = np.full(nf, params.omega)
    else:
        if np.any(freqs <= 0):
            raise ConfigError("off-shell channel weights need a window inside omega > 0")
        k = freqs.copy()
    x = 0.5 * regime.k0r * k / params.omega  # k * r/2 with k0 = omega

    if grid.angular == "fibonacci":
        dirs = _fibonacci_directions(grid.n_directions)
        # atoms at -r/2 and +r/2 on the z axis
        z = np.array([-1.0, 1.0])
        phase = np.exp(-1j * np.outer(z, dirs[:, 2])[:, None, :] * x[None, :, None])
        coupling = (g0[None, :, None] / math.sqrt(grid.n_directions)) * phase
        return ModeSet(
            kind="fibonacci",
            frequencies=np.repeat(freqs, grid.n_directions),
            coupling=coupling.reshape(2, -1),
            block=np.repeat(np.arange(nf), grid.n_directions),
            **common,
        )
    if grid.angular != "partial_wave":
        raise ConfigError(f"unknown angular discretization {grid.angular!r}")

    ls = np.arange(grid.lmax + 1)
    jl = np.stack([spherical_jn(l, x) for l in ls], axis=1)  # (nf, L)
    amp = g0[:, None] * (-1j) ** ls * np.sqrt(2 * ls + 1) * jl
    sign = np.array([1.0, -1.0])[:, None] ** ls[None, :]  # parity of Y_l0 at -z / +z
    coupling = sign[:, None, :] * amp[None, :, :]
    return ModeSet(
        kind="partial_wave",
        frequencies=np.repeat(freqs, ls.size),
        coupling=coupling.reshape(2, -1),
        block=np.repeat(np.arange(nf), ls.size),
        channel_l=np.tile(ls, nf),
        **common,
    )


def initial_state(regime, mode_set: ModeSet, params: PhysicalParams) -> TwoExcitationState:
    """Initial amplitudes for each regime."""
    n, m = mode_set.n_atoms, mode_set.n_modes
    a = np.zeros((n, n), dtype=complex)
    b = np.zeros((n, m), dtype=complex)
    if isinstance(regime, SingleAtom):
        k1 = int(np.argmin(np.abs(mode_set.frequencies - regime.omega_k1)))
        b[0, k1] = 1.0
    elif isinstance(regime, (TwoAtom, SmallSystem)):
        a[:] = 1.0 / math.sqrt(2.0 * n * (n - 1))
        np.fill_diagonal(a, 0.0)
    else:
        raise BadGeometry(f"no initial state for regime {type(regime).__name__}")
    return TwoExcitationState(a, b, np.zeros((m, m), dtype=complex), mode_set)


def rhs(state: TwoExcitationState, mode_set: ModeSet, params: PhysicalParams) -> TwoExcitationState:
    """Time derivative of the amplitudes under the full Hamiltonian.

    Schroedinger picture with absolute frequencies:
    i da_ij = 2*Omega a_ij + 1/2 sum_k (G_jk b_ik + G_ik b_jk) - delta_ij sum_k G_ik b_ik
    i db_ik = (Omega + w_k) b_ik + 2 sum_j conj(G_jk) a_ij + 2 sum_p G_ip c_kp
    i dc_kp = (w_k + w_p) c_kp + 1/2 sum_i (conj(G_ip) b_ik + conj(G_ik) b_ip)
    """
    G = mode_set.coupling
    w = mode_set.frequencies
    a, b, c = state.a, state.b, state.c
    s = b @ G.T
    da = 2.0 * params.omega * a + 0.5 * (s + s.T) - np.diag(np.diag(s))
    db = (params.omega + w)[None, :] * b + 2.0 * a @ np.conj(G) + 2.0 * (c @ G.T).T
    x = b.T @ np.conj(G)
    dc = (w[:, None] + w[None, :]) * c + 0.5 * (x + x.T)
    return TwoExcitationState(-1j * da, -1j * db, -1j * dc, mode_set)


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings (times in units of 1/omega)."""

    dt: float
    t_max: float
    n_samples: int = 400
    rotating_frame: bool = True

    def check(self, mode_set: ModeSet, params: PhysicalParams) -> "IntegratorConfig":
        if not (self.dt > 0 and self.t_max > 0 and self.n_samples >= 1):
            raise ConfigError("dt, t_max and n_samples must be positive")
        rates = 2.0 * mode_set.n_atoms * params.gamma
        bound = self.dt * (mode_set.window + rates)
        if bound > STEP_LIMIT * (1 + 1e-12):
            raise StepTooLarge(
                f"dt*(W + rates) = {bound:.3g} exceeds {STEP_LIMIT}; use dt <= "
                f"{STEP_LIMIT / (mode_set.window + rates):.4g}"
            )
        return self


def default_dt(mode_set: ModeSet, params: PhysicalParams) -> float:
    """Largest 'round' step satisfying the step-size rule."""
    limit = STEP_LIMIT / (mode_set.window + 2.0 * mode_set.n_atoms * params.gamma)
    scale = 10.0 ** math.floor(math.log10(limit))
    for mant in (5.0, 4.0, 2.5, 2.0, 1.0):
        if mant * scale <= limit:
            return mant * scale
    return scale


@dataclass(frozen=True, eq=False)
class OracleRun:
    """Result of :func:`integrate`.

    ``fine`` holds per-step traces of the cheap quantities (times, prob_a,
    prob_b and, for two atoms, the symmetric/antisymmetric populations).
    """

    series: TimeSeries
    final: TwoExcitationState
    fine: dict = field(default_factory=dict)
    max_norm_drift: float = 0.0
    max_symmetry_residual: float = 0.0


def _c_row_weights(c: np.ndarray) -> np.ndarray:
    # column sums of |c|^2 (equal to row sums by symmetry); columns are contiguous
    return np.array([np.vdot(c[:, j], c[:, j]).real for j in range(c.shape[1])])


def _symmetry_residual(a: np.ndarray, c: np.ndarray) -> float:
    res = float(np.abs(a - a.T).max()) if a.size else 0.0
    if a.size:
        res = max(res, float(np.abs(np.diag(a)).max()))
    step = 512
    m = c.shape[0]
    for i in range(0, m, step):
        blk = c[i : i + step, :]
        res = max(res, float(np.abs(blk - c[:, i : i + step].T).max()))
    return res


def integrate(
    initial: TwoExcitationState,
    config: IntegratorConfig,
    mode_set: ModeSet,
    params: PhysicalParams,
) -> OracleRun:
    """Advance the amplitudes from t = 0 to ``config.t_max``.

    Probabilities are sampled ``config.n_samples`` times (plus t = 0); the
    power is the centered finite difference of the photon energy
    sum w_k |b_ik|^2 + 2 sum (w_k + w_p) |c_kp|^2, in units of omega*gamma.
    """
    config.check(mode_set, params)
    n, m = mode_set.n_atoms, mode_set.n_modes
    if m * m * 16 > MEMORY_LIMIT_BYTES:
        raise OutOfMemoryGuard(f"{m} modes need {m * m * 16 / 2**30:.2f} GiB for the pair matrix")
    if initial.b.shape != (n, m):
        raise ConfigError("initial state does not match the mode set")

    G = np.ascontiguousarray(mode_set.coupling, dtype=complex)
    # G = Q @ R with orthonormal Q (n x r): every product with c only needs
    # the r independent coupling rows, which is exact and saves work when
    # several atoms share one coupling profile.
    u, sv, vh = np.linalg.svd(G, full_matrices=False)
    r = max(1, int(np.sum(sv > 1e-12 * sv[0]))) if sv.size and sv[0] > 0 else 1
    Q = u[:, :r]
    R = sv[:r, None] * vh[:r]
    Qh = np.conj(Q).T
    det = mode_set.detunings
    w = mode_set.frequencies
    h = float(config.dt)
    n_steps = int(math.ceil(config.t_max / h - 1e-9))
    every = max(1, n_steps // config.n_samples)
    sample_steps = set(range(0, n_steps + 1, every)) | {n_steps}

    # interaction-picture amplitudes (rotating-frame phases removed)
    a = np.array(initial.a, dtype=complex)
    b = np.array(initial.b, dtype=complex)
    c = np.asfortranarray(initial.c, dtype=complex)

    def rows(t):
        return R * np.exp(-1j * det * t)[None, :]

    def deriv_ab(a_s, b_s, cR, Rs):
        # H = Q @ Rs; c @ H^T = cR @ Q^T
        s = (b_s @ Rs.T) @ Q.T
        da = -1j * (0.5 * (s + s.T) - np.diag(np.diag(s)))
        db = -1j * (2.0 * (a_s @ np.conj(Q)) @ np.conj(Rs) + 2.0 * (cR @ Q.T).T)
        return da, db

    def cR_correction(Bt, Rprev, Rs):
        # K @ Rs^T for K = -(i/2)(Bt^T conj(Rprev) + conj(Rprev)^T Bt), Bt = Q^H B
        Rc = np.conj(Rprev)
        return -0.5j * (Bt.T @ (Rc @ Rs.T) + Rc.T @ (Bt @ Rs.T))

    two_atoms = n == 2
    fine_t = np.empty(n_steps + 1)
    fine_pa = np.empty(n_steps + 1)
    fine_pb = np.empty(n_steps + 1)
    fine_plus = np.empty(n_steps + 1) if two_atoms else None
    fine_minus = np.empty(n_steps + 1) if two_atoms else None

    samples = []
    p0 = None
    max_drift = 0.0
    max_sym = 0.0
    U = np.empty((m, 8 * r), dtype=complex, order="F")
    V = np.empty((m, 8 * r), dtype=complex, order="F")
    weights = (1.0, 2.0, 2.0, 1.0)

    for step in range(n_steps + 1):
        t = step * h
        pa = 2.0 * float(np.vdot(a, a).real)
        pb = float(np.vdot(b, b).real)
        fine_t[step], fine_pa[step], fine_pb[step] = t, pa, pb
        if two_atoms:
            fine_plus[step] = 0.5 * float(np.sum(np.abs(b[0] + b[1]) ** 2))
            fine_minus[step] = 0.5 * float(np.sum(np.abs(b[0] - b[1]) ** 2))
        if step in sample_steps:
            cw = _c_row_weights(c)
            pc = 2.0 * float(cw.sum())
            energy = float(np.dot(w, np.sum(np.abs(b) ** 2, axis=0))) + 4.0 * float(np.dot(w, cw))
            p = pa + pb + pc
            if p0 is None:
                p0 = p
            drift = abs(p - p0)
            max_drift = max(max_drift, drift)
            if drift > NORM_DRIFT_LIMIT:
                raise StepTooLarge(f"norm drifted by {drift:.3g} at t = {t:.4g}; reduce dt")
            max_sym = max(max_sym, _symmetry_residual(a, c))
            samples.append((t, pa, pb, pc, p, energy))
        if step == n_steps:
            break

        R1, R2, R4 = rows(t), rows(t + 0.5 * h), rows(t + h)
        P = c @ np.concatenate([R1, R2, R4]).T  # one pass over c
        cR1, cR2, cR4 = P[:, :r], P[:, r : 2 * r], P[:, 2 * r :]

        k1a, k1b = deriv_ab(a, b, cR1, R1)
        a2, b2 = a + 0.5 * h * k1a, b + 0.5 * h * k1b
        bt1 = Qh @ b
        k2a, k2b = deriv_ab(a2, b2, cR2 + 0.5 * h * cR_correction(bt1, R1, R2), R2)
        a3, b3 = a + 0.5 * h * k2a, b + 0.5 * h * k2b
        bt2 = Qh @ b2
        k3a, k3b = deriv_ab(a3, b3, cR2 + 0.5 * h * cR_correction(bt2, R2, R2), R2)
        a4, b4 = a + h * k3a, b + h * k3b
        bt3 = Qh @ b3
        k4a, k4b = deriv_ab(a4, b4, cR4 + h * cR_correction(bt3, R2, R4), R4)
        bt4 = Qh @ b4

        # c += (h/6) sum_s w_s K_s, K_s = -(i/2)(Bt_s^T conj(R_s) + conj(R_s)^T Bt_s)
        for s_i, (Bt, Rs) in enumerate(((bt1, R1), (bt2, R2), (bt3, R2), (bt4, R4))):
            Rc = np.conj(Rs)
            U[:, s_i * r : (s_i + 1) * r] = weights[s_i] * Bt.T
            U[:, (4 + s_i) * r : (5 + s_i) * r] = weights[s_i] * Rc.T
            V[:, s_i * r : (s_i + 1) * r] = Rc.T
            V[:, (4 + s_i) * r : (5 + s_i) * r] = Bt.T
        blas.zgemm(-1j * h / 12.0, U, V, beta=1.0, c=c, trans_b=1, overwrite_c=1)

        a += (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        b += (h / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)

    arr = np.array(samples)
    times, energy = arr[:, 0], arr[:, 5]
    power = np.gradient(energy, times) / (params.omega * params.gamma) if times.size > 1 else np.zeros(1)
    extra = {}
    if two_atoms:
        idx = np.searchsorted(fine_t, times)
        extra = {"prob_plus": fine_plus[idx], "prob_minus": fine_minus[idx]}
    series = TimeSeries(times, arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4], power, extra)

    t_end = n_steps * h
    phase = np.exp(-1j * (2.0 * params.omega + det) * t_end)
    c *= np.exp(-1j * det * t_end)[:, None]
    c *= phase[None, :]
    final = TwoExcitationState(
        a * np.exp(-2j * params.omega * t_end), b * phase[None, :], c, mode_set
    )
    fine = {"t": fine_t, "prob_a": fine_pa, "prob_b": fine_pb}
    if two_atoms:
        fine.update(prob_plus=fine_plus, prob_minus=fine_minus)
    return OracleRun(series, final, fine, max_drift, max_sym)


def extract_spectrum(final: TwoExcitationState, mode_set: ModeSet | None = None, tol: float = 1e-3) -> SpectralGrid:
    """Two-photon spectral density from the long-time pair amplitudes.

    Pair weights 2|c_kp|^2 are summed over the angular channels of each
    frequency bin and divided by the two cell widths, so the cell-weighted
    grid sum reproduces the two-photon probability.
    """
    mode_set = final.mode_set if mode_set is None else mode_set
    pa, pb, _, _ = mode_probabilities(final)
    if pa + pb >= tol:
        raise NotConverged(f"excitation left in atoms: |a|^2 + |b|^2 = {pa + pb:.3g}")
    nb = mode_set.block_frequencies.size
    weight = 2.0 * np.abs(np.asarray(final.c)) ** 2
    if nb != mode_set.n_modes or np.any(mode_set.block != np.arange(nb)):
        onehot = np.zeros((mode_set.n_modes, nb))
        onehot[np.arange(mode_set.n_modes), mode_set.block] = 1.0
        weight = onehot.T @ weight @ onehot
    rho = weight / np.outer(mode_set.cell, mode_set.cell)
    return SpectralGrid(mode_set.block_frequencies, mode_set.block_frequencies, 0.5 * (rho + rho.T))


def fit_decay_rate(t: np.ndarray, source: np.ndarray, population: np.ndarray) -> tuple[float, float]:
    """Fit d(pop)/dt = alpha*source - gamma*pop in integral form.

    Least squares on pop(t) - pop(0) = alpha * int source - gamma * int pop,
    which needs no numerical derivative.  Returns (gamma, alpha).
    """
    from scipy.integrate import cumulative_trapezoid

    s_int = cumulative_trapezoid(source, t, initial=0.0)
    p_int = cumulative_trapezoid(population, t, initial=0.0)
    A = np.stack([s_int, -p_int], axis=1)
    (alpha, gamma), *_ = np.linalg.lstsq(A, population - population[0], rcond=None)
    return float(gamma), float(alpha)
