"""Side-by-side runs of the discrete-mode oracle and the closed forms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import discrete
from .core import PhysicalParams, SingleAtom, SmallSystem, TwoAtom
from .errors import BadGeometry
from .oracle import (
    GridSpec,
    IntegratorConfig,
    OracleRun,
    build_mode_set,
    default_dt,
    fit_decay_rate,
    initial_state,
    integrate,
)


@dataclass(frozen=True, eq=False)
class Comparison:
    """Paired oracle and closed-form columns on a shared time grid."""

    times: np.ndarray
    columns: dict
    run: OracleRun
    summary: dict = field(default_factory=dict)

    def max_abs_diff(self, name: str) -> float:
        oracle, analytic = self.columns[name]
        return float(np.max(np.abs(oracle - analytic)))


# Grids that keep the finite-bandwidth error of each regime near 1%.  The
# oracle's deviation from the Markovian closed forms is a delay of about
# 2/(pi*W), so the window must grow with the fastest decay rate.
SINGLE_ATOM_GRID = GridSpec(window=6.0, d_omega=0.01, d_omega_min=0.0005, grading=0.05)
TWO_ATOM_GRID = GridSpec(window=4.0, d_omega=0.01, lmax=12)


def run_oracle(regime, params: PhysicalParams, grid: GridSpec, t_max: float, dt: float | None = None, n_samples: int = 400) -> OracleRun:
    """Build the mode set, pick the initial state and integrate."""
    mode_set = build_mode_set(regime, params, grid)
    if isinstance(regime, TwoAtom):
        mode_set = mode_set.bright()
    dt = default_dt(mode_set, params) if dt is None else dt
    config = IntegratorConfig(dt=dt, t_max=t_max, n_samples=n_samples)
    return integrate(initial_state(regime, mode_set, params), config, mode_set, params)


def compare(regime, params: PhysicalParams, grid: GridSpec, t_max: float, dt: float | None = None) -> Comparison:
    """Run the oracle and evaluate the matching closed forms at its sample times."""
    run = run_oracle(regime, params, grid, t_max, dt)
    s = run.series
    t = s.times
    cols: dict = {}
    summary: dict = {}
    if isinstance(regime, SingleAtom):
        pb, pc, _ = discrete.single_probabilities(t, params, regime.omega_k1)
        # leading-order envelope of |b|^2 (the g^2 terms are below grid resolution)
        cols["prob_b"] = (s.prob_b, np.exp(-params.gamma * t))
        cols["prob_c"] = (s.prob_c, pc)
    elif isinstance(regime, TwoAtom):
        pa, pb, pc, pt = discrete.two_atom_probabilities(t, regime.k0r, params)
        plus, minus = discrete.superradiant_populations(t, regime.k0r, params)
        cols.update(prob_a=(s.prob_a, pa), prob_b=(s.prob_b, pb), prob_c=(s.prob_c, pc))
        cols.update(prob_plus=(s.extra["prob_plus"], plus), prob_minus=(s.extra["prob_minus"], minus))
        rates = discrete.two_atom_rates(regime.k0r, params)
        f = run.fine
        g_plus, _ = fit_decay_rate(f["t"], f["prob_a"], f["prob_plus"])
        g_minus, _ = fit_decay_rate(f["t"], f["prob_a"], f["prob_minus"])
        summary.update(
            gamma_plus_fit=g_plus,
            gamma_minus_fit=g_minus,
            gamma_plus=rates.gamma_plus,
            gamma_minus=rates.gamma_minus,
        )
    elif isinstance(regime, SmallSystem):
        pa, pb, pc, pt = discrete.small_system_probabilities(t, regime.n_atoms, params)
        cols.update(prob_a=(s.prob_a, pa), prob_b=(s.prob_b, pb), prob_c=(s.prob_c, pc))
    else:
        raise BadGeometry(f"no oracle comparison for {type(regime).__name__}")
    summary["max_abs_diff"] = max(float(np.max(np.abs(o - a))) for o, a in cols.values())
    summary["max_norm_drift"] = run.max_norm_drift
    summary["max_symmetry_residual"] = run.max_symmetry_residual
    return Comparison(t, cols, run, summary)


def rk4_order_ratio(params: PhysicalParams, dt: float = 0.02, t_max: float = 10.0, grid: GridSpec | None = None) -> tuple[float, float, float]:
    """Error reduction when the step is halved, on the single-atom regime.

    Errors are the 2-norm of the final state (a, b, c) against a run with
    dt/16, which is converged far beyond both test steps.  ``t_max`` must
    be a multiple of ``dt``.  Returns (ratio, err_dt, err_half).
    """
    if abs(t_max / dt - round(t_max / dt)) > 1e-9:
        raise ValueError("t_max must be an integer multiple of dt")
    grid = GridSpec(window=2.0, d_omega=0.0125) if grid is None else grid
    regime = SingleAtom(params.omega)
    mode_set = build_mode_set(regime, params, grid)
    init = initial_state(regime, mode_set, params)

    def final(step):
        st = integrate(init, IntegratorConfig(step, t_max, n_samples=1), mode_set, params).final
        return np.concatenate([np.ravel(st.a), np.ravel(st.b), np.ravel(st.c)])

    ref = final(dt / 16.0)
    e1 = float(np.linalg.norm(final(dt) - ref))
    e2 = float(np.linalg.norm(final(dt / 2.0) - ref))
    return e1 / e2, e1, e2
