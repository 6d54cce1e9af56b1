"""Command-line interface: run configurations, CSV export and run manifests."""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, continuum, discrete
from .compare import SINGLE_ATOM_GRID, compare
from .core import (
    Continuum,
    PhysicalParams,
    SingleAtom,
    SmallSystem,
    TwoAtom,
    default_time_grid,
    validate_params,
)
from .errors import (
    CascadeError,
    ConfigError,
    ConflictingRegime,
    IoError,
    NumericalError,
    RegimeMismatch,
    UnknownFlag,
    UnreadableFile,
)
from .oracle import GridSpec

REGIMES = ("single", "two-atom", "small", "continuum")
TASKS = ("timeseries", "spectrum", "power", "entropy", "oracle-compare")
COMMANDS = REGIMES + ("oracle-compare", "recipes")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    """One regime, one task and every parameter the run needs.

    ``window`` and ``dw`` are oracle grid settings in units of gamma;
    ``grid`` is "HALF:N", a spectrum grid of N points per axis spanning
    omega +- HALF*gamma.  ``coeffs`` holds (l, m, re, im) tuples.
    """

    regime: str = "two-atom"
    task: str = "timeseries"
    omega: float = 1.0
    gamma: float = 0.1
    g: float = 0.005
    omega_k1: float = 1.0
    k0r: float = 1.0
    n: int | None = None
    k0R: float = 4.0
    lmax: int = 12
    coeffs: tuple = ((0, 0, 1.0, 0.0),)
    t_max: float | None = None
    dt: float | None = None
    window: float | None = None
    dw: float | None = None
    grid: str = "10:201"
    sweep: int = 101
    out: str = "cascade_out"

    @property
    def params(self) -> PhysicalParams:
        return PhysicalParams(self.omega, self.gamma, self.g)

    @property
    def n_atoms(self) -> int:
        if self.n is not None:
            return self.n
        return 100 if self.regime == "continuum" else 3

    def geometry(self):
        if self.regime == "single":
            return SingleAtom(self.omega_k1)
        if self.regime == "two-atom":
            return TwoAtom(self.k0r)
        if self.regime == "small":
            return SmallSystem(self.n_atoms)
        if self.regime == "continuum":
            return Continuum(self.n_atoms, self.k0R, tuple((l, m, complex(re, im)) for l, m, re, im in self.coeffs))
        raise ConfigError(f"unknown regime {self.regime!r}")

    def check(self) -> "RunConfig":
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}; choose from {', '.join(REGIMES)}")
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; choose from {', '.join(TASKS)}")
        if self.task == "entropy" and self.regime != "continuum":
            raise RegimeMismatch("the entropy task needs the continuum regime")
        if self.task == "oracle-compare" and self.regime == "continuum":
            raise RegimeMismatch("the oracle has no continuum-sphere mode set")
        validate_params(self.params, self.geometry())
        spectrum_grid(self)
        if self.sweep < 2:
            raise ConfigError("sweep needs at least 2 points")
        for name in ("t_max", "dt", "window", "dw"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v}")
        return self


# -- parsing -----------------------------------------------------------------------

_FLOAT_KEYS = ("omega", "gamma", "g", "omega_k1", "k0r", "k0R", "t_max", "dt", "window", "dw")
_INT_KEYS = ("n", "lmax", "sweep")
_STR_KEYS = ("task", "grid", "out", "regime")


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _parse_coeff(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ConfigError(f"--coeff expects l,m,re,im, got {text!r}")
    try:
        return (int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]))
    except ValueError as exc:
        raise ConfigError(f"bad --coeff value {text!r}: {exc}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="cascade",
        description="Two-photon cooperative emission: closed forms, discrete-mode oracle and figure data.",
        allow_abbrev=False,
        argument_default=argparse.SUPPRESS,
    )
    p.add_argument("command", nargs="*", help=f"one of {', '.join(COMMANDS)} (recipes takes a recipe name)")
    for key in _FLOAT_KEYS:
        p.add_argument(_flag(key), dest=key, type=float)
    for key in _INT_KEYS:
        p.add_argument(_flag(key), dest=key, type=int)
    for key in _STR_KEYS:
        p.add_argument(_flag(key), dest=key)
    p.add_argument("--coeff", dest="coeffs", action="append", type=_parse_coeff)
    p.add_argument("--config", dest="config_file")
    p.add_argument("--version", action="version", version=f"cascade {__version__}")
    return p


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; keys are flag names with or without dashes."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"cannot read config file {path}: {exc}") from None
    known = set(_FLOAT_KEYS + _INT_KEYS + _STR_KEYS) | {"coeff"}
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UnreadableFile(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in known:
            raise UnknownFlag(f"{path}:{lineno}: unknown key {key!r}")
        try:
            if key == "coeff":
                out.setdefault("coeffs", []).append(_parse_coeff(value))
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _INT_KEYS:
                out[key] = int(value)
            else:
                out[key] = value
        except ValueError as exc:
            raise UnreadableFile(f"{path}:{lineno}: {exc}") from None
    return out


def _split_command(words: list) -> tuple[str | None, list]:
    unknown = [w for w in words if w not in COMMANDS]
    regimes = [w for w in words if w in COMMANDS]
    if regimes and regimes[0] == "recipes":
        return "recipes", words[1:]
    if unknown:
        raise UnknownFlag(f"unexpected argument(s): {' '.join(unknown)}")
    if len(regimes) > 1:
        raise ConflictingRegime(f"exactly one regime per run, got {' and '.join(regimes)}")
    return (regimes[0] if regimes else None), []


def parse_config(argv, config_file: str | None = None) -> RunConfig:
    """Build a RunConfig from command-line tokens.

    Values come from the defaults, then the config file (``--config`` or the
    ``config_file`` argument), then the flags, each overriding the last.
    """
    ns, extra = build_parser().parse_known_intermixed_args(list(argv))
    if extra:
        raise UnknownFlag(f"unknown flag(s): {' '.join(extra)}")
    flags = vars(ns)
    command, rest = _split_command(flags.pop("command", []))
    if command == "recipes":
        raise ConfigError("use run_recipe() or the recipes subcommand for recipes")
    path = flags.pop("config_file", None) or config_file
    values = read_config_file(path) if path else {}
    values.update(flags)
    if "coeffs" in values:
        values["coeffs"] = tuple(tuple(c) for c in values["coeffs"])

    if command == "oracle-compare":
        values["task"] = "oracle-compare"
    elif command is not None:
        if "regime" in flags and flags["regime"] != command:
            raise ConflictingRegime(f"--regime {flags['regime']} conflicts with {command}")
        values["regime"] = command
    if "regime" not in values:
        raise ConfigError("no regime given; choose one of " + ", ".join(REGIMES))
    return RunConfig(**values).check()


def serialize(config: RunConfig) -> list:
    """Command-line tokens that parse back to ``config``."""
    out = [config.regime]
    default = RunConfig()
    for f in fields(RunConfig):
        if f.name in ("regime", "coeffs"):
            continue
        v = getattr(config, f.name)
        if v is None:
            continue
        if v != getattr(default, f.name) or f.name == "task":
            out += [_flag(f.name), repr(v) if isinstance(v, float) else str(v)]
    for l, m, re, im in config.coeffs:
        out += ["--coeff", f"{l},{m},{re!r},{im!r}"]
    return out


# -- output ---------------------------------------------------------------------------


def format_float(x) -> str:
    """Shortest round-trip text, capped at 12 significant digits."""
    x = float(x)
    if not math.isfinite(x):
        return repr(x)
    short = repr(x)
    capped = format(x, ".12g")
    return short if float(capped) == x and len(short) <= len(capped) else capped


def write_csv(path: Path, columns: dict) -> None:
    names = list(columns)
    data = [np.ravel(np.asarray(columns[n], dtype=float)) for n in names]
    lines = [",".join(names)]
    for row in zip(*data):
        lines.append(",".join(format_float(v) for v in row))
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """What was run, with which library, and digests of every emitted file."""

    config: dict
    version: str
    wall_clock_s: float
    derived: dict
    files: tuple

    def to_json(self) -> str:
        payload = asdict(self)
        payload["files"] = [dict(f) for f in self.files]
        return json.dumps(payload, indent=2, sort_keys=True)

    def verify(self, directory: str | Path) -> bool:
        base = Path(directory)
        return all(sha256(base / f["name"]) == f["sha256"] for f in self.files)


def spectrum_grid(config: RunConfig) -> np.ndarray:
    try:
        half, n = config.grid.split(":")
        half, n = float(half), int(n)
    except ValueError:
        raise ConfigError(f"--grid expects HALF:N (e.g. 10:201), got {config.grid!r}") from None
    if not (half > 0 and n >= 3):
        raise ConfigError("--grid needs HALF > 0 and N >= 3")
    return config.omega + config.gamma * np.linspace(-half, half, n)


def _time_grid(config: RunConfig) -> np.ndarray:
    return default_time_grid(config.params, 400, config.t_max)


def _timeseries(config: RunConfig, params: PhysicalParams, geom) -> dict:
    t = _time_grid(config)
    cols = {"t": t}
    if isinstance(geom, SingleAtom):
        pb, pc, pt = discrete.single_probabilities(t, params, geom.omega_k1)
        _, power = discrete.single_energy_power(t, params, geom.omega_k1)
        cols.update(prob_a=np.zeros_like(t), prob_b=pb, prob_c=pc, p_total=pt, power=power)
    elif isinstance(geom, TwoAtom):
        pa, pb, pc, pt = discrete.two_atom_probabilities(t, geom.k0r, params)
        plus, minus = discrete.superradiant_populations(t, geom.k0r, params)
        power = discrete.two_atom_power(t, geom.k0r, params)[3]
        cols.update(prob_a=pa, prob_b=pb, prob_c=pc, p_total=pt, power=power, prob_plus=plus, prob_minus=minus)
    elif isinstance(geom, SmallSystem):
        pa, pb, pc, pt = discrete.small_system_probabilities(t, geom.n_atoms, params)
        cols.update(prob_a=pa, prob_b=pb, prob_c=pc, p_total=pt, power=_small_power(t, geom.n_atoms, params))
    else:
        modes = continuum.normalize_modes(geom).modes
        pa, pb, pc, pt = continuum.continuum_probabilities(t, modes, params)
        cols.update(prob_a=pa, prob_b=pb, prob_c=pc, p_total=pt, power=continuum.continuum_power(t, modes, params))
    return cols


def _small_power(t, n, params):
    if n == 2:
        return discrete.two_atom_power(t, 0.0, params)[3]
    return discrete.small_system_power(t, n, params)


def _power(config: RunConfig, params: PhysicalParams, geom) -> dict:
    t = _time_grid(config)
    if isinstance(geom, SingleAtom):
        energy, power = discrete.single_energy_power(t, params, geom.omega_k1)
        return {"t": t, "energy": energy, "power": power}
    if isinstance(geom, TwoAtom):
        pp, pm, pc, pt = discrete.two_atom_power(t, geom.k0r, params)
        return {"t": t, "p_plus": pp, "p_minus": pm, "p_c": pc, "power": pt}
    if isinstance(geom, SmallSystem):
        return {"t": t, "power": _small_power(t, geom.n_atoms, params)}
    modes = continuum.normalize_modes(geom).modes
    return {"t": t, "power": continuum.continuum_power(t, modes, params)}


def _spectrum(config: RunConfig, params: PhysicalParams, geom) -> dict:
    w = spectrum_grid(config)
    wk, wp = np.meshgrid(w, w, indexing="ij")
    if isinstance(geom, SingleAtom):
        rho = discrete.single_spectrum(wk, wp, params, geom.omega_k1, d_omega=float(w[1] - w[0]))
    elif isinstance(geom, TwoAtom):
        rho = discrete.two_atom_spectrum(wk, wp, geom.k0r, params)
    elif isinstance(geom, SmallSystem):
        if geom.n_atoms == 2:
            rho = discrete.two_atom_spectrum(wk, wp, 0.0, params)
        else:
            rho = discrete.small_system_spectrum(wk, wp, geom.n_atoms, params)
    else:
        rho = continuum.continuum_spectrum(wk, wp, continuum.normalize_modes(geom).modes, params)
    return {"omega_k": wk.ravel(), "omega_p": wp.ravel(), "rho": np.asarray(rho).ravel()}


def _entropy(config: RunConfig, params: PhysicalParams, geom) -> dict:
    sig, ent = continuum.entropy_sweep(geom.n_atoms, geom.k0R, config.sweep)
    return {"sigma00": sig, "entropy": ent}


def _oracle_grid(config: RunConfig, geom) -> GridSpec:
    gam = config.gamma
    if config.window is None and config.dw is None:
        if isinstance(geom, SingleAtom):
            return replace(
                SINGLE_ATOM_GRID,
                window=SINGLE_ATOM_GRID.window / 0.1 * gam,
                d_omega=SINGLE_ATOM_GRID.d_omega / 0.1 * gam,
                d_omega_min=SINGLE_ATOM_GRID.d_omega_min / 0.1 * gam,
            )
        if isinstance(geom, SmallSystem):
            return GridSpec(window=200.0 * gam, d_omega=gam / 8.0)
    window = (40.0 if config.window is None else config.window) * gam
    dw = (0.1 if config.dw is None else config.dw) * gam
    return GridSpec(window=window, d_omega=dw, lmax=config.lmax)


def _oracle_t_max(config: RunConfig, geom) -> float:
    if config.t_max is not None:
        return config.t_max
    gam = config.gamma
    if isinstance(geom, SingleAtom):
        return 3.0 / gam
    if isinstance(geom, TwoAtom):
        return 6.0 / gam
    return 0.4 / gam


def _oracle_compare(config: RunConfig, params: PhysicalParams, geom):
    cmp = compare(geom, params, _oracle_grid(config, geom), _oracle_t_max(config, geom), config.dt)
    cols = {"t": cmp.times}
    for name, (oracle, analytic) in cmp.columns.items():
        cols[f"{name}_analytic"] = analytic
        cols[f"{name}_oracle"] = oracle
        cols[f"{name}_abs_diff"] = np.abs(oracle - analytic)
    summary = {
        "quantity": list(cmp.columns),
        "max_abs_diff": [cmp.max_abs_diff(n) for n in cmp.columns],
    }
    return cols, summary, cmp.summary


def _derived(config: RunConfig, params: PhysicalParams, geom) -> dict:
    out: dict = {}
    if isinstance(geom, TwoAtom):
        r = discrete.two_atom_rates(geom.k0r, params)
        out.update(gamma_plus=r.gamma_plus, gamma_minus=r.gamma_minus, p_max=2.0)
    elif isinstance(geom, SmallSystem):
        out["p_max"] = float(_small_power(0.0, geom.n_atoms, params))
    elif isinstance(geom, Continuum):
        table = continuum.normalize_modes(geom)
        out["lambda_l"] = [[l, lam] for l, lam in sorted(table.lambda_table().items())]
        out["coeff_scale"] = table.scale
        out["dropped_modes"] = [[l, m] for l, m, _ in table.dropped]
        out["p_max"] = float(continuum.continuum_power(0.0, table.modes, params))
        out["entropy"] = continuum.von_neumann_entropy(continuum.schmidt_spectrum(table.modes))
    elif isinstance(geom, SingleAtom):
        out["energy_final"] = float(discrete.single_energy_power(1e6, params, geom.omega_k1)[0])
    return out


def run(config: RunConfig) -> RunManifest:
    """Execute one configuration, write its CSV files and manifest.json."""
    config = config.check()
    params, geom = validate_params(config.params, config.geometry())
    start = time.perf_counter()
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from None

    stem = f"{config.regime}_{config.task}"
    written = []
    derived = _derived(config, params, geom)
    if config.task == "oracle-compare":
        cols, summary, info = _oracle_compare(config, params, geom)
        write_csv(out / f"{stem}.csv", cols)
        written.append(f"{stem}.csv")
        _write_summary(out / f"{stem}_summary.csv", summary)
        written.append(f"{stem}_summary.csv")
        derived.update({k: v for k, v in info.items()})
    else:
        task = {"timeseries": _timeseries, "spectrum": _spectrum, "power": _power, "entropy": _entropy}[config.task]
        write_csv(out / f"{stem}.csv", task(config, params, geom))
        written.append(f"{stem}.csv")

    files = tuple({"name": name, "sha256": sha256(out / name)} for name in written)
    cfg = {k: (list(map(list, v)) if k == "coeffs" else v) for k, v in asdict(config).items()}
    manifest = RunManifest(cfg, __version__, time.perf_counter() - start, derived, files)
    try:
        (out / "manifest.json").write_text(manifest.to_json() + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write manifest: {exc}") from None
    return manifest


def _write_summary(path: Path, summary: dict) -> None:
    lines = ["quantity,max_abs_diff"]
    lines += [f"{q},{format_float(v)}" for q, v in zip(summary["quantity"], summary["max_abs_diff"])]
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


# -- figure recipes --------------------------------------------------------------------


def figure_recipes() -> dict:
    """Named configurations that regenerate the data behind each figure."""
    r: dict = {
        "fig1": RunConfig(regime="single", task="timeseries"),
        "fig2a": RunConfig(regime="single", task="spectrum"),
        "fig2b": RunConfig(regime="single", task="power"),
        "fig3": RunConfig(regime="two-atom", k0r=1.0, task="timeseries"),
        "fig6": RunConfig(regime="two-atom", k0r=1.0, task="timeseries"),
        "fig8": RunConfig(regime="small", n=10, task="timeseries"),
        "fig11": RunConfig(regime="continuum", n=100, k0R=4.0, task="timeseries"),
        "fig13a": RunConfig(regime="continuum", n=100, k0R=4.0, task="spectrum"),
        "fig13b": RunConfig(regime="continuum", n=100, k0R=4.0, task="entropy", sweep=101),
    }
    for k0r in (0.0, 1.0, 10.0, 100.0):
        r[f"fig4_k0r{k0r:g}"] = RunConfig(regime="two-atom", k0r=k0r, task="spectrum")
    for k0r in (0.0, 1.0, 2.0, 10.0):
        r[f"fig7_k0r{k0r:g}"] = RunConfig(regime="two-atom", k0r=k0r, task="power")
    for n in (3, 5, 7, 10):
        r[f"fig9_n{n}"] = RunConfig(regime="small", n=n, task="spectrum", grid="30:241")
    for n in (10, 20, 50, 100):
        r[f"fig10_n{n}"] = RunConfig(regime="small", n=n, task="power", t_max=5.0)
    for k0R in (0.05, 1.0, 4.0, 10.0):
        r[f"fig12_k0R{k0R:g}"] = RunConfig(regime="continuum", n=100, k0R=k0R, task="power", t_max=5.0)
    return dict(sorted(r.items()))


def run_recipe(name: str, out: str | None = None) -> RunManifest:
    recipes = figure_recipes()
    if name not in recipes:
        raise ConfigError(f"unknown recipe {name!r}; see 'cascade recipes'")
    cfg = recipes[name]
    return run(replace(cfg, out=out) if out else replace(cfg, out=os.path.join("cascade_out", name)))


# -- entry point ------------------------------------------------------------------------


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, IoError):
        return EXIT_IO
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_NUMERICAL


def _report(exc: BaseException) -> int:
    code = _exit_code(exc)
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def _thread_limit():
    raw = os.environ.get("CASCADE_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CASCADE_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"CASCADE_THREADS must be a positive integer, got {raw!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        limiter = _thread_limit()
        try:
            words = [a for a in argv if not a.startswith("-")]
            if words and words[0] == "recipes":
                return _recipes_command(argv[argv.index("recipes") + 1 :])
            manifest = run(parse_config(argv))
            print(manifest.to_json())
            return EXIT_OK
        finally:
            if limiter is not None:
                limiter.unregister()
    except (CascadeError, OSError, ArithmeticError, MemoryError) as exc:
        return _report(exc)


def _recipes_command(argv) -> int:
    p = _Parser(prog="cascade recipes", allow_abbrev=False)
    p.add_argument("name", nargs="?")
    p.add_argument("--out")
    ns, extra = p.parse_known_args(argv)
    if extra:
        raise UnknownFlag(f"unknown flag(s): {' '.join(extra)}")
    if ns.name is None:
        listing = {k: serialize(v) for k, v in figure_recipes().items()}
        print(json.dumps(listing, indent=2))
        return EXIT_OK
    if ns.name == "all":
        for name in figure_recipes():
            run_recipe(name, os.path.join(ns.out or "cascade_out", name))
        return EXIT_OK
    manifest = run_recipe(ns.name, ns.out)
    print(manifest.to_json())
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
