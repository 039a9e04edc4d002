"""Flat, human-writable run configuration.

One `key = value` per line, `#` comments, no nesting.  Every key is
validated against the documented list below; unknown keys are rejected with
their line number (typo safety), as are out-of-range values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .grid import GridSpec, make_grid
from .operators import ConstantPower, InhomogeneousPower, PhysicsParams

EXPERIMENTS = ("groundstate", "evolve", "sweep", "stability", "vortex", "inhom")
FAMILIES = ("scaled-Q", "gaussian")
INITIAL_KINDS = ("gaussian", "scaled-Q", "chirped-Q", "vortex")
NONLINEARITIES = ("constant", "inhomogeneous")
DIRECTIONS = ("random", "dipole", "chirp")


class ConfigError(ValueError):
    """Malformed or out-of-range configuration; exit code 2 territory."""


@dataclass
class RunConfig:
    experiment: str = "evolve"
    # grid block
    n: int = 2
    L: float = 8.0
    N: int = 128
    # physics block
    omega: float = 0.0
    gamma: float = 1.0
    p: float = 3.0
    kappa: int = 1
    nonlinearity: str = "constant"
    lam: float = 1.0          # key: lambda
    lam0: float = 1.0         # key: lambda0 (inhomogeneous)
    decay_m: float = 2.0      # key: decay_m (inhomogeneous)
    # numerics block
    dt: Optional[float] = None          # default 1e-3/gamma when unset
    t_end: Optional[float] = None
    t_periods: Optional[float] = None
    cadence: int = 10
    seed: int = 0
    workers: int = 1
    gs_tol: float = 1e-9
    tau: Optional[float] = None
    # initial data (evolve)
    initial: str = "gaussian"
    c: float = 1.0
    alpha: float = 1.0
    theta: float = 0.0
    nu: float = 0.0
    vortex_m: int = 1
    # experiment-specific
    c_list: tuple[float, ...] = ()
    family: str = "scaled-Q"
    delta: float = 1e-2
    directions: tuple[str, ...] = DIRECTIONS
    samples_per_period: int = 32
    stability_bound: float = 5e-2
    K: float = 1.0
    a_exponent: float = 4.0
    m_min: int = 0
    m_max: int = 20
    # io block
    checkpoint_interval: int = 0   # steps; 0 disables

    def effective_dt(self) -> float:
        return self.dt if self.dt is not None else 1e-3 / self.gamma

    def effective_t_end(self) -> float:
        if self.t_end is not None:
            return self.t_end
        periods = self.t_periods if self.t_periods is not None else 1.0
        return periods * 2.0 * math.pi / self.gamma

    def make_grid(self) -> GridSpec:
        return make_grid(self.n, self.L, self.N)

    def physics(self) -> PhysicsParams:
        if self.nonlinearity == "constant":
            nl = ConstantPower(self.lam)
        else:
            nl = InhomogeneousPower(self.lam0, self.decay_m)
        return PhysicsParams(n=self.n, omega=self.omega, gamma=self.gamma,
                             p=self.p, kappa=self.kappa, nonlinearity=nl)

    def to_text(self) -> str:
        """Canonical echo; parsing it back reproduces this config exactly."""
        lines = [f"experiment = {self.experiment}"]
        lines += [
            f"n = {self.n}",
            f"L = {self.L!r}",
            f"N = {self.N}",
            f"omega = {self.omega!r}",
            f"gamma = {self.gamma!r}",
            f"p = {self.p!r}",
            f"kappa = {self.kappa}",
            f"nonlinearity = {self.nonlinearity}",
            f"lambda = {self.lam!r}",
            f"lambda0 = {self.lam0!r}",
            f"decay_m = {self.decay_m!r}",
            f"dt = {self.effective_dt()!r}",
            f"cadence = {self.cadence}",
            f"seed = {self.seed}",
            f"workers = {self.workers}",
            f"gs_tol = {self.gs_tol!r}",
            f"initial = {self.initial}",
            f"c = {self.c!r}",
            f"alpha = {self.alpha!r}",
            f"theta = {self.theta!r}",
            f"nu = {self.nu!r}",
            f"vortex_m = {self.vortex_m}",
            f"family = {self.family}",
            f"delta = {self.delta!r}",
            f"directions = {','.join(self.directions)}",
            f"samples_per_period = {self.samples_per_period}",
            f"stability_bound = {self.stability_bound!r}",
            f"K = {self.K!r}",
            f"a_exponent = {self.a_exponent!r}",
            f"m_min = {self.m_min}",
            f"m_max = {self.m_max}",
            f"checkpoint_interval = {self.checkpoint_interval}",
        ]
        if self.tau is not None:
            lines.append(f"tau = {self.tau!r}")
        if self.t_end is not None:
            lines.append(f"t_end = {self.t_end!r}")
        if self.t_periods is not None:
            lines.append(f"t_periods = {self.t_periods!r}")
        if self.c_list:
            lines.append("c_list = " + ",".join(repr(x) for x in self.c_list))
        return "\n".join(lines) + "\n"


_KEY_ALIASES = {"lambda": "lam", "lambda0": "lam0", "Omega": "omega"}

_INT_KEYS = {"n", "N", "kappa", "cadence", "seed", "workers", "vortex_m",
             "samples_per_period", "m_min", "m_max", "checkpoint_interval"}
_FLOAT_KEYS = {"L", "omega", "gamma", "p", "lam", "lam0", "decay_m", "dt",
               "t_end", "t_periods", "gs_tol", "tau", "c", "alpha", "theta",
               "nu", "delta", "stability_bound", "K", "a_exponent"}
_STR_KEYS = {"experiment", "nonlinearity", "initial", "family"}
_LIST_FLOAT_KEYS = {"c_list"}
_LIST_STR_KEYS = {"directions"}

_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _LIST_FLOAT_KEYS | _LIST_STR_KEYS


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate; errors carry the key name and line number."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        key = _KEY_ALIASES.get(key, key)
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _LIST_FLOAT_KEYS:
                values[key] = tuple(float(x) for x in val.split(",") if x.strip())
            elif key in _LIST_STR_KEYS:
                values[key] = tuple(x.strip() for x in val.split(",") if x.strip())
            else:
                values[key] = val
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None

    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    def bad(msg: str):
        raise ConfigError(msg)

    if cfg.experiment not in EXPERIMENTS:
        bad(f"experiment must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
    if cfg.n not in (2, 3):
        bad(f"n must be 2 or 3, got {cfg.n}")
    if cfg.L <= 0:
        bad(f"L must be > 0, got {cfg.L}")
    if cfg.N < 8 or (cfg.N & (cfg.N - 1)) != 0:
        bad(f"N must be a power of two >= 8, got {cfg.N}")
    if cfg.gamma <= 0:
        bad(f"gamma must be > 0, got {cfg.gamma}")
    p_max = math.inf if cfg.n == 2 else 1.0 + 4.0 / (cfg.n - 2)
    if not (1.0 <= cfg.p < p_max):
        bad(f"p must lie in [1, {p_max}), got {cfg.p}")
    if cfg.kappa not in (1, -1):
        bad(f"kappa must be +1 or -1, got {cfg.kappa}")
    if cfg.nonlinearity not in NONLINEARITIES:
        bad(f"nonlinearity must be one of {NONLINEARITIES}, got {cfg.nonlinearity!r}")
    if cfg.lam < 0:
        bad(f"lambda must be >= 0, got {cfg.lam}")
    if cfg.nonlinearity == "inhomogeneous":
        if cfg.lam0 <= 0:
            bad(f"lambda0 must be > 0, got {cfg.lam0}")
        if cfg.decay_m <= 0:
            bad(f"decay_m must be > 0, got {cfg.decay_m}")
    if cfg.dt is not None and cfg.dt <= 0:
        bad(f"dt must be > 0, got {cfg.dt}")
    if cfg.cadence < 1:
        bad(f"cadence must be >= 1, got {cfg.cadence}")
    if cfg.workers < 1:
        bad(f"workers must be >= 1, got {cfg.workers}")
    if cfg.initial not in INITIAL_KINDS:
        bad(f"initial must be one of {INITIAL_KINDS}, got {cfg.initial!r}")
    if cfg.family not in FAMILIES:
        bad(f"family must be one of {FAMILIES}, got {cfg.family!r}")
    for d in cfg.directions:
        if d not in DIRECTIONS:
            bad(f"directions entries must be in {DIRECTIONS}, got {d!r}")
    if cfg.experiment in ("groundstate", "stability") and abs(cfg.omega) >= cfg.gamma:
        bad(
            f"experiment {cfg.experiment!r} requires |Omega| < gamma "
            f"(got Omega = {cfg.omega}, gamma = {cfg.gamma})"
        )
    if cfg.experiment in ("sweep", "inhom") and not cfg.c_list:
        bad(f"experiment {cfg.experiment!r} requires a non-empty c_list")
    if cfg.experiment == "inhom" and cfg.nonlinearity != "inhomogeneous":
        bad("experiment 'inhom' requires nonlinearity = inhomogeneous")
    if not (0.0 <= cfg.delta <= 0.1):
        bad(f"delta must lie in [0, 0.1], got {cfg.delta}")
    if cfg.a_exponent <= 2.0:
        bad(f"a_exponent must be > 2, got {cfg.a_exponent}")
    if cfg.m_min > cfg.m_max:
        bad(f"m_min must be <= m_max, got {cfg.m_min} > {cfg.m_max}")
    if cfg.checkpoint_interval < 0:
        bad(f"checkpoint_interval must be >= 0, got {cfg.checkpoint_interval}")
    if cfg.c <= 0:
        bad(f"c must be > 0, got {cfg.c}")
