"""Scenario configuration: YAML text in, validated ``ScenarioConfig`` out.

Every violation is collected before raising, so a bad file is reported in
one pass. Unknown keys are errors. See ``docs/config.md`` for the grammar.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from haptotaxis.grid import Grid
from haptotaxis.integrator import FORMULATIONS, SCHEMES, StepConfig
from haptotaxis.model import InitialData, Parameters

MODES = ("simulate", "picard", "verify-all")
PROFILES = ("constant", "cosine-bump", "gaussian-bump")


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


@dataclass
class Profile:
    profile: str = "constant"
    value: float = 1.0
    base: float = 1.0
    amplitude: float = 0.5
    center: list[float] | None = None
    width: float = 0.1

    def evaluate(self, grid: Grid) -> np.ndarray:
        coords = grid.mesh()
        if self.profile == "constant":
            return np.full(grid.shape, float(self.value))
        if self.profile == "cosine-bump":
            # base + A prod_i cos(pi x_i / L_i): zero wall slope on every axis
            bump = np.ones(grid.shape)
            for x, L in zip(coords, grid.extents):
                bump = bump * np.cos(np.pi * x / L)
            return self.base + self.amplitude * bump
        if self.profile == "gaussian-bump":
            center = self.center or [L / 2 for L in grid.extents]
            total = np.ones(grid.shape)
            for x, c, L in zip(coords, center, grid.extents):
                # mirror images across both walls flatten the wall slope
                images = [c, -c, 2 * L - c]
                total = total * sum(np.exp(-((x - ci) ** 2) / (2 * self.width**2)) for ci in images)
            return self.base + self.amplitude * total
        raise ValueError(f"unknown profile {self.profile!r}")

    def wall_slope(self, grid: Grid) -> float:
        """Largest wall-normal slope left by the two mirror images of a
        gaussian bump (zero for the other profiles)."""
        if self.profile != "gaussian-bump":
            return 0.0
        center = self.center or [L / 2 for L in grid.extents]
        s2 = self.width**2
        worst = 0.0
        for c, L in zip(center, grid.extents):
            # at x=0 the image at 2L-c is unmatched; at x=L the image at -c is
            for d in (2 * L - c, L + c):
                worst = max(worst, abs(self.amplitude) * d / s2 * math.exp(-(d**2) / (2 * s2)))
        return worst


@dataclass
class ChecksConfig:
    admissibility: bool = True
    mass: bool = True
    lyapunov: bool = True
    floor: bool = True
    envelope: bool = True
    w_monotone: bool = True
    energy_bounds: bool = True
    steady: bool = False
    tol_mass: float = 1e-6
    tol_conservation: float = 1e-10
    tol_floor: float = 1e-3
    tol_env: float = 0.05
    fit_tol: float = 0.1
    tol_steady: float = 1e-3
    tol_bounds: float = 1e-6


@dataclass
class PicardConfig:
    T: float = 0.05
    steps: int = 64
    sigma: float | None = None
    max_iter: int = 50
    tol: float = 1e-9
    compare_integrator: bool = True


@dataclass
class OutputConfig:
    dir: str = "out"
    name: str = "run"
    checkpoint_every: int = 0
    plot: bool = False


@dataclass
class ScenarioConfig:
    mode: str
    extents: tuple[float, ...]
    n: tuple[int, ...]
    params: Parameters
    u0: Profile
    w0: Profile
    gamma: float
    checkpoint: str | None
    step: StepConfig
    picard: PicardConfig
    checks: ChecksConfig
    output: OutputConfig
    source: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return Grid(self.extents, self.n)

    def initial_data(self) -> InitialData:
        grid = self.grid
        return InitialData(grid, self.u0.evaluate(grid), self.w0.evaluate(grid), self.gamma)

    def echo(self) -> dict:
        return {
            "mode": self.mode,
            "grid": {"extents": list(self.extents), "n": list(self.n)},
            "params": {"delta": self.params.delta, "beta": self.params.beta},
            "initial": {"u0": asdict(self.u0), "w0": asdict(self.w0), "gamma": self.gamma, "checkpoint": self.checkpoint},
            "step": asdict(self.step),
            "picard": asdict(self.picard),
            "checks": asdict(self.checks),
            "output": asdict(self.output),
        }


_SECTIONS = {
    "mode": None,
    "grid": {"extents", "n"},
    "params": {"delta", "beta"},
    "initial": {"u0", "w0", "gamma", "checkpoint"},
    "step": set(StepConfig.__dataclass_fields__),
    "picard": set(PicardConfig.__dataclass_fields__),
    "checks": set(ChecksConfig.__dataclass_fields__),
    "output": set(OutputConfig.__dataclass_fields__),
}
_PROFILE_KEYS = set(Profile.__dataclass_fields__)


def _number(problems: list[str], where: str, value: Any, *, integer: bool = False) -> Any:
    if isinstance(value, str):
        # YAML 1.1 reads exponent-only literals such as 1e-4 as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{where}: expected a number, got {value!r}")
        return None
    if integer and int(value) != value:
        problems.append(f"{where}: expected an integer, got {value!r}")
        return None
    if not math.isfinite(value):
        problems.append(f"{where}: must be finite")
        return None
    return int(value) if integer else float(value)


def _coerce_section(problems: list[str], name: str, raw: dict, cls) -> Any:
    kwargs = {}
    for key, value in raw.items():
        default = cls.__dataclass_fields__[key].default
        where = f"{name}.{key}"
        if isinstance(default, str):
            if not isinstance(value, str):
                problems.append(f"{where}: expected a string, got {value!r}")
                continue
            kwargs[key] = value
        elif value is None:
            kwargs[key] = value
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                problems.append(f"{where}: expected true/false, got {value!r}")
                continue
            kwargs[key] = value
        elif isinstance(default, int) and not isinstance(default, bool):
            v = _number(problems, where, value, integer=True)
            if v is not None:
                kwargs[key] = v
        else:
            v = _number(problems, where, value)
            if v is not None:
                kwargs[key] = v
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append(f"{name}: {exc}")
        return None


def _profile(problems: list[str], where: str, raw: Any) -> Profile | None:
    if not isinstance(raw, dict):
        problems.append(f"{where}: expected a mapping with a 'profile' key")
        return None
    unknown = set(raw) - _PROFILE_KEYS
    if unknown:
        problems.append(f"{where}: unknown keys {sorted(unknown)}")
    prof = raw.get("profile", "constant")
    if prof not in PROFILES:
        problems.append(f"{where}.profile: must be one of {PROFILES}, got {prof!r}")
    kwargs = {"profile": prof}
    for key in ("value", "base", "amplitude", "width"):
        if key in raw:
            v = _number(problems, f"{where}.{key}", raw[key])
            if v is not None:
                kwargs[key] = v
    if "center" in raw:
        c = raw["center"]
        if not isinstance(c, list) or not all(isinstance(x, (int, float)) for x in c):
            problems.append(f"{where}.center: expected a list of numbers")
        else:
            kwargs["center"] = [float(x) for x in c]
    if prof == "gaussian-bump" and kwargs.get("width", 0.1) <= 0:
        problems.append(f"{where}.width: must be positive")
    return Profile(**kwargs)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a YAML scenario.

    Raises ``ConfigError`` listing every problem found; YAML syntax errors
    carry the offending line number.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError([f"syntax error: {line}{getattr(exc, 'problem', exc)}"]) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a mapping of sections"])

    problems: list[str] = []
    for key in raw:
        if key not in _SECTIONS:
            problems.append(f"unknown section {key!r}")
    for key, allowed in _SECTIONS.items():
        if allowed is None or key not in raw:
            continue
        if not isinstance(raw[key], dict):
            problems.append(f"{key}: expected a mapping")
            raw[key] = {}
            continue
        unknown = set(raw[key]) - allowed
        if unknown:
            problems.append(f"{key}: unknown keys {sorted(unknown)}")
            for k in unknown:
                raw[key].pop(k)

    mode = raw.get("mode", "simulate")
    if mode not in MODES:
        problems.append(f"mode: must be one of {MODES}, got {mode!r}")

    grid_raw = raw.get("grid", {})
    extents = grid_raw.get("extents", [1.0])
    n = grid_raw.get("n", [64])
    extents = extents if isinstance(extents, list) else [extents]
    n = n if isinstance(n, list) else [n]
    ext_vals = [_number(problems, "grid.extents", e) for e in extents]
    n_vals = [_number(problems, "grid.n", k, integer=True) for k in n]
    if len(ext_vals) not in (1, 2) or len(ext_vals) != len(n_vals):
        problems.append("grid: extents and n must both have length 1 or 2")
    if any(e is not None and e <= 0 for e in ext_vals):
        problems.append("grid.extents: must be positive")
    if any(k is not None and k < 2 for k in n_vals):
        problems.append("grid.n: must be >= 2")

    p_raw = raw.get("params", {})
    delta = _number(problems, "params.delta", p_raw.get("delta", 0.0))
    beta = _number(problems, "params.beta", p_raw.get("beta", 1.0))
    if delta is not None and delta < 0:
        problems.append("params.delta: delta must be >= 0")
    if beta is not None and beta < 1:
        problems.append("params.beta: beta must be >= 1")
    if mode == "picard" and beta is not None and beta <= 1:
        problems.append("params.beta: picard requires beta > 1")

    init_raw = raw.get("initial", {})
    u0 = _profile(problems, "initial.u0", init_raw.get("u0", {"profile": "cosine-bump"}))
    w0 = _profile(problems, "initial.w0", init_raw.get("w0", {"profile": "constant", "value": 1.0}))
    gamma = _number(problems, "initial.gamma", init_raw.get("gamma", 0.0))
    if gamma is not None and gamma < 0:
        problems.append("initial.gamma: must be >= 0")
    checkpoint = init_raw.get("checkpoint")
    if checkpoint is not None and not isinstance(checkpoint, str):
        problems.append("initial.checkpoint: expected a path")

    step = _coerce_section(problems, "step", raw.get("step", {}), StepConfig)
    if step is not None:
        if step.scheme not in SCHEMES or step.formulation not in FORMULATIONS:
            problems.append("step: bad scheme or formulation")
    picard = _coerce_section(problems, "picard", raw.get("picard", {}), PicardConfig)
    if picard is not None and (picard.T <= 0 or picard.steps < 1 or picard.max_iter < 1 or picard.tol <= 0):
        problems.append("picard: T, steps, max_iter and tol must be positive")
    checks = _coerce_section(problems, "checks", raw.get("checks", {}), ChecksConfig)
    output = _coerce_section(problems, "output", raw.get("output", {}), OutputConfig)
    if output is not None and output.checkpoint_every < 0:
        problems.append("output.checkpoint_every: must be >= 0")

    if problems:
        raise ConfigError(problems)

    cfg = ScenarioConfig(
        mode=mode,
        extents=tuple(ext_vals),
        n=tuple(n_vals),
        params=Parameters(delta=delta, beta=beta),
        u0=u0,
        w0=w0,
        gamma=gamma,
        checkpoint=checkpoint,
        step=step,
        picard=picard,
        checks=checks,
        output=output,
        source=raw,
    )
    if checkpoint is None:
        _validate_profiles(cfg)
    return cfg


def _validate_profiles(cfg: ScenarioConfig) -> None:
    grid = cfg.grid
    u0 = cfg.u0.evaluate(grid)
    w0 = cfg.w0.evaluate(grid)
    problems = []
    if np.min(u0) < 0:
        problems.append("initial.u0: profile takes negative values")
    if np.min(w0) <= 0:
        problems.append("initial.w0: profile must be strictly positive")
    if cfg.gamma > np.min(u0):
        problems.append(f"initial.gamma: {cfg.gamma} exceeds min u0 = {np.min(u0):.6g}")
    if problems:
        raise ConfigError(problems)
    for name, prof in (("u0", cfg.u0), ("w0", cfg.w0)):
        if prof.profile == "gaussian-bump":
            slope = prof.wall_slope(grid)
            if slope > 1e-8 * (1 + abs(prof.amplitude)):
                raise ConfigError(
                    [f"initial.{name}: gaussian bump leaves wall slope {slope:.3g}; shrink width or move center"]
                )


def load_config(path: str | Path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())
