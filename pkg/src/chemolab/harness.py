"""Scenario configuration, presets, file outputs, and parameter sweeps.

Configuration is a single INI-style text file (sections and key = value
pairs, parsed by configparser).  A scenario may start from a named preset
and override individual keys.  Sweeps take the same scenario sections plus
a [sweep] section listing value axes; points run concurrently on threads
(the compiled stepping kernel releases the GIL).
"""

from __future__ import annotations

import configparser
import copy
import itertools
import json
import logging
import math
import os
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from .diagnostics import DiagnosticsSampler, pattern_flag
from .errors import ChemolabError, ConfigError
from .field import Grid, ScalarField, load_field_csv, mean, save_field_csv
from .motility import MotilityModel, excitable_set, in_excitable_set, is_monotone
from .solver import SolverConfig, run

__all__ = [
    "PRESETS",
    "ScenarioConfig",
    "SweepSpec",
    "load_scenario",
    "load_sweep",
    "build_initial",
    "run_scenario",
    "run_sweep",
]

log = logging.getLogger("chemolab")

PRESETS: dict[str, dict] = {
    # quiescent control: homogeneous data stay put and every dissipation is 0
    "homogeneous": {
        "model": {"m": 2.0, "a": 0.0, "b": 1.0, "k": 1.0, "s0": 1.0},
        "grid": {"dim": 1, "extent_x": 10.0, "cells_x": 256},
        "initial": {"kind": "homogeneous", "M": 1.0, "v0_mean": 1.0},
        "solver": {"t_end": 1.0, "dt_max": 0.01},
        "sampling": {"interval": 0.1, "window": 1.0},
    },
    # monotone-product regime: perturbations die out and the energy decays
    "thm0_regime": {
        "model": {"m": 2.0, "a": 0.0, "b": 1.0, "k": 1.0, "s0": 1.0},
        "grid": {"dim": 1, "extent_x": 10.0, "cells_x": 256},
        "initial": {
            "kind": "perturbed_cosine",
            "M": 1.0,
            "v0_mean": 1.0,
            "amplitude": 0.01,
            "mode": 1,
        },
        "solver": {"t_end": 200.0, "dt_max": 0.01},
        "sampling": {"interval": 0.5, "window": 1.0},
    },
    # excitable regime: the mean density sits inside the excitable set and
    # the seeded long-wave mode grows into a persistent pattern
    "pattern_regime": {
        "model": {"m": 1.0, "a": 0.0, "b": 1.0, "k": 2.0, "s0": 1.0},
        "grid": {"dim": 1, "extent_x": 20.0, "cells_x": 256},
        "initial": {
            "kind": "perturbed_cosine",
            "M": 2.0,
            "v0_mean": 2.0,
            "amplitude": 0.01,
            "mode": 1,
        },
        "solver": {"t_end": 4000.0, "dt_max": 0.05},
        "sampling": {"interval": 2.0, "window": 10.0},
    },
    # concentration mean starts below the density mean; the extended
    # functional and dissipation stay bounded
    "low_chemical": {
        "model": {"m": 2.0, "a": 0.0, "b": 1.0, "k": 1.0, "s0": 1.0},
        "grid": {"dim": 1, "extent_x": 10.0, "cells_x": 256},
        "initial": {
            "kind": "perturbed_cosine",
            "M": 1.0,
            "v0_mean": 0.5,
            "amplitude": 0.01,
            "mode": 1,
        },
        "solver": {"t_end": 50.0, "dt_max": 0.01},
        "sampling": {"interval": 0.25, "window": 1.0},
    },
}

_DEFAULTS: dict = {
    "model": {"m": 1.0, "a": 0.0, "b": 1.0, "k": 1.0, "s0": 1.0},
    "grid": {"dim": 1, "extent_x": 1.0, "cells_x": 64, "extent_y": 1.0, "cells_y": 64},
    "initial": {
        "kind": "homogeneous",
        "M": 1.0,
        "v0_mean": None,
        "amplitude": 0.0,
        "mode": 1,
        "path_u": None,
        "path_v": None,
        "noise_amplitude": 0.0,
    },
    "solver": {
        "cfl_safety": 0.45,
        "dt_max": 0.05,
        "t_end": 1.0,
        "v_scheme": "semi_implicit",
        "positivity_retries": 40,
    },
    "sampling": {"interval": 0.5, "window": 1.0},
    "output": {"directory": "out", "formats": "csv,json"},
    "scenario": {"engine": "auto"},
}

_KEY_TYPES = {
    ("model", "m"): float, ("model", "a"): float, ("model", "b"): float,
    ("model", "k"): float, ("model", "s0"): float,
    ("grid", "dim"): int, ("grid", "extent_x"): float, ("grid", "cells_x"): int,
    ("grid", "extent_y"): float, ("grid", "cells_y"): int,
    ("initial", "kind"): str, ("initial", "M"): float, ("initial", "v0_mean"): float,
    ("initial", "amplitude"): float, ("initial", "mode"): int,
    ("initial", "path_u"): str, ("initial", "path_v"): str,
    ("initial", "noise_amplitude"): float,
    ("solver", "cfl_safety"): float, ("solver", "dt_max"): float,
    ("solver", "t_end"): float, ("solver", "v_scheme"): str,
    ("solver", "positivity_retries"): int,
    ("sampling", "interval"): float, ("sampling", "window"): float,
    ("output", "directory"): str, ("output", "formats"): str,
    ("scenario", "preset"): str, ("scenario", "engine"): str,
}


def _coerce(section: str, key: str, raw, path: str):
    typ = _KEY_TYPES.get((section, key))
    if typ is None:
        raise ConfigError(f"unknown configuration key", key=f"{section}.{key}")
    if raw is None or isinstance(raw, typ):
        return raw
    try:
        if typ is int:
            return int(str(raw))
        if typ is float:
            return float(str(raw))
        return str(raw)
    except ValueError as exc:
        raise ConfigError(
            f"cannot parse {raw!r} as {typ.__name__} ({path})", key=f"{section}.{key}"
        ) from exc


def _merged_dict(overrides: dict, preset: str | None = None) -> dict:
    cfg = copy.deepcopy(_DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset!r}; available: {sorted(PRESETS)}",
                key="scenario.preset",
            )
        for section, keys in PRESETS[preset].items():
            cfg[section].update(keys)
    for section, keys in overrides.items():
        if section == "sweep":
            continue
        if section not in cfg:
            raise ConfigError(f"unknown configuration section [{section}]", key=section)
        for key, raw in keys.items():
            if key == "preset" and section == "scenario":
                continue
            cfg[section][key] = _coerce(section, key, raw, f"[{section}] {key}")
    return cfg


@dataclass
class InitialSpec:
    kind: str
    M: float = 1.0
    v0_mean: float | None = None
    amplitude: float = 0.0
    mode: int = 1
    path_u: str | None = None
    path_v: str | None = None
    noise_amplitude: float = 0.0


@dataclass
class ScenarioConfig:
    model: MotilityModel
    grid: Grid
    initial: InitialSpec
    solver: SolverConfig
    interval: float
    window: float
    out_dir: str
    formats: tuple[str, ...]
    engine: str = "auto"

    @classmethod
    def from_dict(cls, raw: dict, preset: str | None = None) -> "ScenarioConfig":
        cfg = _merged_dict(raw, preset)
        try:
            model = MotilityModel(**cfg["model"])
        except ChemolabError as exc:
            raise ConfigError(f"invalid motility parameters: {exc}", key="model") from exc
        g = cfg["grid"]
        if g["dim"] not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {g['dim']}", key="grid.dim")
        try:
            if g["dim"] == 1:
                grid = Grid((g["extent_x"],), (g["cells_x"],))
            else:
                grid = Grid((g["extent_x"], g["extent_y"]), (g["cells_x"], g["cells_y"]))
        except ChemolabError as exc:
            raise ConfigError(f"invalid grid: {exc}", key="grid") from exc
        ini = cfg["initial"]
        if ini["kind"] not in ("homogeneous", "perturbed_cosine", "from_file"):
            raise ConfigError(
                f"initial kind must be homogeneous, perturbed_cosine, or from_file,"
                f" got {ini['kind']!r}",
                key="initial.kind",
            )
        if ini["kind"] != "from_file":
            if ini["M"] <= 0.0:
                raise ConfigError("initial M must be positive", key="initial.M")
            if ini["amplitude"] < 0.0:
                raise ConfigError("amplitude must be nonnegative", key="initial.amplitude")
            if ini["kind"] == "perturbed_cosine" and ini["amplitude"] >= ini["M"]:
                raise ConfigError(
                    "perturbation amplitude must stay below M to keep the density"
                    " nonnegative",
                    key="initial.amplitude",
                )
        initial = InitialSpec(
            kind=ini["kind"],
            M=ini["M"],
            v0_mean=ini["v0_mean"],
            amplitude=ini["amplitude"],
            mode=ini["mode"],
            path_u=ini["path_u"],
            path_v=ini["path_v"],
            noise_amplitude=ini["noise_amplitude"],
        )
        try:
            solver = SolverConfig(**cfg["solver"])
        except ChemolabError as exc:
            raise ConfigError(f"invalid solver settings: {exc}", key="solver") from exc
        samp = cfg["sampling"]
        if samp["interval"] <= 0.0:
            raise ConfigError("sampling interval must be positive", key="sampling.interval")
        if samp["window"] <= 0.0:
            raise ConfigError("sampling window must be positive", key="sampling.window")
        out = cfg["output"]
        formats = tuple(s.strip() for s in str(out["formats"]).split(",") if s.strip())
        for fmt in formats:
            if fmt not in ("csv", "json"):
                raise ConfigError(f"unknown output format {fmt!r}", key="output.formats")
        return cls(
            model=model,
            grid=grid,
            initial=initial,
            solver=solver,
            interval=samp["interval"],
            window=samp["window"],
            out_dir=out["directory"],
            formats=formats,
            engine=cfg["scenario"].get("engine", "auto"),
        )


def _read_ini(path) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    # keep key case; the schema distinguishes M from m
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    return {section: dict(parser.items(section)) for section in parser.sections()}


def load_scenario(path) -> ScenarioConfig:
    raw = _read_ini(path)
    preset = raw.get("scenario", {}).get("preset")
    return ScenarioConfig.from_dict(raw, preset)


def build_initial(cfg: ScenarioConfig, seed: int = 0) -> tuple[ScalarField, ScalarField]:
    """Construct (u0, v0) from the initial spec; seeded noise is mean-corrected."""
    ini = cfg.initial
    grid = cfg.grid
    if ini.kind == "from_file":
        if not ini.path_u or not ini.path_v:
            raise ConfigError("from_file initial data needs path_u and path_v",
                              key="initial.path_u")
        u0, _ = load_field_csv(ini.path_u)
        v0, _ = load_field_csv(ini.path_v)
        if u0.grid != grid or v0.grid != grid:
            raise ConfigError("snapshot grids do not match the configured grid",
                              key="initial.path_u")
    else:
        v_mean = ini.v0_mean if ini.v0_mean is not None else ini.M
        if ini.kind == "homogeneous":
            u_vals = np.full(grid.cells, ini.M)
        else:
            x = grid.centers(0)
            wave = np.cos(ini.mode * math.pi * x / grid.extents[0])
            if grid.dim == 2:
                wave = np.broadcast_to(wave[:, None], grid.cells).copy()
            u_vals = ini.M + ini.amplitude * wave
        if ini.noise_amplitude > 0.0:
            rng = np.random.default_rng(seed)
            u_vals = u_vals + ini.noise_amplitude * rng.standard_normal(grid.cells)
        u0 = ScalarField(grid, u_vals)
        if ini.noise_amplitude > 0.0:
            # re-center so the measured mean is exactly the configured M
            u0 = ScalarField(grid, u0.values - (mean(u0) - ini.M))
        v0 = ScalarField(grid, np.full(grid.cells, v_mean))
    if np.any(u0.values < 0.0):
        raise ConfigError("initial density has negative cells", key="initial.amplitude")
    if np.any(v0.values < 0.0):
        raise ConfigError("initial concentration has negative cells", key="initial.v0_mean")
    return u0, v0


def _regime_labels(cfg: ScenarioConfig, M: float) -> dict:
    model = cfg.model
    member = in_excitable_set(model, M)
    intervals = excitable_set(model, np.geomspace(1e-8, max(1e4, 10.0 * M), 4096))
    return {
        "monotone_model": is_monotone(model),
        "M_in_excitable_set": member,
        # behavior with a nonempty excitable set that misses M is not pinned
        # down by the analysis; label it instead of asserting an outcome
        "open_regime": bool(intervals) and not member,
    }


def run_scenario(
    cfg: ScenarioConfig,
    seed: int = 0,
    out_dir: str | None = None,
    t_end: float | None = None,
    engine: str | None = None,
    quiet: bool = False,
) -> dict:
    """Run one scenario, write its outputs, and return the summary dict."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    solver_cfg = cfg.solver
    if t_end is not None:
        solver_cfg = SolverConfig(
            cfl_safety=solver_cfg.cfl_safety,
            dt_max=solver_cfg.dt_max,
            t_end=t_end,
            v_scheme=solver_cfg.v_scheme,
            positivity_retries=solver_cfg.positivity_retries,
        )
    u0, v0 = build_initial(cfg, seed)
    sampler = DiagnosticsSampler(cfg.model, cfg.grid, cfg.interval, cfg.window)
    started = _time.strftime("%Y-%m-%dT%H:%M:%S")
    result = run(u0, v0, cfg.model, solver_cfg, sampler=sampler,
                 engine=engine or cfg.engine)

    if "csv" in cfg.formats:
        sampler.write_csv(out / "diagnostics.csv")
        save_field_csv(ScalarField(cfg.grid, u0.values), out / "u_initial.csv",
                       name="u", time=0.0)
        save_field_csv(ScalarField(cfg.grid, v0.values), out / "v_initial.csv",
                       name="v", time=0.0)
        save_field_csv(result.state.u, out / "u_final.csv", name="u", time=result.state.t)
        save_field_csv(result.state.v, out / "v_final.csv", name="v", time=result.state.t)

    summary = sampler.summary()
    summary.update(_regime_labels(cfg, summary.get("M", mean(u0))))
    summary.update(
        {
            "seed": seed,
            "engine": result.engine,
            "steps": result.steps,
            "runtime_s": result.runtime_s,
            "started": started,
            "t_end": solver_cfg.t_end,
            "model": {
                "m": cfg.model.m, "a": cfg.model.a, "b": cfg.model.b,
                "k": cfg.model.k, "s0": cfg.model.s0,
            },
            "pattern_flag": pattern_flag(sampler.records),
            "max_dissipation_final": max(abs(d) for d in sampler.records[-1].dee)
            if sampler.records else None,
        }
    )
    if "json" in cfg.formats:
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
    if not quiet:
        log.info(
            "run complete: t=%.6g steps=%d engine=%s out=%s",
            result.state.t, result.steps, result.engine, out,
        )
    return summary


@dataclass
class SweepSpec:
    axes: list[tuple[str, list]]
    template: dict
    preset: str | None
    parallel: int = 2
    cap: int = 256
    points: list[dict] = dataclass_field(default_factory=list)

    def __post_init__(self):
        if not self.points:
            combos = itertools.product(*(vals for _, vals in self.axes))
            self.points = [
                dict(zip((name for name, _ in self.axes), combo)) for combo in combos
            ]
        if len(self.points) > self.cap:
            raise ConfigError(
                f"sweep has {len(self.points)} points, above the cap {self.cap}",
                key="sweep.cap",
            )


def _parse_axis_values(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def load_sweep(path) -> SweepSpec:
    raw = _read_ini(path)
    if "sweep" not in raw:
        raise ConfigError("sweep config needs a [sweep] section", key="sweep")
    sw = raw["sweep"]
    axes_text = sw.get("axes", "")
    if not axes_text.strip():
        raise ConfigError("sweep axes are empty", key="sweep.axes")
    axes: list[tuple[str, list]] = []
    for chunk in axes_text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError(
                f"axis {chunk!r} must look like 'section.key: v1, v2'", key="sweep.axes"
            )
        name, values_text = chunk.split(":", 1)
        name = name.strip()
        if name.count(".") != 1:
            raise ConfigError(f"axis path {name!r} must be section.key", key="sweep.axes")
        values = _parse_axis_values(values_text)
        deduped = list(dict.fromkeys(values))
        if len(deduped) < len(values):
            log.warning("sweep axis %s has duplicate values; deduplicated", name)
        if not deduped:
            raise ConfigError(f"axis {name!r} has no values", key="sweep.axes")
        axes.append((name, deduped))
    parallel = int(sw.get("parallel", 2))
    cap = int(sw.get("cap", 256))
    preset = raw.get("scenario", {}).get("preset")
    return SweepSpec(axes=axes, template=raw, preset=preset, parallel=parallel, cap=cap)


def _point_config(spec: SweepSpec, overrides: dict) -> ScenarioConfig:
    raw = copy.deepcopy(spec.template)
    raw.pop("sweep", None)
    for dotted, value in overrides.items():
        section, key = dotted.split(".")
        raw.setdefault(section, {})[key] = value
    return ScenarioConfig.from_dict(raw, spec.preset)


def _thread_width(requested: int) -> int:
    cap = os.environ.get("CHEMOLAB_THREADS")
    width = max(1, int(requested))
    if cap:
        try:
            width = min(width, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer CHEMOLAB_THREADS=%r", cap)
    return width


def run_sweep(
    spec: SweepSpec,
    out_dir: str = "sweep_out",
    seed: int = 0,
    quiet: bool = True,
) -> tuple[int, list[dict]]:
    """Run all sweep points concurrently; aggregate one phase-diagram CSV.

    Returns (number of failed points, per-point row dicts).  Every point
    appears exactly once, in point order, with its status.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[dict | None] = [None] * len(spec.points)

    def one(idx: int):
        overrides = spec.points[idx]
        row = {"point": idx, **{k: v for k, v in overrides.items()}}
        try:
            cfg = _point_config(spec, overrides)
            summary = run_scenario(
                cfg, seed=seed, out_dir=out / f"point_{idx:03d}", quiet=quiet
            )
            row.update(
                {
                    "status": "ok",
                    "message": "",
                    "monotone_model": summary["monotone_model"],
                    "M_in_excitable_set": summary["M_in_excitable_set"],
                    "open_regime": summary["open_regime"],
                    "final_v1": summary["v1_final"],
                    "pattern_flag": summary["pattern_flag"],
                }
            )
        except ChemolabError as exc:
            row.update({"status": "error", "message": f"{type(exc).__name__}: {exc}"})
        rows[idx] = row

    width = _thread_width(spec.parallel)
    if width == 1 or len(spec.points) == 1:
        for i in range(len(spec.points)):
            one(i)
    else:
        with ThreadPoolExecutor(max_workers=width) as pool:
            list(pool.map(one, range(len(spec.points))))

    axis_names = [name for name, _ in spec.axes]
    columns = (
        ["point"] + axis_names
        + ["monotone_model", "M_in_excitable_set", "open_regime",
           "final_v1", "pattern_flag"]
    )
    # the aggregate table holds only the points that completed; failures are
    # recorded one per line in a companion file and via the return value
    with open(out / "sweep_results.csv", "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            if row["status"] == "ok":
                fh.write(",".join(str(row.get(c, "")) for c in columns) + "\n")
    failed = [row for row in rows if row["status"] != "ok"]
    if failed:
        with open(out / "sweep_failures.csv", "w") as fh:
            fh.write(",".join(["point"] + axis_names + ["message"]) + "\n")
            for row in failed:
                cells = [str(row.get(c, "")) for c in ["point"] + axis_names]
                fh.write(",".join(cells + ['"' + row["message"].replace('"', "'") + '"'])
                         + "\n")
    return len(failed), [row for row in rows if row is not None]
