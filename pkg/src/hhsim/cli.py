"""Command-line front end.

Runs one experiment per invocation, described by a JSON config file
(``.cfg``).  The ``command`` key selects the run type::

    design-pulse   write a sampled waveform table
    profile        1-D single-spin offset profile (one column per duration)
    sweep          2-D offset-plane sweep of a chosen sequence
    echo           the two-block polarization-transfer echo map
    validate       run the invariant suite and report pass/fail

Units at this boundary are human-scale: Hz, ms, degrees.  Unknown config
keys are rejected.  Exit codes: 0 success, 1 validation failure, 2 config
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .dynamics import PulsePair
from .experiments import (OffsetGrid, SweepResult, cpu_workers,
                          hh_echo_sequence, offset_plane_sweep,
                          profile_observables, single_spin_profile,
                          sweep_observables)
from .pulses import PulseSpec, design_waveform, save_waveform

COMMANDS = ("design-pulse", "profile", "sweep", "echo", "validate")


class ConfigError(Exception):
    """Invalid or unparsable run configuration; message names the key."""


# --- strict config parsing ------------------------------------------------

def _require_map(raw, path: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    return raw


def _reject_unknown(raw: dict, path: str, allowed) -> None:
    for key in raw:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown key {where}")


def _get(raw: dict, path: str, key: str, kind, required=True, default=None):
    if key not in raw:
        if required:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"missing key {where}")
        return default
    val = raw[key]
    where = f"{path}.{key}" if path else key
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{where}: expected an integer")
        return val
    if kind is str:
        if not isinstance(val, str):
            raise ConfigError(f"{where}: expected a string")
        return val
    if kind is list:
        if not isinstance(val, list):
            raise ConfigError(f"{where}: expected a list")
        return val
    if kind is dict:
        if not isinstance(val, dict):
            raise ConfigError(f"{where}: expected an object")
        return val
    raise AssertionError(kind)


@dataclass(frozen=True)
class AxisSpec:
    min_hz: float
    max_hz: float
    count: int
    count_paper: int | None = None

    def points(self, scale: str) -> int:
        if scale == "paper" and self.count_paper is not None:
            return self.count_paper
        return self.count


@dataclass(frozen=True)
class RunConfig:
    """Validated run description (still in boundary units)."""

    command: str
    pulse: PulseSpec | None = None
    durations_s: tuple[float, ...] = ()
    axis_i: AxisSpec | None = None
    axis_s: AxisSpec | None = None
    j_hz: float | None = None
    sequence: str | None = None
    initial: str | None = None
    direction: str = "forward"
    observables: tuple[str, ...] = ()
    dt_us: float | None = None
    output: str | None = None
    raw: dict = field(default=None, compare=False, repr=False)


def _parse_pulse(raw: dict, path: str, need_duration: bool) -> tuple[PulseSpec | None, float | None]:
    _require_map(raw, path)
    _reject_unknown(raw, path, ("shape", "amplitude_hz", "beta_per_s", "adiabatic_factor",
                                "duration_ms", "design_rule", "phase0_deg", "sweep_sign"))
    shape = _get(raw, path, "shape", str)
    amp_hz = _get(raw, path, "amplitude_hz", float)
    beta = _get(raw, path, "beta_per_s", float, required=shape != "constant", default=1.0)
    p = _get(raw, path, "adiabatic_factor", float)
    dur_ms = _get(raw, path, "duration_ms", float, required=need_duration)
    rule = _get(raw, path, "design_rule", str, required=False, default="standard")
    phase0 = _get(raw, path, "phase0_deg", float, required=False, default=0.0)
    sign = _get(raw, path, "sweep_sign", int, required=False, default=1)
    t_p = None if dur_ms is None else dur_ms / 1e3
    try:
        spec = None if t_p is None else PulseSpec(
            shape=shape, omega0=2 * math.pi * amp_hz, beta=beta, p=p, t_p=t_p,
            design_rule=rule, phase0=math.radians(phase0), sweep_sign=sign)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return spec, t_p


def _parse_pulse_template(raw: dict, path: str) -> dict:
    # validated lazily per duration through _parse_pulse
    _require_map(raw, path)
    if "duration_ms" in raw:
        raise ConfigError(f"{path}.duration_ms conflicts with durations_ms")
    return raw


def _parse_axis(raw: dict, path: str) -> AxisSpec:
    _require_map(raw, path)
    _reject_unknown(raw, path, ("min_hz", "max_hz", "count", "count_paper"))
    ax = AxisSpec(
        _get(raw, path, "min_hz", float),
        _get(raw, path, "max_hz", float),
        _get(raw, path, "count", int),
        _get(raw, path, "count_paper", int, required=False),
    )
    if ax.count < 1 or (ax.count_paper is not None and ax.count_paper < 1):
        raise ConfigError(f"{path}: point count must be positive")
    if not ax.max_hz > ax.min_hz:
        if ax.count == 1 and ax.max_hz == ax.min_hz:
            return ax
        raise ConfigError(f"{path}: max_hz must exceed min_hz")
    return ax


def _parse_grid(raw: dict, path: str, want_2d: bool) -> tuple[AxisSpec, AxisSpec | None]:
    _require_map(raw, path)
    allowed = ("axis_i", "axis_s") if want_2d else ("axis_i",)
    _reject_unknown(raw, path, allowed)
    if "axis_i" not in raw or not raw.get("axis_i"):
        raise ConfigError(f"empty or missing {path}.axis_i")
    axis_i = _parse_axis(raw["axis_i"], f"{path}.axis_i")
    axis_s = None
    if want_2d:
        if "axis_s" not in raw or not raw.get("axis_s"):
            raise ConfigError(f"empty or missing {path}.axis_s")
        axis_s = _parse_axis(raw["axis_s"], f"{path}.axis_s")
    return axis_i, axis_s


def _parse_system(raw: dict, path: str) -> float:
    _require_map(raw, path)
    _reject_unknown(raw, path, ("j_hz",))
    return _get(raw, path, "j_hz", float)


def parse_config(raw: dict) -> RunConfig:
    """Validate a raw config dict into a :class:`RunConfig`.

    Raises :class:`ConfigError` naming the offending key.
    """
    _require_map(raw, "")
    command = _get(raw, "", "command", str)
    if command not in COMMANDS:
        raise ConfigError(f"command: unknown command {command!r}")

    if command == "validate":
        _reject_unknown(raw, "", ("command",))
        return RunConfig(command=command, raw=raw)

    if command == "design-pulse":
        _reject_unknown(raw, "", ("command", "pulse", "dt_us", "output"))
        spec, _ = _parse_pulse(_get(raw, "", "pulse", dict), "pulse", need_duration=True)
        return RunConfig(command=command, pulse=spec,
                         dt_us=_get(raw, "", "dt_us", float, required=False),
                         output=_get(raw, "", "output", str), raw=raw)

    if command == "profile":
        _reject_unknown(raw, "", ("command", "pulse", "durations_ms", "grid", "direction",
                                  "observables", "dt_us", "output"))
        durations = _get(raw, "", "durations_ms", list, required=False)
        pulse_raw = _get(raw, "", "pulse", dict)
        if durations is not None:
            _parse_pulse_template(pulse_raw, "pulse")
            durs = []
            for k, d in enumerate(durations):
                if isinstance(d, bool) or not isinstance(d, (int, float)) or d <= 0:
                    raise ConfigError(f"durations_ms[{k}]: expected a positive number")
                durs.append(float(d) / 1e3)
            spec, _ = _parse_pulse({**pulse_raw, "duration_ms": durations[0]},
                                   "pulse", need_duration=True)
            durations_s = tuple(durs)
        else:
            spec, t_p = _parse_pulse(pulse_raw, "pulse", need_duration=True)
            durations_s = (t_p,)
        axis_i, _ = _parse_grid(_get(raw, "", "grid", dict), "grid", want_2d=False)
        obs = tuple(_get(raw, "", "observables", list, required=False,
                         default=["mz_over_m0"]))
        profile_observables(obs)
        direction = _get(raw, "", "direction", str, required=False, default="forward")
        if direction not in ("forward", "adjoint"):
            raise ConfigError("direction: expected 'forward' or 'adjoint'")
        return RunConfig(command=command, pulse=spec, durations_s=durations_s,
                         axis_i=axis_i, direction=direction, observables=obs,
                         dt_us=_get(raw, "", "dt_us", float, required=False),
                         output=_get(raw, "", "output", str), raw=raw)

    if command == "sweep":
        _reject_unknown(raw, "", ("command", "pulse", "system", "grid", "sequence",
                                  "initial", "observables", "dt_us", "output"))
        spec, _ = _parse_pulse(_get(raw, "", "pulse", dict), "pulse", need_duration=True)
        j_hz = _parse_system(_get(raw, "", "system", dict), "system")
        axis_i, axis_s = _parse_grid(_get(raw, "", "grid", dict), "grid", want_2d=True)
        sequence = _get(raw, "", "sequence", str)
        if sequence not in ("interaction", "pi_refocus"):
            raise ConfigError("sequence: expected 'interaction' or 'pi_refocus'")
        initial = _get(raw, "", "initial", str)
        obs = tuple(_get(raw, "", "observables", list))
        try:
            sweep_observables(obs)
        except ValueError as exc:
            raise ConfigError(f"observables: {exc}") from None
        return RunConfig(command=command, pulse=spec, j_hz=j_hz, axis_i=axis_i,
                         axis_s=axis_s, sequence=sequence, initial=initial,
                         observables=obs,
                         dt_us=_get(raw, "", "dt_us", float, required=False),
                         output=_get(raw, "", "output", str), raw=raw)

    # echo
    _reject_unknown(raw, "", ("command", "pulse", "system", "grid",
                              "observables", "dt_us", "output"))
    spec, _ = _parse_pulse(_get(raw, "", "pulse", dict), "pulse", need_duration=True)
    j_hz = _parse_system(_get(raw, "", "system", dict), "system")
    axis_i, axis_s = _parse_grid(_get(raw, "", "grid", dict), "grid", want_2d=True)
    obs = tuple(_get(raw, "", "observables", list, required=False,
                     default=["sz_transfer", "evomq", "c_Iz"]))
    try:
        sweep_observables(obs)
    except ValueError as exc:
        raise ConfigError(f"observables: {exc}") from None
    return RunConfig(command="echo", pulse=spec, j_hz=j_hz, axis_i=axis_i,
                     axis_s=axis_s, observables=obs,
                     dt_us=_get(raw, "", "dt_us", float, required=False),
                     output=_get(raw, "", "output", str), raw=raw)


# --- presets ---------------------------------------------------------------

def preset_names() -> list[str]:
    root = resources.files("hhsim").joinpath("presets")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_config(ref: str) -> dict:
    """Load a config from a path, or from the bundled presets by name."""
    path = Path(ref)
    if not path.exists():
        name = ref[:-4] if ref.endswith(".cfg") else ref
        if name in preset_names():
            text = resources.files("hhsim").joinpath(f"presets/{name}.cfg").read_text()
            return json.loads(text)
        raise ConfigError(f"config not found: {ref}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config does not parse as JSON: {exc}") from None


# --- command execution -----------------------------------------------------

def _grid_from(cfg: RunConfig, scale: str) -> OffsetGrid:
    import numpy as np
    ax_i = np.linspace(cfg.axis_i.min_hz, cfg.axis_i.max_hz, cfg.axis_i.points(scale))
    if cfg.axis_s is None:
        return OffsetGrid(ax_i)
    ax_s = np.linspace(cfg.axis_s.min_hz, cfg.axis_s.max_hz, cfg.axis_s.points(scale))
    return OffsetGrid(ax_i, ax_s)


def _dt_seconds(cfg: RunConfig, override_us: float | None) -> float | None:
    us = override_us if override_us is not None else cfg.dt_us
    return None if us is None else us * 1e-6


def _run_profile(cfg: RunConfig, dt: float | None, scale: str, workers: int) -> SweepResult:
    from dataclasses import replace
    grid = _grid_from(cfg, scale)
    merged: dict = {}
    dts = {}
    multi = len(cfg.durations_s) > 1
    for t_p in cfg.durations_s:
        spec = replace(cfg.pulse, t_p=t_p)
        res = single_spin_profile(spec, grid, cfg.direction, dt, cfg.observables)
        dts[f"{t_p * 1e3:g}"] = res.metadata["dt_s"]
        for name, arr in res.observables.items():
            key = f"{name}_tp{t_p * 1e3:g}ms" if multi else name
            merged[key] = arr
    meta = {"kind": "profile", "direction": cfg.direction,
            "durations_ms": [t * 1e3 for t in cfg.durations_s],
            "dt_s_by_duration_ms": dts, "config": cfg.raw}
    return SweepResult(grid, merged, meta)


def run(cfg: RunConfig, output: str | None = None, workers: int = 1,
        dt_us: float | None = None, grid_scale: str = "coarse") -> int:
    """Execute a validated config; returns the process exit code."""
    workers = cpu_workers(workers)
    if cfg.command == "validate":
        from .validate import run_all
        results = run_all()
        for r in results:
            print(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.detail}")
        bad = [r for r in results if not r.ok]
        print(f"{len(results) - len(bad)}/{len(results)} properties hold")
        return 0 if not bad else 1

    out_path = Path(output or cfg.output)
    if cfg.command == "design-pulse":
        w = design_waveform(cfg.pulse, _dt_seconds(cfg, dt_us))
        save_waveform(w, out_path)
        print(f"wrote waveform table {out_path} ({len(w.amp)} samples)")
        return 0

    dt = _dt_seconds(cfg, dt_us)
    if cfg.command == "profile":
        result = _run_profile(cfg, dt, grid_scale, workers)
    elif cfg.command == "sweep":
        pair = PulsePair.identical(design_waveform(cfg.pulse))
        result = offset_plane_sweep(cfg.j_hz, pair, _grid_from(cfg, grid_scale),
                                    cfg.sequence, cfg.initial, cfg.observables,
                                    dt, workers)
        result.metadata["config"] = cfg.raw
    else:
        result = hh_echo_sequence(cfg.j_hz, cfg.pulse, _grid_from(cfg, grid_scale),
                                  dt, workers, cfg.observables)
        result.metadata["config"] = cfg.raw

    result.write_csv(out_path)
    result.write_metadata(out_path.with_suffix(".json"))
    print(f"wrote {out_path} and {out_path.with_suffix('.json')}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hhsim",
        description="Two-spin Hartmann-Hahn transfer simulator (config-driven)")
    parser.add_argument("--config", help="config file path or bundled preset name")
    parser.add_argument("--output", help="override the config's output path")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker processes for grid sweeps (default 1)")
    parser.add_argument("--dt-us", type=float, default=None,
                        help="override the integration slice width, microseconds")
    parser.add_argument("--grid-scale", choices=("coarse", "paper"), default="coarse",
                        help="use the config's coarse or full figure-resolution grids")
    parser.add_argument("--list-presets", action="store_true",
                        help="list bundled preset configs and exit")
    args = parser.parse_args(argv)

    if args.list_presets:
        for name in preset_names():
            print(name)
        return 0
    if not args.config:
        parser.error("--config is required (or use --list-presets)")

    try:
        cfg = parse_config(load_config(args.config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg, args.output, args.workers, args.dt_us, args.grid_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
