"""Offset-grid experiments: excitation/inversion profiles, transfer maps
over the two-spin offset plane, the polarization-transfer echo, band
estimation, and deterministic CSV/JSON output.

Grid offsets are given in Hz relative to each pulse's carrier (the sweep
of a backward-half pulse starts on carrier and runs towards positive
offsets; a full sech sweeps symmetrically through the carrier).  Every grid
point is an isolated pure computation, so points may be distributed over
worker processes without changing a single bit of the output: results are
always assembled in row-major order with the I offset as the outer loop.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .dynamics import (PulsePair, SpinSystem, default_dt_for,
                       interaction_propagator, pi_refocused_propagator,
                       single_spin_propagator)
from .mq import evomq
from .operators import BASIS_LABELS, basis_matrix, decompose
from .pulses import PulseSpec, PulseWaveform, design_waveform, phase_shift

__all__ = [
    "BandEstimate",
    "OffsetGrid",
    "SweepResult",
    "estimate_band",
    "hh_echo_sequence",
    "offset_plane_sweep",
    "profile_observables",
    "single_spin_profile",
    "sweep_observables",
    "transfer_efficiency",
]

SEQUENCES = ("interaction", "pi_refocus")

_HALF = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex) / 2,
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex) / 2,
    "z": np.array([[1, 0], [0, -1]], dtype=complex) / 2,
}


@dataclass(frozen=True)
class OffsetGrid:
    """Offset axes in Hz; ``axis_s`` is None for single-spin profiles."""

    axis_i: np.ndarray
    axis_s: np.ndarray | None = None

    def __post_init__(self) -> None:
        for name in ("axis_i", "axis_s"):
            ax = getattr(self, name)
            if ax is None:
                continue
            ax = np.asarray(ax, dtype=float)
            if ax.size == 0:
                raise ValueError(f"{name} must be non-empty")
            if ax.size > 1 and not np.all(np.diff(ax) > 0):
                raise ValueError(f"{name} must be strictly increasing")
            ax.setflags(write=False)
            object.__setattr__(self, name, ax)

    @classmethod
    def line(cls, min_hz: float, max_hz: float, count: int) -> "OffsetGrid":
        return cls(np.linspace(min_hz, max_hz, count))

    @classmethod
    def plane(cls, min_i: float, max_i: float, n_i: int,
              min_s: float, max_s: float, n_s: int) -> "OffsetGrid":
        return cls(np.linspace(min_i, max_i, n_i), np.linspace(min_s, max_s, n_s))

    @property
    def is_2d(self) -> bool:
        return self.axis_s is not None

    @property
    def shape(self) -> tuple[int, ...]:
        if self.is_2d:
            return (len(self.axis_i), len(self.axis_s))
        return (len(self.axis_i),)

    @property
    def max_abs_offset_hz(self) -> float:
        m = float(np.max(np.abs(self.axis_i)))
        if self.is_2d:
            m = max(m, float(np.max(np.abs(self.axis_s))))
        return m


@dataclass
class SweepResult:
    """Named observable arrays over an offset grid plus run metadata."""

    grid: OffsetGrid
    observables: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, arr in self.observables.items():
            if arr.shape != self.grid.shape:
                raise ValueError(f"observable {name!r} shape {arr.shape} "
                                 f"does not match grid {self.grid.shape}")

    def write_csv(self, path) -> None:
        """Row-major CSV (I offset outer), 17 significant digits, LF."""
        names = list(self.observables)
        with open(path, "w", newline="\n") as fh:
            if self.grid.is_2d:
                fh.write("offset_i_hz,offset_s_hz," + ",".join(names) + "\n")
                for a, fi in enumerate(self.grid.axis_i):
                    for b, fs in enumerate(self.grid.axis_s):
                        row = [f"{fi:.17g}", f"{fs:.17g}"]
                        row += [f"{self.observables[n][a, b]:.17g}" for n in names]
                        fh.write(",".join(row) + "\n")
            else:
                fh.write("offset_i_hz," + ",".join(names) + "\n")
                for a, fi in enumerate(self.grid.axis_i):
                    row = [f"{fi:.17g}"]
                    row += [f"{self.observables[n][a]:.17g}" for n in names]
                    fh.write(",".join(row) + "\n")

    def write_metadata(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")


def sweep_observables(names=None) -> dict:
    """Resolve observable names for two-spin sweeps.

    Valid names: ``c_<basis label>`` for any product-operator coefficient,
    ``evomq``, ``mxy_i``, ``mxy_s``, ``sz_transfer`` (alias of ``c_Sz``)
    and ``iz_survival`` (alias of ``c_Iz``).
    """
    registry = {f"c_{lab}": (lambda c, lab=lab: c[lab]) for lab in BASIS_LABELS}
    registry["evomq"] = evomq
    registry["mxy_i"] = lambda c: math.hypot(c["Ix"], c["Iy"])
    registry["mxy_s"] = lambda c: math.hypot(c["Sx"], c["Sy"])
    registry["sz_transfer"] = lambda c: c["Sz"]
    registry["iz_survival"] = lambda c: c["Iz"]
    if names is None:
        return registry
    out = {}
    for name in names:
        if name not in registry:
            raise ValueError(f"unknown observable {name!r}")
        out[name] = registry[name]
    return out


PROFILE_OBSERVABLES = ("mz_over_m0", "mx", "my", "mxy")


def profile_observables(names=None) -> tuple[str, ...]:
    if names is None:
        return ("mz_over_m0", "mx", "my")
    for name in names:
        if name not in PROFILE_OBSERVABLES:
            raise ValueError(f"unknown profile observable {name!r}")
    return tuple(names)


def single_spin_profile(spec: PulseSpec | PulseWaveform, grid: OffsetGrid,
                        direction: str = "forward", dt: float | None = None,
                        observables=None) -> SweepResult:
    """Sweep one spin's offset and record the magnetization after the pulse.

    The spin starts at thermal Iz; ``direction`` applies the propagator
    ("forward", rho -> U rho U+) or its adjoint.  ``mz_over_m0`` is the
    surviving longitudinal fraction, ``mx``/``my`` the created transverse
    components.  ``spec`` may also be a ready waveform (an imported table,
    say).
    """
    if direction not in ("forward", "adjoint"):
        raise ValueError("direction must be 'forward' or 'adjoint'")
    if grid.is_2d:
        raise ValueError("single_spin_profile expects a 1-D grid")
    names = profile_observables(observables)
    w = spec if isinstance(spec, PulseWaveform) else design_waveform(spec)
    if dt is None:
        from .pulses import sweep_extent
        nu_max = max(grid.max_abs_offset_hz + sweep_extent(w) / (2 * math.pi),
                     w.omega0 / (2 * math.pi), 1.0)
        dt = 1.0 / (50.0 * nu_max)
    rows = {name: np.empty(len(grid.axis_i)) for name in names}
    for k, off in enumerate(grid.axis_i):
        u = single_spin_propagator(2 * math.pi * off, w, w.t_p, dt)
        if direction == "adjoint":
            u = u.conj().T
        rho = u @ _HALF["z"] @ u.conj().T
        vals = {ax: 2 * np.trace(rho @ _HALF[ax]).real for ax in "xyz"}
        full = {"mz_over_m0": vals["z"], "mx": vals["x"], "my": vals["y"],
                "mxy": math.hypot(vals["x"], vals["y"])}
        for name in names:
            rows[name][k] = full[name]
    meta = {"kind": "profile", "direction": direction, "dt_s": dt,
            "pulse": _spec_meta(w), "version": __version__,
            "observables": list(names)}
    return SweepResult(OffsetGrid(grid.axis_i), rows, meta)


# --- two-spin plane sweeps ----------------------------------------------
#
# Worker functions are module-level so process pools can pickle the tasks;
# each task re-derives everything from the (immutable) arguments, which
# keeps 1-worker and N-worker runs bit-identical.

def _sequence_propagator(sequence: str, sys: SpinSystem, pp: PulsePair,
                         t: float, dt: float) -> np.ndarray:
    if sequence == "interaction":
        return interaction_propagator(sys, pp, t, dt)
    if sequence == "pi_refocus":
        return pi_refocused_propagator(sys, pp, t, dt)
    raise ValueError(f"unknown sequence {sequence!r}")


def _plane_point(args) -> tuple[float, ...]:
    (off_i, off_s, j_hz, pair, sequence, initial, names, dt) = args
    sys = SpinSystem.from_offsets_hz(off_i, off_s, j_hz)
    r = _sequence_propagator(sequence, sys, pair, pair.t_p, dt)
    rho = r @ basis_matrix(initial) @ r.conj().T
    coeffs = decompose(rho)
    funcs = sweep_observables(names)
    return tuple(float(funcs[n](coeffs)) for n in names)


def _echo_point(args) -> tuple[float, ...]:
    (off_i, off_s, j_hz, pair_x, pair_y, names, dt) = args
    sys = SpinSystem.from_offsets_hz(off_i, off_s, j_hz)
    u_e1 = interaction_propagator(sys, pair_x, pair_x.t_p, dt)
    u_e2 = interaction_propagator(sys, pair_y, pair_y.t_p, dt)
    r = u_e2 @ u_e1
    rho = r @ basis_matrix("Iz") @ r.conj().T
    coeffs = decompose(rho)
    funcs = sweep_observables(names)
    return tuple(float(funcs[n](coeffs)) for n in names)


def _run_points(task_fn, tasks, workers: int):
    if workers <= 1:
        return [task_fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task_fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _gather(grid: OffsetGrid, names, results) -> dict[str, np.ndarray]:
    out = {name: np.empty(grid.shape) for name in names}
    k = 0
    for a in range(len(grid.axis_i)):
        for b in range(len(grid.axis_s)):
            for c, name in enumerate(names):
                out[name][a, b] = results[k][c]
            k += 1
    return out


def offset_plane_sweep(j_hz: float, pair: PulsePair, grid: OffsetGrid,
                       sequence: str = "interaction", initial: str = "Iz",
                       observables=("evomq", "c_Iz", "c_Sz"),
                       dt: float | None = None, workers: int = 1) -> SweepResult:
    """Evolve one basis operator at every offset-plane point.

    ``sequence`` picks the propagator: ``interaction`` is U0+ UT (coupling
    evolution in the drive frame); ``pi_refocus`` is UT followed by the
    coupling-free propagator of the pi-phase-shifted pair.
    """
    if not grid.is_2d:
        raise ValueError("offset_plane_sweep expects a 2-D grid")
    if sequence not in SEQUENCES:
        raise ValueError(f"unknown sequence {sequence!r}")
    if initial not in BASIS_LABELS:
        raise ValueError(f"unknown initial operator {initial!r}")
    names = tuple(sweep_observables(observables))
    if dt is None:
        dt = default_dt_for(pair, grid.max_abs_offset_hz, j_hz)
    tasks = [(float(fi), float(fs), j_hz, pair, sequence, initial, names, dt)
             for fi in grid.axis_i for fs in grid.axis_s]
    results = _run_points(_plane_point, tasks, workers)
    meta = {"kind": "sweep", "sequence": sequence, "initial": initial,
            "dt_s": dt, "system": {"j_hz": j_hz}, "version": __version__,
            "observables": list(names),
            "pulse_i": _spec_meta(pair.pulse_i), "pulse_s": _spec_meta(pair.pulse_s)}
    return SweepResult(grid, _gather(grid, names, results), meta)


def hh_echo_sequence(j_hz: float, spec: PulseSpec | PulseWaveform, grid: OffsetGrid,
                     dt: float | None = None, workers: int = 1,
                     observables=("sz_transfer", "evomq", "c_Iz")) -> SweepResult:
    """Two-block polarization-transfer echo over the offset plane.

    Each block is the drive-frame coupling propagator U0+ UT of an identical
    pulse pair; the first block runs at x phase, the second at y phase.
    Initial Iz is routed through even-order coherence into Sz, recorded as
    ``sz_transfer``.
    """
    if not grid.is_2d:
        raise ValueError("hh_echo_sequence expects a 2-D grid")
    names = tuple(sweep_observables(observables))
    wx = spec if isinstance(spec, PulseWaveform) else design_waveform(spec)
    wy = phase_shift(wx, math.pi / 2)
    pair_x = PulsePair.identical(wx)
    pair_y = PulsePair.identical(wy)
    if dt is None:
        dt = default_dt_for(pair_x, grid.max_abs_offset_hz, j_hz)
    tasks = [(float(fi), float(fs), j_hz, pair_x, pair_y, names, dt)
             for fi in grid.axis_i for fs in grid.axis_s]
    results = _run_points(_echo_point, tasks, workers)
    meta = {"kind": "echo", "sequence": "echo_xy", "initial": "Iz",
            "dt_s": dt, "system": {"j_hz": j_hz}, "version": __version__,
            "observables": list(names), "pulse": _spec_meta(wx)}
    return SweepResult(grid, _gather(grid, names, results), meta)


def _spec_meta(w: PulseWaveform) -> dict:
    if w.spec is not None:
        return asdict(w.spec)
    return {"shape": "custom_table", "t_p": w.t_p, "dt": w.dt}


@dataclass(frozen=True)
class BandEstimate:
    """Largest contiguous offset interval meeting a profile criterion."""

    w_minus: float
    w_plus: float
    criterion: str

    def __post_init__(self) -> None:
        if self.w_minus > self.w_plus:
            raise ValueError("band edges out of order")

    @property
    def width(self) -> float:
        return self.w_plus - self.w_minus


def estimate_band(result: SweepResult, observable: str, target: float,
                  threshold: float) -> BandEstimate | None:
    """Largest contiguous run of grid points with |value - target| below
    threshold; None when no point qualifies."""
    if result.grid.is_2d:
        raise ValueError("band estimation expects a 1-D profile")
    if observable not in result.observables:
        raise ValueError(f"profile has no observable {observable!r}")
    vals = result.observables[observable]
    ok = np.abs(vals - target) <= threshold
    best: tuple[int, int] | None = None
    start = None
    for k, flag in enumerate(list(ok) + [False]):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            if best is None or (k - start) > (best[1] - best[0]):
                best = (start, k)
            start = None
    if best is None:
        return None
    axis = result.grid.axis_i
    crit = f"|{observable} - ({target:g})| <= {threshold:g}"
    return BandEstimate(float(axis[best[0]]), float(axis[best[1] - 1]), crit)


def transfer_efficiency(coeffs, target: str) -> float:
    """Coefficient of the target basis operator in a final decomposition
    (the transfer efficiency when the initial state was a unit basis
    operator)."""
    if target not in BASIS_LABELS:
        raise ValueError(f"unknown basis label {target!r}")
    return float(coeffs[target])


def cpu_workers(requested: int | None) -> int:
    """Clamp a worker request to the available CPUs (1 if unknown)."""
    if requested is None or requested < 1:
        return 1
    return min(requested, os.cpu_count() or 1)
