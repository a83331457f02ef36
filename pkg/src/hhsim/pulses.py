"""Amplitude/frequency/phase modulation design for swept-frequency pulses.

A pulse is described by a :class:`PulseSpec` (shape + design parameters) and
realized as a sampled :class:`PulseWaveform`.  Two design rules build the
frequency sweep from the amplitude envelope ``w1(t)``:

``standard``
    ``d(wr)/dt = p * w1(t)**2`` -- the usual constant-adiabaticity chirp.

``am_compensated``
    ``|d(wr)/dt| + (2*sqrt(3)/9) * |d(w1)/dt| = p * w1(t)**2`` -- the same
    rule with the envelope-derivative term retained.  The sweep rate is
    clamped at zero wherever the derivative term exceeds ``p * w1**2``
    (possible only in deep truncation tails), keeping the sweep monotone.

Sweep origin conventions: the ``sech_backward_half`` shape starts at full
amplitude with ``wr(0) = 0`` and sweeps towards positive offsets; the
``sech_full`` shape peaks mid-pulse and sweeps symmetrically through the
carrier, ``wr(t_p/2) = 0``.  Both are flipped by ``sweep_sign = -1``.

All frequencies/amplitudes are rad/s, times are seconds, phases radians.
Waveforms sample the analytic modulation functions, so the sample interval
carries no physics; propagation re-evaluates the closed forms at whatever
times it needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid

__all__ = [
    "PulseSpec",
    "PulseWaveform",
    "adiabatic_factor",
    "beta_from_truncation",
    "design_fm_am_compensated",
    "design_fm_standard",
    "design_waveform",
    "load_waveform",
    "phase_shift",
    "save_waveform",
    "sech_amplitude",
    "sweep_extent",
]

#: weight of the amplitude-derivative term in the compensated design rule
AM_TERM_COEFF = 2.0 * math.sqrt(3.0) / 9.0

_SHAPES = ("sech_full", "sech_backward_half", "constant", "custom_table")
_RULES = ("standard", "am_compensated")


@dataclass(frozen=True)
class PulseSpec:
    """Design parameters of one swept-frequency pulse.

    Parameters
    ----------
    shape : str
        ``sech_backward_half`` (decaying half-sech from t=0), ``sech_full``
        (sech peaking at t_p/2), or ``constant`` (flat envelope; mainly for
        tests and synthetic chirps).
    omega0 : float
        Peak RF amplitude, rad/s.
    beta : float
        sech rate/truncation parameter, 1/s (ignored for ``constant``).
    p : float
        Constant adiabatic factor of the design rule (1/3 for inversion
        pulses, 2.3 for the quasi-adiabatic 90-degree pulses).
    t_p : float
        Pulse duration, s.
    design_rule : str
        ``standard`` or ``am_compensated``.
    phase0 : float
        Constant RF phase offset, rad (0 = x phase, pi/2 = y phase).
    sweep_sign : int
        +1 sweeps towards positive offsets, -1 mirrors the sweep.
    """

    shape: str
    omega0: float
    beta: float
    p: float
    t_p: float
    design_rule: str = "standard"
    phase0: float = 0.0
    sweep_sign: int = 1

    def __post_init__(self) -> None:
        if self.shape not in _SHAPES:
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.shape == "custom_table":
            raise ValueError("custom_table waveforms are loaded, not designed")
        if self.design_rule not in _RULES:
            raise ValueError(f"unknown design rule {self.design_rule!r}")
        if not (self.omega0 > 0 and np.isfinite(self.omega0)):
            raise ValueError("omega0 must be positive")
        if not (self.t_p > 0 and np.isfinite(self.t_p)):
            raise ValueError("t_p must be positive")
        if not (self.p > 0 and np.isfinite(self.p)):
            raise ValueError("adiabatic factor p must be positive")
        if self.shape != "constant" and not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError("beta must be positive for sech shapes")
        if self.sweep_sign not in (1, -1):
            raise ValueError("sweep_sign must be +1 or -1")


def beta_from_truncation(fraction: float, t_half: float) -> float:
    """Rate parameter giving ``sech(beta * t_half) = fraction``.

    ``t_half`` is the time from the envelope peak to the truncated edge
    (t_p for the backward half, t_p/2 for the full shape).
    """
    if not 0 < fraction < 1:
        raise ValueError("truncation fraction must lie in (0, 1)")
    return float(np.arccosh(1.0 / fraction)) / t_half


def _check_t(spec_tp: float, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-15) or np.any(t > spec_tp * (1 + 1e-12) + 1e-15):
        raise ValueError("time outside the pulse interval [0, t_p]")
    return t


def sech_amplitude(spec: PulseSpec, t) -> np.ndarray | float:
    """Envelope ``w1(t)`` of a sech-shaped pulse, rad/s.

    The backward half decays from ``omega0`` at t=0; the full shape peaks at
    ``t_p/2``.  Accepts scalar or array times within [0, t_p].
    """
    if spec.shape not in ("sech_full", "sech_backward_half"):
        raise ValueError(f"not a sech shape: {spec.shape!r}")
    return _amp(spec, t)


def _amp(spec: PulseSpec, t) -> np.ndarray | float:
    t = _check_t(spec.t_p, t)
    if spec.shape == "constant":
        out = np.full_like(t, spec.omega0)
    elif spec.shape == "sech_backward_half":
        out = spec.omega0 / np.cosh(spec.beta * t)
    else:
        out = spec.omega0 / np.cosh(spec.beta * (t - spec.t_p / 2))
    return out if out.ndim else float(out)


def _amp_deriv(spec: PulseSpec, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if spec.shape == "constant":
        return np.zeros_like(t)
    x = spec.beta * (t if spec.shape == "sech_backward_half" else t - spec.t_p / 2)
    return -spec.omega0 * spec.beta * np.tanh(x) / np.cosh(x)


# --- frequency sweeps ---------------------------------------------------
#
# standard rule closed forms (sweep_sign +1):
#   constant:       wr = p*w0^2 * t
#   backward half:  wr = (p*w0^2/beta) * tanh(beta t)
#   full:           wr = (p*w0^2/beta) * tanh(beta (t - t_p/2))
#
# am_compensated subtracts the envelope-derivative term; for the backward
# half the antiderivative stays closed form up to the clamp time t*, where
# sinh(beta t*) = p*w0 / (AM_TERM_COEFF * beta).  The full shape is
# integrated numerically on a dense cached grid.

def _rate_clamped(spec: PulseSpec, t) -> np.ndarray:
    """Sweep rate d|wr|/dt of the compensated rule, clamped at zero."""
    t = np.asarray(t, dtype=float)
    w1 = np.asarray(_amp(spec, t))
    raw = spec.p * w1**2 - AM_TERM_COEFF * np.abs(_amp_deriv(spec, t))
    return np.maximum(raw, 0.0)


@lru_cache(maxsize=32)
def _dense_tables(spec: PulseSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, wr, integral of wr) on a dense grid for shapes without a
    closed-form compensated sweep.  The full shape is re-centered so the
    sweep passes through zero at the envelope peak, matching the standard
    rule's symmetric convention."""
    t = np.linspace(0.0, spec.t_p, 1 << 15 | 1)
    rate = _rate_clamped(spec, t)
    freq = cumulative_trapezoid(rate, t, initial=0.0)
    ph = cumulative_trapezoid(freq, t, initial=0.0)
    if spec.shape == "sech_full":
        mid = float(np.interp(spec.t_p / 2, t, freq))
        freq = freq - mid
        ph = ph - mid * t
    return t, freq, ph


def _freq_unsigned(spec: PulseSpec, t: np.ndarray) -> np.ndarray:
    """Monotone non-decreasing sweep before applying ``sweep_sign``."""
    b, p, w0 = spec.beta, spec.p, spec.omega0
    if spec.design_rule == "standard":
        if spec.shape == "constant":
            return p * w0**2 * t
        if spec.shape == "sech_backward_half":
            return (p * w0**2 / b) * np.tanh(b * t)
        return (p * w0**2 / b) * np.tanh(b * (t - spec.t_p / 2))
    # am_compensated
    if spec.shape == "constant":
        return p * w0**2 * t
    if spec.shape == "sech_backward_half":
        a = p * w0**2 / b
        k = AM_TERM_COEFF * w0
        t_star = math.asinh(p * w0 / (AM_TERM_COEFF * b)) / b
        tc = np.minimum(t, t_star)
        out = a * np.tanh(b * tc) - k * (1.0 - 1.0 / np.cosh(b * tc))
        return out
    tg, fg, _ = _dense_tables(spec)
    return np.interp(t, tg, fg)


def _phase_unsigned(spec: PulseSpec, t: np.ndarray) -> np.ndarray:
    """Integral of the unsigned sweep from 0 to t."""
    b, p, w0 = spec.beta, spec.p, spec.omega0
    if spec.design_rule == "standard":
        if spec.shape == "constant":
            return p * w0**2 * t**2 / 2
        a = p * w0**2 / b
        if spec.shape == "sech_backward_half":
            return (a / b) * np.log(np.cosh(b * t))
        h = spec.t_p / 2
        return (a / b) * (np.log(np.cosh(b * (t - h))) - np.log(np.cosh(b * h)))
    if spec.shape == "constant":
        return p * w0**2 * t**2 / 2
    if spec.shape == "sech_backward_half":
        a = p * w0**2 / b
        k = AM_TERM_COEFF * w0
        t_star = math.asinh(p * w0 / (AM_TERM_COEFF * b)) / b
        tc = np.minimum(t, t_star)
        # gudermannian integral: int sech(b t') dt' = 2*atan(tanh(b t / 2))/b
        gd = 2.0 * np.arctan(np.tanh(b * tc / 2)) / b
        ph = (a / b) * np.log(np.cosh(b * tc)) - k * (tc - gd)
        tail = t - tc
        if np.any(tail > 0):
            w_star = a * np.tanh(b * t_star) - k * (1.0 - 1.0 / np.cosh(b * t_star))
            ph = ph + w_star * np.maximum(tail, 0.0)
        return ph
    tg, _, pg = _dense_tables(spec)
    return np.interp(t, tg, pg)


def pulse_frequency(spec: PulseSpec, t) -> np.ndarray | float:
    """Frequency modulation ``wr(t)`` in rad/s for a designed pulse."""
    t = _check_t(spec.t_p, t)
    out = spec.sweep_sign * _freq_unsigned(spec, t)
    return out if out.ndim else float(out)


def pulse_phase(spec: PulseSpec, t) -> np.ndarray | float:
    """Phase modulation ``phase0 + integral of wr`` in rad."""
    t = _check_t(spec.t_p, t)
    out = spec.phase0 + spec.sweep_sign * _phase_unsigned(spec, t)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PulseWaveform:
    """One sampled pulse: uniformly spaced modulation values over [0, t_p].

    ``phase`` is the cumulative trapezoidal integral of ``freq`` plus the
    constant offset, so the sampled columns are self-consistent regardless
    of how the waveform was produced.  When a designing :class:`PulseSpec`
    is attached, point evaluation (``amp_at`` etc.) uses the exact analytic
    modulation functions; imported tables fall back to linear interpolation.
    """

    dt: float
    t_p: float
    amp: np.ndarray
    freq: np.ndarray
    phase: np.ndarray
    spec: PulseSpec | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        for name in ("amp", "freq", "phase"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        n = round(self.t_p / self.dt) + 1
        if not (len(self.amp) == len(self.freq) == len(self.phase) == n):
            raise ValueError("sample arrays must have round(t_p/dt)+1 entries")
        if np.any(self.amp < 0):
            raise ValueError("amplitude samples must be non-negative")
        for name in ("amp", "freq", "phase"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite {name} samples")

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.amp)) * self.dt

    def amp_at(self, t) -> np.ndarray | float:
        if self.spec is not None:
            return _amp(self.spec, t)
        return np.interp(t, self.times, self.amp)

    def freq_at(self, t) -> np.ndarray | float:
        if self.spec is not None:
            return pulse_frequency(self.spec, t)
        return np.interp(t, self.times, self.freq)

    def phase_at(self, t) -> np.ndarray | float:
        if self.spec is not None:
            return pulse_phase(self.spec, t)
        return np.interp(t, self.times, self.phase)

    @property
    def omega0(self) -> float:
        """Peak sampled amplitude, rad/s."""
        return float(np.max(self.amp))


def _sample(spec: PulseSpec, dt: float | None) -> PulseWaveform:
    if dt is None:
        dt = spec.t_p / 2000
    n = round(spec.t_p / dt)
    if n < 2:
        raise ValueError("dt too coarse for the pulse duration")
    t = np.arange(n + 1) * dt
    t[-1] = min(t[-1], spec.t_p)  # guard rounding when dt*n overshoots t_p
    amp = np.asarray(_amp(spec, t))
    freq = np.asarray(pulse_frequency(spec, t))
    phase = cumulative_trapezoid(freq, t, initial=0.0) + spec.phase0
    return PulseWaveform(dt=dt, t_p=spec.t_p, amp=amp, freq=freq, phase=phase, spec=spec)


def design_fm_standard(spec: PulseSpec, dt: float | None = None) -> PulseWaveform:
    """Build the waveform with the standard chirp rule ``wr' = p * w1**2``."""
    if spec.design_rule != "standard":
        spec = replace(spec, design_rule="standard")
    return _sample(spec, dt)


def design_fm_am_compensated(spec: PulseSpec, dt: float | None = None) -> PulseWaveform:
    """Build the waveform with the envelope-derivative-compensated rule."""
    if spec.design_rule != "am_compensated":
        spec = replace(spec, design_rule="am_compensated")
    return _sample(spec, dt)


def design_waveform(spec: PulseSpec, dt: float | None = None) -> PulseWaveform:
    """Dispatch on ``spec.design_rule``."""
    if spec.design_rule == "standard":
        return design_fm_standard(spec, dt)
    return design_fm_am_compensated(spec, dt)


def sweep_rate(spec: PulseSpec, t) -> np.ndarray | float:
    """Analytic ``d(wr)/dt`` of a designed pulse (clamping included)."""
    t = _check_t(spec.t_p, t)
    if spec.design_rule == "standard":
        w1 = np.asarray(_amp(spec, t))
        out = spec.sweep_sign * spec.p * w1**2
    else:
        out = spec.sweep_sign * _rate_clamped(spec, t)
    return out if np.ndim(out) else float(out)


def phase_shift(w: PulseWaveform, dphi: float) -> PulseWaveform:
    """Copy of the waveform with a constant phase offset added."""
    spec = None if w.spec is None else replace(w.spec, phase0=w.spec.phase0 + dphi)
    return PulseWaveform(dt=w.dt, t_p=w.t_p, amp=w.amp, freq=w.freq,
                         phase=w.phase + dphi, spec=spec)


def sweep_extent(w: PulseWaveform) -> float:
    """Total frequency span max(wr) - min(wr) of the waveform, rad/s."""
    return float(np.max(w.freq) - np.min(w.freq))


def adiabatic_factor(w: PulseWaveform, delta_omega0: float, t: float) -> float:
    """Instantaneous adiabatic factor of the effective field trajectory.

    ``delta_omega0`` is the spin's offset from the sweep start (rad/s), so
    the instantaneous offset is ``dw(t) = delta_omega0 - (wr(t) - wr(0))``.
    Returns ``(w1 * dw' - dw * w1') / (w1**2 + dw**2)**1.5`` with the
    derivatives taken by central finite differences on the sample grid.
    Raises on a degenerate (zero) effective field at the evaluation point.
    """
    tt = w.times
    dw = delta_omega0 - (w.freq - w.freq[0])
    d_amp = np.gradient(w.amp, w.dt)
    d_dw = np.gradient(dw, w.dt)
    denom = (w.amp**2 + dw**2) ** 1.5
    amp_t = np.interp(t, tt, w.amp)
    dw_t = np.interp(t, tt, dw)
    if amp_t**2 + dw_t**2 == 0.0:
        raise ValueError("degenerate effective field: w1 and offset both zero")
    num = np.interp(t, tt, w.amp * d_dw - dw * d_amp)
    return float(num / np.interp(t, tt, denom))


# --- plain-text waveform exchange ---------------------------------------

_COLUMNS = "t_s amp_rad_s freq_rad_s phase_rad"


def save_waveform(w: PulseWaveform, path) -> None:
    """Write the sampled waveform as a 4-column plain-text table."""
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# {_COLUMNS}\n")
        for t, a, f, p in zip(w.times, w.amp, w.freq, w.phase):
            fh.write(f"{t:.17g} {a:.17g} {f:.17g} {p:.17g}\n")


def load_waveform(path) -> PulseWaveform:
    """Read a waveform table written by :func:`save_waveform`.

    The time column must be uniformly spaced starting at zero; the result
    carries no analytic backing (``spec is None``).
    """
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 4:
        raise ValueError("waveform table must have 4 columns: " + _COLUMNS)
    t, amp, freq, phase = data.T
    if len(t) < 2:
        raise ValueError("waveform table needs at least two samples")
    dt = t[1] - t[0]
    if abs(t[0]) > 1e-12 * dt or np.max(np.abs(np.diff(t) - dt)) > 1e-6 * dt:
        raise ValueError("time column must be uniform and start at zero")
    return PulseWaveform(dt=float(dt), t_p=float(t[-1]), amp=amp, freq=freq, phase=phase)
