"""Heteronuclear Hartmann-Hahn transfer simulator for a scalar-coupled
two-spin-1/2 system driven by swept-frequency (quasi-)adiabatic pulses."""

__version__ = "0.1.0"

from . import dynamics, experiments, mq, operators, pulses  # noqa: E402,F401
