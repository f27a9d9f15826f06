"""Unbalanced Mach-Zehnder self-homodyne readout.

The delay arm rotates the sideband at frequency ``f`` by ``θ = 2π f n ΔL / c``
relative to the carrier.  With ``θ = π`` the difference photocurrent of the
balanced lock reads the phase quadrature; blocking the long arm turns the
device into a plain balanced detector whose sum current reads amplitude
noise and whose difference current is the QNL.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import c as SPEED_OF_LIGHT

SHORT_ARM_ONLY = "short-arm-only"
BALANCED = "balanced-pi/2"
LOCKS = (SHORT_ARM_ONLY, BALANCED)


@dataclass(frozen=True)
class MzConfig:
    sideband_frequency: float  # Hz
    refractive_index: float
    arm_length_difference: float  # m
    lock: str = BALANCED
    visibility: float = 1.0

    def __post_init__(self):
        if not self.sideband_frequency > 0:
            raise ValueError("sideband frequency must be positive")
        if not self.refractive_index >= 1:
            raise ValueError("refractive index must be at least 1")
        if not self.arm_length_difference >= 0:
            raise ValueError("arm length difference must be non-negative")
        if self.lock not in LOCKS:
            raise ValueError(f"lock must be one of {LOCKS}, got {self.lock!r}")
        if not 0 < self.visibility <= 1:
            raise ValueError("visibility must lie in (0, 1]")


@dataclass(frozen=True)
class MzReadout:
    sum_channel: float
    diff_channel: float
    signal_label: str
    qnl_label: str

    @property
    def signal(self) -> float:
        return self.sum_channel if self.qnl_label == "diff" else self.diff_channel

    @property
    def qnl(self) -> float:
        return self.diff_channel if self.qnl_label == "diff" else self.sum_channel

    @property
    def relative_db(self) -> float:
        return 10.0 * math.log10(self.signal / self.qnl)


def arm_delta_for_pi(f: float, n: float) -> float:
    """Arm length difference (m) giving sideband phase π at ``f`` Hz."""
    if not f > 0 or not n >= 1:
        raise ValueError("need f > 0 and n >= 1")
    return SPEED_OF_LIGHT / (2.0 * n * f)


def sideband_phase(cfg: MzConfig) -> float:
    return 2.0 * math.pi * cfg.sideband_frequency * cfg.refractive_index * cfg.arm_length_difference / SPEED_OF_LIGHT


def _visible(s: float, v: float) -> float:
    return 1.0 + v * v * (s - 1.0)


def measured_quantities(cfg: MzConfig, s_x: float, s_y: float) -> MzReadout:
    """Sum and difference photocurrent noise, normalized so vacuum gives 1."""
    if s_x < 0 or s_y < 0:
        raise ValueError("spectra must be non-negative")
    if cfg.lock == SHORT_ARM_ONLY:
        return MzReadout(_visible(s_x, cfg.visibility), 1.0, "amplitude quadrature", "diff")
    theta = sideband_phase(cfg)
    mixed = s_x * math.cos(theta / 2.0) ** 2 + s_y * math.sin(theta / 2.0) ** 2
    return MzReadout(1.0, _visible(mixed, cfg.visibility), f"quadrature at θ={theta:.4f} rad", "sum")


def format_report(cfg: MzConfig, readout: MzReadout) -> str:
    return (
        f"signal channel ({readout.signal_label}): {readout.signal:.6g}  ({readout.relative_db:+.2f} dB)\n"
        f"QNL channel ({readout.qnl_label}): {readout.qnl:.6g}  (lock {cfg.lock}, θ = {sideband_phase(cfg):.6f} rad)"
    )
