"""Two cascaded NOPOs producing the three-color modes a2, a3, a4.

NOPO1 converts the laser pump a0 into a1 + a2.  A beam-splitter tap sends a
fraction of a1 to NOPO2, which converts it into a3 + a4.  The covariance is
built in the frequency domain by substituting NOPO1's a1 transfer rows into
NOPO2's pump column; :func:`cascade_state_space` assembles the equivalent
joint time-domain system for the SDE oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .gaussian_core import CovarianceMatrix, ModeLabel, apply_loss
from .nopo_model import (
    NOPO_CHANNELS,
    VACUUM,
    NoiseInputSpectrum,
    NopoParams,
    StateSpace,
    TransferModel,
    build_transfer,
    nopo_state_space,
    output_covariance,
)
from .vlf_criteria import CriteriaResult, evaluate, optimal_gains

CHAIN_TOL = 1e-4
OUTPUT_IDS = (2, 3, 4)

ASSUMPTIONS = (
    "NOPO2 is pumped through a beam-splitter tap of a1; the tap's vacuum port adds noise (tap model assumed)",
    "pump treated as non-resonant in both cavities",
    "all carrier phases real; relative phase offsets absorbed into quadrature definitions",
)


@dataclass(frozen=True)
class CascadeConfig:
    """Full source configuration.

    ``omega`` is the angular analysis frequency in rad/s.  ``a1_power`` is
    the a1 power (mW) leaving NOPO1; unless ``tap_ratio`` is given, the tap
    transmits ``nopo2.p_pump / a1_power`` of it.
    """

    nopo1: NopoParams
    nopo2: NopoParams
    omega: float
    pump0_spectrum: NoiseInputSpectrum = VACUUM
    detection_efficiency: tuple[float, float, float] = (1.0, 1.0, 1.0)
    a1_power: float = 17.0
    tap_ratio: float | None = None
    bypass_nopo1: bool = False
    bypass_nopo2: bool = False

    def __post_init__(self):
        lp2 = self.nopo2.pump_wavelength
        if abs(self.nopo1.signal_wavelength - lp2) > CHAIN_TOL * lp2:
            raise ConfigError(
                f"wavelength chain broken: NOPO1 signal {self.nopo1.signal_wavelength} nm "
                f"does not pump NOPO2 at {lp2} nm"
            )
        eff = tuple(float(e) for e in self.detection_efficiency)
        if len(eff) != 3 or not all(0.0 < e <= 1.0 for e in eff):
            raise ConfigError(f"detection efficiencies must be three values in (0, 1], got {eff}")
        object.__setattr__(self, "detection_efficiency", eff)
        if self.tap_ratio is not None and not 0.0 < self.tap_ratio <= 1.0:
            raise ConfigError(f"tap_ratio must lie in (0, 1], got {self.tap_ratio}")
        if not self.omega > 0:
            raise ConfigError("analysis frequency must be positive")
        if self.nopo2.p_pump > self.a1_power:
            warnings.warn(
                f"NOPO2 pump {self.nopo2.p_pump} mW exceeds the {self.a1_power} mW available from NOPO1",
                stacklevel=2,
            )

    @property
    def tap(self) -> float:
        if self.tap_ratio is not None:
            return self.tap_ratio
        return min(1.0, self.nopo2.p_pump / self.a1_power)

    @property
    def modes(self) -> tuple[ModeLabel, ModeLabel, ModeLabel]:
        return (
            ModeLabel(2, self.nopo1.idler_wavelength),
            ModeLabel(3, self.nopo2.signal_wavelength),
            ModeLabel(4, self.nopo2.idler_wavelength),
        )

    def with_changes(self, **changes) -> "CascadeConfig":
        return replace(self, **changes)


def joint_channels(detection: bool = False) -> tuple[str, ...]:
    names = [f"nopo1.{c}" for c in NOPO_CHANNELS]
    names.append("tap")
    names += [f"nopo2.{c}" for c in NOPO_CHANNELS if c != "pump"]
    if detection:
        names += [f"det.a{i}" for i in OUTPUT_IDS]
    return tuple(names)


def _cols(channels, name):
    k = channels.index(name)
    return slice(2 * k, 2 * k + 2)


def build_cascade_transfer(cfg: CascadeConfig) -> TransferModel:
    """Joint transfer of (a2, a3, a4) before detection loss."""
    t1 = build_transfer(cfg.nopo1, cfg.omega, cfg.pump0_spectrum, (1, 2), cfg.bypass_nopo1)
    t2 = build_transfer(cfg.nopo2, cfg.omega, VACUUM, (3, 4), cfg.bypass_nopo2)
    channels = joint_channels()
    n = 2 * len(channels)
    nopo1_cols = slice(0, 2 * len(NOPO_CHANNELS))

    a1 = np.zeros((2, n), dtype=complex)
    a1[:, nopo1_cols] = math.sqrt(cfg.tap) * t1.matrix[0:2]
    a1[:, _cols(channels, "tap")] = math.sqrt(1.0 - cfg.tap) * np.eye(2)

    joint = np.zeros((6, n), dtype=complex)
    joint[0:2, nopo1_cols] = t1.matrix[2:4]
    for c in NOPO_CHANNELS:
        if c != "pump":
            joint[2:6, _cols(channels, f"nopo2.{c}")] = t2.column(c)
    joint[2:6] += t2.column("pump") @ a1
    return TransferModel(channels, cfg.modes, joint, cfg.omega, {"nopo1.pump": cfg.pump0_spectrum})


def build_cascade_covariance(cfg: CascadeConfig) -> CovarianceMatrix:
    cov = output_covariance(build_cascade_transfer(cfg))
    for mode, eta in zip(cfg.modes, cfg.detection_efficiency):
        if eta != 1.0:
            cov = apply_loss(cov, mode, eta)
    return cov


def cascade_state_space(cfg: CascadeConfig) -> StateSpace:
    """Joint Langevin system of both cavities, detection loss included.

    States are NOPO1's ``(x+, x-, y+, y-)`` followed by NOPO2's.  The drift
    is lower block-triangular: NOPO2 sees NOPO1 only through its pump.
    """
    s1 = nopo_state_space(cfg.nopo1, cfg.pump0_spectrum, (1, 2), cfg.bypass_nopo1)
    s2 = nopo_state_space(cfg.nopo2, VACUUM, (3, 4), cfg.bypass_nopo2)
    channels = joint_channels(detection=True)
    m = 2 * len(channels)
    own1 = slice(0, 2 * len(NOPO_CHANNELS))
    pump2 = _cols(s2.channels, "pump")
    b2p = s2.inputs[:, pump2]
    tap = math.sqrt(cfg.tap)

    drift = np.zeros((8, 8))
    drift[0:4, 0:4] = s1.drift
    drift[4:8, 4:8] = s2.drift
    drift[4:8, 0:4] = tap * b2p @ s1.output[0:2]

    inputs = np.zeros((8, m))
    inputs[0:4, own1] = s1.inputs
    inputs[4:8, own1] = tap * b2p @ s1.feedthrough[0:2]
    inputs[4:8, _cols(channels, "tap")] = math.sqrt(1.0 - cfg.tap) * b2p

    output = np.zeros((6, 8))
    feed = np.zeros((6, m))
    output[0:2, 0:4] = s1.output[2:4]
    feed[0:2, own1] = s1.feedthrough[2:4]
    output[2:6, 4:8] = s2.output
    for c in NOPO_CHANNELS:
        if c != "pump":
            cols = _cols(channels, f"nopo2.{c}")
            inputs[4:8, cols] = s2.inputs[:, _cols(s2.channels, c)]
            feed[2:6, cols] = s2.feedthrough[:, _cols(s2.channels, c)]

    for k, (mode, eta) in enumerate(zip(cfg.modes, cfg.detection_efficiency)):
        rows = slice(2 * k, 2 * k + 2)
        output[rows] *= math.sqrt(eta)
        feed[rows] *= math.sqrt(eta)
        feed[rows, _cols(channels, f"det.a{mode.id}")] = math.sqrt(1.0 - eta) * np.eye(2)

    states = tuple(f"nopo1.{s}" for s in s1.states) + tuple(f"nopo2.{s}" for s in s2.states)
    return StateSpace(drift, inputs, output, feed, channels, cfg.modes, states, {"nopo1.pump": cfg.pump0_spectrum})


def criteria_at_operating_point(cfg: CascadeConfig) -> CriteriaResult:
    cov = build_cascade_covariance(cfg)
    return evaluate(cov, optimal_gains(cov, OUTPUT_IDS), OUTPUT_IDS)
