"""Linearized quantum-noise model of an above-threshold NOPO.

The pump is non-resonant and adiabatically eliminated.  Signal and idler
share one cavity decay rate ``kappa``, and the fluctuations separate into
four independent sum/difference quadratures ``u± = (u_s ± u_i)/sqrt(2)``:

======  ===================  =====================================
mode    damping rate         extra drive
======  ===================  =====================================
X-      2 kappa              none
Y-      0 (phase diffusion)  none
X+      2 kappa (sigma - 1)  pump amplitude, 2 sqrt(kappa (sigma-1))
Y+      2 kappa sigma        pump phase, same coupling
======  ===================  =====================================

Every mode is also driven by output-coupler and intracavity-loss vacuum,
and the output field is ``sqrt(2 kappa_out) a - a_in``.  A pump-noise
coupling efficiency below one routes the remainder of the pump drive to a
separate vacuum port so that commutators are preserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import BelowThresholdError, PhysicsError
from .gaussian_core import CovarianceMatrix, ModeLabel

ENERGY_TOL = 1e-4
INV_SQRT2 = 1.0 / math.sqrt(2.0)

NOPO_CHANNELS = ("out_s", "out_i", "loss_s", "loss_i", "pump", "pump_loss")


@dataclass(frozen=True)
class NopoParams:
    """Operating parameters of one NOPO.

    Wavelengths in nm, cavity length in mm, powers in mW; transmissivities
    and losses are power fractions per round trip.  ``l_intra=None`` derives
    the intracavity loss from the finesse as ``2π/finesse - t_out``.
    """

    pump_wavelength: float
    signal_wavelength: float
    idler_wavelength: float
    cavity_length: float
    finesse: float
    t_out: float
    p_threshold: float
    p_pump: float
    l_intra: float | None = None
    t_in_pump: float = 0.0
    eta_pump_coupling: float = 1.0

    def __post_init__(self):
        for name in ("pump_wavelength", "signal_wavelength", "idler_wavelength", "cavity_length", "p_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        lhs = 1.0 / self.pump_wavelength
        rhs = 1.0 / self.signal_wavelength + 1.0 / self.idler_wavelength
        if abs(lhs - rhs) > ENERGY_TOL * lhs:
            raise ValueError(
                f"energy conservation violated: 1/{self.pump_wavelength} != "
                f"1/{self.signal_wavelength} + 1/{self.idler_wavelength}"
            )
        if not self.finesse > 0:
            raise ValueError("finesse must be positive")
        if not 0.0 < self.t_out < 1.0:
            raise ValueError(f"t_out must lie in (0, 1), got {self.t_out}")
        if not 0.0 <= self.eta_pump_coupling <= 1.0:
            raise ValueError("eta_pump_coupling must lie in [0, 1]")
        if self.p_pump < 0:
            raise ValueError("p_pump must be non-negative")
        total = 2.0 * math.pi / self.finesse
        if self.l_intra is None:
            if self.t_out > total * (1.0 + 1e-9):
                raise ValueError(f"t_out={self.t_out} exceeds the total round-trip loss 2π/finesse={total:.6g}")
        else:
            if self.l_intra < 0:
                raise ValueError("l_intra must be non-negative")
            if abs(self.t_out + self.l_intra - total) > 1e-6 * max(total, 1e-3):
                raise ValueError(
                    f"t_out + l_intra = {self.t_out + self.l_intra:.6g} is inconsistent with "
                    f"2π/finesse = {total:.6g}"
                )

    @property
    def intracavity_loss(self) -> float:
        if self.l_intra is not None:
            return self.l_intra
        return max(0.0, 2.0 * math.pi / self.finesse - self.t_out)


@dataclass(frozen=True)
class NoiseInputSpectrum:
    """Amplitude/phase spectral variances of an input field (vacuum = 1)."""

    s_x: float = 1.0
    s_y: float = 1.0

    def __post_init__(self):
        if self.s_x < 0 or self.s_y < 0:
            raise ValueError("spectral variances must be non-negative")
        if self.s_x * self.s_y < 1.0 - 1e-12:
            raise PhysicsError(f"input spectrum violates the uncertainty relation: {self.s_x} * {self.s_y} < 1")


VACUUM = NoiseInputSpectrum()


@dataclass(frozen=True)
class NopoRates:
    fsr: float  # Hz
    kappa_total: float  # 1/s, field decay rate
    kappa_out: float  # 1/s
    escape_efficiency: float
    sigma: float

    @property
    def kappa_loss(self) -> float:
        return self.kappa_total - self.kappa_out


def derived_rates(p: NopoParams) -> NopoRates:
    if p.p_pump <= p.p_threshold:
        raise BelowThresholdError(
            f"pump power {p.p_pump} mW does not exceed threshold {p.p_threshold} mW; "
            "the above-threshold model is undefined"
        )
    fsr = SPEED_OF_LIGHT / (2.0 * p.cavity_length * 1e-3)
    kappa_total = (2.0 * math.pi / p.finesse) * fsr / 2.0
    kappa_out = p.t_out * fsr / 2.0
    return NopoRates(
        fsr=fsr,
        kappa_total=kappa_total,
        kappa_out=kappa_out,
        escape_efficiency=min(kappa_out / kappa_total, 1.0),
        sigma=math.sqrt(p.p_pump / p.p_threshold),
    )


@dataclass(frozen=True)
class StateSpace:
    """Linear Langevin system ``dz = drift z dt + inputs dW``.

    Outputs are ``output @ z + feedthrough @ xi`` where ``xi`` is the white
    input noise.  Columns of ``inputs``/``feedthrough`` come in (X, Y) pairs,
    one pair per entry of ``channels``; output rows come in (X, Y) pairs,
    one pair per entry of ``modes``.
    """

    drift: np.ndarray
    inputs: np.ndarray
    output: np.ndarray
    feedthrough: np.ndarray
    channels: tuple[str, ...]
    modes: tuple[ModeLabel, ...]
    states: tuple[str, ...] = ()
    input_spectra: Mapping[str, NoiseInputSpectrum] = field(default_factory=dict)

    def __post_init__(self):
        n, m = self.inputs.shape
        if self.drift.shape != (n, n):
            raise ValueError("drift and inputs disagree on the state dimension")
        if m != 2 * len(self.channels) or self.feedthrough.shape[1] != m:
            raise ValueError("input columns must be two per channel")
        if self.output.shape != (2 * len(self.modes), n) or self.feedthrough.shape[0] != 2 * len(self.modes):
            raise ValueError("output rows must be two per mode")

    def transfer(self, omega: float) -> np.ndarray:
        """Complex transfer ``output (-iω - drift)^-1 inputs + feedthrough``."""
        n = self.drift.shape[0]
        resolvent = np.linalg.solve(-1j * omega * np.eye(n) - self.drift, self.inputs)
        return self.output @ resolvent + self.feedthrough

    def noise_scales(self) -> np.ndarray:
        """Per-column spectral variance of the inputs (vacuum = 1)."""
        s = np.ones(2 * len(self.channels))
        for k, name in enumerate(self.channels):
            spec = self.input_spectra.get(name)
            if spec is not None:
                s[2 * k], s[2 * k + 1] = spec.s_x, spec.s_y
        return s


def nopo_state_space(
    p: NopoParams,
    pump_spectrum: NoiseInputSpectrum = VACUUM,
    mode_ids: Sequence[int] = (1, 2),
    bypass_gain: bool = False,
) -> StateSpace:
    """State-space form of one NOPO in sum/difference coordinates.

    States are ``(x+, x-, y+, y-)``.  With ``bypass_gain`` the crystal is
    treated as absent: all four modes decay at ``kappa`` and the pump is
    disconnected (a passive, lossy empty cavity).
    """
    if bypass_gain:
        fsr = SPEED_OF_LIGHT / (2.0 * p.cavity_length * 1e-3)
        kappa = (2.0 * math.pi / p.finesse) * fsr / 2.0
        kappa_out = p.t_out * fsr / 2.0
        damping = {"x+": kappa, "x-": kappa, "y+": kappa, "y-": kappa}
        c_pump = 0.0
    else:
        r = derived_rates(p)
        kappa, kappa_out, sig = r.kappa_total, r.kappa_out, r.sigma
        damping = {
            "x+": 2.0 * kappa * (sig - 1.0),
            "x-": 2.0 * kappa,
            "y+": 2.0 * kappa * sig,
            "y-": 0.0,
        }
        c_pump = 2.0 * math.sqrt(kappa * (sig - 1.0))
    kappa_loss = max(kappa - kappa_out, 0.0)
    col = {name: 2 * k for k, name in enumerate(NOPO_CHANNELS)}
    states = ("x+", "x-", "y+", "y-")
    drift = np.diag([-damping[s] for s in states])
    inputs = np.zeros((4, 2 * len(NOPO_CHANNELS)))
    g_out = math.sqrt(2.0 * kappa_out) * INV_SQRT2
    g_loss = math.sqrt(2.0 * kappa_loss) * INV_SQRT2
    for row, name in enumerate(states):
        q = 0 if name[0] == "x" else 1
        sign = 1.0 if name[1] == "+" else -1.0
        inputs[row, col["out_s"] + q] = g_out
        inputs[row, col["out_i"] + q] = sign * g_out
        inputs[row, col["loss_s"] + q] = g_loss
        inputs[row, col["loss_i"] + q] = sign * g_loss
        if sign > 0:
            inputs[row, col["pump"] + q] = c_pump * math.sqrt(p.eta_pump_coupling)
            inputs[row, col["pump_loss"] + q] = c_pump * math.sqrt(1.0 - p.eta_pump_coupling)
    # rows (Xs, Ys, Xi, Yi) from states (x+, x-, y+, y-)
    to_modes = INV_SQRT2 * np.array(
        [
            [1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 1.0],
            [1.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, -1.0],
        ]
    )
    output = math.sqrt(2.0 * kappa_out) * to_modes
    feedthrough = np.zeros((4, 2 * len(NOPO_CHANNELS)))
    feedthrough[0, col["out_s"]] = feedthrough[1, col["out_s"] + 1] = -1.0
    feedthrough[2, col["out_i"]] = feedthrough[3, col["out_i"] + 1] = -1.0
    modes = (ModeLabel(mode_ids[0], p.signal_wavelength), ModeLabel(mode_ids[1], p.idler_wavelength))
    return StateSpace(
        drift=drift,
        inputs=inputs,
        output=output,
        feedthrough=feedthrough,
        channels=NOPO_CHANNELS,
        modes=modes,
        states=states,
        input_spectra={"pump": pump_spectrum},
    )


@dataclass(frozen=True)
class TransferModel:
    """Frequency-domain map from elementary input channels to output quadratures."""

    channels: tuple[str, ...]
    modes: tuple[ModeLabel, ...]
    matrix: np.ndarray = field(repr=False)
    omega: float
    default_spectra: Mapping[str, NoiseInputSpectrum] = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.matrix)):
            raise PhysicsError("transfer matrix has non-finite entries")

    def column(self, channel: str) -> np.ndarray:
        k = self.channels.index(channel)
        return self.matrix[:, 2 * k : 2 * k + 2]


def build_transfer(
    p: NopoParams,
    omega: float,
    pump_spectrum: NoiseInputSpectrum = VACUUM,
    mode_ids: Sequence[int] = (1, 2),
    bypass_gain: bool = False,
) -> TransferModel:
    if omega == 0:
        raise PhysicsError("omega = 0 is singular: the phase-difference mode diffuses freely")
    if omega < 0:
        raise ValueError("analysis frequency must be positive")
    ss = nopo_state_space(p, pump_spectrum, mode_ids, bypass_gain)
    return TransferModel(ss.channels, ss.modes, ss.transfer(omega), omega, dict(ss.input_spectra))


def output_covariance(
    t: TransferModel,
    input_spectra: Mapping[str, NoiseInputSpectrum] | None = None,
    default: NoiseInputSpectrum | None = VACUUM,
) -> CovarianceMatrix:
    """Symmetrized spectral covariance ``Re(T S_in T^†)`` of the outputs.

    Channels absent from ``input_spectra`` fall back to the transfer model's
    own defaults and then to ``default``; with ``default=None`` a missing
    channel is an error.
    """
    given = dict(input_spectra or {})
    unknown = set(given) - set(t.channels)
    if unknown:
        raise KeyError(f"unknown input channels: {sorted(unknown)}")
    s = np.empty(2 * len(t.channels))
    for k, name in enumerate(t.channels):
        spec = given.get(name, t.default_spectra.get(name, default))
        if spec is None:
            raise KeyError(f"no input spectrum given for channel {name!r}")
        s[2 * k], s[2 * k + 1] = spec.s_x, spec.s_y
    m = t.matrix
    cov = np.real((m * s) @ m.conj().T)
    return CovarianceMatrix(t.modes, cov)
