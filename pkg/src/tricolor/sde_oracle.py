"""Time-domain cross-check of the frequency-domain noise models.

The linearized Langevin system ``dz = A z dt + B dW`` is integrated with the
Euler-Maruyama scheme, the requested quadrature combination of the output
field ``y = C z + D dW/dt`` is recorded, and its spectrum is estimated with a
Hann-windowed periodogram averaged over independent segments.  Spectra are
two-sided and normalized so that vacuum reads 1.

The recursion is run in complex Schur coordinates of ``I + A dt``, where it
reduces to a chain of first-order filters evaluated by
:func:`scipy.signal.lfilter`.  This is the same Euler step, just not a Python
loop.

Marginal modes (the phase-difference diffusion) make the raw output a random
walk.  When the combination sees such a mode, each segment is first
differenced and the periodogram divided by ``|1 - exp(-iω dt)|²``, which
removes the accumulated phase without biasing the spectrum at ``ω > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import linalg, signal

from .errors import PhysicsError
from .gaussian_core import QuadratureCombo
from .nopo_model import StateSpace

STEP_LIMIT = 0.1  # dt must stay below STEP_LIMIT / max|eigenvalue|
MIN_SEGMENTS = 200
MARGINAL_TOL = 1e-9
CHUNK = 1 << 17


@dataclass(frozen=True)
class SimulationPlan:
    system: StateSpace
    dt: float  # s
    segment_steps: int
    n_segments: int
    seed: int
    overlap: float = 0.0
    substeps: int = 1  # noise ticks per step; lets a coarse run share a fine run's Brownian path

    def __post_init__(self):
        rate = _max_rate(self.system.drift)
        if rate > 0 and not self.dt < STEP_LIMIT / rate:
            raise PhysicsError(f"time step {self.dt:.3e} s exceeds {STEP_LIMIT}/max|eigenvalue| = {STEP_LIMIT / rate:.3e} s")
        if self.n_segments < MIN_SEGMENTS:
            raise ValueError(f"need at least {MIN_SEGMENTS} segments, got {self.n_segments}")
        if self.segment_steps < 16:
            raise ValueError("segments are too short")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError("overlap must lie in [0, 1)")
        if self.substeps not in (1, 2, 4, 8, 16, 32, 64):
            raise ValueError("substeps must be a power of two up to 64")

    def coarsened(self) -> "SimulationPlan":
        """Same run at twice the step, driven by the same Brownian path."""
        if self.segment_steps % 2 or self.hop % 2:
            raise ValueError("segment length and hop must be even to coarsen")
        return replace(
            self, dt=2.0 * self.dt, segment_steps=self.segment_steps // 2, substeps=2 * self.substeps
        )

    @property
    def hop(self) -> int:
        return max(1, int(round(self.segment_steps * (1.0 - self.overlap))))

    @property
    def total_steps(self) -> int:
        return self.segment_steps + self.hop * (self.n_segments - 1)

    @property
    def duration(self) -> float:
        return self.total_steps * self.dt

    @property
    def resolution(self) -> float:
        """Bin spacing in rad/s."""
        return 2.0 * math.pi / (self.segment_steps * self.dt)


@dataclass(frozen=True)
class SpectrumEstimate:
    omega: float
    estimate: float
    std_error: float

    def agrees_with(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(self.estimate - value) <= n_sigma * self.std_error


def _max_rate(drift: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(drift)), initial=0.0))


def check_stability(drift: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``drift``; raises unless all are stable or marginal."""
    lam = np.linalg.eigvals(drift)
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    bad = lam[lam.real > MARGINAL_TOL * scale]
    if bad.size:
        raise PhysicsError(f"drift has unstable eigenvalues {bad}; the linearization is invalid")
    return lam


def make_plan(
    system: StateSpace,
    omegas: Sequence[float],
    seed: int = 0,
    n_segments: int = MIN_SEGMENTS,
    step_fraction: float = 0.05,
    cycles: float = 4.0,
    overlap: float = 0.0,
) -> SimulationPlan:
    """Plan covering ``omegas``.

    ``dt = step_fraction / max|eigenvalue|``; each segment spans ``cycles``
    periods of the lowest requested frequency, so the Hann main lobe stays
    well inside the spectral features.
    """
    lam = check_stability(system.drift)
    rate = float(np.max(np.abs(lam), initial=0.0))
    w_min, w_max = min(omegas), max(omegas)
    if w_min <= 0:
        raise ValueError("analysis frequencies must be positive")
    dt = step_fraction / max(rate, w_max)
    steps = 64 * int(math.ceil(cycles * 2.0 * math.pi / (w_min * dt) / 64))
    return SimulationPlan(system, dt, steps, n_segments, seed, overlap)


def _marginal_coupled(system: StateSpace, weights: np.ndarray) -> bool:
    lam, vecs = np.linalg.eig(system.drift)
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    marg = np.abs(lam.real) <= MARGINAL_TOL * scale
    if not marg.any():
        return False
    seen = weights @ system.output @ vecs[:, marg]
    return bool(np.any(np.abs(seen) > 1e-12 * max(1.0, float(np.max(np.abs(weights @ system.output))))))


def _combo_weights(system: StateSpace, combo: QuadratureCombo) -> np.ndarray:
    return combo.weight_vector(system.modes)


def _burn_in(plan: SimulationPlan) -> int:
    """Steps discarded so the zero initial state has relaxed (10 slowest decay times).

    Counted in noise ticks rounded up to a multiple of 64, so runs related by
    :meth:`SimulationPlan.coarsened` discard the same stretch of time.
    """
    rates = -np.linalg.eigvals(plan.system.drift).real
    scale = max(1.0, float(np.max(np.abs(rates), initial=0.0)))
    rates = rates[rates > MARGINAL_TOL * scale]
    if not rates.size:
        return 0
    tick = plan.dt / plan.substeps
    ticks = 64 * int(math.ceil(10.0 / (float(rates.min()) * tick) / 64))
    return ticks // plan.substeps


def _simulate_output(plan: SimulationPlan, weights: np.ndarray, n_samples: int) -> np.ndarray:
    """Scalar time series ``weights · y`` after burn-in, ``n_samples`` long."""
    s = plan.system
    n = s.drift.shape[0]
    dt = plan.dt
    step = np.eye(n) + s.drift * dt
    tri, q = linalg.schur(step.astype(complex), output="complex")
    qh = q.conj().T
    b_s = qh @ s.inputs  # drive in Schur coordinates
    c_s = weights @ s.output @ q  # combo readout of Schur coordinates
    d_s = weights @ s.feedthrough / dt
    scales = np.sqrt(s.noise_scales())

    streams = [np.random.default_rng(ss) for ss in np.random.SeedSequence(plan.seed).spawn(len(s.channels))]
    state_zi = [np.zeros(1, dtype=complex) for _ in range(n)]
    skip = _burn_in(plan)
    total = skip + n_samples
    out = np.empty(total)
    sq = math.sqrt(dt)
    done = 0
    while done < total:
        m = min(CHUNK, total - done)
        dw = np.empty((2 * len(s.channels), m))
        for k, rng in enumerate(streams):
            # (tick, quadrature) order keeps the path independent of chunking and substeps
            ticks = rng.standard_normal((m * plan.substeps, 2)).reshape(m, plan.substeps, 2).sum(axis=1)
            dw[2 * k : 2 * k + 2] = ticks.T
        dw *= (scales * sq / math.sqrt(plan.substeps))[:, None]
        forcing = b_s @ dw
        coords = np.empty((n, m), dtype=complex)
        for i in range(n - 1, -1, -1):
            f = forcing[i] + tri[i, i + 1 :] @ coords[i + 1 :] if i + 1 < n else forcing[i]
            # z[k+1] = t_ii z[k] + f[k]; record z[k] (state before this step's kick)
            coords[i], state_zi[i] = signal.lfilter([0.0, 1.0], [1.0, -tri[i, i]], f, zi=state_zi[i])
        out[done : done + m] = (c_s @ coords).real + d_s @ dw
        done += m
    return out[skip:]


def _segment_periodograms(plan: SimulationPlan, y: np.ndarray, omegas: Sequence[float], differenced: bool) -> np.ndarray:
    dt = plan.dt
    seg = plan.segment_steps
    win = signal.get_window("hann", seg)
    norm = dt / float(win @ win)
    k = np.arange(seg)
    phasors = np.exp(-1j * np.outer(omegas, k * dt))
    out = np.empty((plan.n_segments, len(omegas)))
    for j in range(plan.n_segments):
        x = y[j * plan.hop : j * plan.hop + seg + (1 if differenced else 0)]
        x = np.diff(x) if differenced else x - x.mean()
        out[j] = norm * np.abs(phasors @ (win * x)) ** 2
    if differenced:
        out /= np.abs(1.0 - np.exp(-1j * np.asarray(omegas) * dt)) ** 2
    return out


def simulate_spectra(plan: SimulationPlan, combo: QuadratureCombo, omegas: Sequence[float]) -> list[SpectrumEstimate]:
    """Spectrum estimates of ``combo`` at several frequencies from one run."""
    omegas = [float(w) for w in omegas]
    if any(w <= 0 for w in omegas):
        raise ValueError("analysis frequencies must be positive")
    weights = _combo_weights(plan.system, combo)
    differenced = _marginal_coupled(plan.system, weights)
    y = _simulate_output(plan, weights, plan.total_steps + (1 if differenced else 0))
    p = _segment_periodograms(plan, y, omegas, differenced)
    mean = p.mean(axis=0)
    err = p.std(axis=0, ddof=1) / math.sqrt(plan.n_segments)
    return [SpectrumEstimate(w, float(m), float(e)) for w, m, e in zip(omegas, mean, err)]


def simulate_spectrum(plan: SimulationPlan, combo: QuadratureCombo, omega: float) -> SpectrumEstimate:
    return simulate_spectra(plan, combo, [omega])[0]


def analytic_spectrum(system: StateSpace, combo: QuadratureCombo, omega: float) -> float:
    """Frequency-domain spectrum ``h diag(s) h^H`` with ``h = w T(ω)``."""
    h = _combo_weights(system, combo) @ system.transfer(omega)
    return float(np.real(np.sum(np.abs(h) ** 2 * system.noise_scales())))


@dataclass(frozen=True)
class OracleRow:
    combo: str
    omega: float
    analytic: float
    simulated: float
    std_error: float

    @property
    def passed(self) -> bool:
        return abs(self.simulated - self.analytic) <= 3.0 * self.std_error


def oracle_check(plan: SimulationPlan, combos: Sequence[QuadratureCombo], omegas: Sequence[float]) -> list[OracleRow]:
    rows = []
    for combo in combos:
        for est in simulate_spectra(plan, combo, omegas):
            rows.append(OracleRow(str(combo), est.omega, analytic_spectrum(plan.system, combo, est.omega), est.estimate, est.std_error))
    return rows
