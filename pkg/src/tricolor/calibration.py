"""Fit detection and pump-noise parameters of the cascade to measured dB values.

The ideal cascade model predicts far more squeezing than a real set-up
shows.  A handful of bounded nuisance parameters (detection efficiencies,
excess pump noise, the NOPO2 tap ratio) bridge the gap.  The fit is a
derivative-free compass search on weighted squared dB residuals: each
coordinate is probed up and down by the current step, improvements are kept,
and the step halves once a full sweep finds nothing better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .cascade_model import OUTPUT_IDS, CascadeConfig, build_cascade_covariance
from .errors import ConfigError, PhysicsError, TricolorError
from .gaussian_core import combo_variance, linear_to_db
from .nopo_model import NoiseInputSpectrum
from .vlf_criteria import QUANTITY_NAMES, MeasuredDbTable

PARAMETER_BOUNDS: dict[str, tuple[float, float]] = {
    "eta_a2": (0.01, 1.0),
    "eta_a3": (0.01, 1.0),
    "eta_a4": (0.01, 1.0),
    "eta_a34": (0.01, 1.0),
    "pump_s_x": (1.0, 100.0),
    "pump_s_y": (1.0, 100.0),
    "tap_ratio": (0.01, 1.0),
}
MAX_FREE = 6
MAX_EVALUATIONS = 10_000
PENALTY = 1e6


@dataclass(frozen=True)
class CalibrationProblem:
    base: CascadeConfig
    free: tuple[str, ...]
    targets: MeasuredDbTable
    start: Mapping[str, float] = field(default_factory=dict)
    weights: tuple[float, ...] = (1.0,) * 6

    def __post_init__(self):
        free = tuple(self.free)
        if not free:
            raise ConfigError("calibration needs at least one free parameter")
        if len(free) > MAX_FREE:
            raise ConfigError(f"at most {MAX_FREE} free parameters are supported, got {len(free)}")
        unknown = [p for p in free if p not in PARAMETER_BOUNDS]
        if unknown:
            raise ConfigError(f"unknown calibration parameter(s) {unknown}; known: {sorted(PARAMETER_BOUNDS)}")
        if len(set(free)) != len(free):
            raise ConfigError("free parameters repeat")
        if "eta_a34" in free and ({"eta_a3", "eta_a4"} & set(free)):
            raise ConfigError("eta_a34 sets both NOPO2 efficiencies; do not free eta_a3/eta_a4 with it")
        if len(self.weights) != 6 or any(w < 0 for w in self.weights) or not any(self.weights):
            raise ConfigError("weights must be six non-negative numbers, not all zero")
        for name, value in self.start.items():
            lo, hi = PARAMETER_BOUNDS.get(name, (-math.inf, math.inf))
            if name not in free:
                raise ConfigError(f"start value given for {name!r}, which is not free")
            if not lo <= value <= hi:
                raise ConfigError(f"start value {name} = {value} outside [{lo}, {hi}]")
        object.__setattr__(self, "free", free)
        object.__setattr__(self, "start", dict(self.start))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def initial(self) -> dict[str, float]:
        """Start point: explicit values, else the base configuration's value."""
        current = current_values(self.base)
        return {p: float(self.start.get(p, current[p])) for p in self.free}


def current_values(cfg: CascadeConfig) -> dict[str, float]:
    e2, e3, e4 = cfg.detection_efficiency
    return {
        "eta_a2": e2,
        "eta_a3": e3,
        "eta_a4": e4,
        "eta_a34": math.sqrt(e3 * e4),
        "pump_s_x": cfg.pump0_spectrum.s_x,
        "pump_s_y": cfg.pump0_spectrum.s_y,
        "tap_ratio": cfg.tap,
    }


def apply_parameters(cfg: CascadeConfig, values: Mapping[str, float]) -> CascadeConfig:
    e2, e3, e4 = cfg.detection_efficiency
    e2 = values.get("eta_a2", e2)
    e3 = values.get("eta_a34", values.get("eta_a3", e3))
    e4 = values.get("eta_a34", values.get("eta_a4", e4))
    spec = NoiseInputSpectrum(
        values.get("pump_s_x", cfg.pump0_spectrum.s_x), values.get("pump_s_y", cfg.pump0_spectrum.s_y)
    )
    return cfg.with_changes(
        detection_efficiency=(e2, e3, e4),
        pump0_spectrum=spec,
        tap_ratio=values.get("tap_ratio", cfg.tap_ratio),
    )


def predict_db(cfg: CascadeConfig, table: MeasuredDbTable) -> np.ndarray:
    """Model values of the six measured quantities, in dB relative to QNL."""
    cov = build_cascade_covariance(cfg)
    return np.array([linear_to_db(combo_variance(cov, c), c) for c in table.combos(OUTPUT_IDS)])


@dataclass(frozen=True)
class CalibrationResult:
    parameters: dict[str, float]
    predicted_db: tuple[float, ...]
    residuals_db: tuple[float, ...]  # model minus target
    cost: float
    evaluations: int
    converged: bool
    config: CascadeConfig
    weights: tuple[float, ...] = (1.0,) * 6

    @property
    def warning(self) -> bool:
        return not self.converged

    @property
    def max_abs_residual(self) -> float:
        return max(abs(r) for r, w in zip(self.residuals_db, self.weights) if w > 0)


def _cost(problem: CalibrationProblem, values: Mapping[str, float]) -> tuple[float, np.ndarray | None]:
    try:
        pred = predict_db(apply_parameters(problem.base, values), problem.targets)
    except (PhysicsError, TricolorError, ValueError):
        return PENALTY, None
    target = np.array([v.value_db for v in problem.targets.values])
    r = pred - target
    return float(np.sum(np.asarray(problem.weights) * r * r)), pred


def fit(
    problem: CalibrationProblem,
    max_evaluations: int = MAX_EVALUATIONS,
    initial_step: float = 0.25,
    min_step: float = 1e-7,
) -> CalibrationResult:
    """Bounded compass search in coordinates scaled to each parameter's range."""
    names = problem.free
    lo = np.array([PARAMETER_BOUNDS[p][0] for p in names])
    hi = np.array([PARAMETER_BOUNDS[p][1] for p in names])
    init = problem.initial()
    u = np.clip((np.array([init[p] for p in names]) - lo) / (hi - lo), 0.0, 1.0)

    def values_of(vec):
        return {n: float(v) for n, v in zip(names, lo + vec * (hi - lo))}

    best, pred = _cost(problem, values_of(u))
    evals = 1
    step = initial_step
    converged = False
    while evals < max_evaluations:
        improved = False
        for k in range(len(names)):
            for direction in (1.0, -1.0):
                trial = u.copy()
                trial[k] = min(1.0, max(0.0, trial[k] + direction * step))
                if trial[k] == u[k]:
                    continue
                c, p = _cost(problem, values_of(trial))
                evals += 1
                if c < best:
                    u, best, pred, improved = trial, c, p, True
                    break
                if evals >= max_evaluations:
                    break
            if evals >= max_evaluations:
                break
        if not improved:
            step *= 0.5
            if step < min_step:
                converged = True
                break
    values = values_of(u)
    if pred is None:
        raise PhysicsError("no parameter point inside the bounds gives a valid model")
    target = np.array([v.value_db for v in problem.targets.values])
    return CalibrationResult(
        parameters=values,
        predicted_db=tuple(float(x) for x in pred),
        residuals_db=tuple(float(x) for x in pred - target),
        cost=best,
        evaluations=evals,
        converged=converged,
        config=apply_parameters(problem.base, values),
        weights=problem.weights,
    )


def format_result(result: CalibrationResult) -> str:
    lines = ["parameter,value"]
    lines += [f"{k},{v:.6f}" for k, v in result.parameters.items()]
    lines.append("")
    lines.append("quantity,model_db,residual_db")
    for q, p, r in zip(QUANTITY_NAMES, result.predicted_db, result.residuals_db):
        lines.append(f"{q},{p:.4f},{r:+.4f}")
    lines.append("")
    lines.append(f"evaluations,{result.evaluations}")
    lines.append(f"converged,{int(result.converged)}")
    if result.warning:
        lines.append("warning,evaluation cap reached before the step size shrank below tolerance; best point reported")
    return "\n".join(lines) + "\n"


def free_parameter_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())

