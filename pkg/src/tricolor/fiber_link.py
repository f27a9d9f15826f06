"""Fiber attenuation and the degradation of correlation variances in transit.

Variances are normalized to their QNL and quoted in dB.  Fiber is treated as
a pure-loss channel shared by every mode of the measured combination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ConfigError, PhysicsError


@dataclass(frozen=True)
class AttenuationTable:
    entries: tuple[tuple[float, float], ...]  # (wavelength nm, dB/km)

    def __post_init__(self):
        entries = tuple((float(w), float(a)) for w, a in self.entries)
        wls = [w for w, _ in entries]
        if len(set(wls)) != len(wls):
            raise ValueError("attenuation table wavelengths must be unique")
        if any(a <= 0 for _, a in entries):
            raise ValueError("attenuations must be positive")
        object.__setattr__(self, "entries", entries)

    def alpha(self, wavelength: float, tol: float = 1.0) -> float:
        for w, a in self.entries:
            if abs(w - wavelength) <= tol:
                return a
        known = ", ".join(f"{w:g}" for w, _ in self.entries)
        raise KeyError(f"no attenuation entry near {wavelength} nm (table has {known})")

    @property
    def wavelengths(self) -> tuple[float, ...]:
        return tuple(w for w, _ in self.entries)


def parse_attenuation(text: str, source: str = "<string>") -> AttenuationTable:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ConfigError(f"{source}:{lineno}: expected 'wavelength_nm attenuation_db_per_km'")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: non-numeric entry") from exc
    try:
        return AttenuationTable(tuple(rows))
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_attenuation(path: str | Path | None = None) -> AttenuationTable:
    """Read a two-column table; ``None`` loads the shipped default."""
    if path is None:
        return parse_attenuation(resources.files("tricolor").joinpath("data/attenuation.txt").read_text(), "attenuation.txt")
    return parse_attenuation(Path(path).read_text(), str(path))


def transmission(distance_km: float, alpha_db_per_km: float) -> float:
    if distance_km < 0 or alpha_db_per_km <= 0:
        raise ValueError("need distance >= 0 and alpha > 0")
    return 10.0 ** (-alpha_db_per_km * distance_km / 10.0)


def degrade_db(v_db: float, eta: float) -> float:
    """Normalized variance after a pure-loss channel, ``η v + (1 - η)``, in dB."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"transmission must lie in (0, 1], got {eta}")
    return 10.0 * math.log10(eta * 10.0 ** (v_db / 10.0) + (1.0 - eta))


def loss_budget_db(v_db: float, cutoff_db: float) -> float:
    """Channel loss (dB) that takes ``v_db`` up to ``cutoff_db``."""
    if not cutoff_db < 0:
        raise PhysicsError("cutoff must be below the QNL (negative dB)")
    if not v_db < cutoff_db:
        raise PhysicsError(f"variance {v_db} dB is not below the cutoff {cutoff_db} dB; no usable distance")
    return -10.0 * math.log10((1.0 - 10.0 ** (cutoff_db / 10.0)) / (1.0 - 10.0 ** (v_db / 10.0)))


def max_distance(v_db: float, cutoff_db: float, alpha_db_per_km: float) -> float:
    if alpha_db_per_km <= 0:
        raise ValueError("alpha must be positive")
    return loss_budget_db(v_db, cutoff_db) / alpha_db_per_km


def sweep(v_db: float, alpha_db_per_km: float, distances_km: Iterable[float]) -> np.ndarray:
    """Rows of ``(distance_km, degraded dB)``."""
    d = np.asarray(list(distances_km), dtype=float)
    return np.column_stack([d, [degrade_db(v_db, transmission(x, alpha_db_per_km)) for x in d]])
