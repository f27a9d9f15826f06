"""Quasi-phase-matched signal/idler wavelengths versus crystal temperature.

All three waves share one polarization (type-0).  Wavelengths are passed in
nm; dispersion formulas work in µm, and the wave-vector mismatch is returned
in rad/µm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy import optimize, stats

from .errors import ConfigError, NoSolutionError, PhysicsError

ENERGY_TOL = 1e-4


def _gayer2008(c: Mapping[str, float], lam: float, temp: float) -> float:
    f = (temp - 24.5) * (temp + 570.82)
    l2 = lam * lam
    n2 = (
        c["a1"]
        + c["b1"] * f
        + (c["a2"] + c["b2"] * f) / (l2 - (c["a3"] + c["b3"] * f) ** 2)
        + (c["a4"] + c["b4"] * f) / (l2 - c["a5"] ** 2)
        - c["a6"] * l2
    )
    return math.sqrt(n2)


def _ktp_z_thermal(c: Mapping[str, float], lam: float, temp: float) -> float:
    l2 = lam * lam
    n0 = math.sqrt(c["A"] + c["B"] / (1.0 - c["C"] / l2) + c["D"] / (1.0 - c["E"] / l2) - c["F"] * l2)
    dt = temp - 25.0
    n1 = sum(c[f"n1_{m}"] / lam**m for m in range(4))
    n2 = sum(c[f"n2_{m}"] / lam**m for m in range(4))
    return n0 + n1 * dt + n2 * dt * dt


SELLMEIER_FORMS: dict[str, Callable[[Mapping[str, float], float, float], float]] = {
    "gayer2008": _gayer2008,
    "ktp_z_thermal": _ktp_z_thermal,
}


@dataclass(frozen=True)
class CrystalDispersion:
    material: str
    form: str
    coefficients: Mapping[str, float]
    band_um: tuple[float, float]
    poling_period: float  # µm at reference_temperature
    thermal_expansion: float = 1.5e-5
    reference_temperature: float = 25.0

    def __post_init__(self):
        if self.form not in SELLMEIER_FORMS:
            raise ConfigError(f"unknown Sellmeier form {self.form!r}; known: {sorted(SELLMEIER_FORMS)}")
        if not self.poling_period > 0:
            raise ValueError("poling period must be positive")
        lo, hi = self.band_um
        if not 0 < lo < hi:
            raise ValueError(f"bad validity band {self.band_um}")
        object.__setattr__(self, "coefficients", dict(self.coefficients))

    def period_at(self, temperature: float) -> float:
        return self.poling_period * (1.0 + self.thermal_expansion * (temperature - self.reference_temperature))


@dataclass(frozen=True)
class TuningPoint:
    temperature: float
    signal_wavelength: float
    idler_wavelength: float


def refractive_index(c: CrystalDispersion, wavelength: float, temperature: float) -> float:
    lam = wavelength * 1e-3
    lo, hi = c.band_um
    if not lo <= lam <= hi:
        raise PhysicsError(
            f"{wavelength} nm lies outside the {c.material} dispersion band {lo * 1e3:g}-{hi * 1e3:g} nm"
        )
    n = SELLMEIER_FORMS[c.form](c.coefficients, lam, temperature)
    if not 1.0 < n < 3.0:
        raise PhysicsError(f"implausible refractive index {n} for {c.material} at {wavelength} nm")
    return n


def idler_wavelength(pump_nm: float, signal_nm: float) -> float:
    inv = 1.0 / pump_nm - 1.0 / signal_nm
    if inv <= 0:
        raise PhysicsError(f"no positive-frequency idler for pump {pump_nm} nm and signal {signal_nm} nm")
    return 1.0 / inv


def _material_k(c: CrystalDispersion, pump_nm: float, signal_nm: float, temperature: float) -> float:
    """``n_p/λp - n_s/λs - n_i/λi`` in 1/µm."""
    idler_nm = idler_wavelength(pump_nm, signal_nm)
    total = 0.0
    for lam_nm, sign in ((pump_nm, 1.0), (signal_nm, -1.0), (idler_nm, -1.0)):
        total += sign * refractive_index(c, lam_nm, temperature) / (lam_nm * 1e-3)
    return total


def qpm_mismatch(c: CrystalDispersion, pump_nm: float, signal_nm: float, temperature: float) -> float:
    """Wave-vector mismatch ``Δk = 2π (n_p/λp - n_s/λs - n_i/λi - 1/Λ(T))`` in rad/µm."""
    return 2.0 * math.pi * (_material_k(c, pump_nm, signal_nm, temperature) - 1.0 / c.period_at(temperature))


def calibrate_poling(c: CrystalDispersion, pump_nm: float, temperature: float, signal_nm: float) -> CrystalDispersion:
    """Copy of ``c`` whose poling period phase-matches the given anchor point."""
    inv_period = _material_k(c, pump_nm, signal_nm, temperature)
    if inv_period <= 0:
        raise PhysicsError("anchor point needs a non-positive poling period; no first-order QPM exists")
    period_at_anchor = 1.0 / inv_period
    scale = 1.0 + c.thermal_expansion * (temperature - c.reference_temperature)
    return replace(c, poling_period=period_at_anchor / scale)


def default_bracket(pump_nm: float, branch: str = "long") -> tuple[float, float]:
    """Half of ``[1.8, 2.2] λp`` on one side of degeneracy."""
    degenerate = 2.0 * pump_nm
    if branch == "long":
        return degenerate * (1.0 + 1e-9), 2.2 * pump_nm
    if branch == "short":
        return 1.8 * pump_nm, degenerate * (1.0 - 1e-9)
    raise ValueError(f"branch must be 'long' or 'short', got {branch!r}")


def solve_wavelengths(
    c: CrystalDispersion,
    pump_nm: float,
    temperature: float,
    bracket: tuple[float, float] | None = None,
    branch: str = "long",
) -> TuningPoint:
    """Signal wavelength with ``Δk = 0`` by bisection inside ``bracket``."""
    lo, hi = bracket if bracket is not None else default_bracket(pump_nm, branch)

    def f(x):
        return qpm_mismatch(c, pump_nm, x, temperature)

    f_lo, f_hi = f(lo), f(hi)
    if np.sign(f_lo) == np.sign(f_hi):
        xs = np.linspace(lo, hi, 9)
        samples = ", ".join(f"{x:.1f}:{f(x):+.3e}" for x in xs)
        raise NoSolutionError(
            f"{c.material} at {temperature} °C: Δk does not change sign on [{lo:.2f}, {hi:.2f}] nm "
            f"(samples nm:rad/µm {samples})"
        )
    signal = optimize.bisect(f, lo, hi, xtol=1e-12, maxiter=200)
    return TuningPoint(temperature, signal, idler_wavelength(pump_nm, signal))


def tuning_curve(
    c: CrystalDispersion,
    pump_nm: float,
    temperatures: Iterable[float],
    branch: str = "long",
) -> list[TuningPoint]:
    return [solve_wavelengths(c, pump_nm, t, branch=branch) for t in temperatures]


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float


def fit_line(x: Iterable[float], y: Iterable[float]) -> LineFit:
    res = stats.linregress(np.asarray(list(x), float), np.asarray(list(y), float))
    return LineFit(res.slope, res.intercept, res.rvalue**2)


def _parse_record(line: str, lineno: int, source: str) -> CrystalDispersion:
    tokens = line.split()
    if len(tokens) < 3:
        raise ConfigError(f"{source}:{lineno}: expected '<material> <form> key=value ...'")
    material, form = tokens[0], tokens[1]
    coeffs, meta = {}, {}
    for tok in tokens[2:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: token {tok!r} is not key=value")
        try:
            if key == "band_um":
                lo, hi = value.split(":")
                meta[key] = (float(lo), float(hi))
            elif key in ("poling_um", "thermal_expansion", "reference_temperature"):
                meta[key] = float(value)
            else:
                coeffs[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {value!r}") from exc
    missing = {"band_um", "poling_um"} - meta.keys()
    if missing:
        raise ConfigError(f"{source}:{lineno}: missing {', '.join(sorted(missing))}")
    return CrystalDispersion(
        material=material,
        form=form,
        coefficients=coeffs,
        band_um=meta["band_um"],
        poling_period=meta["poling_um"],
        thermal_expansion=meta.get("thermal_expansion", 1.5e-5),
        reference_temperature=meta.get("reference_temperature", 25.0),
    )


def load_dispersion(path: str | Path | None = None) -> dict[str, CrystalDispersion]:
    """Read dispersion records; ``None`` loads the data file shipped with the package."""
    if path is None:
        text = resources.files("tricolor").joinpath("data/dispersion.txt").read_text()
        source = "dispersion.txt"
    else:
        text = Path(path).read_text()
        source = str(path)
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rec = _parse_record(line, lineno, source)
            out[rec.material] = rec
    return out


def check_energy(pump_nm: float, point: TuningPoint, tol: float = ENERGY_TOL) -> bool:
    lhs = 1.0 / pump_nm
    return abs(1.0 / point.signal_wavelength + 1.0 / point.idler_wavelength - lhs) <= tol * lhs
