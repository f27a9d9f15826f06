"""Tripartite inseparability test on combined correlation variances.

For modes (a, b, c), here (a2, a3, a4)::

    Δ1 = V(Xb - Xc) + V(g1 Ya + Yb + Yc)
    Δ2 = V(Xa - Xc) + V(Ya + g2 Yb + Yc)
    Δ3 = V(Xa - Xb) + V(Ya + Yb + g3 Yc)

Each Δ is at least 4 for a separable state.  Violating any two of the
three inequalities demonstrates full tripartite inseparability.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import ConfigError, PhysicsError
from .gaussian_core import CovarianceMatrix, QuadratureCombo, VarianceDb, combo_variance, db_to_linear

BOUNDARY = 4.0
VIOLATION_TOL = 1e-9  # a violation must clear the boundary by more than rounding
ENTANGLED = "entangled"
NOT_DEMONSTRATED = "not-demonstrated"

QUANTITY_NAMES = ("X3-X4", "g1*Y2+Y3+Y4", "X2-X4", "Y2+g2*Y3+Y4", "X2-X3", "Y2+Y3+g3*Y4")


@dataclass(frozen=True)
class CriteriaResult:
    deltas: tuple[float, float, float]
    gains: tuple[float, float, float]
    violated: frozenset[int]
    verdict: str
    note: str = ""
    uncertainties: tuple[float, float, float] | None = None

    @property
    def delta1(self):
        return self.deltas[0]

    @property
    def delta2(self):
        return self.deltas[1]

    @property
    def delta3(self):
        return self.deltas[2]

    @property
    def entangled(self) -> bool:
        return self.verdict == ENTANGLED


def _verdict(deltas, gains, uncertainties=None) -> CriteriaResult:
    violated = frozenset(i + 1 for i, d in enumerate(deltas) if d < BOUNDARY - VIOLATION_TOL)
    note = ""
    if len(violated) == 1:
        note = f"only inequality {next(iter(violated))} is violated; two are required"
    verdict = ENTANGLED if len(violated) >= 2 else NOT_DEMONSTRATED
    return CriteriaResult(tuple(deltas), tuple(gains), violated, verdict, note, uncertainties)


def inequality_combos(
    gains: Sequence[float], ids: Sequence[int] = (2, 3, 4)
) -> list[tuple[QuadratureCombo, QuadratureCombo]]:
    """The (amplitude, phase) combination pair of each inequality."""
    a, b, c = ids
    g1, g2, g3 = gains

    def diff(i, j):
        return QuadratureCombo(((i, "X", 1.0), (j, "X", -1.0)))

    def phase(wa, wb, wc):
        return QuadratureCombo(((a, "Y", wa), (b, "Y", wb), (c, "Y", wc)))

    return [
        (diff(b, c), phase(g1, 1.0, 1.0)),
        (diff(a, c), phase(1.0, g2, 1.0)),
        (diff(a, b), phase(1.0, 1.0, g3)),
    ]


def evaluate(cov: CovarianceMatrix, gains: Sequence[float], ids: Sequence[int] = (2, 3, 4)) -> CriteriaResult:
    deltas = [combo_variance(cov, amp) + combo_variance(cov, ph) for amp, ph in inequality_combos(gains, ids)]
    return _verdict(deltas, tuple(float(g) for g in gains))


def optimal_gains(cov: CovarianceMatrix, ids: Sequence[int] = (2, 3, 4)) -> tuple[float, float, float]:
    """Closed-form minimizers of each phase-combination variance.

    ``g_k = -Cov(Y_k, sum of the other two Y) / V(Y_k)``.
    """
    y = [cov.index(i) + 1 for i in ids]
    v = cov.entries
    gains = []
    for k in range(3):
        others = [y[j] for j in range(3) if j != k]
        var = v[y[k], y[k]]
        if var <= 0:
            raise PhysicsError(f"phase quadrature of mode {ids[k]} has zero variance; optimal gain undefined")
        gains.append(float(-(v[y[k], others[0]] + v[y[k], others[1]]) / var) + 0.0)
    return tuple(gains)


def evaluate_optimal(cov: CovarianceMatrix, ids: Sequence[int] = (2, 3, 4)) -> CriteriaResult:
    return evaluate(cov, optimal_gains(cov, ids), ids)


@dataclass(frozen=True)
class MeasuredDbTable:
    """Six measured variances in dB relative to QNL plus the gains used.

    ``values`` follow :data:`QUANTITY_NAMES`: the three amplitude differences
    interleaved with the three phase sums, inequality by inequality.
    """

    values: tuple[VarianceDb, ...]
    gains: tuple[float, float, float]
    gain_uncertainties: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.values) != 6:
            raise ValueError(f"a measurement table has six entries, got {len(self.values)}")
        if len(self.gains) != 3 or len(self.gain_uncertainties) != 3:
            raise ValueError("a measurement table has three gains")

    def combos(self, ids: Sequence[int] = (2, 3, 4)) -> list[QuadratureCombo]:
        return [c for pair in inequality_combos(self.gains, ids) for c in pair]


REFERENCE_TABLE = MeasuredDbTable(
    values=(
        VarianceDb(-4.1, 0.1),
        VarianceDb(-1.1, 0.1),
        VarianceDb(-3.2, 0.1),
        VarianceDb(-0.5, 0.1),
        VarianceDb(-3.2, 0.1),
        VarianceDb(-0.5, 0.1),
    ),
    gains=(0.95, 1.00, 1.00),
    gain_uncertainties=(0.02, 0.02, 0.02),
)


def criteria_from_measurements(t: MeasuredDbTable) -> CriteriaResult:
    """Convert dB readings to absolute variances and sum per inequality.

    Uncertainties are first-order propagated, adding the dB and gain
    contributions in quadrature.
    """
    ln10_10 = math.log(10.0) / 10.0
    deltas, sigmas = [], []
    combos = t.combos()
    for k in range(3):
        amp_db, ph_db = t.values[2 * k], t.values[2 * k + 1]
        amp = db_to_linear(amp_db, combos[2 * k])
        ph = db_to_linear(ph_db, combos[2 * k + 1])
        g, sg = t.gains[k], t.gain_uncertainties[k]
        d_gain = 2.0 * g * 10.0 ** (ph_db.value_db / 10.0)
        sigma = math.sqrt(
            (amp * ln10_10 * amp_db.uncertainty_db) ** 2
            + (ph * ln10_10 * ph_db.uncertainty_db) ** 2
            + (d_gain * sg) ** 2
        )
        deltas.append(amp + ph)
        sigmas.append(sigma)
    return _verdict(deltas, t.gains, tuple(sigmas))


def _canon(name: str) -> str:
    return name.replace(" ", "").upper()


def parse_measured_table(text: str) -> MeasuredDbTable:
    """Read the six-row CSV ``quantity, dB, uncertainty_dB, gain[, gain_uncertainty]``.

    A header row starting with ``quantity`` is optional.  Gains are read from
    the three phase rows; the amplitude rows leave the gain column empty.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(cell.strip() for cell in r)]
    rows = [r for r in rows if not r[0].strip().startswith("#")]
    if rows and rows[0][0].strip().lower() == "quantity":
        rows = rows[1:]
    if len(rows) != 6:
        raise ConfigError(f"measurement table needs exactly six rows, found {len(rows)}")
    by_name = {}
    for r in rows:
        cells = [c.strip() for c in r] + [""] * 5
        name = _canon(cells[0])
        if name not in map(_canon, QUANTITY_NAMES):
            raise ConfigError(f"unknown quantity {cells[0]!r}; expected one of {', '.join(QUANTITY_NAMES)}")
        try:
            by_name[name] = (
                float(cells[1]),
                float(cells[2] or 0.0),
                float(cells[3]) if cells[3] else None,
                float(cells[4] or 0.0),
            )
        except ValueError as exc:
            raise ConfigError(f"non-numeric entry in row {r!r}") from exc
    if len(by_name) != 6:
        raise ConfigError("measurement table repeats a quantity")
    values, gains, gerr = [], [], []
    for k, q in enumerate(QUANTITY_NAMES):
        db, err, gain, gain_err = by_name[_canon(q)]
        values.append(VarianceDb(db, err))
        if k % 2:
            if gain is None:
                raise ConfigError(f"row {q} needs a gain value")
            gains.append(gain)
            gerr.append(gain_err)
    return MeasuredDbTable(tuple(values), tuple(gains), tuple(gerr))


def read_measured_table(path: str | Path) -> MeasuredDbTable:
    return parse_measured_table(Path(path).read_text())


def format_measured_table(t: MeasuredDbTable) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["quantity", "db", "uncertainty_db", "gain", "gain_uncertainty"])
    for k, (q, v) in enumerate(zip(QUANTITY_NAMES, t.values)):
        if k % 2:
            w.writerow([q, v.value_db, v.uncertainty_db, t.gains[k // 2], t.gain_uncertainties[k // 2]])
        else:
            w.writerow([q, v.value_db, v.uncertainty_db, "", ""])
    return out.getvalue()


def format_result_csv(r: CriteriaResult) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["inequality", "delta", "uncertainty", "gain", "violated"])
    for k in range(3):
        unc = "" if r.uncertainties is None else f"{r.uncertainties[k]:.6g}"
        w.writerow([k + 1, f"{r.deltas[k]:.10g}", unc, f"{r.gains[k]:.10g}", int(k + 1 in r.violated)])
    w.writerow(["verdict", r.verdict, "", "", ""])
    return out.getvalue()


def format_result_text(r: CriteriaResult) -> str:
    lines = []
    for k in range(3):
        unc = "" if r.uncertainties is None else f" ± {r.uncertainties[k]:.2f}"
        mark = "<" if k + 1 in r.violated else ">="
        lines.append(f"Δ{k + 1} = {r.deltas[k]:.3f}{unc}  ({mark} 4)   g{k + 1} = {r.gains[k]:.4f}")
    lines.append(f"verdict: {r.verdict}")
    if r.note:
        lines.append(f"note: {r.note}")
    return "\n".join(lines)

