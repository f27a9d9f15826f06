"""Quadrature algebra for Gaussian states of light.

Conventions
-----------
* Quadratures are ordered ``(X1, Y1, X2, Y2, ...)``, one ``(X, Y)`` pair per
  mode, in the order of :attr:`CovarianceMatrix.modes`.
* The vacuum variance of every quadrature is 1, so ``[X, Y] = 2i``.  The
  symmetrized uncertainty relation then reads ``V + iΩ >= 0`` with the
  per-mode block ``Ω = [[0, 1], [-1, 0]]``.
* Variances of linear combinations are quoted relative to their quantum
  noise limit (QNL), the variance the same combination has on vacuum.
"""

from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import PhysicsError, TricolorError, UnknownModeError

SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = -1e-9


@dataclass(frozen=True)
class ModeLabel:
    id: int
    wavelength: float  # nm
    name: str = ""

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError(f"mode {self.id}: wavelength must be positive, got {self.wavelength}")
        if not self.name:
            object.__setattr__(self, "name", f"a{self.id}@{self.wavelength:.2f}nm")


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form for ``n_modes`` modes in (X, Y) ordering."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True)
class CovarianceMatrix:
    """Real symmetric ``2N x 2N`` matrix of quadrature second moments.

    The stored array is read-only; every operation returns a new instance.
    Construction checks symmetry and unique mode ids but not physicality,
    see :func:`physicality_check`.
    """

    modes: tuple[ModeLabel, ...]
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        modes = tuple(self.modes)
        ids = [m.id for m in modes]
        if len(set(ids)) != len(ids):
            raise ValueError(f"mode ids must be unique, got {ids}")
        a = np.array(self.entries, dtype=float)
        n = 2 * len(modes)
        if a.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix for {len(modes)} modes, got {a.shape}")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "entries", a)

    @classmethod
    def vacuum(cls, modes: Sequence[ModeLabel]) -> "CovarianceMatrix":
        return cls(tuple(modes), np.eye(2 * len(modes)))

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def mode_ids(self) -> tuple[int, ...]:
        return tuple(m.id for m in self.modes)

    def index(self, mode_id: int) -> int:
        """Row index of the X quadrature of ``mode_id`` (Y is the next row)."""
        for k, m in enumerate(self.modes):
            if m.id == mode_id:
                return 2 * k
        raise UnknownModeError(mode_id)

    def mode(self, mode_id: int) -> ModeLabel:
        return self.modes[self.index(mode_id) // 2]

    def block(self, ids_a: Iterable[int], ids_b: Iterable[int] | None = None) -> np.ndarray:
        """Sub-block of the matrix between the listed modes."""
        rows = [i for m in ids_a for i in (self.index(m), self.index(m) + 1)]
        cols = rows if ids_b is None else [i for m in ids_b for i in (self.index(m), self.index(m) + 1)]
        return self.entries[np.ix_(rows, cols)]

    def marginal(self, ids: Iterable[int]) -> "CovarianceMatrix":
        ids = list(ids)
        return CovarianceMatrix(tuple(self.mode(i) for i in ids), self.block(ids))


_TERM_RE = re.compile(r"\s*([+-]?)\s*(?:(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*\*?\s*)?([XYxy])(\d+)\s*")


@dataclass(frozen=True)
class QuadratureCombo:
    """Weighted sum of quadratures, ``terms = ((mode_id, 'X'|'Y', weight), ...)``."""

    terms: tuple[tuple[int, str, float], ...]

    def __post_init__(self):
        terms = tuple((int(m), str(q).upper(), float(w)) for m, q, w in self.terms)
        for _, q, _ in terms:
            if q not in ("X", "Y"):
                raise ValueError(f"quadrature selector must be 'X' or 'Y', got {q!r}")
        if not any(w != 0.0 for _, _, w in terms):
            raise ValueError("a quadrature combination needs at least one nonzero weight")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def parse(cls, text: str) -> "QuadratureCombo":
        """Parse expressions such as ``"X3-X4"`` or ``"0.95*Y2+Y3+Y4"``."""
        pos, terms = 0, []
        text = text.strip()
        while pos < len(text):
            m = _TERM_RE.match(text, pos)
            if m is None or m.end() == pos:
                raise ValueError(f"cannot parse quadrature combination {text!r} at position {pos}")
            sign = -1.0 if m.group(1) == "-" else 1.0
            if terms and not m.group(1):
                raise ValueError(f"missing operator before term {m.group(0).strip()!r} in {text!r}")
            weight = float(m.group(2)) if m.group(2) else 1.0
            terms.append((int(m.group(4)), m.group(3).upper(), sign * weight))
            pos = m.end()
        if not terms:
            raise ValueError("empty quadrature combination")
        return cls(tuple(terms))

    @property
    def mode_ids(self) -> tuple[int, ...]:
        return tuple(dict.fromkeys(m for m, _, _ in self.terms))

    def weight_vector(self, cov_or_modes) -> np.ndarray:
        """Dense weight vector in the quadrature ordering of a covariance matrix."""
        cov = cov_or_modes if isinstance(cov_or_modes, CovarianceMatrix) else CovarianceMatrix.vacuum(cov_or_modes)
        w = np.zeros(2 * cov.n_modes)
        for mode_id, quad, weight in self.terms:
            w[cov.index(mode_id) + (quad == "Y")] += weight
        return w

    def __str__(self):
        parts = []
        for k, (m, q, w) in enumerate(self.terms):
            sign = "-" if w < 0 else ("+" if k else "")
            mag = abs(w)
            coef = "" if mag == 1.0 else f"{mag:g}*"
            parts.append(f"{sign}{coef}{q}{m}")
        return "".join(parts)


@dataclass(frozen=True)
class VarianceDb:
    value_db: float
    uncertainty_db: float = 0.0

    def __post_init__(self):
        if self.uncertainty_db < 0:
            raise ValueError("uncertainty_db must be non-negative")


def combo_variance(cov: CovarianceMatrix, combo: QuadratureCombo) -> float:
    """Variance ``w^T V w`` of a weighted quadrature sum."""
    w = combo.weight_vector(cov)
    return float(w @ cov.entries @ w)


def qnl_of_combo(combo: QuadratureCombo) -> float:
    """Quantum noise limit of a combination: the sum of squared weights."""
    return float(sum(w * w for _, _, w in combo.terms))


def db_to_linear(v: VarianceDb | float, combo: QuadratureCombo) -> float:
    value_db = v.value_db if isinstance(v, VarianceDb) else float(v)
    return qnl_of_combo(combo) * 10.0 ** (value_db / 10.0)


def linear_to_db(variance: float, combo: QuadratureCombo) -> float:
    """Inverse of :func:`db_to_linear`: variance in dB relative to the QNL."""
    if variance <= 0:
        raise PhysicsError(f"variance must be positive to express in dB, got {variance}")
    return 10.0 * math.log10(variance / qnl_of_combo(combo))


def apply_loss(cov: CovarianceMatrix, mode: ModeLabel | int, eta: float) -> CovarianceMatrix:
    """Pure-loss channel of transmissivity ``eta`` acting on one mode.

    The mode's rows and columns are scaled by ``sqrt(eta)`` and its diagonal
    picks up ``1 - eta`` of vacuum noise.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"loss transmissivity must lie in [0, 1], got {eta}")
    mode_id = mode.id if isinstance(mode, ModeLabel) else mode
    i = cov.index(mode_id)
    scale = np.ones(2 * cov.n_modes)
    scale[i : i + 2] = math.sqrt(eta)
    out = cov.entries * np.outer(scale, scale)
    out[i, i] += 1.0 - eta
    out[i + 1, i + 1] += 1.0 - eta
    return CovarianceMatrix(cov.modes, out)


@dataclass(frozen=True)
class PhysicalityReport:
    passed: bool
    min_eigenvalue: float

    def __bool__(self):
        return self.passed


def physicality_check(cov: CovarianceMatrix | np.ndarray, tol: float = PHYSICALITY_TOL) -> PhysicalityReport:
    """Test the uncertainty relation ``V + iΩ >= 0`` via Hermitian eigenvalues."""
    a = cov.entries if isinstance(cov, CovarianceMatrix) else np.asarray(cov, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
        raise ValueError(f"expected a square matrix of even dimension, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise ValueError("physicality check requires a symmetric matrix")
    lam = np.linalg.eigvalsh(a + 1j * symplectic_form(a.shape[0] // 2))
    lam_min = float(lam[0])
    return PhysicalityReport(bool(lam_min >= tol), lam_min)


def format_covariance(cov: CovarianceMatrix) -> str:
    """Plain-text matrix block: a ``# modes:`` header then row-major entries.

    Header tokens are ``id:name:wavelength_nm``.  Entries use ``repr``
    precision so that a write/read round trip is exact.
    """
    out = io.StringIO()
    header = " ".join(f"{m.id}:{m.name}:{m.wavelength!r}" for m in cov.modes)
    out.write(f"# modes: {header}\n")
    for row in cov.entries:
        out.write(" ".join(repr(float(x)) for x in row))
        out.write("\n")
    return out.getvalue()


def parse_covariance(text: str) -> CovarianceMatrix:
    modes, rows = None, []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s.lstrip("#").strip()
            if body.startswith("modes:"):
                modes = []
                for tok in body[len("modes:") :].split():
                    try:
                        mid, name, wl = tok.split(":")
                        modes.append(ModeLabel(int(mid), float(wl), name))
                    except ValueError as exc:
                        raise TricolorError(f"line {lineno}: bad mode token {tok!r}") from exc
            continue
        try:
            rows.append([float(x) for x in s.split()])
        except ValueError as exc:
            raise TricolorError(f"line {lineno}: non-numeric matrix entry") from exc
    if modes is None:
        raise TricolorError("covariance file has no '# modes:' header line")
    return CovarianceMatrix(tuple(modes), np.array(rows, dtype=float))
