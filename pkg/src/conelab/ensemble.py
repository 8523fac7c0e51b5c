"""Finite-support matrix laws: validation, standing conditions, sampling.

The law mu is a finite list of strictly positive atoms with probabilities.
Finite support keeps the transfer operators exact sums and makes the
comparability conditions decidable by inspecting atoms; non-arithmeticity is
undecidable and only a heuristic witness is reported.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BadProbabilityVectorError,
    DimensionMismatchError,
    NonPositiveEntryError,
)
from .geometry import PositiveMatrix, kesten_ratio, spectral_radius_cw
from .streams import RandomStream

PROB_TOL = 1e-12


@dataclass(frozen=True)
class ScalarReference:
    """Oracle ensemble whose atoms are scalar multiples c_i * M of one base.

    The product law reduces to an i.i.d. scalar sum on top of a deterministic
    matrix power, so the log-eigenvalue curve and all its derivatives have
    closed forms: Lambda(s) = log E[c^s] + s log rho(M).
    """

    base: PositiveMatrix
    scalars: tuple[tuple[float, float], ...]  # (c_i, p_i)
    log_rho: float = field(init=False)

    def __post_init__(self):
        cs = np.array([c for c, _ in self.scalars], dtype=float)
        ps = np.array([p for _, p in self.scalars], dtype=float)
        if np.any(cs <= 0):
            raise NonPositiveEntryError("scalar factors must be positive")
        _check_probs(ps)
        object.__setattr__(self, "log_rho", math.log(spectral_radius_cw(self.base, tol=1e-14)))

    def _log_c(self) -> tuple[np.ndarray, np.ndarray]:
        cs = np.array([c for c, _ in self.scalars], dtype=float)
        ps = np.array([p for _, p in self.scalars], dtype=float)
        return np.log(cs), ps

    def ensemble(self) -> "FiniteEnsemble":
        atoms = [self.base.scaled(c) for c, _ in self.scalars]
        probs = [p for _, p in self.scalars]
        return build_finite(self.base.dim, atoms, probs, scalar_reference=self)

    def lambda_of(self, s: float) -> float:
        """Closed-form Lambda(s) = log sum p_i c_i^s + s log rho(M)."""
        x, p = self._log_c()
        m = (s * x).max()
        return m + math.log(float(np.sum(p * np.exp(s * x - m)))) + s * self.log_rho

    def cumulant(self, order: int, s: float = 0.0) -> float:
        """Exact Lambda^(order)(s) via tilted central moments of log c."""
        x, p = self._log_c()
        w = p * np.exp(s * x - (s * x).max())
        w /= w.sum()
        mean = float(w @ x)
        mu = [float(w @ (x - mean) ** k) for k in range(2, 6)]
        if order == 1:
            return mean + self.log_rho
        if order == 2:
            return mu[0]
        if order == 3:
            return mu[1]
        if order == 4:
            return mu[2] - 3.0 * mu[0] ** 2
        if order == 5:
            return mu[3] - 10.0 * mu[1] * mu[0]
        raise ValueError("orders 1..5 supported")

    @property
    def lyapunov(self) -> float:
        return self.cumulant(1)

    @property
    def sigma2(self) -> float:
        return self.cumulant(2)

    @property
    def m3(self) -> float:
        return self.cumulant(3)

    def legendre_point(self, s: float) -> tuple[float, float]:
        """(q, rate) at tilt s: q = Lambda'(s), rate = s q - Lambda(s)."""
        q = self.cumulant(1, s)
        return q, s * q - self.lambda_of(s)

    def to_dict(self) -> dict:
        return {
            "base": [list(row) for row in self.base.entries],
            "scalars": [[float(c), float(p)] for c, p in self.scalars],
        }


def scalar_reference(base, scalar_pairs) -> ScalarReference:
    """Build the closed-form reference from a base matrix and (c, p) pairs."""
    m = base if isinstance(base, PositiveMatrix) else PositiveMatrix(base)
    return ScalarReference(m, tuple((float(c), float(p)) for c, p in scalar_pairs))


def _check_probs(p: np.ndarray):
    if p.ndim != 1 or p.size == 0 or not np.all(np.isfinite(p)):
        raise BadProbabilityVectorError("probabilities must be a finite nonempty vector")
    if np.any(p <= 0.0):
        raise BadProbabilityVectorError("probabilities must be strictly positive")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise BadProbabilityVectorError(f"probabilities must sum to 1 within {PROB_TOL}")


@dataclass(frozen=True)
class FiniteEnsemble:
    """The law mu as atoms with probabilities, all sharing one dimension."""

    dim: int
    atoms: tuple[PositiveMatrix, ...]
    probs: np.ndarray
    scalar_reference: Optional[ScalarReference] = None
    atom_tensor: np.ndarray = field(init=False, repr=False)
    cum_probs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.atoms) == 0:
            raise BadProbabilityVectorError("at least one atom is required")
        p = np.array(self.probs, dtype=float)
        _check_probs(p)
        if p.size != len(self.atoms):
            raise DimensionMismatchError("need one probability per atom")
        for a in self.atoms:
            if a.dim != self.dim:
                raise DimensionMismatchError("all atoms must share the ensemble dimension")
        p.flags.writeable = False
        tensor = np.stack([a.entries for a in self.atoms])
        tensor.flags.writeable = False
        cum = np.cumsum(p)
        cum[-1] = 1.0
        cum.flags.writeable = False
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "atom_tensor", tensor)
        object.__setattr__(self, "cum_probs", cum)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def transposed(self) -> "FiniteEnsemble":
        """Same law with every atom transposed (for conjugate operators)."""
        return FiniteEnsemble(
            self.dim, tuple(PositiveMatrix(a.entries.T) for a in self.atoms), self.probs
        )


def build_finite(dim, atoms, probs, scalar_reference=None) -> FiniteEnsemble:
    """Validate and wrap atoms + probabilities into a FiniteEnsemble."""
    wrapped = tuple(a if isinstance(a, PositiveMatrix) else PositiveMatrix(a) for a in atoms)
    return FiniteEnsemble(int(dim), wrapped, np.asarray(probs, dtype=float), scalar_reference)


@dataclass(frozen=True)
class ConditionReport:
    """Constants extracted from the atoms for the standing conditions.

    c_full bounds all-entry comparability (needed for negative tilts),
    c_col bounds within-column comparability, and epsilon = 1/(c_col * d) is
    the interior margin of every projected image. The non-arithmeticity flag
    is a heuristic: it looks for two atoms whose log spectral radii have an
    irrational-looking ratio (far from every p/q with q <= 64).
    """

    c_full: float
    c_col: float
    epsilon: float
    nonarithmetic_heuristic: bool
    witness: Optional[dict]
    moment_log3_finite: bool = True
    moment_exponential_finite: bool = True

    @property
    def a1_holds(self) -> bool:
        return math.isfinite(self.c_full)

    @property
    def a2_holds(self) -> bool:
        return math.isfinite(self.c_col)


_RATIONAL_Q_MAX = 64
_RATIONAL_TOL = 1e-9


def _far_from_rationals(r: float) -> bool:
    return all(abs(r - round(r * q) / q) > _RATIONAL_TOL for q in range(1, _RATIONAL_Q_MAX + 1))


def check_conditions(ens: FiniteEnsemble) -> ConditionReport:
    """Compute comparability constants and the non-arithmeticity heuristic."""
    c_full = max(kesten_ratio(a, columnwise=False) for a in ens.atoms)
    c_col = max(kesten_ratio(a, columnwise=True) for a in ens.atoms)
    epsilon = 1.0 / (c_col * ens.dim)
    log_rhos = [math.log(spectral_radius_cw(a, tol=1e-13)) for a in ens.atoms]
    heuristic, witness = False, None
    for i in range(ens.n_atoms):
        for j in range(ens.n_atoms):
            if i == j or abs(log_rhos[j]) < 1e-300:
                continue
            r = log_rhos[i] / log_rhos[j]
            if _far_from_rationals(r):
                heuristic = True
                witness = {
                    "atoms": (i, j),
                    "ratio": r,
                    "rational_distance": min(
                        abs(r - round(r * q) / q) for q in range(1, _RATIONAL_Q_MAX + 1)
                    ),
                }
                break
        if heuristic:
            break
    return ConditionReport(c_full, c_col, epsilon, heuristic, witness)


def sample_indices(ens: FiniteEnsemble, stream: RandomStream, size: int) -> np.ndarray:
    """Vectorized atom-index draws from the stream."""
    u = stream.generator.random(size)
    return np.searchsorted(ens.cum_probs, u, side="right").astype(np.intp)


def sample_matrix(ens: FiniteEnsemble, stream: RandomStream) -> PositiveMatrix:
    """Draw one atom according to the probabilities."""
    return ens.atoms[int(sample_indices(ens, stream, 1)[0])]


# --- JSON interface -------------------------------------------------------
#
# Document shape:
#   { "dim": int, "atoms": [[row-major reals], ...], "probs": [reals],
#     "scalar_reference": {"base": [[...]], "scalars": [[c, p], ...]} }
# Atoms may be given flat (length d*d, row-major) or as nested rows.


def _reject_constant(token):
    raise NonPositiveEntryError(f"non-finite JSON literal {token!r} rejected")


def _atom_array(raw, dim: int) -> np.ndarray:
    a = np.array(raw, dtype=float)
    if a.ndim == 1:
        if a.size != dim * dim:
            raise DimensionMismatchError(f"flat atom must have {dim * dim} entries, got {a.size}")
        a = a.reshape(dim, dim)
    if a.shape != (dim, dim):
        raise DimensionMismatchError(f"atom shape {a.shape} does not match dim {dim}")
    return a


def ensemble_from_dict(doc: dict) -> FiniteEnsemble:
    ref = None
    if "scalar_reference" in doc and doc["scalar_reference"] is not None:
        sr = doc["scalar_reference"]
        ref = scalar_reference(np.array(sr["base"], dtype=float), sr["scalars"])
    if "atoms" not in doc and ref is not None:
        return ref.ensemble()
    dim = int(doc["dim"])
    atoms = [_atom_array(a, dim) for a in doc["atoms"]]
    for a in atoms:
        if not np.all(np.isfinite(a)):
            raise NonPositiveEntryError("atom entries must be finite")
    ens = build_finite(dim, atoms, doc["probs"], scalar_reference=ref)
    if ref is not None:
        induced = ref.ensemble()
        if induced.n_atoms != ens.n_atoms or not np.allclose(
            induced.atom_tensor, ens.atom_tensor, rtol=1e-12
        ):
            raise DimensionMismatchError("atoms disagree with the declared scalar reference")
    return ens


def ensemble_to_dict(ens: FiniteEnsemble) -> dict:
    doc = {
        "dim": ens.dim,
        "atoms": [list(map(float, a.entries.ravel())) for a in ens.atoms],
        "probs": [float(p) for p in ens.probs],
    }
    if ens.scalar_reference is not None:
        doc["scalar_reference"] = ens.scalar_reference.to_dict()
    return doc


def load_ensemble(path) -> FiniteEnsemble:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh, parse_constant=_reject_constant)
    return ensemble_from_dict(doc)


def ensemble_hash(ens: FiniteEnsemble) -> str:
    """Stable identity of the law (dim, atoms, probs only)."""
    doc = {
        "dim": ens.dim,
        "atoms": [list(map(float, a.entries.ravel())) for a in ens.atoms],
        "probs": [float(p) for p in ens.probs],
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
