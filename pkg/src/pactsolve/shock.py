"""Finite probability grids for the production noise ``B``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ProblemValidationError

DEFAULT_GAUSS_ORDER = 64
MAX_GAUSS_ORDER = 256


@dataclass(frozen=True, eq=False)
class ShockGrid:
    """Atoms ``b_i`` with strictly positive probabilities ``p_i``.

    Atoms are strictly increasing and the probabilities sum to one.  The
    arrays are made read-only so a grid can be shared freely.
    """

    atoms: np.ndarray
    probs: np.ndarray
    label: str = ""
    spec: dict = field(default=None, repr=False)

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float).reshape(-1)
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if atoms.size == 0:
            raise ProblemValidationError("shock grid is empty", field="atoms")
        if atoms.shape != probs.shape:
            raise ProblemValidationError("atoms and probs differ in length", field="probs")
        if not np.all(np.isfinite(atoms)):
            raise ProblemValidationError("atoms must be finite", field="atoms")
        if not np.all(probs > 0):
            raise ProblemValidationError("probabilities must be positive", field="probs")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ProblemValidationError("probabilities must sum to 1", field="probs")
        if np.any(np.diff(atoms) <= 0):
            raise ProblemValidationError("atoms must be strictly increasing", field="atoms")
        atoms.flags.writeable = False
        probs.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return self.atoms.size

    @property
    def n(self):
        return self.atoms.size

    def expect(self, values):
        """Probability-weighted sum of per-atom values."""
        return float(np.dot(self.probs, values))

    def mean(self):
        return self.expect(self.atoms)

    def moment(self, k):
        return self.expect(self.atoms ** k)

    def to_dict(self):
        if self.spec is not None:
            return dict(self.spec)
        return {"kind": "custom", "atoms": self.atoms.tolist(), "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or "kind" not in data:
            raise ProblemValidationError("shock must be an object with a 'kind'", field="shock")
        kind = data["kind"]
        try:
            if kind == "gaussian":
                return gauss_hermite(int(data.get("n", DEFAULT_GAUSS_ORDER)))
            if kind == "uniform":
                return uniform(float(data["lo"]), float(data["hi"]), int(data["n"]))
            if kind == "custom":
                return custom(data["atoms"], data["probs"])
        except KeyError as exc:
            raise ProblemValidationError(f"shock field {exc.args[0]!r} missing",
                                         field=f"shock.{exc.args[0]}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ProblemValidationError):
                raise
            raise ProblemValidationError(f"bad shock specification: {exc}", field="shock") from None
        raise ProblemValidationError(f"unknown shock kind {kind!r}", field="shock.kind")


def gauss_hermite(n=DEFAULT_GAUSS_ORDER):
    """``n``-point Gauss-Hermite rule rescaled to a standard normal."""
    if not (1 <= n <= MAX_GAUSS_ORDER):
        raise ProblemValidationError(
            f"Gauss-Hermite order must be in [1, {MAX_GAUSS_ORDER}], got {n}", field="shock.n"
        )
    x, w = np.polynomial.hermite.hermgauss(n)
    probs = w / np.sqrt(np.pi)
    probs = probs / probs.sum()
    return ShockGrid(np.sqrt(2.0) * x, probs, label=f"gauss_hermite({n})",
                     spec={"kind": "gaussian", "n": n})


def uniform(lo, hi, n):
    """Midpoint rule with ``n`` equal cells on ``[lo, hi]``."""
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise ProblemValidationError("uniform shock needs lo < hi", field="shock.lo")
    if n < 2:
        raise ProblemValidationError("uniform shock needs n >= 2", field="shock.n")
    width = (hi - lo) / n
    atoms = lo + width * (np.arange(n) + 0.5)
    return ShockGrid(atoms, np.full(n, 1.0 / n), label=f"uniform({lo:g},{hi:g},{n})",
                     spec={"kind": "uniform", "lo": lo, "hi": hi, "n": n})


def custom(atoms, probs):
    """Validated grid from raw atoms; sorts and merges duplicate atoms."""
    atoms = np.asarray(atoms, dtype=float).reshape(-1)
    probs = np.asarray(probs, dtype=float).reshape(-1)
    if atoms.size == 0:
        raise ProblemValidationError("shock grid is empty", field="shock.atoms")
    if atoms.shape != probs.shape:
        raise ProblemValidationError("atoms and probs differ in length", field="shock.probs")
    if not np.all(probs > 0):
        raise ProblemValidationError("probabilities must be positive", field="shock.probs")
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ProblemValidationError(f"probabilities sum to {total!r}, not 1", field="shock.probs")
    uniq, inverse = np.unique(atoms, return_inverse=True)
    merged = np.zeros(uniq.size)
    np.add.at(merged, inverse, probs)
    merged = merged / merged.sum()
    return ShockGrid(uniq, merged, label=f"custom({uniq.size})")
