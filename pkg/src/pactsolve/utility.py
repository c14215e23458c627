"""Increasing concave utilities with analytic derivatives.

Every function here accepts scalars or numpy arrays and is vectorised over
the argument.  Piecewise utilities take the closed branch on the right of
the knot (``x >= knot``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ProblemValidationError

# exp() argument clamp for CARA; beyond it the value is flagged as saturated
EXP_CLAMP = 700.0

_SQRT3 = math.sqrt(3.0)
_ARCTAN_KNOT = 1.0 / _SQRT3
_ARCTAN_C0 = 16.0 * math.pi / 6.0 + _SQRT3 - 18.0 / _SQRT3


class UtilityKind(str, enum.Enum):
    CARA = "cara"
    EXTENDED_LOG = "extended_log"
    PARTIAL_IARA = "partial_iara"
    EXTENDED_ARCTAN = "extended_arctan"
    RISK_NEUTRAL = "risk_neutral"


def _out(x, fill=0.0):
    x = np.asarray(x, dtype=float)
    return x, np.full(x.shape, fill)


def _scalar(arr):
    # 0-d arrays come back as numpy floats
    return arr[()] if arr.ndim == 0 else arr


# --- CARA: -exp(-g x) -------------------------------------------------------

def _cara_u(x, g):
    return -np.exp(np.clip(-g * np.asarray(x, dtype=float), -EXP_CLAMP, EXP_CLAMP))


def _cara_du(x, g):
    return g * np.exp(np.clip(-g * np.asarray(x, dtype=float), -EXP_CLAMP, EXP_CLAMP))


def _cara_d2u(x, g):
    return -g * g * np.exp(np.clip(-g * np.asarray(x, dtype=float), -EXP_CLAMP, EXP_CLAMP))


def _cara_inv(v, g):
    v, out = _out(v, np.inf)
    neg = v < 0
    out[neg] = -np.log(-v[neg]) / g
    return out


# --- extended log: log x on [1, inf), -(x^2 - 4x + 3)/2 below --------------

def _elog_u(x, g=None):
    x, out = _out(x)
    hi = x >= 1.0
    out[hi] = np.log(x[hi])
    lo = ~hi
    out[lo] = -0.5 * (x[lo] ** 2 - 4.0 * x[lo] + 3.0)
    return out


def _elog_du(x, g=None):
    x, out = _out(x)
    hi = x >= 1.0
    out[hi] = 1.0 / x[hi]
    out[~hi] = 2.0 - x[~hi]
    return out


def _elog_d2u(x, g=None):
    x, out = _out(x, -1.0)
    hi = x >= 1.0
    out[hi] = -1.0 / x[hi] ** 2
    return out


def _elog_inv(v, g=None):
    v, out = _out(v)
    hi = v >= 0.0
    with np.errstate(over="ignore"):  # unbounded above: +inf is the right answer
        out[hi] = np.exp(v[hi])
    out[~hi] = 2.0 - np.sqrt(1.0 - 2.0 * v[~hi])
    return out


# --- partial IARA: -exp(-x) on [0, inf), -(x^2/2 - x + 1) below ------------

def _piara_u(x, g=None):
    x, out = _out(x)
    hi = x >= 0.0
    out[hi] = -np.exp(-x[hi])
    lo = ~hi
    out[lo] = -(0.5 * x[lo] ** 2 - x[lo] + 1.0)
    return out


def _piara_du(x, g=None):
    x, out = _out(x)
    hi = x >= 0.0
    out[hi] = np.exp(-x[hi])
    out[~hi] = 1.0 - x[~hi]
    return out


def _piara_d2u(x, g=None):
    x, out = _out(x, -1.0)
    hi = x >= 0.0
    out[hi] = -np.exp(-x[hi])
    return out


def _piara_inv(v, g=None):
    v, out = _out(v, np.inf)
    mid = (v >= -1.0) & (v < 0.0)
    out[mid] = -np.log(-v[mid])
    lo = v < -1.0
    out[lo] = 1.0 - np.sqrt(-1.0 - 2.0 * v[lo])
    return out


# --- extended arctan: arctan on [1/sqrt3, inf), quadratic below -------------

def _atan_u(x, g=None):
    x, out = _out(x)
    hi = x >= _ARCTAN_KNOT
    out[hi] = np.arctan(x[hi])
    lo = ~hi
    out[lo] = (-3.0 * _SQRT3 * x[lo] ** 2 + 18.0 * x[lo] + _ARCTAN_C0) / 16.0
    return out


def _atan_du(x, g=None):
    x, out = _out(x)
    hi = x >= _ARCTAN_KNOT
    out[hi] = 1.0 / (1.0 + x[hi] ** 2)
    out[~hi] = (18.0 - 6.0 * _SQRT3 * x[~hi]) / 16.0
    return out


def _atan_d2u(x, g=None):
    x, out = _out(x, -6.0 * _SQRT3 / 16.0)
    hi = x >= _ARCTAN_KNOT
    out[hi] = -2.0 * x[hi] / (1.0 + x[hi] ** 2) ** 2
    return out


def _atan_inv(v, g=None):
    v, out = _out(v, np.inf)
    mid = (v >= math.pi / 6.0) & (v < math.pi / 2.0)
    out[mid] = np.tan(v[mid])
    lo = v < math.pi / 6.0
    disc = 324.0 - 12.0 * _SQRT3 * (16.0 * v[lo] - _ARCTAN_C0)
    out[lo] = (18.0 - np.sqrt(disc)) / (6.0 * _SQRT3)
    return out


# --- risk neutral -------------------------------------------------------------

def _rn_u(x, g=None):
    return np.array(x, dtype=float)


def _rn_du(x, g=None):
    return np.ones_like(np.asarray(x, dtype=float))


def _rn_d2u(x, g=None):
    return np.zeros_like(np.asarray(x, dtype=float))


_TABLE = {
    UtilityKind.CARA: (_cara_u, _cara_du, _cara_d2u, _cara_inv),
    UtilityKind.EXTENDED_LOG: (_elog_u, _elog_du, _elog_d2u, _elog_inv),
    UtilityKind.PARTIAL_IARA: (_piara_u, _piara_du, _piara_d2u, _piara_inv),
    UtilityKind.EXTENDED_ARCTAN: (_atan_u, _atan_du, _atan_d2u, _atan_inv),
    UtilityKind.RISK_NEUTRAL: (_rn_u, _rn_du, _rn_d2u, _rn_u),
}

KNOTS = {
    UtilityKind.EXTENDED_LOG: 1.0,
    UtilityKind.PARTIAL_IARA: 0.0,
    UtilityKind.EXTENDED_ARCTAN: _ARCTAN_KNOT,
}


@dataclass(frozen=True)
class UtilitySpec:
    """Tagged utility description.  ``gamma`` is only meaningful for CARA."""

    kind: UtilityKind
    gamma: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", UtilityKind(self.kind))
        if self.kind is UtilityKind.CARA:
            if self.gamma is None or not (self.gamma > 0 and math.isfinite(self.gamma)):
                raise ProblemValidationError("CARA requires gamma > 0", field="gamma")
            object.__setattr__(self, "gamma", float(self.gamma))
        elif self.gamma is not None:
            raise ProblemValidationError(
                f"gamma is only allowed for CARA, not {self.kind.value}", field="gamma"
            )

    @classmethod
    def cara(cls, gamma):
        return cls(UtilityKind.CARA, gamma)

    @classmethod
    def extended_log(cls):
        return cls(UtilityKind.EXTENDED_LOG)

    @classmethod
    def partial_iara(cls):
        return cls(UtilityKind.PARTIAL_IARA)

    @classmethod
    def extended_arctan(cls):
        return cls(UtilityKind.EXTENDED_ARCTAN)

    @classmethod
    def risk_neutral(cls):
        return cls(UtilityKind.RISK_NEUTRAL)

    @property
    def is_cara(self):
        return self.kind is UtilityKind.CARA

    def __call__(self, x):
        return self.value(x)

    def value(self, x):
        return _scalar(np.asarray(_TABLE[self.kind][0](x, self.gamma)))

    def deriv(self, x):
        return _scalar(np.asarray(_TABLE[self.kind][1](x, self.gamma)))

    def deriv2(self, x):
        return _scalar(np.asarray(_TABLE[self.kind][2](x, self.gamma)))

    def inverse(self, v):
        """Inverse utility; ``+inf`` where ``v`` is at or above the supremum."""
        return _scalar(np.asarray(_TABLE[self.kind][3](v, self.gamma)))

    def absolute_risk_aversion(self, x):
        return _scalar(-np.asarray(self.deriv2(x)) / np.asarray(self.deriv(x)))

    def saturated(self, x):
        """Mask of arguments where the CARA exponent was clamped."""
        x = np.asarray(x, dtype=float)
        if self.kind is not UtilityKind.CARA:
            return _scalar(np.zeros(x.shape, dtype=bool))
        return _scalar(np.abs(self.gamma * x) > EXP_CLAMP)

    @property
    def knot(self):
        return KNOTS.get(self.kind)

    @property
    def supremum(self):
        if self.kind is UtilityKind.CARA or self.kind is UtilityKind.PARTIAL_IARA:
            return 0.0
        if self.kind is UtilityKind.EXTENDED_ARCTAN:
            return math.pi / 2.0
        return math.inf

    def to_dict(self):
        d = {"kind": self.kind.value}
        if self.kind is UtilityKind.CARA:
            d["gamma"] = self.gamma
        return d

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or "kind" not in data:
            raise ProblemValidationError("utility must be an object with a 'kind'", field="kind")
        try:
            kind = UtilityKind(data["kind"])
        except ValueError:
            raise ProblemValidationError(
                f"unknown utility kind {data['kind']!r}", field="kind"
            ) from None
        extra = set(data) - {"kind", "gamma"}
        if extra:
            raise ProblemValidationError(f"unexpected utility fields {sorted(extra)}", field="kind")
        return cls(kind, data.get("gamma"))

    def __str__(self):
        if self.kind is UtilityKind.CARA:
            return f"cara(gamma={self.gamma:g})"
        return self.kind.value
