"""Convex profiles phi used in Orlicz norms.

Three closed families are supported:

``Power(p)``
    phi(t) = |t|**p, p > 1.
``Asymmetric(p, lam)``
    phi(t) = (1 - lam) * max(t, 0)**p + lam * max(-t, 0)**p.
``PiecewiseAffineSup(pieces)``
    phi(t) = max(0, max_j(a_j * t + b_j)).

All of them are evaluated elementwise on numpy arrays.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NoSolutionError

__all__ = [
    "OrliczFunction",
    "Power",
    "Asymmetric",
    "PiecewiseAffineSup",
    "eval_phi",
    "eval_Phi",
    "compute_c_phi",
    "parse_phi",
]

_BISECT_TOL = 1e-12
_BRACKET_LIMIT = 1e308


def _abs_pow(x, p):
    """|x| ** p with cheap paths for small integer exponents."""
    if p == 2:
        return x * x
    ax = np.abs(x)
    if p == 3:
        return ax * ax * ax
    if p == 4:
        sq = x * x
        return sq * sq
    return ax ** p


class OrliczFunction:
    """Base class of the supported phi families."""

    #: exponent for positively homogeneous families, ``None`` otherwise
    degree = None

    def __call__(self, t):
        return self._phi(np.asarray(t, dtype=float))

    def _phi(self, t):
        raise NotImplementedError

    @property
    def strictly_convex(self) -> bool:
        raise NotImplementedError

    @property
    def is_even(self) -> bool:
        raise NotImplementedError

    def Phi(self, t):
        """max(phi(t), phi(-t)) for t >= 0."""
        t = np.asarray(t, dtype=float)
        return np.maximum(self._phi(t), self._phi(-t))

    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Power(OrliczFunction):
    p: float

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p > 1):
            raise DomainError(f"power exponent must be > 1, got {self.p}")

    @property
    def degree(self):
        return self.p

    def _phi(self, t):
        return _abs_pow(t, self.p)

    @property
    def strictly_convex(self):
        return True

    @property
    def is_even(self):
        return True

    def spec(self):
        return f"power:p={self.p:g}"


@dataclass(frozen=True)
class Asymmetric(OrliczFunction):
    p: float
    lam: float

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p > 1):
            raise DomainError(f"exponent must be > 1, got {self.p}")
        if not 0.0 <= self.lam <= 1.0:
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam}")

    @property
    def degree(self):
        return self.p

    def _phi(self, t):
        pos = _abs_pow(np.maximum(t, 0.0), self.p)
        neg = _abs_pow(np.minimum(t, 0.0), self.p)
        return (1.0 - self.lam) * pos + self.lam * neg

    @property
    def strictly_convex(self):
        # lam in {0, 1} vanishes identically on a half-line
        return 0.0 < self.lam < 1.0

    @property
    def is_even(self):
        return self.lam == 0.5

    def spec(self):
        return f"asym:p={self.p:g},lambda={self.lam:g}"


@dataclass(frozen=True)
class PiecewiseAffineSup(OrliczFunction):
    """phi(t) = max(0, max_j a_j t + b_j); must satisfy phi(0) = 0."""

    pieces: tuple

    def __post_init__(self):
        pieces = tuple((float(a), float(b)) for a, b in self.pieces)
        if not pieces:
            raise DomainError("at least one affine piece is required")
        if not all(np.isfinite(a) and np.isfinite(b) for a, b in pieces):
            raise DomainError("affine pieces must be finite")
        if any(b > 0 for _, b in pieces):
            raise DomainError("phi(0) = 0 requires every intercept b_j <= 0")
        through_origin = [a for a, b in pieces if b == 0.0]
        if not any(a != 0.0 for a in through_origin):
            raise DomainError(
                "phi must be strictly monotone on a half-line next to 0: "
                "need a piece with b_j = 0 and a_j != 0"
            )
        object.__setattr__(self, "pieces", pieces)

    def _phi(self, t):
        out = np.zeros_like(t)
        for a, b in self.pieces:
            np.maximum(out, a * t + b, out=out)
        return out

    @property
    def strictly_convex(self):
        return False

    @property
    def is_even(self):
        return set(self.pieces) == {(-a, b) for a, b in self.pieces}

    def spec(self):
        body = ",".join(f"({a:g},{b:g})" for a, b in self.pieces)
        return f"pwl:[{body}]"


def _check_finite(t):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("phi argument must be finite")
    return t


def eval_phi(phi: OrliczFunction, t):
    """Evaluate phi(t); scalar in, scalar out."""
    t = _check_finite(t)
    out = phi(t)
    return float(out) if out.ndim == 0 else out


def eval_Phi(phi: OrliczFunction, t):
    """Evaluate Phi(t) = max(phi(t), phi(-t)) for t >= 0."""
    t = _check_finite(t)
    if np.any(t < 0):
        raise DomainError("Phi is only defined on [0, inf)")
    out = phi.Phi(t)
    return float(out) if out.ndim == 0 else out


def compute_c_phi(phi: OrliczFunction) -> float:
    """Largest c > 0 with Phi(c) <= 1.

    Closed form for the power families; bisection for piecewise-affine
    profiles, with the bracket grown by doubling.
    """
    if isinstance(phi, Power):
        return 1.0
    if isinstance(phi, Asymmetric):
        return max(1.0 - phi.lam, phi.lam) ** (-1.0 / phi.p)

    Phi = lambda c: float(phi.Phi(c))
    hi = 1.0
    while Phi(hi) <= 1.0:
        hi *= 2.0
        if hi > _BRACKET_LIMIT:
            raise NoSolutionError("Phi stays below 1 on [0, 1e308]")
    lo = 0.0
    # absolute tolerance, relaxed to float resolution for very wide brackets
    while hi - lo > _BISECT_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if Phi(mid) <= 1.0:
            lo = mid
        else:
            hi = mid
    return lo


_KV = re.compile(r"\s*([A-Za-z_]+)\s*=\s*([^,]+)\s*")


def _params(body):
    out = {}
    for item in body.split(","):
        if not item.strip():
            continue
        m = _KV.fullmatch(item)
        if m is None:
            raise DomainError(f"bad parameter {item!r}")
        out[m.group(1).lower()] = float(m.group(2))
    return out


def parse_phi(text: str) -> OrliczFunction:
    """Parse ``power:p=2``, ``asym:p=2,lambda=0.5`` or ``pwl:[(a,b),...]``."""
    kind, sep, body = text.strip().partition(":")
    if not sep:
        raise DomainError(f"phi spec needs a family prefix: {text!r}")
    kind = kind.lower()
    try:
        if kind == "power":
            return Power(_params(body)["p"])
        if kind in ("asym", "asymmetric"):
            kv = _params(body)
            return Asymmetric(kv["p"], kv.get("lambda", kv.get("lam")))
        if kind == "pwl":
            pieces = ast.literal_eval(body.strip())
            return PiecewiseAffineSup(tuple(tuple(pc) for pc in pieces))
    except (KeyError, TypeError, ValueError, SyntaxError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"cannot parse phi spec {text!r}: {exc}") from exc
    raise DomainError(f"unknown phi family {kind!r}")
