"""Directional Luxemburg norms, the Orlicz-Sobolev ball and affine energy.

For a grid function f the norm of a vector z is the unique lam > 0 with

    (1/|Omega|) * sum_cells phi(z . grad f / lam) * cell_volume = 1,

the ball is its unit ball and the affine energy is ``|ball| ** (-1/n)``.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .convex import StarBody, format_body, sphere_quadrature, volume
from .errors import DegenerateDirectionError, DomainError
from .gridfn import GridFunction, gradient
from .orlicz import OrliczFunction, compute_c_phi

__all__ = [
    "EnergyResult",
    "GradientSample",
    "membership_integral",
    "luxemburg_norm",
    "luxemburg_norms",
    "orlicz_ball",
    "affine_energy",
    "norm_bounds",
    "NormAudit",
    "audit_norms",
]

RTOL = 1e-10
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class GradientSample:
    """Nonzero gradient vectors of f with the cell and box measures."""

    grads: np.ndarray
    cell_volume: float
    box_volume: float
    lower: float
    upper: float

    @classmethod
    def of(cls, f: GridFunction, phi: OrliczFunction):
        G = gradient(f).reshape(-1, f.domain.dim)
        G = G[np.any(G != 0, axis=1)]
        lower, upper = norm_bounds(f, phi, _grads=G)
        return cls(G, f.domain.cell_volume, f.domain.volume, lower, upper)

    def mean_phi(self, phi, W):
        """Mean of ``phi(W)`` over the box, row by row (W is k x cells)."""
        return phi(W).sum(axis=-1) * (self.cell_volume / self.box_volume)


@dataclass
class NormAudit:
    """Every norm computed while active, with its a priori bracket."""

    checked: int = 0
    violations: list = field(default_factory=list)

    def record(self, norms, lower, upper):
        bad = (norms < lower) | (norms > upper)
        self.checked += norms.size
        for i in np.nonzero(bad)[0]:
            self.violations.append((float(lower[i]), float(norms[i]), float(upper[i])))

    @property
    def ok(self):
        return not self.violations


_AUDITS: list = []


@contextmanager
def audit_norms():
    """Collect every directional norm evaluated inside the block."""
    audit = NormAudit()
    _AUDITS.append(audit)
    try:
        yield audit
    finally:
        _AUDITS.remove(audit)


def norm_bounds(f: GridFunction, phi: OrliczFunction, _grads=None):
    """A priori bracket for the norm of any unit vector.

    ``lower = int f / (c_phi |Omega| diam Omega)`` and
    ``upper = max |grad f| / c_phi`` with the box as Omega.
    """
    c = compute_c_phi(phi)
    dom = f.domain
    G = gradient(f).reshape(-1, dom.dim) if _grads is None else _grads
    lower = f.integral() / (c * dom.volume * dom.diameter)
    upper = float(np.linalg.norm(G, axis=1).max(initial=0.0)) / c
    return lower, upper


def membership_integral(f: GridFunction, phi: OrliczFunction, z, lam: float) -> float:
    """``(1/|Omega|) * integral of phi(z . grad f / lam)``."""
    dom = f.domain
    W = gradient(f).reshape(-1, dom.dim) @ np.asarray(z, dtype=float)
    return float(phi(W / lam).sum() * dom.cell_volume / dom.volume)


def _chunks(n_dirs, n_cells):
    step = max(1, _CHUNK_ELEMENTS // max(n_cells, 1))
    for start in range(0, n_dirs, step):
        yield slice(start, min(start + step, n_dirs))


def _bisect_rows(sample, phi, W, lo, hi, rtol):
    """Solve mean_phi(W / lam) = 1 row by row by bisection.

    The bracket is grown geometrically until it straddles the root.
    """
    F = lambda lam, rows: sample.mean_phi(phi, W[rows] / lam[:, None])
    rows = np.arange(len(W))
    for _ in range(200):
        bad = F(lo, rows) < 1.0
        if not bad.any():
            break
        lo = np.where(bad, 0.5 * lo, lo)
    for _ in range(200):
        bad = F(hi, rows) > 1.0
        if not bad.any():
            break
        hi = np.where(bad, 2.0 * hi, hi)
    while True:
        active = np.nonzero(hi - lo > rtol * hi)[0]
        if active.size == 0:
            break
        mid = 0.5 * (lo[active] + hi[active])
        above = F(mid, active) > 1.0
        lo[active] = np.where(above, mid, lo[active])
        hi[active] = np.where(above, hi[active], mid)
    return hi


def luxemburg_norms(sample: GradientSample, phi: OrliczFunction, Z, *, rtol=RTOL, method="auto"):
    """Norms of the rows of Z (k x n).

    ``method="auto"`` uses the exact root ``mean_phi(W) ** (1/p)`` for the
    positively homogeneous families and bisection otherwise;
    ``method="bisect"`` forces bisection.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    scale = np.linalg.norm(Z, axis=1)
    if np.any(scale == 0):
        raise DomainError("the norm is evaluated at nonzero vectors only")
    out = np.empty(len(Z))
    G = sample.grads
    for sl in _chunks(len(Z), len(G)):
        W = Z[sl] @ G.T
        base = sample.mean_phi(phi, W)
        dead = base <= 0.0
        if dead.any():
            i = sl.start + int(np.argmax(dead))
            raise DegenerateDirectionError(
                f"phi(z . grad f) vanishes identically for z = {Z[i].tolist()}", Z[i]
            )
        if method == "auto" and phi.degree is not None:
            out[sl] = base ** (1.0 / phi.degree)
        elif method in ("auto", "bisect"):
            lo = sample.lower * scale[sl]
            hi = sample.upper * scale[sl]
            out[sl] = _bisect_rows(sample, phi, W, lo.copy(), hi.copy(), rtol)
        else:
            raise DomainError(f"unknown method {method!r}")
    for audit in _AUDITS:
        audit.record(out, sample.lower * scale, sample.upper * scale)
    return out


def luxemburg_norm(f: GridFunction, phi: OrliczFunction, v, *, rtol=RTOL, method="auto") -> float:
    """Norm of the vector v in the Banach space attached to f."""
    v = np.asarray(v, dtype=float)
    if v.shape != (f.domain.dim,):
        raise DomainError("vector dimension does not match the grid")
    sample = GradientSample.of(f, phi)
    if sample.grads.size == 0:
        raise DegenerateDirectionError("f is constant: every directional derivative vanishes", v)
    return float(luxemburg_norms(sample, phi, v[None], rtol=rtol, method=method)[0])


def orlicz_ball(f: GridFunction, phi: OrliczFunction, quadrature_size=None, *,
                method="auto", sample=None) -> StarBody:
    """Unit ball of the norm, radial function ``1 / ||u||`` on the quadrature."""
    dirs, weights, grid = sphere_quadrature(f.domain.dim, quadrature_size)
    sample = GradientSample.of(f, phi) if sample is None else sample
    if sample.grads.size == 0:
        raise DegenerateDirectionError("f is constant: every directional derivative vanishes")
    norms = luxemburg_norms(sample, phi, dirs, method=method)
    return StarBody(f.domain.dim, grid, dirs, weights, 1.0 / norms)


@dataclass(frozen=True)
class EnergyResult:
    ball: StarBody
    ball_volume: float
    energy: float
    norm_bounds: tuple
    quadrature_size: int

    @property
    def norms(self):
        return 1.0 / self.ball.radii

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "ball_volume": self.ball_volume,
            "bounds": list(self.norm_bounds),
            "quadrature": self.quadrature_size,
        }

    def body_dump(self) -> str:
        return format_body(self.ball)


def affine_energy(f: GridFunction, phi: OrliczFunction, quadrature_size=None, *,
                  method="auto") -> EnergyResult:
    sample = GradientSample.of(f, phi)
    ball = orlicz_ball(f, phi, quadrature_size, method=method, sample=sample)
    vol = volume(ball)
    return EnergyResult(
        ball=ball,
        ball_volume=vol,
        energy=vol ** (-1.0 / f.domain.dim),
        norm_bounds=(sample.lower, sample.upper),
        quadrature_size=ball.size,
    )
