"""End-to-end checks of the affine Orlicz Polya-Szego inequalities.

Every check is a pure pipeline returning a report object with a ``to_dict``
method; nothing here mutates its inputs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from . import convex
from .convex import StarBody, chord_midpoints, steiner_symmetral_body, symmetral_containment
from .energy import affine_energy, orlicz_ball
from .errors import DomainError, InsufficientDataError
from .gridfn import GridFunction, gradient, level_set_summary, resample_affine
from .rearrange import (
    SteinerPlan,
    _rotation_to_last_axis,
    schwarz_symmetrize,
    steiner_rearrange,
    unit_ball_volume,
)

__all__ = [
    "VerificationReport",
    "EqualityVerdict",
    "AffineReport",
    "ContainmentReport",
    "critical_set_fraction",
    "verify_steiner_ps",
    "verify_schwarz_ps",
    "verify_affine_invariance",
    "verify_ball_containment",
    "detect_equality_case",
    "chord_midpoint_affine_test",
    "random_sl_map",
]

#: gradient magnitude counted as zero, relative to max |grad f|
CRITICAL_GRAD = 1e-8
#: admissible fraction of support cells that are critical
CRITICAL_FRACTION = 0.01

ASSUMED = (
    "assumed (box domain, smooth fixtures): connected projection, "
    "finite perimeter, boundary nowhere parallel to the symmetrization axis"
)


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class VerificationReport:
    kind: str
    energy_original: float
    energy_symmetrized: float
    margin: float
    tolerance_used: float
    inequality_pass: bool
    hypothesis_flags: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def to_dict(self):
        return _jsonable(asdict(self))

    def csv_row(self, header=True) -> str:
        cols = ["kind", "energy_original", "energy_symmetrized", "margin",
                "tolerance_used", "inequality_pass"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(cols + ["hypothesis_flags"])
        d = self.to_dict()
        flags = ";".join(f"{k}={int(v)}" for k, v in sorted(self.hypothesis_flags.items()))
        w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in cols] + [flags])
        return buf.getvalue()


def critical_set_fraction(f: GridFunction, direction=None) -> float:
    """Fraction of support cells where the gradient vanishes below the top.

    With *direction* the derivative along it is used and "below the top"
    means below the maximum of f along the grid line through the cell (only
    for coordinate directions).
    """
    G = gradient(f)
    vals = f.values
    if direction is None:
        mag = np.linalg.norm(G, axis=-1)
        below = vals < vals.max()
    else:
        plan = SteinerPlan.for_direction(direction)
        if plan.axis is None:
            raise DomainError("line-wise critical sets need a coordinate direction")
        mag = np.abs(G[..., plan.axis])
        below = vals < vals.max(axis=plan.axis, keepdims=True)
    support = vals > 0
    n = int(np.count_nonzero(support))
    if n == 0:
        return 0.0
    thresh = CRITICAL_GRAD * max(float(mag.max()), 1e-300)
    critical = support & below & (mag < thresh)
    return float(np.count_nonzero(critical) / n)


def _hypotheses(f, phi, direction=None):
    frac = critical_set_fraction(f)
    flags = {
        "critical_set_negligible": frac <= CRITICAL_FRACTION,
        "phi_strictly_convex": bool(phi.strictly_convex),
        "phi_even": bool(phi.is_even),
    }
    diags = [f"critical support fraction {frac:.3g}"]
    if direction is not None and SteinerPlan.for_direction(direction).axis is not None:
        lf = critical_set_fraction(f, direction)
        flags["line_critical_set_negligible"] = lf <= CRITICAL_FRACTION
        diags.append(f"line-wise critical fraction {lf:.3g}")
    diags.append(ASSUMED)
    return flags, diags


def _report(kind, e0, e1, tol, flags, diags):
    margin = (e0 - e1) / e0
    return VerificationReport(
        kind=kind,
        energy_original=e0,
        energy_symmetrized=e1,
        margin=margin,
        tolerance_used=tol,
        inequality_pass=bool(e1 <= e0 * (1.0 + tol)),
        hypothesis_flags=flags,
        diagnostics=diags,
    )


def verify_steiner_ps(f: GridFunction, phi, direction, tol=0.01, quadrature_size=None,
                      method="profile"):
    """Compare the affine energy of f with that of its Steiner rearrangement."""
    direction = np.asarray(direction, dtype=float)
    fs = steiner_rearrange(f, direction, method)
    e0 = affine_energy(f, phi, quadrature_size).energy
    e1 = affine_energy(fs, phi, quadrature_size).energy
    flags, diags = _hypotheses(f, phi, direction)
    diags.insert(0, f"direction {np.round(direction, 12).tolist()}")
    return _report("steiner", e0, e1, tol, flags, diags)


def verify_schwarz_ps(f: GridFunction, phi, tol=0.01, quadrature_size=None):
    """Compare the affine energy of f with that of its Schwarz symmetrand."""
    fstar = schwarz_symmetrize(f)
    e0 = affine_energy(f, phi, quadrature_size).energy
    e1 = affine_energy(fstar, phi, quadrature_size).energy
    flags, diags = _hypotheses(f, phi)
    return _report("schwarz", e0, e1, tol, flags, diags)


def _random_rotation(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_sl_map(rng, dim, max_condition=3.0):
    """``R1 diag(s, ..., 1/s) R2`` with condition number at most *max_condition*."""
    s = rng.uniform(1.0, np.sqrt(max_condition))
    sig = np.ones(dim)
    sig[0], sig[-1] = s, 1.0 / s
    return _random_rotation(rng, dim) @ np.diag(sig) @ _random_rotation(rng, dim)


@dataclass
class AffineReport:
    energy: float
    max_deviation: float
    deviations: list
    skipped: list
    maps: list

    def to_dict(self):
        return _jsonable(asdict(self))


def verify_affine_invariance(f: GridFunction, phi, trials=10, seed=0, quadrature_size=None,
                             maps=None, max_condition=3.0):
    """Relative energy change under volume-preserving affine reparametrizations.

    Each trial resamples ``x -> f(A x + x0)``. Random trials draw A with
    condition number at most *max_condition* and x0 within one cell of the
    origin; *maps* overrides them with explicit ``(A, x0)`` pairs. Trials
    whose image leaves the box are skipped and recorded.
    """
    e0 = affine_energy(f, phi, quadrature_size).energy
    if maps is None:
        rng = np.random.default_rng(seed)
        h = np.array(f.domain.spacing)
        maps = [
            (random_sl_map(rng, f.domain.dim, max_condition), rng.uniform(-h, h))
            for _ in range(trials)
        ]
    devs, skipped, used = [], [], []
    for k, (A, x0) in enumerate(maps):
        A, x0 = np.asarray(A, dtype=float), np.asarray(x0, dtype=float)
        try:
            g = resample_affine(f, A, x0)
        except DomainError as exc:
            skipped.append({"trial": k, "reason": str(exc)})
            continue
        e = affine_energy(g, phi, quadrature_size).energy
        devs.append(abs(e - e0) / e0)
        used.append({"A": A.tolist(), "x0": x0.tolist()})
    return AffineReport(e0, max(devs) if devs else float("nan"), devs, skipped, used)


@dataclass
class ContainmentReport:
    worst_gauge: float
    passed: bool
    tolerance: float
    boundary_worst: float
    chord_pair_worst: float
    volume_original: float
    volume_symmetrized: float
    volume_monotone: bool
    symmetral_volume_error: float

    def to_dict(self):
        return _jsonable(asdict(self))


def verify_ball_containment(f: GridFunction, phi, direction, samples=256, tol=0.02,
                            quadrature_size=None, method="profile"):
    """Sampled inclusion of the Steiner symmetral of B(f) in B(f^s).

    Both balls are rotated so that *direction* becomes the last axis. The
    symmetral's boundary samples and the chord-pair midpoints of B(f) are
    measured in the gauge of B(f^s).
    """
    direction = np.asarray(direction, dtype=float)
    fs = steiner_rearrange(f, direction, method)
    K = orlicz_ball(f, phi, quadrature_size)
    L = orlicz_ball(fs, phi, quadrature_size)
    R = _rotation_to_last_axis(direction)
    Kr, Lr = K.rotated(R), L.rotated(R)
    Ks = steiner_symmetral_body(Kr)
    boundary = float(np.max(convex.gauge(Lr, Ks.boundary_points())))
    pairs = symmetral_containment(Kr, Lr, samples, tol)
    worst = max(boundary, pairs.worst_gauge)
    v0, v1 = convex.volume(K), convex.volume(L)
    return ContainmentReport(
        worst_gauge=worst,
        passed=worst <= 1.0 + tol,
        tolerance=tol,
        boundary_worst=boundary,
        chord_pair_worst=pairs.worst_gauge,
        volume_original=v0,
        volume_symmetrized=v1,
        volume_monotone=v0 <= v1 * (1.0 + tol),
        symmetral_volume_error=abs(convex.volume(Ks) / convex.volume(Kr) - 1.0),
    )


@dataclass
class EqualityVerdict:
    is_equality_case: bool
    fitted_center: np.ndarray
    fitted_shape: np.ndarray
    per_level_fit_error: list
    energy_gap: float
    levels: list = field(default_factory=list)
    centroid_spread: float = float("nan")
    shape_spread: float = float("nan")
    checks: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def to_dict(self):
        return _jsonable(asdict(self))


FIT_ERROR = 0.05
CENTER_CELLS = 2.0
SHAPE_RTOL = 0.03


def _ellipse_fit_error(f, summary, coords):
    """Symmetric-difference volume of level set and equal-volume moment ellipsoid."""
    n = f.domain.dim
    cov = summary.second_moment
    d = coords - summary.centroid
    q = np.einsum("...i,ij,...j->...", d, np.linalg.inv(cov), d)
    s = (summary.volume / (unit_ball_volume(n) * np.sqrt(np.linalg.det(cov)))) ** (1.0 / n)
    ell = q <= s * s
    level = f.values > summary.level
    return np.count_nonzero(ell ^ level) * f.domain.cell_volume / summary.volume


def detect_equality_case(f: GridFunction, phi, levels=9, quadrature_size=None,
                         with_energy=True) -> EqualityVerdict:
    """Decide whether f is an affine image of its Schwarz symmetrand.

    Level sets between 5% and 95% of max f must all be close to their
    second-moment ellipsoids, share their centre, and have proportional
    shapes (unit-determinant shape matrices within 3% in Frobenius norm).
    """
    if not phi.strictly_convex:
        raise DomainError("equality cases are only characterized for strictly convex phi")
    n = f.domain.dim
    coords = f.domain.coords()
    diags = []
    summaries = []
    for t in np.linspace(0.05, 0.95, levels) * f.max:
        s = level_set_summary(f, t)
        if s.defined:
            summaries.append(s)
    if len(summaries) < 3:
        raise InsufficientDataError(f"only {len(summaries)} nonempty level sets")

    errors = [float(_ellipse_fit_error(f, s, coords)) for s in summaries]
    centers = np.array([s.centroid for s in summaries])
    shapes = np.array([s.second_moment / np.linalg.det(s.second_moment) ** (1.0 / n) for s in summaries])
    center = centers.mean(axis=0)
    cspread = float(max(np.linalg.norm(a - b) for a in centers for b in centers))
    sspread = float(max(
        np.linalg.norm(a - b) / np.linalg.norm(b) for a in shapes for b in shapes
    ))
    shape = shapes.mean(axis=0)
    shape /= np.linalg.det(shape) ** (1.0 / n)

    frac = critical_set_fraction(f)
    checks = {
        "level_sets_ellipsoidal": max(errors) <= FIT_ERROR,
        "common_center": cspread <= CENTER_CELLS * max(f.domain.spacing),
        "homothetic_shapes": sspread <= SHAPE_RTOL,
        "critical_set_negligible": frac <= CRITICAL_FRACTION,
    }
    if not checks["critical_set_negligible"]:
        diags.append(f"refusing to certify: critical support fraction {frac:.3g}")
    gap = float("nan")
    if with_energy:
        gap = verify_schwarz_ps(f, phi, quadrature_size=quadrature_size).margin
    return EqualityVerdict(
        is_equality_case=all(checks.values()),
        fitted_center=center,
        fitted_shape=shape,
        per_level_fit_error=errors,
        energy_gap=gap,
        levels=[s.level for s in summaries],
        centroid_spread=cspread,
        shape_spread=sspread,
        checks=checks,
        diagnostics=diags,
    )


def chord_midpoint_affine_test(K: StarBody, u, chords=64, tol=0.01):
    """Do midpoints of chords parallel to u lie on one hyperplane?

    Returns ``(passed, residual)``; the residual is the largest distance of
    a midpoint from the least-squares hyperplane, relative to diam K.
    """
    mids = chord_midpoints(K, u, chords)
    if len(mids) < K.dim + 1:
        raise InsufficientDataError(f"need at least {K.dim + 1} chords, got {len(mids)}")
    centered = mids - mids.mean(axis=0)
    normal = np.linalg.svd(centered, full_matrices=False)[2][-1]
    residual = float(np.max(np.abs(centered @ normal)) / convex.diameter(K))
    return residual <= tol, residual
