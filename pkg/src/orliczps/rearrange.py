"""Steiner and Schwarz rearrangements of grid functions."""

from __future__ import annotations

import ast
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from .errors import DomainError
from .gridfn import BoxDomain, GridFunction, boundary_mask, resample_affine

__all__ = [
    "SteinerPlan",
    "SteinerIteration",
    "steiner_line",
    "steiner_profile",
    "steiner_rearrange",
    "schwarz_symmetrize",
    "iterate_steiner",
    "layer_cake_distance",
    "relative_l1_distance",
    "unit_ball_volume",
    "one_cell_layer",
    "parse_directions",
    "random_directions",
]

log = logging.getLogger(__name__)

#: mass fraction that may be dropped when a symmetrand touches the box edge
SCHWARZ_EDGE_MASS = 1e-3


def unit_ball_volume(n: int) -> float:
    return float(np.pi ** (n / 2) / gamma(n / 2 + 1))


def one_cell_layer(volume, domain: BoxDomain):
    """Volume of one cell layer around a ball of the given volume."""
    n = domain.dim
    w = unit_ball_volume(n)
    area = n * w ** (1.0 / n) * np.asarray(volume, dtype=float) ** ((n - 1.0) / n)
    return area * max(domain.spacing)


def _rotation_to_last_axis(u):
    """Proper rotation R with R @ u = e_last."""
    n = u.size
    e = np.zeros(n)
    e[-1] = 1.0
    w = u - e
    if np.linalg.norm(w) < 1e-15:
        return np.eye(n)
    H = np.eye(n) - 2.0 * np.outer(w, w) / (w @ w)
    # a Householder reflection has det -1; flip one row orthogonal to e_last
    H[0] = -H[0]
    return H


@dataclass(frozen=True)
class SteinerPlan:
    direction: np.ndarray
    rotation: np.ndarray
    resample_tolerance: float = 0.01

    def __post_init__(self):
        u = np.asarray(self.direction, dtype=float)
        R = np.asarray(self.rotation, dtype=float)
        n = u.size
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise DomainError("Steiner direction must be a unit vector")
        if R.shape != (n, n) or np.abs(R.T @ R - np.eye(n)).max() > 1e-12:
            raise DomainError("plan rotation must be orthogonal")
        if np.abs(R @ u - np.eye(n)[-1]).max() > 1e-12:
            raise DomainError("plan rotation must map the direction to the last axis")
        object.__setattr__(self, "direction", u)
        object.__setattr__(self, "rotation", R)

    @classmethod
    def for_direction(cls, u, resample_tolerance=0.01):
        u = np.asarray(u, dtype=float)
        norm = np.linalg.norm(u)
        if abs(norm - 1.0) > 1e-12:
            raise DomainError("Steiner direction must be a unit vector")
        return cls(u, _rotation_to_last_axis(u), resample_tolerance)

    @property
    def axis(self):
        """Coordinate axis parallel to the direction, or ``None``."""
        k = int(np.argmax(np.abs(self.direction)))
        if abs(abs(self.direction[k]) - 1.0) <= 1e-12:
            return k
        return None


def _placement(n):
    """Target index of the k-th largest value: centre, then right, left, ..."""
    c = (n - 1) // 2
    k = np.arange(n)
    off = (k + 1) // 2
    return np.where(k % 2 == 1, c + off, c - off)


def _rearrange_axis(values, axis):
    n = values.shape[axis]
    moved = np.moveaxis(values, axis, -1)
    desc = np.sort(moved, axis=-1)[..., ::-1]
    out = np.empty_like(moved)
    out[..., _placement(n)] = desc
    return np.moveaxis(out, -1, axis)


def steiner_line(samples, spacing: float = 1.0):
    """Symmetric decreasing rearrangement of one sampled line.

    The largest sample goes to the central node, the following ones are
    placed alternately right and left of it. *spacing* does not change the
    arrangement; it is accepted for symmetry with the distribution function.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1:
        raise DomainError("steiner_line expects 1-D samples")
    if np.any(samples < 0):
        raise DomainError("samples must be nonnegative")
    return _rearrange_axis(samples, 0)


def _line_distribution(v, h):
    """Knots of the distribution function of the linear interpolant of v.

    Returns ``(t, mu_left, mu_right)`` at the sorted distinct sample values;
    mu is linear between knots and drops by ``mu_left - mu_right`` at a knot
    where the interpolant has a plateau.
    """
    a = np.minimum(v[:-1], v[1:])
    b = np.maximum(v[:-1], v[1:])
    d = b - a
    t = np.unique(v)
    flat = d == 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        frac = np.clip((b[None, :] - t[:, None]) / d[None, :], 0.0, 1.0)
    frac[:, flat] = (t[:, None] < a[None, flat])
    mu = h * frac.sum(axis=1)
    jump = h * np.count_nonzero(flat[None, :] & (a[None, :] == t[:, None]), axis=1)
    return t, mu + jump, mu


def _profile_line(v, h, radii):
    """``inf {t : mu(t) <= 2 r}`` for each half-width r in *radii*."""
    if v.max() <= 0.0:
        return np.zeros_like(radii)
    t, mu_l, mu_r = _line_distribution(v, h)
    # polyline through (t_k, mu_left_k), (t_k, mu_right_k): t ascending, mu nonincreasing
    T = np.repeat(t, 2)
    M = np.column_stack([mu_l, mu_r]).ravel()
    m = 2.0 * radii
    k = np.searchsorted(-M, -m, side="left")
    k = np.clip(k, 1, len(M) - 1)
    m0, m1 = M[k - 1], M[k]
    t0, t1 = T[k - 1], T[k]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(m0 > m1, (m0 - m) / (m0 - m1), 1.0)
    out = t0 + np.clip(w, 0.0, 1.0) * (t1 - t0)
    out[m >= M[0]] = T[0]
    return out


def _profile_axis(values, axis, h):
    n = values.shape[axis]
    moved = np.moveaxis(values, axis, -1)
    flat = moved.reshape(-1, n)
    out = np.zeros_like(flat)
    radii = np.abs(np.arange(n) - (n - 1) / 2.0) * h
    # lines that are already symmetric decreasing are their own rearrangement
    right = flat[:, n // 2:]
    done = (
        np.all(flat == flat[:, ::-1], axis=1)
        & np.all(np.diff(right, axis=1) <= 0, axis=1)
        & (flat[:, 0] == 0)
    )
    out[done] = flat[done]
    for i in np.nonzero((flat.max(axis=1) > 0) & ~done)[0]:
        out[i] = _profile_line(flat[i], h, radii)
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return np.moveaxis(out.reshape(moved.shape), -1, axis)


def steiner_profile(samples, spacing: float = 1.0):
    """Symmetric decreasing rearrangement of the linear interpolant of a line.

    The output at distance r from the line centre is the infimum of the levels
    t whose superlevel set of the interpolant has length at most 2r. Unlike
    :func:`steiner_line` it does not depend on where the profile sits relative
    to the nodes, so neighbouring lines stay consistent. The end nodes are
    reset to zero.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1:
        raise DomainError("steiner_profile expects 1-D samples")
    if np.any(samples < 0):
        raise DomainError("samples must be nonnegative")
    return _profile_axis(samples, 0, float(spacing))


def layer_cake_distance(f: GridFunction, g: GridFunction) -> float:
    """Integral over t of |mu_f(t) - mu_g(t)|, relative to the mass of f.

    Zero exactly when f and g are equimeasurable on the grid.
    """
    if f.domain.counts != g.domain.counts:
        raise DomainError("functions live on different grids")
    a = np.sort(f.values, axis=None)
    b = np.sort(g.values, axis=None)
    return float(np.abs(a - b).sum() / max(a.sum(), 1e-300))


def relative_l1_distance(f: GridFunction, g: GridFunction) -> float:
    return float(np.abs(f.values - g.values).sum() / max(f.values.sum(), 1e-300))


STEINER_METHODS = ("profile", "sort")


def _rearrange(values, axis, h, method):
    if method == "profile":
        return _profile_axis(values, axis, h)
    if method == "sort":
        return _rearrange_axis(values, axis)
    raise DomainError(f"unknown Steiner method {method!r}; use one of {STEINER_METHODS}")


def steiner_rearrange(f: GridFunction, plan, method: str = "profile", order: int = 3) -> GridFunction:
    """Steiner rearrangement about the hyperplane through the box centre.

    *plan* is a :class:`SteinerPlan` or a unit vector. Coordinate directions
    are handled line by line; any other direction goes through a rotation
    about the box centre, the rearrangement along the last axis and the
    inverse rotation.

    ``method="profile"`` rearranges the linear interpolant of each line
    (:func:`steiner_profile`); ``method="sort"`` permutes the node values
    (:func:`steiner_line`) and is exactly equimeasurable, but its energy
    carries an error that does not shrink under refinement when the line
    centres drift across the grid. *order* is the interpolation order of the
    two rotations in the oblique case.
    """
    if not isinstance(plan, SteinerPlan):
        plan = SteinerPlan.for_direction(plan)
    dom = f.domain
    if plan.direction.size != dom.dim:
        raise DomainError("direction dimension does not match the grid")
    if plan.axis is not None:
        return GridFunction(dom, _rearrange(f.values, plan.axis, dom.spacing[plan.axis], method))

    spacing = np.array(dom.spacing)
    if not np.allclose(spacing, spacing[0], rtol=1e-12, atol=0):
        raise DomainError("oblique directions need equal spacing on all axes")
    R = plan.rotation
    c = dom.center
    g = resample_affine(f, R.T, c - R.T @ c, order=order)
    gs = GridFunction(dom, _rearrange(g.values, dom.dim - 1, spacing[0], method))
    out = resample_affine(gs, R, c - R @ c, order=order)
    err = layer_cake_distance(f, out)
    if err > plan.resample_tolerance:
        log.warning(
            "oblique Steiner step along %s lost %.3g in layer-cake distance (tolerance %.3g)",
            plan.direction, err, plan.resample_tolerance,
        )
    return out


def schwarz_symmetrize(f: GridFunction) -> GridFunction:
    """Radially decreasing rearrangement centred at the box centre.

    Built from the table of sorted values against cumulative cell volume,
    read off at the volume of the ball through each node.
    """
    dom = f.domain
    cv = dom.cell_volume
    desc = np.sort(f.values, axis=None)[::-1]
    cum = (np.arange(desc.size) + 0.5) * cv
    r = np.linalg.norm(dom.coords() - dom.center, axis=-1)
    ball = unit_ball_volume(dom.dim) * r ** dom.dim
    out = np.interp(ball, cum, desc, right=0.0)
    edge = boundary_mask(out.shape)
    lost = out[edge].sum()
    if lost > SCHWARZ_EDGE_MASS * max(desc.sum(), 1e-300):
        raise DomainError("Schwarz symmetrand does not fit inside the box")
    out[edge] = 0.0
    return GridFunction(dom, out)


@dataclass
class SteinerIteration:
    function: GridFunction
    trace: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    masses: list = field(default_factory=list)


def iterate_steiner(f: GridFunction, directions, stop_tol=0.02, max_iters=200,
                    target: GridFunction | None = None, method: str = "profile") -> SteinerIteration:
    """Successive Steiner rearrangements cycling through *directions*.

    ``trace[k]`` is the relative L1 distance to the Schwarz symmetrand after
    ``k`` steps (``trace[0]`` is the starting distance). At least one step is
    always taken. Running out of iterations is reported through
    ``converged=False``.
    """
    directions = [np.asarray(u, dtype=float) for u in directions]
    if not directions:
        raise DomainError("at least one direction is required")
    plans = [SteinerPlan.for_direction(u) for u in directions]
    if target is None:
        target = schwarz_symmetrize(f)
    mass0 = max(f.values.sum(), 1e-300)
    dist = lambda g: float(np.abs(g.values - target.values).sum() / mass0)

    current = f
    run = SteinerIteration(current, [dist(f)], masses=[f.integral()])
    for k in range(max_iters):
        current = steiner_rearrange(current, plans[k % len(plans)], method)
        run.trace.append(dist(current))
        run.masses.append(current.integral())
        run.iterations = k + 1
        if run.trace[-1] < stop_tol:
            run.converged = True
            break
    run.function = current
    return run


def random_directions(seed: int, count: int, dim: int):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def parse_directions(text: str, dim: int):
    """``axes``, ``axis:<k>``, ``random:<seed>:<count>`` or a literal list."""
    text = text.strip()
    if text == "axes":
        return list(np.eye(dim))
    if text.startswith("axis:"):
        k = int(text.split(":", 1)[1])
        if not 0 <= k < dim:
            raise DomainError(f"axis {k} out of range for dim {dim}")
        return [np.eye(dim)[k]]
    if text.startswith("random:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise DomainError("random directions are written random:<seed>:<count>")
        return list(random_directions(int(parts[1]), int(parts[2]), dim))
    try:
        vecs = ast.literal_eval(text)
    except (ValueError, SyntaxError) as exc:
        raise DomainError(f"cannot parse directions {text!r}") from exc
    if vecs and not isinstance(vecs[0], (list, tuple)):
        vecs = [vecs]
    out = []
    for v in vecs:
        v = np.asarray(v, dtype=float)
        if v.shape != (dim,) or abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise DomainError(f"direction {v.tolist()} is not a unit {dim}-vector")
        out.append(v / np.linalg.norm(v))
    return out
