"""Star bodies stored by their radial function on a fixed direction set.

2-D bodies use ``m`` uniform angles. 3-D bodies use a colatitude/longitude
product grid; each weight is the exact area of its latitude band cell, so
the weights sum to 4*pi.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull

from .errors import DomainError, GridFormatError, UnboundedPolarError
from .rearrange import _rotation_to_last_axis

__all__ = [
    "StarBody",
    "sphere_quadrature",
    "gauge",
    "support",
    "polar",
    "volume",
    "hausdorff",
    "chords",
    "steiner_symmetral_body",
    "symmetral_containment",
    "ContainmentResult",
    "format_body",
    "parse_body",
]

DEFAULT_SIZE = {2: 720, 3: 64}

_GOLDEN_ITERS = 90
_BISECT_ITERS = 60


def _grid_of(dim, size):
    if dim == 2:
        return (int(size),)
    if dim == 3:
        if np.ndim(size) == 0:
            return (int(size), 2 * int(size))
        return tuple(int(s) for s in size)
    raise DomainError(f"only 2-D and 3-D bodies are supported, got dim={dim}")


def sphere_quadrature(dim: int, size=None):
    """Directions, weights and grid shape of the default quadrature.

    *size* is the number of angles in 2-D, and either the number of
    colatitude bands (longitudes = 2 * bands) or a ``(bands, longitudes)``
    pair in 3-D.
    """
    grid = _grid_of(dim, DEFAULT_SIZE[dim] if size is None else size)
    if dim == 2:
        (m,) = grid
        theta = 2.0 * np.pi * np.arange(m) / m
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        if m % 2 == 0:
            # bitwise antipodal pairs, so even profiles give even radial functions
            dirs[m // 2:] = -dirs[: m // 2]
        weights = np.full(m, 2.0 * np.pi / m)
        return dirs, weights, grid
    nt, nf = grid
    edges = np.pi * np.arange(nt + 1) / nt
    theta = 0.5 * (edges[:-1] + edges[1:])
    lon = 2.0 * np.pi * np.arange(nf) / nf
    band = (np.cos(edges[:-1]) - np.cos(edges[1:])) * (2.0 * np.pi / nf)
    T, F = np.meshgrid(theta, lon, indexing="ij")
    dirs = np.stack([np.sin(T) * np.cos(F), np.sin(T) * np.sin(F), np.cos(T)], axis=-1)
    if nf % 2 == 0:
        antipodes = -np.roll(dirs[::-1], nf // 2, axis=1)
        j, k = np.meshgrid(np.arange(nt), np.arange(nf), indexing="ij")
        keep = (2 * j < nt - 1) | ((2 * j == nt - 1) & (k < nf // 2))
        dirs = np.where(keep[..., None], dirs, antipodes)
    dirs = dirs.reshape(-1, 3)
    weights = np.repeat(band, nf)
    return dirs, weights, grid


@dataclass(frozen=True, eq=False)
class StarBody:
    dim: int
    grid: tuple
    directions: np.ndarray
    weights: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.shape != (self.directions.shape[0],):
            raise DomainError("one radius per quadrature direction is required")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise DomainError("radii must be positive and finite")
        r.flags.writeable = False
        object.__setattr__(self, "radii", r)

    # -- construction ----------------------------------------------------
    @classmethod
    def from_radii(cls, dim, radii, size=None):
        dirs, w, grid = sphere_quadrature(dim, size if size is not None else _size_from(dim, radii))
        return cls(dim, grid, dirs, w, np.asarray(radii, dtype=float))

    @classmethod
    def from_radial_function(cls, dim, fn, size=None):
        dirs, w, grid = sphere_quadrature(dim, size)
        return cls(dim, grid, dirs, w, np.asarray(fn(dirs), dtype=float))

    @classmethod
    def ball(cls, dim=2, radius=1.0, size=None):
        return cls.from_radial_function(dim, lambda d: np.full(len(d), float(radius)), size)

    @classmethod
    def ellipsoid(cls, matrix, size=None):
        """Body ``{x : x^T M x <= 1}`` for a symmetric positive definite M."""
        M = np.asarray(matrix, dtype=float)
        if np.any(np.linalg.eigvalsh(M) <= 0):
            raise DomainError("ellipsoid matrix must be positive definite")
        return cls.from_radial_function(
            M.shape[0], lambda d: 1.0 / np.sqrt(np.einsum("ij,jk,ik->i", d, M, d)), size
        )

    @classmethod
    def from_points(cls, points, size=None):
        """Radial function of the convex hull of *points* (origin interior)."""
        pts = np.asarray(points, dtype=float)
        hull = ConvexHull(pts)
        normals, offsets = hull.equations[:, :-1], -hull.equations[:, -1]
        if np.any(offsets <= 0):
            raise DomainError("origin must lie in the interior of the hull")
        dim = pts.shape[1]

        def rho(d):
            proj = d @ normals.T
            with np.errstate(divide="ignore"):
                t = np.where(proj > 0, offsets / proj, np.inf)
            return t.min(axis=1)

        return cls.from_radial_function(dim, rho, size)

    def with_radii(self, radii):
        return StarBody(self.dim, self.grid, self.directions, self.weights, radii)

    def scaled(self, s):
        if s <= 0:
            raise DomainError("scale factor must be positive")
        return self.with_radii(self.radii * s)

    def rotated(self, R):
        """Image ``R K``: radial function ``v -> rho(R^T v)``."""
        R = np.asarray(R, dtype=float)
        return self.with_radii(self.radial(self.directions @ R))

    @property
    def size(self) -> int:
        return int(self.radii.size)

    def boundary_points(self):
        return self.radii[:, None] * self.directions

    # -- interpolation ---------------------------------------------------
    def radial(self, u):
        """Interpolated radial function at unit vectors *u* (shape (..., n))."""
        u = np.asarray(u, dtype=float)
        if self.dim == 2:
            # ray / polygon intersection through the stored boundary samples
            (m,) = self.grid
            theta = np.mod(np.arctan2(u[..., 1], u[..., 0]), 2.0 * np.pi)
            i0 = np.floor(theta * (m / (2.0 * np.pi))).astype(int) % m
            i1 = (i0 + 1) % m
            p = self.boundary_points()
            a, b = p[i0], p[i1]
            d = b - a
            num = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
            den = u[..., 0] * d[..., 1] - u[..., 1] * d[..., 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                return num / den
        nt, nf = self.grid
        table = self.radii.reshape(nt, nf)
        # pole rows make the colatitude interpolation total
        ext = np.vstack([np.full(nf, table[0].mean()), table, np.full(nf, table[-1].mean())])
        edges = np.pi * np.arange(nt + 1) / nt
        nodes = np.concatenate([[0.0], 0.5 * (edges[:-1] + edges[1:]), [np.pi]])
        z = np.clip(u[..., 2] / np.linalg.norm(u, axis=-1), -1.0, 1.0)
        th = np.arccos(z)
        j = np.clip(np.searchsorted(nodes, th, side="right") - 1, 0, nt)
        wt = (th - nodes[j]) / (nodes[j + 1] - nodes[j])
        fl = np.mod(np.arctan2(u[..., 1], u[..., 0]), 2.0 * np.pi) * (nf / (2.0 * np.pi))
        k0 = np.floor(fl).astype(int) % nf
        wf = fl - np.floor(fl)
        k1 = (k0 + 1) % nf
        lo = (1.0 - wf) * ext[j, k0] + wf * ext[j, k1]
        hi = (1.0 - wf) * ext[j + 1, k0] + wf * ext[j + 1, k1]
        return (1.0 - wt) * lo + wt * hi


def _size_from(dim, radii):
    n = np.size(radii)
    if dim == 2:
        return n
    nt = int(round(np.sqrt(n / 2)))
    if 2 * nt * nt != n:
        raise DomainError("3-D radii need an explicit (bands, longitudes) size")
    return nt


def gauge(K: StarBody, x):
    """Minkowski functional ``|x| / rho(x/|x|)``; 0 at the origin."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    u = x / safe[..., None]
    out = r / K.radial(u)
    return np.where(r > 0, out, 0.0) if out.ndim else (float(out) if r > 0 else 0.0)


def support(K: StarBody, u):
    """max over the stored boundary points of ``u . x``.

    Exact for the polytope spanned by the boundary samples, so for convex
    bodies it is a lower estimate that converges with the quadrature.
    """
    u = np.asarray(u, dtype=float)
    vals = u @ K.boundary_points().T
    out = vals.max(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def polar(K: StarBody) -> StarBody:
    h = support(K, K.directions)
    with np.errstate(divide="ignore", over="ignore"):
        r = 1.0 / h
    if np.any(h <= 0) or not np.all(np.isfinite(r)):
        raise UnboundedPolarError("support function vanishes: polar body is unbounded")
    return K.with_radii(r)


def volume(K: StarBody) -> float:
    return float(np.sum(K.weights * K.radii ** K.dim) / K.dim)


def diameter(K: StarBody) -> float:
    h = support(K, K.directions)
    hm = support(K, -K.directions)
    return float(np.max(h + hm))


def hausdorff(K: StarBody, L: StarBody) -> float:
    if K.grid != L.grid or K.dim != L.dim:
        raise DomainError("bodies use different quadrature sets")
    return float(np.max(np.abs(support(K, K.directions) - support(L, L.directions))))


def chords(K: StarBody, xprime):
    """Chord ``{y : (x', y) in K}`` along the last axis for each row of x'.

    Returns ``(lo, hi, valid)``; invalid rows lie outside the projection.
    Uses convexity: the gauge restricted to the line is convex in y.
    """
    xp = np.atleast_2d(np.asarray(xprime, dtype=float))
    if xp.shape[1] != K.dim - 1:
        raise DomainError("x' must have dim - 1 coordinates")
    span = 2.0 * float(K.radii.max())
    g = lambda y: gauge(K, np.concatenate([xp, y[:, None]], axis=1))

    # golden-section search for the innermost point of each line
    a = np.full(len(xp), -span)
    b = np.full(len(xp), span)
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - ratio * (b - a)
    d = a + ratio * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(_GOLDEN_ITERS):
        left = gc < gd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - ratio * (b - a)
        new_d = a + ratio * (b - a)
        c, d = new_c, new_d
        gc, gd = g(c), g(d)
    ymid = 0.5 * (a + b)
    valid = g(ymid) < 1.0

    def bisect(inside, outside):
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (inside + outside)
            ok = g(mid) <= 1.0
            inside = np.where(ok, mid, inside)
            outside = np.where(ok, outside, mid)
        return 0.5 * (inside + outside)

    hi = bisect(ymid.copy(), np.full(len(xp), span))
    lo = bisect(ymid.copy(), np.full(len(xp), -span))
    hi = np.where(valid, hi, 0.0)
    lo = np.where(valid, lo, 0.0)
    return lo, hi, valid


class _ChordTable:
    """Chord lengths of K over a refined grid of x' in its projection."""

    def __init__(self, K: StarBody, refine: int):
        self.dim = K.dim
        if K.dim == 2:
            a = support(K, np.array([-1.0, 0.0]))
            b = support(K, np.array([1.0, 0.0]))
            n = refine * K.size
            self.x = -a + (a + b) * np.arange(n + 1) / n
            lo, hi, valid = chords(K, self.x[1:-1, None])
            self.length = np.concatenate([[0.0], np.where(valid, hi - lo, 0.0), [0.0]])
        else:
            nt, nf = K.grid
            n_ang, n_rad = refine * nf // 2, refine * nt // 2
            self.ang = 2.0 * np.pi * np.arange(n_ang) / n_ang
            w = np.stack([np.cos(self.ang), np.sin(self.ang)], axis=1)
            self.ext = support(K, np.concatenate([w, np.zeros((n_ang, 1))], axis=1))
            self.frac = np.arange(n_rad + 1) / n_rad
            xp = (self.frac[:-1, None, None] * self.ext[None, :, None] * w[None]).reshape(-1, 2)
            lo, hi, valid = chords(K, xp)
            table = np.where(valid, hi - lo, 0.0).reshape(n_rad, n_ang)
            self.length = np.vstack([table, np.zeros((1, n_ang))])

    def __call__(self, xp):
        if self.dim == 2:
            return np.interp(xp[:, 0], self.x, self.length, left=0.0, right=0.0)
        n_ang = self.ang.size
        t = np.mod(np.arctan2(xp[:, 1], xp[:, 0]), 2.0 * np.pi) * (n_ang / (2.0 * np.pi))
        k0 = np.floor(t).astype(int) % n_ang
        k1 = (k0 + 1) % n_ang
        wt = t - np.floor(t)
        ext = (1.0 - wt) * self.ext[k0] + wt * self.ext[k1]
        s = np.linalg.norm(xp, axis=1) / ext
        n_rad = self.frac.size - 1
        q = np.clip(s, 0.0, 1.0) * n_rad
        j0 = np.minimum(np.floor(q).astype(int), n_rad - 1)
        ws = q - j0
        L0 = (1.0 - wt) * self.length[j0, k0] + wt * self.length[j0, k1]
        L1 = (1.0 - wt) * self.length[j0 + 1, k0] + wt * self.length[j0 + 1, k1]
        return np.where(s < 1.0, (1.0 - ws) * L0 + ws * L1, 0.0)


def steiner_symmetral_body(K: StarBody, refine: int = 4) -> StarBody:
    """Steiner symmetral of a convex body about the hyperplane ``x_n = 0``.

    Chord lengths L(x') of K are tabulated at *refine* times the quadrature
    resolution. Along each quadrature ray the new radius is the largest r
    with ``r |v_n| <= L(r v') / 2``. Rotate the body first to symmetrize
    along another direction.
    """
    table = _ChordTable(K, refine)
    dirs = K.directions
    vp, vy = dirs[:, :-1], np.abs(dirs[:, -1])
    inside = np.zeros(len(dirs))
    outside = np.full(len(dirs), 2.0 * float(K.radii.max()))
    for _ in range(_BISECT_ITERS):
        r = 0.5 * (inside + outside)
        L = table(r[:, None] * vp)
        ok = (L > 0) & (r * vy <= 0.5 * L)
        inside = np.where(ok, r, inside)
        outside = np.where(ok, outside, r)
    radii = 0.5 * (inside + outside)
    if np.any(radii <= 0) or not np.all(np.isfinite(radii)):
        raise DomainError("slice extraction failed: origin not interior to the symmetral")
    return K.with_radii(radii)


def projection_samples(K: StarBody, samples: int):
    """Points x' spread over the interior of the projection of K."""
    if K.dim == 2:
        a = support(K, np.array([-1.0, 0.0]))
        b = support(K, np.array([1.0, 0.0]))
        s = (np.arange(samples) + 0.5) / samples
        return (-a + s * (a + b))[:, None]
    n_ang = max(4, int(np.ceil(np.sqrt(samples))))
    n_rad = max(1, int(np.ceil(samples / n_ang)))
    ang = 2.0 * np.pi * np.arange(n_ang) / n_ang
    w = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    ext = support(K, np.concatenate([w, np.zeros((n_ang, 1))], axis=1))
    frac = (np.arange(n_rad) + 0.5) / n_rad
    pts = (frac[:, None, None] * ext[None, :, None] * w[None, :, :]).reshape(-1, 2)
    return pts[:samples]


@dataclass(frozen=True)
class ContainmentResult:
    passed: bool
    worst_gauge: float
    tolerance: float

    def __bool__(self):
        return self.passed


def symmetral_containment(K: StarBody, L: StarBody, samples: int = 256, tol: float = 1e-3):
    """Sampled test of ``K^s`` inside L via chord midpoints.

    For each boundary pair ``(x', hi)``, ``(x', lo)`` of K the points
    ``(x', +-(hi - lo)/2)`` must have L-gauge at most ``1 + tol``.
    """
    xp = projection_samples(K, samples)
    lo, hi, valid = chords(K, xp)
    xp, half = xp[valid], 0.5 * (hi - lo)[valid]
    pts = np.concatenate(
        [np.concatenate([xp, half[:, None]], axis=1), np.concatenate([xp, -half[:, None]], axis=1)]
    )
    worst = float(np.max(gauge(L, pts)))
    return ContainmentResult(worst <= 1.0 + tol, worst, tol)


def chord_midpoints(K: StarBody, u, count: int):
    """Midpoints of *count* chords of K parallel to the unit vector u."""
    u = np.asarray(u, dtype=float)
    R = _rotation_to_last_axis(u / np.linalg.norm(u))
    Kr = K.rotated(R)
    xp = projection_samples(Kr, count)
    lo, hi, valid = chords(Kr, xp)
    mids = np.concatenate([xp[valid], (0.5 * (lo + hi))[valid][:, None]], axis=1)
    return mids @ R


def format_body(K: StarBody) -> str:
    head = json.dumps({"dim": K.dim, "grid": list(K.grid)})
    return head + "\n" + "\n".join(f"{r:.17g}" for r in K.radii) + "\n"


def parse_body(text: str) -> StarBody:
    head, _, body = text.partition("\n")
    try:
        meta = json.loads(head)
        radii = np.array(body.split(), dtype=float)
        dim, grid = int(meta["dim"]), meta["grid"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise GridFormatError(f"bad body file: {exc}") from exc
    size = grid[0] if dim == 2 else tuple(grid)
    if radii.size != int(np.prod(grid)):
        raise GridFormatError("radius count does not match the grid")
    return StarBody.from_radii(dim, radii, size)


def write_body(path, K: StarBody) -> None:
    Path(path).write_text(format_body(K))
