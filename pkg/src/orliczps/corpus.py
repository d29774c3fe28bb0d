"""Deterministic 2-D regression fixtures on the box [-1, 1]^2."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gridfn import BoxDomain, GridFunction, write_grid

__all__ = ["Fixture", "build_corpus", "gen_corpus", "CONE_ENERGY", "CONE_NORM"]

#: cone (1 - |x|)_+ on [-1, 1]^2 with Power(2) and |Omega| = 4
CONE_NORM = float(np.sqrt(np.pi / 8.0))
CONE_ENERGY = float(8.0 ** -0.5)


def _rot(deg):
    a = np.deg2rad(deg)
    return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])


def cone(center=(0.0, 0.0), radius=1.0):
    c = np.asarray(center, dtype=float)
    return lambda x: np.maximum(0.0, 1.0 - np.linalg.norm(x - c, axis=-1) / radius)


def bump(center=(0.0, 0.0), radius=0.5, height=1.0, A=None):
    """``height * (1 - |A (x - c)|^2 / R^2)_+^2``."""
    c = np.asarray(center, dtype=float)
    A = np.eye(2) if A is None else np.asarray(A, dtype=float)

    def fn(x):
        y = (x - c) @ A.T
        return height * np.maximum(0.0, 1.0 - np.sum(y * y, axis=-1) / radius**2) ** 2

    return fn


def ellipsoidal(D, center=(0.0, 0.0)):
    """``(1 - |D (x - c)|^2)_+``."""
    c = np.asarray(center, dtype=float)
    D = np.asarray(D, dtype=float)

    def fn(x):
        y = (x - c) @ D.T
        return np.maximum(0.0, 1.0 - np.sum(y * y, axis=-1))

    return fn


@dataclass
class Fixture:
    name: str
    family: str
    function: GridFunction
    equality_expected: bool
    integral: float
    extra: dict = field(default_factory=dict)

    def manifest(self) -> dict:
        out = {
            "name": self.name,
            "family": self.family,
            "file": f"{self.name}.grid",
            "equality_expected": self.equality_expected,
            "integral": self.integral,
        }
        out.update(self.extra)
        return out


def _shift(rng, h, lo, hi):
    """Random node-aligned offset with components in [lo, hi]."""
    k = rng.integers(int(round(lo / h)), int(round(hi / h)) + 1, size=2)
    return k * h


def build_corpus(seed: int = 0, intervals: int = 256):
    """The twelve regression fixtures.

    Offsets of the shifted variants are drawn from *seed* in units of the
    coarsest step 1/128, so they stay node-aligned at every resolution in
    ``{256, 512, ...}``.
    """
    dom = BoxDomain.cube(1.0, intervals)
    rng = np.random.default_rng(seed)
    h0 = 1.0 / 128
    s_cone = _shift(rng, h0, 0.1, 0.3) * np.array([1.0, -1.0])
    s_bump = _shift(rng, h0, 0.1, 0.3) * np.array([1.0, -0.5])
    s_ell = _shift(rng, h0, 0.05, 0.15) * np.array([1.0, 1.5])

    D1 = np.diag([1 / 0.55, 1 / 0.275])
    D2 = np.diag([1 / 0.55, 1 / 0.22]) @ _rot(-30.0)
    D3 = np.diag([1 / 0.38, 1 / 0.38]) @ np.array([[1.0, 0.7], [0.0, 1.0]])
    D2r = D2 @ _rot(-45.0)
    shear = np.array([[1.0, 0.6], [0.0, 1.0]])

    ell_mass = lambda D: float(np.pi / 2 / abs(np.linalg.det(D)))
    bump_mass = lambda R, hgt=1.0: float(hgt * np.pi * R**2 / 3)

    specs = [
        ("cone", "cone", cone(), True, np.pi / 3,
         {"expected_energy": CONE_ENERGY, "expected_norm": CONE_NORM, "energy_rtol": 0.01}),
        ("cone_shifted", "cone", cone(s_cone, 0.6), True, np.pi * 0.36 / 3, {"offset": s_cone.tolist()}),
        ("bump", "radial_bump", bump(), True, bump_mass(0.5), {}),
        ("bump_shifted", "radial_bump", bump(s_bump), True, bump_mass(0.5), {"offset": s_bump.tolist()}),
        ("bump_sheared", "affine_bump", bump(A=shear), True, bump_mass(0.5), {"A": shear.tolist()}),
        ("ellipse_1", "ellipsoidal_bump", ellipsoidal(D1), True, ell_mass(D1), {"D": D1.tolist()}),
        ("ellipse_2", "ellipsoidal_bump", ellipsoidal(D2), True, ell_mass(D2), {"D": D2.tolist()}),
        ("ellipse_3", "ellipsoidal_bump", ellipsoidal(D3), True, ell_mass(D3), {"D": D3.tolist()}),
        ("ellipse_1_shifted", "ellipsoidal_variant", ellipsoidal(D1, s_ell), True, ell_mass(D1),
         {"D": D1.tolist(), "offset": s_ell.tolist()}),
        ("ellipse_2_rotated", "ellipsoidal_variant", ellipsoidal(D2r), True, ell_mass(D2r), {"D": D2r.tolist()}),
        ("two_bump_1", "two_bump",
         lambda x: bump((-0.4, 0.2), 0.3)(x) + bump((0.4, -0.2), 0.3)(x),
         False, 2 * bump_mass(0.3), {}),
        ("two_bump_2", "two_bump",
         lambda x: bump((0.35, 0.3), 0.3)(x) + bump((-0.35, -0.25), 0.25, 0.6)(x),
         False, bump_mass(0.3) + bump_mass(0.25, 0.6), {}),
    ]
    return [
        Fixture(name, fam, GridFunction.from_callable(dom, fn), eq, float(mass), extra)
        for name, fam, fn, eq, mass, extra in specs
    ]


def gen_corpus(seed: int, out_dir, intervals: int = 256):
    """Write every fixture as a grid file plus ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fixtures = build_corpus(seed, intervals)
    for fx in fixtures:
        write_grid(out / f"{fx.name}.grid", fx.function)
    manifest = {"seed": seed, "intervals": intervals, "fixtures": [fx.manifest() for fx in fixtures]}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return fixtures
