"""Acceptance criteria, one test per criterion; each prints a PASS/FAIL line."""

import time
from functools import lru_cache

import numpy as np
import pytest

from orliczps.convex import volume
from orliczps.corpus import CONE_ENERGY, CONE_NORM, build_corpus, cone
from orliczps.energy import GradientSample, affine_energy, luxemburg_norms, membership_integral, orlicz_ball
from orliczps.gridfn import BoxDomain, GridFunction, level_volumes
from orliczps.orlicz import Asymmetric, PiecewiseAffineSup, Power
from orliczps.rearrange import (
    iterate_steiner,
    one_cell_layer,
    random_directions,
    schwarz_symmetrize,
    steiner_rearrange,
)
from orliczps.verify import (
    chord_midpoint_affine_test,
    detect_equality_case,
    verify_affine_invariance,
    verify_ball_containment,
)

TOL = 0.01
AXES = (np.array([1.0, 0.0]), np.array([0.0, 1.0]))
PHIS = {"power2": Power(2), "power3": Power(3), "asym2": Asymmetric(2, 0.25)}


@lru_cache(maxsize=None)
def fixtures(intervals):
    return {fx.name: fx for fx in build_corpus(seed=0, intervals=intervals)}


@lru_cache(maxsize=None)
def symmetrand(name, intervals, kind):
    f = fixtures(intervals)[name].function
    if kind == "schwarz":
        return schwarz_symmetrize(f)
    return steiner_rearrange(f, AXES[int(kind[-1])])


@lru_cache(maxsize=None)
def energy(name, intervals, kind="original", phi="power2"):
    f = fixtures(intervals)[name].function if kind == "original" else symmetrand(name, intervals, kind)
    return affine_energy(f, PHIS[phi]).energy


def test_c1_cone_norms_and_energy(acceptance, cone_512):
    t0 = time.perf_counter()
    thetas = np.linspace(0, np.pi, 8, endpoint=False)
    V = np.c_[np.cos(thetas), np.sin(thetas)]
    norms = luxemburg_norms(GradientSample.of(cone_512, Power(2)), Power(2), V)
    res = affine_energy(cone_512, Power(2), 720)
    dt = time.perf_counter() - t0
    norm_err = float(np.max(np.abs(norms / CONE_NORM - 1)))
    e_err = abs(res.energy / CONE_ENERGY - 1)
    ok = norm_err <= TOL and e_err <= TOL and dt <= 10.0
    assert acceptance(1, "cone norms and energy", ok,
                      f"max norm error {norm_err:.4f}, energy {res.energy:.6f} (error {e_err:.4f})", dt)


def test_c2_steiner_inequality(acceptance):
    t0 = time.perf_counter()
    worst_margin, worst_equi, failures = np.inf, 0.0, []
    for name, fx in fixtures(256).items():
        f = fx.function
        t = np.linspace(0.05, 0.95, 20) * f.max
        a = level_volumes(f, t)
        allow = TOL * a + one_cell_layer(a, f.domain)
        for k in range(2):
            e0, e1 = energy(name, 256), energy(name, 256, f"axis{k}")
            margin = (e0 - e1) / e0
            worst_margin = min(worst_margin, margin)
            equi = float(np.max(np.abs(level_volumes(symmetrand(name, 256, f"axis{k}"), t) - a) / allow))
            worst_equi = max(worst_equi, equi)
            if e1 > e0 * (1 + TOL) or equi > 1.0:
                failures.append(f"{name}/axis{k}")
    dt = time.perf_counter() - t0
    ok = not failures and dt <= 120.0
    assert acceptance(2, "Steiner inequality on the corpus", ok,
                      f"24 cases, worst margin {worst_margin:+.4f}, worst level-volume error "
                      f"{worst_equi:.2f} of allowance, failures {failures}", dt)


def test_c3_schwarz_inequality(acceptance):
    t0 = time.perf_counter()
    worst, failures = np.inf, []
    for name in fixtures(256):
        for key in PHIS:
            e0, e1 = energy(name, 256, phi=key), energy(name, 256, "schwarz", key)
            worst = min(worst, (e0 - e1) / e0)
            if e1 > e0 * (1 + TOL):
                failures.append(f"{name}/{key}")
    dt = time.perf_counter() - t0
    ok = not failures and dt <= 300.0
    assert acceptance(3, "Schwarz inequality on the corpus", ok,
                      f"36 cases, worst margin {worst:+.4f}, failures {failures}", dt)


def test_c4_affine_invariance(acceptance):
    t0 = time.perf_counter()
    families = {"radial_bump", "affine_bump", "ellipsoidal_bump", "ellipsoidal_variant", "cone"}
    worst, used, skipped, empty = 0.0, 0, 0, []
    for name, fx in fixtures(256).items():
        if fx.family not in families:
            continue
        rep = verify_affine_invariance(fx.function, Power(2), trials=10, seed=0)
        used += len(rep.deviations)
        skipped += len(rep.skipped)
        if rep.deviations:
            worst = max(worst, rep.max_deviation)
        else:
            empty.append(name)
    dt = time.perf_counter() - t0
    # the unshifted cone fills the inscribed disk of the box, so no map keeps it inside
    ok = worst <= 0.02 and empty == ["cone"]
    assert acceptance(4, "affine invariance", ok,
                      f"max deviation {worst:.4f} over {used} trials, {skipped} skipped, "
                      f"fixtures without a usable trial {empty}", dt)


def test_c5_ball_containment(acceptance):
    t0 = time.perf_counter()
    worst, worst_vol, failures = 0.0, np.inf, []
    for name, fx in fixtures(256).items():
        for k, u in enumerate(AXES):
            rep = verify_ball_containment(fx.function, Power(2), u, samples=256, tol=0.02)
            worst = max(worst, rep.worst_gauge)
            worst_vol = min(worst_vol, rep.volume_symmetrized / rep.volume_original)
            if not (rep.passed and rep.volume_monotone):
                failures.append(f"{name}/axis{k}")
    dt = time.perf_counter() - t0
    assert acceptance(5, "ball containment", not failures,
                      f"worst gauge {worst:.4f}, smallest volume ratio {worst_vol:.4f}, "
                      f"failures {failures}", dt)


def test_c6_equality_cases(acceptance):
    t0 = time.perf_counter()
    fx = fixtures(256)
    detail, ok = [], True
    for name in ("ellipse_1", "ellipse_2", "ellipse_3"):
        v = detect_equality_case(fx[name].function, Power(2))
        ok &= v.is_equality_case and abs(v.energy_gap) <= 0.02
        detail.append(f"{name} {v.is_equality_case} gap {v.energy_gap:+.4f}")
    for name in ("two_bump_1", "two_bump_2"):
        v = detect_equality_case(fx[name].function, Power(2), with_energy=False)
        ok &= not v.is_equality_case
        detail.append(f"{name} {v.is_equality_case}")
    worst = 0.0
    for name in ("ellipse_1", "ellipse_2", "ellipse_3"):
        K = orlicz_ball(fx[name].function, Power(2))
        for a in np.linspace(0, np.pi, 8, endpoint=False):
            passed, res = chord_midpoint_affine_test(K, np.array([np.cos(a), np.sin(a)]))
            ok &= passed
            worst = max(worst, res)
    dt = time.perf_counter() - t0
    assert acceptance(6, "equality cases", bool(ok),
                      "; ".join(detail) + f"; worst chord residual {worst:.2e}", dt)


def test_c8_iterated_steiner(acceptance):
    t0 = time.perf_counter()
    f = fixtures(256)["two_bump_1"].function
    run = iterate_steiner(f, random_directions(0, 200, 2), stop_tol=0.02, max_iters=200)
    rise = float(np.max(np.diff(run.trace)))
    dt = time.perf_counter() - t0
    ok = run.converged and run.trace[-1] <= 0.02 and rise <= 0.005
    assert acceptance(8, "iterated Steiner convergence", ok,
                      f"distance {run.trace[0]:.3f} -> {run.trace[-1]:.4f} in {run.iterations} steps, "
                      f"largest increase {rise:+.4f}", dt)


def test_c9_self_convergence(acceptance):
    t0 = time.perf_counter()
    worst, where = 0.0, None
    for name in fixtures(256):
        for kind in ("original", "axis0", "axis1", "schwarz"):
            a, b = energy(name, 256, kind), energy(name, 512, kind)
            change = abs(b - a) / b
            if change > worst:
                worst, where = change, f"{name}/{kind}"
    # observed order at the worst case from the 128 -> 256 -> 512 sequence
    name, kind = where.split("/")
    e = [energy(name, n, kind) for n in (128, 256, 512)]
    order = np.log2(abs(e[1] - e[0]) / abs(e[2] - e[1]))
    dt = time.perf_counter() - t0
    assert acceptance(9, "self-convergence 256 -> 512 intervals", worst < TOL,
                      f"48 energies, largest relative change {worst:.4f} at {where} (band {TOL}), "
                      f"observed order there {order:.2f}", dt)


@pytest.mark.run_last
def test_c7_norm_sandwich_and_round_trip(acceptance, session_norm_audit):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((50, 2))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    pwl = PiecewiseAffineSup(((1.0, 0.0), (-0.5, 0.0), (3.0, -1.0)))
    worst = 0.0
    for name in ("cone_shifted", "ellipse_3", "two_bump_2"):
        f = fixtures(256)[name].function
        for phi in (*PHIS.values(), pwl):
            lam = luxemburg_norms(GradientSample.of(f, phi), phi, Z)
            res = np.array([membership_integral(f, phi, z, l) for z, l in zip(Z, lam)])
            worst = max(worst, float(np.max(np.abs(res - 1))))
    audit = session_norm_audit
    dt = time.perf_counter() - t0
    ok = audit.ok and audit.checked > 0 and worst <= 1e-8
    assert acceptance(7, "norm bounds and round trip", ok,
                      f"{audit.checked} norms checked, {len(audit.violations)} outside the bounds, "
                      f"worst round-trip residual {worst:.1e}", dt)
