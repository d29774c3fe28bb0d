import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orliczps.errors import DomainError, NoSolutionError
from orliczps.orlicz import (
    Asymmetric,
    OrliczFunction,
    PiecewiseAffineSup,
    Power,
    compute_c_phi,
    eval_phi,
    eval_Phi,
    parse_phi,
)

FAMILIES = [
    Power(2),
    Power(3),
    Power(1.5),
    Asymmetric(2, 0.25),
    Asymmetric(3, 0.0),
    Asymmetric(2, 1.0),
    PiecewiseAffineSup(((1.0, 0.0), (2.0, -1.0))),
    PiecewiseAffineSup(((2.0, 0.0), (-2.0, 0.0))),
    PiecewiseAffineSup(((1.0, 0.0), (-0.5, 0.0), (3.0, -2.0))),
]


@pytest.mark.parametrize(
    "phi, t, expected",
    [
        (Power(2), -3.0, 9.0),
        (Asymmetric(2, 0.0), -3.0, 0.0),
        (PiecewiseAffineSup(((1, 0), (2, -1))), 2.0, 3.0),
        (Power(3), -2.0, 8.0),
        (Asymmetric(2, 0.25), -2.0, 1.0),
    ],
)
def test_eval_phi_examples(phi, t, expected):
    assert eval_phi(phi, t) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "phi, t, expected",
    [(Power(2), 3.0, 9.0), (Asymmetric(2, 0.25), 2.0, 3.0), (Asymmetric(2, 0.25), 0.0, 0.0)],
)
def test_eval_Phi_examples(phi, t, expected):
    assert eval_Phi(phi, t) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("phi", FAMILIES)
def test_phi_vanishes_at_zero(phi):
    assert eval_phi(phi, 0.0) == 0.0
    assert eval_Phi(phi, 0.0) == 0.0


def test_non_finite_argument_rejected():
    with pytest.raises(DomainError):
        eval_phi(Power(2), np.nan)
    with pytest.raises(DomainError):
        eval_phi(Power(2), np.inf)
    with pytest.raises(DomainError):
        eval_Phi(Power(2), -1.0)


@pytest.mark.parametrize(
    "phi, expected",
    [
        (Power(2), 1.0),
        (Asymmetric(2, 0.0), 1.0),
        (PiecewiseAffineSup(((2, 0), (-2, 0))), 0.5),
        (Asymmetric(2, 0.25), 0.75 ** -0.5),
        (PiecewiseAffineSup(((1, 0), (2, -1))), 1.0),
    ],
)
def test_c_phi_examples(phi, expected):
    assert compute_c_phi(phi) == pytest.approx(expected, abs=1e-11)


@pytest.mark.parametrize("phi", FAMILIES)
def test_c_phi_solves_Phi_equal_one(phi):
    c = compute_c_phi(phi)
    assert abs(eval_Phi(phi, c) - 1.0) <= 1e-10


def test_c_phi_bisection_matches_closed_form():
    # Asymmetric(2, 0.25) written as a sup of affine pieces is not possible
    # exactly, but a pure slope is: Phi(t) = 4 t reaches 1 at 1/4
    assert compute_c_phi(PiecewiseAffineSup(((4.0, 0.0),))) == pytest.approx(0.25, abs=1e-12)


def test_c_phi_wide_bracket():
    c = compute_c_phi(PiecewiseAffineSup(((1e-9, 0.0), (-1e-9, 0.0))))
    assert c == pytest.approx(1e9, rel=1e-12)


def test_c_phi_no_solution():
    class Bounded(OrliczFunction):
        strictly_convex = False
        is_even = True

        def _phi(self, t):
            return 0.5 * np.tanh(np.abs(t))

    with pytest.raises(NoSolutionError):
        compute_c_phi(Bounded())


@pytest.mark.parametrize("phi", FAMILIES)
def test_convexity_on_random_triples(phi):
    rng = np.random.default_rng(0)
    t1, t2 = rng.uniform(-5, 5, (2, 10_000))
    th = rng.uniform(0, 1, 10_000)
    lhs = phi(th * t1 + (1 - th) * t2)
    rhs = th * phi(t1) + (1 - th) * phi(t2)
    assert np.all(lhs <= rhs + 1e-12 * np.maximum(1.0, np.abs(rhs)))


@pytest.mark.parametrize("phi", FAMILIES)
def test_Phi_strictly_increasing(phi):
    t = np.linspace(0, 10, 2001)
    assert np.all(np.diff(phi.Phi(t)) > 0)


@pytest.mark.parametrize("lam, vanishing_side", [(0.0, -1.0), (1.0, 1.0)])
def test_one_sided_asymmetric(lam, vanishing_side):
    phi = Asymmetric(2, lam)
    t = np.linspace(0.01, 5, 100)
    assert np.all(phi(vanishing_side * t) == 0)
    assert np.all(np.diff(phi(-vanishing_side * t)) > 0)
    assert not phi.strictly_convex


def test_flags():
    assert Power(2).strictly_convex and Power(2).is_even
    assert Asymmetric(2, 0.3).strictly_convex and not Asymmetric(2, 0.3).is_even
    assert Asymmetric(2, 0.5).is_even
    assert not PiecewiseAffineSup(((1, 0),)).strictly_convex
    assert PiecewiseAffineSup(((2, 0), (-2, 0))).is_even


@given(s=st.floats(0.01, 100), t=st.floats(-100, 100), p=st.sampled_from([1.5, 2.0, 3.0, 4.0, 2.7]))
@settings(max_examples=200, deadline=None)
def test_power_homogeneity(s, t, p):
    phi = Power(p)
    lhs, rhs = phi(s * t), s**p * phi(t)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize(
    "bad",
    [
        lambda: Power(1.0),
        lambda: Power(np.nan),
        lambda: Asymmetric(2, 1.5),
        lambda: Asymmetric(0.5, 0.5),
        lambda: PiecewiseAffineSup(()),
        lambda: PiecewiseAffineSup(((1.0, 0.5),)),
        lambda: PiecewiseAffineSup(((1.0, -1.0),)),
    ],
)
def test_invalid_parameters(bad):
    with pytest.raises(DomainError):
        bad()


@pytest.mark.parametrize(
    "text, expected",
    [
        ("power:p=2", Power(2)),
        ("asym:p=2,lambda=0.5", Asymmetric(2, 0.5)),
        ("asym:p=3,lambda=0.25", Asymmetric(3, 0.25)),
        ("pwl:[(1,0),(2,-1)]", PiecewiseAffineSup(((1.0, 0.0), (2.0, -1.0)))),
    ],
)
def test_parse_phi(text, expected):
    phi = parse_phi(text)
    assert phi == expected
    assert parse_phi(phi.spec()) == phi


@pytest.mark.parametrize("text", ["", "power", "power:q=2", "cubic:p=2", "pwl:[(1,", "asym:p=2"])
def test_parse_phi_rejects(text):
    with pytest.raises(DomainError):
        parse_phi(text)
