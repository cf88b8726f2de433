import math

import hypothesis
import hypothesis.strategies as st
import numpy as np
import pytest

from dynsys import continuous as C
from dynsys import expr as E
from dynsys import germ as G
from germgen import membership_equivalence_violations, random_monotone_piece_map


# --- open sets ---------------------------------------------------------------


def test_normalization_merges_overlap():
    s = G.open_set((0.0, 2.0), (1.0, 3.0))
    assert s.intervals == ((0.0, 3.0),)


def test_touching_open_intervals_stay_separate():
    s = G.open_set((0.0, 1.0), (1.0, 2.0))
    assert s.intervals == ((0.0, 1.0), (1.0, 2.0))
    assert not s.contains(1.0)


def test_empty_intervals_dropped():
    assert G.open_set((2.0, 2.0), (3.0, 1.0)).is_empty


_interval_lists = st.lists(
    st.tuples(
        st.floats(min_value=-50, max_value=50, allow_nan=False),
        st.floats(min_value=-50, max_value=50, allow_nan=False),
    ),
    max_size=6,
)


@hypothesis.given(_interval_lists)
def test_normalization_idempotent(ivs):
    s = G.OpenSet1D(tuple(ivs))
    assert G.OpenSet1D(s.intervals).intervals == s.intervals
    for (a_lo, a_hi), (b_lo, b_hi) in zip(s.intervals, s.intervals[1:]):
        assert a_lo < a_hi <= b_lo < b_hi


@hypothesis.given(_interval_lists, st.floats(min_value=-60, max_value=60, allow_nan=False))
def test_contains_array_matches_scalar(ivs, x):
    s = G.OpenSet1D(tuple(ivs))
    assert bool(s.contains_array(np.array([x]))[0]) == s.contains(x)


def test_intersect_and_union():
    a = G.open_set((0.0, 5.0))
    b = G.open_set((-math.inf, 1.0), (2.0, math.inf))
    assert a.intersect(b).intervals == ((0.0, 1.0), (2.0, 5.0))
    assert b.union(G.open_set((1.0, 2.0))).intervals == ((-math.inf, 1.0), (1.0, 2.0), (2.0, math.inf))


def test_textual_form():
    s = G.open_set((-math.inf, 0.0), (0.0, math.inf))
    assert str(s) == "(-inf,0.0) ∪ (0.0,inf)"
    assert str(G.open_set()) == "(empty)"


# --- partial maps and composition ---------------------------------------------


def test_total_composition_stays_total():
    f = G.partial_map("x1 + 1")
    g = G.partial_map("2*x1")
    gf = G.compose_partial(f, g)
    assert gf.domain.intervals == ((-math.inf, math.inf),)
    for x in (-3.0, 0.0, 2.5):
        assert gf(x) == pytest.approx(2 * (x + 1), abs=1e-12)


def test_identity_with_restricted_domain():
    f = G.partial_map("x1", G.open_set((-math.inf, 0.0)))
    g = G.partial_map("x1 + 1")
    gf = G.compose_partial(f, g)
    assert gf.domain.intervals == ((-math.inf, 0.0),)


def test_square_preimage_two_components():
    # dom(g o f) = preimage of (1, 4) under x^2 = (-2, -1) u (1, 2)
    f = G.partial_map("x1^2")
    g = G.partial_map("x1", G.open_set((1.0, 4.0)))
    gf = G.compose_partial(f, g)
    assert len(gf.domain.intervals) == 2
    (a, b), (c, d) = gf.domain.intervals
    assert abs(a + 2) < 1e-9 and abs(b + 1) < 1e-9
    assert abs(c - 1) < 1e-9 and abs(d - 2) < 1e-9
    # membership oracle on 10^4 points
    pts = np.linspace(-3, 3, 10_000)
    inside = gf.domain.contains_array(pts)
    oracle = (1.0 < pts**2) & (pts**2 < 4.0)
    margin = np.min(
        np.abs(pts[:, None] - np.array([-2.0, -1.0, 1.0, 2.0])[None, :]), axis=1
    )
    keep = margin > 1e-9
    assert np.array_equal(inside[keep], oracle[keep])


def test_pipeline_survives_composition():
    f = G.partial_map("x1 + 1")
    g = G.partial_map("x1^2")
    h = G.partial_map("x1 - 3")
    two = G.compose_partial(f, g)
    three = G.compose_partial(two, h)
    assert len(three.pipeline) == 3


def test_domain_formula_randomized_battery():
    rng = np.random.default_rng(404)
    pts = rng.uniform(-12, 12, size=2000)
    for _ in range(40):
        f = random_monotone_piece_map(rng)
        g = random_monotone_piece_map(rng)
        assert membership_equivalence_violations(f, g, pts) == 0


def test_composition_associativity_exact():
    rng = np.random.default_rng(777)
    for _ in range(25):
        f = random_monotone_piece_map(rng)
        g = random_monotone_piece_map(rng)
        h = random_monotone_piece_map(rng)
        left = G.compose_partial(G.compose_partial(f, g), h)
        right = G.compose_partial(f, G.compose_partial(g, h))
        assert left.domain.intervals == right.domain.intervals
        for lo, hi in left.domain.intervals:
            lo, hi = max(lo, -20.0), min(hi, 20.0)
            if hi - lo < 1e-6:
                continue
            xs = np.linspace(lo + 1e-7 * (hi - lo), hi - 1e-7 * (hi - lo), 17)
            va = E.evaluate_many(left.map, xs)
            vb = E.evaluate_many(right.map, xs)
            assert np.array_equal(va, vb)


def test_non_monotone_rejected():
    f = G.partial_map("sin(x1)")
    g = G.partial_map("x1", G.open_set((0.0, 0.5)))
    with pytest.raises(G.NonMonotoneError):
        G.compose_partial(f, g)


# --- germ equality -------------------------------------------------------------


def test_germ_reflexive():
    pm = G.partial_map("x1^2", G.open_set((-1.0, 1.0)))
    g = G.Germ(pm, 0.25)
    rep = G.germ_equal(g, g)
    assert rep.passed and rep.residual == 0.0


def test_partial_identities_differ_without_common_basepoint():
    # the two partial identities onto the punctured line are distinct germs
    left = G.Germ(G.partial_map("x1", G.open_set((-math.inf, 0.0))), -1.0)
    right = G.Germ(G.partial_map("x1", G.open_set((0.0, math.inf))), 1.0)
    rep = G.germ_equal(left, right)
    assert not rep.passed and "basepoint" in rep.witness


def test_equal_germ_different_representatives():
    a = G.Germ(G.partial_map("x1", G.open_set((-1.0, 1.0))), 0.5)
    b = G.Germ(G.partial_map("x1 + x1*0", G.open_set((0.0, 2.0))), 0.5)
    rep = G.germ_equal(a, b)
    assert rep.passed


def test_germ_symmetry_and_transitivity():
    rng = np.random.default_rng(5)
    for _ in range(10):
        lo = float(rng.uniform(-3, -1))
        hi = float(rng.uniform(1, 3))
        base = float(rng.uniform(-0.5, 0.5))
        ga = G.Germ(G.partial_map("tanh(x1)", G.open_set((lo, hi))), base)
        gb = G.Germ(G.partial_map("tanh(x1) + 0*x1", G.open_set((lo - 1, hi))), base)
        gc = G.Germ(G.partial_map("tanh(x1)*1", G.open_set((lo, hi + 1))), base)
        assert G.germ_equal(ga, gb).passed == G.germ_equal(gb, ga).passed
        if G.germ_equal(ga, gb).passed and G.germ_equal(gb, gc).passed:
            assert G.germ_equal(ga, gc).passed


def test_germ_requires_basepoint_in_domain():
    with pytest.raises(ValueError):
        G.Germ(G.partial_map("x1", G.open_set((0.0, 1.0))), 2.0)


# --- maximal solution domains ----------------------------------------------------


def punctured_time(punctures=(0.0,)) -> C.ContinuousSystem:
    dom = C.Domain(((-math.inf, math.inf),), tuple((p,) for p in punctures))
    return C.ContinuousSystem(dom, E.parse_vector(["1"], 1))


def test_punctured_line_maximal_domain():
    res = G.maximal_solution_domain(punctured_time(), t0=1.0, horizon=5.0)
    (lo, hi), = res.interval.intervals
    assert abs(lo + 1.0) < 1e-6
    assert hi == pytest.approx(5.0)
    assert res.backward.termination == "left-domain"
    assert res.forward.termination == "reached-span"
    # the puncture is never crossed: every backward state stays positive
    assert np.all(res.backward.states[:, 0] >= -1e-9)


def test_unpunctured_line_runs_to_horizon():
    res = G.maximal_solution_domain(C.time_system(), t0=0.0, horizon=5.0)
    (lo, hi), = res.interval.intervals
    assert lo == pytest.approx(-5.0) and hi == pytest.approx(5.0)


def test_punctured_line_negative_start():
    res = G.maximal_solution_domain(punctured_time(), t0=-2.0, horizon=5.0)
    (lo, hi), = res.interval.intervals
    assert abs(hi - 2.0) < 1e-6
    assert lo == pytest.approx(-5.0)
