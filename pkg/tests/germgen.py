"""Randomized partial-map battery shared by the germ and acceptance suites.

Maps are built from families whose pieces are monotone with derivatives
bounded away from zero near any domain boundary, so the 1e-9 exclusion
margin genuinely dominates the bisection tolerance of the preimage code.
"""

import numpy as np

from dynsys import germ as G


def random_open_set(rng: np.random.Generator, allow_unbounded: bool = True) -> G.OpenSet1D:
    k = int(rng.integers(1, 4))
    cuts = np.sort(rng.uniform(-8.0, 8.0, size=2 * k))
    # enforce visible gaps so intervals stay honestly disjoint
    cuts += np.arange(2 * k) * 1e-3
    intervals = [(float(cuts[2 * i]), float(cuts[2 * i + 1])) for i in range(k)]
    if allow_unbounded and rng.random() < 0.25:
        lo, hi = intervals[0]
        intervals[0] = (-np.inf, hi)
    if allow_unbounded and rng.random() < 0.25:
        lo, hi = intervals[-1]
        intervals[-1] = (lo, np.inf)
    return G.OpenSet1D(tuple(intervals))


def random_monotone_piece_map(rng: np.random.Generator) -> G.PartialMap:
    kind = int(rng.integers(0, 5))
    if kind == 0:  # affine with slope away from zero
        a = float(rng.uniform(0.5, 3.0)) * (1 if rng.random() < 0.5 else -1)
        b = float(rng.uniform(-3.0, 3.0))
        src = f"{a}*x1 + {b}"
    elif kind == 1:  # strictly monotone cubic: derivative 3a x^2 + b >= b > 0
        a = float(rng.uniform(0.05, 0.4))
        b = float(rng.uniform(0.3, 1.5))
        c = float(rng.uniform(-2.0, 2.0))
        sign = "" if rng.random() < 0.5 else "-"
        src = f"{sign}({a}*x1^3 + {b}*x1 + {c})"
    elif kind == 2:  # scaled exponential
        a = float(rng.uniform(0.5, 2.0)) * (1 if rng.random() < 0.5 else -1)
        b = float(rng.uniform(0.3, 0.9))
        c = float(rng.uniform(-2.0, 2.0))
        src = f"{a}*exp({b}*x1) + {c}"
    elif kind == 3:  # tanh plus a drift keeps the slope above the drift
        a = float(rng.uniform(0.5, 2.0))
        b = float(rng.uniform(0.4, 1.5))
        src = f"{a}*tanh(x1) + {b}*x1"
    else:  # shifted parabola: two monotone pieces around the vertex
        s = float(rng.uniform(-2.0, 2.0))
        a = float(rng.uniform(0.4, 1.5))
        src = f"{a}*(x1 - {s})^2"
    return G.partial_map(src, random_open_set(rng))


def membership_equivalence_violations(
    f: G.PartialMap, g: G.PartialMap, points: np.ndarray, margin: float = 1e-9
) -> int:
    """Count points where p in dom(g o f) disagrees with the domain formula
    p in dom(f) and f(p) in dom(g), outside the boundary margin."""
    from dynsys import expr as E

    gf = G.compose_partial(f, g)
    in_f = f.domain.contains_array(points)
    rhs = np.zeros(points.shape, dtype=bool)
    fvals = np.full(points.shape, np.nan)
    if np.any(in_f):
        fvals[in_f] = E.evaluate_many(f.map, points[in_f])
        rhs[in_f] = g.domain.contains_array(fvals[in_f])
    lhs = gf.domain.contains_array(points)

    def near(values, boundaries):
        if not boundaries:
            return np.zeros(values.shape, dtype=bool)
        b = np.array(boundaries)
        return np.min(np.abs(values[:, None] - b[None, :]), axis=1) < margin

    excluded = near(points, gf.domain.boundary_points())
    excluded |= near(points, f.domain.boundary_points())
    with np.errstate(invalid="ignore"):
        mapped_near = near(np.nan_to_num(fvals, nan=np.inf), g.domain.boundary_points())
    excluded |= in_f & mapped_near
    return int(np.sum((lhs != rhs) & ~excluded))
