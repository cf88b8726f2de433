"""Seeded random expression generator shared by the expr and acceptance suites."""

import numpy as np

from dynsys import expr as E

_FUNCS = ("sin", "cos", "exp", "tanh", "sqrt", "log")


def random_node(rng: np.random.Generator, arity: int, depth: int) -> E.Node:
    if depth <= 0:
        kind = rng.integers(0, 3)
        if kind == 0:
            return E.Num(round(float(rng.uniform(0.3, 2.5)), 3))
        if kind == 1 or arity == 0:
            return E.TimeVar() if arity == 0 else E.Var(int(rng.integers(1, arity + 1)))
        return E.Var(int(rng.integers(1, arity + 1)))
    pick = rng.integers(0, 8)
    if pick == 0:
        return E.Add(random_node(rng, arity, depth - 1), random_node(rng, arity, depth - 1))
    if pick == 1:
        return E.Sub(random_node(rng, arity, depth - 1), random_node(rng, arity, depth - 1))
    if pick == 2:
        return E.Mul(random_node(rng, arity, depth - 1), random_node(rng, arity, depth - 1))
    if pick == 3:
        # keep denominators away from zero so finite differences stay sane
        shifted = E.Add(E.Num(round(float(rng.uniform(1.2, 3.0)), 3)),
                        E.Pow(random_node(rng, arity, 0), E.Num(2.0)))
        return E.Div(random_node(rng, arity, depth - 1), shifted)
    if pick == 4:
        return E.Pow(random_node(rng, arity, depth - 1), E.Num(float(rng.integers(2, 4))))
    if pick == 5:
        return E.Neg(random_node(rng, arity, depth - 1))
    func = _FUNCS[int(rng.integers(0, len(_FUNCS)))]
    arg = random_node(rng, arity, depth - 1)
    if func in ("sqrt", "log"):
        arg = E.Add(E.Num(round(float(rng.uniform(1.5, 3.0)), 3)), E.Pow(arg, E.Num(2.0)))
    return E.Call(func, arg)


def random_expr(rng: np.random.Generator, arity: int = 1, depth: int = 3) -> E.Expr:
    return E.Expr(random_node(rng, arity, depth), arity)


def central_difference(e: E.Expr, var: int, point, t: float = 0.0, h: float = 1e-5) -> float:
    """Independent derivative oracle: second-order central difference."""
    hi = list(point)
    lo = list(point)
    hi[var - 1] += h
    lo[var - 1] -= h
    return (E.evaluate(e, hi, t) - E.evaluate(e, lo, t)) / (2.0 * h)
