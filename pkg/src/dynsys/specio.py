"""System/morphism spec files and machine-readable reports.

Spec files are line-oriented ``key: value`` text with ``#`` comments.
Repeated keys accumulate in order; a ``;`` inside a value separates
entries of the same key.  Exact field names:

discrete systems::

    kind: discrete
    elements: a b
    map: a -> b
    map: b -> b
    basepoint: a
    section: a -> a b        # optional explicit section rows (fixtures)

continuous and germed systems (germed means a 1-D punctured carrier)::

    kind: continuous
    dimension: 2
    domain: -1 1 ; -inf inf  # one "lo hi" pair per dimension (default all R)
    puncture: 0 0            # repeatable
    field: x2
    field: -x1
    basepoint: 1 0
    section-base: x1 + 1     # optional footing override (fixtures)

morphism files::

    kind: map
    component: x1 + 3        # continuous: one expression per target dim
    entry: a -> x            # discrete: one row per source element
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from . import expr as E
from . import tau
from .continuous import ContinuousSystem, Domain, SmoothMap
from .core import CheckReport
from .discrete import DiscreteSystem


class SpecError(ValueError):
    """Malformed spec file or command input."""


@dataclass
class LoadedSystem:
    kind: str  # discrete | continuous | germed
    system: object
    basepoint: object | None
    tau_system: tau.TauSystem

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"


def _read_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from None
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise SpecError(f"{path}:{ln}: expected 'key: value'")
        key, value = line.split(":", 1)
        for part in value.split(";"):
            pairs.append((key.strip(), part.strip()))
    return pairs


def _collect(pairs, key: str) -> list[str]:
    return [v for k, v in pairs if k == key]


def _single(pairs, key: str, path, required: bool = False) -> str | None:
    vals = _collect(pairs, key)
    if len(vals) > 1:
        raise SpecError(f"{path}: key {key!r} given {len(vals)} times")
    if not vals:
        if required:
            raise SpecError(f"{path}: missing required key {key!r}")
        return None
    return vals[0]


def _parse_float(tok: str, path) -> float:
    if tok == "-inf":
        return -math.inf
    if tok == "inf":
        return math.inf
    try:
        return float(tok)
    except ValueError:
        raise SpecError(f"{path}: not a number: {tok!r}") from None


def _parse_arrow(value: str, path, parts: int = 1) -> tuple[str, list[str]]:
    if "->" not in value:
        raise SpecError(f"{path}: expected 'x -> y', got {value!r}")
    lhs, rhs = value.split("->", 1)
    rhs_toks = rhs.split()
    if len(rhs_toks) != parts:
        raise SpecError(f"{path}: expected {parts} target token(s) in {value!r}")
    return lhs.strip(), rhs_toks


def load_system(path) -> LoadedSystem:
    pairs = _read_pairs(path)
    kind = _single(pairs, "kind", path, required=True)
    if kind == "discrete":
        return _load_discrete(pairs, path)
    if kind in ("continuous", "germed"):
        return _load_continuous(pairs, path, kind)
    raise SpecError(f"{path}: unknown kind {kind!r}")


def _load_discrete(pairs, path) -> LoadedSystem:
    elements_line = _single(pairs, "elements", path, required=True)
    carrier = tuple(elements_line.split())
    table = {}
    for value in _collect(pairs, "map"):
        src, (dst,) = _parse_arrow(value, path)
        table[src] = dst
    try:
        system = DiscreteSystem(carrier, table)
    except ValueError as exc:
        raise SpecError(f"{path}: {exc}") from None
    basepoint = _single(pairs, "basepoint", path)
    if basepoint is not None and basepoint not in table:
        raise SpecError(f"{path}: basepoint {basepoint!r} not among the elements")
    section = None
    section_rows = _collect(pairs, "section")
    if section_rows:
        section = {}
        for value in section_rows:
            src, (first, second) = _parse_arrow(value, path, parts=2)
            section[src] = (first, second)
        missing = set(carrier) - set(section)
        if missing:
            raise SpecError(f"{path}: section rows missing for {sorted(missing)}")
    tau_system = (
        tau.from_discrete(system)
        if section is None
        else tau.TauSystem(tau.DISCRETE, carrier, section)
    )
    return LoadedSystem("discrete", system, basepoint, tau_system)


def _load_continuous(pairs, path, kind: str) -> LoadedSystem:
    dim_tok = _single(pairs, "dimension", path, required=True)
    try:
        n = int(dim_tok)
    except ValueError:
        raise SpecError(f"{path}: dimension must be an integer, got {dim_tok!r}") from None
    if n < 1:
        raise SpecError(f"{path}: dimension must be positive")
    if kind == "germed" and n != 1:
        raise SpecError(f"{path}: germed systems have 1-D carriers, got dimension {n}")

    domain_rows = _collect(pairs, "domain")
    if not domain_rows:
        bounds = tuple((-math.inf, math.inf) for _ in range(n))
    else:
        if len(domain_rows) != n:
            raise SpecError(f"{path}: need {n} domain intervals, got {len(domain_rows)}")
        bounds = []
        for row in domain_rows:
            toks = row.split()
            if len(toks) != 2:
                raise SpecError(f"{path}: domain interval needs 'lo hi', got {row!r}")
            bounds.append((_parse_float(toks[0], path), _parse_float(toks[1], path)))
        bounds = tuple(bounds)

    punctures = []
    for row in _collect(pairs, "puncture"):
        toks = row.split()
        if len(toks) != n:
            raise SpecError(f"{path}: puncture needs {n} coordinates, got {row!r}")
        punctures.append(tuple(_parse_float(t, path) for t in toks))

    field_rows = _collect(pairs, "field")
    if len(field_rows) != n:
        raise SpecError(f"{path}: need {n} field components, got {len(field_rows)}")
    try:
        field = E.parse_vector(field_rows, n)
        domain = Domain(bounds, tuple(punctures))
        system = ContinuousSystem(domain, field)
    except (E.ExprError, ValueError) as exc:
        raise SpecError(f"{path}: {exc}") from None

    basepoint = None
    bp_row = _single(pairs, "basepoint", path)
    if bp_row is not None:
        toks = bp_row.split()
        if len(toks) != n:
            raise SpecError(f"{path}: basepoint needs {n} coordinates, got {bp_row!r}")
        basepoint = tuple(_parse_float(t, path) for t in toks)
        if not domain.contains(basepoint):
            raise SpecError(f"{path}: basepoint {basepoint} outside the domain")

    base_rows = _collect(pairs, "section-base")
    if base_rows:
        if len(base_rows) != n:
            raise SpecError(f"{path}: need {n} section-base components, got {len(base_rows)}")
        try:
            footing = E.parse_vector(base_rows, n)
        except E.ExprError as exc:
            raise SpecError(f"{path}: {exc}") from None
        section = tau.TangentSection(field, base=footing)
        tau_system = tau.TauSystem(tau.CONTINUOUS, domain, section)
    else:
        tau_system = tau.from_continuous(system)
    return LoadedSystem(kind, system, basepoint, tau_system)


def load_map(path, src: LoadedSystem, dst: LoadedSystem):
    """A SmoothMap or a discrete table, checked against both systems."""
    pairs = _read_pairs(path)
    kind = _single(pairs, "kind", path, required=True)
    if kind != "map":
        raise SpecError(f"{path}: expected kind: map, got {kind!r}")
    components = _collect(pairs, "component")
    entries = _collect(pairs, "entry")
    if components and entries:
        raise SpecError(f"{path}: give either component rows or entry rows, not both")
    if src.is_discrete != dst.is_discrete:
        raise SpecError("kind mismatch: cannot map between discrete and continuous systems")
    if src.is_discrete:
        if not entries:
            raise SpecError(f"{path}: discrete morphisms need entry rows")
        table = {}
        for value in entries:
            a, (b,) = _parse_arrow(value, path)
            table[a] = b
        return table
    if not components:
        raise SpecError(f"{path}: continuous morphisms need component rows")
    if len(components) != dst.system.dimension:
        raise SpecError(
            f"{path}: need {dst.system.dimension} components, got {len(components)}"
        )
    try:
        return SmoothMap(E.parse_vector(components, src.system.dimension))
    except E.ExprError as exc:
        raise SpecError(f"{path}: {exc}") from None


# --- reports -----------------------------------------------------------------


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return "-"
    return str(v)


def _fmt_text(v: str | None) -> str:
    if v is None:
        return "-"
    return '"' + v.replace('"', "'") + '"'


def render_report(
    command: str,
    config: dict,
    checks: list[tuple[str, CheckReport]],
    notes: list[str] = (),
) -> str:
    """Deterministic text report: identical inputs give identical bytes."""
    lines = [f"tool: dynsys {__version__}", f"command: {command}"]
    lines.append(
        "config: " + " ".join(f"{k}={_fmt_value(v)}" for k, v in sorted(config.items()))
    )
    for name, rep in checks:
        lines.append(
            f"check: name={name} verdict={rep.verdict} residual={_fmt_value(rep.residual)}"
            f" samples={rep.samples} witness={_fmt_text(rep.witness)} note={_fmt_text(rep.note)}"
        )
    for note in notes:
        lines.append(f"note: {note}")
    overall = "pass" if all(rep.passed for _, rep in checks) else "fail"
    lines.append(f"result: {overall}")
    return "\n".join(lines) + "\n"
