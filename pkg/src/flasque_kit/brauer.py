"""Brauer classes of M/K as local invariant vectors, the map I, and R-class counts."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from sympy import Poly, QQ, Rational, symbols

from .arith import (
    DegenerateTowerError,
    FieldError,
    FieldTowerSpec,
    PlaceAnalysis,
    compute_S_Sf,
    decomposition_type,
    find_auxiliary_prime,
    place_analyses,
    place_from_label,
)

HALF = Fraction(1, 2)


class InvariantError(ValueError):
    """A local invariant vector that is not an element of Br(M/K)."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


def reduce_mod1(x) -> Fraction:
    x = Fraction(x)
    return x - (x.numerator // x.denominator)


def fraction_to_json(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def fraction_from_json(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational {text!r}") from exc


@dataclass(frozen=True)
class LocalInvariantVector:
    tower: FieldTowerSpec
    entries: tuple[tuple[str, Fraction], ...] = ()

    @classmethod
    def make(cls, tower: FieldTowerSpec, entries: dict | None = None) -> "LocalInvariantVector":
        clean = {}
        for label, x in (entries or {}).items():
            place_from_label(tower.base, label)
            r = reduce_mod1(x)
            if r:
                clean[label] = r
        return cls(tower, tuple(sorted(clean.items(), key=lambda kv: _place_key(kv[0]))))

    def __getitem__(self, label: str) -> Fraction:
        return dict(self.entries).get(label, Fraction(0))

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.entries)

    def is_zero(self) -> bool:
        return not self.entries

    def __add__(self, other: "LocalInvariantVector") -> "LocalInvariantVector":
        if self.tower != other.tower:
            raise ValueError("vectors belong to different towers")
        out = dict(self.entries)
        for lab, x in other.entries:
            out[lab] = out.get(lab, Fraction(0)) + x
        return LocalInvariantVector.make(self.tower, out)

    def __neg__(self) -> "LocalInvariantVector":
        return LocalInvariantVector.make(self.tower, {lab: -x for lab, x in self.entries})

    def to_json(self) -> dict:
        return {lab: fraction_to_json(x) for lab, x in self.entries}

    @classmethod
    def from_json(cls, tower: FieldTowerSpec, data: dict) -> "LocalInvariantVector":
        return cls.make(tower, {lab: fraction_from_json(x) for lab, x in data.items()})


def _place_key(label: str):
    head, idx = label.split(":")
    return (head == "inf", 0 if head == "inf" else int(head), int(idx))


def zero_vector(tower: FieldTowerSpec) -> LocalInvariantVector:
    return LocalInvariantVector.make(tower)


def validate(v: LocalInvariantVector) -> LocalInvariantVector:
    """Check membership in Br(M/K); raise InvariantError listing every offending place."""
    problems = []
    for label, x in v.entries:
        P = place_from_label(v.tower.base, label)
        if P.archimedean:
            if not P.real:
                problems.append(f"{label}: complex place must carry 0, got {fraction_to_json(x)}")
                continue
            if x != HALF:
                problems.append(f"{label}: real place carries {fraction_to_json(x)}, not 0 or 1/2")
                continue
        deg = decomposition_type(v.tower, label).deg_M
        if reduce_mod1(deg * x):
            problems.append(f"{label}: {fraction_to_json(x)} is not killed by the local degree {deg}")
    if not v.tower.base.is_local:
        total = reduce_mod1(sum((x for _, x in v.entries), Fraction(0)))
        if total:
            problems.append(f"sum of invariants is {fraction_to_json(total)}, not 0")
    if problems:
        raise InvariantError(problems)
    return v


def invariant_map_I(
    v: LocalInvariantVector, S: tuple[str, ...], analyses: dict[str, PlaceAnalysis] | None = None
) -> tuple[Fraction, ...]:
    """(deg_M(p)/2 * inv_p(v) mod 1) for p in S."""
    out = []
    for label in S:
        deg = (analyses or {}).get(label) or decomposition_type(v.tower, label)
        out.append(reduce_mod1(Fraction(deg.deg_M, 2) * v[label]))
    return tuple(out)


def image_of_I(S: tuple[str, ...], Sf: tuple[str, ...], local: bool = False) -> list[tuple[Fraction, ...]]:
    """Tuples in (1/2 Z/Z)^S whose Sf-entries sum to zero (no constraint over a local base)."""
    pts = []
    for bits in product((0, 1), repeat=len(S)):
        x = tuple(Fraction(b, 2) for b in bits)
        if local or not reduce_mod1(sum((xi for lab, xi in zip(S, x) if lab in Sf), Fraction(0))):
            pts.append(x)
    return pts


@dataclass
class RClassReport:
    tower: FieldTowerSpec
    S: tuple[str, ...]
    Sf: tuple[str, ...]
    r: int
    representatives: list[LocalInvariantVector]
    trace: list[str] = field(default_factory=list)
    analyses: list[PlaceAnalysis] = field(default_factory=list)

    def images(self) -> list[tuple[Fraction, ...]]:
        amap = {a.label: a for a in self.analyses}
        return [invariant_map_I(v, self.S, amap) for v in self.representatives]

    def to_json(self) -> dict:
        return {
            "tower": self.tower.to_json(),
            "S": list(self.S),
            "Sf": list(self.Sf),
            "r": self.r,
            "representatives": [v.to_json() for v in self.representatives],
            "trace": list(self.trace),
            "places": [a.to_json() for a in self.analyses],
        }

    def to_text(self) -> str:
        lines = [
            f"tower: {self.tower}",
            f"S  = {{{', '.join(self.S)}}}",
            f"Sf = {{{', '.join(self.Sf)}}}",
            f"r  = {self.r}",
        ]
        for i, v in enumerate(self.representatives):
            body = ", ".join(f"{lab}: {fraction_to_json(x)}" for lab, x in v.entries) or "0"
            lines.append(f"  class {i}: {{{body}}}")
        lines += [f"  # {t}" for t in self.trace]
        return "\n".join(lines)


def _generators(tower: FieldTowerSpec, S, Sf, amap, trace) -> list[LocalInvariantVector]:
    """Two-point classes whose I-images form a basis of the image of I."""
    K = tower.base
    if K.is_local:
        # Br(K_p) = Q/Z with no reciprocity constraint
        return [LocalInvariantVector.make(tower, {lab: Fraction(1, amap[lab].deg_M)}) for lab in S]
    gens = []
    outside = [lab for lab in S if lab not in Sf]
    if outside:
        aux = find_auxiliary_prime(tower)
        trace.append(f"auxiliary prime q = {aux.prime} at place {aux.place}")
        for lab in outside:
            x = Fraction(1, amap[lab].deg_M)
            gens.append(LocalInvariantVector.make(tower, {lab: x, aux.place: -x}))
    if Sf:
        anchor = Sf[0]
        trace.append(f"anchor place {anchor} in Sf")
        x = Fraction(1, tower.global_degree)
        gens += [LocalInvariantVector.make(tower, {lab: x, anchor: -x}) for lab in Sf[1:]]
    return gens


def r_count(tower: FieldTowerSpec) -> RClassReport:
    tower._require_supported()
    trace = [f"s0 = [E:K] = {tower.s0}, [M:K] = {tower.global_degree}"]
    if tower.degenerate:
        trace.append("M/E is not a field extension of degree 2: the quotient is trivial")
        return RClassReport(tower, (), (), 1, [zero_vector(tower)], trace)
    analyses = place_analyses(tower)
    amap = {a.label: a for a in analyses}
    S, Sf = compute_S_Sf(tower)
    local = tower.base.is_local
    if not S:
        r = 1
        trace.append("S is empty")
    elif local:
        r = 2 ** len(S)
        trace.append(f"local base: r = 2^|S| = {r}")
    elif Sf:
        r = 2 ** (len(S) - 1)
        trace.append(f"r = 2^(|S|-1) = {r}")
    else:
        r = 2 ** len(S)
        trace.append(f"Sf is empty: r = 2^|S| = {r}, which differs from 2^(|S|-1)")
    gens = _generators(tower, S, Sf, amap, trace) if S else []
    reps = []
    for bits in product((0, 1), repeat=len(gens)):
        v = zero_vector(tower)
        for b, g in zip(reversed(bits), gens):
            if b:
                v = v + g
        reps.append(validate(v))
    report = RClassReport(tower, S, Sf, r, reps, trace, analyses)
    images = report.images()
    if len(set(images)) != len(images) or len(images) != r:
        raise AssertionError("representatives do not enumerate the image of I")
    if set(images) != set(image_of_I(S, Sf, local)):
        raise AssertionError("representatives miss part of the image of I")
    return report


def quotient_representatives(tower: FieldTowerSpec) -> list[LocalInvariantVector]:
    return r_count(tower).representatives


# ------------------------------------------------------------ connector pairs

_t = symbols("t")


@dataclass(frozen=True)
class Connector:
    a: Fraction
    b: Fraction
    q: Poly
    ell: Poly
    p: Poly

    def coefficients(self) -> dict[str, list[str]]:
        # ascending powers of t
        def coeffs(f: Poly) -> list[str]:
            return [str(c) for c in reversed(f.all_coeffs())]

        return {"q": coeffs(self.q), "l": coeffs(self.ell), "p": coeffs(self.p)}

    def to_json(self) -> dict:
        return {"a": str(self.a), "b": str(self.b), **self.coefficients()}


def dihedral_connector(a, b) -> Connector:
    """q | p with q(0) = 1, q(1) = b, p(0) = -1, p(1) = a, deg p <= 2."""
    a, b = Fraction(a), Fraction(b)
    if a == 0 or b == 0:
        raise ValueError("a and b must be nonzero")
    ra, rb = Rational(a.numerator, a.denominator), Rational(b.numerator, b.denominator)
    q = Poly(1 + (rb - 1) * _t, _t, domain=QQ)
    ell = Poly(-1 + (ra / rb + 1) * _t, _t, domain=QQ)
    p = q * ell
    c = Connector(a, b, q, ell, p)
    check_connector(c)
    return c


def check_connector(c: Connector) -> None:
    q, p = c.q, c.p
    ra = Rational(c.a.numerator, c.a.denominator)
    rb = Rational(c.b.numerator, c.b.denominator)
    failures = []
    if q.eval(0) != 1:
        failures.append("q(0) != 1")
    if q.eval(1) != rb:
        failures.append("q(1) != b")
    if p.eval(0) != -1:
        failures.append("p(0) != -1")
    if p.eval(1) != ra:
        failures.append("p(1) != a")
    if not p.rem(q).is_zero:
        failures.append("q does not divide p")
    if p.degree() > 2:
        failures.append("deg p > 2")
    if failures:
        raise AssertionError(", ".join(failures))


__all__ = [
    "Connector",
    "DegenerateTowerError",
    "FieldError",
    "InvariantError",
    "LocalInvariantVector",
    "RClassReport",
    "check_connector",
    "dihedral_connector",
    "image_of_I",
    "invariant_map_I",
    "quotient_representatives",
    "r_count",
    "validate",
    "zero_vector",
]
