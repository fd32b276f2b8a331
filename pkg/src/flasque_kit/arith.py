"""Base fields, local square classes, and splitting of the towers K < E < M.

Supported bases are Q, Q(sqrt d) and Q_p. For a tower with parameter s,
E = K(zeta + 1/zeta) for a primitive 2^s-th root of unity zeta, and
M = E(sqrt v) with v = -1 (constant case) or v = -a (twisted case).
Gal(M/K) = C2 x C_s0 with s0 = [E:K]; a decomposition group is noncyclic
exactly when it contains the whole 2-torsion subgroup.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Union

from sympy import factorint, isprime, legendre_symbol, nextprime
from sympy.ntheory.residue_ntheory import sqrt_mod

PADIC_PRECISION = 64  # digits kept for Hensel-lifted square roots
AUX_PRIME_BOUND = 10**6
SUPPORTED_S = (3, 4)


class FieldError(ValueError):
    pass


class UnsupportedTowerError(FieldError):
    pass


class DegenerateTowerError(FieldError):
    pass


Rat = Union[int, Fraction]
Elem = tuple[Fraction, Fraction]  # alpha + beta*sqrt(u)


def _elem(x) -> Elem:
    if isinstance(x, tuple):
        return (Fraction(x[0]), Fraction(x[1]))
    return (Fraction(x), Fraction(0))


def _mul(x: Elem, y: Elem, u: int) -> Elem:
    return (x[0] * y[0] + u * x[1] * y[1], x[0] * y[1] + x[1] * y[0])


def _vp(x: Fraction, p: int) -> int | None:
    if x == 0:
        return None
    v, n, d = 0, x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def _residue(x: Fraction, mod: int) -> int:
    # x must be integral at every prime dividing mod
    return x.numerator * pow(x.denominator, -1, mod) % mod


def squarefree(n: int) -> bool:
    return n != 0 and all(e == 1 for e in factorint(abs(n)).values())


def padic_sqrt(x: Rat, p: int, precision: int = PADIC_PRECISION) -> Fraction | None:
    """A rational approximating sqrt(x) in Q_p to `precision` digits, or None."""
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    v = _vp(x, p)
    if v % 2:
        return None
    w = x / Fraction(p) ** v
    mod = p ** (precision + 3)
    r = sqrt_mod(_residue(w, mod), mod)
    if r is None:
        return None
    return Fraction(p) ** (v // 2) * r


# --------------------------------------------------------------- base fields


@dataclass(frozen=True)
class BaseField:
    """Q (kind 'Q'), Q(sqrt d) (kind 'quadratic') or Q_p (kind 'padic')."""

    kind: str
    d: int | None = None
    p: int | None = None

    def __post_init__(self):
        if self.kind == "Q":
            if self.d is not None or self.p is not None:
                raise FieldError("Q takes no parameters")
        elif self.kind == "quadratic":
            if self.d is None or self.d in (0, 1) or not squarefree(self.d):
                raise FieldError(f"d must be a squarefree integer other than 0 and 1, got {self.d}")
        elif self.kind == "padic":
            if self.p is None or not isprime(self.p):
                raise FieldError(f"p must be prime, got {self.p}")
        else:
            raise FieldError(f"unknown base field kind {self.kind!r}")

    @classmethod
    def rational(cls) -> "BaseField":
        return cls("Q")

    @classmethod
    def quadratic(cls, d: int) -> "BaseField":
        return cls("quadratic", d=d)

    @classmethod
    def padic(cls, p: int) -> "BaseField":
        return cls("padic", p=p)

    @classmethod
    def parse(cls, text: str) -> "BaseField":
        t = text.strip()
        if t == "Q":
            return cls.rational()
        m = re.fullmatch(r"Q\(\s*sqrt\s*\(?\s*(-?\d+)\s*\)?\s*\)", t)
        if m:
            return cls.quadratic(int(m.group(1)))
        m = re.fullmatch(r"Qp\s*:\s*(\d+)", t)
        if m:
            return cls.padic(int(m.group(1)))
        raise FieldError(f"cannot parse base field {text!r}; use Q, Q(sqrt D) or Qp:P")

    def __str__(self) -> str:
        if self.kind == "Q":
            return "Q"
        if self.kind == "quadratic":
            return f"Q(sqrt {self.d})"
        return f"Qp:{self.p}"

    @property
    def is_local(self) -> bool:
        return self.kind == "padic"

    @property
    def sqrt_class(self) -> int:
        # u with K = Q(sqrt u); 1 when K is Q or Q_p
        return self.d if self.kind == "quadratic" else 1

    def is_square(self, x) -> bool:
        """Global square test for an element alpha + beta*sqrt(d) of K."""
        x = _elem(x)
        if x == (0, 0):
            raise FieldError("zero has no square class")
        if self.kind == "padic":
            return is_square(LocalField(self.p), x)
        if self.kind == "Q":
            if x[1]:
                raise FieldError("element of Q has an irrational part")
            return _rational_square(x[0])
        alpha, beta = x
        if beta == 0:
            return _rational_square(alpha) or _rational_square(alpha / self.d)
        norm = alpha * alpha - self.d * beta * beta
        if not _rational_square(norm):
            return False
        c = _rational_sqrt(norm)
        return any(alpha + s * c != 0 and _rational_square(2 * (alpha + s * c)) for s in (1, -1))


def _rational_sqrt(x: Fraction) -> Fraction:
    from math import isqrt

    return Fraction(isqrt(x.numerator), isqrt(x.denominator))


def _rational_square(x: Fraction) -> bool:
    from math import isqrt

    x = Fraction(x)
    if x <= 0:
        return False
    return isqrt(x.numerator) ** 2 == x.numerator and isqrt(x.denominator) ** 2 == x.denominator


# -------------------------------------------------------------- local fields


@dataclass(frozen=True)
class LocalField:
    """Q_p (u is None) or Q_p(sqrt u) for a squarefree integer u that is not a square in Q_p."""

    p: int
    u: int | None = None

    def __post_init__(self):
        if not isprime(self.p):
            raise FieldError(f"{self.p} is not prime")
        if self.u is not None:
            if not squarefree(self.u) or self.u == 1:
                raise FieldError("u must be squarefree and different from 1")
            if is_square(LocalField(self.p), self.u):
                raise FieldError(f"{self.u} is a square in Q_{self.p}; Q_p(sqrt u) is not a field")

    @property
    def e(self) -> int:
        if self.u is None:
            return 1
        if self.p == 2:
            return 1 if self.u % 4 == 1 else 2
        return 2 if self.u % self.p == 0 else 1

    @property
    def f(self) -> int:
        return 1 if self.u is None else 2 // self.e

    @property
    def degree(self) -> int:
        return self.e * self.f

    def __str__(self) -> str:
        return f"Q_{self.p}" if self.u is None else f"Q_{self.p}(sqrt {self.u})"


def _qp_square(x: Fraction, p: int) -> bool:
    v = _vp(x, p)
    if v % 2:
        return False
    w = x / Fraction(p) ** v
    if p == 2:
        return _residue(w, 8) == 1
    return legendre_symbol(_residue(w, p), p) == 1


@lru_cache(maxsize=None)
def _two_adic_squares(u: int, modulus: int) -> frozenset[tuple[int, int]]:
    """All y^2 mod `modulus` in the integral basis of Q_2(sqrt u)."""
    out = set()
    unramified = u % 4 == 1
    for y0 in range(modulus):
        for y1 in range(modulus):
            if unramified:
                # basis 1, w with w^2 = w + (u - 1)/4
                c = (u - 1) // 4
                out.add(((y0 * y0 + c * y1 * y1) % modulus, (2 * y0 * y1 + y1 * y1) % modulus))
            else:
                out.add(((y0 * y0 + u * y1 * y1) % modulus, (2 * y0 * y1) % modulus))
    return frozenset(out)


def _two_adic_extension_square(L: LocalField, x: Elem) -> bool:
    u = L.u
    alpha, beta = x
    norm = alpha * alpha - u * beta * beta
    vn = _vp(norm, 2)
    if L.e == 1:
        pi = (Fraction(2), Fraction(0))
        v = vn // 2
    else:
        pi = (Fraction(1), Fraction(1)) if u % 2 else (Fraction(0), Fraction(1))
        v = vn
    if v % 2:
        return False
    pi_norm = pi[0] ** 2 - u * pi[1] ** 2
    pi_inv = (pi[0] / pi_norm, -pi[1] / pi_norm)
    w = x
    step = pi_inv if v > 0 else pi
    for _ in range(abs(v)):
        w = _mul(w, step, u)
    # unit w; square iff it is a square modulo pi^(2e+2)
    if L.e == 1:
        modulus = 16
        coords = (w[0] - w[1], 2 * w[1])
    else:
        modulus = 8
        coords = w
    res = tuple(_residue(c, modulus) for c in coords)
    return res in _two_adic_squares(u, modulus)


def is_square(L: LocalField, x) -> bool:
    """Exact square-class test for alpha + beta*sqrt(u) in L (beta = 0 for Q_p)."""
    x = _elem(x)
    if x == (0, 0):
        raise FieldError("zero has no square class")
    p, u = L.p, L.u
    if u is None:
        if x[1]:
            raise FieldError(f"element has an irrational part but the field is Q_{p}")
        return _qp_square(x[0], p)
    if x[1] == 0 and _qp_square(x[0], p):
        return True
    if p == 2:
        return _two_adic_extension_square(L, x)
    alpha, beta = x
    if u % p:
        # unramified: valuation is the smaller coordinate valuation, residue lives in F_{p^2}
        vs = [v for v in (_vp(alpha, p), _vp(beta, p)) if v is not None]
        v = min(vs)
        if v % 2:
            return False
        scale = Fraction(p) ** v
        a0, b0 = _residue(alpha / scale, p), _residue(beta / scale, p)
        return legendre_symbol((a0 * a0 - u * b0 * b0) % p, p) == 1
    # ramified, pi = sqrt(u): v_pi(alpha) is even, v_pi(beta sqrt u) is odd
    va = _vp(alpha, p)
    vb = _vp(beta, p)
    if va is None or (vb is not None and 2 * vb + 1 < 2 * va):
        return False
    w0 = _residue(Fraction(u, p), p)
    a0 = _residue(alpha / Fraction(p) ** va, p)
    return legendre_symbol(a0 * pow(w0, va, p) % p, p) == 1


def local_sqrt(L: LocalField, x: Rat) -> Elem | None:
    """A square root of a rational x inside L (approximate p-adically), or None."""
    r = padic_sqrt(x, L.p)
    if r is not None:
        return (r, Fraction(0))
    if L.u is None:
        return None
    c = padic_sqrt(Fraction(x) / L.u, L.p)
    return None if c is None else (Fraction(0), c)


# -------------------------------------------------------------------- towers


@dataclass(frozen=True)
class Place:
    label: str
    prime: int | None  # None for archimedean places
    index: int
    field: LocalField | None  # completion for finite places
    real: bool = False
    sqrt_d_image: Elem | None = None  # image of sqrt(d) in the completion (quadratic base)

    @property
    def archimedean(self) -> bool:
        return self.prime is None


@dataclass(frozen=True)
class PlaceAnalysis:
    label: str
    deg_E: int
    deg_N: int
    deg_M: int
    noncyclic: bool
    full_degree: bool

    def __post_init__(self):
        if self.noncyclic and self.deg_M < 4:
            raise AssertionError("noncyclic local group of order below 4")

    def to_json(self) -> dict:
        return {
            "place": self.label,
            "deg_E": self.deg_E,
            "deg_N": self.deg_N,
            "deg_M": self.deg_M,
            "noncyclic": self.noncyclic,
            "full_degree": self.full_degree,
        }


@dataclass(frozen=True)
class FieldTowerSpec:
    """K < E = K(eta_s) < M, with M = E(sqrt v), v = -1 (a is None) or v = -a."""

    base: BaseField
    s: int
    a: int | None = None

    def __post_init__(self):
        if self.s < 3:
            raise FieldError("s must be at least 3")
        if self.a is not None and (not isinstance(self.a, int) or self.a == 0):
            raise FieldError("a must be a nonzero integer")

    @property
    def epsilon(self) -> int:
        return 1 if self.a is None else -1

    @property
    def variant(self) -> str:
        return "constant" if self.a is None else "twisted"

    @property
    def v(self) -> Fraction:
        return Fraction(-1) if self.a is None else Fraction(-self.a)

    def _require_supported(self):
        if self.s not in SUPPORTED_S:
            raise UnsupportedTowerError(
                f"exact splitting analysis is implemented for s in {SUPPORTED_S}, got s={self.s}"
            )

    @cached_property
    def sqrt2_in_K(self) -> Elem | None:
        K = self.base
        if not K.is_square(2):
            return None
        if K.kind == "quadratic":
            return (Fraction(0), Fraction(1))  # only Q(sqrt 2) contains sqrt 2
        return local_sqrt(LocalField(K.p), 2)

    @cached_property
    def s0(self) -> int:
        """[E:K]."""
        self._require_supported()
        if self.s == 3:
            return 1 if self.base.is_square(2) else 2
        r = self.sqrt2_in_K
        if r is None:
            return 4
        return 1 if self.base.is_square((2 + r[0], r[1])) else 2

    @property
    def global_degree(self) -> int:
        return 2 * self.s0

    @cached_property
    def quadratic_generator(self) -> Elem:
        """u with K(sqrt u) the quadratic subextension of E/K (s0 >= 2)."""
        if self.s == 4 and self.sqrt2_in_K is not None:
            r = self.sqrt2_in_K
            return (2 + r[0], r[1])
        return (Fraction(2), Fraction(0))

    @cached_property
    def degenerate(self) -> bool:
        """True when M/K is not a field of degree 2*s0 with s0 >= 2."""
        if self.s0 == 1:
            return True
        K = self.base
        v = _elem(self.v)
        if K.is_square(v):
            return True
        u = self.quadratic_generator
        return K.is_square(_mul(u, v, K.sqrt_class))

    def describe(self) -> dict:
        self._require_supported()
        eta = "sqrt 2" if self.s == 3 else "sqrt(2 + sqrt 2)"
        vtxt = "-1" if self.a is None else f"-{self.a}" if self.a > 0 else f"{-self.a}"
        out = {
            "K": str(self.base),
            "E": f"K({eta})",
            "M": f"E(sqrt {vtxt})",
            "N": f"K(sqrt {vtxt})",
            "F": "K(sqrt 2)" if self.s == 4 and self.s0 == 4 else "K",
            "s0": self.s0,
            "degenerate": self.degenerate,
        }
        return out

    def to_json(self) -> dict:
        out = {"base": str(self.base), "s": self.s, "variant": self.variant}
        if self.a is not None:
            out["a"] = self.a
        return out

    @classmethod
    def from_json(cls, data: dict) -> "FieldTowerSpec":
        variant = data.get("variant", "twisted" if "a" in data else "constant")
        a = data.get("a")
        if variant == "constant" and a is not None:
            raise FieldError("constant towers take no a")
        if variant == "twisted" and a is None:
            raise FieldError("twisted towers need a")
        return cls(BaseField.parse(data["base"]), int(data["s"]), None if a is None else int(a))

    def __str__(self) -> str:
        extra = "" if self.a is None else f", a={self.a}"
        return f"{self.base}, s={self.s}{extra}"


# -------------------------------------------------------------------- places


def places_over(K: BaseField, p: int) -> list[Place]:
    if K.kind == "padic":
        if p != K.p:
            raise FieldError(f"Q_{K.p} has no place over {p}")
        return [Place(f"{p}:0", p, 0, LocalField(p))]
    if K.kind == "Q":
        return [Place(f"{p}:0", p, 0, LocalField(p))]
    d = K.d
    r = padic_sqrt(d, p)
    if r is not None:
        return [
            Place(f"{p}:0", p, 0, LocalField(p), sqrt_d_image=(r, Fraction(0))),
            Place(f"{p}:1", p, 1, LocalField(p), sqrt_d_image=(-r, Fraction(0))),
        ]
    return [Place(f"{p}:0", p, 0, LocalField(p, d), sqrt_d_image=(Fraction(0), Fraction(1)))]


def archimedean_places(K: BaseField) -> list[Place]:
    if K.kind == "padic":
        return []
    if K.kind == "Q" or K.d > 0:
        n = 1 if K.kind == "Q" else 2
        return [Place(f"inf:{i}", None, i, None, real=True) for i in range(n)]
    return [Place("inf:0", None, 0, None, real=False)]


def place_from_label(K: BaseField, label: str) -> Place:
    m = re.fullmatch(r"(inf|\d+):(\d+)", label)
    if not m:
        raise FieldError(f"bad place label {label!r}")
    head, idx = m.group(1), int(m.group(2))
    pool = archimedean_places(K) if head == "inf" else places_over(K, int(head))
    if head != "inf" and not isprime(int(head)):
        raise FieldError(f"{head} is not prime")
    for P in pool:
        if P.index == idx:
            return P
    raise FieldError(f"{K} has no place {label}")


def _embed(P: Place, x: Elem) -> Elem:
    """Image of alpha + beta*sqrt(d) in the completion at P."""
    alpha, beta = x
    if beta == 0:
        return (alpha, Fraction(0))
    img = P.sqrt_d_image
    if img is None:
        raise FieldError("irrational element over a base without a square root")
    return (alpha + beta * img[0], beta * img[1])


def relevant_places(tower: FieldTowerSpec) -> list[str]:
    """Places of K over 2 and over primes dividing a, then archimedean places."""
    if tower.degenerate:
        raise DegenerateTowerError(f"tower {tower} is degenerate")
    K = tower.base
    if K.is_local:
        return [P.label for P in places_over(K, K.p)]
    primes = {2}
    if tower.a is not None:
        primes |= set(factorint(abs(tower.a)))
    labels = [P.label for p in sorted(primes) for P in places_over(K, p)]
    return labels + [P.label for P in archimedean_places(K)]


def _archimedean_analysis(tower: FieldTowerSpec, P: Place) -> PlaceAnalysis:
    # E is totally real; only sqrt(v) can become complex
    deg_N = 2 if P.real and tower.v < 0 else 1
    return PlaceAnalysis(P.label, 1, deg_N, deg_N, False, deg_N == tower.global_degree)


def decomposition_type(tower: FieldTowerSpec, label: str) -> PlaceAnalysis:
    """Local degrees of E, N, M at a place and whether Gal(M_P/K_P) is noncyclic.

    Works for any place of K, including degenerate towers (where M is only an etale algebra
    and deg_M is the degree of one of its local field factors).
    """
    tower._require_supported()
    P = place_from_label(tower.base, label)
    if P.archimedean:
        return _archimedean_analysis(tower, P)
    L = P.field
    d = tower.base.sqrt_class
    sq = lambda x: is_square(L, _embed(P, _elem(x)))
    v = _elem(tower.v)
    n_deg = 1 if sq(v) else 2
    if tower.s0 == 1:
        return PlaceAnalysis(label, 1, n_deg, n_deg, False, n_deg == tower.global_degree)
    if tower.s0 == 2:
        # M = K(sqrt u, sqrt v) biquadratic
        u = tower.quadratic_generator
        trivial = [sq(u), sq(v), sq(_mul(u, v, d))]
        if trivial.count(True) == 2:
            raise AssertionError("square classes violate the subgroup structure")
        deg_M = 4 if not any(trivial) else (1 if all(trivial) else 2)
        deg_E = 1 if trivial[0] else 2
        return PlaceAnalysis(label, deg_E, n_deg, deg_M, deg_M == 4, deg_M == 4)
    # s0 = 4: Gal(M/K) = C2 x C4, F = K(sqrt 2) is fixed by the 2-torsion
    if not sq(2):
        # some element of order 4 lies in D; D is everything iff it maps onto C2 x C2
        full = not sq(v) and not sq(2 * tower.v)
        deg_M = 8 if full else 4
        return PlaceAnalysis(label, 4, n_deg, deg_M, full, full)
    r = local_sqrt(L, 2)
    y = (2 + r[0], r[1])
    w = _embed(P, v)
    trivial = [is_square(L, y), is_square(L, w), is_square(L, _mul(y, w, L.u or 1))]
    if trivial.count(True) == 2:
        raise AssertionError("square classes violate the subgroup structure")
    deg_M = 4 if not any(trivial) else (1 if all(trivial) else 2)
    deg_E = 1 if trivial[0] else 2
    return PlaceAnalysis(label, deg_E, n_deg, deg_M, deg_M == 4, False)


def place_analyses(tower: FieldTowerSpec) -> list[PlaceAnalysis]:
    from ._parallel import fanout

    return fanout(lambda lab: decomposition_type(tower, lab), relevant_places(tower))


def compute_S_Sf(tower: FieldTowerSpec) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Places with noncyclic decomposition group, and those among them of full local degree."""
    tower._require_supported()
    if tower.degenerate:
        return (), ()
    an = place_analyses(tower)
    S = tuple(x.label for x in an if x.noncyclic)
    Sf = tuple(x.label for x in an if x.noncyclic and x.full_degree)
    return S, Sf


@dataclass(frozen=True)
class AuxiliaryPrime:
    prime: int
    place: str
    analysis: PlaceAnalysis


def find_auxiliary_prime(tower: FieldTowerSpec, bound: int = AUX_PRIME_BOUND) -> AuxiliaryPrime:
    """Smallest odd prime, unramified in M/K, with a place where E and M both have local degree s0.

    N is additionally required to split there, so the local extension M/K is exactly E/K.
    """
    tower._require_supported()
    if tower.degenerate:
        raise DegenerateTowerError(f"tower {tower} is degenerate")
    K = tower.base
    if K.is_local:
        raise FieldError("auxiliary primes are only defined over number fields")
    bad = {2}
    if tower.a is not None:
        bad |= set(factorint(abs(tower.a)))
    if K.kind == "quadratic":
        bad |= set(factorint(abs(K.d)))
    q = 2
    while True:
        q = nextprime(q)
        if q > bound:
            raise FieldError(f"no auxiliary prime below {bound}")
        if q in bad:
            continue
        for P in places_over(K, q):
            an = decomposition_type(tower, P.label)
            if an.deg_E == an.deg_M == tower.s0 and an.deg_N == 1:
                return AuxiliaryPrime(q, P.label, an)
