"""The lattice family over C2 x C_s0 attached to a 2-power cyclic group scheme.

Generators are sigma (order 2) and tau (order s0). The rank 2*s0 + 1 lattice
X(S) has basis

    a, tau a, ..., tau^(s0-1) a,  b, tau b, ..., tau^(s0-1) b,  c

with tau cycling each block, c fixed, and

    sigma (tau^i a) = tau^i a + tau^(i+1) b - tau^i b
    sigma (tau^i b) = -tau^i b + c.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .exactlin import (
    FiniteAbelianGroup,
    IntMatrix,
    cokernel,
    hstack,
    image_basis,
    kernel_basis,
    smith_diagonal,
    smith_normal_form,
    solve_integer,
)
from .gmod import (
    FiniteGroup,
    GLattice,
    GLatticeMap,
    coset_representatives,
    direct_sum,
    group_from_abelian_invariants,
    ind_copies,
    permutation_module,
    regular_module,
    sublattice_action,
    trivial_lattice,
)
from .tate import check_flasque_resolution, is_flasque

MAX_S = 5
VALID_S0 = (1, 2, 4, 8, 16)


class FamilyError(ValueError):
    pass


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _check_s0(s0: int) -> None:
    if s0 not in VALID_S0:
        raise FamilyError(f"s0 must be one of {VALID_S0}, got {s0}")


def multiplicative_order(m: int, n: int) -> int | None:
    if n == 1:
        return 1
    x, k = m % n, 1
    seen = x
    while seen != 1 % n:
        seen = (seen * x) % n
        k += 1
        if k > n:
            return None
    return k


def choose_m(s: int, s0: int) -> int:
    """Smallest m > 1 of order s0 mod 2^s with (m^s0 - 1)/2^s odd."""
    if s < 3 or not _is_power_of_two(s0) or (2 ** (s - 2)) % s0:
        raise FamilyError(f"need s >= 3 and s0 a power of two dividing 2^(s-2), got s={s}, s0={s0}")
    mod = 2**s
    cap = 2 ** (s + 2)
    for m in range(3, cap + 1, 2):
        if multiplicative_order(m, mod) == s0 and ((m**s0 - 1) // mod) % 2 == 1:
            return m
    raise FamilyError(f"no admissible m below {cap} for s={s}, s0={s0}")


@dataclass(frozen=True)
class TorusFamilyParams:
    s: int
    s0: int
    m: int
    epsilon: int = 1

    def __post_init__(self):
        if not 3 <= self.s <= MAX_S:
            raise FamilyError(f"s must lie in 3..{MAX_S}")
        if not _is_power_of_two(self.s0) or (2 ** (self.s - 2)) % self.s0:
            raise FamilyError("s0 must be a power of two dividing 2^(s-2)")
        if self.epsilon not in (1, -1):
            raise FamilyError("epsilon must be +1 or -1")
        mod = 2**self.s
        if self.m % 2 == 0 or multiplicative_order(self.m, mod) != self.s0:
            raise FamilyError(f"m = {self.m} must have order s0 = {self.s0} modulo {mod}")
        if ((self.m**self.s0 - 1) // mod) % 2 != 1:
            raise FamilyError(f"(m^s0 - 1)/2^s must be odd for m = {self.m}")

    @classmethod
    def default(cls, s: int, s0: int, epsilon: int = 1) -> "TorusFamilyParams":
        return cls(s, s0, choose_m(s, s0), epsilon)


def family_group(s0: int) -> FiniteGroup:
    _check_s0(s0)
    return group_from_abelian_invariants([2, s0], ["sigma", "tau"])


def _tau_power(i: int) -> str:
    return "" if i == 0 else ("tau*" if i == 1 else f"tau^{i}*")


def _chain_matrices(length: int, step: int) -> tuple[list[list[int]], list[list[int]]]:
    # sigma and a tau that shifts the a- and b-chains of the given length by step
    n = 2 * length + 1
    a = lambda j: j % length
    b = lambda j: length + j % length
    c = 2 * length
    tau = [[0] * n for _ in range(n)]
    sigma = [[0] * n for _ in range(n)]
    for j in range(length):
        tau[a(j + step)][a(j)] = 1
        tau[b(j + step)][b(j)] = 1
        sigma[a(j)][a(j)] += 1
        sigma[b(j + 1)][a(j)] += 1
        sigma[b(j)][a(j)] -= 1
        sigma[b(j)][b(j)] = -1
        sigma[c][b(j)] = 1
    tau[c][c] = sigma[c][c] = 1
    return sigma, tau


def build_XS(s0: int) -> GLattice:
    G = family_group(s0)
    sigma, tau = _chain_matrices(s0, 1)
    labels = [f"{_tau_power(i)}a" for i in range(s0)] + [f"{_tau_power(i)}b" for i in range(s0)] + ["c"]
    return GLattice(
        G, 2 * s0 + 1, {"sigma": IntMatrix.from_rows(sigma), "tau": IntMatrix.from_rows(tau)}, tuple(labels)
    )


def ind_XS(s0: int, k: int) -> GLattice:
    """The k-copy module: a_1..a_k, b_1..b_k with their tau-orbits, and c.

    The copies are linked the way they are inside X(S) for C2 x C_(k*s0)
    restricted to <sigma, tau^k>: sigma a_i = a_i + b_(i+1) - b_i for i < k and
    sigma a_k = a_k + tau b_1 - b_k, so the vectors form one chain of length
    k*s0 on which tau moves k steps. Basis order: the a-chain, the b-chain, c.
    """
    if k < 1:
        raise FamilyError("k must be positive")
    G = family_group(s0)
    n = k * s0
    sigma, tau = _chain_matrices(n, k)

    def lab(letter, j):
        m, i = divmod(j, k)
        return f"{_tau_power(m)}{letter}{i + 1}" if k > 1 else f"{_tau_power(m)}{letter}"

    labels = [lab("a", j) for j in range(n)] + [lab("b", j) for j in range(n)] + ["c"]
    return GLattice(G, 2 * n + 1, {"sigma": IntMatrix.from_rows(sigma), "tau": IntMatrix.from_rows(tau)}, tuple(labels))


def literal_copies_XS(s0: int, k: int) -> GLattice:
    """k independent copies of the a- and b-blocks sharing c (no linking between copies)."""
    return ind_copies(build_XS(s0), list(range(2 * s0)), [2 * s0], k)


def build_XQ(s0: int) -> GLattice:
    G = family_group(s0)
    ZG = regular_module(G)
    XQ = direct_sum(ZG, trivial_lattice(G), ZG)
    labels = [f"s[{l}]" for l in ZG.labels] + ["t"] + [f"r[{l}]" for l in ZG.labels]
    return GLattice(G, XQ.rank, XQ.action, tuple(labels))


def restriction_map(s0: int) -> GLatticeMap:
    """X(Q) -> X(S): first Z[G] onto the orbit of b, Z onto c, second Z[G] onto the orbit of a."""
    XS, XQ = build_XS(s0), build_XQ(s0)
    G = XS.group
    order = G.order
    b = tuple(int(i == s0) for i in range(XS.rank))
    a = tuple(int(i == 0) for i in range(XS.rank))
    c = tuple(int(i == 2 * s0) for i in range(XS.rank))
    ZG = regular_module(G)
    # regular module basis is indexed by coset representatives, which are the elements in order
    reps = [G.element_name(g) for g in range(order)]
    assert list(ZG.labels) == reps
    cols = [XS.act(g).apply(b) for g in range(order)] + [c] + [XS.act(g).apply(a) for g in range(order)]
    M = IntMatrix.from_columns(cols, rows=XS.rank)
    return GLatticeMap(XQ, XS, M)


def build_XT(s0: int) -> tuple[GLattice, GLatticeMap]:
    """Kernel of the restriction map with its induced action, and the inclusion into X(Q)."""
    rho = restriction_map(s0)
    K = kernel_basis(rho.matrix)
    XT = sublattice_action(rho.source, K, tuple(f"t{i}" for i in range(K.cols)))
    return XT, GLatticeMap(XT, rho.source, K)


@dataclass(frozen=True)
class Pi0Dual:
    XP: GLattice
    XTprime: GLattice
    character_map: GLatticeMap  # XTprime -> XP
    relations: IntMatrix  # relation sublattice inside Z[G] + Z[G/<sigma>], as columns
    section: IntMatrix  # lift of the XTprime basis into Z[G] + Z[G/<sigma>]

    @property
    def cokernel(self) -> FiniteAbelianGroup:
        return cokernel(self.character_map.matrix)


def _group_ring_multiplier(ZG: GLattice, terms: list[tuple[int, int]]) -> IntMatrix:
    # multiplication by sum c g on Z[G]; terms are (g, c) and may repeat g
    out = IntMatrix.zeros(ZG.rank, ZG.rank)
    for g, c in terms:
        out = out + ZG.act(g).scale(c)
    return out


def build_pi0_dual(s: int, s0: int, m: int, epsilon: int = 1) -> Pi0Dual:
    """Character map of P = R_{M/K} G_m -> T', beta -> (tau(beta)/beta^m, N_sigma(beta)).

    X(T') is Z[G] e_p + Z[G/<sigma>] e_q modulo the G-orbit of
    (1 + sigma) e_p - (tau - m) e_q; the map sends e_p to tau - m and e_q to 1 + sigma.
    """
    TorusFamilyParams(s, s0, m, epsilon)
    G = family_group(s0)
    e = G.identity
    sigma, tau = G.generator_index("sigma"), G.generator_index("tau")
    ZG = regular_module(G)
    sig_sub = G.closure([sigma])
    ZGs = permutation_module(G, sig_sub)
    V = direct_sum(ZG, ZGs)
    n_p, n_q = ZG.rank, ZGs.rank
    # relation vector: (1 + sigma) e_p - (tau - m) e_q
    rel = [0] * (n_p + n_q)
    rel[e] += 1
    rel[sigma] += 1
    coset_of = {}
    for k, (rep, coset) in enumerate(coset_representatives(G, sig_sub)):
        for x in coset:
            coset_of[x] = k
    rel[n_p + coset_of[tau]] -= 1
    rel[n_p + coset_of[e]] += m
    orbit = [V.act(g).apply(rel) for g in range(G.order)]
    R = image_basis(IntMatrix.from_columns(orbit, rows=V.rank))
    if any(d != 1 for d in smith_diagonal(R)):
        raise FamilyError("relation sublattice is not saturated; the quotient has torsion")
    # R is saturated, so U R V = [I; 0] and the last rows of U give quotient coordinates
    nf = smith_normal_form(R)
    Uinv = solve_integer(nf.U, IntMatrix.identity(V.rank))
    r = R.cols
    section = IntMatrix.from_columns([Uinv.col(j) for j in range(r, V.rank)], rows=V.rank)
    quotient_coords = nf.U.submatrix(range(r, V.rank), range(V.rank))  # V -> quotient coordinates
    action = {name: quotient_coords @ A @ section for name, A in V.action.items()}
    XTp = GLattice(G, V.rank - r, action, tuple(f"t'{i}" for i in range(V.rank - r)))
    # character map on V: e_p -> tau - m, e_q -> 1 + sigma (well defined on cosets of <sigma>)
    to_P_p = _group_ring_multiplier(ZG, [(tau, 1), (e, -m)])
    to_P_q_cols = []
    one_plus_sigma = [0] * n_p
    one_plus_sigma[e] += 1
    one_plus_sigma[sigma] += 1
    for rep, _ in coset_representatives(G, sig_sub):
        to_P_q_cols.append(ZG.act(rep).apply(one_plus_sigma))
    to_P = hstack([to_P_p, IntMatrix.from_columns(to_P_q_cols, rows=n_p)])
    if not (to_P @ R).is_zero():
        raise FamilyError("character map does not vanish on the relations")
    chi = GLatticeMap(XTp, ZG, to_P @ section)
    return Pi0Dual(ZG, XTp, chi, R, section)


def kernel_order_check(s: int, s0: int, m: int) -> dict:
    pi0 = build_pi0_dual(s, s0, m)
    coker = pi0.cokernel
    expected = m**s0 - 1
    two_part = coker.p_part(2).order
    return {
        "cokernel": str(coker),
        "order": coker.order,
        "expected_order": expected,
        "two_part_order": two_part,
        "ok": coker.is_cyclic and coker.order == expected and two_part == 2**s,
    }


def mutated_XS(s0: int) -> GLattice:
    """X(S) with sigma b = -b instead of -b + c."""
    XS = build_XS(s0)
    sig = XS.action["sigma"].to_lists()
    for i in range(s0):
        sig[2 * s0][s0 + i] = 0
    return GLattice(XS.group, XS.rank, {"sigma": IntMatrix.from_rows(sig), "tau": XS.action["tau"]}, XS.labels)


@dataclass(frozen=True)
class FamilyLattices:
    params: TorusFamilyParams
    group: FiniteGroup
    XP: GLattice
    XQ: GLattice
    XS: GLattice
    XT: GLattice
    XTprime: GLattice
    restriction: GLatticeMap  # XQ -> XS
    inclusion: GLatticeMap  # XT -> XQ
    pi0_dual: GLatticeMap  # XTprime -> XP


def build_family(params: TorusFamilyParams) -> FamilyLattices:
    s0 = params.s0
    XS = build_XS(s0)
    rho = restriction_map(s0)
    XT, incl = build_XT(s0)
    pi0 = build_pi0_dual(params.s, s0, params.m, params.epsilon)
    return FamilyLattices(params, XS.group, pi0.XP, rho.source, XS, XT, pi0.XTprime, rho, incl, pi0.character_map)


@dataclass
class ReportItem:
    name: str
    ok: bool
    detail: str = ""
    failing_subgroup: list[str] | None = None

    def to_json(self) -> dict:
        out = {"name": self.name, "ok": self.ok, "detail": self.detail}
        if self.failing_subgroup is not None:
            out["failing_subgroup"] = self.failing_subgroup
        return out


@dataclass
class FamilyReport:
    params: TorusFamilyParams
    items: list[ReportItem] = field(default_factory=list)
    action_table: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(i.ok for i in self.items)

    def to_json(self) -> dict:
        p = self.params
        return {
            "params": {"s": p.s, "s0": p.s0, "m": p.m, "epsilon": p.epsilon},
            "ok": self.ok,
            "items": [i.to_json() for i in self.items],
            "action": self.action_table,
        }

    def to_text(self) -> str:
        p = self.params
        lines = [f"s={p.s} s0={p.s0} m={p.m} epsilon={p.epsilon:+d}"]
        for i in self.items:
            extra = f" (fails at {{{', '.join(i.failing_subgroup)}}})" if i.failing_subgroup else ""
            lines.append(f"  [{'PASS' if i.ok else 'FAIL'}] {i.name}: {i.detail}{extra}")
        return "\n".join(lines)


def _flasque_item(name: str, X: GLattice) -> ReportItem:
    sweep = is_flasque(X)
    w = sweep.witness
    if w is None:
        return ReportItem(name, True, f"trivial on all {len(sweep.reports)} subgroups")
    names = [X.group.element_name(h) for h in w.subgroup]
    return ReportItem(name, False, f"degree -1 group {w.result}", names)


def verify_family(params: TorusFamilyParams, mutate: bool = False) -> FamilyReport:
    """Flasqueness, resolution criterion, kernel order and the k-copy variants."""
    s0 = params.s0
    XS = mutated_XS(s0) if mutate else build_XS(s0)
    report = FamilyReport(params, action_table=XS.describe_action("sigma") + XS.describe_action("tau"))
    report.items.append(_flasque_item("X(S) flasque", XS))
    if mutate:
        return report
    rho = restriction_map(s0)
    XT, incl = build_XT(s0)
    check = check_flasque_resolution(XT, rho.source, XS, incl.matrix, rho.matrix)
    report.items.append(
        ReportItem(
            "flasque resolution criterion",
            check.ok,
            "exact, X(Q) permutation, dual invariants onto for every subgroup"
            if check.ok
            else "; ".join(check.failures()),
        )
    )
    ko = kernel_order_check(params.s, s0, params.m)
    report.items.append(
        ReportItem(
            "kernel order",
            ko["ok"],
            f"coker = {ko['cokernel']}, expected cyclic of order {ko['expected_order']} with 2-part {2 ** params.s}",
        )
    )
    for k in (2, 3):
        report.items.append(_flasque_item(f"{k} copies of a, b flasque", ind_XS(s0, k)))
    return report
