"""Tate cohomology in degrees -1, 0, 1 and flasque resolutions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ._parallel import fanout
from .exactlin import (
    FiniteAbelianGroup,
    IntMatrix,
    hstack,
    image_basis,
    is_surjective_onto,
    kernel_basis,
    solve_integer,
    sublattice_quotient,
    vstack,
)
from .gmod import (
    FiniteGroup,
    GLattice,
    GLatticeMap,
    LatticeError,
    Subgroup,
    check_subgroup,
    coset_representatives,
    direct_sum,
    dual,
    invariants_sublattice,
    permutation_module,
    subgroup_generators,
    subgroups,
    sublattice_action,
    trivial_lattice,
)

TRIVIAL = FiniteAbelianGroup()


@dataclass(frozen=True)
class CohomologyReport:
    group: FiniteGroup
    subgroup: Subgroup
    degree: int
    result: FiniteAbelianGroup

    def __post_init__(self):
        if self.result.free_rank:
            raise ValueError("Tate cohomology of a lattice is finite")

    def to_json(self) -> dict:
        return {
            "subgroup": list(self.subgroup),
            "subgroup_names": [self.group.element_name(h) for h in self.subgroup],
            "degree": self.degree,
            "result": str(self.result),
            **self.result.to_json(),
        }


def norm_matrix(X: GLattice, H: Sequence[int]) -> IntMatrix:
    H = check_subgroup(X.group, H)
    out = IntMatrix.zeros(X.rank, X.rank)
    for h in H:
        out = out + X.act(h)
    return out


def _augmentation_image(X: GLattice, H: Subgroup) -> IntMatrix:
    # I_H X is spanned by (s - 1)X for s in any generating set of H
    ident = IntMatrix.identity(X.rank)
    gens = subgroup_generators(X.group, H)
    return hstack([X.act(s) - ident for s in gens], rows=X.rank)


def tate_minus1(X: GLattice, H: Sequence[int]) -> FiniteAbelianGroup:
    """ker(N_H) / I_H X."""
    H = check_subgroup(X.group, H)
    if len(H) == 1 or X.rank == 0:
        return TRIVIAL
    K = kernel_basis(norm_matrix(X, H))
    return sublattice_quotient(X.rank, K, _augmentation_image(X, H))


def tate_0(X: GLattice, H: Sequence[int]) -> FiniteAbelianGroup:
    """X^H / N_H X."""
    H = check_subgroup(X.group, H)
    if len(H) == 1 or X.rank == 0:
        return TRIVIAL
    return sublattice_quotient(X.rank, invariants_sublattice(X, H), norm_matrix(X, H))


def h1(X: GLattice, H: Sequence[int]) -> FiniteAbelianGroup:
    """Crossed homomorphisms H -> X modulo principal ones.

    Unknowns are f(g) for g != e, stacked in element order. A map with
    f(e) = 0 is a cocycle iff f(g s) = f(g) + g f(s) for every g in H and s in
    a generating set (induction on word length gives the remaining products).
    """
    G = X.group
    H = check_subgroup(G, H)
    n = X.rank
    if len(H) == 1 or n == 0:
        return TRIVIAL
    others = [h for h in H if h != G.identity]
    slot = {h: k for k, h in enumerate(others)}
    width = n * len(others)
    gens = subgroup_generators(G, H)
    rows: list[list[int]] = []
    for g in H:
        Ag = X.act(g)
        for s in gens:
            gs = G.mul(g, s)
            block = [[0] * width for _ in range(n)]
            # f(gs) - f(g) - g f(s) = 0
            if gs in slot:
                for i in range(n):
                    block[i][slot[gs] * n + i] += 1
            if g in slot:
                for i in range(n):
                    block[i][slot[g] * n + i] -= 1
            for i in range(n):
                for j in range(n):
                    block[i][slot[s] * n + j] -= Ag[i, j]
            rows.extend(block)
    Z1 = kernel_basis(IntMatrix.from_rows(rows, cols=width))
    ident = IntMatrix.identity(n)
    B1 = vstack([X.act(h) - ident for h in others])
    result = sublattice_quotient(width, Z1, B1)
    if result.free_rank:
        raise ArithmeticError("cocycles modulo coboundaries came out infinite")
    return result


def cohomology(X: GLattice, H: Sequence[int], degree: int) -> CohomologyReport:
    H = check_subgroup(X.group, H)
    fn = {-1: tate_minus1, 0: tate_0, 1: h1}.get(degree)
    if fn is None:
        raise ValueError("degree must be -1, 0 or 1")
    return CohomologyReport(X.group, H, degree, fn(X, H))


@dataclass(frozen=True)
class SubgroupSweep:
    """Outcome of a cohomology computation over every subgroup."""

    degree: int
    reports: tuple[CohomologyReport, ...]

    @property
    def ok(self) -> bool:
        return all(r.result.is_trivial for r in self.reports)

    def __bool__(self) -> bool:
        return self.ok

    @property
    def witness(self) -> CohomologyReport | None:
        return next((r for r in self.reports if not r.result.is_trivial), None)

    def to_json(self) -> dict:
        return {"ok": self.ok, "degree": self.degree, "subgroups": [r.to_json() for r in self.reports]}


def _sweep(X: GLattice, degree: int) -> SubgroupSweep:
    subs = subgroups(X.group)
    return SubgroupSweep(degree, tuple(fanout(lambda H: cohomology(X, H, degree), subs)))


def is_flasque(X: GLattice) -> SubgroupSweep:
    """Truthy iff the degree -1 Tate group vanishes for every subgroup."""
    return _sweep(X, -1)


def is_coflasque(X: GLattice) -> SubgroupSweep:
    """Truthy iff H^1 vanishes for every subgroup."""
    return _sweep(X, 1)


# ---------------------------------------------------------------- resolutions


@dataclass(frozen=True)
class FlasqueResolution:
    """0 -> X(T) -> X(Q) -> X(S) -> 0 on character lattices."""

    XT: GLattice
    XQ: GLattice
    XS: GLattice
    inclusion: GLatticeMap  # XT -> XQ
    projection: GLatticeMap  # XQ -> XS


@dataclass(frozen=True)
class ResolutionCheck:
    injective: bool
    composite_zero: bool
    kernel_equals_image: bool
    projection_surjective: bool
    q_permutation: bool
    surjectivity: tuple[tuple[Subgroup, bool], ...]
    xs_flasque: SubgroupSweep

    @property
    def exact(self) -> bool:
        return self.injective and self.composite_zero and self.kernel_equals_image and self.projection_surjective

    @property
    def ok(self) -> bool:
        return self.exact and self.q_permutation and all(f for _, f in self.surjectivity) and self.xs_flasque.ok

    def __bool__(self) -> bool:
        return self.ok

    def failures(self) -> list[str]:
        out = []
        for name in ("injective", "composite_zero", "kernel_equals_image", "projection_surjective", "q_permutation"):
            if not getattr(self, name):
                out.append(name)
        out += [f"dual invariants not surjective for H={list(H)}" for H, f in self.surjectivity if not f]
        if not self.xs_flasque.ok:
            out.append(f"X(S) not flasque at H={list(self.xs_flasque.witness.subgroup)}")
        return out

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "exact": self.exact,
            "injective": self.injective,
            "composite_zero": self.composite_zero,
            "kernel_equals_image": self.kernel_equals_image,
            "projection_surjective": self.projection_surjective,
            "q_permutation": self.q_permutation,
            "surjectivity": [{"subgroup": list(H), "ok": f} for H, f in self.surjectivity],
            "xs_flasque": self.xs_flasque.to_json(),
            "failures": self.failures(),
        }


def _is_permutation_matrix(A: IntMatrix) -> bool:
    return all(sorted(A.row(i)) == [0] * (A.cols - 1) + [1] for i in range(A.rows)) and all(
        sorted(A.col(j)) == [0] * (A.rows - 1) + [1] for j in range(A.cols)
    )


def _same_span(A: IntMatrix, B: IntMatrix) -> bool:
    try:
        return is_surjective_onto(A, B) and is_surjective_onto(B, A)
    except ValueError:
        return False


def check_flasque_resolution(
    XT: GLattice, XQ: GLattice, XS: GLattice, inclusion: IntMatrix, projection: IntMatrix
) -> ResolutionCheck:
    """Verify a flasque resolution given on characters.

    Raises LatticeError when a map is not equivariant; every other defect is
    reported as a failed flag.
    """
    GLatticeMap(XT, XQ, inclusion)
    GLatticeMap(XQ, XS, projection)
    injective = kernel_basis(inclusion).cols == 0
    composite_zero = (projection @ inclusion).is_zero()
    kernel_equals_image = _same_span(kernel_basis(projection), inclusion)
    projection_surjective = is_surjective_onto(projection, IntMatrix.identity(XS.rank)) if XS.rank else True
    q_perm = all(_is_permutation_matrix(A) for A in XQ.action.values())
    dQ, dT = dual(XQ), dual(XT)
    restrict_dual = inclusion.T  # X(Q)* -> X(T)*
    subs = subgroups(XT.group)

    def surj(H):
        target = invariants_sublattice(dT, H)
        image = restrict_dual @ invariants_sublattice(dQ, H)
        try:
            return is_surjective_onto(image, target)
        except ValueError:
            return False

    flags = tuple(zip(subs, fanout(surj, subs)))
    return ResolutionCheck(
        injective, composite_zero, kernel_equals_image, projection_surjective, q_perm, flags, is_flasque(XS)
    )


def check_resolution(res: FlasqueResolution) -> ResolutionCheck:
    return check_flasque_resolution(res.XT, res.XQ, res.XS, res.inclusion.matrix, res.projection.matrix)


def _orbit_sums(G: FiniteGroup, K: Subgroup, H: Subgroup) -> IntMatrix:
    # H-invariants of Z[G/K]: indicator vectors of H-orbits on the cosets
    cosets = coset_representatives(G, K)
    where = {x: k for k, (_, c) in enumerate(cosets) for x in c}
    seen, cols = set(), []
    for k, (rep, _) in enumerate(cosets):
        if k in seen:
            continue
        orbit = {where[G.mul(h, rep)] for h in H}
        seen |= orbit
        cols.append([int(i in orbit) for i in range(len(cosets))])
    return IntMatrix.from_columns(cols, rows=len(cosets))


def construct_flasque_resolution(XT: GLattice, minimize: bool = True) -> FlasqueResolution:
    """Flasque resolution of the torus with character lattice XT.

    On the dual side, take for each subgroup H and each basis vector y of the
    H-invariants of X(T)* the map Z[G/H] -> X(T)*, gH -> g y. The sum P of
    these is onto on H-invariants for every H. Dualizing 0 -> K -> P -> X(T)* -> 0
    gives X(T) -> P -> K*, and K* is flasque. With minimize, summands are
    dropped greedily while the invariant surjectivity survives.
    """
    G = XT.group
    dT = dual(XT)
    subs = subgroups(G)
    summands: list[tuple[Subgroup, tuple[int, ...]]] = []
    for H in subs:
        B = invariants_sublattice(dT, H)
        summands.extend((H, B.col(j)) for j in range(B.cols))
    inv_T = {H: invariants_sublattice(dT, H) for H in subs}

    def evaluation(chosen):
        cols = []
        for K, y in chosen:
            for rep, _ in coset_representatives(G, K):
                cols.append(dT.act(rep).apply(y))
        return IntMatrix.from_columns(cols, rows=XT.rank) if cols else IntMatrix.zeros(XT.rank, 0)

    def onto_invariants(chosen) -> bool:
        phi = evaluation(chosen)
        for H in subs:
            target = inv_T[H]
            off = 0
            pieces = []
            for K, _ in chosen:
                pieces.append(_orbit_sums(G, K, H))
            rows = sum(p.rows for p in pieces)
            cols = []
            for p in pieces:
                for j in range(p.cols):
                    c = [0] * rows
                    c[off:off + p.rows] = p.col(j)
                    cols.append(c)
                off += p.rows
            inv_P = IntMatrix.from_columns(cols, rows=rows) if cols else IntMatrix.zeros(rows, 0)
            if target.cols == 0:
                continue
            if inv_P.cols == 0 or not is_surjective_onto(phi @ inv_P, target):
                return False
        return True

    chosen = list(summands)
    if minimize:
        k = 0
        while k < len(chosen):
            trial = chosen[:k] + chosen[k + 1:]
            if onto_invariants(trial):
                chosen = trial
            else:
                k += 1
    blocks = [permutation_module(G, K) for K, _ in chosen]
    P = direct_sum(*blocks) if blocks else trivial_lattice(G, 0)
    phi = evaluation(chosen)  # P -> X(T)*
    Kb = kernel_basis(phi)
    Klat = sublattice_action(P, Kb)
    XS = dual(Klat)
    XS = GLattice(G, XS.rank, XS.action, tuple(f"s{i}" for i in range(XS.rank)))
    # P is a permutation lattice, so its dual has the same matrices
    XQ = GLattice(G, P.rank, P.action, P.labels)
    return FlasqueResolution(XT, XQ, XS, GLatticeMap(XT, XQ, phi.T), GLatticeMap(XQ, XS, Kb.T))
