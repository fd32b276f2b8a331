"""Finite groups by multiplication table, and integral representations of them."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Mapping, Sequence

from .exactlin import IntMatrix, block_diagonal, hstack, kernel_basis, solve_integer, vstack

MAX_GROUP_ORDER = 64

Subgroup = tuple[int, ...]  # sorted element indices


class GroupError(ValueError):
    pass


class LatticeError(ValueError):
    pass


# --------------------------------------------------------------------- groups


@dataclass(frozen=True)
class FiniteGroup:
    """A group given by its Cayley table: table[i][j] is the index of i*j."""

    table: tuple[tuple[int, ...], ...]
    generators: tuple[tuple[str, int], ...]

    def __post_init__(self):
        table = tuple(tuple(int(x) for x in row) for row in self.table)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "generators", tuple((str(n), int(i)) for n, i in self.generators))
        n = len(table)
        if n == 0:
            raise GroupError("empty group")
        if n > MAX_GROUP_ORDER:
            raise GroupError(f"group order {n} exceeds the cap {MAX_GROUP_ORDER}")
        full = set(range(n))
        for row in table:
            if len(row) != n or set(row) != full:
                raise GroupError("table rows must be permutations of the elements")
        for j in range(n):
            if {table[i][j] for i in range(n)} != full:
                raise GroupError("table columns must be permutations of the elements")
        ids = [e for e in range(n) if all(table[e][x] == x for x in range(n))]
        if not ids:
            raise GroupError("no identity element")
        for a in range(n):
            ta = table[a]
            for b in range(n):
                tab = table[ta[b]]
                tb = table[b]
                for c in range(n):
                    if tab[c] != ta[tb[c]]:
                        raise GroupError(f"table is not associative at ({a}, {b}, {c})")
        names = [name for name, _ in self.generators]
        if len(set(names)) != len(names):
            raise GroupError("generator names must be distinct")
        for name, g in self.generators:
            if not 0 <= g < n:
                raise GroupError(f"generator {name} has index {g} outside the group")
        if len(self.closure([g for _, g in self.generators])) != n:
            raise GroupError("generators do not generate the group")

    @property
    def order(self) -> int:
        return len(self.table)

    @cached_property
    def identity(self) -> int:
        return next(e for e in range(self.order) if self.table[e][e] == e)

    @cached_property
    def inverses(self) -> tuple[int, ...]:
        e = self.identity
        return tuple(next(y for y in range(self.order) if self.table[x][y] == e) for x in range(self.order))

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inv(self, a: int) -> int:
        return self.inverses[a]

    def generator_index(self, name: str) -> int:
        for n, g in self.generators:
            if n == name:
                return g
        raise KeyError(f"unknown generator {name!r}")

    @property
    def generator_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.generators)

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != self.identity:
            x = self.table[x][g]
            k += 1
        return k

    def closure(self, elements: Sequence[int]) -> Subgroup:
        """Subgroup generated by the given elements."""
        seen = {self.identity}
        queue = deque([self.identity])
        gens = list(dict.fromkeys(elements))
        while queue:
            x = queue.popleft()
            for g in gens:
                y = self.table[x][g]
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return tuple(sorted(seen))

    def is_subgroup(self, H: Sequence[int]) -> bool:
        s = set(H)
        if self.identity not in s:
            return False
        return all(self.table[a][b] in s for a in s for b in s)

    @cached_property
    def words(self) -> tuple[tuple[str, ...], ...]:
        """A shortest word in the generators for each element (breadth-first, right multiplication)."""
        out: dict[int, tuple[str, ...]] = {self.identity: ()}
        queue = deque([self.identity])
        while queue:
            x = queue.popleft()
            for name, g in self.generators:
                y = self.table[x][g]
                if y not in out:
                    out[y] = out[x] + (name,)
                    queue.append(y)
        return tuple(out[i] for i in range(self.order))

    def element_name(self, g: int) -> str:
        w = self.words[g]
        if not w:
            return "e"
        parts = []
        for name in w:
            if parts and parts[-1][0] == name:
                parts[-1][1] += 1
            else:
                parts.append([name, 1])
        return "*".join(n if k == 1 else f"{n}^{k}" for n, k in parts)

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "table": [list(r) for r in self.table],
            "generators": [{"name": n, "index": i} for n, i in self.generators],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FiniteGroup":
        table = data["table"]
        if "order" in data and int(data["order"]) != len(table):
            raise GroupError("declared order does not match the table")
        return cls(tuple(tuple(r) for r in table), tuple((g["name"], g["index"]) for g in data["generators"]))


def group_from_abelian_invariants(factors: Sequence[int], names: Sequence[str] | None = None) -> FiniteGroup:
    """Direct product of cyclic groups Z/n1 x Z/n2 x ...; elements in lexicographic order."""
    factors = [int(f) for f in factors]
    if not factors or any(f < 1 for f in factors):
        raise GroupError("factors must be positive")
    order = 1
    for f in factors:
        order *= f
    if order > MAX_GROUP_ORDER:
        raise GroupError(f"group order {order} exceeds the cap {MAX_GROUP_ORDER}")
    if names is None:
        names = [f"g{i}" for i in range(len(factors))]
    if len(names) != len(factors):
        raise GroupError("one name per factor")
    elems = list(product(*[range(f) for f in factors]))
    index = {e: i for i, e in enumerate(elems)}
    table = tuple(
        tuple(index[tuple((x + y) % f for x, y, f in zip(a, b, factors))] for b in elems) for a in elems
    )
    gens = []
    for k, name in enumerate(names):
        unit = tuple(int(i == k) % factors[k] for i in range(len(factors)))
        gens.append((name, index[unit]))
    return FiniteGroup(table, tuple(gens))


def group_from_permutations(perms: Mapping[str, Sequence[int]]) -> FiniteGroup:
    """Group generated by permutations (tuples of images); composition (p*q)(x) = p(q(x))."""
    gens = {name: tuple(p) for name, p in perms.items()}
    degree = len(next(iter(gens.values())))
    ident = tuple(range(degree))
    elems = [ident]
    seen = {ident: 0}
    i = 0
    while i < len(elems):
        x = elems[i]
        for p in gens.values():
            y = tuple(x[p[k]] for k in range(degree))
            if y not in seen:
                if len(elems) >= MAX_GROUP_ORDER:
                    raise GroupError(f"group order exceeds the cap {MAX_GROUP_ORDER}")
                seen[y] = len(elems)
                elems.append(y)
        i += 1
    table = tuple(tuple(seen[tuple(a[b[k]] for k in range(degree))] for b in elems) for a in elems)
    return FiniteGroup(table, tuple((name, seen[p]) for name, p in gens.items()))


def subgroups(G: FiniteGroup) -> list[Subgroup]:
    """All subgroups, ordered by size and then lexicographically."""
    if G.order > MAX_GROUP_ORDER:
        raise GroupError("order cap exceeded")
    found = {G.closure([g]) for g in range(G.order)}
    frontier = list(found)
    while frontier:
        nxt = []
        for H in frontier:
            hs = set(H)
            for g in range(G.order):
                if g not in hs:
                    K = G.closure(H + (g,))
                    if K not in found:
                        found.add(K)
                        nxt.append(K)
        frontier = nxt
    return sorted(found, key=lambda H: (len(H), H))


def check_subgroup(G: FiniteGroup, H: Sequence[int]) -> Subgroup:
    H = tuple(sorted(set(int(h) for h in H)))
    if any(not 0 <= h < G.order for h in H) or not G.is_subgroup(H):
        raise GroupError(f"{list(H)} is not a subgroup")
    return H


def subgroup_generators(G: FiniteGroup, H: Sequence[int]) -> list[int]:
    """A small generating set of H, picked greedily in index order."""
    gens: list[int] = []
    span = {G.identity}
    for h in sorted(H):
        if h not in span:
            gens.append(h)
            span = set(G.closure(gens))
    return gens


def is_cyclic_subgroup(G: FiniteGroup, H: Sequence[int]) -> bool:
    return any(G.element_order(h) == len(H) for h in H)


def coset_representatives(G: FiniteGroup, H: Sequence[int]) -> list[tuple[int, frozenset[int]]]:
    """Left cosets gH, each listed once with its smallest element as representative."""
    H = tuple(H)
    out, covered = [], set()
    for g in range(G.order):
        if g not in covered:
            coset = frozenset(G.mul(g, h) for h in H)
            covered |= coset
            out.append((g, coset))
    return out


def subgroup_as_group(G: FiniteGroup, H: Sequence[int]) -> tuple[FiniteGroup, tuple[int, ...]]:
    """H as a standalone FiniteGroup plus the embedding (new index -> old index)."""
    H = check_subgroup(G, H)
    pos = {h: i for i, h in enumerate(H)}
    table = tuple(tuple(pos[G.mul(a, b)] for b in H) for a in H)
    gens = tuple((G.element_name(g), pos[g]) for g in subgroup_generators(G, H))
    if not gens:
        gens = (("e", pos[G.identity]),)
    return FiniteGroup(table, gens), H


# ------------------------------------------------------------------- lattices


def _int_to_json(x: int):
    return x if -(2**53) < x < 2**53 else str(x)


def matrix_to_json(M: IntMatrix) -> list:
    return [[_int_to_json(x) for x in row] for row in M.to_lists()]


def matrix_from_json(rows, n_rows: int | None = None, n_cols: int | None = None) -> IntMatrix:
    M = IntMatrix.from_rows([[int(x) for x in r] for r in rows], cols=n_cols if not rows else None)
    if n_rows is not None and M.rows != n_rows:
        raise LatticeError(f"expected {n_rows} rows, got {M.rows}")
    if n_cols is not None and rows and M.cols != n_cols:
        raise LatticeError(f"expected {n_cols} columns, got {M.cols}")
    return M


@dataclass(frozen=True)
class GLattice:
    """Z^rank with G acting on column vectors through the generator matrices."""

    group: FiniteGroup
    rank: int
    action: Mapping[str, IntMatrix]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        action = {name: self.action[name] for name in self.group.generator_names if name in self.action}
        missing = set(self.group.generator_names) - set(action)
        extra = set(self.action) - set(self.group.generator_names)
        if missing or extra:
            raise LatticeError(f"action must cover exactly the generators (missing {sorted(missing)}, extra {sorted(extra)})")
        object.__setattr__(self, "action", action)
        labels = tuple(self.labels) or tuple(f"e{i}" for i in range(self.rank))
        if len(labels) != self.rank:
            raise LatticeError("one label per basis vector")
        object.__setattr__(self, "labels", labels)
        for name, A in action.items():
            if A.shape != (self.rank, self.rank):
                raise LatticeError(f"action of {name} has shape {A.shape}, expected {self.rank}x{self.rank}")
            if not A.is_unimodular():
                raise LatticeError(f"action of {name} is not unimodular")
        # the breadth-first construction of element matrices checks every table relation
        self.element_actions

    @cached_property
    def element_actions(self) -> tuple[IntMatrix, ...]:
        """Matrix of every group element.

        Built along right multiplication by generators and then checked on
        every edge of the Cayley graph: rho(x) rho(s) == rho(x s). That edge
        condition is equivalent to rho being a homomorphism.
        """
        G = self.group
        acts: dict[int, IntMatrix] = {G.identity: IntMatrix.identity(self.rank)}
        queue = deque([G.identity])
        while queue:
            x = queue.popleft()
            for name, g in G.generators:
                y = G.mul(x, g)
                if y not in acts:
                    acts[y] = acts[x] @ self.action[name]
                    queue.append(y)
        for x in range(G.order):
            for name, g in G.generators:
                if acts[x] @ self.action[name] != acts[G.mul(x, g)]:
                    raise LatticeError(
                        f"action violates the group law at {G.element_name(x)} * {name}"
                    )
        return tuple(acts[i] for i in range(G.order))

    def act(self, g: int) -> IntMatrix:
        return self.element_actions[g]

    def __eq__(self, other):
        if not isinstance(other, GLattice):
            return NotImplemented
        return (
            self.group == other.group
            and self.rank == other.rank
            and dict(self.action) == dict(other.action)
            and self.labels == other.labels
        )

    __hash__ = None

    def describe_action(self, name: str) -> list[str]:
        """Lines like 'sigma(a) = a - b + tau*b' in terms of the basis labels."""
        A = self.action[name]
        out = []
        for j, lab in enumerate(self.labels):
            terms = []
            for i, coeff in enumerate(A.col(j)):
                if coeff:
                    mag = "" if abs(coeff) == 1 else f"{abs(coeff)}*"
                    terms.append(("-" if coeff < 0 else "+", mag + self.labels[i]))
            rhs = " ".join(f"{s} {t}" for s, t in terms).lstrip("+ ") if terms else "0"
            if rhs.startswith("- "):
                rhs = "-" + rhs[2:]
            out.append(f"{name}({lab}) = {rhs}")
        return out

    def to_json(self) -> dict:
        return {
            "group": self.group.to_json(),
            "rank": self.rank,
            "action": {n: matrix_to_json(A) for n, A in self.action.items()},
            "labels": list(self.labels),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "GLattice":
        group = FiniteGroup.from_json(data["group"])
        rank = int(data["rank"])
        action = {n: matrix_from_json(rows, rank, rank) for n, rows in data["action"].items()}
        return cls(group, rank, action, tuple(data.get("labels") or ()))


@dataclass(frozen=True)
class GLatticeMap:
    """A G-equivariant homomorphism; matrix has shape (target.rank, source.rank)."""

    source: GLattice
    target: GLattice
    matrix: IntMatrix

    def __post_init__(self):
        if self.source.group != self.target.group:
            raise LatticeError("source and target live over different groups")
        if self.matrix.shape != (self.target.rank, self.source.rank):
            raise LatticeError(
                f"map matrix has shape {self.matrix.shape}, expected {(self.target.rank, self.source.rank)}"
            )
        for name in self.source.group.generator_names:
            if self.matrix @ self.source.action[name] != self.target.action[name] @ self.matrix:
                raise LatticeError(f"map is not equivariant for generator {name}")


def trivial_lattice(G: FiniteGroup, rank: int = 1) -> GLattice:
    return GLattice(G, rank, {n: IntMatrix.identity(rank) for n in G.generator_names})


def character_lattice(G: FiniteGroup, signs: Mapping[str, int]) -> GLattice:
    """Rank-one lattice on which each generator acts by the given sign."""
    return GLattice(G, 1, {n: IntMatrix.from_rows([[signs.get(n, 1)]]) for n in G.generator_names})


def permutation_module(G: FiniteGroup, H: Sequence[int]) -> GLattice:
    """Z[G/H] with G permuting left cosets."""
    H = check_subgroup(G, H)
    cosets = coset_representatives(G, H)
    where = {}
    for k, (_, coset) in enumerate(cosets):
        for x in coset:
            where[x] = k
    n = len(cosets)
    action = {}
    for name, g in G.generators:
        rows = [[0] * n for _ in range(n)]
        for k, (rep, _) in enumerate(cosets):
            rows[where[G.mul(g, rep)]][k] = 1
        action[name] = IntMatrix.from_rows(rows, cols=n)
    labels = tuple(f"{G.element_name(rep)}H" if len(H) > 1 else G.element_name(rep) for rep, _ in cosets)
    return GLattice(G, n, action, labels)


def regular_module(G: FiniteGroup) -> GLattice:
    return permutation_module(G, (G.identity,))


def _dual_label(label: str) -> str:
    return label[:-1] if label.endswith("*") else label + "*"


def dual(X: GLattice) -> GLattice:
    """Hom(X, Z): g acts by the transpose of the action of g^-1."""
    G = X.group
    action = {name: X.act(G.inv(g)).T for name, g in G.generators}
    return GLattice(G, X.rank, action, tuple(_dual_label(l) for l in X.labels))


def restrict(X: GLattice, H: Sequence[int]) -> GLattice:
    """X viewed as a lattice over the subgroup H (H becomes a standalone group)."""
    sub, embed = subgroup_as_group(X.group, H)
    action = {name: X.act(embed[g]) for name, g in sub.generators}
    return GLattice(sub, X.rank, action, X.labels)


def invariants_sublattice(X: GLattice, H: Sequence[int]) -> IntMatrix:
    """Primitive basis (as columns) of the H-fixed vectors."""
    G = X.group
    H = check_subgroup(G, H)
    gens = subgroup_generators(G, H)
    if not gens or X.rank == 0:
        return IntMatrix.identity(X.rank)
    ident = IntMatrix.identity(X.rank)
    return kernel_basis(vstack([X.act(h) - ident for h in gens]))


def direct_sum(*lattices: GLattice) -> GLattice:
    if not lattices:
        raise LatticeError("direct_sum needs at least one summand")
    G = lattices[0].group
    if any(X.group != G for X in lattices):
        raise LatticeError("summands live over different groups")
    action = {n: block_diagonal([X.action[n] for X in lattices]) for n in G.generator_names}
    labels = [l for X in lattices for l in X.labels]
    if len(set(labels)) != len(labels):
        labels = [f"{l}_{k}" for k, X in enumerate(lattices) for l in X.labels]
    return GLattice(G, sum(X.rank for X in lattices), action, tuple(labels))


def ind_copies(X: GLattice, replicated: Sequence[int], fixed: Sequence[int], k: int) -> GLattice:
    """Replace the replicated part of the basis by k copies sharing the fixed part.

    The fixed indices must span a sublattice stable under the group (their
    images never involve replicated vectors). Basis of the result: copy 1 of
    the replicated vectors, copy 2, ..., then the fixed vectors.
    """
    replicated, fixed = list(replicated), list(fixed)
    if sorted(replicated + fixed) != list(range(X.rank)):
        raise LatticeError("replicated and fixed indices must partition the basis")
    if k < 1:
        raise LatticeError("k must be positive")
    for name, A in X.action.items():
        if any(A[i, j] for i in replicated for j in fixed):
            raise LatticeError(f"fixed part is not stable under {name}")
    if k == 1 and replicated + fixed == list(range(X.rank)):
        return X
    nr, nf = len(replicated), len(fixed)
    n = k * nr + nf
    action = {}
    for name, A in X.action.items():
        rows = [[0] * n for _ in range(n)]
        for c in range(k):
            off = c * nr
            for a, i in enumerate(replicated):
                for b, j in enumerate(replicated):
                    rows[off + a][off + b] = A[i, j]
            for a, i in enumerate(fixed):
                for b, j in enumerate(replicated):
                    rows[k * nr + a][off + b] = A[i, j]
        for a, i in enumerate(fixed):
            for b, j in enumerate(fixed):
                rows[k * nr + a][k * nr + b] = A[i, j]
        action[name] = IntMatrix.from_rows(rows, cols=n)
    labels = [f"{X.labels[i]}_{c + 1}" for c in range(k) for i in replicated] + [X.labels[i] for i in fixed]
    return GLattice(X.group, n, action, tuple(labels))


def change_basis(X: GLattice, P: IntMatrix) -> GLattice:
    """Same lattice in the basis given by the columns of the unimodular matrix P."""
    if not P.is_unimodular() or P.rows != X.rank:
        raise LatticeError("change of basis must be unimodular")
    action = {n: solve_integer(P, A @ P) for n, A in X.action.items()}
    return GLattice(X.group, X.rank, action)


def sublattice_action(X: GLattice, B: IntMatrix, labels: Sequence[str] = ()) -> GLattice:
    """The G-stable sublattice spanned by the (independent) columns of B, in that basis."""
    action = {n: solve_integer(B, A @ B) for n, A in X.action.items()}
    return GLattice(X.group, B.cols, action, tuple(labels))


# ------------------------------------------------------------ finite modules


@dataclass(frozen=True)
class FiniteGModule:
    """A finite abelian group Z/n1 + ... + Z/nt with a G-action by integer matrices.

    Column j of a matrix is the image of the j-th canonical generator; row i
    is read modulo n_i.
    """

    group: FiniteGroup
    invariant_factors: tuple[int, ...]
    action: Mapping[str, IntMatrix]

    def __post_init__(self):
        f = tuple(int(n) for n in self.invariant_factors)
        object.__setattr__(self, "invariant_factors", f)
        if any(n < 2 for n in f):
            raise LatticeError("invariant factors must be >= 2")
        t = len(f)
        action = {}
        for name in self.group.generator_names:
            A = self.action[name]
            if A.shape != (t, t):
                raise LatticeError(f"action of {name} has the wrong shape")
            action[name] = self._reduce(A)
            for i in range(t):
                for j in range(t):
                    if (f[j] * A[i, j]) % f[i]:
                        raise LatticeError(f"action of {name} is not well defined on Z/{f[j]} -> Z/{f[i]}")
        object.__setattr__(self, "action", action)
        self.element_actions

    def _reduce(self, A: IntMatrix) -> IntMatrix:
        f = self.invariant_factors
        return IntMatrix.from_rows([[A[i, j] % f[i] for j in range(A.cols)] for i in range(A.rows)], cols=A.cols)

    @property
    def order(self) -> int:
        out = 1
        for n in self.invariant_factors:
            out *= n
        return out

    @cached_property
    def element_actions(self) -> tuple[IntMatrix, ...]:
        G = self.group
        t = len(self.invariant_factors)
        acts = {G.identity: IntMatrix.identity(t)}
        queue = deque([G.identity])
        while queue:
            x = queue.popleft()
            for name, g in G.generators:
                y = G.mul(x, g)
                if y not in acts:
                    acts[y] = self._reduce(acts[x] @ self.action[name])
                    queue.append(y)
        for x in range(G.order):
            for name, g in G.generators:
                if self._reduce(acts[x] @ self.action[name]) != acts[G.mul(x, g)]:
                    raise LatticeError(f"action violates the group law at {G.element_name(x)} * {name}")
        return tuple(acts[i] for i in range(G.order))


@dataclass(frozen=True)
class QuasitrivialCover:
    P: GLattice
    projection: IntMatrix  # t x rank(P), rows read modulo the invariant factors
    XT: GLattice
    inclusion: GLatticeMap  # XT -> P
    stabilizers: tuple[Subgroup, ...]


def quasitrivial_cover(A: FiniteGModule) -> QuasitrivialCover:
    """Permutation lattice P onto A and its kernel lattice.

    For each canonical generator chi_i of A, P gets a summand Z[G/Stab(chi_i)]
    mapping the coset g*Stab to g*chi_i.
    """
    G = A.group
    f = A.invariant_factors
    t = len(f)
    blocks, proj_cols, stabs = [], [], []
    for i in range(t):
        e_i = tuple(int(k == i) for k in range(t))
        stab = tuple(g for g in range(G.order) if A.element_actions[g].col(i) == e_i)
        stabs.append(stab)
        blocks.append(permutation_module(G, stab))
        for rep, _ in coset_representatives(G, stab):
            proj_cols.append(A.element_actions[rep].col(i))
    P = direct_sum(*blocks) if blocks else trivial_lattice(G, 0)
    N = P.rank
    proj = IntMatrix.from_columns(proj_cols, rows=t) if proj_cols else IntMatrix.zeros(t, 0)
    # kernel of Z^N -> (+) Z/n_i: solve proj x = D y and keep x
    D = IntMatrix.diagonal(f)
    K = kernel_basis(hstack([proj, -D]))
    B = K.submatrix(range(N), range(K.cols))
    XT = sublattice_action(P, B, tuple(f"t{i}" for i in range(B.cols)))
    return QuasitrivialCover(P, proj, XT, GLatticeMap(XT, P, B), tuple(stabs))
