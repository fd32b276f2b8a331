"""Independent reference computations and random generators shared by the tests."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, permutations
from math import gcd

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors
from sympy.ntheory import is_quad_residue

from flasque_kit.exactlin import FiniteAbelianGroup, IntMatrix, image_basis, kernel_basis, sublattice_quotient, vstack
from flasque_kit.gmod import (
    GLattice,
    GroupError,
    LatticeError,
    change_basis,
    character_lattice,
    direct_sum,
    group_from_abelian_invariants,
    group_from_permutations,
    permutation_module,
    sublattice_action,
    subgroups,
    trivial_lattice,
)

# ------------------------------------------------------------- linear algebra


def det_leibniz(rows: list[list[int]]) -> int:
    n = len(rows)
    total = 0
    for perm in permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = -1 if inversions % 2 else 1
        for i, j in enumerate(perm):
            term *= rows[i][j]
            if not term:
                break
        total += term
    return total


def determinant_divisors(M: IntMatrix) -> list[int]:
    """d_k = gcd of all k x k minors, k = 1..min(m, n)."""
    rows = M.to_lists()
    out = []
    for k in range(1, min(M.rows, M.cols) + 1):
        g = 0
        for r in combinations(range(M.rows), k):
            for c in combinations(range(M.cols), k):
                g = gcd(g, det_leibniz([[rows[i][j] for j in c] for i in r]))
        out.append(g)
    return out


def sympy_invariants(M: IntMatrix) -> list[int]:
    if M.rows == 0 or M.cols == 0:
        return []
    return [abs(int(x)) for x in invariant_factors(Matrix(M.to_lists()), domain=ZZ)]


def random_matrix(rng: random.Random, m: int, n: int, bound: int = 9, density: float = 0.8) -> IntMatrix:
    return IntMatrix.from_rows(
        [[rng.randint(-bound, bound) if rng.random() < density else 0 for _ in range(n)] for _ in range(m)], cols=n
    )


def random_unimodular(rng: random.Random, n: int, steps: int = 6) -> IntMatrix:
    rows = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(steps if n > 1 else 0):
        i, j = rng.sample(range(n), 2)
        k = rng.choice([-2, -1, 1, 2])
        rows[i] = [a + k * b for a, b in zip(rows[i], rows[j])]
    if n and rng.random() < 0.3:
        rows[0] = [-a for a in rows[0]]
    return IntMatrix.from_rows(rows, cols=n)


# --------------------------------------------------------------------- groups


def brute_force_subgroups(G) -> list[tuple[int, ...]]:
    """Every subset that is closed under the product; exponential, for tiny groups."""
    n = G.order
    others = [g for g in range(n) if g != G.identity]
    out = []
    for mask in range(1 << len(others)):
        H = [G.identity] + [others[i] for i in range(len(others)) if mask >> i & 1]
        s = set(H)
        if all(G.mul(a, b) in s for a in H for b in H):
            out.append(tuple(sorted(H)))
    return sorted(out, key=lambda h: (len(h), h))


def cyclic(n: int):
    return group_from_abelian_invariants([n], ["g"])


def symmetric3():
    return group_from_permutations({"r": (1, 2, 0), "s": (1, 0, 2)})


def dihedral8():
    return group_from_permutations({"r": (1, 2, 3, 0), "s": (0, 3, 2, 1)})


def quaternion8():
    # elements (sign, unit) with unit in 1, i, j, k; left multiplication by i and j
    units = {("1", "1"): (1, "1"), ("1", "i"): (1, "i"), ("1", "j"): (1, "j"), ("1", "k"): (1, "k"),
             ("i", "1"): (1, "i"), ("i", "i"): (-1, "1"), ("i", "j"): (1, "k"), ("i", "k"): (-1, "j"),
             ("j", "1"): (1, "j"), ("j", "i"): (-1, "k"), ("j", "j"): (-1, "1"), ("j", "k"): (1, "i")}
    elems = [(s, u) for s in (1, -1) for u in "1ijk"]
    idx = {e: i for i, e in enumerate(elems)}

    def left(q):
        perm = []
        for s, u in elems:
            t, w = units[(q, u)]
            perm.append(idx[(s * t, w)])
        return tuple(perm)

    return group_from_permutations({"i": left("i"), "j": left("j")})


SMALL_GROUPS = {
    "C2": lambda: cyclic(2),
    "C3": lambda: cyclic(3),
    "C4": lambda: cyclic(4),
    "C5": lambda: cyclic(5),
    "C6": lambda: cyclic(6),
    "C7": lambda: cyclic(7),
    "C8": lambda: cyclic(8),
    "C2xC2": lambda: group_from_abelian_invariants([2, 2], ["x", "y"]),
    "C2xC4": lambda: group_from_abelian_invariants([2, 4], ["x", "y"]),
    "C2xC2xC2": lambda: group_from_abelian_invariants([2, 2, 2], ["x", "y", "z"]),
    "S3": symmetric3,
    "D4": dihedral8,
    "Q8": quaternion8,
}

GROUPS_UP_TO_16 = {
    **SMALL_GROUPS,
    "C9": lambda: cyclic(9),
    "C10": lambda: cyclic(10),
    "C12": lambda: cyclic(12),
    "C16": lambda: cyclic(16),
    "C3xC3": lambda: group_from_abelian_invariants([3, 3], ["x", "y"]),
    "C2xC6": lambda: group_from_abelian_invariants([2, 6], ["x", "y"]),
    "C4xC4": lambda: group_from_abelian_invariants([4, 4], ["x", "y"]),
    "C2xC8": lambda: group_from_abelian_invariants([2, 8], ["x", "y"]),
    "C2xC2xC4": lambda: group_from_abelian_invariants([2, 2, 4], ["x", "y", "z"]),
    "D6": lambda: group_from_permutations({"r": (1, 2, 3, 4, 5, 0), "s": (0, 5, 4, 3, 2, 1)}),
}


# ------------------------------------------------------------------- lattices


def _sign_characters(G, rng):
    signs = {n: rng.choice([1, -1]) for n in G.generator_names}
    try:
        return character_lattice(G, signs)
    except LatticeError:
        return trivial_lattice(G)


def _augmentation_kernel(G, H):
    P = permutation_module(G, H)
    if P.rank == 1:
        return None
    K = kernel_basis(IntMatrix.from_rows([[1] * P.rank]))
    return sublattice_action(P, K)


def random_block(G, rng, room: int):
    subs = [H for H in subgroups(G) if G.order // len(H) <= room]
    choice = rng.random()
    if choice < 0.25:
        return trivial_lattice(G)
    if choice < 0.45:
        return _sign_characters(G, rng)
    H = rng.choice(subs)
    if choice < 0.75 or G.order // len(H) < 2 or G.order // len(H) - 1 > room:
        return permutation_module(G, H)
    return _augmentation_kernel(G, H) or permutation_module(G, H)


def random_stable_sublattice(X: GLattice, rng: random.Random) -> GLattice:
    """Full-rank G-stable sublattice: orbit span of a random vector plus c * X."""
    n = X.rank
    c = rng.choice([2, 3])
    v = [rng.randint(-2, 2) for _ in range(n)]
    cols = [tuple(c * int(i == j) for i in range(n)) for j in range(n)]
    cols += [X.act(g).apply(v) for g in range(X.group.order)]
    B = image_basis(IntMatrix.from_columns(cols, rows=n))
    return sublattice_action(X, B)


def random_lattice(G, rng: random.Random, max_rank: int = 4) -> GLattice:
    target = rng.randint(1, max_rank)
    blocks, rank = [], 0
    while rank < target:
        b = random_block(G, rng, target - rank)
        if b.rank + rank > max_rank:
            continue
        blocks.append(b)
        rank += b.rank
    X = direct_sum(*blocks)
    if rng.random() < 0.5:
        X = random_stable_sublattice(X, rng)
    return change_basis(X, random_unimodular(rng, X.rank))


# ---------------------------------------------------------------- cohomology


def naive_tate_minus1(X: GLattice, H) -> FiniteAbelianGroup:
    """ker(sum over H) modulo the span of (h - 1)x over every h in H and basis vector x."""
    n = X.rank
    N = IntMatrix.zeros(n, n)
    for h in H:
        N = N + X.act(h)
    K = kernel_basis(N)
    ident = IntMatrix.identity(n)
    gens = [(X.act(h) - ident).col(j) for h in H for j in range(n)]
    A = IntMatrix.from_columns(gens, rows=n) if gens else IntMatrix.zeros(n, 0)
    return sublattice_quotient(n, K, A)


def naive_h1(X: GLattice, H) -> FiniteAbelianGroup:
    """Crossed homomorphisms solving f(gh) = f(g) + g f(h) for every pair in H, modulo coboundaries."""
    G = X.group
    n = X.rank
    H = list(H)
    pos = {h: i for i, h in enumerate(H)}
    m = len(H) * n
    eqs = []
    for g in H:
        Ag = X.act(g)
        for h in H:
            gh = G.mul(g, h)
            for r in range(n):
                row = [0] * m
                row[pos[gh] * n + r] += 1
                row[pos[g] * n + r] -= 1
                for c in range(n):
                    row[pos[h] * n + c] -= Ag[r, c]
                eqs.append(row)
    Z = kernel_basis(IntMatrix.from_rows(eqs, cols=m))
    ident = IntMatrix.identity(n)
    B = vstack([X.act(h) - ident for h in H], cols=n)
    return sublattice_quotient(m, Z, B)


# ---------------------------------------------------------------- arithmetic


def vp(x: Fraction, p: int) -> int:
    v, a, b = 0, x.numerator, x.denominator
    while a % p == 0:
        a //= p
        v += 1
    while b % p == 0:
        b //= p
        v -= 1
    return v


def qp_square_by_residue(x: Fraction, p: int) -> bool:
    """Square test in Q_p using sympy's residue test (p odd) or the mod 8 rule lifted by brute force (p = 2)."""
    v = vp(x, p)
    if v % 2:
        return False
    u = x / Fraction(p) ** v
    if p == 2:
        mod = 64
        r = u.numerator * pow(u.denominator, -1, mod) % mod
        return any(y * y % mod == r for y in range(1, mod, 2))
    r = u.numerator * pow(u.denominator, -1, p) % p
    return is_quad_residue(r, p)
