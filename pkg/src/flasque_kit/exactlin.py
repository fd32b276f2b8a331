"""Exact integer linear algebra.

Everything here works on Python ints, so there is no overflow and no
rounding. Matrices are immutable; algorithms copy into nested lists,
work in place, and wrap the result again.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Sequence


class ContainmentError(ValueError):
    """A vector that should lie in a lattice does not."""

    def __init__(self, message: str, column: int):
        super().__init__(message)
        self.column = column


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: tuple[int, ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("negative dimension")
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} entries, "
                f"got {len(self.entries)}"
            )
        for x in self.entries:
            if not isinstance(x, int) or isinstance(x, bool):
                raise TypeError(f"matrix entries must be int, got {type(x).__name__}")

    # construction

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise ValueError("ragged rows")
        return cls(len(rows), cols, tuple(int(x) for r in rows for x in r))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], rows: int | None = None) -> "IntMatrix":
        columns = [list(c) for c in columns]
        if rows is None:
            rows = len(columns[0]) if columns else 0
        return cls.from_rows([[c[i] for c in columns] for i in range(rows)], cols=len(columns))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)))

    @classmethod
    def diagonal(cls, diag: Sequence[int], rows: int | None = None, cols: int | None = None) -> "IntMatrix":
        rows = len(diag) if rows is None else rows
        cols = len(diag) if cols is None else cols
        out = [[0] * cols for _ in range(rows)]
        for i, d in enumerate(diag):
            out[i][i] = d
        return cls.from_rows(out, cols=cols)

    # access

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple[int, ...]:
        return self.entries[i * self.cols:(i + 1) * self.cols]

    def col(self, j: int) -> tuple[int, ...]:
        return self.entries[j::self.cols] if self.cols else ()

    def to_lists(self) -> list[list[int]]:
        return [list(self.row(i)) for i in range(self.rows)]

    def columns(self) -> list[tuple[int, ...]]:
        return [self.col(j) for j in range(self.cols)]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __repr__(self) -> str:
        return f"IntMatrix({self.to_lists()!r})"

    # arithmetic

    @property
    def T(self) -> "IntMatrix":
        return IntMatrix.from_rows([self.col(j) for j in range(self.cols)], cols=self.rows)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        ocols = other.columns()
        out = []
        for i in range(self.rows):
            r = self.row(i)
            out.append([sum(a * b for a, b in zip(r, c) if a) for c in ocols])
        return IntMatrix.from_rows(out, cols=other.cols)

    def apply(self, v: Sequence[int]) -> tuple[int, ...]:
        if len(v) != self.cols:
            raise ValueError("vector length mismatch")
        return tuple(sum(a * b for a, b in zip(self.row(i), v) if a) for i in range(self.rows))

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return IntMatrix(self.rows, self.cols, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return IntMatrix(self.rows, self.cols, tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(-a for a in self.entries))

    def scale(self, k: int) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(k * a for a in self.entries))

    def hstack(self, *others: "IntMatrix") -> "IntMatrix":
        return hstack([self, *others])

    def vstack(self, *others: "IntMatrix") -> "IntMatrix":
        return vstack([self, *others])

    def submatrix(self, rows: Iterable[int], cols: Iterable[int]) -> "IntMatrix":
        cols = list(cols)
        return IntMatrix.from_rows([[self[i, j] for j in cols] for i in rows], cols=len(cols))

    def is_zero(self) -> bool:
        return not any(self.entries)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def det(self) -> int:
        """Determinant by fraction-free (Bareiss) elimination."""
        if not self.is_square():
            raise ValueError("determinant of a non-square matrix")
        n = self.rows
        if n == 0:
            return 1
        a = self.to_lists()
        sign, prev = 1, 1
        for k in range(n - 1):
            if a[k][k] == 0:
                for i in range(k + 1, n):
                    if a[i][k]:
                        a[k], a[i] = a[i], a[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            prev = a[k][k]
        return sign * a[n - 1][n - 1]

    def is_unimodular(self) -> bool:
        return self.is_square() and abs(self.det()) == 1


def hstack(mats: Sequence[IntMatrix], rows: int | None = None) -> IntMatrix:
    if not mats:
        return IntMatrix.zeros(rows or 0, 0)
    r = mats[0].rows
    if any(m.rows != r for m in mats):
        raise ValueError("hstack needs equal row counts")
    return IntMatrix.from_rows(
        [[x for m in mats for x in m.row(i)] for i in range(r)],
        cols=sum(m.cols for m in mats),
    )


def vstack(mats: Sequence[IntMatrix], cols: int | None = None) -> IntMatrix:
    if not mats:
        return IntMatrix.zeros(0, cols or 0)
    c = mats[0].cols
    if any(m.cols != c for m in mats):
        raise ValueError("vstack needs equal column counts")
    return IntMatrix(sum(m.rows for m in mats), c, tuple(x for m in mats for x in m.entries))


def block_diagonal(mats: Sequence[IntMatrix]) -> IntMatrix:
    n_rows = sum(m.rows for m in mats)
    n_cols = sum(m.cols for m in mats)
    out = [[0] * n_cols for _ in range(n_rows)]
    r0 = c0 = 0
    for m in mats:
        for i in range(m.rows):
            out[r0 + i][c0:c0 + m.cols] = m.row(i)
        r0 += m.rows
        c0 += m.cols
    return IntMatrix.from_rows(out, cols=n_cols)


def _nearest_quotient(a: int, b: int) -> int:
    # q with |a - q*b| <= |b|/2
    q, r = divmod(a, b)
    if 2 * abs(r) > abs(b):
        q += 1 if (r > 0) == (b > 0) else -1
    return q


# ---------------------------------------------------------------- Smith form


@dataclass(frozen=True)
class NormalFormResult:
    S: IntMatrix
    U: IntMatrix
    V: IntMatrix

    @property
    def diagonal(self) -> tuple[int, ...]:
        return tuple(self.S[i, i] for i in range(min(self.S.rows, self.S.cols)))

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d)


def _snf_in_place(a: list[list[int]], m: int, n: int, u: list[list[int]] | None, v: list[list[int]] | None) -> None:
    """Diagonalize a (m x n) in place. u collects row ops, v column ops."""

    def swap_rows(i, j):
        if i != j:
            a[i], a[j] = a[j], a[i]
            if u is not None:
                u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        if i != j:
            for r in a:
                r[i], r[j] = r[j], r[i]
            if v is not None:
                for r in v:
                    r[i], r[j] = r[j], r[i]

    def add_row(dst, src, k):  # row_dst += k * row_src
        if k:
            rs, rd = a[src], a[dst]
            for j in range(n):
                if rs[j]:
                    rd[j] += k * rs[j]
            if u is not None:
                us, ud = u[src], u[dst]
                for j in range(m):
                    if us[j]:
                        ud[j] += k * us[j]

    def add_col(dst, src, k):  # col_dst += k * col_src
        if k:
            for r in a:
                if r[src]:
                    r[dst] += k * r[src]
            if v is not None:
                for r in v:
                    if r[src]:
                        r[dst] += k * r[src]

    for t in range(min(m, n)):
        best = None
        for i in range(t, m):
            row = a[i]
            for j in range(t, n):
                x = row[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            return
        swap_rows(t, best[1])
        swap_cols(t, best[2])
        while True:
            p = a[t][t]
            dirty = False
            for i in range(t + 1, m):
                if a[i][t]:
                    add_row(i, t, -_nearest_quotient(a[i][t], p))
                    dirty = dirty or a[i][t] != 0
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -_nearest_quotient(a[t][j], p))
                    dirty = dirty or a[t][j] != 0
            if dirty:
                # a remainder smaller than the pivot survived; promote it
                cand = [(abs(a[i][t]), 0, i) for i in range(t + 1, m) if a[i][t]]
                cand += [(abs(a[t][j]), 1, j) for j in range(t + 1, n) if a[t][j]]
                _, kind, k = min(cand)
                if kind == 0:
                    swap_rows(t, k)
                else:
                    swap_cols(t, k)
                continue
            bad = None
            for i in range(t + 1, m):
                row = a[i]
                for j in range(t + 1, n):
                    if row[j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(t, bad, 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            if u is not None:
                u[t] = [-x for x in u[t]]


def smith_normal_form(M: IntMatrix) -> NormalFormResult:
    """Smith normal form with transforms, U @ M @ V == S.

    Pivots are the smallest nonzero entry of the remaining block, ties
    broken in row-major order, so the output is a function of M alone.
    """
    m, n = M.shape
    a = M.to_lists()
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]
    _snf_in_place(a, m, n, u, v)
    return NormalFormResult(
        IntMatrix.from_rows(a, cols=n), IntMatrix.from_rows(u, cols=m), IntMatrix.from_rows(v, cols=n)
    )


def smith_diagonal(M: IntMatrix) -> tuple[int, ...]:
    """Diagonal of the Smith form, skipping the transforms."""
    m, n = M.shape
    a = M.to_lists()
    _snf_in_place(a, m, n, None, None)
    return tuple(a[i][i] for i in range(min(m, n)))


# ----------------------------------------------------------- abelian groups


@dataclass(frozen=True)
class FiniteAbelianGroup:
    """Z^free_rank + Z/d1 + ... + Z/dk with d1 | d2 | ... and every di >= 2."""

    invariant_factors: tuple[int, ...] = ()
    free_rank: int = 0

    def __post_init__(self):
        object.__setattr__(self, "invariant_factors", tuple(int(d) for d in self.invariant_factors))
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        f = self.invariant_factors
        if any(d < 2 for d in f):
            raise ValueError(f"invariant factors must be >= 2, got {f}")
        if any(f[i + 1] % f[i] for i in range(len(f) - 1)):
            raise ValueError(f"invariant factors must form a divisibility chain, got {f}")

    @classmethod
    def from_orders(cls, orders: Iterable[int], free_rank: int = 0) -> "FiniteAbelianGroup":
        """Normalize an arbitrary direct sum of cyclic groups Z/n (n = 0 means Z)."""
        orders = [abs(int(n)) for n in orders]
        free_rank += sum(1 for n in orders if n == 0)
        finite = [n for n in orders if n > 1]
        diag = smith_diagonal(IntMatrix.diagonal(finite))
        return cls(tuple(d for d in diag if d > 1), free_rank)

    @property
    def order(self) -> int | None:
        if self.free_rank:
            return None
        out = 1
        for d in self.invariant_factors:
            out *= d
        return out

    @property
    def is_trivial(self) -> bool:
        return not self.invariant_factors and not self.free_rank

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    @property
    def is_cyclic(self) -> bool:
        return len(self.invariant_factors) + self.free_rank <= 1

    def __add__(self, other: "FiniteAbelianGroup") -> "FiniteAbelianGroup":
        return FiniteAbelianGroup.from_orders(
            self.invariant_factors + other.invariant_factors, self.free_rank + other.free_rank
        )

    def p_part(self, p: int) -> "FiniteAbelianGroup":
        """The p-primary torsion subgroup."""
        out = []
        for d in self.invariant_factors:
            q = 1
            while d % p == 0:
                d //= p
                q *= p
            out.append(q)
        return FiniteAbelianGroup.from_orders(out)

    def __str__(self) -> str:
        parts = [f"Z/{d}" for d in self.invariant_factors]
        if self.free_rank == 1:
            parts.insert(0, "Z")
        elif self.free_rank > 1:
            parts.insert(0, f"Z^{self.free_rank}")
        return " + ".join(parts) if parts else "trivial"

    def to_json(self) -> dict:
        return {"invariant_factors": list(self.invariant_factors), "free_rank": self.free_rank}

    @classmethod
    def from_json(cls, data: dict) -> "FiniteAbelianGroup":
        return cls(tuple(int(d) for d in data["invariant_factors"]), int(data["free_rank"]))


# ------------------------------------------------------- kernels and images


def _column_echelon(M: IntMatrix) -> tuple[list[list[int]], list[list[int]], int]:
    """Unimodular column reduction M @ V = [H | 0] with H of full column rank.

    Returns (columns of M @ V, columns of V, rank).
    """
    m, n = M.shape
    ac = [list(M.col(j)) for j in range(n)]
    vc = [[int(i == j) for i in range(n)] for j in range(n)]
    r = 0
    for i in range(m):
        if r == n:
            break
        while True:
            nz = [j for j in range(r, n) if ac[j][i]]
            if not nz:
                break
            p = min(nz, key=lambda j: abs(ac[j][i]))
            if len(nz) == 1:
                ac[r], ac[p] = ac[p], ac[r]
                vc[r], vc[p] = vc[p], vc[r]
                r += 1
                break
            piv_a, piv_v, pv = ac[p], vc[p], ac[p][i]
            for j in nz:
                if j == p:
                    continue
                q = _nearest_quotient(ac[j][i], pv)
                cj, vj = ac[j], vc[j]
                for k in range(i, m):
                    if piv_a[k]:
                        cj[k] -= q * piv_a[k]
                for k in range(n):
                    if piv_v[k]:
                        vj[k] -= q * piv_v[k]
    return ac, vc, r


def _primitive(v: list[int]) -> list[int]:
    g = 0
    for x in v:
        g = gcd(g, x)
    if g > 1:
        v = [x // g for x in v]
    for x in v:
        if x:
            if x < 0:
                v = [-y for y in v]
            break
    return v


def kernel_basis(M: IntMatrix) -> IntMatrix:
    """Columns form a primitive basis of {x in Z^cols : M x = 0}."""
    _, vc, r = _column_echelon(M)
    return IntMatrix.from_columns([_primitive(c) for c in vc[r:]], rows=M.cols)


def image_basis(M: IntMatrix) -> IntMatrix:
    """Columns form a basis of the lattice spanned by the columns of M."""
    ac, _, r = _column_echelon(M)
    return IntMatrix.from_columns(ac[:r], rows=M.rows)


def cokernel(M: IntMatrix) -> FiniteAbelianGroup:
    """Z^rows / M Z^cols."""
    diag = smith_diagonal(M)
    rank = sum(1 for d in diag if d)
    return FiniteAbelianGroup(tuple(d for d in diag if d > 1), M.rows - rank)


def solve_integer(B: IntMatrix, Y: IntMatrix) -> IntMatrix:
    """Integer X with B @ X == Y; raises ContainmentError naming a bad column."""
    if B.rows != Y.rows:
        raise ValueError("row count mismatch")
    nf = smith_normal_form(B)
    d = nf.diagonal
    r = nf.rank
    UY = nf.U @ Y
    xs = []
    for j in range(Y.cols):
        c = UY.col(j)
        if any(c[i] for i in range(r, B.rows)) or any(c[i] % d[i] for i in range(r)):
            raise ContainmentError(f"column {j} of the target is not in the span", j)
        xs.append([c[i] // d[i] for i in range(r)] + [0] * (B.cols - r))
    return nf.V @ IntMatrix.from_columns(xs, rows=B.cols)


def sublattice_quotient(ambient_rank: int, generators: IntMatrix, subgenerators: IntMatrix) -> FiniteAbelianGroup:
    """span(generators) / span(subgenerators), both given as columns in Z^ambient_rank."""
    if generators.rows != ambient_rank or subgenerators.rows != ambient_rank:
        raise ValueError("generator rows must equal the ambient rank")
    B = image_basis(generators)
    C = solve_integer(B, subgenerators)
    return cokernel(C)


def is_surjective_onto(M: IntMatrix, target_basis: IntMatrix) -> bool:
    """True iff the columns of M span exactly the lattice spanned by target_basis."""
    B = image_basis(target_basis)
    C = solve_integer(B, M)
    return cokernel(C).is_trivial
