"""Exact arithmetic for finitely generated abelian groups.

A group is presented as ``Z^n`` modulo the row lattice of an integer
relation matrix.  Everything downstream (quotients, divisibility,
localization, cokernels of staged maps) reduces to Smith or Hermite normal
form computations over arbitrary-precision integers, so all answers here
are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd
from typing import Iterable, Sequence

Vec = tuple


class DimensionMismatch(ValueError):
    """Raised when a vector or matrix has the wrong shape for an operation."""


def _as_vec(v) -> tuple:
    vec = tuple(int(x) for x in v)
    return vec


@dataclass(frozen=True)
class IntMatrix:
    """Immutable integer matrix, row-major, arbitrary precision."""

    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise DimensionMismatch(
                f"expected {self.rows * self.cols} entries, got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, data: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        data = [list(r) for r in data]
        if data:
            ncols = len(data[0])
            if any(len(r) != ncols for r in data):
                raise DimensionMismatch("ragged rows")
        else:
            ncols = 0 if cols is None else cols
        flat = tuple(int(x) for row in data for x in row)
        return cls(len(data), ncols, flat)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(1 if i == j else 0 for i in range(n) for j in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    def entry(self, i: int, j: int) -> int:
        return self.entries[i * self.cols + j]

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> tuple:
        return self.entries[i * self.cols : (i + 1) * self.cols]

    def col(self, j: int) -> tuple:
        return tuple(self.entries[i * self.cols + j] for i in range(self.rows))

    def to_rows(self) -> list:
        return [list(self.row(i)) for i in range(self.rows)]

    def transpose(self) -> "IntMatrix":
        return IntMatrix(
            self.cols,
            self.rows,
            tuple(self.entry(i, j) for j in range(self.cols) for i in range(self.rows)),
        )

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"{self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        out = []
        for i in range(self.rows):
            ri = self.row(i)
            for j in range(other.cols):
                out.append(sum(ri[k] * other.entry(k, j) for k in range(self.cols)))
        return IntMatrix(self.rows, other.cols, tuple(out))

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch("shape mismatch in +")
        return IntMatrix(self.rows, self.cols, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch("shape mismatch in -")
        return IntMatrix(self.rows, self.cols, tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(-a for a in self.entries))

    def apply(self, vec: Sequence[int]) -> tuple:
        """Matrix times column vector."""
        if len(vec) != self.cols:
            raise DimensionMismatch(f"vector length {len(vec)} != {self.cols} columns")
        return tuple(sum(self.entry(i, k) * vec[k] for k in range(self.cols)) for i in range(self.rows))

    def stack(self, other: "IntMatrix") -> "IntMatrix":
        """Vertical concatenation."""
        if other.rows and self.cols != other.cols and self.rows:
            raise DimensionMismatch("column count mismatch in stack")
        cols = self.cols if self.rows else other.cols
        return IntMatrix(self.rows + other.rows, cols, self.entries + other.entries)

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.entries)

    def diagonal(self) -> list:
        return [self.entry(i, i) for i in range(min(self.rows, self.cols))]


def determinant(m: IntMatrix) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    if m.rows != m.cols:
        raise DimensionMismatch("determinant of non-square matrix")
    n = m.rows
    if n == 0:
        return 1
    a = m.to_rows()
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------


def smith_normal_form(m: IntMatrix) -> tuple:
    """Diagonalize ``m`` as U @ m @ V = S.

    U and V are unimodular; the diagonal of S is nonnegative and each entry
    divides the next.  Pivots are chosen by minimal absolute value with full
    row/column reduction, which keeps coefficients small at the scales this
    library targets.

    Returns (S, U, V).
    """
    r, c = m.rows, m.cols
    a = m.to_rows()
    u = IntMatrix.identity(r).to_rows()
    v = IntMatrix.identity(c).to_rows()

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(src, dst, q):
        # row dst += q * row src
        arow = a[src]
        drow = a[dst]
        for k in range(c):
            drow[k] += q * arow[k]
        urow = u[src]
        durow = u[dst]
        for k in range(r):
            durow[k] += q * urow[k]

    def add_col(src, dst, q):
        for row in a:
            row[dst] += q * row[src]
        for row in v:
            row[dst] += q * row[src]

    def negate_row(i):
        a[i] = [-x for x in a[i]]
        u[i] = [-x for x in u[i]]

    t = 0
    while t < min(r, c):
        # locate a minimal-absolute-value pivot in the trailing block
        pivot = None
        best = None
        for i in range(t, r):
            for j in range(t, c):
                x = a[i][j]
                if x != 0 and (best is None or abs(x) < best):
                    best = abs(x)
                    pivot = (i, j)
        if pivot is None:
            break
        swap_rows(t, pivot[0])
        swap_cols(t, pivot[1])

        dirty = True
        while dirty:
            dirty = False
            for i in range(t + 1, r):
                if a[i][t] != 0:
                    q = a[i][t] // a[t][t]
                    add_row(t, i, -q)
                    if a[i][t] != 0:
                        # remainder is strictly smaller: promote it to pivot
                        swap_rows(t, i)
                        dirty = True
            for j in range(t + 1, c):
                if a[t][j] != 0:
                    q = a[t][j] // a[t][t]
                    add_col(t, j, -q)
                    if a[t][j] != 0:
                        swap_cols(t, j)
                        dirty = True
        # pivot must divide every remaining entry before we advance,
        # which is what forces the divisibility chain globally
        p = a[t][t]
        fixed = False
        for i in range(t + 1, r):
            if fixed:
                break
            for j in range(t + 1, c):
                if a[i][j] % p != 0:
                    add_row(i, t, 1)
                    fixed = True
                    break
        if fixed:
            continue
        if p < 0:
            negate_row(t)
        t += 1

    s = IntMatrix.from_rows(a, cols=c)
    return s, IntMatrix.from_rows(u, cols=r), IntMatrix.from_rows(v, cols=c)


# ---------------------------------------------------------------------------
# Hermite form and row-lattice utilities
# ---------------------------------------------------------------------------


def hermite_row_basis(rows: Iterable[Sequence[int]]) -> list:
    """Canonical basis of the lattice spanned by ``rows``.

    Row-style Hermite form: echelon with positive pivots and entries above
    each pivot reduced into [0, pivot).  The output depends only on the
    lattice, not on the generating set.
    """
    work = [list(_as_vec(r)) for r in rows if any(x != 0 for x in r)]
    if not work:
        return []
    by_pivot: dict = {}
    for vec in work:
        vec = list(vec)
        while True:
            lead = next((k for k, x in enumerate(vec) if x != 0), None)
            if lead is None:
                break
            if lead in by_pivot:
                by_pivot[lead], vec = _gcd_merge(by_pivot[lead], vec, lead)
            else:
                if vec[lead] < 0:
                    vec = [-x for x in vec]
                by_pivot[lead] = vec
                break
    pivots = sorted(by_pivot)
    basis = [by_pivot[p] for p in pivots]
    for i in range(len(basis) - 1, -1, -1):
        p = pivots[i]
        for j in range(i):
            q = basis[j][p] // basis[i][p]
            if q:
                basis[j] = [bj - q * bi for bj, bi in zip(basis[j], basis[i])]
    return [tuple(b) for b in basis]


def _gcd_merge(base: list, vec: list, col: int) -> tuple:
    """Unimodular 2-row combination: pivot row gains gcd at ``col``, the
    other row gains a zero there.  Both rows must vanish left of ``col``."""
    g = gcd(base[col], vec[col])
    x, y = _bezout(base[col], vec[col])
    bp, vp = base[col] // g, vec[col] // g
    merged = [x * b + y * v for b, v in zip(base, vec)]
    cleared = [-vp * b + bp * v for b, v in zip(base, vec)]
    if merged[col] < 0:
        merged = [-t for t in merged]
    return merged, cleared


def _bezout(a: int, b: int) -> tuple:
    """x, y with x*a + y*b = gcd(a, b)."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return x0, y0


def row_lattice_contains(basis: Sequence[Sequence[int]], vec: Sequence[int]) -> bool:
    return row_lattice_coefficients(basis, vec) is not None


def row_lattice_coefficients(basis: Sequence[Sequence[int]], vec: Sequence[int]):
    """Coefficients expressing ``vec`` over a Hermite basis, or None.

    The basis must be in Hermite row form (as produced by
    :func:`hermite_row_basis`).
    """
    vec = list(_as_vec(vec))
    coeffs = []
    for b in basis:
        p = next((k for k, x in enumerate(b) if x != 0), None)
        if p is None:
            coeffs.append(0)
            continue
        if vec[p] % b[p] != 0:
            return None
        q = vec[p] // b[p]
        coeffs.append(q)
        if q:
            vec = [v - q * bb for v, bb in zip(vec, b)]
    if any(x != 0 for x in vec):
        return None
    return coeffs


def solve_row_combination(gens: Sequence[Sequence[int]], target: Sequence[int]):
    """Integer x with x @ gens == target, or None.

    Works for arbitrary generating rows (not necessarily a basis) by
    tracking the transform onto the Hermite basis.
    """
    gens = [list(_as_vec(g)) for g in gens]
    if not gens:
        return [] if all(x == 0 for x in target) else None
    n = len(gens)
    ncols = len(gens[0])
    # augment each generator with a transform block to track combinations
    aug = [gens[i] + [1 if k == i else 0 for k in range(n)] for i in range(n)]
    basis = hermite_row_basis_augmented(aug, ncols)
    vec = list(_as_vec(target))
    combo = [0] * n
    for b in basis:
        head = b[:ncols]
        p = next((k for k, x in enumerate(head) if x != 0), None)
        if p is None:
            continue
        if vec[p] % head[p] != 0:
            return None
        q = vec[p] // head[p]
        if q:
            vec = [v - q * hb for v, hb in zip(vec, head)]
            combo = [c + q * tb for c, tb in zip(combo, b[ncols:])]
    if any(x != 0 for x in vec):
        return None
    return combo


def hermite_row_basis_augmented(rows: Sequence[Sequence[int]], ncols: int) -> list:
    """Hermite elimination on the first ``ncols`` columns, carrying the rest.

    Rows whose head (first ``ncols`` entries) reduces to zero are dropped;
    the surviving rows have distinct head pivots, sorted.
    """
    by_pivot: dict = {}
    for vec in rows:
        vec = list(vec)
        while True:
            lead = next((k for k in range(ncols) if vec[k] != 0), None)
            if lead is None:
                break
            if lead in by_pivot:
                by_pivot[lead], vec = _gcd_merge(by_pivot[lead], vec, lead)
            else:
                if vec[lead] < 0:
                    vec = [-x for x in vec]
                by_pivot[lead] = vec
                break
    return [by_pivot[p] for p in sorted(by_pivot)]


def kernel_basis(m: IntMatrix) -> list:
    """Basis vectors v with m.apply(v) == 0."""
    s, _, v = smith_normal_form(m)
    diag = s.diagonal()
    rank = sum(1 for d in diag if d != 0)
    return [v.col(j) for j in range(rank, m.cols)]


def image_lattice_rows(m: IntMatrix) -> list:
    """Hermite basis of the lattice spanned by the columns of ``m``."""
    return hermite_row_basis([m.col(j) for j in range(m.cols)])


def preimage_lattice_rows(m: IntMatrix, lattice_rows: Sequence[Sequence[int]]) -> list:
    """Hermite basis of {v : m.apply(v) in the given row lattice}."""
    lat = [list(_as_vec(r)) for r in lattice_rows]
    k = len(lat)
    # solve m v - L^T c = 0 and project onto v
    combined_rows = []
    for i in range(m.rows):
        combined_rows.append(list(m.row(i)) + [-lat[t][i] for t in range(k)])
    combined = IntMatrix.from_rows(combined_rows, cols=m.cols + k)
    ker = kernel_basis(combined)
    return hermite_row_basis([kv[: m.cols] for kv in ker])


def lattice_rank(rows: Sequence[Sequence[int]]) -> int:
    return len(hermite_row_basis(rows))


def lattices_equal(rows_a: Sequence[Sequence[int]], rows_b: Sequence[Sequence[int]]) -> bool:
    return hermite_row_basis(rows_a) == hermite_row_basis(rows_b)


def cokernel_invariants(relation_rows: Sequence[Sequence[int]], n: int) -> tuple:
    """Invariant factors of Z^n modulo the row lattice of ``relation_rows``.

    Same canonical form as :attr:`FgAbelianGroup.invariant_factors`.
    """
    rows = [list(_as_vec(r)) for r in relation_rows]
    mat = IntMatrix.from_rows(rows, cols=n)
    s, _, _ = smith_normal_form(mat)
    diag = [d for d in s.diagonal() if d != 0]
    torsion = tuple(d for d in diag if d > 1)
    free = n - len(diag)
    return torsion + (0,) * free


# ---------------------------------------------------------------------------
# Finitely generated abelian groups
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FgAbelianGroup:
    """Z^n modulo the row lattice of an integer relation matrix.

    The canonical form is the invariant factor tuple: torsion factors > 1 in
    a divisibility chain, followed by one 0 per free factor.  Two groups are
    isomorphic exactly when these tuples agree.
    """

    num_generators: int
    relations: IntMatrix

    def __post_init__(self):
        if self.relations.rows and self.relations.cols != self.num_generators:
            raise DimensionMismatch(
                f"relations have {self.relations.cols} columns, expected {self.num_generators}"
            )

    @classmethod
    def from_relation_rows(cls, num_generators: int, rows: Sequence[Sequence[int]]) -> "FgAbelianGroup":
        return cls(num_generators, IntMatrix.from_rows(rows, cols=num_generators))

    @classmethod
    def free(cls, rank: int) -> "FgAbelianGroup":
        return cls(rank, IntMatrix.zeros(0, rank))

    @classmethod
    def trivial(cls) -> "FgAbelianGroup":
        return cls(0, IntMatrix.zeros(0, 0))

    @classmethod
    def from_invariant_factors(cls, factors: Sequence[int]) -> "FgAbelianGroup":
        factors = [int(d) for d in factors]
        n = len(factors)
        rows = []
        for i, d in enumerate(factors):
            if d != 0:
                rows.append([d if j == i else 0 for j in range(n)])
        return cls.from_relation_rows(n, rows)

    @classmethod
    def cyclic(cls, order: int) -> "FgAbelianGroup":
        if order == 0:
            return cls.free(1)
        return cls.from_relation_rows(1, [[order]])

    @cached_property
    def invariant_factors(self) -> tuple:
        return cokernel_invariants(self.relations.to_rows(), self.num_generators)

    @cached_property
    def relation_lattice(self) -> list:
        return hermite_row_basis(self.relations.to_rows())

    @property
    def torsion_factors(self) -> tuple:
        return tuple(d for d in self.invariant_factors if d != 0)

    @property
    def free_rank(self) -> int:
        return sum(1 for d in self.invariant_factors if d == 0)

    def is_trivial(self) -> bool:
        return not self.invariant_factors

    def is_finite(self) -> bool:
        return self.free_rank == 0

    def order(self):
        """Group order, or None when infinite."""
        if not self.is_finite():
            return None
        n = 1
        for d in self.torsion_factors:
            n *= d
        return n

    def is_isomorphic_to(self, other: "FgAbelianGroup") -> bool:
        return self.invariant_factors == other.invariant_factors

    def element_is_zero(self, vec: Sequence[int]) -> bool:
        """Does the coordinate vector represent 0 in the group?"""
        if len(vec) != self.num_generators:
            raise DimensionMismatch("element length mismatch")
        return row_lattice_contains(self.relation_lattice, vec)

    def describe(self) -> str:
        parts = []
        for d in self.invariant_factors:
            parts.append("Z" if d == 0 else f"Z/{d}")
        return " + ".join(parts) if parts else "0"


def quotient_by(group: FgAbelianGroup, subgens: Sequence[Sequence[int]]) -> FgAbelianGroup:
    """Quotient of ``group`` by the subgroup its ``subgens`` generate.

    Returned in canonical invariant-factor presentation.
    """
    for v in subgens:
        if len(v) != group.num_generators:
            raise DimensionMismatch(
                f"subgroup generator length {len(v)} != {group.num_generators}"
            )
    stacked = list(group.relations.to_rows()) + [list(_as_vec(v)) for v in subgens]
    factors = cokernel_invariants(stacked, group.num_generators)
    return FgAbelianGroup.from_invariant_factors(factors)


def is_n_divisible(group: FgAbelianGroup, n: int) -> bool:
    """Is multiplication by n surjective on the group?

    Decided exactly: G/nG is the cokernel of the relations stacked with n
    times the identity, and surjectivity means that cokernel is trivial.
    """
    if n < 2:
        raise ValueError("divisor must be at least 2")
    g = group.num_generators
    stacked = list(group.relations.to_rows())
    for i in range(g):
        stacked.append([n if j == i else 0 for j in range(g)])
    return all(d == 1 for d in _snf_diagonal(stacked, g)) or g == 0


def is_uniquely_n_divisible(group: FgAbelianGroup, n: int) -> bool:
    """Is multiplication by n bijective on the group?"""
    if not is_n_divisible(group, n):
        return False
    # injectivity: {v : n*v lies in the relation lattice} must equal the lattice
    g = group.num_generators
    n_id = IntMatrix(g, g, tuple(n if i == j else 0 for i in range(g) for j in range(g)))
    pre = preimage_lattice_rows(n_id, group.relation_lattice)
    return pre == group.relation_lattice


def _snf_diagonal(rows: Sequence[Sequence[int]], n: int) -> list:
    s, _, _ = smith_normal_form(IntMatrix.from_rows(rows, cols=n))
    return [d for d in s.diagonal() if d != 0]


@dataclass(frozen=True)
class LocalizedGroupDescriptor:
    """Isomorphism data of G tensored with Z[1/p].

    ``free_rank`` copies of Z[1/p] plus the torsion of G with all p-parts
    removed.
    """

    prime: int
    free_rank: int
    torsion: tuple

    def is_isomorphic_to(self, other) -> bool:
        if isinstance(other, LocalizedGroupDescriptor):
            if self.free_rank != other.free_rank:
                return False
            if self.free_rank > 0 and self.prime != other.prime:
                return False
            return self.torsion == other.torsion
        if isinstance(other, FgAbelianGroup):
            # Z[1/p] is not finitely generated, so a free part rules this out
            return self.free_rank == 0 and other.free_rank == 0 and self.torsion == other.torsion_factors
        return NotImplemented

    def describe(self) -> str:
        parts = [f"Z[1/{self.prime}]"] * self.free_rank
        parts += [f"Z/{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"


def localize(group: FgAbelianGroup, p: int) -> LocalizedGroupDescriptor:
    """Descriptor of G tensor Z[1/p]: p-torsion dies, the rest survives."""
    if not _is_prime(p):
        raise ValueError(f"{p} is not prime")
    torsion = []
    for d in group.torsion_factors:
        while d % p == 0:
            d //= p
        if d > 1:
            torsion.append(d)
    return LocalizedGroupDescriptor(p, group.free_rank, tuple(torsion))


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True
