"""Torsion-free staged groups presenting a given f.g. abelian group.

Given G presented on g generators, build a free lattice F on coordinates
x(n, m) for n < g and m < width, together with an endomorphism
beta = id - delta whose staged limit H carries a shift automorphism alpha
with H / (id - alpha)[H] isomorphic to G.  The quotient identity is checked
at finite truncation by :func:`rordam_verify`, exactly, via Smith normal
form.

delta sends each coordinate into the kernel lattice N of the evaluation
map x(n, m) -> g_n when m = 0 else 0:

* column (n, 0) carries kernel data: the n-th Hermite basis row of G's
  relation lattice, embedded in the m = 0 block (zero when G has fewer
  relations than generators);
* columns (n, m) for 1 <= m <= width-2 are elementary shifts to (n, m+1);
* column (n, width-1) wraps to -x(n, 1).

The wrap column replaces the shift that would exit the truncation window.
Dropping it instead would leave the x(n, 1) coordinates outside the image
of delta and inflate every cokernel by Z^g, which is a pure truncation
artifact: in the untruncated construction the image of delta is exactly N.
With the wrap, im(delta) = N holds at every stage, so the cokernel of
(id - alpha) is G on the nose and verification is depth-stable.  The sign
on the wrap makes beta injective whenever the relation block allows it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .abelian import (
    FgAbelianGroup,
    IntMatrix,
    cokernel_invariants,
    image_lattice_rows,
    lattice_rank,
)
from .limits import StagedSystem, saturate_preimages


class WidthError(ValueError):
    """The truncation width cannot host the construction."""


@dataclass(frozen=True)
class RordamPair:
    """Staged system with beta = id - delta and its coordinate bookkeeping."""

    group: FgAbelianGroup
    width: int
    system: StagedSystem
    delta_matrix: IntMatrix

    @property
    def rank(self) -> int:
        return self.group.num_generators * self.width

    def coord_index(self, n: int, m: int) -> int:
        if not (0 <= n < self.group.num_generators and 0 <= m < self.width):
            raise IndexError(f"coordinate ({n},{m}) outside {self.group.num_generators}x{self.width}")
        return n * self.width + m

    def index_coord(self, i: int) -> tuple:
        if not (0 <= i < self.rank):
            raise IndexError(f"index {i} outside rank {self.rank}")
        return divmod(i, self.width)

    @property
    def beta_matrix(self) -> IntMatrix:
        return self.system.connect(0)

    def evaluation_vector(self, i: int) -> tuple:
        """Image of the i-th coordinate under x(n,m) -> g_n * [m == 0]."""
        n, m = self.index_coord(i)
        g = self.group.num_generators
        return tuple((1 if (m == 0 and k == n) else 0) for k in range(g))


def rordam_pair(group: FgAbelianGroup, width: int) -> RordamPair:
    """Build the truncated staged pair for ``group``."""
    if width < 2:
        raise WidthError(f"width {width} too small to express the kernel generators (need >= 2)")
    g = group.num_generators
    rank = g * width

    def idx(n, m):
        return n * width + m

    relation_basis = group.relation_lattice  # Hermite rows, k <= g of them
    cols = [[0] * rank for _ in range(rank)]  # cols[j] = image of e_j
    for n in range(g):
        # m = 0: kernel data
        if n < len(relation_basis):
            row = relation_basis[n]
            for j in range(g):
                cols[idx(n, 0)][idx(j, 0)] = row[j]
        # 1 <= m <= width-2: shift one slot right
        for m in range(1, width - 1):
            cols[idx(n, m)][idx(n, m + 1)] = 1
        # m = width-1: wrap back to the first shifted slot, negated
        cols[idx(n, width - 1)][idx(n, 1)] = -1
    delta = IntMatrix.from_rows(
        [[cols[j][i] for j in range(rank)] for i in range(rank)], cols=rank
    )
    beta = IntMatrix.identity(rank) - delta
    injective = rank == 0 or lattice_rank(image_lattice_rows(beta)) == rank
    system = StagedSystem.stationary(beta, injective=injective)
    return RordamPair(group=group, width=width, system=system, delta_matrix=delta)


@dataclass(frozen=True)
class VerifyReport:
    passed: bool
    expected: tuple
    found_per_depth: tuple

    def __bool__(self) -> bool:
        return self.passed


def _truncated_cokernel(pair: RordamPair, depth: int) -> tuple:
    """Invariant factors of stage-``depth`` classes modulo (id - alpha) images.

    The shift automorphism acts on stage-d representatives as beta, so
    id - alpha acts as delta.  The image lattice is closed under "a later
    stage identifies it": vectors landing in delta's image after finitely
    many beta pushes, computed by preimage saturation.
    """
    rank = pair.rank
    if rank == 0:
        return ()
    image = image_lattice_rows(pair.delta_matrix)
    closed = saturate_preimages(pair.beta_matrix, image)
    return cokernel_invariants(closed, rank)


def rordam_verify(pair: RordamPair, group: FgAbelianGroup, depth: int) -> VerifyReport:
    """Check H/(id - alpha)[H] against ``group`` at truncation.

    Passes when the cokernel invariant factors match the group's at both
    depth-1 and depth (stability guards against truncation artifacts).
    Failure is a value, not an exception.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    expected = group.invariant_factors
    found = tuple(_truncated_cokernel(pair, d) for d in (depth - 1, depth))
    passed = all(f == expected for f in found)
    return VerifyReport(passed=passed, expected=expected, found_per_depth=found)
