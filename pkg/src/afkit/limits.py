"""Inductive systems of free integer lattices and their direct limits.

A staged system is a sequence of lattices Z^{l(0)} -> Z^{l(1)} -> ... with
integer connecting matrices acting on column vectors.  Limit elements are
(stage, vector) pairs; two of them are equal when they agree after pushing
to a common (possibly later) stage.  Systems are realized as a finite
prefix of matrices followed by a repeating tail, with the single-matrix
stationary case as the degenerate form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .abelian import (
    FgAbelianGroup,
    IntMatrix,
    hermite_row_basis,
    image_lattice_rows,
    kernel_basis,
    lattice_rank,
    preimage_lattice_rows,
)


class NotFinitelyGeneratedError(RuntimeError):
    """The limit group did not stabilize within the requested depth."""


@dataclass(frozen=True)
class StagedSystem:
    """Free lattices with integer connecting maps, prefix plus cycling tail.

    ``connect(n)`` maps stage n to stage n+1 and has shape
    l(n+1) x l(n).  When ``tail`` is empty the system is finite: stages
    beyond the prefix are undefined.
    """

    prefix: tuple
    tail: tuple
    injective_flag: bool = False

    def __post_init__(self):
        mats = list(self.prefix) + list(self.tail)
        for a, b in zip(mats, mats[1:]):
            if b.cols != a.rows:
                raise ValueError(
                    f"connecting shapes do not chain: {a.rows}x{a.cols} then {b.rows}x{b.cols}"
                )
        if self.tail:
            last = mats[-1]
            first_tail = self.tail[0]
            if first_tail.cols != last.rows:
                raise ValueError("tail does not cycle: shape mismatch at wrap")
        if self.injective_flag:
            for m in mats:
                if lattice_rank(image_lattice_rows(m)) != m.cols:
                    raise ValueError("injective_flag set but a connecting map drops rank")

    @classmethod
    def stationary(cls, matrix: IntMatrix, injective: Optional[bool] = None) -> "StagedSystem":
        if matrix.rows != matrix.cols:
            raise ValueError("stationary system needs a square connecting matrix")
        if injective is None:
            injective = lattice_rank(image_lattice_rows(matrix)) == matrix.cols
        return cls(prefix=(), tail=(matrix,), injective_flag=injective)

    @classmethod
    def from_matrices(
        cls,
        prefix: Sequence[IntMatrix],
        tail: Sequence[IntMatrix] = (),
        injective: Optional[bool] = None,
    ) -> "StagedSystem":
        mats = list(prefix) + list(tail)
        if injective is None:
            injective = bool(mats) and all(
                lattice_rank(image_lattice_rows(m)) == m.cols for m in mats
            )
        return cls(prefix=tuple(prefix), tail=tuple(tail), injective_flag=injective)

    @property
    def is_stationary(self) -> bool:
        return not self.prefix and len(self.tail) == 1

    def connect(self, n: int) -> IntMatrix:
        if n < 0:
            raise ValueError("negative stage")
        if n < len(self.prefix):
            return self.prefix[n]
        if not self.tail:
            raise ValueError(f"stage {n} beyond the final stored stage")
        return self.tail[(n - len(self.prefix)) % len(self.tail)]

    def stage_rank(self, n: int) -> int:
        if n < len(self.prefix):
            return self.prefix[n].cols
        if not self.tail:
            if n == len(self.prefix) and self.prefix:
                return self.prefix[-1].rows
            raise ValueError(f"stage {n} beyond the final stored stage")
        return self.connect(n).cols

    def composite(self, start: int, stop: int) -> IntMatrix:
        """Product of connecting maps from stage ``start`` up to ``stop``."""
        if stop < start:
            raise ValueError("stop < start")
        out = IntMatrix.identity(self.stage_rank(start))
        for n in range(start, stop):
            out = self.connect(n) @ out
        return out


@dataclass(frozen=True)
class LimitElement:
    """A representative of a direct-limit class: a vector at some stage."""

    stage: int
    vector: tuple

    def __post_init__(self):
        object.__setattr__(self, "vector", tuple(int(x) for x in self.vector))

    def is_zero_vector(self) -> bool:
        return all(x == 0 for x in self.vector)


@dataclass(frozen=True)
class LimitEndomorphism:
    """Endomorphism of a staged limit, given by per-stage matrices.

    ``cross_stage`` maps send stage n to stage n+1; same-stage maps send
    stage n to itself.  A stationary matrix may be given once and reused at
    every stage.
    """

    cross_stage: bool
    matrices: tuple = ()
    stationary_matrix: Optional[IntMatrix] = None

    @classmethod
    def stationary(cls, matrix: IntMatrix, cross_stage: bool = False) -> "LimitEndomorphism":
        return cls(cross_stage=cross_stage, stationary_matrix=matrix)

    def matrix_at(self, stage: int) -> IntMatrix:
        if self.stationary_matrix is not None:
            return self.stationary_matrix
        if stage >= len(self.matrices):
            raise ValueError(f"endomorphism has no matrix at stage {stage}")
        return self.matrices[stage]

    def apply(self, sys: StagedSystem, e: LimitElement) -> LimitElement:
        m = self.matrix_at(e.stage)
        out = m.apply(e.vector)
        return LimitElement(e.stage + 1 if self.cross_stage else e.stage, out)

    def check_commuting(self, sys: StagedSystem, depth: int) -> bool:
        """Verify the intertwining squares against the system up to depth."""
        for n in range(depth):
            phi_n = sys.connect(n)
            if self.cross_stage:
                lhs = self.matrix_at(n + 1) @ phi_n
                rhs = sys.connect(n + 1) @ self.matrix_at(n)
            else:
                lhs = self.matrix_at(n + 1) @ phi_n
                rhs = phi_n @ self.matrix_at(n)
            if lhs.entries != rhs.entries:
                return False
        return True


def push(sys: StagedSystem, e: LimitElement, to_stage: int) -> LimitElement:
    """Push a representative forward through the connecting maps."""
    if to_stage < e.stage:
        raise ValueError(f"cannot push backwards from stage {e.stage} to {to_stage}")
    vec = list(e.vector)
    for n in range(e.stage, to_stage):
        vec = list(sys.connect(n).apply(vec))
    return LimitElement(to_stage, tuple(vec))


def limit_equal(sys: StagedSystem, e1: LimitElement, e2: LimitElement, depth: int):
    """Three-valued equality of limit classes.

    Representatives are compared at their common stage.  For injective
    systems a mismatch there is final.  Otherwise later stages may identify
    them, so we keep pushing, up to ``depth`` extra stages (at least one),
    and return None when undecided.
    """
    s = max(e1.stage, e2.stage)
    a = push(sys, e1, s)
    b = push(sys, e2, s)
    if a.vector == b.vector:
        return True
    if sys.injective_flag:
        return False
    for _ in range(max(1, depth)):
        s += 1
        try:
            a = push(sys, a, s)
            b = push(sys, b, s)
        except ValueError:
            return None  # finite system ran out of stages
        if a.vector == b.vector:
            return True
    return None


def is_zero_class(sys: StagedSystem, e: LimitElement, depth: int):
    """Three-valued test whether a representative is the zero class."""
    zero = LimitElement(e.stage, (0,) * len(e.vector))
    return limit_equal(sys, e, zero, depth)


def alpha_infinity_apply(sys: StagedSystem, e: LimitElement) -> LimitElement:
    """The shift automorphism of a stationary system.

    Sends the class represented at stage n+1 to the same vector at stage n;
    stage-0 representatives are first re-expressed one stage later.
    """
    if not sys.is_stationary:
        raise ValueError("the shift automorphism needs a stationary system")
    if e.stage >= 1:
        return LimitElement(e.stage - 1, e.vector)
    return LimitElement(0, sys.connect(0).apply(e.vector))


def build_limit_group(sys: StagedSystem, depth: int) -> FgAbelianGroup:
    """The limit group, when it is finitely generated.

    The limit of free lattices is torsion-free, and it is finitely
    generated exactly when the chain of image lattices of iterated
    connecting maps stabilizes; the stable lattice is then the limit.
    Detection runs over one full tail period at a time, up to ``depth``
    periods, and raises :class:`NotFinitelyGeneratedError` on exhaustion.
    """
    if not sys.tail:
        raise ValueError("finite systems have no limit to build")
    start = len(sys.prefix)
    period = len(sys.tail)
    block = sys.composite(start, start + period)
    if block.rows != block.cols:
        raise ValueError("tail composite is not square")
    n = block.cols
    current = hermite_row_basis([tuple(1 if i == j else 0 for j in range(n)) for i in range(n)])
    power = IntMatrix.identity(n)
    for _ in range(depth + 1):
        power = block @ power
        nxt = image_lattice_rows(power)
        if nxt == current:
            return FgAbelianGroup.free(len(current))
        current = nxt
    raise NotFinitelyGeneratedError(
        f"image lattices still shrinking after {depth} periods; "
        "limit is not finitely generated within depth"
    )


# ---------------------------------------------------------------------------
# Stage-level analyses used by the truncation verifiers
# ---------------------------------------------------------------------------


def _aligned_stage(sys: StagedSystem, stage: int) -> int:
    """Smallest tail-period-aligned stage >= ``stage``."""
    start = len(sys.prefix)
    if stage <= start:
        return start
    period = len(sys.tail)
    return stage + (-(stage - start)) % period


def death_lattice_rows(sys: StagedSystem, stage: int) -> list:
    """Basis of the stage-``stage`` vectors whose limit class is zero.

    A vector dies when some forward composite annihilates it.  Past the
    prefix the composites are powers of the one-period block B, and the
    increasing chain ker(B) <= ker(B^2) <= ... stabilizes as soon as two
    consecutive members agree, so the computation always terminates.
    """
    if not sys.tail:
        raise ValueError("death analysis needs an infinite (tail) system")
    align = _aligned_stage(sys, stage)
    block = sys.composite(align, align + len(sys.tail))
    death_aligned: list = []
    power = IntMatrix.identity(block.cols)
    while True:
        power = block @ power
        nxt = hermite_row_basis(kernel_basis(power))
        if nxt == death_aligned:
            break
        death_aligned = nxt
    if align == stage:
        return death_aligned
    return preimage_lattice_rows(sys.composite(stage, align), death_aligned)


def saturate_preimages(step: IntMatrix, lattice_rows: Sequence[Sequence[int]]) -> list:
    """Close a lattice under iterated preimages of a fixed square map.

    Returns the lattice of vectors landing in the input lattice after some
    number of applications of ``step``.  The chain of preimages is
    increasing inside the rational saturation of the input, so it
    stabilizes; one fixed point of the iteration is the answer.
    """
    if step.rows != step.cols:
        raise ValueError("saturation needs a square step matrix")
    current = hermite_row_basis(lattice_rows)
    guard = 0
    while True:
        pre = preimage_lattice_rows(step, current)
        merged = hermite_row_basis(list(current) + list(pre))
        if merged == current:
            return current
        current = merged
        guard += 1
        if guard > 10000:
            raise RuntimeError("preimage saturation failed to stabilize")
