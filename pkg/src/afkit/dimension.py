"""Bratteli diagrams, ordered staged systems, and diagram realization.

A Bratteli diagram is a leveled multigraph: level n has l(n) weighted
vertices and an incidence matrix of arrow multiplicities into level n+1,
stored in source-level x target-level orientation.  Its staged system has
one free lattice per level with the transposed incidence acting on column
vectors, the coordinatewise cone, and the weight vector as order unit.

Realization runs the Effros-Handelman-Shen recursion: repeatedly factor
the current positive elements (plus the next enumerated positive) through
a certificate produced by the Shen solver, and read the certificate's
coefficient matrix off as the next incidence matrix.  The endomorphism
variant factors twice per level so that the produced multiplicity pair
(m, q) satisfies the diagram-endomorphism intertwining identity exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Iterator, Optional, Sequence

from .abelian import (
    IntMatrix,
    hermite_row_basis,
    kernel_basis,
    preimage_lattice_rows,
    row_lattice_coefficients,
)
from .limits import (
    LimitElement,
    LimitEndomorphism,
    StagedSystem,
    death_lattice_rows,
    is_zero_class,
    limit_equal,
    push,
)

SIMPLICIAL = "simplicial"
STRICT_FIRST = "strict_first"


class ShenDepthExceeded(RuntimeError):
    """No certificate found within the search bound ("shen-depth-exceeded")."""


class EndomorphismNotPositive(ValueError):
    """The endomorphism moved a positive element out of the cone."""


class RealizationError(RuntimeError):
    """The recursion produced data that cannot be a valid diagram level."""


# ---------------------------------------------------------------------------
# Ordered staged systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrderedStagedSystem:
    """Staged system with a per-stage cone and order unit.

    Cones: ``simplicial`` is coordinatewise nonnegativity; ``strict_first``
    is {first coordinate > 0} together with the zero class.  The unit is a
    stage-0 element; its pushforwards are the later stage units.
    """

    system: StagedSystem
    cone: str
    unit: LimitElement
    is_dimension_group: bool = False

    def __post_init__(self):
        if self.cone not in (SIMPLICIAL, STRICT_FIRST):
            raise ValueError(f"unknown cone descriptor {self.cone!r}")
        if self.unit.stage != 0:
            raise ValueError("order unit must be a stage-0 element")

    def unit_at(self, stage: int) -> LimitElement:
        return push(self.system, self.unit, stage)

    def stage_rank(self, n: int) -> int:
        return self.system.stage_rank(n)

    def is_positive(self, e: LimitElement, bound: int):
        """Three-valued cone membership for a limit class."""
        if self.cone == STRICT_FIRST:
            t = e.vector[0] if e.vector else 0
            if t > 0:
                return True
            if t < 0:
                return False
            return is_zero_class(self.system, e, bound)
        # simplicial: nonnegative now or after finitely many pushes
        cur = e
        for _ in range(bound + 1):
            if all(x >= 0 for x in cur.vector):
                return True
            try:
                cur = push(self.system, cur, cur.stage + 1)
            except ValueError:
                return None
        neg = LimitElement(e.stage, tuple(-x for x in e.vector))
        cur = neg
        for _ in range(bound + 1):
            if all(x >= 0 for x in cur.vector):
                z = is_zero_class(self.system, e, bound)
                if z is True:
                    return True
                if z is False:
                    return False
                return None
            try:
                cur = push(self.system, cur, cur.stage + 1)
            except ValueError:
                return None
        return None


# ---------------------------------------------------------------------------
# Bratteli diagrams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagramLevel:
    size: int
    weights: tuple
    incidence: Optional[IntMatrix]  # to the next level; None on the last stored level


@dataclass(frozen=True)
class BratteliDiagram:
    """Stored levels plus an optional cycling incidence tail."""

    levels: tuple
    tail: tuple = ()

    @classmethod
    def build(cls, levels: Sequence[DiagramLevel], tail: Sequence[IntMatrix] = ()) -> "BratteliDiagram":
        return cls(tuple(levels), tuple(tail))

    @classmethod
    def single_vertex(cls, multiplicity: int, stored_levels: int = 2) -> "BratteliDiagram":
        """Stationary one-vertex diagram with the given arrow multiplicity."""
        m = IntMatrix.from_rows([[multiplicity]])
        levels = []
        w = 1
        for n in range(stored_levels):
            inc = m if n < stored_levels - 1 else None
            levels.append(DiagramLevel(1, (w,), inc))
            w *= multiplicity
        return cls(tuple(levels), (m,))

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    def level_size(self, n: int) -> int:
        return self.levels[n].size

    def weights(self, n: int) -> tuple:
        return self.levels[n].weights

    def incidence(self, n: int) -> IntMatrix:
        inc = self.levels[n].incidence
        if inc is None:
            raise ValueError(f"no incidence stored from level {n}")
        return inc


def validate_diagram(d: BratteliDiagram) -> list:
    """All violations of the diagram conditions, empty when valid."""
    violations = []
    if not d.levels:
        return ["empty diagram"]
    if d.levels[0].size != 1:
        violations.append("condition 1: level 0 must have exactly one vertex")
    if d.levels[0].weights != (1,) and d.levels[0].weights[:1] != (1,):
        violations.append("condition 2: the root weight must be 1")
    for n, lev in enumerate(d.levels):
        if len(lev.weights) != lev.size:
            violations.append(f"condition 3 at level {n}: weight list length != vertex count")
            continue
        if any(w <= 0 for w in lev.weights):
            violations.append(f"condition 3 at level {n}: weights must be strictly positive")
    for n in range(len(d.levels) - 1):
        inc = d.levels[n].incidence
        nxt = d.levels[n + 1]
        if inc is None:
            violations.append(f"condition 4 at level {n}: missing incidence matrix")
            continue
        if inc.rows != d.levels[n].size or inc.cols != nxt.size:
            violations.append(
                f"condition 4 at level {n}: incidence is {inc.rows}x{inc.cols}, "
                f"expected {d.levels[n].size}x{nxt.size}"
            )
            continue
        if any(x < 0 for x in inc.entries):
            violations.append(f"condition 4 at level {n}: negative multiplicity")
        if len(nxt.weights) != nxt.size:
            continue
        for j in range(nxt.size):
            s = sum(d.levels[n].weights[i] * inc.entry(i, j) for i in range(inc.rows))
            if s != nxt.weights[j]:
                violations.append(f"condition 5 at level {n + 1}: weight of vertex {j} is "
                                  f"{nxt.weights[j]}, path count gives {s}")
                break
    for t in d.tail:
        if any(x < 0 for x in t.entries):
            violations.append("condition 4 in tail: negative multiplicity")
    if d.tail:
        last = d.levels[-1].size
        if d.tail[0].rows != last:
            violations.append("tail incidence does not attach to the last stored level")
        for a, b in zip(d.tail, tuple(d.tail[1:]) + (d.tail[0],)):
            if a.cols != b.rows:
                violations.append("tail incidences do not chain")
                break
    return violations


def multimatrix_dims(d: BratteliDiagram, n: int) -> tuple:
    """Matrix-block sizes of the level-n finite-dimensional algebra."""
    if not (0 <= n < d.num_levels):
        raise IndexError(f"level {n} outside stored range 0..{d.num_levels - 1}")
    return d.weights(n)


def diagram_to_system(d: BratteliDiagram) -> OrderedStagedSystem:
    """Staged ordered system of a valid diagram.

    Connecting maps are the transposed incidences (so they act on column
    vectors); stage units are the weight vectors.
    """
    violations = validate_diagram(d)
    if violations:
        raise ValueError("invalid diagram: " + "; ".join(violations))
    prefix = [d.incidence(n).transpose() for n in range(d.num_levels - 1)]
    tail = [t.transpose() for t in d.tail]
    system = StagedSystem.from_matrices(prefix, tail)
    unit = LimitElement(0, d.weights(0))
    return OrderedStagedSystem(system=system, cone=SIMPLICIAL, unit=unit, is_dimension_group=True)


def telescope(d: BratteliDiagram, cut_points: Sequence[int]) -> BratteliDiagram:
    """Contract the diagram to the listed levels, multiplying incidences."""
    cuts = list(cut_points)
    if not cuts or cuts[0] != 0:
        raise ValueError("cut points must start at 0")
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError("cut points must be strictly increasing")
    if cuts[-1] >= d.num_levels:
        raise ValueError("cut point beyond stored levels")
    new_levels = []
    for pos, c in enumerate(cuts):
        lev = d.levels[c]
        if pos + 1 < len(cuts):
            inc = d.incidence(c)
            for k in range(c + 1, cuts[pos + 1]):
                inc = inc @ d.incidence(k)
        else:
            inc = None
        new_levels.append(DiagramLevel(lev.size, lev.weights, inc))
    return BratteliDiagram(tuple(new_levels))


def diagram_to_dot(d: BratteliDiagram) -> str:
    """Stable DOT rendering: one rank per level, labels ``i:w``."""
    lines = ["digraph bratteli {", "  rankdir=TB;"]
    for n, lev in enumerate(d.levels):
        names = " ".join(f'"L{n}_{i}"' for i in range(lev.size))
        lines.append(f"  {{ rank=same; {names} }}")
        for i in range(lev.size):
            lines.append(f'  "L{n}_{i}" [label="{i}:{lev.weights[i]}"];')
    for n in range(len(d.levels) - 1):
        inc = d.levels[n].incidence
        if inc is None:
            continue
        for i in range(inc.rows):
            for j in range(inc.cols):
                mult = inc.entry(i, j)
                if mult > 0:
                    lines.append(f'  "L{n}_{i}" -> "L{n + 1}_{j}" [label="{mult}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def diagram_to_json_dict(d: BratteliDiagram) -> dict:
    out = {"levels": []}
    for lev in d.levels:
        entry = {"l": lev.size, "w": list(lev.weights)}
        if lev.incidence is not None:
            entry["m"] = lev.incidence.to_rows()
        out["levels"].append(entry)
    if d.tail:
        out["tail"] = [t.to_rows() for t in d.tail]
    return out


def diagram_from_json_dict(data: dict) -> BratteliDiagram:
    levels = []
    raw = data["levels"]
    for idx, entry in enumerate(raw):
        size = int(entry["l"])
        weights = tuple(int(x) for x in entry["w"])
        inc = None
        if "m" in entry and entry["m"] is not None:
            inc = IntMatrix.from_rows(entry["m"])
        levels.append(DiagramLevel(size, weights, inc))
    tail = tuple(IntMatrix.from_rows(m) for m in data.get("tail", []))
    return BratteliDiagram(tuple(levels), tail)


# ---------------------------------------------------------------------------
# Diagram endomorphisms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagramEndomorphism:
    """Per-level multiplicity matrices q_n of shape l(n) x l(n+1)."""

    q: tuple

    @property
    def num_levels(self) -> int:
        return len(self.q)

    def matrix(self, n: int) -> IntMatrix:
        return self.q[n]


def validate_endomorphism(d: BratteliDiagram, endo: DiagramEndomorphism) -> bool:
    """Check the intertwining identity m_n q_{n+1} = q_n m_{n+1} levelwise."""
    for n in range(min(len(endo.q), d.num_levels - 1)):
        q_n = endo.q[n]
        if q_n.rows != d.level_size(n) or q_n.cols != d.level_size(n + 1):
            raise ValueError(f"q_{n} has shape {q_n.rows}x{q_n.cols}, "
                             f"expected {d.level_size(n)}x{d.level_size(n + 1)}")
    for n in range(len(endo.q) - 1):
        if n + 1 >= d.num_levels - 1:
            break
        lhs = d.incidence(n) @ endo.q[n + 1]
        rhs = endo.q[n] @ d.incidence(n + 1)
        if lhs.entries != rhs.entries:
            return False
    return True


# ---------------------------------------------------------------------------
# Shen certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShenCertificate:
    """Positive factorization theta(i) = sum_j g(i, j) * phi(j).

    Every integer relation among the inputs is inherited by the columns of
    g; both conditions are re-checkable by :func:`verify_shen_certificate`.
    """

    size: int
    phi: tuple
    g: IntMatrix

    def __post_init__(self):
        if self.g.cols != self.size or len(self.phi) != self.size:
            raise ValueError("certificate shape mismatch")


def relation_lattice_rows(D: OrderedStagedSystem, theta: Sequence[LimitElement]) -> list:
    """Basis of {k : sum_i k_i theta_i = 0 in the limit}.

    At a common stage the relation lattice is the kernel of the column
    matrix of representatives; for non-injective systems the kernel is
    taken relative to the vectors that eventually die.
    """
    if not theta:
        return []
    s = max(t.stage for t in theta)
    vecs = [push(D.system, t, s).vector for t in theta]
    m = len(vecs[0])
    mat = IntMatrix.from_rows([[vecs[i][r] for i in range(len(vecs))] for r in range(m)],
                              cols=len(vecs))
    if D.system.injective_flag:
        return hermite_row_basis(kernel_basis(mat))
    death = death_lattice_rows(D.system, s)
    return preimage_lattice_rows(mat, death)


def shen_solve(D: OrderedStagedSystem, theta: Sequence[LimitElement], search_bound: int) -> ShenCertificate:
    """Produce a Shen certificate for positive elements of the system.

    Simplicial cones with injective connecting maps use the fast path: push
    everything to a stage where all coordinates are nonnegative and read
    the coordinates off against the basis classes.  Strict-first-coordinate
    cones use a closed-form certificate built from a basis of the span
    adapted to the first-coordinate functional.  Raises
    :class:`ShenDepthExceeded` when no certificate is found in bounds.
    """
    theta = list(theta)
    for t in theta:
        pos = D.is_positive(t, search_bound)
        if pos is False:
            raise ValueError(f"input element at stage {t.stage} is not in the positive cone")
        if pos is None:
            raise ShenDepthExceeded("shen-depth-exceeded: positivity undecided within bound")
    if not D.system.injective_flag:
        raise ShenDepthExceeded(
            "shen-depth-exceeded: certificate search requires an injective system"
        )
    if D.cone == SIMPLICIAL:
        return _shen_simplicial(D, theta, search_bound)
    return _shen_strict_first(D, theta, search_bound)


def _shen_simplicial(D, theta, search_bound) -> ShenCertificate:
    if not theta:
        return ShenCertificate(0, (), IntMatrix.zeros(0, 0))
    s = max(t.stage for t in theta)
    for attempt in range(search_bound + 1):
        stage = s + attempt
        try:
            vecs = [push(D.system, t, stage).vector for t in theta]
        except ValueError:
            break
        if all(x >= 0 for v in vecs for x in v):
            n = D.stage_rank(stage)
            used = [t for t in range(n) if any(v[t] for v in vecs)]
            if not used:
                used = [0] if n else []
            phi = tuple(
                LimitElement(stage, tuple(1 if k == t else 0 for k in range(n))) for t in used
            )
            g = IntMatrix.from_rows([[v[t] for t in used] for v in vecs], cols=len(used))
            return ShenCertificate(len(used), phi, g)
    raise ShenDepthExceeded(
        f"shen-depth-exceeded: no nonnegative common stage within {search_bound} pushes"
    )


def _strict_scale(D: OrderedStagedSystem, stage: int) -> int:
    """Scaling factor of the distinguished first coordinate at ``stage``."""
    m = D.system.connect(stage)
    row0 = m.row(0)
    if row0[0] <= 0 or any(x != 0 for x in row0[1:]):
        raise ValueError("strict cone requires the first coordinate to scale positively in isolation")
    return row0[0]


def _shen_strict_first(D, theta, search_bound) -> ShenCertificate:
    sys = D.system
    s = max((t.stage for t in theta), default=0)
    vecs = [push(sys, t, s).vector for t in theta]
    nz = [v for v in vecs if any(v)]
    if not nz:
        n = D.stage_rank(s)
        phi = (LimitElement(s, tuple(1 if k == 0 else 0 for k in range(n))),)
        return ShenCertificate(1, phi, IntMatrix.zeros(len(theta), 1))
    span = hermite_row_basis(nz)
    rho = len(span)
    coords = []
    for v in vecs:
        c = row_lattice_coefficients(span, v)
        assert c is not None
        coords.append(c)
    # adapt the basis to the first-coordinate functional: one basis vector
    # carries the gcd of the first coordinates, the rest lie in {t = 0}
    t_parts = [b[0] for b in span]
    combo = _gcd_combination(t_parts)
    tau = sum(c * t for c, t in zip(combo, t_parts))
    assert tau > 0
    head = tuple(sum(c * b[k] for c, b in zip(combo, span)) for k in range(len(span[0])))
    flat = []
    for b in span:
        q = b[0] // tau
        flat.append(tuple(x - q * h for x, h in zip(b, head)))
    zero_t = hermite_row_basis(flat)
    assert len(zero_t) == rho - 1
    basis = [head] + list(zero_t)
    abar = []
    for v, old in zip(vecs, coords):
        if not any(v):
            abar.append([0] * rho)
            continue
        a0 = v[0] // tau
        rest = tuple(x - a0 * h for x, h in zip(v, head))
        tailc = row_lattice_coefficients(zero_t, rest)
        assert tailc is not None
        abar.append([a0] + list(tailc))
    margin = max((abs(a[j]) for a in abar for j in range(1, rho)), default=0)
    m_coef = margin + 1
    # push until the unit chunk count covers 2 * m * (rho - 1) + 1 atoms
    needed = 2 * m_coef * (rho - 1) + 1
    stage = s
    tau_k = tau
    pushed = [list(b) for b in basis]
    for _ in range(search_bound + 1):
        if tau_k >= needed:
            break
        scale = _strict_scale(D, stage)
        step = sys.connect(stage)
        pushed = [list(step.apply(b)) for b in pushed]
        stage += 1
        tau_k *= scale
        if scale == 1 and tau_k < needed:
            continue
    if tau_k < needed:
        raise ShenDepthExceeded(
            f"shen-depth-exceeded: unit chunk never covered {needed} atoms within bound"
        )
    rank = D.stage_rank(stage)
    y = [tuple(b[1:]) for b in pushed]  # h-parts; y[0] belongs to the head
    f_count = tau_k - 2 * m_coef * (rho - 1)
    w_tail = tuple(
        y[0][k] - m_coef * sum(y[j][k] for j in range(1, rho)) for k in range(rank - 1)
    )
    atoms = []
    columns = []
    for j in range(1, rho):
        atoms.append((1,) + y[j])
        columns.append([m_coef * a[0] + a[j] for a in abar])
    atoms.append((1,) + w_tail)
    columns.append([a[0] for a in abar])
    u_col = [
        sum(m_coef * a[0] - a[j] for j in range(1, rho)) + (f_count - 1) * a[0] for a in abar
    ]
    atoms.append((1,) + (0,) * (rank - 1))
    columns.append(u_col)
    # merge duplicate atoms, drop unused ones
    merged: dict = {}
    order = []
    for atom, col in zip(atoms, columns):
        if atom in merged:
            merged[atom] = [x + yv for x, yv in zip(merged[atom], col)]
        else:
            merged[atom] = list(col)
            order.append(atom)
    order = [atom for atom in order if any(merged[atom])]
    if not order:
        order = [atoms[-1]]
    phi = tuple(LimitElement(stage, atom) for atom in order)
    g = IntMatrix.from_rows(
        [[merged[atom][i] for atom in order] for i in range(len(theta))], cols=len(order)
    )
    if any(x < 0 for x in g.entries):
        raise ShenDepthExceeded("shen-depth-exceeded: internal coefficient went negative")
    return ShenCertificate(len(order), phi, g)


def _gcd_combination(values: Sequence[int]) -> list:
    """Integer coefficients c with sum c_i v_i = gcd(values) > 0."""
    coeffs = [0] * len(values)
    g = 0
    for i, v in enumerate(values):
        if v == 0:
            continue
        sign = 1 if v > 0 else -1
        if g == 0:
            g = abs(v)
            coeffs[i] = sign
            continue
        x, y = _bezout_pair(g, abs(v))
        coeffs = [x * c for c in coeffs]
        coeffs[i] += y * sign
        g = gcd(g, v)
    if g == 0:
        raise ValueError("all first coordinates vanish")
    assert sum(c * v for c, v in zip(coeffs, values)) == g
    return coeffs


def _bezout_pair(a: int, b: int):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return x0, y0


def verify_shen_certificate(
    D: OrderedStagedSystem,
    theta: Sequence[LimitElement],
    cert: ShenCertificate,
    depth: int = 6,
) -> bool:
    """Independent re-check of both certificate conditions.

    (1) every theta(i) equals its nonnegative combination of the phi(j);
    (2) every integer relation among the theta is inherited by g's columns.
    Exact; does not reuse any state from the solver.
    """
    if any(x < 0 for x in cert.g.entries):
        return False
    for p in cert.phi:
        if D.is_positive(p, depth) is not True:
            return False
    stage = max([p.stage for p in cert.phi] + [t.stage for t in theta], default=0)
    phi_vecs = [push(D.system, p, stage).vector for p in cert.phi]
    for i, t in enumerate(theta):
        target = push(D.system, t, stage).vector
        rank = len(target)
        combo = [0] * rank
        for j in range(cert.size):
            c = cert.g.entry(i, j)
            if c:
                for k in range(rank):
                    combo[k] += c * phi_vecs[j][k]
        same = limit_equal(D.system, LimitElement(stage, tuple(combo)), LimitElement(stage, target), depth)
        if same is not True:
            return False
    for k in relation_lattice_rows(D, theta):
        for j in range(cert.size):
            if sum(k[i] * cert.g.entry(i, j) for i in range(len(theta))) != 0:
                return False
    return True


# ---------------------------------------------------------------------------
# Positive-element enumerators
# ---------------------------------------------------------------------------


def basis_atom_enumerator(D: OrderedStagedSystem, start_stage: int = 1) -> Iterator[LimitElement]:
    """Basis classes of successive stages (simplicial systems)."""
    s = start_stage
    while True:
        n = D.stage_rank(s)
        for t in range(n):
            yield LimitElement(s, tuple(1 if k == t else 0 for k in range(n)))
        s += 1


def unit_atom_enumerator(D: OrderedStagedSystem, start_stage: int = 1) -> Iterator[LimitElement]:
    """Small positive chunks (1, 0, ...) at successive stages (strict cones)."""
    s = start_stage
    while True:
        n = D.stage_rank(s)
        yield LimitElement(s, tuple(1 if k == 0 else 0 for k in range(n)))
        s += 1


def constant_unit_enumerator(D: OrderedStagedSystem) -> Iterator[LimitElement]:
    while True:
        yield D.unit


# ---------------------------------------------------------------------------
# EHS realization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverageRecord:
    level: int
    element: LimitElement
    expression: tuple  # coefficients over the next level's theta values
    appears_literally: bool
    from_enumerator: bool


@dataclass(frozen=True)
class RealizationResult:
    diagram: BratteliDiagram
    thetas: tuple  # per level, tuple of LimitElement
    coverage: tuple
    endomorphism: Optional[DiagramEndomorphism] = None


def ehs_realize(
    D: OrderedStagedSystem,
    positive_enumerator: Iterable[LimitElement],
    depth: int,
    search_bound: int = 48,
) -> RealizationResult:
    """Realize the ordered system as a Bratteli diagram prefix.

    Level 0 carries the order unit; each step appends the next enumerated
    positive element (the unit once the enumerator is exhausted), factors
    through a Shen certificate, and uses the certificate's coefficients as
    the next incidence matrix.  The produced theta maps satisfy
    theta_n(i) = sum_j m_n(i, j) theta_{n+1}(j) exactly at every level.
    """
    enum = iter(positive_enumerator)
    unit = D.unit
    thetas = [(unit,)]
    levels = [DiagramLevel(1, (1,), None)]
    coverage = []
    for n in range(depth):
        x = next(enum, None)
        from_enum = x is not None
        if x is None:
            x = unit
        if D.is_positive(x, search_bound) is not True:
            raise ValueError("enumerated element is not positive")
        theta_prime = list(thetas[n]) + [x]
        cert = shen_solve(D, theta_prime, search_bound)
        l_n = len(thetas[n])
        m_rows = [[cert.g.entry(i, j) for j in range(cert.size)] for i in range(l_n)]
        keep = [j for j in range(cert.size) if any(r[j] for r in m_rows)
                or cert.g.entry(l_n, j)]
        if not keep:
            keep = list(range(cert.size))
        if any(all(r[j] == 0 for r in m_rows) for j in keep):
            raise RealizationError(
                f"level {n}: appended element needs a vertex no current element reaches; "
                "choose a finer enumerator or raise depth"
            )
        m_n = IntMatrix.from_rows([[r[j] for j in keep] for r in m_rows], cols=len(keep))
        new_thetas = tuple(cert.phi[j] for j in keep)
        w_prev = levels[n].weights
        w_next = tuple(
            sum(w_prev[i] * m_n.entry(i, j) for i in range(l_n)) for j in range(len(keep))
        )
        levels[n] = DiagramLevel(levels[n].size, levels[n].weights, m_n)
        levels.append(DiagramLevel(len(keep), w_next, None))
        thetas.append(new_thetas)
        literal = any(
            limit_equal(D.system, x, t, search_bound) is True for t in new_thetas
        )
        coverage.append(
            CoverageRecord(
                level=n,
                element=x,
                expression=tuple(cert.g.entry(l_n, j) for j in keep),
                appears_literally=literal,
                from_enumerator=from_enum,
            )
        )
    diagram = BratteliDiagram(tuple(levels))
    return RealizationResult(diagram, tuple(thetas), tuple(coverage))


def ehs_realize_with_endo(
    D: OrderedStagedSystem,
    phi: LimitEndomorphism,
    positive_enumerator: Iterable[LimitElement],
    depth: int,
    search_bound: int = 48,
) -> RealizationResult:
    """Realize the system together with a positive endomorphism.

    Each level factors (theta; phi(theta); next positive) through one Shen
    certificate and then factors that certificate's positives through a
    second one.  The composed coefficients give the incidence m_n and the
    multiplicity matrix q_n; the double factorization is what makes the
    intertwining identity m_n q_{n+1} = q_n m_{n+1} hold exactly, because
    the second certificate's columns inherit all relations among the first
    certificate's positives.
    """
    enum = iter(positive_enumerator)
    unit = D.unit
    thetas = [(unit,)]
    levels = [DiagramLevel(1, (1,), None)]
    q_list = []
    coverage = []
    for n in range(depth):
        cur = thetas[n]
        l_n = len(cur)
        images = []
        for t in cur:
            ft = phi.apply(D.system, t)
            if D.is_positive(ft, search_bound) is not True:
                raise EndomorphismNotPositive(
                    f"endomorphism-not-positive: image of a level-{n} element left the cone"
                )
            images.append(ft)
        x = next(enum, None)
        from_enum = x is not None
        if x is None:
            x = unit
        theta_prime = list(cur) + images + [x]
        cert1 = shen_solve(D, theta_prime, search_bound)
        cert2 = shen_solve(D, list(cert1.phi), search_bound)
        combined = cert1.g @ cert2.g  # rows follow theta_prime
        keep = [j for j in range(cert2.size) if any(combined.entry(i, j) for i in range(combined.rows))]
        if not keep:
            keep = list(range(cert2.size))
        if any(all(combined.entry(i, j) == 0 for i in range(l_n)) for j in keep):
            raise RealizationError(
                f"level {n}: a produced vertex is unreachable from the current elements"
            )
        m_n = IntMatrix.from_rows(
            [[combined.entry(i, j) for j in keep] for i in range(l_n)], cols=len(keep)
        )
        q_n = IntMatrix.from_rows(
            [[combined.entry(l_n + i, j) for j in keep] for i in range(l_n)], cols=len(keep)
        )
        new_thetas = tuple(cert2.phi[j] for j in keep)
        w_prev = levels[n].weights
        w_next = tuple(
            sum(w_prev[i] * m_n.entry(i, j) for i in range(l_n)) for j in range(len(keep))
        )
        levels[n] = DiagramLevel(levels[n].size, levels[n].weights, m_n)
        levels.append(DiagramLevel(len(keep), w_next, None))
        thetas.append(new_thetas)
        q_list.append(q_n)
        _check_level_identities(D, cur, images, new_thetas, m_n, q_n, search_bound)
        literal = any(limit_equal(D.system, x, t, search_bound) is True for t in new_thetas)
        coverage.append(
            CoverageRecord(
                level=n,
                element=x,
                expression=tuple(combined.entry(2 * l_n, j) for j in keep),
                appears_literally=literal,
                from_enumerator=from_enum,
            )
        )
    diagram = BratteliDiagram(tuple(levels))
    endo = DiagramEndomorphism(tuple(q_list))
    if not validate_endomorphism(diagram, endo):
        raise RealizationError("produced multiplicities fail the intertwining identity")
    return RealizationResult(diagram, tuple(thetas), tuple(coverage), endomorphism=endo)


def _check_level_identities(D, cur, images, new_thetas, m_n, q_n, bound):
    """Exact postconditions: theta and phi(theta) both factor as claimed."""
    stage = max(t.stage for t in new_thetas)
    vecs = [push(D.system, t, stage).vector for t in new_thetas]
    rank = len(vecs[0]) if vecs else 0
    for i, t in enumerate(cur):
        for mat, source in ((m_n, t), (q_n, images[i])):
            combo = [0] * rank
            for j in range(mat.cols):
                c = mat.entry(i, j)
                if c:
                    for k in range(rank):
                        combo[k] += c * vecs[j][k]
            ok = limit_equal(D.system, LimitElement(stage, tuple(combo)), source, bound)
            if ok is not True:
                raise RealizationError("level identity failed exact verification")
