"""Classification machinery for cord sets: distance closure, shellability,
2d-tree recognition and construction, and lasso certificates.

Closure (the extension rule)
----------------------------
Given distances on a cord set, a quadruple x,y,u,z with every cord except xz
known and d(x,y)+d(u,z) strictly below d(x,u)+d(y,z) pins the quartet shape,
and the missing value follows from the four-point equality:

    d(x,z) := d(x,u) + d(y,z) - d(y,u)

Iterating to a fixpoint yields the closure of the cord set.  When the input
cords contain a shellable lasso of the source tree, the closure reaches all
pairs, after which the whole tree is recoverable (see reconstruct).

Shellability
------------
A cord set L is a shellable lasso for a tree T when the missing cords admit
an ordering in which each cord ab has "pivots" x,y: T restricted to
{a,b,x,y} is the quartet ax||yb and the other five cords of the quartet are
already available.  Saturation is computed greedily: once a cord is
derivable it stays derivable (the available set only grows and the quartet
shape is a property of T alone), so the set of reachable cords is a closure
and any maximal greedy run finds it; order influences the trace, never the
verdict.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .cords import Cord, PartialDistance, all_cords, cord_taxa, induced_distance
from .tolerance import DEFAULT_EPSILON, approx_equal, definitely_less
from .tree import TreeError, XTree


class InconsistentDistanceError(ValueError):
    """The same cord is derivable with conflicting values (input is not a
    restriction of any tree metric)."""


# ---------------------------------------------------------------------------
# Rule-based closure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosureStep:
    cord: Cord
    quadruple: tuple[str, str, str, str]  # (x, y, u, z) with cord == xz
    value: float

    def line(self) -> str:
        x, y, u, z = self.quadruple
        return (
            f"{x} {z} := d({x},{u})+d({y},{z})-d({y},{u})"
            f" via ({x},{y},{u},{z}) = {self.value!r}"
        )


@dataclass(frozen=True)
class ClosureTrace:
    steps: tuple[ClosureStep, ...]
    final: PartialDistance

    @property
    def missing(self) -> frozenset[Cord]:
        return all_cords(self.final.taxa) - self.final.cords

    @property
    def is_complete(self) -> bool:
        return not self.missing

    def lines(self) -> list[str]:
        return [s.line() for s in self.steps]


def closure(
    d: PartialDistance,
    eps: float = DEFAULT_EPSILON,
    exact_rational: bool = False,
) -> ClosureTrace:
    """Fixpoint of the distance-extension rule, with a step-by-step trace.

    Candidate quadruples are scanned in lexicographic taxon order and each
    derived cord is inserted immediately, so the trace is deterministic.
    Whenever a cord becomes derivable, every quadruple able to derive it at
    that moment is cross-checked; disagreement beyond tolerance raises
    InconsistentDistanceError.  With exact_rational=True all arithmetic and
    comparisons are exact (for adversarial fixtures); values convert back to
    float in the result.
    """
    if not len(d):
        raise ValueError("closure needs a non-empty distance map")
    taxa = sorted(d.taxa)
    if exact_rational:
        known: dict[Cord, object] = {c: Fraction(d[c]) for c in d.cords}
        eff_eps = 0.0
    else:
        known = dict(d)
        eff_eps = eps

    total = len(taxa) * (len(taxa) - 1) // 2
    steps: list[ClosureStep] = []
    changed = len(known) < total
    while changed:
        changed = False
        for quad in itertools.combinations(taxa, 4):
            derived = _derive(quad, known, eff_eps)
            if derived is None:
                continue
            cord, quadruple, value = derived
            _cross_check(cord, value, known, taxa, eff_eps)
            known[cord] = value
            steps.append(ClosureStep(cord, quadruple, float(value)))
            changed = True
        if len(known) == total:
            break

    final = PartialDistance({c: float(v) for c, v in known.items()})
    return ClosureTrace(tuple(steps), final)


def _derive(quad, known, eps):
    """Apply the extension rule to one 4-taxon set, if exactly one cord is
    missing and the strict inequality singles out the quartet shape."""
    cords6 = [Cord(p, q) for p, q in itertools.combinations(quad, 2)]
    missing = [c for c in cords6 if c not in known]
    if len(missing) != 1:
        return None
    (m,) = missing
    p1, p2 = sorted(set(quad) - {m.a, m.b})
    s1 = known[Cord(m.a, p1)] + known[Cord(m.b, p2)]
    s2 = known[Cord(m.a, p2)] + known[Cord(m.b, p1)]
    base = known[Cord(p1, p2)]
    if definitely_less(s1, s2, eps):
        # quartet is (m.a p1 || p2 m.b): x=m.a, y=p1, u=p2, z=m.b
        return m, (m.a, p1, p2, m.b), s2 - base
    if definitely_less(s2, s1, eps):
        return m, (m.a, p2, p1, m.b), s1 - base
    return None


def _cross_check(cord, value, known, taxa, eps):
    exact = eps == 0
    for q1, q2 in itertools.combinations([t for t in taxa if t not in (cord.a, cord.b)], 2):
        needed = (
            Cord(cord.a, q1),
            Cord(cord.a, q2),
            Cord(cord.b, q1),
            Cord(cord.b, q2),
            Cord(q1, q2),
        )
        if any(c not in known for c in needed):
            continue
        alt = _derive((cord.a, cord.b, q1, q2), known, eps)
        if alt is None:
            continue
        other = alt[2]
        agree = value == other if exact else approx_equal(value, other, eps)
        if not agree:
            raise InconsistentDistanceError(
                f"{cord} derivable as both {float(value)} and {float(other)}"
            )


# ---------------------------------------------------------------------------
# Shellability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShellingStep:
    cord: Cord
    pivots: tuple[str, str]  # (x, y): quartet is  cord.a x || y cord.b

    def line(self) -> str:
        return f"{self.cord.a} {self.cord.b} | pivots {self.pivots[0]} {self.pivots[1]}"


@dataclass(frozen=True)
class ShellingResult:
    steps: tuple[ShellingStep, ...]
    missing: frozenset[Cord]

    @property
    def is_complete(self) -> bool:
        return not self.missing

    def __bool__(self) -> bool:
        return self.is_complete

    def lines(self) -> list[str]:
        return [s.line() for s in self.steps]


def is_shellable(tree: XTree, cords: Iterable[Cord], rng=None) -> ShellingResult:
    """Greedy saturation of derivable cords; complete iff L is a shellable
    lasso for the tree.

    A cord ab is derivable once pivots x,y exist with the restriction to
    {a,b,x,y} equal to ax||yb and the other five cords available.  Derivable
    cords are tracked per 4-taxon set by counting available cords, so each
    insertion touches only the quartets containing it.  *rng* (a
    random.Random) shuffles the processing order; the verdict is unaffected
    (saturation is a monotone closure), which the test suite exercises.
    """
    if not tree.is_fully_resolved():
        raise TreeError("shellability is defined for fully-resolved trees")
    taxa = sorted(tree.taxa)
    present = set(cords)
    stray = cord_taxa(present) - tree.taxa
    if stray:
        raise KeyError(f"cords mention taxa outside the tree: {sorted(stray)!r}")
    quartets = list(itertools.combinations(taxa, 4))
    if rng is not None:
        rng.shuffle(quartets)
    count = []
    by_cord: dict[Cord, list[int]] = {c: [] for c in all_cords(taxa)}
    for idx, quad in enumerate(quartets):
        k = 0
        for p, q in itertools.combinations(quad, 2):
            c = Cord(p, q)
            by_cord[c].append(idx)
            if c in present:
                k += 1
        count.append(k)

    def derivable(idx: int) -> ShellingStep | None:
        quad = quartets[idx]
        gap = [Cord(p, q) for p, q in itertools.combinations(quad, 2) if Cord(p, q) not in present]
        if len(gap) != 1:
            return None
        (m,) = gap
        split = tree.quartet_topology(*quad)
        if split is None:
            return None
        (side,) = [s for s in split if m.a in s]
        if m.b in side:
            return None  # quartet keeps a and b together: no pivot pair here
        x = next(iter(side - {m.a}))
        other = next(s for s in split if s is not side)
        y = next(iter(other - {m.b}))
        return ShellingStep(m, (x, y))

    queue = deque(idx for idx in range(len(quartets)) if count[idx] == 5)
    steps: list[ShellingStep] = []
    while queue:
        idx = queue.popleft()
        if count[idx] != 5:
            continue
        step = derivable(idx)
        if step is None:
            continue
        present.add(step.cord)
        steps.append(step)
        for jdx in by_cord[step.cord]:
            count[jdx] += 1
            if count[jdx] == 5:
                queue.append(jdx)

    missing = all_cords(taxa) - present
    return ShellingResult(tuple(steps), frozenset(missing))


def verify_shelling(
    tree: XTree,
    cords: Iterable[Cord],
    steps: Sequence[tuple[Cord, tuple[str, str]] | ShellingStep],
    require_complete: bool = False,
) -> None:
    """Validate an explicit shelling ordering step by step.

    Each step must name a cord absent so far whose five companion cords are
    available and whose quartet with the pivots separates the cord's ends.
    The pivot pair is accepted in either orientation (the quartet shape
    determines which pivot sits with which end).  Raises ValueError naming
    the first failing step.
    """
    available = set(cords)
    for i, step in enumerate(steps, start=1):
        cord, (x, y) = (step.cord, step.pivots) if isinstance(step, ShellingStep) else step
        if cord in available:
            raise ValueError(f"step {i}: cord {cord} is already available")
        companions = [Cord(p, q) for p, q in itertools.combinations((cord.a, cord.b, x, y), 2)]
        absent = [c for c in companions if c != cord and c not in available]
        if absent:
            raise ValueError(f"step {i}: companion cord {absent[0]} not yet available")
        split = tree.quartet_topology(cord.a, cord.b, x, y)
        if split is None or frozenset({cord.a, cord.b}) in split:
            raise ValueError(
                f"step {i}: quartet on {{{cord.a},{cord.b},{x},{y}}} does not "
                f"separate {cord.a} from {cord.b}"
            )
        available.add(cord)
    if require_complete and available != all_cords(tree.taxa):
        raise ValueError("shelling does not reach every cord")


# ---------------------------------------------------------------------------
# 2d-trees
# ---------------------------------------------------------------------------


def is_2dtree(
    cords: Iterable[Cord],
    taxa: Iterable[str] | None = None,
    greedy: bool = False,
) -> list[str] | None:
    """An ordering witnessing that (X, L) is a 2d-tree, or None.

    A 2d-tree ordering starts with an edge and adds each later vertex with
    exactly two earlier neighbours.  Recognition runs the definition in
    reverse: repeatedly delete a vertex of current degree exactly 2.  The
    definition does not require the two back-neighbours to be adjacent, so a
    wrong deletion choice could in principle matter; the default therefore
    backtracks over choices with memoisation on the remaining vertex set
    (greedy=True takes the first choice only, as a fast path).  |L| = 2|X|-3
    is a necessary edge count and rejects early.
    """
    cords = set(cords)
    taxa = set(taxa) if taxa is not None else set(cord_taxa(cords))
    stray = cord_taxa(cords) - taxa
    if stray:
        raise ValueError(f"cords mention taxa outside X: {sorted(stray)!r}")
    n = len(taxa)
    if n < 2 or len(cords) != 2 * n - 3:
        return None

    adj: dict[str, set[str]] = {t: set() for t in taxa}
    for c in cords:
        adj[c.a].add(c.b)
        adj[c.b].add(c.a)

    dead: set[frozenset] = set()

    def eliminate(remaining: frozenset) -> list[str] | None:
        if len(remaining) == 2:
            a, b = sorted(remaining)
            return [a, b] if b in adj[a] else None
        key = remaining
        if key in dead:
            return None
        degree = {v: len(adj[v] & remaining) for v in remaining}
        if min(degree.values()) < 2:
            dead.add(key)
            return None  # a vertex below degree 2 can never be eliminated
        candidates = sorted(v for v in remaining if degree[v] == 2)
        if greedy:
            candidates = candidates[:1]
        for v in candidates:
            rest = eliminate(remaining - {v})
            if rest is not None:
                rest.append(v)
                return rest
        dead.add(key)
        return None

    return eliminate(frozenset(taxa))


def verify_2dtree_ordering(cords: Iterable[Cord], ordering: Sequence[str]) -> bool:
    """Check a specific vertex ordering against the 2d-tree definition."""
    cords = set(cords)
    if len(ordering) != len(set(ordering)) or set(ordering) != set(cord_taxa(cords)):
        return False
    if len(ordering) < 2 or Cord(ordering[0], ordering[1]) not in cords:
        return False
    for i in range(2, len(ordering)):
        back = sum(1 for j in range(i) if Cord(ordering[i], ordering[j]) in cords)
        if back != 2:
            return False
    return True


def tree_from_2dtree(
    cords: Iterable[Cord],
    ordering: Sequence[str],
    certify: bool = False,
    eps: float = DEFAULT_EPSILON,
) -> XTree:
    """A fully-resolved tree for which the 2d-tree cord set is a strong lasso.

    Follows the constructive recipe: start from the first two vertices as a
    single edge; each later vertex, with back-neighbours x_j, x_k, becomes a
    leaf attached to a fresh subdivision vertex on the tree path between x_j
    and x_k.  Which path edge to subdivide is immaterial for the guarantee;
    for determinism the edge whose midpoint lies closest to the path midpoint
    is split at its own midpoint, ties resolved towards x_j.  With
    certify=True the unit-pendant weighting is checked: the closure of the
    induced distances on L must reach every cord.
    """
    cords = set(cords)
    ordering = list(ordering)
    if not verify_2dtree_ordering(cords, ordering):
        raise ValueError("ordering is not a valid 2d-tree ordering of the cord set")

    counter = itertools.count()
    leaf_of = {ordering[0]: next(counter), ordering[1]: next(counter)}
    adj: dict[int, dict[int, float]] = {}

    def connect(u: int, v: int, w: float) -> None:
        adj.setdefault(u, {})[v] = w
        adj.setdefault(v, {})[u] = w

    connect(leaf_of[ordering[0]], leaf_of[ordering[1]], 1.0)

    for i in range(2, len(ordering)):
        label = ordering[i]
        xj, xk = [t for t in ordering[:i] if Cord(label, t) in cords]
        path = _vertex_path(adj, leaf_of[xj], leaf_of[xk])
        edge, offset = _edge_nearest_path_midpoint(adj, path)
        u, v = edge
        w = adj[u][v]
        del adj[u][v], adj[v][u]
        mid = next(counter)
        connect(u, mid, w / 2.0)
        connect(mid, v, w / 2.0)
        leaf = next(counter)
        leaf_of[label] = leaf
        connect(mid, leaf, 1.0)

    tree = XTree(
        [(u, v, w) for u, nbrs in adj.items() for v, w in nbrs.items() if u < v],
        {vid: lab for lab, vid in leaf_of.items()},
    )
    if certify:
        trace = closure(induced_distance(tree, cords), eps=eps)
        if not trace.is_complete:
            raise AssertionError(
                "constructed tree does not certify: closure left "
                f"{len(trace.missing)} cord(s) underived"
            )
    return tree


def _vertex_path(adj, src: int, dst: int) -> list[int]:
    parent = {src: src}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        if v == dst:
            break
        for nb in adj[v]:
            if nb not in parent:
                parent[nb] = v
                queue.append(nb)
    path = [dst]
    while path[-1] != src:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def _edge_nearest_path_midpoint(adj, path: list[int]) -> tuple[tuple[int, int], float]:
    total = sum(adj[a][b] for a, b in zip(path, path[1:]))
    target = total / 2.0
    best = None
    prefix = 0.0
    for a, b in zip(path, path[1:]):
        w = adj[a][b]
        score = abs(prefix + w / 2.0 - target)
        if best is None or score < best[0]:
            best = (score, (a, b), prefix)
        prefix += w
    return best[1], best[2]


# ---------------------------------------------------------------------------
# Edge-weight lasso certificate (exact rank of the path-incidence matrix)
# ---------------------------------------------------------------------------


def integer_matrix_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank over the rationals of an integer matrix, by fraction-free
    (Bareiss) elimination: exact, no floating point."""
    m = [list(map(int, row)) for row in rows]
    if not m:
        return 0
    n_rows, n_cols = len(m), len(m[0])
    rank = 0
    prev = 1
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        p = m[rank][col]
        for r in range(rank + 1, n_rows):
            factor = m[r][col]
            row = m[r]
            top = m[rank]
            for c in range(n_cols):
                row[c] = (row[c] * p - factor * top[c]) // prev
        prev = p
        rank += 1
        if rank == n_rows:
            break
    return rank


def path_incidence_matrix(tree: XTree, cords: Iterable[Cord]) -> list[list[int]]:
    """0/1 matrix: one row per cord (sorted), one column per edge (sorted),
    1 where the edge lies on the cord's leaf path."""
    edge_index = {(u, v): i for i, (u, v, _) in enumerate(tree.edges())}
    rows = []
    for c in sorted(set(cords)):
        row = [0] * len(edge_index)
        for e in tree.path_edges(c.a, c.b):
            row[edge_index[e]] = 1
        rows.append(row)
    return rows


def edge_weight_lasso_certificate(tree: XTree, cords: Iterable[Cord]) -> bool:
    """True iff the distances on the cords determine the edge weights
    uniquely: the path-incidence matrix has full column rank 2n-3."""
    if not tree.is_fully_resolved():
        raise TreeError("the rank certificate assumes a fully-resolved tree")
    cords = set(cords)
    n_edges = len(tree.edges())
    if len(cords) < n_edges:
        return False
    return integer_matrix_rank(path_incidence_matrix(tree, cords)) == n_edges


# ---------------------------------------------------------------------------
# Topological-lasso oracle (small n, exhaustive over alternative trees)
# ---------------------------------------------------------------------------

MAX_ORACLE_TAXA = 9


def all_topologies(taxa: Sequence[str]):
    """Yield every fully-resolved tree topology on the taxa (unit weights),
    in a deterministic order: (2n-5)!! trees, each exactly once."""
    taxa = sorted(taxa)
    if len(taxa) < 3:
        raise ValueError("topology enumeration needs at least 3 taxa")

    def expand(edges, leaf_of, next_id, i):
        if i == len(taxa):
            yield XTree([(u, v, 1.0) for u, v in edges], dict(leaf_of))
            return
        leaf, mid = next_id, next_id + 1
        for k in range(len(edges)):
            u, v = edges[k]
            new_edges = edges[:k] + edges[k + 1 :] + [(u, mid), (mid, v), (mid, leaf)]
            new_leaf_of = dict(leaf_of)
            new_leaf_of[leaf] = taxa[i]
            yield from expand(new_edges, new_leaf_of, next_id + 2, i + 1)

    center = 3
    base_edges = [(0, center), (1, center), (2, center)]
    base_leaves = {0: taxa[0], 1: taxa[1], 2: taxa[2]}
    yield from expand(base_edges, base_leaves, 4, 3)


def topological_lasso_oracle(
    tree: XTree,
    cords: Iterable[Cord],
    eps: float = DEFAULT_EPSILON,
) -> XTree | None:
    """Search for a different tree fitting the induced distances on L.

    Enumerates every alternative fully-resolved topology and asks, by linear
    feasibility, whether some weighting with non-negative pendant edges and
    non-negative interior edges reproduces the L-distances of the input
    tree.  Interior edges are allowed to hit zero: such a fit is returned
    with the zero edges contracted, i.e. the witness may be multifurcating
    (a properly weighted tree metrically identical to the degenerate fit).
    Returns the first witness in enumeration order, with its fitted weights,
    or None when no alternative fits -- in which case L is a topological
    lasso for this weighting ("generically topological": other weightings of
    the input tree are not examined).
    """
    from scipy.optimize import linprog

    taxa = sorted(tree.taxa)
    if len(taxa) > MAX_ORACLE_TAXA:
        raise ValueError(f"oracle supports at most {MAX_ORACLE_TAXA} taxa, got {len(taxa)}")
    if not tree.is_fully_resolved():
        raise TreeError("the oracle assumes a fully-resolved input tree")
    if not tree.is_properly_weighted():
        raise TreeError("the oracle needs a proper edge weighting")
    cords = sorted(set(cords))
    stray = cord_taxa(cords) - tree.taxa
    if stray:
        raise KeyError(f"cords mention taxa outside the tree: {sorted(stray)!r}")
    if not cords:
        raise ValueError("oracle needs a non-empty cord set")

    b = np.array([tree.distance(c.a, c.b) for c in cords])
    fit_tol = max(1e-7, eps) * max(1.0, float(np.max(np.abs(b))))
    own_splits = tree.splits()

    for candidate in all_topologies(taxa):
        if candidate.splits() == own_splits:
            continue
        edges = candidate.edges()
        a_mat = np.array(
            [
                [1 if e in path else 0 for e in ((u, v) for u, v, _ in edges)]
                for path in (set(candidate.path_edges(c.a, c.b)) for c in cords)
            ],
            dtype=float,
        )
        # Minimising the interior weight makes degenerate fits land exactly
        # on the boundary, so the contraction below is decisive.
        interior = np.array(
            [0.0 if candidate.is_leaf(u) or candidate.is_leaf(v) else 1.0 for u, v, _ in edges]
        )
        res = linprog(
            c=interior,
            A_ub=np.vstack([a_mat, -a_mat]),
            b_ub=np.concatenate([b + fit_tol, -(b - fit_tol)]),
            bounds=[(0, None)] * len(edges),
            method="highs",
        )
        if not res.success:
            continue
        weights = np.maximum(res.x, 0.0)
        if np.max(np.abs(a_mat @ weights - b)) > 2 * fit_tol:
            continue
        return _contract_tiny_interior(candidate, weights, 10 * fit_tol)
    return None


def _contract_tiny_interior(candidate: XTree, weights, tol: float) -> XTree:
    """Rebuild the fitted tree, contracting interior edges of ~zero weight."""
    edges = candidate.edges()
    parent: dict[int, int] = {}

    def find(v: int) -> int:
        while v in parent:
            v = parent[v]
        return v

    for (u, v, _), w in zip(edges, weights):
        interior = not candidate.is_leaf(u) and not candidate.is_leaf(v)
        if interior and w <= tol:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[max(ru, rv)] = min(ru, rv)

    merged = []
    for (u, v, _), w in zip(edges, weights):
        ru, rv = find(u), find(v)
        if ru != rv:
            merged.append((ru, rv, float(w)))
    labels = {find(candidate.leaf_vertex(t)): t for t in candidate.taxa}
    return XTree(merged, labels)
