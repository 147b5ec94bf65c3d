"""Stable transversals of the cluster set and the cord sets they generate.

A transversal picks one taxon from each cluster of the tree (both sides of
every edge).  A *stable* transversal additionally satisfies: whenever its
pick for a cluster A lies in a sub-cluster B, it must pick the same taxon
for B.  Feeding a stable transversal to triplet_cover yields a cord set of
size 2n-3 that is simultaneously a triplet cover, a shellable lasso and a
2d-tree; those downstream facts live in the lasso module, this one only
builds and checks the combinatorial objects.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Sequence

from .cords import Cord
from .tolerance import DEFAULT_EPSILON
from .tree import TreeError, XTree

#: A transversal maps each cluster (frozen set of taxa) to a member taxon.
Transversal = dict


def _require_total(f: Mapping[frozenset, str], tree: XTree) -> frozenset:
    clusters = tree.clusters()
    missing = [c for c in clusters if c not in f]
    if missing:
        shown = ",".join(sorted(min(missing, key=min)))
        raise ValueError(
            f"transversal is missing {len(missing)} cluster(s), e.g. {{{shown}}}"
        )
    return clusters


def is_transversal(f: Mapping[frozenset, str], tree: XTree) -> bool:
    """f picks a member of every cluster of the tree."""
    clusters = _require_total(f, tree)
    return all(f[c] in c for c in clusters)


def stability_violation(
    f: Mapping[frozenset, str], tree: XTree
) -> tuple[frozenset, frozenset] | None:
    """A witnessing cluster pair (A, B) with f(A) in B ⊆ A but f(A) != f(B).

    Returns None when no pair violates stability.  Pairs are scanned in a
    deterministic order so the witness is reproducible.
    """
    clusters = sorted(_require_total(f, tree), key=lambda c: (len(c), sorted(c)))
    for b, a in itertools.combinations(clusters, 2):
        # sorted by size, so b can only be the subset of the pair
        if f[a] in b and b < a and f[a] != f[b]:
            return (a, b)
    return None


def is_stable(f: Mapping[frozenset, str], tree: XTree) -> bool:
    """Transversality plus stability over all nested cluster pairs."""
    if not is_transversal(f, tree):
        return False
    return stability_violation(f, tree) is None


def min_order_transversal(tree: XTree, order: Sequence[str] | None = None) -> Transversal:
    """The stable transversal g(A) = min A under a total order on X.

    *order* is a permutation of the taxa (default: sorted labels).  Stability
    is automatic: if min A lands in B ⊆ A then min B = min A.
    """
    if order is None:
        order = sorted(tree.taxa)
    rank = _rank_of(order, tree)
    return {c: min(c, key=rank.__getitem__) for c in tree.clusters()}


def closest_leaf_transversal(
    tree: XTree,
    mode: str = "closest",
    tiebreak: Sequence[str] | None = None,
    eps: float = DEFAULT_EPSILON,
) -> Transversal:
    """Stable transversal picking per cluster a closest (or furthest) leaf.

    For the cluster A cut off by edge e, each leaf of A is scored by its
    weighted distance to the endpoint of e on A's side; the extremal set is
    then resolved by the *tiebreak* total order (default: sorted labels).
    Requires a proper weighting.
    """
    if mode not in ("closest", "furthest"):
        raise ValueError(f"mode must be 'closest' or 'furthest', got {mode!r}")
    if not tree.is_properly_weighted():
        raise TreeError("closest/furthest transversals need a proper edge weighting")
    rank = _rank_of(tiebreak if tiebreak is not None else sorted(tree.taxa), tree)

    f: Transversal = {}
    for u, v, _ in tree.edges():
        for near, far in ((u, v), (v, u)):
            cluster = tree.side_leaves(near, far)
            dist = tree.vertex_distances(near)
            scores = {leaf: dist[tree.leaf_vertex(leaf)] for leaf in cluster}
            best = min(scores.values()) if mode == "closest" else max(scores.values())
            tol = eps * max(1.0, abs(best))
            extremal = [leaf for leaf, s in scores.items() if abs(s - best) <= tol]
            f[cluster] = min(extremal, key=rank.__getitem__)
    return f


def _rank_of(order: Sequence[str], tree: XTree) -> dict[str, int]:
    if set(order) != tree.taxa or len(order) != tree.n_leaves:
        raise ValueError("order must be a permutation of the taxon set")
    return {label: i for i, label in enumerate(order)}


def triplet_cover(tree: XTree, f: Mapping[frozenset, str], force: bool = False) -> frozenset[Cord]:
    """The cord set gathering, per interior vertex, the triangle on the
    f-images of the three components hanging off it.

    With a stable transversal the result has size exactly 2n-3.  A merely
    transversal (non-stable) f still produces a plain triplet cover; pass
    force=True to allow that, otherwise non-stable input is rejected.
    """
    if not tree.is_fully_resolved():
        raise TreeError("triplet covers are defined for fully-resolved trees")
    if not is_transversal(f, tree):
        raise ValueError("f is not a transversal: some f(A) is outside A")
    if not force and stability_violation(f, tree) is not None:
        raise ValueError(
            "transversal is not stable (pass force=True for a plain triplet cover)"
        )
    cords = set()
    for v in tree.interior_vertices():
        images = [f[component] for component in tree.components(v)]
        cords.update(Cord(x, y) for x, y in itertools.combinations(images, 2))
    return frozenset(cords)


def is_cover(tree: XTree, cords: Iterable[Cord]) -> bool:
    """Does L hit every pair of components at every interior vertex?"""
    if not tree.is_fully_resolved():
        raise TreeError("covers are defined for fully-resolved trees")
    cords = _cords_over(cords, tree)
    for v in tree.interior_vertices():
        components = tree.components(v)
        where = {t: i for i, comp in enumerate(components) for t in comp}
        hit = set()
        for c in cords:
            ia, ib = where[c.a], where[c.b]
            if ia != ib:
                hit.add(frozenset((ia, ib)))
        if len(hit) < 3:
            return False
    return True


def is_triplet_cover(tree: XTree, cords: Iterable[Cord]) -> bool:
    """Does L contain, at every interior vertex, a full triangle with one
    corner in each of the three components?"""
    if not tree.is_fully_resolved():
        raise TreeError("triplet covers are defined for fully-resolved trees")
    cords = _cords_over(cords, tree)
    for v in tree.interior_vertices():
        components = tree.components(v)
        where = {t: i for i, comp in enumerate(components) for t in comp}
        if not _has_rainbow_triangle(cords, where, components):
            return False
    return True


def _cords_over(cords: Iterable[Cord], tree: XTree) -> set[Cord]:
    cords = set(cords)
    stray = {t for c in cords for t in (c.a, c.b)} - tree.taxa
    if stray:
        raise KeyError(f"cords mention taxa outside the tree: {sorted(stray)!r}")
    return cords


def _has_rainbow_triangle(cords, where, components) -> bool:
    for c in cords:
        ia, ib = where[c.a], where[c.b]
        if ia == ib:
            continue
        (ic,) = {0, 1, 2} - {ia, ib}
        for t in components[ic]:
            if Cord(c.a, t) in cords and Cord(c.b, t) in cords:
                return True
    return False
