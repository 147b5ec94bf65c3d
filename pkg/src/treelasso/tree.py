"""Unrooted leaf-labelled trees (X-trees) with non-negative edge weights.

An X-tree has its leaves bijectively labelled by a taxon set X, carries a
non-negative weight on every edge, and contains no degree-2 vertices.  The
weighted path length between two leaves induces the usual tree metric on X.

This module provides the representation plus the structural queries the rest
of the package is built on: Newick I/O in a canonical form, path distances,
clusters/splits, restriction to a taxon subset, quartet topologies, cherries,
topology equality, and a seeded random-tree generator for property tests.

Conventions
-----------
* Taxon labels match ``[A-Za-z0-9_.-]+`` and are unique within a tree.
* Vertices are opaque integer ids; only leaves are labelled.
* ``XTree`` values are immutable after construction: every operation returns
  a new tree or a plain value, so instances are safe to share between
  threads.
* Path distances are computed with ``math.fsum`` (correctly rounded, order
  independent), so ``distance(x, y) == distance(y, x)`` exactly.
"""

from __future__ import annotations

import itertools
import math
import random
import re
from collections import deque
from functools import cached_property
from typing import Iterable, Mapping

LABEL_PATTERN = re.compile(r"[A-Za-z0-9_.\-]+\Z")

#: A split is a bipartition of the taxon set, stored as a frozenset of its
#: two sides (each a frozenset of labels).
Split = frozenset

#: A resolved quartet topology: frozenset of the two cherry-side pairs.
#: ``None`` stands for the unresolved (star) case.
QuartetSplit = frozenset


class TreeError(ValueError):
    """Structural problem with a tree (not a parse error)."""


class NewickError(ValueError):
    """Malformed Newick input, with 1-based line/column when available."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


def _check_label(label: str) -> str:
    if not LABEL_PATTERN.match(label or ""):
        raise TreeError(f"invalid taxon label {label!r}")
    return label


class XTree:
    """Unrooted edge-weighted tree with labelled leaves and no degree-2 vertices."""

    def __init__(
        self,
        edges: Iterable[tuple[int, int, float]],
        leaf_labels: Mapping[int, str],
    ):
        adj: dict[int, dict[int, float]] = {}
        for u, v, w in edges:
            if u == v:
                raise TreeError(f"self-loop at vertex {u}")
            w = float(w)
            if not math.isfinite(w) or w < 0.0:
                raise TreeError(f"edge ({u},{v}) has invalid weight {w}")
            if v in adj.get(u, ()):
                raise TreeError(f"duplicate edge ({u},{v})")
            adj.setdefault(u, {})[v] = w
            adj.setdefault(v, {})[u] = w

        if len(adj) < 2:
            raise TreeError("a tree needs at least two leaves")
        n_edges = sum(len(nb) for nb in adj.values()) // 2
        if n_edges != len(adj) - 1 or not self._connected(adj):
            raise TreeError("edges do not form a single tree")

        leaf_map: dict[str, int] = {}
        for vertex, nbrs in adj.items():
            deg = len(nbrs)
            if deg == 2:
                raise TreeError(f"vertex {vertex} has degree 2")
            if deg == 1:
                if vertex not in leaf_labels:
                    raise TreeError(f"leaf vertex {vertex} carries no taxon")
            elif vertex in leaf_labels:
                raise TreeError(f"labelled vertex {vertex} is not a leaf")
        for vertex, label in leaf_labels.items():
            _check_label(label)
            if vertex not in adj or len(adj[vertex]) != 1:
                raise TreeError(f"label {label!r} attached to non-leaf vertex {vertex}")
            if label in leaf_map:
                raise TreeError(f"duplicate taxon label {label!r}")
            leaf_map[label] = vertex

        self._adj = adj
        self._leaf_by_label = leaf_map
        self._label_by_leaf = {v: lab for lab, v in leaf_map.items()}

    @staticmethod
    def _connected(adj: dict[int, dict[int, float]]) -> bool:
        start = next(iter(adj))
        seen = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for nb in adj[v]:
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        return len(seen) == len(adj)

    # -- basic accessors ------------------------------------------------

    @property
    def taxa(self) -> frozenset[str]:
        return frozenset(self._leaf_by_label)

    @property
    def n_leaves(self) -> int:
        return len(self._leaf_by_label)

    def vertices(self) -> list[int]:
        return sorted(self._adj)

    def edges(self) -> list[tuple[int, int, float]]:
        """All edges as (u, v, weight) with u < v, sorted."""
        out = []
        for u, nbrs in self._adj.items():
            for v, w in nbrs.items():
                if u < v:
                    out.append((u, v, w))
        out.sort()
        return out

    def neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(self._adj[v]))

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def weight(self, u: int, v: int) -> float:
        return self._adj[u][v]

    def is_leaf(self, v: int) -> bool:
        return len(self._adj[v]) == 1

    def leaf_vertex(self, label: str) -> int:
        try:
            return self._leaf_by_label[label]
        except KeyError:
            raise KeyError(f"unknown taxon {label!r}") from None

    def leaf_label(self, v: int) -> str:
        return self._label_by_leaf[v]

    def interior_vertices(self) -> list[int]:
        return sorted(v for v in self._adj if len(self._adj[v]) > 1)

    def is_fully_resolved(self) -> bool:
        """Every interior vertex has degree exactly three."""
        return all(len(nb) in (1, 3) for nb in self._adj.values())

    def is_properly_weighted(self) -> bool:
        """Every edge not incident with a leaf has strictly positive weight."""
        for u, v, w in self.edges():
            if not self.is_leaf(u) and not self.is_leaf(v) and w <= 0.0:
                return False
        return True

    # -- metric queries ---------------------------------------------------

    def distance(self, x: str, y: str) -> float:
        """Weighted path distance between taxa x and y (fsum of edge weights)."""
        if x == y:
            self.leaf_vertex(x)
            return 0.0
        path = self._path(self.leaf_vertex(x), self.leaf_vertex(y))
        return math.fsum(self._adj[a][b] for a, b in zip(path, path[1:]))

    def _path(self, src: int, dst: int) -> list[int]:
        parent: dict[int, int] = {src: src}
        queue = deque([src])
        while queue:
            v = queue.popleft()
            if v == dst:
                break
            for nb in self._adj[v]:
                if nb not in parent:
                    parent[nb] = v
                    queue.append(nb)
        path = [dst]
        while path[-1] != src:
            path.append(parent[path[-1]])
        path.reverse()
        return path

    def path_edges(self, x: str, y: str) -> list[tuple[int, int]]:
        """Edges (u, v) with u < v on the leaf path from x to y."""
        path = self._path(self.leaf_vertex(x), self.leaf_vertex(y))
        return [(min(a, b), max(a, b)) for a, b in zip(path, path[1:])]

    def vertex_distances(self, start: int) -> dict[int, float]:
        """Weighted distance from *start* to every vertex."""
        dist = {start: 0.0}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for nb, w in self._adj[v].items():
                if nb not in dist:
                    dist[nb] = dist[v] + w
                    queue.append(nb)
        return dist

    @cached_property
    def _hops(self) -> dict[str, dict[str, int]]:
        # Unit (edge-count) leaf distances; exact integers, so quartet
        # topology tests are free of float comparisons.
        out: dict[str, dict[str, int]] = {}
        for label, start in self._leaf_by_label.items():
            hop = {start: 0}
            queue = deque([start])
            while queue:
                v = queue.popleft()
                for nb in self._adj[v]:
                    if nb not in hop:
                        hop[nb] = hop[v] + 1
                        queue.append(nb)
            out[label] = {
                lab: hop[vert] for lab, vert in self._leaf_by_label.items()
            }
        return out

    # -- structural queries ----------------------------------------------

    def side_leaves(self, u: int, v: int) -> frozenset[str]:
        """Taxa on u's side of the edge {u, v}."""
        if v not in self._adj[u]:
            raise TreeError(f"({u},{v}) is not an edge")
        seen = {u, v}
        queue = deque([u])
        labels = []
        while queue:
            w = queue.popleft()
            if w != v and self.is_leaf(w):
                labels.append(self._label_by_leaf[w])
            for nb in self._adj[w]:
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        seen.discard(v)
        return frozenset(labels)

    def components(self, v: int) -> tuple[frozenset[str], ...]:
        """Leaf sets of the components of T - v, sorted by smallest label."""
        comps = [self.side_leaves(nb, v) for nb in self._adj[v]]
        return tuple(sorted(comps, key=min))

    def clusters(self) -> frozenset[frozenset[str]]:
        """Both sides of every edge-induced split (the clusters of the tree)."""
        out = set()
        for u, v, _ in self.edges():
            out.add(self.side_leaves(u, v))
            out.add(self.side_leaves(v, u))
        return frozenset(out)

    def splits(self) -> frozenset[Split]:
        """Every edge-induced bipartition of the taxon set."""
        out = set()
        for u, v, _ in self.edges():
            out.add(frozenset({self.side_leaves(u, v), self.side_leaves(v, u)}))
        return frozenset(out)

    def split_weights(self) -> dict[Split, float]:
        """Map each edge-induced split to its edge weight."""
        out = {}
        for u, v, w in self.edges():
            out[frozenset({self.side_leaves(u, v), self.side_leaves(v, u)})] = w
        return out

    def cherries(self) -> list[tuple[str, str]]:
        """All leaf pairs sharing a neighbour, each pair sorted, list sorted."""
        out = []
        for v in self.interior_vertices():
            leaf_nbrs = sorted(
                self._label_by_leaf[nb] for nb in self._adj[v] if self.is_leaf(nb)
            )
            out.extend(itertools.combinations(leaf_nbrs, 2))
        return sorted(out)

    def quartet_topology(self, a: str, b: str, c: str, d: str) -> QuartetSplit | None:
        """Topology of the restriction to four taxa.

        Returns the split as ``frozenset({frozenset({x, y}), frozenset({u, v})})``
        pairing the two taxa on each side, or None for the unresolved star
        (possible only when the tree is not fully resolved on that quartet).
        """
        if len({a, b, c, d}) != 4:
            raise TreeError("quartet taxa must be distinct")
        h = self._hops
        try:
            s_ab = h[a][b] + h[c][d]
            s_ac = h[a][c] + h[b][d]
            s_ad = h[a][d] + h[b][c]
        except KeyError as exc:
            raise KeyError(f"unknown taxon {exc.args[0]!r}") from None
        # Four-point condition on the unit weighting: the two largest sums
        # are equal; a unique minimum identifies the split, all-equal is a star.
        low = min(s_ab, s_ac, s_ad)
        if s_ab == s_ac == s_ad:
            return None
        if s_ab == low:
            return frozenset({frozenset({a, b}), frozenset({c, d})})
        if s_ac == low:
            return frozenset({frozenset({a, c}), frozenset({b, d})})
        return frozenset({frozenset({a, d}), frozenset({b, c})})

    def restrict(self, keep: Iterable[str]) -> "XTree":
        """The tree induced on a taxon subset, degree-2 vertices suppressed.

        Suppressed chains merge their edge weights (correctly rounded sums),
        so path distances between kept taxa are preserved.
        """
        keep = set(keep)
        unknown = keep - self.taxa
        if unknown:
            raise KeyError(f"unknown taxa {sorted(unknown)!r}")
        if len(keep) < 2:
            raise TreeError("restriction needs at least two taxa")
        if keep == self.taxa:
            return self

        adj = {v: dict(nb) for v, nb in self._adj.items()}

        def drop(v: int) -> None:
            for nb in list(adj[v]):
                del adj[nb][v]
            del adj[v]

        # Prune leaves outside the kept set (cascading).
        pending = deque(
            v
            for v in adj
            if len(adj[v]) == 1 and self._label_by_leaf.get(v) not in keep
        )
        while pending:
            v = pending.popleft()
            if v not in adj or len(adj[v]) != 1:
                continue
            (nb,) = adj[v]
            drop(v)
            if len(adj[nb]) == 1 and self._label_by_leaf.get(nb) not in keep:
                pending.append(nb)

        # Suppress the degree-2 vertices left behind.
        for v in [v for v in adj if len(adj[v]) == 2]:
            (p, wp), (q, wq) = adj[v].items()
            drop(v)
            adj[p][q] = adj[q][p] = math.fsum((wp, wq))

        edges = [
            (u, v, w) for u, nbrs in adj.items() for v, w in nbrs.items() if u < v
        ]
        labels = {self._leaf_by_label[lab]: lab for lab in keep}
        return XTree(edges, labels)

    # -- canonical form -----------------------------------------------------

    def newick(self) -> str:
        """Canonical Newick serialisation.

        Rooted at the interior vertex adjacent to the smallest taxon, children
        ordered by their smallest descendant taxon, so equivalent trees with
        equal weights serialise identically.
        """
        if self.n_leaves < 3:
            raise TreeError("canonical Newick requires at least three leaves")
        anchor = self.leaf_vertex(min(self.taxa))
        (root,) = self._adj[anchor]

        def render(v: int, parent: int) -> tuple[str, str]:
            if self.is_leaf(v):
                label = self._label_by_leaf[v]
                return label, label
            parts = []
            for child in self._adj[v]:
                if child == parent:
                    continue
                key, text = render(child, v)
                parts.append((key, f"{text}:{_format_weight(self._adj[v][child])}"))
            parts.sort()
            return parts[0][0], "(" + ",".join(text for _, text in parts) + ")"

        parts = []
        for child in self._adj[root]:
            key, text = render(child, root)
            parts.append((key, f"{text}:{_format_weight(self._adj[root][child])}"))
        parts.sort()
        return "(" + ",".join(text for _, text in parts) + ");"

    def __repr__(self) -> str:
        taxa = ",".join(sorted(self.taxa))
        return f"<XTree on {{{taxa}}} with {len(self.edges())} edges>"


def _format_weight(w: float) -> str:
    if w == int(w) and abs(w) < 1e15:
        return str(int(w))
    return repr(w)


# -- Newick parsing ----------------------------------------------------------


class _RawNode:
    __slots__ = ("children", "label", "length")

    def __init__(self):
        self.children: list[_RawNode] = []
        self.label: str | None = None
        self.length: float | None = None


class _NewickParser:
    """Recursive-descent parser tracking position for error messages."""

    _LABEL_CHARS = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_.-")
    _NUMBER_CHARS = set("0123456789.eE+-")

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def fail(self, message: str, pos: int | None = None) -> None:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        column = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        raise NewickError(message, line, column)

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> _RawNode:
        root = self._subtree()
        if self._peek() != ";":
            self.fail("expected ';'")
        self.pos += 1
        self._skip_ws()
        if self.pos != len(self.text):
            self.fail("trailing characters after ';'")
        return root

    def _subtree(self) -> _RawNode:
        node = _RawNode()
        ch = self._peek()
        if ch == "(":
            self.pos += 1
            node.children.append(self._subtree())
            while self._peek() == ",":
                self.pos += 1
                node.children.append(self._subtree())
            if self._peek() != ")":
                self.fail("unbalanced parenthesis: expected ')' or ','")
            self.pos += 1
            # Internal node labels are tolerated and discarded.
            if self._peek() in self._LABEL_CHARS:
                self._read_label()
        elif ch in self._LABEL_CHARS:
            node.label = self._read_label()
        else:
            self.fail("expected '(' or a taxon label" if ch else "unexpected end of input")
        if self._peek() == ":":
            self.pos += 1
            node.length = self._read_number()
        return node

    def _read_label(self) -> str:
        self._skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] in self._LABEL_CHARS:
            self.pos += 1
        return self.text[start : self.pos]

    def _read_number(self) -> float:
        self._skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] in self._NUMBER_CHARS:
            self.pos += 1
        token = self.text[start : self.pos]
        try:
            value = float(token)
        except ValueError:
            self.fail(f"invalid branch length {token!r}", start)
        if not math.isfinite(value):
            self.fail(f"non-finite branch length {token!r}", start)
        if value < 0:
            self.fail(f"negative branch length {token!r}", start)
        return value


def parse_newick(text: str) -> XTree:
    """Parse a ';'-terminated Newick string into an XTree.

    Missing branch lengths default to 1.0; a chain of length-less edges
    collapsed by degree-2 suppression still defaults to 1.0 in total, so a
    tree written entirely without lengths comes out unit-weighted.  Degree-2
    vertices introduced by redundant parentheses (including a two-child root)
    are suppressed, summing the two incident weights.

    Raises NewickError on syntax problems (with line/column), duplicate or
    invalid leaf labels, fewer than three leaves, or negative lengths.
    """
    root = _NewickParser(text).parse()

    while len(root.children) == 1:
        child = root.children[0]
        if child.length is not None:
            raise NewickError("branch length on a single-child root has no unrooted meaning")
        root = child
    if not root.children:
        raise NewickError("fewer than 3 leaves")

    counter = itertools.count()
    adj: dict[int, dict[int, float | None]] = {}
    labels: dict[int, str] = {}

    def build(node: _RawNode) -> int:
        vid = next(counter)
        adj[vid] = {}
        if node.children:
            for child in node.children:
                cid = build(child)
                adj[vid][cid] = child.length
                adj[cid][vid] = child.length
        else:
            if node.label is None:
                raise NewickError("leaf without a label")
            labels[vid] = node.label
        return vid

    build(root)

    for vid, label in labels.items():
        if not LABEL_PATTERN.match(label):
            raise NewickError(f"invalid taxon label {label!r}")
    seen: set[str] = set()
    for label in labels.values():
        if label in seen:
            raise NewickError(f"duplicate leaf label {label!r}")
        seen.add(label)
    if len(labels) < 3:
        raise NewickError("fewer than 3 leaves")

    # Suppress degree-2 vertices; merging two length-less edges stays
    # length-less so the 1.0 default applies once to the merged edge.
    for v in [v for v in list(adj) if len(adj[v]) == 2 and v not in labels]:
        (p, wp), (q, wq) = adj[v].items()
        del adj[p][v], adj[q][v], adj[v]
        if wp is None and wq is None:
            merged: float | None = None
        else:
            merged = (1.0 if wp is None else wp) + (1.0 if wq is None else wq)
        adj[p][q] = adj[q][p] = merged

    edges = [
        (u, v, 1.0 if w is None else w)
        for u, nbrs in adj.items()
        for v, w in nbrs.items()
        if u < v
    ]
    return XTree(edges, labels)


def write_newick(tree: XTree) -> str:
    """Canonical Newick string of *tree* (see XTree.newick)."""
    return tree.newick()


# -- comparison ---------------------------------------------------------------


def is_equivalent(t1: XTree, t2: XTree) -> bool:
    """True when the two trees have the same taxa and the same split set.

    Edge weights are ignored; compare them with split_weight_delta.
    """
    if t1.taxa != t2.taxa:
        raise TreeError("trees have different leaf sets")
    return t1.splits() == t2.splits()


def split_weight_delta(t1: XTree, t2: XTree) -> float:
    """Largest per-split weight difference between two equivalent trees."""
    if not is_equivalent(t1, t2):
        raise TreeError("trees are not equivalent")
    w1 = t1.split_weights()
    w2 = t2.split_weights()
    return max(abs(w1[s] - w2[s]) for s in w1)


# -- generation ---------------------------------------------------------------


def random_tree(
    n: int,
    seed: int,
    weight_range: tuple[float, float] = (0.5, 2.0),
) -> XTree:
    """Random fully-resolved tree on taxa t01..tNN, deterministic per seed.

    The topology grows by attaching each new leaf to a uniformly random edge,
    which samples labelled fully-resolved topologies uniformly; edge weights
    are then drawn i.i.d. uniform from *weight_range*.
    """
    if n < 3:
        raise ValueError("need at least 3 leaves")
    lo, hi = weight_range
    if not (0 < lo <= hi):
        raise ValueError("weight range must satisfy 0 < lo <= hi")

    rng = random.Random(seed)
    width = max(2, len(str(n)))
    labels = [f"t{str(i).zfill(width)}" for i in range(1, n + 1)]

    counter = itertools.count()
    leaf_vertices = [next(counter) for _ in range(n)]
    center = next(counter)
    edges = [(leaf_vertices[i], center) for i in range(3)]
    for i in range(3, n):
        u, v = edges.pop(rng.randrange(len(edges)))
        mid = next(counter)
        edges.extend([(u, mid), (mid, v), (mid, leaf_vertices[i])])

    weighted = [
        (u, v, rng.uniform(lo, hi)) for u, v in sorted((min(u, v), max(u, v)) for u, v in edges)
    ]
    return XTree(weighted, dict(zip(leaf_vertices, labels)))
