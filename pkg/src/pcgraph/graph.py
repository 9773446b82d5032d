"""Computational-graph data model, construction, ordering, and validation.

A graph is a DAG of vertices.  Edges are stored *child-ward*: a vertex's
``children`` are the inputs of its function, i.e. the direction the
reverse pass walks.  The forward pass therefore iterates the topological
order reversed.  ``parents`` is the exact transpose of the children
lists, kept with slot indices so that a vertex used twice by the same
parent receives two distinct contributions.

Leaves carry no function; they hold parameter or data values supplied at
run time.  A leaf with ``trainable=False`` is a data input: it is
excluded from every update report.  Tie groups constrain several leaves
to share one trainable value (convolution kernel entries, reused
recurrent weights); their update is the sum of the member updates.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import functions as fns
from .errors import (
    ArityMismatch,
    BadTieGroup,
    CycleDetected,
    DanglingId,
    GraphError,
    NotLevelled,
    UnreachableVertex,
)
from .functions import ElemFn, FnKind
from .numerics import Array, as_f64

VertexId = int

# Canonical handle for one trainable parameter: a tie group or a free leaf.
ParamKey = tuple[str, str | int]


@dataclass(frozen=True)
class Vertex:
    id: VertexId
    fn: ElemFn | None
    children: tuple[VertexId, ...]
    is_leaf: bool
    tie_group: str | None = None
    trainable: bool = True
    name: str | None = None


@dataclass(frozen=True)
class TieGroup:
    """Leaves sharing one trainable parameter value."""

    group_id: str
    members: tuple[VertexId, ...]
    shared_value: Array | None = None


@dataclass(frozen=True)
class LevelStructure:
    """Partition of a levelled graph's vertices by root-path length."""

    levels: dict[VertexId, int]
    max_level: int

    def level(self, vid: VertexId) -> int:
        return self.levels[vid]

    def members(self, k: int) -> tuple[VertexId, ...]:
        return tuple(sorted(v for v, l in self.levels.items() if l == k))


class Graph:
    """Validated, immutable computational graph.

    Construct through :class:`GraphBuilder` or :func:`build_graph`;
    direct construction validates too.
    """

    def __init__(self, vertices: Sequence[Vertex], output: VertexId,
                 tie_groups: Sequence[TieGroup] = ()):
        self.vertices: tuple[Vertex, ...] = tuple(vertices)
        self.output: VertexId = output
        self.tie_groups: tuple[TieGroup, ...] = tuple(tie_groups)
        self._validate_structure()
        self.parents: tuple[tuple[tuple[VertexId, int], ...], ...] = \
            self._transpose()
        self.leaves: tuple[VertexId, ...] = tuple(
            v.id for v in self.vertices if v.is_leaf)
        self.group_of: dict[VertexId, TieGroup] = {
            m: grp for grp in self.tie_groups for m in grp.members}
        self._validate_graph()

    # -- accessors -------------------------------------------------------

    def __len__(self) -> int:
        return len(self.vertices)

    def vertex(self, vid: VertexId) -> Vertex:
        return self.vertices[vid]

    @property
    def internal_ids(self) -> tuple[VertexId, ...]:
        """Ids of non-leaf vertices, ascending."""
        return tuple(v.id for v in self.vertices if not v.is_leaf)

    def trainable_leaves(self) -> tuple[VertexId, ...]:
        return tuple(v for v in self.leaves if self.vertices[v].trainable)

    # -- validation ------------------------------------------------------

    def _validate_structure(self) -> None:
        n = len(self.vertices)
        for i, v in enumerate(self.vertices):
            if v.id != i:
                raise GraphError(
                    f"vertex ids must be dense 0..{n - 1}; position {i} has id {v.id}")
            for c in v.children:
                if not (0 <= c < n):
                    raise DanglingId(v.id, c)
            if v.is_leaf:
                if v.children or v.fn is not None:
                    raise GraphError(f"leaf {v.id} must have no children and no fn")
            else:
                if v.fn is None:
                    raise GraphError(f"internal vertex {v.id} needs a function")
                if len(v.children) != v.fn.arity:
                    raise ArityMismatch(v.id, v.fn.arity, len(v.children))
        if not (0 <= self.output < n):
            raise DanglingId(-1, self.output)

    def _transpose(self) -> tuple[tuple[tuple[VertexId, int], ...], ...]:
        acc: list[list[tuple[VertexId, int]]] = [[] for _ in self.vertices]
        for v in self.vertices:
            for slot, c in enumerate(v.children):
                acc[c].append((v.id, slot))
        return tuple(tuple(sorted(p)) for p in acc)

    def _validate_graph(self) -> None:
        self._check_acyclic()
        if self.parents[self.output]:
            raise GraphError(f"output vertex {self.output} has parents")
        reachable = set()
        stack = [self.output]
        while stack:
            v = stack.pop()
            if v in reachable:
                continue
            reachable.add(v)
            stack.extend(self.vertices[v].children)
        missing = set(range(len(self.vertices))) - reachable
        if missing:
            raise UnreachableVertex(missing)
        seen: set[VertexId] = set()
        for grp in self.tie_groups:
            if not grp.members:
                raise BadTieGroup(f"tie group {grp.group_id!r} is empty")
            for m in grp.members:
                if not (0 <= m < len(self.vertices)):
                    raise BadTieGroup(f"tie group {grp.group_id!r} member {m} unknown")
                if not self.vertices[m].is_leaf:
                    raise BadTieGroup(
                        f"tie group {grp.group_id!r} member {m} is not a leaf")
                if m in seen:
                    raise BadTieGroup(f"leaf {m} belongs to several tie groups")
                if self.vertices[m].tie_group != grp.group_id:
                    raise BadTieGroup(
                        f"leaf {m} does not name tie group {grp.group_id!r}")
                seen.add(m)
        for v in self.vertices:
            if v.tie_group is not None and v.id not in seen:
                raise BadTieGroup(
                    f"leaf {v.id} names tie group {v.tie_group!r} "
                    "which is not declared")

    def _check_acyclic(self) -> None:
        WHITE, GREY, BLACK = 0, 1, 2
        color = [WHITE] * len(self.vertices)
        for start in range(len(self.vertices)):
            if color[start] != WHITE:
                continue
            path: list[VertexId] = []
            stack: list[tuple[VertexId, int]] = [(start, 0)]
            color[start] = GREY
            path.append(start)
            while stack:
                v, idx = stack[-1]
                children = self.vertices[v].children
                if idx < len(children):
                    stack[-1] = (v, idx + 1)
                    c = children[idx]
                    if color[c] == GREY:
                        raise CycleDetected(path[path.index(c):] + [c])
                    if color[c] == WHITE:
                        color[c] = GREY
                        path.append(c)
                        stack.append((c, 0))
                else:
                    color[v] = BLACK
                    path.pop()
                    stack.pop()


# -- ordering and distances ----------------------------------------------

def topological_sort(g: Graph) -> tuple[VertexId, ...]:
    """Order with the output first and every vertex after all its parents.

    Deterministic: among ready vertices the smallest id is emitted first.
    """
    pending = [len(p) for p in g.parents]
    heap = [g.output]
    order: list[VertexId] = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in g.vertices[v].children:
            pending[c] -= 1
            if pending[c] == 0:
                heapq.heappush(heap, c)
    return tuple(order)


def min_distances(g: Graph) -> dict[VertexId, int]:
    """Shortest edge-count distance from the output to every vertex."""
    dist = {g.output: 0}
    queue = deque([g.output])
    while queue:
        v = queue.popleft()
        for c in g.vertices[v].children:
            if c not in dist:
                dist[c] = dist[v] + 1
                queue.append(c)
    return dist


def path_length_sets(g: Graph) -> dict[VertexId, frozenset[int]]:
    """All distinct root-path lengths per vertex (dynamic programming).

    Efficient companion to the exhaustive path enumeration oracle: the
    set for a vertex is the union over its parents of their sets shifted
    by one.
    """
    sets: dict[VertexId, set[int]] = {g.output: {0}}
    for v in topological_sort(g):
        if v == g.output:
            continue
        acc: set[int] = set()
        for p, _slot in g.parents[v]:
            acc.update(l + 1 for l in sets[p])
        sets[v] = acc
    return {v: frozenset(s) for v, s in sets.items()}


def level_structure(g: Graph) -> LevelStructure:
    """The unique partition by root-path length, if the graph is levelled.

    Raises :class:`NotLevelled` naming the smallest-id vertex whose
    root-path lengths disagree.
    """
    sets = path_length_sets(g)
    offenders = sorted(v for v, s in sets.items() if len(s) != 1)
    if offenders:
        v = offenders[0]
        raise NotLevelled(v, sets[v])
    levels = {v: next(iter(s)) for v, s in sets.items()}
    return LevelStructure(levels=levels, max_level=max(levels.values()))


def param_keys(g: Graph) -> tuple[ParamKey, ...]:
    """Canonical parameter order: tie groups (declaration order), then
    free trainable leaves (ascending id)."""
    keys: list[ParamKey] = [("group", grp.group_id) for grp in g.tie_groups]
    tied = set(g.group_of)
    keys.extend(("leaf", v) for v in g.leaves
                if g.vertices[v].trainable and v not in tied)
    return tuple(keys)


def check_params(g: Graph, params: Mapping[VertexId, Array]) -> None:
    """Validate that ``params`` covers all leaves and respects tie groups."""
    for v in g.leaves:
        if v not in params:
            raise GraphError(f"missing value for leaf {v}")
    for grp in g.tie_groups:
        first = as_f64(params[grp.members[0]])
        for m in grp.members[1:]:
            if not np.array_equal(first, as_f64(params[m])):
                raise BadTieGroup(
                    f"tie group {grp.group_id!r} members disagree at leaf {m}")


# -- construction --------------------------------------------------------

class GraphBuilder:
    """Incremental construction with dense id allocation.

    >>> b = GraphBuilder()
    >>> z1 = b.leaf(name="z1")
    >>> z2 = b.leaf(name="z2")
    >>> root = b.vertex(fns.square(), [b.vertex(fns.add(), [b.vertex(fns.sqrt(), [z1]), z2])])
    >>> g = b.build(root)
    """

    def __init__(self):
        self._vertices: list[Vertex] = []
        self._tie_members: dict[str, list[VertexId]] = {}
        self._tie_values: dict[str, Array | None] = {}

    def _next(self) -> VertexId:
        return len(self._vertices)

    def leaf(self, *, trainable: bool = True, tie_group: str | None = None,
             name: str | None = None) -> VertexId:
        vid = self._next()
        self._vertices.append(Vertex(vid, None, (), True, tie_group,
                                     trainable, name))
        if tie_group is not None:
            self._tie_members.setdefault(tie_group, []).append(vid)
        return vid

    def vertex(self, fn: ElemFn, children: Sequence[VertexId], *,
               name: str | None = None) -> VertexId:
        vid = self._next()
        self._vertices.append(Vertex(vid, fn, tuple(children), False,
                                     None, True, name))
        return vid

    def constant(self, value: float, *, name: str | None = None) -> VertexId:
        return self.vertex(fns.constant(value), [], name=name)

    def tie_value(self, group_id: str, value) -> None:
        """Record the shared initial value of a tie group."""
        self._tie_values[group_id] = as_f64(value)

    def build(self, output: VertexId) -> Graph:
        groups = tuple(
            TieGroup(gid, tuple(members), self._tie_values.get(gid))
            for gid, members in self._tie_members.items())
        return Graph(self._vertices, output, groups)


def build_graph(description: Mapping) -> Graph:
    """Build a graph from its plain-dict description (the JSON schema).

    Expected keys: ``output`` (int), ``vertices`` (list of vertex
    records), optional ``tie_groups``.  See the README for the schema.
    Parameter values under ``params`` are ignored here; the serializer
    returns them separately.
    """
    try:
        records = list(description["vertices"])
        output = int(description["output"])
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph description: {exc}") from exc
    by_id: dict[int, Mapping] = {}
    for rec in records:
        vid = int(rec["id"])
        if vid in by_id:
            raise GraphError(f"duplicate vertex id {vid}")
        by_id[vid] = rec
    if set(by_id) != set(range(len(by_id))):
        raise GraphError("vertex ids must be dense 0..n-1")
    vertices = []
    for vid in range(len(by_id)):
        rec = by_id[vid]
        if rec.get("leaf"):
            vertices.append(Vertex(
                vid, None, (), True,
                rec.get("tie_group"), bool(rec.get("trainable", True)),
                rec.get("name")))
            continue
        kind = FnKind(rec["kind"])
        children = tuple(int(c) for c in rec.get("children", ()))
        if kind is FnKind.CONSTANT:
            fn = fns.constant(rec["value"])
        elif kind is FnKind.ACTIVATION:
            fn = fns.activation(rec["activation"])
        elif kind in (FnKind.ADD, FnKind.MULTIPLY):
            fn = ElemFn(kind, int(rec.get("arity", len(children))))
        else:
            fn = ElemFn(kind, 1 if kind in
                        (FnKind.SQUARE, FnKind.SQRT, FnKind.IDENTITY,
                         FnKind.SUM_REDUCE) else 2)
        vertices.append(Vertex(vid, fn, children, False, None, True,
                               rec.get("name")))
    groups = tuple(
        TieGroup(str(rec["id"]), tuple(int(m) for m in rec["members"]),
                 as_f64(rec["value"]) if "value" in rec else None)
        for rec in description.get("tie_groups", ()))
    return Graph(vertices, output, groups)
