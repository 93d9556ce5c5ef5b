"""Rooted hop-bounded shortest-path trees and CSSSP collections."""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from congest.distance import Distance
from congest.errors import GraphFormatError, NotATree
from congest.graph import NodeId, WeightedGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TreeEntry:
    """Per-node record: distance from the root, hop count κ, parent."""
    dist: Distance
    hops: int
    parent: Optional[NodeId]


class EntryMap(dict):
    """Node -> TreeEntry dict that counts its own mutations."""

    version = 0

    def _touch(self):
        self.version += 1

    def __setitem__(self, key, value):
        super().__setitem__(key, value)
        self._touch()

    def __delitem__(self, key):
        super().__delitem__(key)
        self._touch()

    def pop(self, *args):
        value = super().pop(*args)
        self._touch()
        return value

    def popitem(self):
        item = super().popitem()
        self._touch()
        return item

    def setdefault(self, key, default=None):
        if key not in self:
            self[key] = default
        return self[key]

    def update(self, *args, **kwargs):
        super().update(*args, **kwargs)
        self._touch()

    def clear(self):
        super().clear()
        self._touch()


@dataclass
class SpTree:
    """An h-hop shortest-path tree T_x stored root-down by parent pointers."""
    root: NodeId
    entries: Dict[NodeId, TreeEntry] = field(default_factory=dict)
    _children: Optional[Dict[NodeId, Tuple[NodeId, ...]]] = field(
        default=None, init=False, repr=False, compare=False
    )
    _children_version: int = field(default=-1, init=False, repr=False, compare=False)

    def __setattr__(self, name, value):
        if name == "entries":
            if not isinstance(value, EntryMap):
                value = EntryMap(value)
            super().__setattr__("_children", None)
        super().__setattr__(name, value)

    def __contains__(self, v: NodeId) -> bool:
        return v in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def nodes(self) -> List[NodeId]:
        return sorted(self.entries)

    def entry(self, v: NodeId) -> Optional[TreeEntry]:
        return self.entries.get(v)

    def children(self, v: NodeId) -> Tuple[NodeId, ...]:
        # rebuilt whenever entries is replaced or edited in place
        if self._children is None or self._children_version != self.entries.version:
            kids: Dict[NodeId, List[NodeId]] = {}
            for node, entry in self.entries.items():
                if entry.parent is not None:
                    kids.setdefault(entry.parent, []).append(node)
            self._children = {p: tuple(sorted(c)) for p, c in kids.items()}
            self._children_version = self.entries.version
        return self._children.get(v, ())

    def edges(self) -> List[Tuple[NodeId, NodeId]]:
        return sorted(
            (e.parent, v) for v, e in self.entries.items() if e.parent is not None
        )

    def path(self, v: NodeId) -> List[NodeId]:
        """Node sequence root..v along parent pointers."""
        if v not in self.entries:
            raise NotATree(f"node {v} not in tree rooted at {self.root}")
        path = [v]
        seen = {v}
        while path[-1] != self.root:
            parent = self.entries[path[-1]].parent
            if parent is None or parent not in self.entries or parent in seen:
                raise NotATree(
                    f"broken parent chain from {v} in tree rooted at {self.root}"
                )
            path.append(parent)
            seen.add(parent)
        path.reverse()
        return path

    def ancestors(self, v: NodeId) -> List[NodeId]:
        """Strict ancestors of v, root first."""
        return self.path(v)[:-1]

    def subtree(self, v: NodeId) -> List[NodeId]:
        """v and all its descendants, breadth first."""
        if v not in self.entries:
            return []
        order = [v]
        index = 0
        while index < len(order):
            order.extend(self.children(order[index]))
            index += 1
        return order

    def nodes_at_depth(self, depth: int) -> List[NodeId]:
        return sorted(v for v, e in self.entries.items() if e.hops == depth)

    def is_consistent(self, graph: WeightedGraph) -> bool:
        """Root at (0, 0); every child sits one hop and one edge weight below its parent."""
        root = self.entries.get(self.root)
        if root is None or root.dist != 0 or root.hops != 0 or root.parent is not None:
            return False
        for v, entry in self.entries.items():
            if v == self.root:
                continue
            parent = self.entries.get(entry.parent) if entry.parent is not None else None
            weight = graph.weight(entry.parent, v) if entry.parent is not None else None
            if parent is None or weight is None:
                return False
            if entry.hops != parent.hops + 1 or entry.dist != parent.dist + weight:
                return False
        return True


@dataclass
class CsSspCollection:
    """h-hop trees for a source set S; consistent when shared paths agree across trees."""
    h: int
    sources: Tuple[NodeId, ...]
    trees: Dict[NodeId, SpTree]

    def tree(self, x: NodeId) -> SpTree:
        return self.trees[x]

    def __iter__(self) -> Iterable[SpTree]:
        return iter(self.trees[x] for x in self.sources)

    @property
    def k(self) -> int:
        return len(self.sources)

    def trees_containing(self, v: NodeId) -> List[NodeId]:
        return [x for x in self.sources if v in self.trees[x]]

    def distance(self, x: NodeId, v: NodeId) -> Optional[Distance]:
        entry = self.trees[x].entry(v)
        return entry.dist if entry else None

    def serialize(self) -> str:
        lines = [f"h {self.h}"]
        for x in self.sources:
            lines.append(f"t {x}")
            tree = self.trees[x]
            for v in tree.nodes():
                e = tree.entries[v]
                parent = "-" if e.parent is None else str(e.parent)
                lines.append(f"v {v} {parent} {e.dist} {e.hops}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "CsSspCollection":
        h = None
        trees: Dict[NodeId, SpTree] = {}
        order: List[NodeId] = []
        current: Optional[SpTree] = None
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if parts[0] == "h":
                    h = int(parts[1])
                elif parts[0] == "t":
                    root = int(parts[1])
                    current = SpTree(root=root)
                    trees[root] = current
                    order.append(root)
                elif parts[0] == "v":
                    if current is None:
                        raise GraphFormatError("node before tree header", number)
                    parent = None if parts[2] == "-" else int(parts[2])
                    current.entries[int(parts[1])] = TreeEntry(
                        dist=int(parts[3]), hops=int(parts[4]), parent=parent
                    )
                else:
                    raise GraphFormatError(f"unknown record type '{parts[0]}'", number)
            except (ValueError, IndexError) as e:
                raise GraphFormatError(str(e), number) from e
        if h is None:
            raise GraphFormatError("missing 'h <hop bound>' line")
        return cls(h=h, sources=tuple(order), trees=trees)
