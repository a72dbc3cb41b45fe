"""Label hierarchy, holdout split and split manifest types.

``LabelHierarchy`` and ``SplitPlan`` are immutable in-memory values validated on
construction. ``SplitManifest`` is the on-disk artifact that every downstream command
(synthetic data, scoring, reporting) reads, so it is a pydantic schema.
"""

import hashlib
import json
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from enum import StrEnum

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .exceptions import (
    CycleError,
    DuplicateNodeError,
    MissingParentError,
    RaggedDepthError,
    RootError,
)


class HoldoutLevel(StrEnum):
    """Depth at which a class was removed from training (L1 = coarsest)."""

    L1 = "L1"
    L2 = "L2"
    L3 = "L3"

    @property
    def depth(self) -> int:
        return int(self.value[1:])

    @classmethod
    def coerce(cls, value: "HoldoutLevel | str | int") -> "HoldoutLevel":
        """Accept ``L2``, ``l2``, ``2`` or ``HoldoutLevel.L2``.

        Raises:
            ValueError: If the value names no level
        """
        if isinstance(value, HoldoutLevel):
            return value
        text = str(value).strip().upper()
        if not text.startswith("L"):
            text = f"L{text}"
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"Unknown holdout level {value!r}; expected L1, L2 or L3") from None


class Membership(StrEnum):
    """Test-set membership of a scored sample."""

    ID = "ID"
    OOD_L1 = "OOD_L1"
    OOD_L2 = "OOD_L2"
    OOD_L3 = "OOD_L3"
    TRUE_OOD = "TRUE_OOD"

    @classmethod
    def for_level(cls, level: HoldoutLevel) -> "Membership":
        return cls(f"OOD_{level.value}")

    @property
    def level(self) -> HoldoutLevel | None:
        """Holdout level for semantic OOD tags, None for ID and TRUE_OOD."""
        if self.value.startswith("OOD_"):
            return HoldoutLevel(self.value.removeprefix("OOD_"))
        return None

    @property
    def is_semantic(self) -> bool:
        return self.level is not None


@dataclass(frozen=True)
class LabelNode:
    """One node of a label tree."""

    node_id: str
    parent_id: str | None = None
    display_name: str = ""

    def __post_init__(self):
        if not self.display_name:
            object.__setattr__(self, "display_name", self.node_id)


@dataclass(frozen=True)
class LabelHierarchy:
    """Rooted, rectangular label tree; leaves are the finest-grained classes.

    Validation runs on construction and raises a distinct ``HierarchyError`` subclass
    naming the offending node. The root sits at depth 0, its children at depth 1.
    """

    nodes: tuple[LabelNode, ...]
    hierarchy_id: str = ""
    _by_id: dict[str, LabelNode] = field(init=False, repr=False, compare=False)
    _children: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    _depth: dict[str, int] = field(init=False, repr=False, compare=False)
    _root_id: str = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)

        by_id: dict[str, LabelNode] = {}
        for node in nodes:
            if node.node_id in by_id:
                raise DuplicateNodeError(f"Duplicate node id {node.node_id!r}", node.node_id)
            by_id[node.node_id] = node

        for node in nodes:
            if node.parent_id == node.node_id:
                raise CycleError(f"Node {node.node_id!r} is its own parent", node.node_id)
            if node.parent_id is not None and node.parent_id not in by_id:
                raise MissingParentError(
                    f"Node {node.node_id!r} references missing parent {node.parent_id!r}", node.node_id
                )

        for node in nodes:
            seen = {node.node_id}
            current = node.parent_id
            while current is not None:
                if current in seen:
                    raise CycleError(
                        f"Parent links from {node.node_id!r} form a cycle through {current!r}", node.node_id
                    )
                seen.add(current)
                current = by_id[current].parent_id

        roots = [node.node_id for node in nodes if node.parent_id is None]
        if not roots:
            raise RootError("Hierarchy has no root node")
        if len(roots) > 1:
            raise RootError(f"Hierarchy has more than one root: {roots[1]!r} after {roots[0]!r}", roots[1])
        root_id = roots[0]

        children: dict[str, list[str]] = {node.node_id: [] for node in nodes}
        for node in nodes:
            if node.parent_id is not None:
                children[node.parent_id].append(node.node_id)
        if not children[root_id]:
            raise RootError(f"Root {root_id!r} has no classes below it", root_id)

        depth = {root_id: 0}
        stack = [root_id]
        while stack:
            current = stack.pop()
            for child in children[current]:
                depth[child] = depth[current] + 1
                stack.append(child)

        leaves = [node.node_id for node in nodes if not children[node.node_id]]
        expected = depth[leaves[0]]
        for leaf in leaves:
            if depth[leaf] != expected:
                raise RaggedDepthError(
                    f"Leaf {leaf!r} sits at depth {depth[leaf]} but leaf {leaves[0]!r} sits at depth {expected}",
                    leaf,
                )

        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_children", {key: tuple(value) for key, value in children.items()})
        object.__setattr__(self, "_depth", depth)
        object.__setattr__(self, "_root_id", root_id)
        if not self.hierarchy_id:
            object.__setattr__(self, "hierarchy_id", root_id)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._by_id

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[LabelNode]:
        return iter(self.nodes)

    @property
    def root_id(self) -> str:
        return self._root_id

    @property
    def leaves(self) -> tuple[str, ...]:
        """Leaf node ids in declaration order."""
        return tuple(node.node_id for node in self.nodes if not self._children[node.node_id])

    @property
    def leaf_depth(self) -> int:
        return self._depth[self.leaves[0]]

    def node(self, node_id: str) -> LabelNode:
        return self._by_id[node_id]

    def depth(self, node_id: str) -> int:
        return self._depth[node_id]

    def children(self, node_id: str) -> tuple[str, ...]:
        return self._children[node_id]

    def is_leaf(self, node_id: str) -> bool:
        return not self._children[node_id]

    def ancestors(self, node_id: str) -> tuple[str, ...]:
        """Ancestors of a node, nearest first, root last."""
        chain = []
        current = self._by_id[node_id].parent_id
        while current is not None:
            chain.append(current)
            current = self._by_id[current].parent_id
        return tuple(chain)

    def descendant_leaves(self, node_id: str) -> tuple[str, ...]:
        """Leaves under a node (the node itself when it is a leaf), in declaration order."""
        if self.is_leaf(node_id):
            return (node_id,)
        found: list[str] = []
        for child in self._children[node_id]:
            found.extend(self.descendant_leaves(child))
        return tuple(found)

    def level_counts(self) -> dict[int, int]:
        """Number of nodes at each depth below the root."""
        counts: dict[int, int] = {}
        for node_id, depth in self._depth.items():
            if node_id != self._root_id:
                counts[depth] = counts.get(depth, 0) + 1
        return dict(sorted(counts.items()))


@dataclass(frozen=True)
class Holdout:
    """A node held out of training at a given level."""

    node_id: str
    level: HoldoutLevel

    @classmethod
    def coerce(cls, value: "Holdout | tuple[str, HoldoutLevel | str | int] | str") -> "Holdout":
        """Build a holdout from a ``Holdout``, a ``(node_id, level)`` pair or ``NODE=LEVEL`` text.

        Raises:
            ValueError: If the value cannot be read as a holdout
        """
        if isinstance(value, Holdout):
            return value
        if isinstance(value, str):
            node_id, sep, level = value.rpartition("=")
            if not sep or not node_id.strip():
                raise ValueError(f"Holdout {value!r} must look like NODE=LEVEL")
            return cls(node_id.strip(), HoldoutLevel.coerce(level))
        node_id, level = value
        return cls(node_id, HoldoutLevel.coerce(level))

    def __str__(self) -> str:
        return f"{self.node_id}={self.level.value}"


@dataclass(frozen=True)
class SplitPlan:
    """Assignment of held-out nodes to levels and the derived leaf partition."""

    hierarchy_id: str
    holdouts: tuple[Holdout, ...]
    id_leaves: frozenset[str]
    ood_leaves: Mapping[HoldoutLevel, frozenset[str]]

    @property
    def rule_hash(self) -> str:
        """Stable digest of the hierarchy id and the holdout rules."""
        canonical = json.dumps(
            {
                "hierarchy_id": self.hierarchy_id,
                "holdouts": sorted([holdout.node_id, holdout.level.value] for holdout in self.holdouts),
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


class ManifestProvenance(BaseModel):
    """Where a manifest came from."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    hierarchy_id: str
    rule_hash: str


class SplitManifest(BaseModel):
    """Training class indexing and OOD leaf sets for one split.

    ``id_classes[k]`` is the leaf trained as class ``k``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    id_classes: list[str]
    ood_sets: dict[HoldoutLevel, list[str]]
    provenance: ManifestProvenance

    @field_validator("ood_sets", mode="after")
    @classmethod
    def order_levels(cls, v: dict[HoldoutLevel, list[str]]) -> dict[HoldoutLevel, list[str]]:
        """Keep levels in L1, L2, L3 order so serialization is stable"""
        return {level: v[level] for level in sorted(v)}

    @model_validator(mode="after")
    def check_partition(self) -> "SplitManifest":
        """ID classes are non-empty and every leaf appears exactly once"""
        if not self.id_classes:
            raise ValueError("Manifest has no ID classes")
        seen: set[str] = set()
        for leaf in [*self.id_classes, *(leaf for leaves in self.ood_sets.values() for leaf in leaves)]:
            if leaf in seen:
                raise ValueError(f"Leaf {leaf!r} appears more than once in the manifest")
            seen.add(leaf)
        return self

    @property
    def num_classes(self) -> int:
        return len(self.id_classes)

    @property
    def levels(self) -> tuple[HoldoutLevel, ...]:
        return tuple(self.ood_sets)

    def class_index(self, leaf: str) -> int:
        return self.id_classes.index(leaf)

    def membership_of(self, leaf: str) -> Membership:
        """Membership tag of a leaf under this split.

        Raises:
            KeyError: If the leaf is not part of the manifest
        """
        if leaf in self.id_classes:
            return Membership.ID
        for level, leaves in self.ood_sets.items():
            if leaf in leaves:
                return Membership.for_level(level)
        raise KeyError(f"Leaf {leaf!r} is not in manifest for {self.provenance.hierarchy_id!r}")

    def to_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SplitManifest":
        return cls.model_validate_json(text)
