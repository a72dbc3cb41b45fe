"""Holdout rules: compiling split plans and emitting manifests."""

from collections.abc import Iterable

import logfire

from .exceptions import EmptyIdSetError, LevelMismatchError, NestedHoldoutError, UnknownNodeError
from .models import Holdout, HoldoutLevel, LabelHierarchy, ManifestProvenance, SplitManifest, SplitPlan


def compile_split(
    hierarchy: LabelHierarchy,
    holdouts: Iterable[Holdout | tuple[str, HoldoutLevel | str | int] | str],
) -> SplitPlan:
    """Apply holdout rules to a hierarchy.

    A leaf is OOD at level Lk when its nearest held-out ancestor (or the leaf itself) was
    held out at depth k; every other leaf stays in-distribution.

    Args:
        hierarchy: Validated label tree
        holdouts: ``Holdout`` values, ``(node_id, level)`` pairs or ``NODE=LEVEL`` strings

    Returns:
        SplitPlan: The holdouts and the derived leaf partition

    Raises:
        UnknownNodeError: If a holdout names a node not in the tree
        LevelMismatchError: If a declared level differs from the node's depth
        NestedHoldoutError: If a held-out node sits under another held-out node
        EmptyIdSetError: If no ID leaf remains
    """
    rules = tuple(Holdout.coerce(item) for item in holdouts)

    held: dict[str, HoldoutLevel] = {}
    for rule in rules:
        if rule.node_id not in hierarchy:
            raise UnknownNodeError(
                f"Holdout node {rule.node_id!r} is not in hierarchy {hierarchy.hierarchy_id!r}", rule.node_id
            )
        depth = hierarchy.depth(rule.node_id)
        if depth != rule.level.depth:
            raise LevelMismatchError(
                f"Node {rule.node_id!r} sits at depth {depth} but was held out at {rule.level.value}",
                rule.node_id,
            )
        if rule.node_id in held:
            raise NestedHoldoutError(f"Node {rule.node_id!r} is held out twice", rule.node_id)
        held[rule.node_id] = rule.level

    for rule in rules:
        for ancestor in hierarchy.ancestors(rule.node_id):
            if ancestor in held:
                raise NestedHoldoutError(
                    f"Held-out node {rule.node_id!r} sits under held-out node {ancestor!r}", rule.node_id
                )

    id_leaves: set[str] = set()
    ood_leaves: dict[HoldoutLevel, set[str]] = {level: set() for level in sorted(set(held.values()))}
    for leaf in hierarchy.leaves:
        level = next((held[node] for node in (leaf, *hierarchy.ancestors(leaf)) if node in held), None)
        if level is None:
            id_leaves.add(leaf)
        else:
            ood_leaves[level].add(leaf)

    if not id_leaves:
        raise EmptyIdSetError(
            f"Holdouts {', '.join(str(rule) for rule in rules)} leave no ID classes in {hierarchy.hierarchy_id!r}"
        )

    plan = SplitPlan(
        hierarchy_id=hierarchy.hierarchy_id,
        holdouts=rules,
        id_leaves=frozenset(id_leaves),
        ood_leaves={level: frozenset(leaves) for level, leaves in ood_leaves.items()},
    )
    logfire.info(
        "Split compiled",
        hierarchy_id=hierarchy.hierarchy_id,
        holdouts=[str(rule) for rule in rules],
        n_id=len(id_leaves),
        n_ood={level.value: len(leaves) for level, leaves in ood_leaves.items()},
    )
    return plan


def emit_manifest(plan: SplitPlan) -> SplitManifest:
    """Turn a split plan into a manifest with dense, lexicographically ordered class indices.

    Args:
        plan: A compiled split plan

    Returns:
        SplitManifest: ``id_classes`` sorted by node id, OOD sets sorted within each level
    """
    return SplitManifest(
        id_classes=sorted(plan.id_leaves),
        ood_sets={level: sorted(leaves) for level, leaves in plan.ood_leaves.items()},
        provenance=ManifestProvenance(hierarchy_id=plan.hierarchy_id, rule_hash=plan.rule_hash),
    )
