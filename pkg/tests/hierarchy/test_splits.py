"""Tests for holdout compilation, manifests and the bundled hierarchies."""

import logfire
import numpy as np
from django.test import SimpleTestCase

from apps.hierarchy.bundled import (
    bundled_names,
    load_bundled_hierarchy,
    load_bundled_holdouts,
    parse_holdout_lines,
    read_hierarchy_source,
    read_holdout_source,
)
from apps.hierarchy.exceptions import EmptyIdSetError, LevelMismatchError, NestedHoldoutError, UnknownNodeError
from apps.hierarchy.models import Holdout, HoldoutLevel, LabelHierarchy, LabelNode, Membership, SplitManifest
from apps.hierarchy.parser import parse_hierarchy
from apps.hierarchy.splits import compile_split, emit_manifest

# Configure logfire for tests - ignore if not configured to avoid warnings
logfire.configure(send_to_logfire=False, console=False)

TOY_SPEC = """\
toy
  Boeing
    737
      737-400
      737-800
    747
      747-400
  Airbus
    A320
      A319
      A320-200
    A330
      A330-300
  Embraer
    E-Jet
      E-170
      E-190
"""


def random_hierarchy(rng: np.random.Generator) -> LabelHierarchy:
    """Three levels with one to three children per node."""
    nodes = [LabelNode("root")]
    frontier = ["root"]
    for _ in range(3):
        children = []
        for parent in frontier:
            for index in range(int(rng.integers(1, 4))):
                node_id = f"n{index}" if parent == "root" else f"{parent}.{index}"
                nodes.append(LabelNode(node_id, parent))
                children.append(node_id)
        frontier = children
    return LabelHierarchy(tuple(nodes))


class CompileSplitTestCase(SimpleTestCase):
    """Holdout rules partition the leaves by their nearest held-out ancestor."""

    def setUp(self):
        self.hierarchy = parse_hierarchy(TOY_SPEC)

    def test_partition_by_level(self):
        plan = compile_split(self.hierarchy, ["Embraer=L1", "A330=L2", "737-400=L3"])

        self.assertEqual(plan.id_leaves, {"737-800", "747-400", "A319", "A320-200"})
        self.assertEqual(plan.ood_leaves[HoldoutLevel.L1], {"E-170", "E-190"})
        self.assertEqual(plan.ood_leaves[HoldoutLevel.L2], {"A330-300"})
        self.assertEqual(plan.ood_leaves[HoldoutLevel.L3], {"737-400"})

    def test_partition_covers_every_leaf_once(self):
        plan = compile_split(self.hierarchy, [("Boeing", "L1"), ("A320", 2)])
        ood = [leaf for leaves in plan.ood_leaves.values() for leaf in leaves]

        self.assertEqual(sorted([*plan.id_leaves, *ood]), sorted(self.hierarchy.leaves))
        self.assertEqual(len(ood), len(set(ood)))
        self.assertNotIn(HoldoutLevel.L3, plan.ood_leaves)

    def test_no_holdouts_keeps_every_leaf(self):
        plan = compile_split(self.hierarchy, [])
        self.assertEqual(plan.id_leaves, set(self.hierarchy.leaves))
        self.assertEqual(dict(plan.ood_leaves), {})
        self.assertEqual(emit_manifest(plan).num_classes, len(self.hierarchy.leaves))

    def test_partition_on_random_hierarchies(self):
        """Every leaf lands in exactly one set, chosen by its nearest held-out ancestor."""
        rng = np.random.default_rng(7)
        levels = {level.depth: level for level in HoldoutLevel}
        for trial in range(100):
            hierarchy = random_hierarchy(rng)
            held: dict[str, int] = {}
            for node_id in rng.permutation([n.node_id for n in hierarchy if n.parent_id is not None]):
                node_id = str(node_id)
                lineage = {node_id, *hierarchy.ancestors(node_id)}
                related = any(other in lineage or node_id in hierarchy.ancestors(other) for other in held)
                if len(held) < 3 and not related and rng.uniform() < 0.5:
                    held[node_id] = hierarchy.depth(node_id)
            try:
                plan = compile_split(hierarchy, list(held.items()))
            except EmptyIdSetError:
                continue

            with self.subTest(trial=trial):
                for leaf in hierarchy.leaves:
                    homes = [level for level, leaves in plan.ood_leaves.items() if leaf in leaves]
                    homes += ["ID"] if leaf in plan.id_leaves else []
                    self.assertEqual(len(homes), 1, leaf)
                    nearest = next((held[n] for n in (leaf, *hierarchy.ancestors(leaf)) if n in held), None)
                    self.assertEqual(homes[0], "ID" if nearest is None else levels[nearest])

    def test_held_out_node_takes_all_descendants(self):
        """No descendant of a held-out node stays in-distribution."""
        plan = compile_split(self.hierarchy, ["Boeing=L1"])
        for leaf in self.hierarchy.descendant_leaves("Boeing"):
            self.assertNotIn(leaf, plan.id_leaves)

    def test_unknown_node(self):
        with self.assertRaises(UnknownNodeError) as ctx:
            compile_split(self.hierarchy, ["Cessna=L1"])
        self.assertEqual(ctx.exception.node_id, "Cessna")

    def test_level_mismatch(self):
        with self.assertRaises(LevelMismatchError) as ctx:
            compile_split(self.hierarchy, ["A330=L1"])
        self.assertEqual(ctx.exception.node_id, "A330")

    def test_nested_holdouts(self):
        with self.assertRaises(NestedHoldoutError):
            compile_split(self.hierarchy, ["Boeing=L1", "737=L2"])

    def test_duplicate_holdout(self):
        with self.assertRaises(NestedHoldoutError):
            compile_split(self.hierarchy, ["Boeing=L1", "Boeing=L1"])

    def test_holdouts_emptying_id_set(self):
        with self.assertRaises(EmptyIdSetError):
            compile_split(self.hierarchy, ["Boeing=L1", "Airbus=L1", "Embraer=L1"])

    def test_rule_hash_ignores_order(self):
        first = compile_split(self.hierarchy, ["Embraer=L1", "A330=L2"])
        second = compile_split(self.hierarchy, ["A330=L2", "Embraer=L1"])
        self.assertEqual(first.rule_hash, second.rule_hash)
        self.assertNotEqual(first.rule_hash, compile_split(self.hierarchy, ["Embraer=L1"]).rule_hash)


class ManifestTestCase(SimpleTestCase):
    def setUp(self):
        self.hierarchy = parse_hierarchy(TOY_SPEC)
        self.manifest = emit_manifest(compile_split(self.hierarchy, ["Embraer=L1", "A330=L2", "737-400=L3"]))

    def test_dense_sorted_class_indices(self):
        self.assertEqual(self.manifest.id_classes, ["737-800", "747-400", "A319", "A320-200"])
        self.assertEqual(self.manifest.num_classes, 4)
        self.assertEqual(self.manifest.class_index("A319"), 2)

    def test_membership_of(self):
        self.assertIs(self.manifest.membership_of("A319"), Membership.ID)
        self.assertIs(self.manifest.membership_of("E-190"), Membership.OOD_L1)
        self.assertIs(self.manifest.membership_of("737-400"), Membership.OOD_L3)
        with self.assertRaises(KeyError):
            self.manifest.membership_of("nope")

    def test_json_round_trip(self):
        again = SplitManifest.from_json(self.manifest.to_json())
        self.assertEqual(again, self.manifest)
        self.assertEqual(again.provenance.hierarchy_id, "toy")

    def test_overlapping_sets_rejected(self):
        payload = self.manifest.model_dump(mode="json")
        payload["ood_sets"]["L1"].append("A319")
        with self.assertRaises(ValueError):
            SplitManifest.model_validate(payload)


class HoldoutParsingTestCase(SimpleTestCase):
    def test_coerce_forms(self):
        self.assertEqual(Holdout.coerce("Boeing=L1"), Holdout("Boeing", HoldoutLevel.L1))
        self.assertEqual(Holdout.coerce("Boeing = l2"), Holdout("Boeing", HoldoutLevel.L2))
        self.assertEqual(Holdout.coerce(("Boeing", 3)), Holdout("Boeing", HoldoutLevel.L3))
        self.assertEqual(str(Holdout("A330", HoldoutLevel.L2)), "A330=L2")

    def test_bad_holdouts(self):
        for text in ("Boeing", "=L1", "Boeing=L4"):
            with self.subTest(text=text), self.assertRaises(ValueError):
                Holdout.coerce(text)

    def test_holdout_lines_skip_comments(self):
        rules = parse_holdout_lines("# header\nBoeing=L1  # coarse\n\nA330=L2\n")
        self.assertEqual([str(rule) for rule in rules], ["Boeing=L1", "A330=L2"])


class BundledHierarchyTestCase(SimpleTestCase):
    """Shipped FGVC-Aircraft and ShipsRSImageNet data."""

    def test_bundled_names(self):
        self.assertEqual(bundled_names(), ["fgvc_aircraft", "ships_rsimagenet"])

    def test_fgvc_level_counts(self):
        """40 manufacturers, 70 families, 102 variants."""
        hierarchy = load_bundled_hierarchy("fgvc_aircraft")
        self.assertEqual(hierarchy.level_counts(), {1: 40, 2: 70, 3: 102})
        self.assertEqual(hierarchy.leaf_depth, 3)

    def test_fgvc_split1(self):
        hierarchy = load_bundled_hierarchy("fgvc_aircraft")
        manifest = emit_manifest(compile_split(hierarchy, load_bundled_holdouts("fgvc_aircraft", "split1")))

        self.assertEqual(manifest.num_classes, 95)
        self.assertEqual(manifest.levels, (HoldoutLevel.L1, HoldoutLevel.L2, HoldoutLevel.L3))
        self.assertEqual(manifest.ood_sets[HoldoutLevel.L1], ["DH-82", "DHC-1"])
        self.assertEqual(manifest.ood_sets[HoldoutLevel.L2], ["A340-200", "A340-300", "A340-500", "A340-600"])
        self.assertEqual(manifest.ood_sets[HoldoutLevel.L3], ["737-400"])
        for leaf in manifest.id_classes:
            self.assertNotIn("A340", hierarchy.ancestors(leaf))

    def test_ships_military_split(self):
        hierarchy = read_hierarchy_source("bundled:ships_rsimagenet")
        manifest = emit_manifest(compile_split(hierarchy, read_holdout_source("bundled:ships_rsimagenet.military")))

        self.assertEqual(hierarchy.leaf_depth, 2)
        self.assertEqual(len(hierarchy.leaves), 24)
        self.assertEqual(manifest.num_classes, 9)
        self.assertEqual(len(manifest.ood_sets[HoldoutLevel.L1]), 14)
        self.assertEqual(manifest.ood_sets[HoldoutLevel.L2], ["Other Military"])
        self.assertNotIn(HoldoutLevel.L3, manifest.ood_sets)

    def test_missing_bundled_data(self):
        with self.assertRaises(FileNotFoundError):
            load_bundled_hierarchy("imagenet")
        with self.assertRaises(FileNotFoundError):
            read_holdout_source("bundled:fgvc_aircraft.split9")
