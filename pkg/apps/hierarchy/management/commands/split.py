"""Management command to compile holdout rules into a split manifest, or inspect a hierarchy.

Hierarchy and holdout sources are file paths or bundled references; arguments override the
run config's ``split`` section.

Usage:
    python manage.py split compile --hierarchy bundled:fgvc_aircraft \\
        --holdout-file bundled:fgvc_aircraft.split1 --out manifest.json
    python manage.py split compile --hierarchy tree.txt --holdout Boeing=L1 --holdout A320=L3 --out manifest.json
    python manage.py split compile --hierarchy bundled:fgvc_aircraft --out all_id.json
    python manage.py split inspect --hierarchy bundled:ships_rsimagenet
"""

from apps.cli.base import ToolCommand
from apps.cli.exceptions import ConfigError
from apps.cli.schemas import SplitSection
from apps.hierarchy.bundled import read_hierarchy_source, read_holdout_source
from apps.hierarchy.models import Holdout, LabelHierarchy
from apps.hierarchy.parser import emit_hierarchy_text
from apps.hierarchy.splits import compile_split, emit_manifest


class Command(ToolCommand):
    """Compile a split manifest or summarize a hierarchy."""

    help = "Compile holdout rules into a split manifest (compile) or summarize a hierarchy (inspect)"

    def add_command_arguments(self, parser):
        parser.add_argument("action", choices=["compile", "inspect"])
        parser.add_argument("--hierarchy", help="Hierarchy spec path or bundled:<name>")
        parser.add_argument(
            "--holdout",
            action="append",
            default=[],
            metavar="NODE=LEVEL",
            help="Hold out a node at a level (repeatable)",
        )
        parser.add_argument("--holdout-file", help="Holdout rules file or bundled:<name>.<split>")

    def _section(self, options: dict) -> SplitSection:
        config = self.load_config(options)
        section = config.split if config is not None else None
        hierarchy = options["hierarchy"] or (section.hierarchy if section else None)
        if not hierarchy:
            raise ConfigError("A hierarchy source is required (--hierarchy or split.hierarchy)", key="hierarchy")
        return SplitSection(
            hierarchy=hierarchy,
            holdouts=options["holdout"] or (section.holdouts if section else []),
            holdout_file=options["holdout_file"] or (section.holdout_file if section else None),
        )

    def _holdouts(self, section: SplitSection) -> list[Holdout]:
        try:
            rules = [Holdout.coerce(rule) for rule in section.holdouts]
        except ValueError as e:
            raise ConfigError(str(e), key="holdouts") from e
        if section.holdout_file:
            rules.extend(read_holdout_source(section.holdout_file))
        return rules

    def run(self, **options):
        section = self._section(options)
        hierarchy = read_hierarchy_source(section.hierarchy)
        holdouts = self._holdouts(section)

        if options["action"] == "inspect":
            self._inspect(hierarchy, holdouts, options)
            return

        manifest = emit_manifest(compile_split(hierarchy, holdouts))
        out = self.resolve_out(options["out"])
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(manifest.to_json(), encoding="utf-8")

        counts = ", ".join(f"{level.value}={len(leaves)}" for level, leaves in manifest.ood_sets.items()) or "none"
        self.success(f"Wrote manifest to {out}: {manifest.num_classes} ID classes; OOD leaves {counts}")

    def _inspect(self, hierarchy: LabelHierarchy, holdouts: list[Holdout], options: dict):
        counts = hierarchy.level_counts()
        self.info(f"Hierarchy {hierarchy.hierarchy_id!r}: {len(hierarchy.leaves)} leaves")
        for depth, count in counts.items():
            self.info(f"  depth {depth}: {count} nodes")

        if holdouts:
            plan = compile_split(hierarchy, holdouts)
            self.info(f"  ID leaves: {len(plan.id_leaves)}")
            for level, leaves in sorted(plan.ood_leaves.items()):
                self.info(f"  OOD {level.value}: {len(leaves)} leaves")

        if options["out"]:
            out = self.resolve_out(options["out"])
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(emit_hierarchy_text(hierarchy), encoding="utf-8")
            self.success(f"Wrote normalized hierarchy to {out}")
