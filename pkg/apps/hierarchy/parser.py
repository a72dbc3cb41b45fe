"""Reading and writing hierarchy specification files.

Two equivalent formats are accepted.

Indented text, one node per line, indentation giving depth::

    # whole-line comments start with '#'
    ships-rsimagenet: ShipsRSImageNet
      Military
        Aircraft Carrier
        Other Military: Other Military (catch-all)

Each line is ``node_id`` or ``node_id: Display Name``; the id ends at the first colon, so ids
cannot contain one, while display names may hold any character. The root's id doubles as the
hierarchy id.

Structured object (JSON)::

    {"hierarchy_id": "toy", "nodes": [{"node_id": "toy", "parent_id": null, "display_name": "Toy"}, ...]}
"""

import json

import logfire
from pydantic import BaseModel, ConfigDict, ValidationError

from .exceptions import SpecSyntaxError
from .models import LabelHierarchy, LabelNode

INDENT_UNIT = "  "


class NodeEntry(BaseModel):
    """One node in the structured-object format."""

    model_config = ConfigDict(extra="forbid")

    node_id: str
    parent_id: str | None = None
    display_name: str = ""


class HierarchyDocument(BaseModel):
    """Structured-object form of a hierarchy spec."""

    model_config = ConfigDict(extra="forbid")

    hierarchy_id: str = ""
    nodes: list[NodeEntry]


def parse_hierarchy(spec_text: str) -> LabelHierarchy:
    """Parse a hierarchy spec in either format into a validated tree.

    Args:
        spec_text: Indented text or a JSON structured object

    Returns:
        LabelHierarchy: The validated tree

    Raises:
        SpecSyntaxError: If a line or field cannot be read
        HierarchyError: If the tree breaks an invariant (duplicate id, missing parent,
            cycle, root count, ragged leaf depth)
    """
    if spec_text.lstrip().startswith("{"):
        hierarchy = _parse_structured(spec_text)
    else:
        hierarchy = _parse_indented(spec_text)

    logfire.debug(
        "Hierarchy parsed",
        hierarchy_id=hierarchy.hierarchy_id,
        nodes=len(hierarchy),
        leaves=len(hierarchy.leaves),
        leaf_depth=hierarchy.leaf_depth,
    )
    return hierarchy


def _parse_structured(spec_text: str) -> LabelHierarchy:
    try:
        document = HierarchyDocument.model_validate_json(spec_text)
    except ValidationError as e:
        raise SpecSyntaxError(f"Invalid structured hierarchy: {e}") from e

    nodes = [LabelNode(entry.node_id, entry.parent_id, entry.display_name) for entry in document.nodes]
    return LabelHierarchy(tuple(nodes), document.hierarchy_id)


def _parse_indented(spec_text: str) -> LabelHierarchy:
    nodes: list[LabelNode] = []
    # (indent width, node_id) of the open ancestors of the next line
    stack: list[tuple[int, str]] = []

    for line_number, raw in enumerate(spec_text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("#"):
            continue

        body = line.lstrip(" ")
        if body.startswith("\t"):
            raise SpecSyntaxError("tabs are not allowed in indentation", line_number)
        indent = len(line) - len(body)

        node_id, _, display_name = body.partition(":")
        node_id = node_id.strip()
        display_name = display_name.strip()
        if not node_id:
            raise SpecSyntaxError("missing node id", line_number)

        while stack and stack[-1][0] >= indent:
            popped_indent, _ = stack.pop()
            if popped_indent > indent and (not stack or stack[-1][0] < indent):
                raise SpecSyntaxError(f"inconsistent indentation before {node_id!r}", line_number, node_id)

        parent_id = stack[-1][1] if stack else None
        nodes.append(LabelNode(node_id, parent_id, display_name))
        stack.append((indent, node_id))

    if not nodes:
        raise SpecSyntaxError("hierarchy spec is empty")
    return LabelHierarchy(tuple(nodes))


def _check_writable(node: LabelNode):
    node_id = node.node_id
    if ":" in node_id or node_id.startswith("#") or node_id != node_id.strip():
        raise SpecSyntaxError(f"node id {node_id!r} cannot be written as indented text", node_id=node_id)
    if "\n" in node.display_name or "\r" in node.display_name:
        raise SpecSyntaxError(f"display name of {node_id!r} spans lines", node_id=node_id)


def emit_hierarchy_text(hierarchy: LabelHierarchy) -> str:
    """Serialize a hierarchy to the indented text format (two spaces per level).

    Args:
        hierarchy: Tree to write

    Returns:
        str: Spec text that parses back to an equal tree

    Raises:
        SpecSyntaxError: If a node id cannot be written in this format (it holds a colon, starts
            with '#' or has surrounding whitespace) or a display name spans lines
    """
    lines = [f"# hierarchy: {hierarchy.hierarchy_id}"]

    def write(node_id: str, depth: int):
        node = hierarchy.node(node_id)
        _check_writable(node)
        label = node_id if node.display_name == node_id else f"{node_id}: {node.display_name}"
        lines.append(f"{INDENT_UNIT * depth}{label}")
        for child in hierarchy.children(node_id):
            write(child, depth + 1)

    write(hierarchy.root_id, 0)
    return "\n".join(lines) + "\n"


def emit_hierarchy_json(hierarchy: LabelHierarchy) -> str:
    """Serialize a hierarchy to the structured-object format."""
    document = {
        "hierarchy_id": hierarchy.hierarchy_id,
        "nodes": [
            {"node_id": node.node_id, "parent_id": node.parent_id, "display_name": node.display_name}
            for node in hierarchy
        ],
    }
    return json.dumps(document, indent=2) + "\n"
