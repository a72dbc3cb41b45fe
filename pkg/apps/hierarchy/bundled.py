"""Bundled hierarchy specs and holdout rules (FGVC-Aircraft, ShipsRSImageNet).

Spec files live in ``specs/<name>.txt``; holdout rules in ``specs/<name>.<split>.holdouts``
with one ``NODE=LEVEL`` per line. Anything accepting a hierarchy source also accepts
``bundled:<name>`` in place of a path.
"""

from pathlib import Path

from .models import Holdout, LabelHierarchy
from .parser import parse_hierarchy

SPECS_DIR = Path(__file__).resolve().parent / "specs"
BUNDLED_PREFIX = "bundled:"


def bundled_names() -> list[str]:
    """Names of the bundled hierarchy specs."""
    return sorted(path.stem for path in SPECS_DIR.glob("*.txt"))


def load_bundled_hierarchy(name: str) -> LabelHierarchy:
    """Parse a bundled hierarchy spec.

    Args:
        name: Spec name, e.g. ``fgvc_aircraft`` or ``ships_rsimagenet``

    Returns:
        LabelHierarchy: The parsed tree

    Raises:
        FileNotFoundError: If no spec of that name is bundled
    """
    path = SPECS_DIR / f"{name}.txt"
    if not path.is_file():
        raise FileNotFoundError(f"No bundled hierarchy {name!r}; available: {', '.join(bundled_names())}")
    return parse_hierarchy(path.read_text(encoding="utf-8"))


def parse_holdout_lines(text: str) -> list[Holdout]:
    """Read ``NODE=LEVEL`` lines, skipping blanks and whole-line ``#`` comments."""
    holdouts = []
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            holdouts.append(Holdout.coerce(line))
    return holdouts


def load_bundled_holdouts(name: str, split: str) -> list[Holdout]:
    """Holdout rules of a bundled split, e.g. ``("fgvc_aircraft", "split1")``.

    Raises:
        FileNotFoundError: If the split is not bundled
    """
    path = SPECS_DIR / f"{name}.{split}.holdouts"
    if not path.is_file():
        raise FileNotFoundError(f"No bundled split {split!r} for hierarchy {name!r}")
    return parse_holdout_lines(path.read_text(encoding="utf-8"))


def read_hierarchy_source(source: str | Path) -> LabelHierarchy:
    """Load a hierarchy from a file path or a ``bundled:<name>`` reference."""
    text = str(source)
    if text.startswith(BUNDLED_PREFIX):
        return load_bundled_hierarchy(text.removeprefix(BUNDLED_PREFIX))
    return parse_hierarchy(Path(source).read_text(encoding="utf-8"))


def read_holdout_source(source: str | Path) -> list[Holdout]:
    """Load holdout rules from a file path or a ``bundled:<name>.<split>`` reference."""
    text = str(source)
    if text.startswith(BUNDLED_PREFIX):
        name, _, split = text.removeprefix(BUNDLED_PREFIX).rpartition(".")
        if not name:
            raise FileNotFoundError(f"Bundled holdouts must be named bundled:<name>.<split>, got {text!r}")
        return load_bundled_holdouts(name, split)
    return parse_holdout_lines(Path(source).read_text(encoding="utf-8"))
