"""Errors raised while parsing label hierarchies and compiling holdout splits."""


class HierarchyError(ValueError):
    """Base class for invalid hierarchy specifications."""

    def __init__(self, message: str, node_id: str | None = None):
        super().__init__(message)
        self.node_id = node_id


class SpecSyntaxError(HierarchyError):
    """A spec line or structured-object field could not be read."""

    def __init__(self, message: str, line_number: int | None = None, node_id: str | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message, node_id)
        self.line_number = line_number


class DuplicateNodeError(HierarchyError):
    """Two nodes share a node_id."""


class MissingParentError(HierarchyError):
    """A node references a parent_id that is not declared."""


class CycleError(HierarchyError):
    """Following parent links from a node returns to that node."""


class RootError(HierarchyError):
    """The tree has no root or more than one root."""


class RaggedDepthError(HierarchyError):
    """Leaves sit at different depths."""


class SplitError(ValueError):
    """Base class for invalid holdout rules."""

    def __init__(self, message: str, node_id: str | None = None):
        super().__init__(message)
        self.node_id = node_id


class UnknownNodeError(SplitError):
    """A holdout names a node that is not in the hierarchy."""


class LevelMismatchError(SplitError):
    """A holdout's declared level differs from the node's depth."""


class NestedHoldoutError(SplitError):
    """One held-out node is an ancestor of another (or the same node is held out twice)."""


class EmptyIdSetError(SplitError):
    """The holdouts leave no in-distribution leaf."""
