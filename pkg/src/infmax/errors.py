"""Exception types shared across the package."""


class FormatError(ValueError):
    """A file (edge list, tree file, seeds file, config) is malformed."""


class ConsistencyError(ValueError):
    """Two inputs that must agree do not (e.g. tree leaves vs. graph vertices)."""


class CapacityError(RuntimeError):
    """A guarded computation would exceed its configured budget."""
