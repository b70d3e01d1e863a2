"""Domain errors shared across model modules."""


class UnsupportedRegimeError(ValueError):
    """Closed-form population quantity requested outside its regime."""


class SingularPointError(ValueError):
    """Evaluation at a point where the quantity is degenerate."""
