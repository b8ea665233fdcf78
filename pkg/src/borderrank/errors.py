class DimensionError(ValueError):
    """Shapes, orders or mode indices do not fit together."""


class ToleranceError(ArithmeticError):
    """Float-mode invariants came out inconsistent; retry in exact mode."""

    def __init__(self, message):
        super().__init__(f"{message} (float tolerances are inconclusive here; rerun in exact mode)")
