class FieldError(ArithmeticError):
    """Degenerate prime-field operation, e.g. inverting zero."""


class IntegrityError(RuntimeError):
    """A deterministic invariant failed; indicates a bug, never bad luck."""
