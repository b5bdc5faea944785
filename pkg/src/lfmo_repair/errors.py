class ValidationError(ValueError):
    """Input violates a documented precondition or invariant."""


class NumericInstabilityError(ArithmeticError):
    """A computed probability or rate left its admissible range beyond roundoff."""
