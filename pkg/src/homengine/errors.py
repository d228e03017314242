"""Exception types shared across the engine."""


class InvalidInput(ValueError):
    """Malformed instance data (bad JSON shape, out-of-range ids, ...)."""


class CapExceeded(RuntimeError):
    """A configured size/work cap was hit before the question was decided.

    Raised instead of silently returning "no": an undecided run is not a
    verdict.
    """

    def __init__(self, what, limit, needed=None):
        self.what = what
        self.limit = limit
        self.needed = needed
        msg = f"cap exceeded: {what} (limit {limit}"
        if needed is not None:
            msg += f", needed {needed}"
        super().__init__(msg + ")")


class InvariantViolation(AssertionError):
    """An internal guarantee failed; the result cannot be trusted.

    Surfaced loudly on purpose -- never converted into a yes/no answer.
    """
