"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user-supplied data: bad shapes, ranges, or file contents."""


class StateError(RuntimeError):
    """Operation called on an object in an unusable state."""


class EmptyReferenceError(InputError):
    """A density cutoff left no reference points to cover."""


class SolverFailure(RuntimeError):
    """The cell solver exceeded its iteration cap; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
