"""Exception types shared across the package.

Plain ``ValueError`` is raised for bad call arguments (wrong window
parity, mismatched lengths, invalid configuration). The subclasses here
mark problems with the *data* rather than the call.
"""


class DataError(ValueError):
    """Input data violates a domain precondition (empty series,
    non-finite values, empty tree, track without any matched pose)."""


class ParseError(ValueError):
    """A data file is malformed. Carries file path and line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        super().__init__(prefix + message)
