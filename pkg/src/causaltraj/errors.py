"""Exception types shared across the package."""


class CausaltrajError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(CausaltrajError, ValueError):
    """Array shapes do not satisfy an operation's contract."""


class NumericError(CausaltrajError, ArithmeticError):
    """Domain violation or non-finite values produced by a primitive."""


class ContractError(CausaltrajError, ValueError):
    """A precondition of an operation was violated."""


class ParseError(CausaltrajError, ValueError):
    """Malformed input text; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class IntegrityError(CausaltrajError, ValueError):
    """Structurally valid input that violates a dataset invariant."""


class FormatError(CausaltrajError, ValueError):
    """A binary artifact does not carry the expected magic/layout."""


class VersionError(CausaltrajError, ValueError):
    """A binary artifact was written by a newer format version."""


class ConfigError(CausaltrajError, ValueError):
    """One or more invalid entries in a configuration file."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems
