"""Exception types shared across the toolkit."""


class EmbalignError(Exception):
    """Base class for all toolkit errors."""


class ParseError(EmbalignError):
    """Malformed text input (corpus or alignment file)."""


class FormatError(EmbalignError):
    """Malformed binary embedding container."""


class ContractError(EmbalignError):
    """An operation was called with arguments violating its preconditions."""
