"""Exception hierarchy shared by every module."""


class InputError(ValueError):
    """A caller passed a value outside an operation's domain."""


class ConfigError(InputError):
    """A scenario or run configuration failed validation."""


class ProtocolError(RuntimeError):
    """An internal contract was breached; always a bug signal, never user error."""
