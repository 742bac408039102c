"""Error taxonomy shared across the package.

Raising from this hierarchy lets the CLI map failure classes to exit codes
without string matching:

* :class:`ConfigError`, :class:`InputError`, :class:`SizeError` — the caller
  asked for something malformed, inconsistent, or out of the dense-solver
  envelope.
* :class:`NumericError`, :class:`ZoneError` — the inputs were acceptable but a
  numerical result failed an internal consistency check.
"""


class FloqtrkError(Exception):
    """Base class for all package errors."""


class InputError(FloqtrkError, ValueError):
    """A caller-supplied object violates a documented precondition."""


class ConfigError(FloqtrkError, ValueError):
    """A job configuration is malformed, inconsistent, or incomplete."""


class SizeError(InputError):
    """A requested problem size exceeds a documented dense-solver guard."""


class NumericError(FloqtrkError, RuntimeError):
    """A numerical result failed an internal consistency check."""


class ZoneError(FloqtrkError, RuntimeError):
    """Folded-zone bookkeeping cannot proceed (no usable representatives)."""
