"""Exception hierarchy.

Every error carries a short ``category`` string so the command-line front end
can report a one-line, machine-parsable failure.
"""


class OharaError(Exception):
    category = "error"


class CurveError(OharaError, ValueError):
    category = "curve"


class NotEmbeddedError(CurveError):
    category = "not-embedded"


class KernelError(OharaError, ValueError):
    category = "kernel"


class AssumptionViolation(KernelError):
    """A kernel fails one of the structural assumptions an evaluator needs."""

    category = "assumption"

    def __init__(self, assumption, message):
        super().__init__(f"{assumption}: {message}")
        self.assumption = assumption


class AngleError(OharaError, ValueError):
    category = "angle"


class MobiusError(OharaError, ValueError):
    category = "mobius"


class ConfigError(OharaError, ValueError):
    category = "config"
