"""Domain error types raised across the toolkit.

Every error a caller is expected to handle derives from SphereidError,
so the CLI can map the whole family onto exit code 1.
"""


class SphereidError(Exception):
    """Base class for all domain errors."""


# --- manifest / config ---

class MalformedRecord(SphereidError):
    """A manifest line could not be parsed; carries the 1-based line number."""

    def __init__(self, line_no, reason):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class DuplicateId(SphereidError):
    pass


class UnknownGenerator(SphereidError):
    pass


class BadConfig(SphereidError):
    """Invalid or unknown key in a run-config file, or an invariant violation."""


# --- simulator ---

class PatternCollision(SphereidError):
    """Fingerprint construction could not reach the overlap bound in 100 retries."""


# --- encoder ---

class GridTooSmall(SphereidError):
    pass


class ZeroFeatureNorm(SphereidError):
    pass


class StaleCache(SphereidError):
    """Backward called with a cache whose shapes do not match the parameters."""


# --- losses ---

class DegenerateBatch(SphereidError):
    """Every anchor in the batch has an empty positive set."""


class NoRealSamples(SphereidError):
    pass


# --- boundary ---

class EmptyDeviations(SphereidError):
    pass


class BoundaryUninitialized(SphereidError):
    pass


# --- trainer ---

class InsufficientSamples(SphereidError):
    pass


class NonFiniteGradient(SphereidError):
    """A gradient went NaN/inf; training aborts with step diagnostics."""


# --- few-shot ---

class InsufficientClassSamples(SphereidError):
    pass


class DegenerateMean(SphereidError):
    """Support embeddings cancel out; the prototype mean has ~zero norm."""


# --- metrics ---

class OneSidedGroundTruth(SphereidError):
    pass


class NoPositives(SphereidError):
    pass
