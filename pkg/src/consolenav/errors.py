"""Exception types shared across the package."""


class ConsoleNavError(Exception):
    """Base class for all errors raised by this package."""


# --- embedding store ---------------------------------------------------------

class MalformedHeader(ConsoleNavError):
    """Store file magic, version, or record structure is invalid."""


class DimensionMismatch(ConsoleNavError):
    """A vector's length disagrees with the declared dimension."""


class DuplicateKey(ConsoleNavError):
    """Two store records normalize to the same key."""


class KeyNotFound(ConsoleNavError):
    """Lookup key absent from the store; carries the resolved key string."""

    def __init__(self, key: str):
        super().__init__(f"no entry for key {key!r}")
        self.key = key


class EmptyInput(ConsoleNavError):
    """An operation received an empty string or empty list."""


class MixedDimensions(ConsoleNavError):
    """Vectors of different lengths were combined."""


# --- prior generation --------------------------------------------------------

class NoItemsFound(ConsoleNavError):
    """No numbered lines could be extracted from a response."""


class ParseError(ConsoleNavError):
    """A response could not be parsed into the expected structure."""


class ClientError(ConsoleNavError):
    """The language-model client failed after bounded retries."""


class EmptyLandmarkList(ConsoleNavError):
    """Landmark extraction produced zero usable landmarks."""


class EmptyVocabulary(ConsoleNavError):
    """Fallback vocabulary has no entries."""


# --- numeric kernels ---------------------------------------------------------

class InvalidTemperature(ConsoleNavError):
    """Softmax temperature must be strictly positive."""


class EmptyViews(ConsoleNavError):
    """A view distribution needs at least one view."""


class ArityMismatch(ConsoleNavError):
    """Cooccurrence counts disagree between two structures."""


class LengthMismatch(ConsoleNavError):
    """Two aligned lists have different lengths."""


class IndexOutOfRange(ConsoleNavError):
    """A view or action index is outside the valid range."""


class DegenerateBatch(ConsoleNavError):
    """Contrastive loss needs at least two views."""


class StaleForward(ConsoleNavError):
    """Backward pass invoked without recorded forward intermediates."""


# --- agent / simulator / CLI -------------------------------------------------

class MissingPriors(ConsoleNavError):
    """No priors available for an episode's instruction."""


class EmptyDataset(ConsoleNavError):
    """Training requires at least one episode."""


class InfeasibleConfig(ConsoleNavError):
    """World generation parameters cannot be satisfied."""


class Unreachable(ConsoleNavError):
    """No path exists between two nodes."""


class UsageError(ConsoleNavError):
    """Bad command-line arguments."""
