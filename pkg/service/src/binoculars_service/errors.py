"""Service exception hierarchy."""


class BinocularsError(Exception):
    """Base class for scoring-service errors."""


class TextTooShort(BinocularsError):
    """A text tokenized to fewer than two tokens after truncation."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"text at index {index} has fewer than 2 tokens")


class VocabMismatch(BinocularsError):
    """Observer and performer models do not share a vocabulary."""


class DegenerateScore(BinocularsError):
    """The cross-perplexity denominator vanished."""


class ModelLoadError(BinocularsError):
    """A model spec could not be resolved or loaded."""
