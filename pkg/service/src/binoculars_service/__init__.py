"""HTTP scoring service: perplexity-ratio ("binoculars") scores for text
batches under an observer/performer causal language model pair."""

__version__ = "0.1.0"
