"""Batch pipeline deciding, per website, whether its content is LLM-dominant.

Pages are sampled from sitemaps or archive indexes, fetched politely,
stripped to main prose, strictly filtered, scored by a perplexity-ratio
detector, and aggregated into a 9-decile feature vector classified by a
linear SVM.
"""

__version__ = "0.1.0"
