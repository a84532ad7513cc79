"""simpmine: mine complex-to-simple sentence pairs from document-summary corpora."""

__version__ = "0.1.0"
