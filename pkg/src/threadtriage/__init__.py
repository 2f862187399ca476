"""Thread-level triage: predict whether at-risk forum users recover over the
threads they start, from the language of everyone involved."""

__version__ = "0.1.0"

from .corpus import FLAGGED, GREEN, LabelingConfig, Post, Thread, load_corpus, resolve_label
from .errors import ConfigError, DataError, UsageError

__all__ = [
    "FLAGGED",
    "GREEN",
    "LabelingConfig",
    "Post",
    "Thread",
    "load_corpus",
    "resolve_label",
    "ConfigError",
    "DataError",
    "UsageError",
    "__version__",
]
