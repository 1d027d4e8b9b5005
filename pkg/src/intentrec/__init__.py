"""Online hierarchical intention recognition over observed action transcripts."""

from .engine import InferenceError, RecursionLimitError, Session, explain
from .kb import KBError, KnowledgeBase, load_kb, parse_kb, serialize_kb, validate_kb
from .oracle import enumerate_covers, min_cover_cardinality, validate_cover
from .timeline import Explanation
from .transcript import Transcript, load_transcript, parse_transcript
from .worldstate import EnvObject

__version__ = "0.1.0"

__all__ = [
    "EnvObject",
    "Explanation",
    "InferenceError",
    "KBError",
    "KnowledgeBase",
    "RecursionLimitError",
    "Session",
    "Transcript",
    "enumerate_covers",
    "explain",
    "load_kb",
    "load_transcript",
    "min_cover_cardinality",
    "parse_kb",
    "parse_transcript",
    "serialize_kb",
    "validate_cover",
    "validate_kb",
]
