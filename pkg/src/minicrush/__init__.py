"""Desk-scale replication toolkit for BigCrush-style PRNG testing."""

__version__ = "0.1.0"

from .generators import GeneratorKind, Stream, stream_from_seed  # noqa: E402
from .families import Classification, ClassificationPolicy, TestId, TestResult  # noqa: E402

__all__ = [
    "GeneratorKind", "Stream", "stream_from_seed",
    "Classification", "ClassificationPolicy", "TestId", "TestResult",
]
