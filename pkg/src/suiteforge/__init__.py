"""suiteforge: harden a code-synthesis benchmark's test suites and score
candidate programs by differential testing against ground truth."""

__version__ = "0.1.0"

from .values import (  # noqa: F401
    DEFAULT_LIMITS,
    Limits,
    TestInput,
    TypeTag,
    Value,
    canonical_hash,
    decode,
    encode,
    equivalent,
    type_of,
)
