"""caserunner: executes entry points on encoded argument tuples, speaking
line-delimited JSON over stdio (see the repository's PROTOCOL.md)."""

__version__ = "0.1.0"

PROTOCOL_VERSION = 1
TIMEOUT_EXIT_CODE = 17
PROTOCOL_ERROR_EXIT_CODE = 3
VERSION_MISMATCH_EXIT_CODE = 2
