"""Canonical value text codec, implemented against PROTOCOL.md section 1.

Deliberately independent of the orchestrator's implementation: the golden
transcripts and the cross-conformance test in this package's suite are
what keep the two in lockstep.
"""

from __future__ import annotations

import math

MAX_DEPTH = 10
MAX_ITEMS = 1000
MAX_STR = 10_000

_PRIM_TAGS = ("N", "B", "I", "F", "S")


class CodecError(ValueError):
    """Value outside the grammar, or malformed canonical text."""

    def __init__(self, message: str, position: int | None = None) -> None:
        super().__init__(message)
        self.position = position


def _is_prim(v) -> bool:
    return v is None or type(v) in (bool, int, float, str)


def _float_text(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0.0"
    return repr(x)


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace("\n", "\\n").replace("\r", "\\r")


def encode(value, _depth: int = 1) -> str:
    """Single-line canonical text for a grammar value."""
    if _depth > MAX_DEPTH + 1:  # +1: the argument tuple wrapper level
        raise CodecError("nesting too deep to encode")
    if value is None:
        return "N"
    kind = type(value)
    if kind is bool:
        return "B:1" if value else "B:0"
    if kind is int:
        return f"I:{value}"
    if kind is float:
        return f"F:{_float_text(value)}"
    if kind is str:
        if len(value) > MAX_STR:
            raise CodecError("string too long to encode")
        return f"S:{len(value)}:{_escape(value)}"
    if kind in (list, tuple):
        if len(value) > MAX_ITEMS:
            raise CodecError("container too long to encode")
        tag = "L" if kind is list else "T"
        inner = ",".join(encode(item, _depth + 1) for item in value)
        return f"{tag}[{inner}]"
    if kind is set:
        if len(value) > MAX_ITEMS:
            raise CodecError("container too long to encode")
        for item in value:
            _check_hashable(item)
        texts = sorted({encode(item, _depth + 1) for item in value})
        return "E[" + ",".join(texts) + "]"
    if kind is dict:
        if len(value) > MAX_ITEMS:
            raise CodecError("container too long to encode")
        pairs = []
        for key in value:
            if not _is_prim(key):
                raise CodecError("mapping keys must be primitives")
            pairs.append((encode(key, _depth + 1), key))
        pairs.sort(key=lambda p: p[0])
        parts = []
        last_key_text = None
        for key_text, key in pairs:
            entry = key_text + "=" + encode(value[key], _depth + 1)
            if key_text == last_key_text:
                parts[-1] = entry  # later insertion wins
            else:
                parts.append(entry)
                last_key_text = key_text
        return "D[" + ",".join(parts) + "]"
    raise CodecError(f"type {kind.__name__} is outside the grammar")


def _check_hashable(v) -> None:
    if _is_prim(v):
        return
    if type(v) is tuple:
        for item in v:
            _check_hashable(item)
        return
    raise CodecError("set elements must be hashable grammar values")


class _Reader:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def error(self, message: str) -> CodecError:
        return CodecError(f"{message} (at offset {self.pos})", self.pos)

    def take(self, n: int = 1) -> str:
        if self.pos + n > len(self.text):
            raise self.error("unexpected end of input")
        out = self.text[self.pos:self.pos + n]
        self.pos += n
        return out

    def expect(self, ch: str) -> None:
        if self.take() != ch:
            self.pos -= 1
            raise self.error(f"expected {ch!r}")

    def digits(self) -> str:
        start = self.pos
        if self.pos < len(self.text) and self.text[self.pos] == "-":
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        token = self.text[start:self.pos]
        if not token or token == "-":
            raise self.error("expected digits")
        return token

    def value(self, depth: int = 1):
        if depth > MAX_DEPTH + 1:
            raise self.error("nesting too deep")
        tag = self.take()
        if tag == "N":
            return None
        if tag == "B":
            self.expect(":")
            bit = self.take()
            if bit not in "01":
                raise self.error("bool payload must be 0 or 1")
            return bit == "1"
        if tag == "I":
            self.expect(":")
            return int(self.digits())
        if tag == "F":
            self.expect(":")
            return self._float()
        if tag == "S":
            self.expect(":")
            return self._string()
        if tag in ("L", "T"):
            items = self._sequence(depth)
            return items if tag == "L" else tuple(items)
        if tag == "E":
            items = self._sequence(depth)
            for item in items:
                _check_hashable(item)
            return set(items)
        if tag == "D":
            return self._mapping(depth)
        self.pos -= 1
        raise self.error(f"unknown node tag {tag!r}")

    def _float(self) -> float:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in ",]=":
            self.pos += 1
        token = self.text[start:self.pos]
        if token == "nan":
            return math.nan
        if token == "inf":
            return math.inf
        if token == "-inf":
            return -math.inf
        try:
            return float(token)
        except ValueError:
            self.pos = start
            raise self.error(f"bad float payload {token!r}") from None

    def _string(self) -> str:
        length = int(self.digits())
        if length < 0 or length > MAX_STR:
            raise self.error("string length outside limits")
        self.expect(":")
        chars = []
        for _ in range(length):
            ch = self.take()
            if ch == "\\":
                esc = self.take()
                try:
                    ch = {"n": "\n", "r": "\r", "\\": "\\"}[esc]
                except KeyError:
                    self.pos -= 1
                    raise self.error(f"bad string escape \\{esc}") from None
            chars.append(ch)
        return "".join(chars)

    def _sequence(self, depth: int) -> list:
        self.expect("[")
        items: list = []
        if self.pos < len(self.text) and self.text[self.pos] == "]":
            self.pos += 1
            return items
        while True:
            items.append(self.value(depth + 1))
            if len(items) > MAX_ITEMS:
                raise self.error("container too long")
            ch = self.take()
            if ch == "]":
                return items
            if ch != ",":
                self.pos -= 1
                raise self.error("expected ',' or ']'")

    def _mapping(self, depth: int) -> dict:
        self.expect("[")
        out: dict = {}
        if self.pos < len(self.text) and self.text[self.pos] == "]":
            self.pos += 1
            return out
        while True:
            key = self.value(depth + 1)
            if not _is_prim(key):
                raise self.error("mapping keys must be primitives")
            self.expect("=")
            out[key] = self.value(depth + 1)
            if len(out) > MAX_ITEMS:
                raise self.error("container too long")
            ch = self.take()
            if ch == "]":
                return out
            if ch != ",":
                self.pos -= 1
                raise self.error("expected ',' or ']'")


def decode(text: str):
    """Parse canonical text; raises :class:`CodecError` on malformed input."""
    reader = _Reader(text)
    value = reader.value()
    if reader.pos != len(text):
        raise reader.error("trailing data after value")
    return value
