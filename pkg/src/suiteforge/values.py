"""Dynamic value universe: canonical text codec, typing, hashing, equivalence.

Values are plain Python objects drawn from the grammar

    T    ::= list[T] | tuple[T] | set[T] | dict[Prim, T] | Prim
    Prim ::= int | float | bool | str | NoneType

The canonical text encoding is the single wire and file representation.
It is deterministic: set elements are ordered by their own encodings,
mapping entries by their encoded keys, ``-0.0`` is normalised to ``0.0``
and every NaN maps to the single text ``nan``.  See PROTOCOL.md for the
byte-exact grammar.

Comparison semantics intentionally diverge from host ``==`` in one place:
a bool is never equivalent to a number, so a wrong solution returning
``True`` does not score equal to ``1``.  Numeric kinds (int/float) compare
cross-kind within an absolute tolerance.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

from .errors import (
    DepthExceeded,
    HashabilityError,
    ParseError,
    SizeExceeded,
    UnencodableValue,
)

Value = Union[None, bool, int, float, str, list, tuple, set, dict]

PRIM_KINDS = frozenset({"none", "bool", "int", "float", "str"})
CONTAINER_KINDS = frozenset({"list", "tuple", "set", "dict"})


@dataclass(frozen=True)
class Limits:
    """Bounds on value shape; defaults keep serialized cases small."""

    max_depth: int = 10
    max_items: int = 1000
    max_str: int = 10_000


DEFAULT_LIMITS = Limits()


def kind_of(v: Value) -> str:
    """Return the grammar kind of ``v``; raises for non-grammar objects.

    ``bool`` is tested before ``int`` because it subclasses it.
    """
    if v is None:
        return "none"
    t = type(v)
    if t is bool:
        return "bool"
    if t is int:
        return "int"
    if t is float:
        return "float"
    if t is str:
        return "str"
    if t is list:
        return "list"
    if t is tuple:
        return "tuple"
    if t is set:
        return "set"
    if t is dict:
        return "dict"
    raise UnencodableValue(f"value of type {t.__name__} is outside the grammar")


def is_grammar_value(v: Value) -> bool:
    """True if ``v`` (recursively) belongs to the value grammar."""
    try:
        _check_grammar(v)
        return True
    except UnencodableValue:
        return False


def _check_grammar(v: Value) -> None:
    k = kind_of(v)
    if k in ("list", "tuple"):
        for child in v:
            _check_grammar(child)
    elif k == "set":
        for child in v:
            _check_set_element(child)
    elif k == "dict":
        for key, val in v.items():
            if kind_of(key) not in PRIM_KINDS:
                raise UnencodableValue("mapping keys must be primitives")
            _check_grammar(val)


def _check_set_element(v: Value) -> None:
    k = kind_of(v)
    if k in PRIM_KINDS:
        return
    if k == "tuple":
        for child in v:
            _check_set_element(child)
        return
    raise UnencodableValue(f"set element of kind {k} is not hashable")


def _float_text(x: float) -> str:
    """Canonical text for a float: repr(), -0.0 folded, one NaN spelling."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0.0"
    return repr(x)


def _escape_str(s: str) -> str:
    # Keep canonical text single-line: line-delimited files and the wire
    # protocol rely on it.  Everything else is carried raw.
    return s.replace("\\", "\\\\").replace("\n", "\\n").replace("\r", "\\r")


def encode(v: Value, limits: Limits = DEFAULT_LIMITS) -> str:
    """Canonical text for ``v``.

    Deterministic across processes and platforms; order-independent for
    sets and mappings.
    """
    parts: list[str] = []
    _encode_into(v, parts, limits, depth=1)
    return "".join(parts)


def _encode_into(v: Value, out: list[str], limits: Limits, depth: int) -> None:
    if depth > limits.max_depth:
        raise DepthExceeded(f"nesting exceeds depth limit {limits.max_depth}")
    k = kind_of(v)
    if k == "none":
        out.append("N")
    elif k == "bool":
        out.append("B:1" if v else "B:0")
    elif k == "int":
        out.append(f"I:{v}")
    elif k == "float":
        out.append(f"F:{_float_text(v)}")
    elif k == "str":
        if len(v) > limits.max_str:
            raise SizeExceeded(f"string length {len(v)} exceeds {limits.max_str}")
        out.append(f"S:{len(v)}:{_escape_str(v)}")
    elif k in ("list", "tuple"):
        if len(v) > limits.max_items:
            raise SizeExceeded(f"container length {len(v)} exceeds {limits.max_items}")
        out.append("L[" if k == "list" else "T[")
        for i, child in enumerate(v):
            if i:
                out.append(",")
            _encode_into(child, out, limits, depth + 1)
        out.append("]")
    elif k == "set":
        if len(v) > limits.max_items:
            raise SizeExceeded(f"container length {len(v)} exceeds {limits.max_items}")
        sub = Limits(limits.max_depth - depth, limits.max_items, limits.max_str)
        # Dedup by encoding: distinct NaN objects coexist in a host set but
        # are one element canonically.
        encoded = sorted({encode(e, sub) for e in v})
        out.append("E[")
        out.append(",".join(encoded))
        out.append("]")
    elif k == "dict":
        if len(v) > limits.max_items:
            raise SizeExceeded(f"container length {len(v)} exceeds {limits.max_items}")
        sub = Limits(limits.max_depth - depth, limits.max_items, limits.max_str)
        for key in v:
            if kind_of(key) not in PRIM_KINDS:
                raise UnencodableValue("mapping keys must be primitives")
        raw = [(encode(key, sub), key) for key in v]
        raw.sort(key=lambda pair: pair[0])
        # Stable sort keeps insertion order within equal key texts; the last
        # occurrence wins, mirroring host assignment semantics for the only
        # way duplicate canonical keys arise (distinct NaN key objects).
        entries: list[tuple[str, Value]] = []
        for ktext, key in raw:
            if entries and entries[-1][0] == ktext:
                entries[-1] = (ktext, v[key])
            else:
                entries.append((ktext, v[key]))
        out.append("D[")
        for i, (ktext, val) in enumerate(entries):
            if i:
                out.append(",")
            out.append(ktext)
            out.append("=")
            _encode_into(val, out, limits, depth + 1)
        out.append("]")


def sorted_elements(s: set) -> list:
    """Set members in canonical-encoding order.

    The only sanctioned way to iterate a set in deterministic code paths:
    native iteration order depends on string hash randomisation.
    """
    return [e for _, e in sorted((encode(e, _UNBOUNDED), e) for e in s)]


# Internal: encoding used purely as a sort key must not trip user limits.
_UNBOUNDED = Limits(max_depth=64, max_items=1 << 30, max_str=1 << 30)


class _Parser:
    """Recursive-descent parser for canonical text."""

    def __init__(self, text: str, limits: Limits) -> None:
        self.text = text
        self.pos = 0
        self.limits = limits

    def fail(self, message: str) -> ParseError:
        return ParseError(message, self.pos)

    def peek(self) -> str:
        if self.pos >= len(self.text):
            raise self.fail("unexpected end of input")
        return self.text[self.pos]

    def take(self, n: int = 1) -> str:
        if self.pos + n > len(self.text):
            raise self.fail("unexpected end of input")
        chunk = self.text[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def expect(self, ch: str) -> None:
        if self.take() != ch:
            self.pos -= 1
            raise self.fail(f"expected {ch!r}")

    def parse(self) -> Value:
        v = self.value(depth=1)
        if self.pos != len(self.text):
            raise self.fail("trailing data after value")
        return v

    def value(self, depth: int) -> Value:
        if depth > self.limits.max_depth:
            raise DepthExceeded(f"nesting exceeds depth limit {self.limits.max_depth}")
        tag = self.take()
        if tag == "N":
            return None
        if tag == "B":
            self.expect(":")
            bit = self.take()
            if bit == "1":
                return True
            if bit == "0":
                return False
            self.pos -= 1
            raise self.fail("bool payload must be 0 or 1")
        if tag == "I":
            self.expect(":")
            return self._int_payload()
        if tag == "F":
            self.expect(":")
            return self._float_payload()
        if tag == "S":
            self.expect(":")
            return self._str_payload()
        if tag in ("L", "T"):
            items = self._sequence(depth)
            return items if tag == "L" else tuple(items)
        if tag == "E":
            start = self.pos - 1
            items = self._sequence(depth)
            for e in items:
                try:
                    _check_set_element(e)
                except UnencodableValue as exc:
                    raise HashabilityError(str(exc), position=start) from exc
            return set(items)  # duplicates collapse by host semantics
        if tag == "D":
            return self._mapping(depth)
        self.pos -= 1
        raise self.fail(f"unknown node tag {tag!r}")

    def _digits(self) -> str:
        start = self.pos
        if self.pos < len(self.text) and self.text[self.pos] == "-":
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start or self.text[start:self.pos] == "-":
            raise self.fail("expected digits")
        return self.text[start:self.pos]

    def _int_payload(self) -> int:
        return int(self._digits())

    def _float_payload(self) -> float:
        start = self.pos
        stop = {",", "]", "=", ""}
        while self.pos < len(self.text) and self.text[self.pos] not in stop:
            self.pos += 1
        token = self.text[start:self.pos]
        if not token:
            raise self.fail("empty float payload")
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
            raise self.fail(f"bad float payload {token!r}") from None

    def _str_payload(self) -> str:
        length = int(self._digits())
        if length < 0 or length > self.limits.max_str:
            raise self.fail(f"string length {length} outside limits")
        self.expect(":")
        chars: list[str] = []
        for _ in range(length):  # length counts decoded characters
            ch = self.take()
            if ch == "\\":
                esc = self.take()
                if esc == "n":
                    ch = "\n"
                elif esc == "r":
                    ch = "\r"
                elif esc == "\\":
                    ch = "\\"
                else:
                    self.pos -= 1
                    raise self.fail(f"bad string escape \\{esc}")
            chars.append(ch)
        return "".join(chars)

    def _sequence(self, depth: int) -> list:
        self.expect("[")
        items: list = []
        if self.peek() == "]":
            self.take()
            return items
        while True:
            items.append(self.value(depth + 1))
            if len(items) > self.limits.max_items:
                raise self.fail(f"container length exceeds {self.limits.max_items}")
            ch = self.take()
            if ch == "]":
                return items
            if ch != ",":
                self.pos -= 1
                raise self.fail("expected ',' or ']'")

    def _mapping(self, depth: int) -> dict:
        self.expect("[")
        out: dict = {}
        if self.peek() == "]":
            self.take()
            return out
        while True:
            key_start = self.pos
            key = self.value(depth + 1)
            try:
                key_kind = kind_of(key)
            except UnencodableValue:
                key_kind = ""
            if key_kind not in PRIM_KINDS:
                raise HashabilityError(
                    "mapping keys must be primitives", position=key_start
                )
            self.expect("=")
            out[key] = self.value(depth + 1)
            if len(out) > self.limits.max_items:
                raise self.fail(f"container length exceeds {self.limits.max_items}")
            ch = self.take()
            if ch == "]":
                return out
            if ch != ",":
                self.pos -= 1
                raise self.fail("expected ',' or ']'")


def decode(text: str, limits: Limits = DEFAULT_LIMITS) -> Value:
    """Inverse of :func:`encode` up to oracle equivalence."""
    return _Parser(text, limits).parse()


def canonical_hash(v: Value, limits: Limits = DEFAULT_LIMITS) -> str:
    """SHA-256 digest of the canonical encoding; the dedup key."""
    return hashlib.sha256(encode(v, limits).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TypeTag:
    """Recursive type tag mirroring value shape.

    Container element types are unions when heterogeneous; an empty
    container has the pseudo element tag ``empty``.
    """

    kind: str
    params: tuple["TypeTag", ...] = ()

    def render(self) -> str:
        names = {
            "none": "None", "bool": "Bool", "int": "Int", "float": "Float",
            "str": "Str", "empty": "Empty",
        }
        if self.kind in names:
            return names[self.kind]
        if self.kind == "union":
            return "Union[" + ", ".join(p.render() for p in self.params) + "]"
        if self.kind == "dict":
            return f"Dict[{self.params[0].render()}, {self.params[1].render()}]"
        name = self.kind.capitalize()
        return f"{name}[{self.params[0].render()}]"

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.render()


def _union(tags: Sequence[TypeTag]) -> TypeTag:
    uniq = sorted(set(tags), key=lambda t: t.render())
    if not uniq:
        return TypeTag("empty")
    if len(uniq) == 1:
        return uniq[0]
    return TypeTag("union", tuple(uniq))


def type_of(v: Value) -> TypeTag:
    """Deterministic type tag of ``v``; total over grammar values."""
    k = kind_of(v)
    if k in PRIM_KINDS:
        return TypeTag(k)
    if k in ("list", "tuple"):
        return TypeTag(k, (_union([type_of(e) for e in v]),))
    if k == "set":
        return TypeTag(k, (_union([type_of(e) for e in v]),))
    return TypeTag(
        "dict",
        (_union([type_of(key) for key in v]),
         _union([type_of(val) for val in v.values()])),
    )


def _numeric_equivalent(a: float, b: float, atol: float) -> bool:
    a_nan = isinstance(a, float) and math.isnan(a)
    b_nan = isinstance(b, float) and math.isnan(b)
    if a_nan or b_nan:
        # A candidate reproducing the reference NaN should pass.
        return a_nan and b_nan
    a_inf = isinstance(a, float) and math.isinf(a)
    b_inf = isinstance(b, float) and math.isinf(b)
    if a_inf or b_inf:
        return a_inf and b_inf and (a > 0) == (b > 0)
    try:
        return abs(a - b) <= atol
    except OverflowError:
        return False


def equivalent(a: Value, b: Value, atol: float = 0.0) -> bool:
    """Oracle equivalence with absolute numeric tolerance ``atol``.

    Structural deep equality with these rules: bool never equals a number;
    int and float compare cross-kind within ``atol``; NaN equals NaN;
    infinities compare by sign; sets compare by unordered membership;
    mappings by canonical key identity plus per-key value equivalence;
    a tuple is never equivalent to a list.
    """
    if atol < 0:
        raise ValueError("atol must be non-negative")
    ka, kb = kind_of(a), kind_of(b)
    if ka == "bool" or kb == "bool":
        return ka == kb and a == b
    if ka in ("int", "float") and kb in ("int", "float"):
        return _numeric_equivalent(a, b, atol)
    if ka != kb:
        return False
    if ka in ("none", "str"):
        return a == b
    if ka in ("list", "tuple"):
        return len(a) == len(b) and all(
            equivalent(x, y, atol) for x, y in zip(a, b)
        )
    if ka == "set":
        # Unordered membership, both directions.  Fast path: identical
        # canonical element texts.
        if {encode(x, _UNBOUNDED) for x in a} == {encode(y, _UNBOUNDED) for y in b}:
            return True
        bs = list(b)
        return all(any(equivalent(x, y, atol) for y in bs) for x in a) and all(
            any(equivalent(y, x, atol) for x in a) for y in bs
        )
    # dict: canonical key identity, tolerant values; later-wins collapse of
    # duplicate canonical keys mirrors encode()
    a_by_key = {encode(key, _UNBOUNDED): val for key, val in a.items()}
    b_by_key = {encode(key, _UNBOUNDED): val for key, val in b.items()}
    if a_by_key.keys() != b_by_key.keys():
        return False
    return all(
        equivalent(val, b_by_key[ktext], atol) for ktext, val in a_by_key.items()
    )


class TestInput:
    """One argument tuple for a task's entry point."""

    __test__ = False  # domain type, not a pytest class
    __slots__ = ("args", "_canonical")

    def __init__(self, args: Sequence[Value]) -> None:
        self.args = tuple(args)
        self._canonical: str | None = None

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def canonical(self) -> str:
        """Canonical text of the argument tuple (a ``T[...]`` node)."""
        if self._canonical is None:
            inner = ",".join(encode(a) for a in self.args)
            self._canonical = f"T[{inner}]"
        return self._canonical

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical.encode("utf-8")).hexdigest()

    @classmethod
    def from_canonical(cls, text: str, limits: Limits = DEFAULT_LIMITS) -> "TestInput":
        outer = Limits(limits.max_depth + 1, limits.max_items, limits.max_str)
        v = decode(text, outer)
        if type(v) is not tuple:
            raise ParseError("test input must encode a tuple of arguments", 0)
        ti = cls(v)
        return ti

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TestInput) and self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash(self.canonical)

    def __repr__(self) -> str:
        return f"TestInput({self.args!r})"


def dedup_inputs(inputs: Iterator[TestInput]) -> list[TestInput]:
    """Order-preserving dedup by canonical digest."""
    seen: set[str] = set()
    out: list[TestInput] = []
    for ti in inputs:
        d = ti.digest
        if d not in seen:
            seen.add(d)
            out.append(ti)
    return out
