"""Tagged dynamic values and the codecs that map typed Python values onto them.

Every contract state and message crosses the engine as a ``SerializedValue``.
The tag set is closed: unit, bool, int, address, pair, sum and list.  Richer
types (records, enumerations, maps, sets) are built from pairs, sums and lists
by the combinators at the bottom of this module.

JSON text form::

    {"tag": "unit"}
    {"tag": "bool", "value": true}
    {"tag": "int", "value": "-17"}
    {"tag": "address", "value": "2147483648"}
    {"tag": "pair", "fst": <sv>, "snd": <sv>}
    {"tag": "sum", "branch": 0, "value": <sv>}
    {"tag": "list", "items": [<sv>, ...]}

Integers and addresses are written as decimal strings so no JSON reader can
round them through a float.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Generic, Iterable, Sequence, TypeVar

from .core import I128_MAX, I128_MIN, U64_MAX, Address

T = TypeVar("T")
U = TypeVar("U")


class DeserializeError(ValueError):
    """A serialized value does not have the shape the target codec expects."""


class SerializedValue:
    __slots__ = ()


@dataclass(frozen=True)
class SUnit(SerializedValue):
    pass


@dataclass(frozen=True)
class SBool(SerializedValue):
    value: bool

    def __post_init__(self) -> None:
        if not isinstance(self.value, bool):
            raise TypeError("SBool payload must be a bool")


@dataclass(frozen=True)
class SInt(SerializedValue):
    value: int

    def __post_init__(self) -> None:
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise TypeError("SInt payload must be an int")
        if not I128_MIN <= self.value <= I128_MAX:
            raise OverflowError(f"integer outside signed 128-bit range: {self.value}")


@dataclass(frozen=True)
class SAddress(SerializedValue):
    value: Address

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", Address(self.value))


@dataclass(frozen=True)
class SPair(SerializedValue):
    fst: SerializedValue
    snd: SerializedValue


@dataclass(frozen=True)
class SSum(SerializedValue):
    branch: int
    value: SerializedValue

    def __post_init__(self) -> None:
        if self.branch not in (0, 1) or isinstance(self.branch, bool):
            raise ValueError(f"sum branch must be 0 or 1, got {self.branch!r}")


@dataclass(frozen=True)
class SList(SerializedValue):
    items: tuple[SerializedValue, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))


UNIT_VALUE = SUnit()


# -- JSON text form ---------------------------------------------------------


def to_json(sv: SerializedValue) -> dict:
    if isinstance(sv, SUnit):
        return {"tag": "unit"}
    if isinstance(sv, SBool):
        return {"tag": "bool", "value": sv.value}
    if isinstance(sv, SInt):
        return {"tag": "int", "value": str(sv.value)}
    if isinstance(sv, SAddress):
        return {"tag": "address", "value": str(sv.value)}
    if isinstance(sv, SPair):
        return {"tag": "pair", "fst": to_json(sv.fst), "snd": to_json(sv.snd)}
    if isinstance(sv, SSum):
        return {"tag": "sum", "branch": sv.branch, "value": to_json(sv.value)}
    if isinstance(sv, SList):
        return {"tag": "list", "items": [to_json(x) for x in sv.items]}
    raise TypeError(f"not a serialized value: {sv!r}")


_JSON_FIELDS = {
    "unit": set(),
    "bool": {"value"},
    "int": {"value"},
    "address": {"value"},
    "pair": {"fst", "snd"},
    "sum": {"branch", "value"},
    "list": {"items"},
}


def parse_decimal(text: Any, what: str = "integer") -> int:
    """Parse a canonical decimal string (no '+', no leading zeros, no spaces)."""
    if not isinstance(text, str):
        raise ValueError(f"{what} must be a decimal string, got {text!r}")
    body = text[1:] if text.startswith("-") else text
    if not body.isascii() or not body.isdigit() or (len(body) > 1 and body[0] == "0"):
        raise ValueError(f"malformed {what}: {text!r}")
    if text == "-0":
        raise ValueError(f"malformed {what}: {text!r}")
    return int(text)


def from_json(obj: Any) -> SerializedValue:
    if not isinstance(obj, dict) or "tag" not in obj:
        raise ValueError(f"serialized value must be an object with a tag: {obj!r}")
    tag = obj["tag"]
    if tag not in _JSON_FIELDS:
        raise ValueError(f"unknown tag {tag!r}")
    extra = set(obj) - _JSON_FIELDS[tag] - {"tag"}
    missing = _JSON_FIELDS[tag] - set(obj)
    if extra or missing:
        raise ValueError(f"bad fields for {tag}: extra={sorted(extra)} missing={sorted(missing)}")
    if tag == "unit":
        return UNIT_VALUE
    if tag == "bool":
        if not isinstance(obj["value"], bool):
            raise ValueError("bool value must be true or false")
        return SBool(obj["value"])
    if tag == "int":
        return SInt(parse_decimal(obj["value"]))
    if tag == "address":
        value = parse_decimal(obj["value"], "address")
        if not 0 <= value <= U64_MAX:
            raise ValueError(f"address out of range: {value}")
        return SAddress(Address(value))
    if tag == "pair":
        return SPair(from_json(obj["fst"]), from_json(obj["snd"]))
    if tag == "sum":
        branch = obj["branch"]
        if isinstance(branch, bool) or branch not in (0, 1):
            raise ValueError(f"sum branch must be 0 or 1, got {branch!r}")
        return SSum(branch, from_json(obj["value"]))
    if not isinstance(obj["items"], list):
        raise ValueError("list items must be an array")
    return SList(tuple(from_json(x) for x in obj["items"]))


# -- codecs -----------------------------------------------------------------


class Codec(Generic[T]):
    """A total encoder plus a partial decoder for one Python-level type."""

    def __init__(
        self,
        name: str,
        serialize: Callable[[T], SerializedValue],
        deserialize: Callable[[SerializedValue], T],
    ) -> None:
        self.name = name
        self._serialize = serialize
        self._deserialize = deserialize

    def serialize(self, value: T) -> SerializedValue:
        return self._serialize(value)

    def deserialize(self, sv: SerializedValue) -> T:
        return self._deserialize(sv)

    def try_deserialize(self, sv: SerializedValue | None) -> T | None:
        """Decode, or return None when ``sv`` is missing or ill-shaped.

        Only usable for codecs whose values are never None themselves.
        """
        if sv is None:
            return None
        try:
            return self._deserialize(sv)
        except DeserializeError:
            return None

    def __repr__(self) -> str:
        return f"<Codec {self.name}>"


def _expect(sv: SerializedValue, cls: type, what: str) -> Any:
    if not isinstance(sv, cls):
        raise DeserializeError(f"expected {what}, got {type(sv).__name__}")
    return sv


def _ser_unit(v: None) -> SerializedValue:
    if v is not None:
        raise TypeError("unit codec only encodes None")
    return UNIT_VALUE


def _de_unit(sv: SerializedValue) -> None:
    _expect(sv, SUnit, "unit")
    return None


UNIT: Codec[None] = Codec("unit", _ser_unit, _de_unit)
BOOL: Codec[bool] = Codec("bool", SBool, lambda sv: _expect(sv, SBool, "bool").value)
INT: Codec[int] = Codec("int", SInt, lambda sv: _expect(sv, SInt, "int").value)
ADDRESS: Codec[Address] = Codec(
    "address", lambda a: SAddress(Address(a)), lambda sv: _expect(sv, SAddress, "address").value
)


RAW: Codec[SerializedValue] = Codec(
    "raw", lambda sv: _expect(sv, SerializedValue, "serialized value"), lambda sv: sv
)


def nat(codec: Codec[int] = INT) -> Codec[int]:
    """Integers that must be non-negative on the way in."""

    def de(sv: SerializedValue) -> int:
        value = codec.deserialize(sv)
        if value < 0:
            raise DeserializeError(f"expected a non-negative integer, got {value}")
        return value

    def ser(value: int) -> SerializedValue:
        if value < 0:
            raise ValueError(f"negative value for a natural-number codec: {value}")
        return codec.serialize(value)

    return Codec(f"nat<{codec.name}>", ser, de)


def pair(a: Codec[T], b: Codec[U]) -> Codec[tuple[T, U]]:
    def ser(v: tuple[T, U]) -> SerializedValue:
        x, y = v
        return SPair(a.serialize(x), b.serialize(y))

    def de(sv: SerializedValue) -> tuple[T, U]:
        p = _expect(sv, SPair, "pair")
        return (a.deserialize(p.fst), b.deserialize(p.snd))

    return Codec(f"pair<{a.name},{b.name}>", ser, de)


def tuple_of(*codecs: Codec) -> Codec[tuple]:
    """Right-nested pairs: (a, b, c) encodes as Pair(a, Pair(b, c))."""
    if len(codecs) < 2:
        raise ValueError("tuple_of needs at least two components")

    def ser(v: tuple) -> SerializedValue:
        if len(v) != len(codecs):
            raise ValueError(f"expected {len(codecs)}-tuple, got {len(v)}")
        out = codecs[-1].serialize(v[-1])
        for c, x in zip(reversed(codecs[:-1]), reversed(v[:-1])):
            out = SPair(c.serialize(x), out)
        return out

    def de(sv: SerializedValue) -> tuple:
        values = []
        for c in codecs[:-1]:
            p = _expect(sv, SPair, "pair")
            values.append(c.deserialize(p.fst))
            sv = p.snd
        values.append(codecs[-1].deserialize(sv))
        return tuple(values)

    return Codec("tuple<" + ",".join(c.name for c in codecs) + ">", ser, de)


def either(a: Codec[T], b: Codec[U]) -> Codec[tuple[int, Any]]:
    """Binary sums, represented in Python as ``(branch, value)``."""

    def ser(v: tuple[int, Any]) -> SerializedValue:
        branch, x = v
        if branch == 0:
            return SSum(0, a.serialize(x))
        if branch == 1:
            return SSum(1, b.serialize(x))
        raise ValueError(f"sum branch must be 0 or 1, got {branch!r}")

    def de(sv: SerializedValue) -> tuple[int, Any]:
        s = _expect(sv, SSum, "sum")
        return (s.branch, (a if s.branch == 0 else b).deserialize(s.value))

    return Codec(f"either<{a.name},{b.name}>", ser, de)


def option(c: Codec[T]) -> Codec[T | None]:
    """None is branch 0 carrying unit; a present value is branch 1."""

    def ser(v: T | None) -> SerializedValue:
        return SSum(0, UNIT_VALUE) if v is None else SSum(1, c.serialize(v))

    def de(sv: SerializedValue) -> T | None:
        s = _expect(sv, SSum, "sum")
        if s.branch == 0:
            _de_unit(s.value)
            return None
        return c.deserialize(s.value)

    return Codec(f"option<{c.name}>", ser, de)


def list_of(c: Codec[T]) -> Codec[tuple[T, ...]]:
    def ser(v: Iterable[T]) -> SerializedValue:
        return SList(tuple(c.serialize(x) for x in v))

    def de(sv: SerializedValue) -> tuple[T, ...]:
        return tuple(c.deserialize(x) for x in _expect(sv, SList, "list").items)

    return Codec(f"list<{c.name}>", ser, de)


def set_of(c: Codec[T]) -> Codec[frozenset[T]]:
    """Sets encode as strictly ascending lists, so each set has one encoding."""

    def ser(v: Iterable[T]) -> SerializedValue:
        return SList(tuple(c.serialize(x) for x in sorted(v)))

    def de(sv: SerializedValue) -> frozenset[T]:
        items = [c.deserialize(x) for x in _expect(sv, SList, "list").items]
        if any(x >= y for x, y in zip(items, items[1:])):
            raise DeserializeError("set elements must be strictly ascending")
        return frozenset(items)

    return Codec(f"set<{c.name}>", ser, de)


def map_of(k: Codec, v: Codec) -> Codec[dict]:
    """Maps encode as lists of key/value pairs in strictly ascending key order."""
    entry = pair(k, v)

    def ser(m: dict) -> SerializedValue:
        return SList(tuple(entry.serialize(item) for item in sorted(m.items(), key=lambda kv: kv[0])))

    def de(sv: SerializedValue) -> dict:
        items = [entry.deserialize(x) for x in _expect(sv, SList, "list").items]
        keys = [key for key, _ in items]
        if any(x >= y for x, y in zip(keys, keys[1:])):
            raise DeserializeError("map keys must be strictly ascending")
        return dict(items)

    return Codec(f"map<{k.name},{v.name}>", ser, de)


def mapped(c: Codec[T], build: Callable[[T], U], unbuild: Callable[[U], T], name: str) -> Codec[U]:
    """Reuse the encoding of ``c`` for a type with a bijection onto it.

    ``build`` may raise ``ValueError`` to reject decoded values that violate
    the target type's invariants; that surfaces as a ``DeserializeError``.
    """

    def de(sv: SerializedValue) -> U:
        raw = c.deserialize(sv)
        try:
            return build(raw)
        except (ValueError, TypeError) as exc:
            raise DeserializeError(f"{name}: {exc}") from exc

    return Codec(name, lambda v: c.serialize(unbuild(v)), de)


def lazy(thunk: Callable[[], Codec[T]], name: str = "lazy") -> Codec[T]:
    """Defer codec construction, for recursive types."""
    return Codec(name, lambda v: thunk().serialize(v), lambda sv: thunk().deserialize(sv))


def variants(cases: Sequence[tuple[type, Codec]], name: str) -> Codec[Any]:
    """Encode a closed set of classes as nested binary sums.

    Case ``i`` of ``n`` is reached by ``i`` right branches followed by a left
    branch, except the last case, which is ``n - 1`` right branches with no
    final left.  Each class converts to and from its single payload through
    ``value.payload()`` and ``cls.from_payload(payload)``.
    """
    if len(cases) < 2:
        raise ValueError("variants needs at least two cases")
    index = {cls: i for i, (cls, _) in enumerate(cases)}
    last = len(cases) - 1

    def ser(v: Any) -> SerializedValue:
        i = index.get(type(v))
        if i is None:
            raise TypeError(f"{name}: unsupported case {type(v).__name__}")
        out = cases[i][1].serialize(v.payload())
        if i < last:
            out = SSum(0, out)
        for _ in range(i):
            out = SSum(1, out)
        return out

    def de(sv: SerializedValue) -> Any:
        for i in range(last):
            s = _expect(sv, SSum, "sum")
            if s.branch == 0:
                cls, codec = cases[i]
                return cls.from_payload(codec.deserialize(s.value))
            sv = s.value
        cls, codec = cases[last]
        return cls.from_payload(codec.deserialize(sv))

    return Codec(name, ser, de)


def variant_path(i: int, n: int) -> list[int]:
    """Branch indices leading to case ``i`` of an ``n``-case variant encoding."""
    if not 0 <= i < n:
        raise ValueError("case index out of range")
    return [1] * i + ([0] if i < n - 1 else [])


# -- untyped convenience ----------------------------------------------------


def serialize(value: Any) -> SerializedValue:
    """Encode plain Python data by its runtime shape.

    ``None`` is unit, ``bool``/``int``/``Address`` map to their tags, a
    2-tuple is a pair and a list is a list.  Sums and user types have no
    unambiguous runtime shape and need an explicit codec.
    """
    if isinstance(value, SerializedValue):
        return value
    if value is None:
        return UNIT_VALUE
    if isinstance(value, bool):
        return SBool(value)
    if isinstance(value, Address):
        return SAddress(value)
    if isinstance(value, int):
        return SInt(value)
    if isinstance(value, tuple) and len(value) == 2:
        return SPair(serialize(value[0]), serialize(value[1]))
    if isinstance(value, list):
        return SList(tuple(serialize(x) for x in value))
    raise TypeError(f"no implicit encoding for {type(value).__name__}; use a codec")


def deserialize(sv: SerializedValue, codec: Codec[T]) -> T:
    return codec.deserialize(sv)
