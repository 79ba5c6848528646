"""Message schema parsing and the compact binary / JSON value codecs.

Schemas live in plain text files, one ``<type> <field_name>`` line per field
(``#`` starts a comment, ``<type>[] <name>`` declares an array field). The
binary encoding is positional and tagless: both sides know the schema, so the
wire carries only little-endian field data. The JSON encoding exists to make
the binary-vs-text overhead measurable.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass


class SchemaError(Exception):
    """Base class for schema parsing errors."""


class SchemaSyntaxError(SchemaError):
    def __init__(self, line: int, detail: str):
        super().__init__(f"line {line}: {detail}")
        self.line = line


class DuplicateFieldError(SchemaError):
    def __init__(self, name: str):
        super().__init__(f"duplicate field {name!r}")
        self.name = name


class UnknownTypeError(SchemaError):
    def __init__(self, token: str):
        super().__init__(f"unknown type {token!r}")
        self.token = token


class TypeMismatchError(ValueError):
    def __init__(self, field: str, detail: str = ""):
        super().__init__(f"field {field!r}: {detail}" if detail else f"field {field!r}")
        self.field = field


class TruncatedError(ValueError):
    def __init__(self, offset: int):
        super().__init__(f"data truncated at offset {offset}")
        self.offset = offset


class TrailingBytesError(ValueError):
    def __init__(self, count: int):
        super().__init__(f"{count} trailing byte(s) after last field")
        self.count = count


# struct format per scalar type; all little-endian, fixed width.
_SCALAR_FMT = {
    "bool": "<B",
    "int8": "<b",
    "int16": "<h",
    "int32": "<i",
    "int64": "<q",
    "uint8": "<B",
    "uint16": "<H",
    "uint32": "<I",
    "uint64": "<Q",
    "float32": "<f",
    "float64": "<d",
}

SCALAR_TYPES = tuple(_SCALAR_FMT) + ("string",)

_INT_TYPES = frozenset(t for t in _SCALAR_FMT if t.startswith(("int", "uint")))
_FLOAT_TYPES = frozenset(("float32", "float64"))


@dataclass(frozen=True)
class FieldType:
    """A scalar type name, or ``array`` with a scalar element type."""

    base: str
    element: str | None = None

    @property
    def is_array(self) -> bool:
        return self.base == "array"

    def __str__(self) -> str:
        return f"{self.element}[]" if self.is_array else self.base


@dataclass(frozen=True)
class MessageSchema:
    name: str
    schema_id: int
    fields: tuple[tuple[str, FieldType], ...]


@dataclass(frozen=True)
class MessageValue:
    schema_id: int
    values: tuple


def message_value(schema_id: int, values) -> MessageValue:
    """Build a MessageValue, normalizing arrays to tuples so equality works."""
    return MessageValue(schema_id, tuple(
        tuple(v) if isinstance(v, (list, tuple)) else v for v in values
    ))


def parse_field_type(token: str) -> FieldType:
    if token.endswith("[]"):
        element = token[:-2]
        if element not in SCALAR_TYPES:
            raise UnknownTypeError(token)
        return FieldType("array", element)
    if token not in SCALAR_TYPES:
        raise UnknownTypeError(token)
    return FieldType(token)


def parse_schema(text: str, schema_id: int, name: str = "message") -> MessageSchema:
    """Parse schema text into a MessageSchema; field order follows the file."""
    fields: list[tuple[str, FieldType]] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SchemaSyntaxError(lineno, f"expected '<type> <name>', got {raw.strip()!r}")
        type_token, field_name = parts
        if not field_name.isidentifier():
            raise SchemaSyntaxError(lineno, f"invalid field name {field_name!r}")
        ftype = parse_field_type(type_token)
        if field_name in seen:
            raise DuplicateFieldError(field_name)
        seen.add(field_name)
        fields.append((field_name, ftype))
    return MessageSchema(name=name, schema_id=schema_id, fields=tuple(fields))


def _encode_scalar(out: bytearray, fname: str, stype: str, v) -> None:
    if stype == "bool":
        if not isinstance(v, bool):
            raise TypeMismatchError(fname, f"expected bool, got {type(v).__name__}")
        out.append(1 if v else 0)
    elif stype == "string":
        if not isinstance(v, str):
            raise TypeMismatchError(fname, f"expected str, got {type(v).__name__}")
        raw = v.encode("utf-8")
        out += struct.pack("<I", len(raw))
        out += raw
    elif stype in _INT_TYPES:
        if isinstance(v, bool) or not isinstance(v, int):
            raise TypeMismatchError(fname, f"expected int, got {type(v).__name__}")
        try:
            out += struct.pack(_SCALAR_FMT[stype], v)
        except struct.error:
            raise TypeMismatchError(fname, f"{v} out of range for {stype}") from None
    else:  # float32 / float64
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise TypeMismatchError(fname, f"expected float, got {type(v).__name__}")
        out += struct.pack(_SCALAR_FMT[stype], float(v))


def encode_binary(schema: MessageSchema, value: MessageValue) -> bytes:
    """Encode positionally: fixed-width little-endian scalars, length-prefixed
    strings and arrays. Output length equals binary_size(schema, value)."""
    if value.schema_id != schema.schema_id:
        raise TypeMismatchError("schema_id", f"{value.schema_id} != {schema.schema_id}")
    if len(value.values) != len(schema.fields):
        raise TypeMismatchError("<arity>", f"{len(value.values)} values for {len(schema.fields)} fields")
    out = bytearray()
    for (fname, ftype), v in zip(schema.fields, value.values):
        if ftype.is_array:
            if not isinstance(v, (list, tuple)):
                raise TypeMismatchError(fname, f"expected array, got {type(v).__name__}")
            out += struct.pack("<I", len(v))
            for item in v:
                _encode_scalar(out, fname, ftype.element, item)
        else:
            _encode_scalar(out, fname, ftype.base, v)
    return bytes(out)


def _decode_scalar(data: bytes, offset: int, stype: str, field_start: int):
    if stype == "string":
        if offset + 4 > len(data):
            raise TruncatedError(field_start)
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        if offset + length > len(data):
            raise TruncatedError(field_start)
        return data[offset:offset + length].decode("utf-8"), offset + length
    fmt = _SCALAR_FMT[stype]
    width = struct.calcsize(fmt)
    if offset + width > len(data):
        raise TruncatedError(field_start)
    (v,) = struct.unpack_from(fmt, data, offset)
    if stype == "bool":
        v = bool(v)
    return v, offset + width


def decode_binary(schema: MessageSchema, data: bytes) -> MessageValue:
    """Inverse of encode_binary; consumes exactly all bytes."""
    values = []
    offset = 0
    for fname, ftype in schema.fields:
        field_start = offset
        if ftype.is_array:
            if offset + 4 > len(data):
                raise TruncatedError(field_start)
            (count,) = struct.unpack_from("<I", data, offset)
            offset += 4
            items = []
            for _ in range(count):
                item, offset = _decode_scalar(data, offset, ftype.element, field_start)
                items.append(item)
            values.append(tuple(items))
        else:
            v, offset = _decode_scalar(data, offset, ftype.base, field_start)
            values.append(v)
    if offset != len(data):
        raise TrailingBytesError(len(data) - offset)
    return MessageValue(schema.schema_id, tuple(values))


def binary_size(schema: MessageSchema, value: MessageValue) -> int:
    """Analytic encoded size: sums field widths without encoding anything."""
    fixed = {t: struct.calcsize(f) for t, f in _SCALAR_FMT.items()}

    def scalar_size(stype: str, v) -> int:
        if stype == "string":
            return 4 + len(v.encode("utf-8"))
        return fixed[stype]

    total = 0
    for (fname, ftype), v in zip(schema.fields, value.values):
        if ftype.is_array:
            total += 4 + sum(scalar_size(ftype.element, item) for item in v)
        else:
            total += scalar_size(ftype.base, v)
    return total


def _json_value(fname: str, stype: str, v):
    if stype == "bool":
        if not isinstance(v, bool):
            raise TypeMismatchError(fname, f"expected bool, got {type(v).__name__}")
        return v
    if stype == "string":
        if not isinstance(v, str):
            raise TypeMismatchError(fname, f"expected str, got {type(v).__name__}")
        return v
    if stype in _INT_TYPES:
        if isinstance(v, bool) or not isinstance(v, int):
            raise TypeMismatchError(fname, f"expected int, got {type(v).__name__}")
        return v
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeMismatchError(fname, f"expected float, got {type(v).__name__}")
    return float(v)


def encode_json(schema: MessageSchema, value: MessageValue) -> str:
    """Single-line JSON object, keys in schema order, no whitespace.

    Floats render as Python's shortest round-trip decimal (repr), which keeps
    the output deterministic."""
    if len(value.values) != len(schema.fields):
        raise TypeMismatchError("<arity>", f"{len(value.values)} values for {len(schema.fields)} fields")
    obj = {}
    for (fname, ftype), v in zip(schema.fields, value.values):
        if ftype.is_array:
            if not isinstance(v, (list, tuple)):
                raise TypeMismatchError(fname, f"expected array, got {type(v).__name__}")
            obj[fname] = [_json_value(fname, ftype.element, item) for item in v]
        else:
            obj[fname] = _json_value(fname, ftype.base, v)
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


class SchemaRegistry:
    """Schemas keyed by schema_id; ids are unique within one registry."""

    def __init__(self):
        self._by_id: dict[int, MessageSchema] = {}

    def register(self, schema: MessageSchema) -> MessageSchema:
        if schema.schema_id in self._by_id:
            raise ValueError(f"schema_id {schema.schema_id} already registered")
        self._by_id[schema.schema_id] = schema
        return schema

    def get(self, schema_id: int) -> MessageSchema:
        try:
            return self._by_id[schema_id]
        except KeyError:
            raise KeyError(f"no schema registered for id {schema_id}") from None

    def __contains__(self, schema_id: int) -> bool:
        return schema_id in self._by_id

    def schemas(self) -> list[MessageSchema]:
        return list(self._by_id.values())
