"""
MTL runtime values

Values are plain Python objects: int (i64 range), float, bool, str, tuple for
lists, and the UNIT singleton. Python's `bool` subclasses `int`, so every type
test here compares `type(value)` exactly.
"""
import math
import struct

from model.printer import print_expr, print_literal
from model.syntax import Call, ListExpr, Literal, LiteralKind, TypeRef


I64_MIN = -(2 ** 63)
I64_MAX = 2 ** 63 - 1


class EvalError(Exception):
    """A runtime error inside MTL code (type mismatch, bounds, arithmetic)."""


class _Unit:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unit"

    def __reduce__(self):
        return (_Unit, ())


UNIT = _Unit()

_TYPE_NAMES = {int: "int", float: "float", bool: "bool", str: "str", tuple: "list", _Unit: "unit"}
KNOWN_TYPES = frozenset({"int", "float", "bool", "str", "list", "unit", "any"})


def type_name(value):
    try:
        return _TYPE_NAMES[type(value)]
    except KeyError:
        raise EvalError(f"not an MTL value: {value!r}")


def check_int(value):
    if not I64_MIN <= value <= I64_MAX:
        raise EvalError("integer overflow")
    return value


def value_eq(a, b):
    """Structural equality; floats compare by bit pattern except NaN never equals."""
    if type(a) is not type(b):
        return False
    if type(a) is float:
        if math.isnan(a) or math.isnan(b):
            return False
        return struct.pack("<d", a) == struct.pack("<d", b)
    if type(a) is tuple:
        return len(a) == len(b) and all(value_eq(x, y) for x, y in zip(a, b))
    return a == b


def matches_type(value, type_ref):
    """Dynamic check of an optional annotation such as `list[int]`."""
    if type_ref is None or type_ref.name == "any":
        return True
    if type_name(value) != type_ref.name:
        return False
    if type_ref.name == "list" and type_ref.arg is not None:
        return all(matches_type(item, type_ref.arg) for item in value)
    return True


def infer_type(value):
    """Best annotation describing a value, used for skeleton parameters."""
    name = type_name(value)
    if name == "list" and value:
        inner = {type_name(item) for item in value}
        if len(inner) == 1:
            return TypeRef("list", infer_type(value[0]))
    return TypeRef(name)


def literalize(value):
    """MTL expression that evaluates back to `value`."""
    kind = type(value)
    if kind is bool:
        return Literal(LiteralKind.BOOL, value)
    if kind is int:
        return Literal(LiteralKind.INT, value)
    if kind is float:
        if math.isnan(value):
            return Call("float", (Literal(LiteralKind.STR, "nan"),))
        if math.isinf(value):
            return Call("float", (Literal(LiteralKind.STR, "inf" if value > 0 else "-inf"),))
        return Literal(LiteralKind.FLOAT, value)
    if kind is str:
        return Literal(LiteralKind.STR, value)
    if kind is tuple:
        return ListExpr(tuple(literalize(item) for item in value))
    if value is UNIT:
        return Literal(LiteralKind.UNIT, None)
    raise EvalError(f"value has no literal form: {value!r}")


def render(value):
    """MTL literal text of a value."""
    return print_expr(literalize(value))


def to_display(value):
    """Text produced by the `str` builtin."""
    kind = type(value)
    if kind is str:
        return value
    if kind is bool:
        return "true" if value else "false"
    if kind is float:
        return print_literal(LiteralKind.FLOAT, value) if math.isfinite(value) else repr(value)
    return render(value)


def to_json(value):
    """JSON-ready form of a value for reports."""
    if type(value) is tuple:
        return [to_json(item) for item in value]
    if value is UNIT:
        return None
    if type(value) is float and not math.isfinite(value):
        return repr(value)
    return value


def bindings_key(bindings, names):
    """Canonical text of a binding set, used for dedup."""
    return "; ".join(f"{name}={render(bindings[name])}" for name in names)
