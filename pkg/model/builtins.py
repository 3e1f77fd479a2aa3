"""
MTL builtin library

Each builtin receives the running frame (for step charging, the clock and the
random source) and its evaluated arguments. Builtins never mutate their
arguments; list operations return new lists.
"""
import calendar
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

from model.values import EvalError, check_int, to_display, type_name, value_eq


CLOCK_VAR = "$clock"
RNG_VAR = "$rng"

DAY_SECONDS = 86400
MONTH_NAMES = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
_PATTERN_TOKENS = ("yyyy", "MMM", "MM", "dd", "d", "HH", "mm", "ss")


@dataclass(frozen=True)
class Builtin:
    name: str
    min_arity: int
    max_arity: int
    fn: object = field(compare=False)
    effects: frozenset = frozenset()

    def accepts(self, count):
        return self.min_arity <= count <= self.max_arity


BUILTINS = {}


def builtin(name, min_arity, max_arity=None, effects=()):
    def register(fn):
        BUILTINS[name] = Builtin(name, min_arity, min_arity if max_arity is None else max_arity, fn,
                                 frozenset(effects))
        return fn
    return register


def _expect(value, *kinds, what="argument"):
    if type_name(value) not in kinds:
        raise EvalError(f"{what} must be {' or '.join(kinds)}, got {type_name(value)}")
    return value


def _index(value, size, name):
    _expect(value, "int", what=f"{name} index")
    if not 0 <= value < size:
        raise EvalError(f"{name} index {value} out of range for length {size}")
    return value


def _sized(frame, value):
    frame.charge(len(value))
    return value


# conversions and numbers

@builtin("len", 1)
def _len(frame, value):
    return len(_expect(value, "str", "list"))


@builtin("str", 1)
def _str(frame, value):
    return to_display(value)


@builtin("int", 1)
def _int(frame, value):
    kind = type_name(value)
    if kind == "int":
        return value
    if kind == "bool":
        return 1 if value else 0
    if kind == "float":
        if not math.isfinite(value):
            raise EvalError("cannot convert non-finite float to int")
        return check_int(int(value))
    if kind == "str":
        if not re.fullmatch(r"[+-]?\d+", value.strip()):
            raise EvalError(f"invalid int literal {value!r}")
        return check_int(int(value.strip()))
    raise EvalError(f"cannot convert {kind} to int")


@builtin("float", 1)
def _float(frame, value):
    kind = type_name(value)
    if kind in ("int", "float"):
        return float(value)
    if kind == "str":
        text = value.strip()
        if text in ("inf", "-inf", "nan") or re.fullmatch(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?", text):
            return float(text)
        raise EvalError(f"invalid float literal {value!r}")
    raise EvalError(f"cannot convert {kind} to float")


@builtin("abs", 1)
def _abs(frame, value):
    _expect(value, "int", "float")
    return check_int(abs(value)) if type(value) is int else abs(value)


def _ordered(a, b):
    kinds = {type_name(a), type_name(b)}
    if not (kinds <= {"int", "float"} or kinds == {"str"}):
        raise EvalError(f"cannot compare {type_name(a)} with {type_name(b)}")


@builtin("min", 2)
def _min(frame, a, b):
    _ordered(a, b)
    return b if b < a else a


@builtin("max", 2)
def _max(frame, a, b):
    _ordered(a, b)
    return b if b > a else a


@builtin("pow", 2)
def _pow(frame, base, exponent):
    _expect(base, "int", "float")
    _expect(exponent, "int", "float")
    if type(base) is int and type(exponent) is int and exponent >= 0:
        if abs(base) > 1 and exponent > 64:
            raise EvalError("integer overflow")
        return check_int(base ** exponent)
    try:
        return math.pow(base, exponent)
    except (OverflowError, ValueError):
        return math.nan


@builtin("sqrt", 1)
def _sqrt(frame, value):
    _expect(value, "int", "float")
    return math.sqrt(value) if value >= 0 else math.nan


def _rounded(value, how):
    _expect(value, "int", "float")
    if type(value) is int:
        return value
    if not math.isfinite(value):
        raise EvalError("cannot round non-finite float")
    return check_int(how(value))


@builtin("floor", 1)
def _floor(frame, value):
    return _rounded(value, math.floor)


@builtin("ceil", 1)
def _ceil(frame, value):
    return _rounded(value, math.ceil)


@builtin("round", 1)
def _round(frame, value):
    return _rounded(value, lambda v: math.floor(v + 0.5))


# strings

@builtin("substr", 3)
def _substr(frame, text, start, end):
    _expect(text, "str")
    _expect(start, "int")
    _expect(end, "int")
    if not 0 <= start <= end <= len(text):
        raise EvalError(f"substr range [{start}, {end}) out of bounds for length {len(text)}")
    return text[start:end]


@builtin("upper", 1)
def _upper(frame, text):
    return _sized(frame, _expect(text, "str").upper())


@builtin("lower", 1)
def _lower(frame, text):
    return _sized(frame, _expect(text, "str").lower())


@builtin("trim", 1)
def _trim(frame, text):
    return _expect(text, "str").strip(" \t\r\n")


@builtin("split", 2)
def _split(frame, text, sep):
    _expect(text, "str")
    if not _expect(sep, "str"):
        raise EvalError("split separator must not be empty")
    parts = text.split(sep)
    frame.charge(len(parts))
    return tuple(parts)


@builtin("join", 2)
def _join(frame, items, sep):
    _expect(items, "list")
    _expect(sep, "str")
    parts = [_expect(item, "str", what="joined item") for item in items]
    frame.charge(sum(map(len, parts)) + len(sep) * max(0, len(parts) - 1))
    return sep.join(parts)


@builtin("contains", 2)
def _contains(frame, haystack, needle):
    _expect(haystack, "str", "list")
    if type(haystack) is str:
        return _expect(needle, "str") in haystack
    return any(value_eq(item, needle) for item in haystack)


@builtin("index_of", 2)
def _index_of(frame, text, sub):
    return _expect(text, "str").find(_expect(sub, "str"))


@builtin("replace", 3)
def _replace(frame, text, old, new):
    _expect(text, "str")
    if not _expect(old, "str"):
        raise EvalError("replace target must not be empty")
    _expect(new, "str")
    frame.charge(len(text) + text.count(old) * max(0, len(new) - len(old)))
    return text.replace(old, new)


@builtin("starts_with", 2)
def _starts_with(frame, text, prefix):
    return _expect(text, "str").startswith(_expect(prefix, "str"))


@builtin("ends_with", 2)
def _ends_with(frame, text, suffix):
    return _expect(text, "str").endswith(_expect(suffix, "str"))


@builtin("reverse", 1)
def _reverse(frame, value):
    _expect(value, "str", "list")
    return value[::-1]


@builtin("repeat", 2)
def _repeat(frame, text, count):
    _expect(text, "str")
    _expect(count, "int")
    if count < 0:
        raise EvalError("repeat count must not be negative")
    frame.charge(count * len(text))
    return text * count


@builtin("char_code", 2)
def _char_code(frame, text, position):
    _expect(text, "str")
    return ord(text[_index(position, len(text), "char")])


@builtin("from_char_code", 1)
def _from_char_code(frame, code):
    _expect(code, "int")
    if not 0 <= code <= 0x10FFFF or 0xD800 <= code <= 0xDFFF:
        raise EvalError(f"invalid character code {code}")
    return chr(code)


@builtin("pad_left", 3)
def _pad_left(frame, text, width, fill):
    _expect(text, "str")
    _expect(width, "int")
    if len(_expect(fill, "str")) != 1:
        raise EvalError("pad character must be a single character")
    frame.charge(max(0, width - len(text)))
    return text.rjust(width, fill)


# lists

@builtin("range", 2)
def _range(frame, start, stop):
    _expect(start, "int")
    _expect(stop, "int")
    frame.charge(max(0, stop - start))
    return tuple(range(start, stop))


@builtin("fill", 2)
def _fill(frame, value, count):
    _expect(count, "int")
    if count < 0:
        raise EvalError("fill count must not be negative")
    frame.charge(count)
    return (value,) * count


@builtin("append", 2)
def _append(frame, items, value):
    return _sized(frame, _expect(items, "list") + (value,))


@builtin("slice", 3)
def _slice(frame, items, start, end):
    _expect(items, "list")
    _expect(start, "int")
    _expect(end, "int")
    if not 0 <= start <= end <= len(items):
        raise EvalError(f"slice range [{start}, {end}) out of bounds for length {len(items)}")
    return items[start:end]


@builtin("sort", 1)
def _sort(frame, items):
    _expect(items, "list")
    kinds = {type_name(item) for item in items}
    if not (kinds <= {"int", "float"} or kinds == {"str"}):
        raise EvalError("sort needs a list of numbers or a list of strings")
    frame.charge(len(items))
    return tuple(sorted(items))


@builtin("sum", 1)
def _sum(frame, items):
    _expect(items, "list")
    total = 0
    for item in items:
        _expect(item, "int", "float", what="summed item")
        total += item
    return check_int(total) if type(total) is int else total


@builtin("set_at", 3)
def _set_at(frame, items, position, value):
    _expect(items, "list")
    position = _index(position, len(items), "list")
    return _sized(frame, items[:position] + (value,) + items[position + 1:])


@builtin("remove_at", 2)
def _remove_at(frame, items, position):
    _expect(items, "list")
    position = _index(position, len(items), "list")
    return items[:position] + items[position + 1:]


@builtin("unpack", 2)
def _unpack(frame, items, count):
    if type(items) is not tuple or type(count) is not int or len(items) != count:
        raise EvalError(f"expected a list of {count} follow-up values")
    return items


# dates: UTC epoch seconds

def _pattern_parts(pattern):
    parts, index = [], 0
    while index < len(pattern):
        token = next((t for t in _PATTERN_TOKENS if pattern.startswith(t, index)), None)
        if token:
            parts.append((True, token))
            index += len(token)
        else:
            parts.append((False, pattern[index]))
            index += 1
    return parts


_FIELD_REGEX = {"yyyy": r"(\d{4})", "MMM": r"([A-Z][a-z]{2})", "MM": r"(\d{2})", "dd": r"(\d{2})",
                "d": r"(\d{1,2})", "HH": r"(\d{2})", "mm": r"(\d{2})", "ss": r"(\d{2})"}


@builtin("parse_date", 2)
def parse_date(frame, text, pattern):
    _expect(text, "str")
    _expect(pattern, "str")
    parts = _pattern_parts(pattern)
    regex = "".join(_FIELD_REGEX[p] if is_field else re.escape(p) for is_field, p in parts)
    match = re.fullmatch(regex, text)
    if not match:
        raise EvalError(f"text {text!r} does not match date pattern {pattern!r}")
    fields = {"yyyy": 1970, "MM": 1, "dd": 1, "HH": 0, "mm": 0, "ss": 0}
    for (is_field, token), group in zip([p for p in parts if p[0]], match.groups()):
        if token == "MMM":
            if group not in MONTH_NAMES:
                raise EvalError(f"unknown month name {group!r}")
            fields["MM"] = MONTH_NAMES.index(group) + 1
        else:
            fields["dd" if token == "d" else token] = int(group)
    try:
        moment = datetime(fields["yyyy"], fields["MM"], fields["dd"], fields["HH"], fields["mm"], fields["ss"])
    except ValueError as exc:
        raise EvalError(f"invalid date {text!r}: {exc}")
    return calendar.timegm(moment.timetuple())


def _moment(timestamp):
    _expect(timestamp, "int", what="timestamp")
    try:
        return datetime.fromtimestamp(timestamp, tz=timezone.utc)
    except (OverflowError, ValueError, OSError):
        raise EvalError(f"timestamp {timestamp} out of range")


@builtin("format_date", 2)
def format_date(frame, timestamp, pattern):
    moment = _moment(timestamp)
    _expect(pattern, "str")
    values = {"yyyy": f"{moment.year:04d}", "MMM": MONTH_NAMES[moment.month - 1], "MM": f"{moment.month:02d}",
              "dd": f"{moment.day:02d}", "d": str(moment.day), "HH": f"{moment.hour:02d}",
              "mm": f"{moment.minute:02d}", "ss": f"{moment.second:02d}"}
    return "".join(values[p] if is_field else p for is_field, p in _pattern_parts(pattern))


@builtin("plus_days", 2)
def _plus_days(frame, timestamp, days):
    _expect(timestamp, "int", what="timestamp")
    _expect(days, "int")
    return check_int(timestamp + days * DAY_SECONDS)


@builtin("plus_seconds", 2)
def _plus_seconds(frame, timestamp, seconds):
    _expect(timestamp, "int", what="timestamp")
    _expect(seconds, "int")
    return check_int(timestamp + seconds)


@builtin("year_of", 1)
def _year_of(frame, timestamp):
    return _moment(timestamp).year


@builtin("month_of", 1)
def _month_of(frame, timestamp):
    return _moment(timestamp).month


@builtin("day_of", 1)
def _day_of(frame, timestamp):
    return _moment(timestamp).day


# effects

@builtin("now_ticks", 0, effects=(CLOCK_VAR,))
def _now_ticks(frame):
    return frame.tick()


@builtin("rand_int", 2, effects=(RNG_VAR,))
def _rand_int(frame, low, high):
    _expect(low, "int")
    _expect(high, "int")
    if low > high:
        raise EvalError("rand_int bounds are reversed")
    return frame.random_int(low, high)


@builtin("type_of", 1)
def _type_of(frame, value):
    return type_name(value)


def effects_of(callee):
    entry = BUILTINS.get(callee)
    return entry.effects if entry else frozenset()
