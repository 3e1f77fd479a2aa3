""" Tokenizer for MTL source text """
import re
import string

from model.errors import LexError
from model.syntax import KEYWORDS, PUNCTUATION, Token, TokenKind


_NUMBER = re.compile(r"\d+(\.\d+([eE][+-]?\d+)?)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ANNOTATION = re.compile(r"#\[[A-Za-z_][A-Za-z0-9_]*\]")
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}


def tokenize(source):
    """Split MTL source into tokens.

    Token texts are the exact source slices (string literals keep their quotes
    and escapes); whitespace and `//` comments are dropped.

    Args:
        source: MTL program text.

    Returns:
        list of Token with 1-based (line, column) spans.
    """
    tokens = []
    pos, line, col = 0, 1, 1
    size = len(source)

    while pos < size:
        char = source[pos]
        if char == "\n":
            pos, line, col = pos + 1, line + 1, 1
            continue
        if char in " \t\r":
            pos, col = pos + 1, col + 1
            continue
        if source.startswith("//", pos):
            end = source.find("\n", pos)
            end = size if end < 0 else end
            col += end - pos
            pos = end
            continue

        span = (line, col)
        if char == '"':
            end = _scan_string(source, pos, span)
            kind, text = TokenKind.STR_LIT, source[pos:end]
            decode_string(text, span)
        elif char == "#":
            match = _ANNOTATION.match(source, pos)
            if not match:
                raise LexError("malformed annotation", span)
            kind, text = TokenKind.ANNOTATION, match.group()
        elif char in string.digits:
            text = _NUMBER.match(source, pos).group()
            kind = TokenKind.FLOAT_LIT if "." in text else TokenKind.INT_LIT
        elif char in string.ascii_letters or char == "_":
            text = _IDENT.match(source, pos).group()
            if text in ("true", "false"):
                kind = TokenKind.BOOL_LIT
            elif text in KEYWORDS:
                kind = TokenKind.KEYWORD
            else:
                kind = TokenKind.IDENT
        else:
            text = next((p for p in PUNCTUATION if source.startswith(p, pos)), None)
            if text is None:
                raise LexError(f"illegal character {char!r}", span)
            kind = TokenKind.PUNCT

        tokens.append(Token(kind, text, span))
        pos += len(text)
        col += len(text)

    return tokens


def _scan_string(source, start, span):
    pos = start + 1
    while pos < len(source):
        char = source[pos]
        if char == '"':
            return pos + 1
        if char == "\n":
            break
        pos += 2 if char == "\\" else 1
    raise LexError("unterminated string literal", span)


def decode_string(text, span=(1, 1)):
    """Turn a STR_LIT token text (quotes included) into its value."""
    body = text[1:-1]
    out = []
    index = 0
    while index < len(body):
        char = body[index]
        if char != "\\":
            out.append(char)
            index += 1
            continue
        marker = body[index + 1] if index + 1 < len(body) else ""
        if marker in _ESCAPES:
            out.append(_ESCAPES[marker])
            index += 2
        elif marker == "u" and body.startswith("{", index + 2):
            close = body.find("}", index + 3)
            digits = body[index + 3:close] if close > 0 else ""
            if not digits or not all(c in "0123456789abcdefABCDEF" for c in digits):
                raise LexError("bad unicode escape", span)
            out.append(chr(int(digits, 16)))
            index = close + 1
        else:
            raise LexError(f"unknown escape \\{marker}", span)
    return "".join(out)


def encode_string(value):
    """Quote a string value using MTL escapes."""
    out = ['"']
    for char in value:
        if char == '"':
            out.append('\\"')
        elif char == "\\":
            out.append("\\\\")
        elif char == "\n":
            out.append("\\n")
        elif char == "\t":
            out.append("\\t")
        elif char == "\r":
            out.append("\\r")
        elif ord(char) < 0x20 or ord(char) == 0x7F:
            out.append(f"\\u{{{ord(char):x}}}")
        else:
            out.append(char)
    out.append('"')
    return "".join(out)
