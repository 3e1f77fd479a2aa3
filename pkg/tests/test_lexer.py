""" Tokenizer: kinds, spans, literals and lexical errors """
import pytest

from model.errors import LexError
from model.lexer import decode_string, encode_string, tokenize
from model.syntax import TokenKind


def _kinds(source):
    return [token.kind for token in tokenize(source)]


def _texts(source):
    return [token.text for token in tokenize(source)]


def test_let_statement_tokens():
    assert _kinds("let x = 1;") == [TokenKind.KEYWORD, TokenKind.IDENT, TokenKind.PUNCT, TokenKind.INT_LIT,
                                    TokenKind.PUNCT]


def test_spans_are_one_based_lines_and_columns():
    tokens = tokenize("fn\n  f")
    assert tokens[0].span == (1, 1)
    assert tokens[1].span == (2, 3)


def test_comments_and_whitespace_are_dropped():
    tokens = tokenize("// leading comment\nx // trailing")
    assert [t.text for t in tokens] == ["x"]
    assert tokens[0].span == (2, 1)


def test_longest_punctuation_wins():
    assert _texts("a<=b->c==d&&e") == ["a", "<=", "b", "->", "c", "==", "d", "&&", "e"]


class TestNumbers:
    def test_float_needs_a_dot(self):
        assert _kinds("2.5") == [TokenKind.FLOAT_LIT]
        assert _kinds("2.5e3") == [TokenKind.FLOAT_LIT]

    def test_bare_exponent_is_an_int_then_a_name(self):
        assert _texts("1e3") == ["1", "e3"]
        assert _kinds("1e3") == [TokenKind.INT_LIT, TokenKind.IDENT]

    def test_trailing_dot_is_punctuation(self):
        assert _kinds("1.") == [TokenKind.INT_LIT, TokenKind.PUNCT]


def test_keywords_and_bool_literals():
    assert _kinds("unit true false return fn_0") == [
        TokenKind.KEYWORD, TokenKind.BOOL_LIT, TokenKind.BOOL_LIT, TokenKind.KEYWORD, TokenKind.IDENT]


def test_annotation_token_keeps_brackets():
    tokens = tokenize("#[source] let")
    assert tokens[0].kind is TokenKind.ANNOTATION
    assert tokens[0].text == "#[source]"


@pytest.mark.parametrize("source", ["#source", "@", '"open', '"bad \\q escape"', '"\\u{zz}"'])
def test_lexical_errors(source):
    with pytest.raises(LexError):
        tokenize(source)


@pytest.mark.parametrize("source,char,span", [
    ("let é = 1;", "é", (1, 5)),
    ("let x = ²;", "²", (1, 9)),
    ("let x = ٣;", "٣", (1, 9)),
    ("let naïve = 1;", "ï", (1, 7)),
])
def test_non_ascii_outside_strings_is_illegal(source, char, span):
    with pytest.raises(LexError, match=f"illegal character '{char}'") as info:
        tokenize(source)
    assert info.value.span == span


def test_non_ascii_inside_strings_is_fine():
    assert _kinds('let s = "é²";') == [TokenKind.KEYWORD, TokenKind.IDENT, TokenKind.PUNCT, TokenKind.STR_LIT,
                                       TokenKind.PUNCT]


def test_error_reports_position():
    with pytest.raises(LexError) as info:
        tokenize("let a = 1;\n  $")
    assert info.value.span == (2, 3)
    assert "line 2, column 3" in str(info.value)


def test_raw_newline_ends_a_string():
    with pytest.raises(LexError):
        tokenize('"line\nbreak"')


def test_decode_escapes():
    assert decode_string('"a\\tb\\n\\"q\\""') == 'a\tb\n"q"'
    assert decode_string('"caf\\u{e9}"') == "café"


@pytest.mark.parametrize("value", ["", "plain", 'quote " and \\ slash', "tab\tnewline\n", "bell\u0007", "é"])
def test_encode_decodes_back(value):
    assert decode_string(encode_string(value)) == value
