"""Lexical JavaScript scanning: top-level declarations and identifier use.

This is deliberately not a real parser. It blanks string literals and
comments, tracks brace depth, and matches declarations by name. That misses
aliasing and dynamic dispatch, which is acceptable for the callers: the
dead-code transform only ever under-deletes, and the similarity scorer only
needs to know whether a handler name still has a plain definition.
"""

from __future__ import annotations

import re

_FUNC_DECL = re.compile(r"\bfunction\s+([A-Za-z_$][\w$]*)\s*\(")
_TOP_ASSIGN = re.compile(r"(?:^|[;{}\s])(?:var\s+|let\s+|const\s+)?([A-Za-z_$][\w$]*)\s*=[^=]")
_LITERAL = re.compile(
    r"//[^\n]*"
    r"|/\*.*?\*/"
    r"|'(?:\\.|[^'\\\n])*'"
    r'|"(?:\\.|[^"\\\n])*"'
    r"|`(?:\\.|[^`\\])*`",
    re.S,
)


def _blank(match: re.Match) -> str:
    return "".join("\n" if ch == "\n" else " " for ch in match.group(0))


def strip_literals(text: str) -> str:
    """Replace string literals and comments with spaces, preserving length
    so that offsets into the result index the original text."""
    return _LITERAL.sub(_blank, text)


def _match_brace(code: str, open_index: int) -> int:
    """Index of the brace closing code[open_index]; end of text if unbalanced."""
    depth = 0
    for i in range(open_index, len(code)):
        if code[i] == "{":
            depth += 1
        elif code[i] == "}":
            depth -= 1
            if depth == 0:
                return i
    return len(code) - 1


class _DepthCursor:
    """Brace depth at monotonically increasing positions of blanked code."""

    def __init__(self, code: str):
        self.code = code
        self.pos = 0
        self.depth = 0

    def at(self, index: int) -> int:
        if index > self.pos:
            self.depth += self.code.count("{", self.pos, index) - self.code.count(
                "}", self.pos, index
            )
            self.pos = index
        return self.depth


def top_level_function_spans(text: str) -> list[tuple[str, int, int]]:
    """(name, start, end) for each depth-0 ``function name(...) {...}``.

    Offsets index the original text; end is one past the closing brace.
    """
    code = strip_literals(text)
    cursor = _DepthCursor(code)
    spans = []
    for match in _FUNC_DECL.finditer(code):
        if cursor.at(match.start()) != 0:
            continue
        open_brace = code.find("{", match.end() - 1)
        if open_brace == -1:
            continue
        end = _match_brace(code, open_brace)
        spans.append((match.group(1), match.start(), end + 1))
    return spans


def top_level_defined_names(text: str) -> set[str]:
    """Names defined at depth 0 via function declarations or assignment."""
    code = strip_literals(text)
    names = {name for name, _, _ in top_level_function_spans(text)}
    cursor = _DepthCursor(code)
    for match in _TOP_ASSIGN.finditer(code):
        if cursor.at(match.start(1)) == 0:
            names.add(match.group(1))
    return names


def count_references(name: str, text: str) -> int:
    """Word-boundary occurrences of a name in raw text (strings included,
    so a function named inside a string literal still counts as used)."""
    return len(re.findall(rf"(?<![\w$]){re.escape(name)}(?![\w$])", text))
