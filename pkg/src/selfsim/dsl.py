"""Group definitions and the wreath-recursion text format.

A file looks like::

    alphabet = 2
    a = (0 1) [e, a]        # binary odometer

Each generator line gives the level-1 permutation as disjoint cycles and
then one section word per letter.  Words are products of generator names
separated by ``*`` with optional integer exponents (``b^-1``, ``a^3``).

Internally a word is a tuple of nonzero ints: ``k`` stands for generator
``k - 1`` and ``-k`` for its inverse.  The word ``(c1, c2, ..., cm)`` is the
product ``c1 * c2 * ... * cm`` which acts on the tree right to left.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

Word = tuple[int, ...]


class GroupDefinitionError(ValueError):
    """Base class for invalid group definitions."""


class GroupSyntaxError(GroupDefinitionError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class NonPermutation(GroupDefinitionError):
    pass


class ArityMismatch(GroupDefinitionError):
    pass


class UndefinedName(GroupDefinitionError):
    pass


@dataclass(frozen=True)
class Generator:
    name: str
    perm: tuple[int, ...]
    sections: tuple[Word, ...]


@dataclass(frozen=True)
class GroupDef:
    alphabet_size: int
    generators: tuple[Generator, ...]
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {g.name: i for i, g in enumerate(self.generators)})

    @property
    def names(self) -> list[str]:
        return [g.name for g in self.generators]

    @property
    def size(self) -> int:
        return len(self.generators)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UndefinedName(f"unknown generator {name!r}") from None

    def word(self, text: str | Word) -> Word:
        """Parse ``text`` as a word over this group's generators."""
        if isinstance(text, tuple):
            return reduce_word(text)
        return parse_word(text, self._index)

    def format(self, word: Word) -> str:
        return format_word(word, self.names)

    def letter_perm(self, c: int) -> tuple[int, ...]:
        p = self.generators[abs(c) - 1].perm
        if c > 0:
            return p
        inv = [0] * len(p)
        for x, y in enumerate(p):
            inv[y] = x
        return tuple(inv)


# --- words -----------------------------------------------------------------

def reduce_word(word) -> Word:
    """Free reduction."""
    out: list[int] = []
    for c in word:
        if out and out[-1] == -c:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


def inverse_word(word: Word) -> Word:
    return tuple(-c for c in reversed(word))


def format_word(word: Word, names) -> str:
    if not word:
        return "e"
    parts = []
    for c in word:
        name = names[abs(c) - 1]
        parts.append(name if c > 0 else f"{name}^-1")
    return "*".join(parts)


_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def parse_word(text: str, index: dict[str, int]) -> Word:
    """Parse a standalone word such as ``a*c^-1``; whitespace is ignored."""
    tokens = _tokenize(text.replace("\n", " "), 1)
    parser = _Parser(tokens, 1)
    word = parser.word()
    parser.expect_end()
    out = []
    for name, exp, (line, col) in word:
        if name not in index:
            raise UndefinedName(f"line {line}, column {col}: unknown generator {name!r}")
        c = index[name] + 1
        out.extend([c if exp > 0 else -c] * abs(exp))
    return reduce_word(out)


# --- tokenizer / parser ------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[=()\[\],*^-]))")


def _tokenize(line: str, lineno: int) -> list[tuple[str, str, int]]:
    code = line.split("#", 1)[0]
    tokens = []
    pos = 0
    while True:
        while pos < len(code) and code[pos] in " \t\r":
            pos += 1
        if pos >= len(code):
            break
        m = _TOKEN.match(code, pos)
        if m is None:
            raise GroupSyntaxError(f"unexpected character {code[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start + 1))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens, lineno):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def column(self):
        tok = self.peek()
        if tok is not None:
            return tok[2]
        if self.tokens:
            last = self.tokens[-1]
            return last[2] + len(last[1])
        return 1

    def fail(self, message):
        raise GroupSyntaxError(message, self.lineno, self.column())

    def take(self, kind, value=None):
        tok = self.peek()
        if tok is None or tok[0] != kind or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            got = "end of line" if tok is None else repr(tok[1])
            self.fail(f"expected {want!r}, got {got}")
        self.pos += 1
        return tok

    def at(self, kind, value=None):
        tok = self.peek()
        return tok is not None and tok[0] == kind and (value is None or tok[1] == value)

    def expect_end(self):
        if self.peek() is not None:
            self.fail(f"unexpected {self.peek()[1]!r}")

    def cycles(self):
        cycles = []
        while self.at("op", "("):
            self.take("op", "(")
            cyc = [(int(self.take("int")[1]), self.tokens[self.pos - 1][2])]
            while self.at("int"):
                tok = self.take("int")
                cyc.append((int(tok[1]), tok[2]))
            if len(cyc) < 2:
                self.fail("a cycle needs at least two letters")
            self.take("op", ")")
            cycles.append(cyc)
        return cycles

    def word(self):
        if self.at("name", "e"):
            self.take("name")
            return []
        factors = [self.factor()]
        while self.at("op", "*"):
            self.take("op", "*")
            factors.append(self.factor())
        return factors

    def factor(self):
        tok = self.take("name")
        if tok[1] == "e":
            self.pos -= 1
            self.fail("'e' cannot appear inside a product")
        exp = 1
        if self.at("op", "^"):
            self.take("op", "^")
            sign = 1
            if self.at("op", "-"):
                self.take("op", "-")
                sign = -1
            exp = sign * int(self.take("int")[1])
        return tok[1], exp, (self.lineno, tok[2])


def parse_group(text: str) -> GroupDef:
    """Parse and validate a wreath-recursion file."""
    lines = text.splitlines()
    d = None
    raw = []  # (name, cycles, words, lineno, name_col)
    for lineno, line in enumerate(lines, start=1):
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        p = _Parser(tokens, lineno)
        if d is None:
            p.take("name", "alphabet")
            p.take("op", "=")
            d = int(p.take("int")[1])
            p.expect_end()
            if d < 1:
                raise GroupSyntaxError("alphabet size must be positive", lineno, tokens[-1][2])
            continue
        name_tok = p.take("name")
        if name_tok[1] in ("e", "alphabet"):
            raise GroupSyntaxError(f"reserved name {name_tok[1]!r}", lineno, name_tok[2])
        p.take("op", "=")
        cycles = p.cycles()
        p.take("op", "[")
        words = [p.word()]
        while p.at("op", ","):
            p.take("op", ",")
            words.append(p.word())
        p.take("op", "]")
        p.expect_end()
        raw.append((name_tok[1], cycles, words, lineno, name_tok[2]))
    if d is None:
        raise GroupSyntaxError("missing 'alphabet = <int>' header", max(len(lines), 1), 1)

    index = {}
    for name, _, _, lineno, col in raw:
        if name in index:
            raise GroupDefinitionError(f"line {lineno}, column {col}: duplicate generator {name!r}")
        index[name] = len(index)

    gens = []
    for name, cycles, words, lineno, _ in raw:
        perm = _cycles_to_perm(cycles, d, lineno)
        if len(words) != d:
            raise ArityMismatch(f"line {lineno}: generator {name!r} has {len(words)} sections, expected {d}")
        sections = []
        for factors in words:
            w = []
            for fname, exp, (fl, fc) in factors:
                if fname not in index:
                    raise UndefinedName(f"line {fl}, column {fc}: unknown generator {fname!r}")
                c = index[fname] + 1
                w.extend([c if exp > 0 else -c] * abs(exp))
            sections.append(reduce_word(w))
        gens.append(Generator(name, perm, tuple(sections)))
    return GroupDef(d, tuple(gens))


def _cycles_to_perm(cycles, d, lineno) -> tuple[int, ...]:
    perm = list(range(d))
    seen = set()
    for cyc in cycles:
        for letter, col in cyc:
            if letter >= d:
                raise NonPermutation(f"line {lineno}, column {col}: letter {letter} outside alphabet of size {d}")
            if letter in seen:
                raise NonPermutation(f"line {lineno}, column {col}: letter {letter} repeated in cycles")
            seen.add(letter)
        letters = [x for x, _ in cyc]
        for i, x in enumerate(letters):
            perm[x] = letters[(i + 1) % len(letters)]
    return tuple(perm)


def perm_cycles(perm) -> list[tuple[int, ...]]:
    """Nontrivial cycles, each starting at its least letter, sorted."""
    seen = set()
    out = []
    for x in range(len(perm)):
        if x in seen or perm[x] == x:
            continue
        cyc = [x]
        seen.add(x)
        y = perm[x]
        while y != x:
            cyc.append(y)
            seen.add(y)
            y = perm[y]
        out.append(tuple(cyc))
    return out


def print_group(group: GroupDef) -> str:
    lines = [f"alphabet = {group.alphabet_size}"]
    for g in group.generators:
        cyc = "".join("(" + " ".join(map(str, c)) + ")" for c in perm_cycles(g.perm))
        secs = ", ".join(format_word(w, group.names) for w in g.sections)
        lines.append(f"{g.name} = {cyc} [{secs}]" if cyc else f"{g.name} = [{secs}]")
    return "\n".join(lines) + "\n"
