"""Direct evaluation of the self-similar action on words.

Everything here works on formal words and never touches the canonical
machine, so it doubles as an independent check of :mod:`selfsim.machine`.
"""
from __future__ import annotations

from dataclasses import dataclass

from .dsl import GroupDef, Word, inverse_word, reduce_word


def letter_section(group: GroupDef, c: int, x: int) -> Word:
    """Section of a single generator letter (or its inverse) at letter ``x``."""
    gen = group.generators[abs(c) - 1]
    if c > 0:
        return gen.sections[x]
    # g^{-1}|_x = (g|_{g^{-1}(x)})^{-1}
    y = gen.perm.index(x)
    return inverse_word(gen.sections[y])


def first_level(group: GroupDef, g: Word, x: int) -> tuple[int, Word]:
    """Return ``(g(x), g|_x)`` for a single letter ``x``."""
    pieces = []
    for c in reversed(g):
        pieces.append(letter_section(group, c, x))
        x = group.letter_perm(c)[x]
    out: list[int] = []
    for piece in reversed(pieces):
        out.extend(piece)
    return x, reduce_word(out)


def section(group: GroupDef, g: Word, v) -> Word:
    for x in v:
        _, g = first_level(group, g, x)
    return g


def act(group: GroupDef, g: Word, w) -> tuple[int, ...]:
    out = []
    for x in w:
        y, g = first_level(group, g, x)
        out.append(y)
    return tuple(out)


def multiply(g: Word, h: Word) -> Word:
    return reduce_word(g + h)


def power(g: Word, k: int) -> Word:
    if k < 0:
        return power(inverse_word(g), -k)
    return reduce_word(g * k)


def level_perm(group: GroupDef, g: Word) -> tuple[int, ...]:
    return tuple(first_level(group, g, x)[0] for x in range(group.alphabet_size))


# --- eventually periodic boundary points --------------------------------------

def _primitive_root(v: tuple[int, ...]) -> tuple[int, ...]:
    n = len(v)
    for k in range(1, n + 1):
        if n % k == 0 and v[:k] * (n // k) == v:
            return v[:k]
    return v


@dataclass(frozen=True)
class EpPoint:
    """The boundary point ``prefix + period + period + ...``.

    Always stored with the shortest possible prefix and a primitive period,
    which makes equal points compare (and hash) equal.
    """

    prefix: tuple[int, ...]
    period: tuple[int, ...]

    def __post_init__(self):
        if not self.period:
            raise ValueError("period must be nonempty")
        u = tuple(self.prefix)
        v = _primitive_root(tuple(self.period))
        while u and u[-1] == v[-1]:
            u = u[:-1]
            v = v[-1:] + v[:-1]
        object.__setattr__(self, "prefix", u)
        object.__setattr__(self, "period", v)

    @classmethod
    def parse(cls, text: str) -> "EpPoint":
        """Parse ``"01(10)"`` as ``01 (10)^omega``."""
        head, _, rest = text.partition("(")
        if not rest.endswith(")"):
            raise ValueError(f"bad boundary point {text!r}")
        return cls(tuple(int(c) for c in head), tuple(int(c) for c in rest[:-1]))

    def truncate(self, k: int) -> tuple[int, ...]:
        out = list(self.prefix[:k])
        while len(out) < k:
            out.extend(self.period)
        return tuple(out[:k])

    def tail(self) -> "EpPoint":
        if self.prefix:
            return EpPoint(self.prefix[1:], self.period)
        return EpPoint((), self.period[1:] + self.period[:1])

    def prepend(self, x: int) -> "EpPoint":
        return EpPoint((x,) + self.prefix, self.period)

    def __str__(self) -> str:
        return "".join(map(str, self.prefix)) + "(" + "".join(map(str, self.period)) + ")"
