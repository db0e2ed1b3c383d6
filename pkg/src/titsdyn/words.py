"""Reduced words over generators and their inverses.

A word is a tuple of nonzero ints: k+1 stands for generator k and -(k+1)
for its inverse.  Enumeration is shortlex with letters ordered
a, a^-1, b, b^-1, ...
"""
from __future__ import annotations

from typing import Callable, Iterator, Sequence

Word = tuple


def letters(m: int) -> list[int]:
    out = []
    for k in range(1, m + 1):
        out += [k, -k]
    return out


def free_reduce(word: Sequence[int]) -> Word:
    out: list[int] = []
    for x in word:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def inverse_word(word: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(word))


def reduced_words(m: int, max_len: int) -> Iterator[Word]:
    """All reduced words of length <= max_len in shortlex order (empty word first)."""
    layer: list[Word] = [()]
    yield ()
    alphabet = letters(m)
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for x in alphabet:
                if w and w[-1] == -x:
                    continue
                nxt.append(w + (x,))
        for w in nxt:
            yield w
        layer = nxt


def count_reduced(m: int, length: int) -> int:
    if length == 0:
        return 1
    return 2 * m * (2 * m - 1) ** (length - 1)


def evaluate_layers(m: int, max_len: int, gens: Sequence, inverses: Sequence, mul: Callable,
                    identity) -> Iterator[tuple[Word, object]]:
    """Yield (word, value) for every reduced word, extending parents on the right."""
    yield (), identity
    layer = [((), identity)]
    alphabet = letters(m)
    for _ in range(max_len):
        nxt = []
        for w, val in layer:
            for x in alphabet:
                if w and w[-1] == -x:
                    continue
                g = gens[x - 1] if x > 0 else inverses[-x - 1]
                nxt.append((w + (x,), mul(val, g)))
        yield from nxt
        layer = nxt


def format_word(word: Sequence[int], names: str = "abcdefghijklmnopqrstuvwxyz") -> str:
    if not word:
        return "e"
    return " ".join(names[abs(x) - 1] + ("^-1" if x < 0 else "") for x in word)


def parse_word(text: str, names: str = "abcdefghijklmnopqrstuvwxyz") -> Word:
    text = text.strip()
    if text in ("", "e"):
        return ()
    out = []
    for tok in text.split():
        inv = tok.endswith("^-1")
        base = tok[:-3] if inv else tok
        k = names.index(base) + 1
        out.append(-k if inv else k)
    return tuple(out)
