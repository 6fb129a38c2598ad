"""Exact arithmetic in the rank-r free group over its symmetric alphabet.

Letters are integers in ``[0, 2r)``; the pair ``2k, 2k+1`` is a mutually
inverse generator pair, so taking inverses is a single XOR.  Words are kept
freely reduced at all times, which makes equality of group elements plain
tuple equality and word length equal to the distance from the identity in
the word metric.

Human-readable names appear only at the text boundary: ``a..z`` are
generators, ``A..Z`` their inverses, the empty string is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


def inverse_letter(letter: int) -> int:
    """Inverse of a single letter (2k <-> 2k+1)."""
    return letter ^ 1


def check_letters(letters: Iterable[int], rank: int) -> None:
    """Raise ValueError if any letter index is outside [0, 2*rank)."""
    for ell in letters:
        if not 0 <= ell < 2 * rank:
            raise ValueError(f"letter index {ell} out of range for rank {rank}")


@dataclass(frozen=True, slots=True)
class ReducedWord:
    """A freely reduced word; the canonical form of a free-group element.

    The constructor trusts its input.  Use :func:`reduce` (or ``parse_word``)
    when the letter sequence may contain cancellations; every public
    operation in this module returns reduced words.
    """

    rank: int
    letters: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "ReducedWord") -> "ReducedWord":
        return multiply(self, other)

    def __str__(self) -> str:
        return word_str(self)

    def is_reduced(self) -> bool:
        ell = self.letters
        return all(ell[i + 1] != ell[i] ^ 1 for i in range(len(ell) - 1))

    def prefix(self, n: int) -> "ReducedWord":
        return ReducedWord(self.rank, self.letters[:n])


def identity(rank: int) -> ReducedWord:
    return ReducedWord(rank, ())


def reduce_letters(raw: Sequence[int]) -> tuple[int, ...]:
    """Stack-based free reduction of a letter sequence."""
    out: list[int] = []
    for ell in raw:
        if out and out[-1] == ell ^ 1:
            out.pop()
        else:
            out.append(ell)
    return tuple(out)


def reduce(raw: Sequence[int], rank: int) -> ReducedWord:
    """Freely reduce a raw letter sequence into a ReducedWord.

    Idempotent: reducing an already reduced sequence returns it unchanged.
    """
    check_letters(raw, rank)
    return ReducedWord(rank, reduce_letters(raw))


def multiply(u: ReducedWord, v: ReducedWord) -> ReducedWord:
    """Freely reduced product u*v.

    Only the junction can cancel, so this runs in O(cancelled + copied).
    """
    if u.rank != v.rank:
        raise ValueError(f"rank mismatch: {u.rank} != {v.rank}")
    a, b = u.letters, v.letters
    i, j = len(a), 0
    nb = len(b)
    while i > 0 and j < nb and a[i - 1] == b[j] ^ 1:
        i -= 1
        j += 1
    return ReducedWord(u.rank, a[:i] + b[j:])


def inverse(w: ReducedWord) -> ReducedWord:
    return ReducedWord(w.rank, tuple(ell ^ 1 for ell in reversed(w.letters)))


def word_length(w: ReducedWord) -> int:
    """Distance from the identity in the word metric."""
    return len(w.letters)


def distance(u: ReducedWord, v: ReducedWord) -> int:
    """Left-invariant word metric d(u, v) = |u^-1 v|."""
    return word_length(multiply(inverse(u), v))


# --- text format: lowercase = generator, uppercase = inverse, "" = identity


def letter_str(letter: int) -> str:
    k, odd = divmod(letter, 2)
    if k >= 26:
        raise ValueError("text format supports rank <= 26")
    ch = chr(ord("a") + k)
    return ch.upper() if odd else ch


def word_str(w: ReducedWord) -> str:
    return "".join(letter_str(ell) for ell in w.letters)


def parse_letter(ch: str, rank: int) -> int:
    if len(ch) != 1 or not ch.isalpha():
        raise ValueError(f"invalid letter {ch!r}")
    k = ord(ch.lower()) - ord("a")
    letter = 2 * k + (1 if ch.isupper() else 0)
    if letter >= 2 * rank:
        raise ValueError(f"letter {ch!r} out of range for rank {rank}")
    return letter


def parse_word(text: str, rank: int) -> ReducedWord:
    """Parse the textual word format; the result is freely reduced."""
    return reduce([parse_letter(ch, rank) for ch in text], rank)


def reduced_words_of_length(rank: int, length: int) -> Iterator[tuple[int, ...]]:
    """Yield the letter tuples of all reduced words of exactly `length`.

    There are 2r * (2r-1)^(length-1) of them for length >= 1.
    """
    if length == 0:
        yield ()
        return
    alphabet = range(2 * rank)

    def extend(prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if len(prefix) == length:
            yield prefix
            return
        for ell in alphabet:
            if prefix and ell == prefix[-1] ^ 1:
                continue
            yield from extend(prefix + (ell,))

    yield from extend(())


def sphere_size(rank: int, n: int) -> int:
    if n == 0:
        return 1
    return 2 * rank * (2 * rank - 1) ** (n - 1)
