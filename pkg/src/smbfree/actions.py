"""Probability-measure-preserving action models with exact measure queries.

Three model families share one interface:

* ``BernoulliModel`` -- the Bernoulli shift on A^{F_r} with product measure.
  Points are lazy partial assignments word -> symbol; the action convention
  is (gamma x)(g) = x(gamma^{-1} g), so the cell of gamma*P containing x is
  read off from x at the coordinates gamma*w, w in the window of P.
* ``ZFactorModel`` -- the group acts through a homomorphism phi: F_r -> Z
  (one integer weight per generator) on the Bernoulli shift over A^Z, with
  (gamma x)(k) = x(k - phi(gamma)).  Translate coordinates collide whenever
  phi does, which exercises the refinement machinery.
* ``FiniteModel`` -- a finite point space with one permutation per generator
  and an invariant probability vector; a zero-entropy test bed.

All models are immutable after construction.  Lazily sampled points cache
every drawn symbol, so re-queries are consistent by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .words import ReducedWord, identity, inverse, multiply


def _check_probs(probs: np.ndarray, what: str) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{what} must be a nonempty vector")
    if np.any(p <= 0):
        raise ValueError(f"{what} entries must be strictly positive")
    if abs(float(p.sum()) - 1.0) > 1e-12:
        raise ValueError(f"{what} sums to {p.sum()}, not 1")
    return p


@dataclass(frozen=True)
class BernoulliModel:
    """Bernoulli shift over the free group: product measure p^{F_r} on A^{F_r}."""

    rank: int
    probs: np.ndarray

    kind = "bernoulli"

    def __post_init__(self):
        object.__setattr__(self, "probs", _check_probs(self.probs, "probability vector"))

    @property
    def alphabet(self) -> int:
        return int(self.probs.size)

    def sample_point(self, rng: np.random.Generator) -> "BernoulliPoint":
        return BernoulliPoint(self, rng)

    def coordinate_keys(self, gamma: ReducedWord, window: Sequence[ReducedWord]) -> tuple:
        """Coordinates gamma*P depends on: the letter tuples of gamma*w."""
        return tuple(multiply(gamma, w).letters for w in window)


class BernoulliPoint:
    """Lazy configuration in A^{F_r}; coordinates keyed by letter tuples."""

    __slots__ = ("model", "_rng", "_symbols")

    def __init__(self, model: BernoulliModel, rng: np.random.Generator):
        self.model = model
        self._rng = rng
        self._symbols: dict[tuple, int] = {}

    @staticmethod
    def _key(coord) -> tuple:
        return coord.letters if isinstance(coord, ReducedWord) else tuple(coord)

    def symbol(self, coord) -> int:
        key = self._key(coord)
        sym = self._symbols.get(key)
        if sym is None:
            sym = int(self._rng.choice(self.model.alphabet, p=self.model.probs))
            self._symbols[key] = sym
        return sym


class _TranslatedBernoulliPoint:
    """View of gamma * x, evaluating (gamma x)(g) = x(gamma^{-1} g)."""

    __slots__ = ("base", "left")

    def __init__(self, base, left: ReducedWord):
        self.base = base
        self.left = left

    @property
    def model(self):
        return self.base.model

    def symbol(self, coord) -> int:
        w = coord if isinstance(coord, ReducedWord) else ReducedWord(self.left.rank, tuple(coord))
        return self.base.symbol(multiply(self.left, w))


@dataclass(frozen=True)
class ZFactorModel:
    """Action through phi: F_r -> Z on the Bernoulli shift over A^Z."""

    rank: int
    weights: tuple[int, ...]
    probs: np.ndarray

    kind = "zfactor"

    def __post_init__(self):
        object.__setattr__(self, "probs", _check_probs(self.probs, "probability vector"))
        if len(self.weights) != self.rank:
            raise ValueError("one integer weight per generator required")
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))

    @property
    def alphabet(self) -> int:
        return int(self.probs.size)

    def phi_letter(self, letter: int) -> int:
        w = self.weights[letter // 2]
        return -w if letter & 1 else w

    def phi(self, gamma: ReducedWord) -> int:
        return sum(self.phi_letter(ell) for ell in gamma.letters)

    def sample_point(self, rng: np.random.Generator) -> "ZFactorPoint":
        return ZFactorPoint(self, rng)

    def coordinate_keys(self, gamma: ReducedWord, window: Sequence[int]) -> tuple:
        """Integer coordinates w + phi(gamma) that gamma*P depends on."""
        off = self.phi(gamma)
        return tuple(int(w) + off for w in window)


class ZFactorPoint:
    """Lazy configuration in A^Z."""

    __slots__ = ("model", "_rng", "_symbols")

    def __init__(self, model: ZFactorModel, rng: np.random.Generator):
        self.model = model
        self._rng = rng
        self._symbols: dict[int, int] = {}

    def symbol(self, coord: int) -> int:
        key = int(coord)
        sym = self._symbols.get(key)
        if sym is None:
            sym = int(self._rng.choice(self.model.alphabet, p=self.model.probs))
            self._symbols[key] = sym
        return sym


class _TranslatedZFactorPoint:
    __slots__ = ("base", "offset")

    def __init__(self, base, offset: int):
        self.base = base
        self.offset = offset

    @property
    def model(self):
        return self.base.model

    def symbol(self, coord: int) -> int:
        # (gamma x)(k) = x(k - phi(gamma))
        return self.base.symbol(int(coord) - self.offset)


@dataclass(frozen=True)
class FiniteModel:
    """Finite permutation action: one permutation per generator letter.

    ``perms`` has one row per generator a_k acting on {0..n-1}; the inverse
    letters act by the inverse permutations.  The probability vector must be
    preserved by every generator permutation.
    """

    rank: int
    probs: np.ndarray
    perms: tuple[np.ndarray, ...]

    kind = "finite"

    def __post_init__(self):
        object.__setattr__(self, "probs", _check_probs(self.probs, "point masses"))
        if len(self.perms) != self.rank:
            raise ValueError("one permutation per generator required")
        n = self.probs.size
        tables = []
        for perm in self.perms:
            a = np.asarray(perm, dtype=np.int64)
            if sorted(a.tolist()) != list(range(n)):
                raise ValueError("generator table is not a permutation of the point space")
            if not np.allclose(self.probs[a], self.probs, rtol=0, atol=1e-15):
                raise ValueError("generator permutation does not preserve the point masses")
            tables.append(a)
        letter_tables = []
        for a in tables:
            inv = np.empty(n, dtype=np.int64)
            inv[a] = np.arange(n)
            letter_tables.extend([a, inv])
        object.__setattr__(self, "perms", tuple(tables))
        object.__setattr__(self, "_letter_tables", tuple(letter_tables))

    @property
    def n_points(self) -> int:
        return int(self.probs.size)

    def letter_table(self, letter: int) -> np.ndarray:
        return self._letter_tables[letter]

    def act_index(self, gamma: ReducedWord, z: int) -> int:
        # act(l1 l2 .. lk, z) applies lk first.
        for ell in reversed(gamma.letters):
            z = int(self.letter_table(ell)[z])
        return z

    def act_table(self, gamma: ReducedWord) -> np.ndarray:
        table = np.arange(self.n_points, dtype=np.int64)
        for ell in reversed(gamma.letters):
            table = self.letter_table(ell)[table]
        return table

    def sample_point(self, rng: np.random.Generator) -> "FinitePoint":
        return FinitePoint(self, int(rng.choice(self.n_points, p=self.probs)))


# FiniteModel keeps derived per-letter tables; declared here so dataclass
# machinery does not treat it as a field.
FiniteModel._letter_tables = ()


@dataclass
class FinitePoint:
    model: FiniteModel
    index: int

    def symbol(self, coord) -> int:  # uniform interface; the "symbol" is the point
        return self.index


def act(model, gamma: ReducedWord, x):
    """Left group action on points: act(g1 g2, x) = act(g1, act(g2, x))."""
    if model.kind == "bernoulli":
        base, left = x, inverse(gamma)
        if isinstance(x, _TranslatedBernoulliPoint):
            base, left = x.base, multiply(x.left, left)
        return _TranslatedBernoulliPoint(base, left)
    if model.kind == "zfactor":
        base, off = x, model.phi(gamma)
        if isinstance(x, _TranslatedZFactorPoint):
            base, off = x.base, x.offset + off
        return _TranslatedZFactorPoint(base, off)
    if model.kind == "finite":
        return FinitePoint(model, model.act_index(gamma, x.index))
    raise TypeError(f"unknown model kind {model.kind!r}")


def coordinate_set(model, gamma: ReducedWord, window) -> tuple:
    """Coordinates that the translated partition gamma*P depends on."""
    if model.kind in ("bernoulli", "zfactor"):
        return model.coordinate_keys(gamma, window)
    return ("finite",)


def sample_point(model, rng: np.random.Generator, needed=()):
    """Fresh lazy point; optionally pre-draws the coordinates in `needed`."""
    x = model.sample_point(rng)
    for coord in needed:
        x.symbol(coord)
    return x
