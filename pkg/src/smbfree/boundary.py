"""Boundary rays, geodesic segment sets, shifts and group-valued cocycles.

A boundary ray of the rank-r free group is an infinite reduced letter
sequence; under the uniform-subdivision Markov measure the first letter is
uniform over the 2r generators and every subsequent letter is uniform over
the 2r-1 non-backtracking choices.  Finite prefixes of rays, two-sided
windows of bi-infinite reduced words, and random-walk trajectories all
expose the same cocycle interface ``alpha(S^k y, S^l y)``, from which the
segment sets F_n(y) used to refine partitions are derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .words import ReducedWord, identity, inverse, multiply

__all__ = [
    "RayPrefix",
    "GeodesicSets",
    "TwoSidedWindow",
    "RwTrajectory",
    "StepDistribution",
    "sample_ray",
    "ray_cylinder_prob",
    "segment_sets",
    "sample_window",
    "shift_ray",
    "geodesic_cocycle",
    "alpha_shifts",
    "inverse_segment_sets",
    "sample_rw_trajectory",
    "rw_alpha",
    "rw_segment_sets",
]


@dataclass(frozen=True, slots=True)
class RayPrefix:
    """Initial segment xi_0 .. xi_{n-1} of a boundary ray (a reduced word)."""

    rank: int
    letters: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.letters)

    def prefix_word(self, n: int) -> ReducedWord:
        return ReducedWord(self.rank, self.letters[:n])


@dataclass(frozen=True, slots=True)
class GeodesicSets:
    """The segment set F_n(xi) = {e, xi_0, xi_0 xi_1, ...} as an ordered list."""

    prefixes: tuple[ReducedWord, ...]

    def __len__(self) -> int:
        return len(self.prefixes)

    def __iter__(self):
        return iter(self.prefixes)


def _sample_reduced_letters(rank: int, length: int, rng: np.random.Generator,
                            prev: int | None = None) -> tuple[int, ...]:
    """Non-backtracking uniform letters, optionally continuing after `prev`."""
    out: list[int] = []
    n_letters = 2 * rank
    for _ in range(length):
        if prev is None:
            ell = int(rng.integers(n_letters))
        else:
            draw = int(rng.integers(n_letters - 1))
            forbidden = prev ^ 1
            ell = draw if draw < forbidden else draw + 1
        out.append(ell)
        prev = ell
    return tuple(out)


def sample_ray(rank: int, length: int, rng: np.random.Generator) -> RayPrefix:
    """Sample a length-n ray prefix from the uniform-subdivision measure."""
    if length < 0:
        raise ValueError("ray length must be >= 0")
    return RayPrefix(rank, _sample_reduced_letters(rank, length, rng))


def ray_cylinder_prob(rank: int, letters: tuple[int, ...] | list[int]) -> float:
    """Exact measure of the cylinder {xi starts with these letters}."""
    n = len(letters)
    if n == 0:
        return 1.0
    return 1.0 / (2 * rank * (2 * rank - 1) ** (n - 1))


def segment_sets(xi: RayPrefix, n: int) -> GeodesicSets:
    """The n+1 geodesic prefixes {e, xi_0, ..., xi_0..xi_{n-1}}, in order."""
    if n > len(xi):
        raise ValueError(f"segment horizon {n} exceeds ray prefix length {len(xi)}")
    return GeodesicSets(tuple(xi.prefix_word(j) for j in range(n + 1)))


@dataclass(frozen=True, slots=True)
class TwoSidedWindow:
    """A finite window of a bi-infinite reduced word, covering indices lo..hi.

    ``letters[i - lo]`` is the letter at absolute index i.  The forward
    shift S acts by (S xi)(i) = xi(i+1), i.e. it moves the window frame.
    """

    rank: int
    lo: int
    letters: tuple[int, ...]

    @property
    def hi(self) -> int:
        return self.lo + len(self.letters) - 1

    def letter(self, i: int) -> int:
        if not self.lo <= i <= self.hi:
            raise ValueError(f"index {i} outside window [{self.lo}, {self.hi}]")
        return self.letters[i - self.lo]

    def is_reduced(self) -> bool:
        ell = self.letters
        return all(ell[i + 1] != ell[i] ^ 1 for i in range(len(ell) - 1))


def sample_window(rank: int, lo: int, hi: int, rng: np.random.Generator) -> TwoSidedWindow:
    """Sample a window of a bi-infinite reduced word (stationary Markov law)."""
    if hi < lo:
        raise ValueError("empty window")
    return TwoSidedWindow(rank, lo, _sample_reduced_letters(rank, hi - lo + 1, rng))


def shift_ray(window: TwoSidedWindow, k: int = 1) -> TwoSidedWindow:
    """Apply the forward shift k times: (S^k xi)(i) = xi(i + k)."""
    return TwoSidedWindow(window.rank, window.lo - k, window.letters)


def alpha_shifts(window: TwoSidedWindow, k: int, l: int) -> ReducedWord:
    """The geodesic cocycle alpha(S^k xi, S^l xi).

    For k > l this is (xi_l xi_{l+1} .. xi_{k-1})^{-1}; for k < l it is
    xi_k .. xi_{l-1}; it is e for k = l.  The letter segment of a reduced
    word is reduced, so no reduction pass is needed.
    """
    if k == l:
        return identity(window.rank)
    a, b = (l, k) if k > l else (k, l)
    if window.lo > a or window.hi < b - 1:
        raise ValueError(
            f"window [{window.lo}, {window.hi}] does not cover indices [{a}, {b - 1}]")
    seg = window.letters[a - window.lo:b - window.lo]
    word = ReducedWord(window.rank, seg)
    return inverse(word) if k > l else word


def geodesic_cocycle(n: int, window: TwoSidedWindow) -> ReducedWord:
    """alpha(S^n xi, xi) = (xi_0 .. xi_{n-1})^{-1} for n > 0, extended by the
    cocycle identity to n <= 0."""
    return alpha_shifts(window, n, 0)


def inverse_segment_sets(window: TwoSidedWindow, n: int) -> GeodesicSets:
    """{alpha(xi, S^k xi) : 0 <= k <= n}; equals the geodesic prefixes."""
    return GeodesicSets(tuple(alpha_shifts(window, 0, k) for k in range(n + 1)))


# --- random walks


@dataclass(frozen=True)
class StepDistribution:
    """Finite-support step law for a random walk on the free group."""

    words: tuple[ReducedWord, ...]
    probs: np.ndarray

    def __post_init__(self):
        if len(self.words) == 0:
            raise ValueError("empty random-walk support")
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (len(self.words),):
            raise ValueError("support/probability length mismatch")
        if np.any(p <= 0):
            raise ValueError("step probabilities must be positive")
        if abs(float(p.sum()) - 1.0) > 1e-12:
            raise ValueError(f"step probabilities sum to {p.sum()}, not 1")
        object.__setattr__(self, "probs", p)

    @property
    def rank(self) -> int:
        return self.words[0].rank


@dataclass(frozen=True)
class RwTrajectory:
    """i.i.d. increments Z_0, Z_1, ... and partial products gamma_i = Z_i .. Z_0."""

    rank: int
    steps: tuple[ReducedWord, ...]
    gammas: tuple[ReducedWord, ...]

    def __len__(self) -> int:
        return len(self.steps)


def sample_rw_trajectory(dist: StepDistribution, n: int,
                         rng: np.random.Generator) -> RwTrajectory:
    """Sample n i.i.d. increments with law `dist` and their partial products."""
    idx = rng.choice(len(dist.words), size=n, p=dist.probs)
    steps = tuple(dist.words[i] for i in idx)
    gammas: list[ReducedWord] = []
    acc = identity(dist.rank)
    for z in steps:
        acc = multiply(z, acc)
        gammas.append(acc)
    return RwTrajectory(dist.rank, steps, tuple(gammas))


def rw_alpha(traj: RwTrajectory, k: int, l: int) -> ReducedWord:
    """The random-walk cocycle alpha(S^k omega, S^l omega) on positive shifts.

    alpha(S^k omega, omega) = Z_{k-1} .. Z_1 Z_0 = gamma_{k-1} for k > 0.
    """
    if min(k, l) < 0 or max(k, l) > len(traj):
        raise ValueError("shift outside sampled trajectory")
    if k == l:
        return identity(traj.rank)
    if l == 0:
        return traj.gammas[k - 1]
    if k == 0:
        return inverse(traj.gammas[l - 1])
    # alpha(S^k, S^l) = alpha(S^k, id) * alpha(id, S^l) = gamma_{k-1} gamma_{l-1}^{-1}
    return multiply(rw_alpha(traj, k, 0), rw_alpha(traj, 0, l))


def rw_segment_sets(traj: RwTrajectory, n: int) -> list[ReducedWord]:
    """F_n(omega) = {e} union {gamma_i^{-1} : 0 <= i <= n-1}, duplicates kept.

    These are the cocycle values alpha(omega, S^k omega), 0 <= k <= n, so the
    list has n+1 entries; refinement by F_n treats it as a set.
    """
    if n > len(traj):
        raise ValueError("horizon exceeds sampled trajectory")
    return [identity(traj.rank)] + [inverse(traj.gammas[i]) for i in range(n)]


def empirical_letter_freqs(rank: int, n_samples: int, position: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Empirical distribution of the letter at `position` over sampled rays."""
    counts = np.zeros(2 * rank, dtype=np.int64)
    for _ in range(n_samples):
        ray = sample_ray(rank, position + 1, rng)
        counts[ray.letters[position]] += 1
    return counts / n_samples


def stderr_of_mean(values: np.ndarray) -> float:
    """Sample standard error of the mean (0 for a single value)."""
    v = np.asarray(values, dtype=float)
    if v.size <= 1:
        return 0.0
    return float(v.std(ddof=1) / math.sqrt(v.size))
