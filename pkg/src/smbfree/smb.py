"""Skew systems and entropy equipartition experiments.

The driving data is a base system (shift on boundary geodesics, or shift on
random-walk increment sequences) together with its group-valued cocycle; the
fiber is a p.m.p. action model with a finite partition.  The skew map is
T(y, x) = (Sy, alpha(Sy, y) x), and the objects computed here are the
information functions of the partition refined along the cocycle-image sets

    F_n(y) = { alpha(y, S^k y) : 0 <= k <= n },

their normalizations, fibrewise Shannon entropies, conditional-entropy
profiles, and the resulting orbital entropy estimators:

* ``normalized-entropy``   -- mean over sampled bases of H(P^{F_N(y)})/(N+1),
  computed exactly per base whenever the join is exactly enumerable.
* ``conditional-cesaro``   -- mean over sampled bases of the conditional
  entropy H(P | join of the first K translates), the truncated form of the
  conditional-entropy representation of the limit.
* ``pointwise-monte-carlo`` -- mean of final-horizon normalized information
  over independent (base, point) pairs.

Experiments are embarrassingly parallel over samples; every sample owns a
seed stream derived from the experiment seed, so results do not depend on
the worker count.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import measure
from .actions import BernoulliModel, FiniteModel, ZFactorModel
from .boundary import (RayPrefix, RwTrajectory, StepDistribution, sample_ray,
                       sample_rw_trajectory, stderr_of_mean)
from .measure import (EntropyEstimate, PartitionSpec, EnumerationBudgetExceeded,
                      conditional_entropy, dist_entropy, information,
                      join_entropy)
from .words import ReducedWord, identity, inverse, multiply

GEODESIC = "geodesic"
RANDOM_WALK = "random-walk"

METHODS = ("normalized-entropy", "conditional-cesaro", "pointwise-monte-carlo")


@dataclass(frozen=True)
class SkewSystem:
    """Base shift + cocycle choice, fiber action model, and partition."""

    cocycle: str
    model: object
    partition: PartitionSpec
    walk: StepDistribution | None = None

    def __post_init__(self):
        if self.cocycle not in (GEODESIC, RANDOM_WALK):
            raise ValueError(f"unknown cocycle kind {self.cocycle!r}")
        if self.cocycle == RANDOM_WALK:
            if self.walk is None:
                raise ValueError("random-walk cocycle needs a step distribution")
            if self.walk.rank != self.model.rank:
                raise ValueError("walk and model rank mismatch")

    @property
    def rank(self) -> int:
        return self.model.rank

    @property
    def exploratory(self) -> bool:
        """True when the documented ergodicity sufficient condition (strongly
        mixing fiber action) is not known to hold, as for Z-factor fibers."""
        return self.model.kind == "zfactor"


@dataclass(frozen=True)
class InfoSequence:
    """Normalized information values along n = 0..N with run metadata."""

    values: np.ndarray
    seed: int | None = None
    method: str = "info-seq"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < -1e-12) or not np.all(np.isfinite(v)):
            raise ValueError("normalized information values must be finite and >= 0")
        object.__setattr__(self, "values", v)

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    def tail_summary(self, frac: float = 0.2) -> tuple[float, float]:
        """(last value, least-squares slope over the trailing fraction)."""
        v = self.values
        k = max(2, int(len(v) * frac))
        tail = v[-k:]
        slope = float(np.polyfit(np.arange(len(tail)), tail, 1)[0])
        return float(v[-1]), slope


def sample_base(sys: SkewSystem, horizon: int, rng: np.random.Generator):
    if sys.cocycle == GEODESIC:
        return sample_ray(sys.rank, horizon, rng)
    return sample_rw_trajectory(sys.walk, horizon, rng)


def base_alpha(sys: SkewSystem, y, k: int, l: int) -> ReducedWord:
    """alpha(S^k y, S^l y) for nonnegative shifts of a sampled base."""
    if min(k, l) < 0:
        raise ValueError("negative shifts need a two-sided window")
    if sys.cocycle == GEODESIC:
        if max(k, l) > len(y):
            raise ValueError("shift outside sampled ray prefix")
        if k == l:
            return identity(sys.rank)
        a, b = (l, k) if k > l else (k, l)
        word = ReducedWord(sys.rank, y.letters[a:b])
        return inverse(word) if k > l else word
    from .boundary import rw_alpha
    return rw_alpha(y, k, l)


def translate_words(sys: SkewSystem, y, n: int) -> list[ReducedWord]:
    """F_n(y) as an ordered list (duplicates possible for random walks)."""
    if sys.cocycle == GEODESIC:
        return [y.prefix_word(j) for j in range(n + 1)]
    from .boundary import rw_segment_sets
    return rw_segment_sets(y, n)


def _coord_stream(sys: SkewSystem, y, n: int) -> list[tuple]:
    """Per-translate coordinate supports, resolved to cheap hashable keys."""
    model, window = sys.model, sys.partition.window
    if model.kind == "bernoulli":
        out = []
        for g in translate_words(sys, y, n):
            out.append(tuple(multiply(g, w).letters for w in window))
        return out
    # zfactor: coordinates are w + phi(translate), phi accumulated incrementally
    window = tuple(int(w) for w in window)
    offsets = [0]
    if sys.cocycle == GEODESIC:
        acc = 0
        for ell in y.letters[:n]:
            acc += model.phi_letter(ell)
            offsets.append(acc)
    else:
        acc = 0
        for z in y.steps[:n]:
            acc -= model.phi(z)
            offsets.append(acc)
    return [tuple(w + off for w in window) for off in offsets]


def _finite_act_tables(sys: SkewSystem, y, n: int) -> list[np.ndarray]:
    """Tables z -> gamma^{-1} z for each translate gamma in F_n(y)."""
    model = sys.model
    table = np.arange(model.n_points, dtype=np.int64)
    out = [table]
    if sys.cocycle == GEODESIC:
        for ell in y.letters[:n]:
            table = model.letter_table(ell ^ 1)[table]
            out.append(table)
    else:
        for z in y.steps[:n]:
            table = table[model.act_table(inverse(z))]
            out.append(table)
    return out


def info_sequence(sys: SkewSystem, y, x, horizon: int, *, seed: int | None = None,
                  max_width: int = measure.DEFAULT_MAX_WIDTH) -> InfoSequence:
    """Normalized information of the refined partition along F_n(y), n <= N."""
    if sys.model.kind == "finite":
        logm = measure.finite_info_log_sequence(
            sys.model, sys.partition, _finite_act_tables(sys, y, horizon), x)
    else:
        logm = measure.info_log_measure_sequence(
            sys.model, sys.partition, _coord_stream(sys, y, horizon), x,
            max_width=max_width)
    values = -logm / (np.arange(horizon + 1) + 1.0)
    return InfoSequence(values, seed=seed)


def _join_factors_at(sys: SkewSystem, y, offset: int, count: int):
    """Factors (alpha(S^offset y, S^{offset+j} y), P) for j = 0..count."""
    return [(base_alpha(sys, y, offset, offset + j), sys.partition)
            for j in range(count + 1)]


def fibrewise_entropy(sys: SkewSystem, y, n: int, *, offset: int = 0, **kw) -> float:
    """Exact H of the partition refined along F_n(S^offset y)."""
    return join_entropy(sys.model, _join_factors_at(sys, y, offset, n), **kw)


def fibrewise_entropy_sequence(sys: SkewSystem, y, horizon: int, **kw) -> np.ndarray:
    """H(P^{F_n(y)})/(n+1) for n = 0..N, all exact."""
    return np.array([fibrewise_entropy(sys, y, n, **kw) / (n + 1)
                     for n in range(horizon + 1)])


def cesaro_identity_check(sys: SkewSystem, y, n: int, **kw) -> float:
    """Max discrepancy, over m <= n, between H(P^{F_m(y)}) and the telescoping
    sum of conditional entropies along the shifted bases."""
    worst = 0.0
    for m in range(n + 1):
        lhs = fibrewise_entropy(sys, y, m, **kw)
        terms = []
        for k in range(m + 1):
            given = [(base_alpha(sys, y, m - k, m - k + j), sys.partition)
                     for j in range(1, k + 1)]
            terms.append(conditional_entropy(
                sys.model, [(identity(sys.rank), sys.partition)], given, **kw))
        worst = max(worst, abs(lhs - math.fsum(terms)))
    return worst


def conditional_entropy_profile(sys: SkewSystem, y, depth: int, **kw) -> np.ndarray:
    """c_k(y) = H(P | join of the first k translates), k = 0..depth."""
    out = []
    for k in range(depth + 1):
        given = [(base_alpha(sys, y, 0, j), sys.partition) for j in range(1, k + 1)]
        out.append(conditional_entropy(
            sys.model, [(identity(sys.rank), sys.partition)], given, **kw))
    return np.asarray(out)


def conditional_limit_sequence(sys: SkewSystem, y, x, horizon: int, *,
                               max_width: int = measure.DEFAULT_MAX_WIDTH) -> np.ndarray:
    """f_n(y, x) = conditional information of P given the join of the first n
    translates, for n = 0..N."""
    model, part = sys.model, sys.partition
    if model.kind == "finite":
        tables = _finite_act_tables(sys, y, horizon)
        joint = measure.finite_info_log_sequence(model, part, tables, x)
        given = measure.finite_info_log_sequence(model, part, tables[1:], x)
    else:
        stream = _coord_stream(sys, y, horizon)
        joint = measure.info_log_measure_sequence(model, part, stream, x,
                                                  max_width=max_width)
        given = measure.info_log_measure_sequence(model, part, stream[1:], x,
                                                  max_width=max_width)
    out = np.empty(horizon + 1)
    out[0] = -joint[0]
    out[1:] = given - joint[1:]
    return out


# --- orbital entropy estimators -------------------------------------------------


def _spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(seed).spawn(n)]


def _exact_horizon_feasible(sys: SkewSystem, y, horizon: int, opts: dict) -> bool:
    if sys.model.kind == "finite" or sys.partition.injective:
        return True
    try:
        fibrewise_entropy(sys, y, horizon, **opts)
        return True
    except EnumerationBudgetExceeded:
        return False


def _normalized_entropy_values(sys, horizon, samples, seed, opts,
                               mc_fiber_samples) -> np.ndarray:
    rngs = _spawn_rngs(seed, samples)
    values = np.empty(samples)
    exact = None
    for i, rng in enumerate(rngs):
        y = sample_base(sys, horizon, rng)
        if exact is None:
            exact = _exact_horizon_feasible(sys, y, horizon, opts)
        if exact:
            values[i] = fibrewise_entropy(sys, y, horizon, **opts) / (horizon + 1)
        else:
            seq_vals = [info_sequence(sys, y, sys.model.sample_point(rng), horizon,
                                      max_width=opts.get("max_width",
                                                         measure.DEFAULT_MAX_WIDTH)
                                      ).values[-1]
                        for _ in range(mc_fiber_samples)]
            values[i] = float(np.mean(seq_vals))
    return values


def orbital_entropy_estimate(sys: SkewSystem, method: str, horizon: int,
                             samples: int, seed: int, *,
                             cond_depth: int = 8,
                             mc_fiber_samples: int = 32,
                             max_width: int = measure.DEFAULT_MAX_WIDTH,
                             max_work: int = measure.DEFAULT_MAX_WORK,
                             workers: int = 1) -> EntropyEstimate:
    """Estimate the orbital entropy of the partition under the skew system.

    All three methods target the same constant on ergodic systems and carry
    a standard error from the spread across independently seeded samples.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if samples < 1:
        raise ValueError("need at least one sample")
    opts = {"max_width": max_width, "max_work": max_work}
    if method == "normalized-entropy":
        values = _normalized_entropy_values(sys, horizon, samples, seed, opts,
                                            mc_fiber_samples)
    elif method == "conditional-cesaro":
        depth = min(cond_depth, horizon)
        rngs = _spawn_rngs(seed, samples)
        values = np.empty(samples)
        for i, rng in enumerate(rngs):
            y = sample_base(sys, depth, rng)
            values[i] = conditional_entropy_profile(sys, y, depth, **opts)[-1]
    else:
        args = [(sys, horizon, s, max_width)
                for s in np.random.SeedSequence(seed).spawn(samples)]
        values = np.asarray(_pmap(_pointwise_sample, args, workers))
    return EntropyEstimate(float(values.mean()), method, horizon, samples,
                           stderr_of_mean(values))


def _pointwise_sample(args) -> float:
    sys, horizon, child_seed, max_width = args
    rng = np.random.Generator(np.random.PCG64(child_seed))
    y = sample_base(sys, horizon, rng)
    x = sys.model.sample_point(rng)
    return float(info_sequence(sys, y, x, horizon, max_width=max_width).values[-1])


def _pmap(fn, args_list, workers: int) -> list:
    if workers <= 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(args_list) // (workers * 4))
        return list(pool.map(fn, args_list, chunksize=chunk))


def seward_bound(sys: SkewSystem, gammas, **kw) -> float:
    """H(join of gamma*P over the finite set F) / |F|.

    By subadditivity this never exceeds H(P); for free ergodic actions it is
    an upper-bound certificate for the Rokhlin entropy.
    """
    gammas = measure.dedup_words(gammas)
    if not gammas:
        raise ValueError("empty set F")
    h = join_entropy(sys.model, [(g, sys.partition) for g in gammas], **kw)
    return h / len(gammas)


def partition_entropy(sys: SkewSystem, **kw) -> float:
    return join_entropy(sys.model, [(identity(sys.rank), sys.partition)], **kw)


def _candidate_seed(seed: int, part: PartitionSpec) -> int:
    """Deterministic per-candidate stream, stable under list reordering."""
    digest = hashlib.sha256(repr((seed, part.key())).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def rokhlin_search(sys: SkewSystem, candidates, horizon: int, samples: int,
                   seed: int, *, method: str = "normalized-entropy",
                   **kw) -> tuple[EntropyEstimate, int]:
    """Min over caller-flagged generating partitions of the orbital entropy
    estimate; returns (best estimate, index of the first argmin candidate).

    Whether a candidate generates is the caller's responsibility; the result
    is an upper bound for the Rokhlin entropy only under that flag.
    """
    cand = list(candidates)
    if not cand:
        raise ValueError("empty candidate list")
    best: EntropyEstimate | None = None
    best_idx = -1
    for idx, part in enumerate(cand):
        sub = SkewSystem(sys.cocycle, sys.model, part, sys.walk)
        est = orbital_entropy_estimate(sub, method, horizon, samples,
                                       _candidate_seed(seed, part), **kw)
        if best is None or est.value < best.value:
            best, best_idx = est, idx
    return best, best_idx


def point_cell(sys: SkewSystem, x) -> int:
    """Cell of the unrefined partition containing x."""
    part, model = sys.partition, sys.model
    if model.kind == "finite":
        return part.labels[x.index]
    return part.label_of(x.symbol(c) for c in part.window)


def maximal_inequality_check(sys: SkewSystem, lambdas, samples: int,
                             horizon: int, seed: int, *,
                             max_width: int = measure.DEFAULT_MAX_WIDTH,
                             workers: int = 1) -> list[dict]:
    """Empirical check of the maximal inequality for the conditional
    information functions: for every cell P and level lam, the joint measure
    of {x in P, sup_n f_n > lam} is at most exp(-lam).

    Returns one report row per (cell, lambda) with the empirical fraction,
    the bound, the binomial 3-sigma allowance, and a violation flag.
    """
    args = [(sys, horizon, s, max_width)
            for s in np.random.SeedSequence(seed).spawn(samples)]
    results = _pmap(_maximal_sample, args, workers)
    cells = sys.partition.cells
    rows = []
    for lam in lambdas:
        exceed = np.zeros(cells, dtype=np.int64)
        for cell, fstar in results:
            if fstar > lam:
                exceed[cell] += 1
        bound = math.exp(-lam)
        sigma = math.sqrt(bound * (1 - bound) / samples)
        for cell in range(cells):
            frac = exceed[cell] / samples
            rows.append({
                "cell": cell,
                "lambda": float(lam),
                "fraction": float(frac),
                "bound": bound,
                "sigma": sigma,
                "violation": bool(frac > bound + 3 * sigma),
            })
    return rows


def _maximal_sample(args) -> tuple[int, float]:
    sys, horizon, child_seed, max_width = args
    rng = np.random.Generator(np.random.PCG64(child_seed))
    y = sample_base(sys, horizon, rng)
    x = sys.model.sample_point(rng)
    f = conditional_limit_sequence(sys, y, x, horizon, max_width=max_width)
    return point_cell(sys, x), float(f.max())


def sphere_average(sys: SkewSystem, x, n: int, *, mode: str = "exact",
                   samples: int = 0, seed: int = 0,
                   max_width: int = measure.DEFAULT_MAX_WIDTH,
                   max_sphere: int = 200_000) -> tuple[float, float]:
    """Sphere-averaged normalized information at x.

    Exact mode enumerates every reduced word of length n and averages the
    information of the partition refined along the word's prefix chain;
    Monte-Carlo mode averages over rays sampled from the boundary measure,
    which has the same mean.  Returns (value, stderr); stderr is 0 in exact
    mode.
    """
    if sys.cocycle != GEODESIC:
        raise ValueError("sphere averages are defined for the geodesic cocycle")
    from .words import reduced_words_of_length, sphere_size

    def value_along(letters: tuple[int, ...]) -> float:
        y = RayPrefix(sys.rank, letters)
        return float(info_sequence(sys, y, x, len(letters),
                                   max_width=max_width).values[-1])

    if mode == "exact":
        size = sphere_size(sys.rank, n)
        if size > max_sphere:
            raise EnumerationBudgetExceeded(size, max_sphere)
        total = math.fsum(value_along(w) for w in reduced_words_of_length(sys.rank, n))
        return total / size, 0.0
    if mode != "mc":
        raise ValueError("mode must be 'exact' or 'mc'")
    if samples < 1:
        raise ValueError("Monte-Carlo mode needs samples >= 1")
    vals = np.empty(samples)
    for i, rng in enumerate(_spawn_rngs(seed, samples)):
        vals[i] = value_along(sample_ray(sys.rank, n, rng).letters)
    return float(vals.mean()), stderr_of_mean(vals)


def rw_experiment(sys: SkewSystem, horizon: int, samples: int, seed: int, *,
                  grid: list[int] | None = None,
                  max_width: int = measure.DEFAULT_MAX_WIDTH,
                  workers: int = 1) -> dict:
    """Normalized information statistics along random-walk segment sets.

    Returns per-n mean and stderr over independently sampled trajectories on
    the requested grid (defaults to ~20 points up to the horizon), plus the
    final-horizon estimate.
    """
    if sys.cocycle != RANDOM_WALK:
        raise ValueError("rw_experiment needs a random-walk cocycle")
    if grid is None:
        step = max(1, horizon // 20)
        grid = list(range(0, horizon + 1, step))
        if grid[-1] != horizon:
            grid.append(horizon)
    args = [(sys, horizon, s, max_width)
            for s in np.random.SeedSequence(seed).spawn(samples)]
    rows = _pmap(_rw_sample, args, workers)
    table = np.asarray([row[grid] for row in rows])
    finals = np.asarray([row[-1] for row in rows])
    estimate = EntropyEstimate(float(finals.mean()), "rw-pointwise", horizon,
                               samples, stderr_of_mean(finals))
    return {
        "grid": list(grid),
        "mean": table.mean(axis=0),
        "stderr": np.array([stderr_of_mean(table[:, j]) for j in range(len(grid))]),
        "estimate": estimate,
        "exploratory": sys.exploratory,
        "trajectories": rows,
    }


def _rw_sample(args) -> np.ndarray:
    sys, horizon, child_seed, max_width = args
    rng = np.random.Generator(np.random.PCG64(child_seed))
    y = sample_base(sys, horizon, rng)
    x = sys.model.sample_point(rng)
    return info_sequence(sys, y, x, horizon, max_width=max_width).values
