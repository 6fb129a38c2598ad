"""Exact atom measures, information functions and Shannon entropies of
refined partitions.

A partition here is window-measurable: it labels the symbol tuple that a
point shows on a finite set of coordinates (for the finite permutation model
it labels the points directly).  Refining a partition by a finite set F of
group elements intersects one labelled constraint per translate; the measure
of such an atom is computed two independent ways:

* ``atom_log_measure`` -- frontier dynamic programming over the union of
  coordinate supports in the order the translates are given.  A coordinate
  is marginalized out as soon as no remaining constraint touches it, so the
  live frontier stays small along geodesic-ordered refinements.  Mass is
  carried with an explicit log-scale to survive arbitrarily long products.
* ``atom_measure_bruteforce`` -- direct summation of product weights over
  every symbol assignment on the coordinate union.  Slow but independent;
  the DP is tested against it.

Exact entropies of refined partitions enumerate atoms by depth-first search
over reachable label tuples (zero-measure branches are pruned, so coarse
labelings stay cheap).  When every labeling in a join is injective the atoms
are exactly the cylinders on the coordinate union, and the entropy reduces
to (number of distinct coordinates) * H(p); this closed form is used
whenever it applies and is cross-checked against the generic search in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product as iter_product

import numpy as np

from .actions import coordinate_set
from .words import ReducedWord, identity, inverse

DEFAULT_MAX_WIDTH = 12
DEFAULT_MAX_WORK = 1 << 22
BRUTE_MAX_STATES = 10 ** 7

NEG_INF = float("-inf")


class FrontierWidthExceeded(RuntimeError):
    """Raised when the live DP frontier outgrows the configured bound."""

    def __init__(self, width: int, bound: int):
        self.width = width
        self.bound = bound
        super().__init__(
            f"frontier width {width} exceeds bound {bound}; "
            f"rerun with a frontier width of at least {width}")


class EnumerationBudgetExceeded(RuntimeError):
    """Raised when exact atom enumeration exceeds the configured work bound."""

    def __init__(self, work: int, bound: int):
        self.work = work
        self.bound = bound
        super().__init__(
            f"atom enumeration needs more than {bound} state visits; "
            f"raise the enumeration budget or shrink the horizon")


class ZeroMeasureAtom(RuntimeError):
    """A sampled point landed in a measure-zero atom: a model bug."""


def dist_entropy(probs) -> float:
    """Shannon entropy of a probability vector, in nats."""
    p = np.asarray(probs, dtype=float)
    return float(math.fsum(-x * math.log(x) for x in p if x > 0))


@dataclass(frozen=True)
class PartitionSpec:
    """A finite partition given by a total labeling of window symbol tuples.

    ``labels[i]`` is the cell of the window tuple with mixed-radix rank i
    (row-major, most significant first).  For the finite model ``window`` is
    empty and ``labels`` grades the points of X directly.
    """

    name: str
    alphabet: int
    window: tuple
    labels: tuple[int, ...]
    cells: int

    def __post_init__(self):
        if self.cells <= 0:
            raise ValueError("partition needs at least one cell")
        if any(not 0 <= c < self.cells for c in self.labels):
            raise ValueError("label out of range")
        present = set(self.labels)
        if len(present) != self.cells:
            missing = [c for c in range(self.cells) if c not in present]
            raise ValueError(f"cells {missing} are empty (zero measure)")
        if self.window and len(self.labels) != self.alphabet ** len(self.window):
            raise ValueError("labeling is not total on the window tuples")

    @cached_property
    def injective(self) -> bool:
        return len(set(self.labels)) == len(self.labels)

    @cached_property
    def tuples_by_cell(self) -> tuple[tuple[tuple[int, ...], ...], ...]:
        """For each cell, the window symbol tuples carrying that label."""
        byc: list[list[tuple[int, ...]]] = [[] for _ in range(self.cells)]
        for rank, tup in enumerate(iter_product(range(self.alphabet),
                                                repeat=len(self.window))):
            byc[self.labels[rank]].append(tup)
        return tuple(tuple(ts) for ts in byc)

    def label_of(self, symbols) -> int:
        rank = 0
        for s in symbols:
            rank = rank * self.alphabet + s
        return self.labels[rank]

    def key(self) -> tuple:
        """Canonical value identity, used to deduplicate candidate partitions."""
        window = tuple(w.letters if isinstance(w, ReducedWord) else w for w in self.window)
        return (self.name, self.alphabet, window, self.labels, self.cells)


def _window_words(model, window) -> tuple:
    if model.kind == "bernoulli":
        return tuple(window)
    return tuple(int(w) for w in window)


def coordinate_partition(model) -> PartitionSpec:
    """Partition by the symbol at the identity coordinate."""
    if model.kind == "finite":
        raise ValueError("coordinate partition needs a symbolic model")
    window = (identity(model.rank),) if model.kind == "bernoulli" else (0,)
    a = model.alphabet
    return PartitionSpec("coordinate", a, window, tuple(range(a)), a)


def window_tuple_partition(model, window) -> PartitionSpec:
    """Partition by the full symbol tuple on a window (injective labeling)."""
    window = _window_words(model, window)
    a = model.alphabet
    n = a ** len(window)
    return PartitionSpec("window-tuple", a, window, tuple(range(n)), n)


def parity_partition(model, window) -> PartitionSpec:
    """Partition by the sum of window symbols mod the alphabet size."""
    window = _window_words(model, window)
    a = model.alphabet
    labels = tuple(sum(t) % a for t in iter_product(range(a), repeat=len(window)))
    return PartitionSpec("parity", a, window, labels, a)


def table_partition(model, window, labels, cells: int | None = None) -> PartitionSpec:
    window = _window_words(model, window)
    labels = tuple(int(c) for c in labels)
    n_cells = cells if cells is not None else max(labels) + 1
    return PartitionSpec("table", model.alphabet, window, labels, n_cells)


def finite_partition(model, point_labels, cells: int | None = None) -> PartitionSpec:
    if model.kind != "finite":
        raise ValueError("finite partition needs a finite model")
    labels = tuple(int(c) for c in point_labels)
    if len(labels) != model.n_points:
        raise ValueError("one label per point required")
    n_cells = cells if cells is not None else max(labels) + 1
    return PartitionSpec("finite", 0, (), labels, n_cells)


@dataclass(frozen=True)
class RefinedAtom:
    """A finite conjunction of (group element, cell) constraints.

    ``items`` may mix partitions, covering joins like P v gamma*Q; the
    common case of one partition refined along F has a constant second slot.
    """

    items: tuple  # of (gamma: ReducedWord, partition: PartitionSpec, cell: int)

    @property
    def constraints(self) -> tuple:
        return tuple((g, c) for g, _, c in self.items)

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class EntropyEstimate:
    """A numeric entropy value (nats) with method tag and error bar."""

    value: float
    method: str
    horizon: int
    samples: int
    stderr: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("entropy estimate must be finite")
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


def dedup_words(gammas) -> list[ReducedWord]:
    """Order-preserving deduplication of group elements."""
    seen: set[tuple] = set()
    out: list[ReducedWord] = []
    for g in gammas:
        k = g.letters
        if k not in seen:
            seen.add(k)
            out.append(g)
    return out


def atom_of(model, x, gammas, partition: PartitionSpec) -> RefinedAtom:
    """The atom of the refined partition containing x: one constraint per
    distinct element of F."""
    items = []
    for g in dedup_words(gammas):
        if model.kind == "finite":
            cell = partition.labels[model.act_index(inverse(g), x.index)]
        else:
            coords = coordinate_set(model, g, partition.window)
            cell = partition.label_of(x.symbol(c) for c in coords)
        items.append((g, partition, cell))
    return RefinedAtom(tuple(items))


def _product_constraints(model, atom: RefinedAtom):
    """(coords, allowed-tuples) per constraint, in the atom's order."""
    out = []
    for g, part, cell in atom.items:
        coords = coordinate_set(model, g, part.window)
        out.append((coords, part.tuples_by_cell[cell]))
    return out


class _Frontier:
    """Joint distribution over the live coordinates, with log-scaled mass."""

    __slots__ = ("probs", "max_width", "active", "pos", "states", "log_scale")

    def __init__(self, probs, max_width: int):
        self.probs = tuple(float(p) for p in probs)
        self.max_width = max_width
        self.active: list = []
        self.pos: dict = {}
        self.states: dict[tuple, float] = {(): 1.0}
        self.log_scale = 0.0

    def apply(self, coords, allowed, dead) -> None:
        """Introduce coords, keep only assignments in `allowed`, then sum out
        the coordinates listed in `dead`."""
        new = [c for c in coords if c not in self.pos]
        for c in new:
            self.pos[c] = len(self.active)
            self.active.append(c)
        if len(self.active) > self.max_width:
            raise FrontierWidthExceeded(len(self.active), self.max_width)
        if new:
            probs = self.probs
            grown: dict[tuple, float] = {}
            tails = list(iter_product(range(len(probs)), repeat=len(new)))
            tail_w = [math.prod(probs[s] for s in t) for t in tails]
            for key, w in self.states.items():
                for t, tw in zip(tails, tail_w):
                    grown[key + t] = w * tw
            self.states = grown
        idx = tuple(self.pos[c] for c in coords)
        allowed_set = {tuple(t) for t in allowed}
        self.states = {k: w for k, w in self.states.items()
                       if tuple(k[i] for i in idx) in allowed_set}
        if dead:
            drop = sorted((self.pos[c] for c in dead), reverse=True)
            keep = [i for i in range(len(self.active)) if i not in drop]
            merged: dict[tuple, float] = {}
            for k, w in self.states.items():
                nk = tuple(k[i] for i in keep)
                merged[nk] = merged.get(nk, 0.0) + w
            self.states = merged
            self.active = [self.active[i] for i in keep]
            self.pos = {c: i for i, c in enumerate(self.active)}
        if self.states:
            top = max(self.states.values())
            if top < 1e-280:
                self.log_scale += math.log(top)
                inv = 1.0 / top
                self.states = {k: w * inv for k, w in self.states.items()}

    def log_mass(self) -> float:
        if not self.states:
            return NEG_INF
        return self.log_scale + math.log(math.fsum(self.states.values()))


def _dead_plan(constraint_coords):
    """For each step, which coordinates see their last use there."""
    last: dict = {}
    for i, coords in enumerate(constraint_coords):
        for c in coords:
            last[c] = i
    plan: list[list] = [[] for _ in constraint_coords]
    for c, i in last.items():
        plan[i].append(c)
    return plan


def atom_log_measure(model, atom: RefinedAtom, *,
                     max_width: int = DEFAULT_MAX_WIDTH) -> float:
    """log mu(atom), exactly; -inf for an empty (contradictory) atom."""
    if model.kind == "finite":
        mask = np.ones(model.n_points, dtype=bool)
        for g, part, cell in atom.items:
            table = model.act_table(inverse(g))
            mask &= np.asarray(part.labels)[table] == cell
        mass = float(model.probs[mask].sum())
        return math.log(mass) if mass > 0 else NEG_INF
    constraints = _product_constraints(model, atom)
    plan = _dead_plan([c for c, _ in constraints])
    frontier = _Frontier(model.probs, max_width)
    for (coords, allowed), dead in zip(constraints, plan):
        frontier.apply(coords, allowed, dead)
        if not frontier.states:
            return NEG_INF
    return frontier.log_mass()


def atom_measure_exact(model, atom: RefinedAtom, *,
                       max_width: int = DEFAULT_MAX_WIDTH) -> float:
    """mu(atom) by frontier DP (0.0 for contradictory constraints)."""
    lm = atom_log_measure(model, atom, max_width=max_width)
    return 0.0 if lm == NEG_INF else math.exp(lm)


def atom_measure_bruteforce(model, atom: RefinedAtom, *,
                            max_states: int = BRUTE_MAX_STATES) -> float:
    """Independent oracle: sum product weights over every assignment on the
    coordinate union that satisfies all constraints."""
    if model.kind == "finite":
        keep = np.ones(model.n_points, dtype=bool)
        for g, part, cell in atom.items:
            labels = np.asarray(part.labels)
            ok = np.array([labels[model.act_index(inverse(g), z)] == cell
                           for z in range(model.n_points)])
            keep &= ok
        return float(math.fsum(model.probs[keep].tolist()))
    constraints = _product_constraints(model, atom)
    coords: list = []
    pos: dict = {}
    for cs, _ in constraints:
        for c in cs:
            if c not in pos:
                pos[c] = len(coords)
                coords.append(c)
    a = model.alphabet
    n_states = a ** len(coords)
    if n_states > max_states:
        raise EnumerationBudgetExceeded(n_states, max_states)
    terms = []
    probs = tuple(float(p) for p in model.probs)
    checkers = []
    for cs, allowed in constraints:
        idx = tuple(pos[c] for c in cs)
        checkers.append((idx, {tuple(t) for t in allowed}))
    for config in iter_product(range(a), repeat=len(coords)):
        if all(tuple(config[i] for i in idx) in allowed for idx, allowed in checkers):
            terms.append(math.prod(probs[s] for s in config))
    return float(math.fsum(terms))


def information(model, x, gammas, partition: PartitionSpec, *,
                max_width: int = DEFAULT_MAX_WIDTH) -> float:
    """-log mu of the atom of the refined partition containing x (nats)."""
    atom = atom_of(model, x, gammas, partition)
    lm = atom_log_measure(model, atom, max_width=max_width)
    if lm == NEG_INF:
        raise ZeroMeasureAtom("sampled point lies in a zero-measure atom")
    return -lm


def conditional_information(model, x, partition: PartitionSpec, given_gammas, *,
                            max_width: int = DEFAULT_MAX_WIDTH) -> float:
    """-log [ mu(P(x) & Q(x)) / mu(Q(x)) ] with Q the refinement over the
    given translates; an empty family conditions on the trivial partition."""
    given = dedup_words(given_gammas)
    joint = information(model, x, [identity(model.rank)] + given, partition,
                        max_width=max_width)
    if not given:
        return joint
    base = information(model, x, given, partition, max_width=max_width)
    return joint - base


# --- exact entropies of joins -------------------------------------------------


def _join_factors(model, factors):
    """Deduplicate (gamma, partition) pairs and resolve coordinate supports."""
    seen = set()
    out = []
    for g, part in factors:
        key = (g.letters, part.key())
        if key in seen:
            continue
        seen.add(key)
        coords = coordinate_set(model, g, part.window) if model.kind != "finite" else None
        out.append((g, part, coords))
    return out


def _dfs_join_entropy(probs, constraints, max_width, max_work) -> float:
    """Enumerate reachable label tuples depth-first; zero branches pruned."""
    plan = _dead_plan([c for c, _ in constraints])
    work = 0
    terms: list[float] = []

    def visit(depth: int, frontier: _Frontier) -> None:
        nonlocal work
        if depth == len(constraints):
            m = frontier.log_mass()
            if m > NEG_INF:
                mass = math.exp(m)
                terms.append(-mass * m)
            return
        coords, by_cell = constraints[depth]
        dead = plan[depth]
        for allowed in by_cell:
            if not allowed:
                continue
            child = _Frontier(frontier.probs, max_width)
            child.active = list(frontier.active)
            child.pos = dict(frontier.pos)
            child.states = dict(frontier.states)
            child.log_scale = frontier.log_scale
            child.apply(coords, allowed, dead)
            work += len(frontier.states) + len(child.states)
            if work > max_work:
                raise EnumerationBudgetExceeded(work, max_work)
            if child.states:
                visit(depth + 1, child)

    visit(0, _Frontier(probs, max_width))
    return float(math.fsum(terms))


def join_entropy(model, factors, *, max_width: int = DEFAULT_MAX_WIDTH,
                 max_work: int = DEFAULT_MAX_WORK) -> float:
    """Exact Shannon entropy H of the join of translated partitions.

    ``factors`` is a list of (gamma, partition); duplicates are dropped
    (joins are idempotent).  Injective labelings over product measures use
    the cylinder closed form; everything else enumerates atoms.
    """
    items = _join_factors(model, factors)
    if not items:
        return 0.0
    if model.kind == "finite":
        tuples = []
        for g, part, _ in items:
            labels = np.asarray(part.labels)
            tuples.append(labels[model.act_table(inverse(g))])
        keys = np.stack(tuples, axis=1)
        _, inv = np.unique(keys, axis=0, return_inverse=True)
        masses = np.zeros(int(inv.max()) + 1)
        np.add.at(masses, inv, model.probs)
        return float(math.fsum(-m * math.log(m) for m in masses if m > 0))
    if all(part.injective for _, part, _ in items):
        coords = set()
        for _, _, cs in items:
            coords.update(cs)
        return len(coords) * dist_entropy(model.probs)
    constraints = [(cs, part.tuples_by_cell) for _, part, cs in items]
    return _dfs_join_entropy(model.probs, constraints, max_width, max_work)


def shannon_entropy(model, gammas, partition: PartitionSpec, **kw) -> float:
    """H of the partition refined along F (exact)."""
    return join_entropy(model, [(g, partition) for g in gammas], **kw)


def conditional_entropy(model, target_factors, given_factors, **kw) -> float:
    """H(target join | given join) = H(joint) - H(given), exact."""
    given = list(given_factors)
    joint = join_entropy(model, list(target_factors) + given, **kw)
    if not given:
        return joint
    return joint - join_entropy(model, given, **kw)


def entropy_monte_carlo(model, gammas, partition: PartitionSpec, samples: int,
                        rng: np.random.Generator, *,
                        max_width: int = DEFAULT_MAX_WIDTH) -> tuple[float, float]:
    """Monte-Carlo estimate of H(P^F) as the mean of the information function."""
    vals = np.empty(samples)
    for i in range(samples):
        x = model.sample_point(rng)
        vals[i] = information(model, x, gammas, partition, max_width=max_width)
    se = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return float(vals.mean()), se


# --- incremental information sequences ----------------------------------------


def info_log_measure_sequence(model, partition: PartitionSpec, coord_stream, x, *,
                              max_width: int = DEFAULT_MAX_WIDTH) -> np.ndarray:
    """log mu of the refined atom of x after each translate in the stream.

    ``coord_stream`` lists, per step, the coordinate support of that
    translate (already resolved to hashable coordinate keys); the stream
    order is the marginalization order of the DP.
    """
    if partition.injective:
        seen: set = set()
        out = np.empty(len(coord_stream))
        acc = 0.0
        logp = [math.log(float(p)) for p in model.probs]
        for i, coords in enumerate(coord_stream):
            for c in coords:
                if c not in seen:
                    seen.add(c)
                    acc += logp[x.symbol(c)]
            out[i] = acc
        return out
    constraints = []
    for coords in coord_stream:
        cell = partition.label_of(x.symbol(c) for c in coords)
        constraints.append((coords, partition.tuples_by_cell[cell]))
    plan = _dead_plan([c for c, _ in constraints])
    frontier = _Frontier(model.probs, max_width)
    out = np.empty(len(constraints))
    for i, ((coords, allowed), dead) in enumerate(zip(constraints, plan)):
        frontier.apply(coords, allowed, dead)
        lm = frontier.log_mass()
        if lm == NEG_INF:
            raise ZeroMeasureAtom("sampled point lies in a zero-measure atom")
        out[i] = lm
    return out


def finite_info_log_sequence(model, partition: PartitionSpec, act_tables, x) -> np.ndarray:
    """Finite-model analogue: log mass of surviving points after each step.

    ``act_tables`` yields, per translate gamma, the table z -> gamma^{-1} z.
    """
    labels = np.asarray(partition.labels)
    mask = np.ones(model.n_points, dtype=bool)
    out = []
    for table in act_tables:
        cell = labels[table[x.index]]
        mask &= labels[table] == cell
        out.append(math.log(float(model.probs[mask].sum())))
    return np.asarray(out)
