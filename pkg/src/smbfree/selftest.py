"""Built-in invariant suite backing the ``selftest`` subcommand.

Each check exercises one exact identity or bound from the library's
contract; a check row is (name, bound, observed, pass) where `observed` is a
failure count or a numeric discrepancy.  A seed makes the whole suite
deterministic.
"""

from __future__ import annotations

import math

import numpy as np

from . import measure, smb
from .actions import BernoulliModel, FiniteModel, ZFactorModel, act
from .boundary import (StepDistribution, ray_cylinder_prob, sample_ray,
                       sample_rw_trajectory, sample_window, shift_ray)
from .measure import (atom_measure_bruteforce, atom_measure_exact, atom_of,
                      conditional_entropy, conditional_information, dist_entropy,
                      information, join_entropy, coordinate_partition,
                      parity_partition, window_tuple_partition)
from .smb import SkewSystem
from .words import (ReducedWord, identity, inverse, multiply, parse_word,
                    reduce, word_length)


def _random_word(rng, rank=2, max_len=12) -> ReducedWord:
    n = int(rng.integers(0, max_len + 1))
    return reduce(rng.integers(0, 2 * rank, size=n).tolist(), rank)


def _fair_window_system(window_text=("", "a")):
    model = BernoulliModel(2, np.array([0.5, 0.5]))
    window = [parse_word(t, 2) for t in window_text]
    return SkewSystem("geodesic", model, window_tuple_partition(model, window))


def run_selftest(seed: int = 12345) -> list[dict]:
    rng = np.random.default_rng(seed)
    rows: list[dict] = []

    def check(name: str, bound: float, observed: float):
        rows.append({"name": name, "bound": float(bound),
                     "observed": float(observed),
                     "pass": bool(observed <= bound)})

    # group axioms and reduction confluence
    fails = 0
    for _ in range(300):
        u, v, w = (_random_word(rng) for _ in range(3))
        fails += multiply(multiply(u, v), w) != multiply(u, multiply(v, w))
        fails += multiply(u, inverse(u)) != identity(2)
        fails += multiply(u, identity(2)) != u
        fails += reduce(u.letters + v.letters, 2) != multiply(u, v)
    check("words_group_axioms", 0, fails)

    # cocycle identity, exact on two-sided windows
    from .boundary import geodesic_cocycle
    fails = 0
    for _ in range(1500):
        n = int(rng.integers(-30, 31))
        m = int(rng.integers(-30, 31))
        win = sample_window(2, -65, 65, rng)
        fails += geodesic_cocycle(n + m, win) != multiply(
            geodesic_cocycle(n, shift_ray(win, m)), geodesic_cocycle(m, win))
    check("cocycle_identity", 0, fails)

    # segment sets are exact geodesics and match the cocycle-image sets
    fails = 0
    for _ in range(100):
        ray = sample_ray(2, 30, rng)
        pref = [ray.prefix_word(j) for j in range(31)]
        for _ in range(10):
            j, k = rng.integers(0, 31, size=2)
            fails += word_length(multiply(inverse(pref[j]), pref[k])) != abs(int(j) - int(k))
    from .boundary import inverse_segment_sets, segment_sets
    for _ in range(100):
        win = sample_window(2, 0, 25, rng)
        ray = sample_ray(2, 0, rng)
        from .boundary import RayPrefix
        ray = RayPrefix(2, win.letters)
        fails += list(inverse_segment_sets(win, 25)) != list(segment_sets(ray, 25))
    check("geodesic_segments_exact", 0, fails)

    # boundary law: first two letters follow the uniform-subdivision measure
    n_samp = 20000
    counts: dict[tuple, int] = {}
    for _ in range(n_samp):
        ray = sample_ray(2, 2, rng)
        counts[ray.letters] = counts.get(ray.letters, 0) + 1
    worst = 0.0
    for key, cnt in counts.items():
        p = ray_cylinder_prob(2, key)
        se = math.sqrt(p * (1 - p) / n_samp)
        worst = max(worst, abs(cnt / n_samp - p) / se)
    check("boundary_cylinder_law_z", 4.0, worst)

    # measure preservation of random refined atoms, all three models
    model = BernoulliModel(2, np.array([0.3, 0.7]))
    part = parity_partition(model, [identity(2), parse_word("a", 2)])
    worst = 0.0
    for _ in range(20):
        x = model.sample_point(rng)
        F = [_random_word(rng, max_len=4) for _ in range(3)]
        atom = atom_of(model, x, F, part)
        g = _random_word(rng, max_len=5)
        shifted = measure.RefinedAtom(tuple((multiply(g, h), p, c)
                                            for h, p, c in atom.items))
        worst = max(worst, abs(atom_measure_exact(model, atom)
                               - atom_measure_exact(model, shifted)))
    check("action_measure_preservation", 1e-12, worst)

    # Bernoulli independence over disjoint supports
    worst = 0.0
    cpart = coordinate_partition(model)
    for _ in range(20):
        x = model.sample_point(rng)
        g1, g2 = _random_word(rng, max_len=4), _random_word(rng, max_len=4)
        if g1 == g2:
            continue
        a1 = atom_of(model, x, [g1], cpart)
        a2 = atom_of(model, x, [g2], cpart)
        both = measure.RefinedAtom(a1.items + a2.items)
        worst = max(worst, abs(atom_measure_exact(model, both)
                               - atom_measure_exact(model, a1)
                               * atom_measure_exact(model, a2)))
    check("bernoulli_independence", 1e-12, worst)

    # Z-factor: action depends on gamma only through phi
    zmodel = ZFactorModel(2, (1, 0), np.array([0.5, 0.5]))
    fails = 0
    for _ in range(50):
        g1 = _random_word(rng, max_len=6)
        g2 = multiply(g1, reduce([2, 3], 2))  # append b b^-1 ... same phi, same element
        g3 = multiply(g1, reduce([2], 2))     # append b: same phi (weight 0), new element
        x = zmodel.sample_point(rng)
        coords = range(-3, 4)
        y1, y3 = act(zmodel, g1, x), act(zmodel, g3, x)
        fails += any(y1.symbol(c) != y3.symbol(c) for c in coords)
        fails += g1 != g2  # sanity: reduction collapses the null insertion
    check("zfactor_factor_property", 0, fails)

    # DP vs brute force on random refined atoms
    worst = 0.0
    for _ in range(30):
        ray = sample_ray(2, 5, rng)
        x = model.sample_point(rng)
        pwin = [identity(2), parse_word("a", 2)]
        p = parity_partition(model, pwin) if rng.integers(2) else \
            window_tuple_partition(model, pwin)
        F = [ray.prefix_word(j) for j in range(int(rng.integers(1, 6)))]
        atom = atom_of(model, x, F, p)
        exact = atom_measure_exact(model, atom)
        brute = atom_measure_bruteforce(model, atom)
        worst = max(worst, abs(exact - brute) / max(brute, 1e-300))
    check("dp_vs_bruteforce_rel", 1e-10, worst)

    # information chain rule and conditional-entropy chain identity
    worst = 0.0
    for _ in range(30):
        ray = sample_ray(2, 4, rng)
        x = model.sample_point(rng)
        F1 = [ray.prefix_word(j) for j in range(1, 4)]
        ci = conditional_information(model, x, part, F1)
        ij = information(model, x, [identity(2)] + F1, part)
        ib = information(model, x, F1, part)
        worst = max(worst, abs(ij - ib - ci))
    check("information_chain_rule", 1e-12, worst)

    worst = 0.0
    for _ in range(20):
        ray = sample_ray(2, 4, rng)
        target = [(identity(2), part)]
        given = [(ray.prefix_word(j), part) for j in range(1, 4)]
        lhs = join_entropy(model, target + given)
        rhs = join_entropy(model, given) + conditional_entropy(model, target, given)
        worst = max(worst, abs(lhs - rhs))
    check("conditional_entropy_chain", 1e-10, worst)

    # refinement monotonicity, translation invariance, subadditivity
    worst = 0.0
    for _ in range(20):
        ray = sample_ray(2, 5, rng)
        small = [(ray.prefix_word(j), part) for j in range(1, 3)]
        large = small + [(ray.prefix_word(j), part) for j in range(3, 5)]
        target = [(identity(2), part)]
        worst = max(worst, conditional_entropy(model, target, large)
                    - conditional_entropy(model, target, small))
    check("conditional_monotonicity", 1e-12, worst)

    worst = 0.0
    for _ in range(20):
        g = _random_word(rng, max_len=5)
        h = _random_word(rng, max_len=4)
        pair = [(identity(2), part), (h, cpart)]
        moved = [(multiply(g, a), p) for a, p in pair]
        worst = max(worst, abs(join_entropy(model, pair) - join_entropy(model, moved)))
    check("translation_invariance", 1e-12, worst)

    worst = 0.0
    for _ in range(20):
        g = _random_word(rng, max_len=4)
        h = _random_word(rng, max_len=4)
        worst = max(worst, join_entropy(model, [(g, part), (h, cpart)])
                    - join_entropy(model, [(g, part)])
                    - join_entropy(model, [(h, cpart)]))
    check("entropy_subadditivity", 1e-12, worst)

    # fair-coin equipartition is exact
    fair = BernoulliModel(2, np.array([0.5, 0.5]))
    fsys = SkewSystem("geodesic", fair, coordinate_partition(fair))
    ray = sample_ray(2, 300, rng)
    seq = smb.info_sequence(fsys, ray, fair.sample_point(rng), 300)
    check("fair_coin_exact", 1e-12, float(np.abs(seq.values - math.log(2)).max()))

    # finite model: normalized information at most log|X|/(n+1)
    n_pts = 16
    perm_a = np.roll(np.arange(n_pts), 1)
    perm_b = rng.permutation(n_pts)
    fmodel = FiniteModel(2, np.full(n_pts, 1 / n_pts), (perm_a, perm_b))
    flabels = (np.arange(n_pts) % 4).tolist()
    fpart = measure.finite_partition(fmodel, flabels)
    fsys2 = SkewSystem("geodesic", fmodel, fpart)
    ray = sample_ray(2, 200, rng)
    seq = smb.info_sequence(fsys2, ray, fmodel.sample_point(rng), 200)
    margin = float((seq.values * (np.arange(201) + 1) - math.log(n_pts)).max())
    check("finite_model_bound", 1e-12, margin)

    # Cesaro identity at small horizons, tuple and parity windows
    worst = 0.0
    for sysk in (_fair_window_system(), SkewSystem(
            "geodesic", model, parity_partition(model, [identity(2), parse_word("a", 2)]))):
        for _ in range(3):
            ray = sample_ray(2, 6, rng)
            worst = max(worst, smb.cesaro_identity_check(sysk, ray, 6))
    check("cesaro_identity", 1e-9, worst)

    # conditional entropy profile is nonincreasing
    worst = 0.0
    for _ in range(5):
        ray = sample_ray(2, 8, rng)
        prof = smb.conditional_entropy_profile(_fair_window_system(), ray, 8)
        worst = max(worst, float(np.diff(prof).max()))
    check("ck_nonincreasing", 1e-12, worst)

    # Seward bound never exceeds H(P)
    worst = 0.0
    sysw = _fair_window_system()
    for _ in range(10):
        F = [_random_word(rng, max_len=4) for _ in range(int(rng.integers(1, 5)))]
        worst = max(worst, smb.seward_bound(sysw, F) - smb.partition_entropy(sysw))
    check("seward_le_HP", 1e-12, worst)

    # maximal inequality, small sample
    rows_mi = smb.maximal_inequality_check(sysw, [1.0, 2.0], 2000, 40, seed + 7)
    check("maximal_inequality", 0, sum(r["violation"] for r in rows_mi))

    # deterministic random walk gives exactly H(p) per step
    zsys = SkewSystem("random-walk", zmodel, coordinate_partition(zmodel),
                      StepDistribution((parse_word("a", 2),), np.array([1.0])))
    traj = sample_rw_trajectory(zsys.walk, 60, rng)
    seq = smb.info_sequence(zsys, traj, zmodel.sample_point(rng), 60)
    check("rw_deterministic_exact", 1e-12,
          float(np.abs(seq.values - math.log(2)).max()))

    # sphere average of the fair coin is exactly log 2
    val, _ = smb.sphere_average(fsys, fair.sample_point(rng), 3, mode="exact")
    check("sphere_average_fair_exact", 1e-12, abs(val - math.log(2)))

    # skew map preserves cylinder x atom measures (one T-step)
    worst = 0.0
    for _ in range(10):
        win = sample_window(2, 0, 6, rng)
        x = model.sample_point(rng)
        gammas = [ReducedWord(2, win.letters[:j]) for j in range(3)]
        atom = atom_of(model, x, gammas, part)
        nu = ray_cylinder_prob(2, win.letters)
        mu = atom_measure_exact(model, atom)
        alpha = ReducedWord(2, (win.letters[0] ^ 1,))  # alpha(S y, y) = xi_0^{-1}
        moved = measure.RefinedAtom(tuple((multiply(alpha, h), p, c)
                                          for h, p, c in atom.items))
        nu_shift = ray_cylinder_prob(2, win.letters)  # shift keeps cylinder length
        worst = max(worst, abs(nu * mu - nu_shift * atom_measure_exact(model, moved)))
    check("skew_step_measure_preserving", 1e-12, worst)

    # estimator sanity: coordinate partition recovers H(p) with zero spread
    est = smb.orbital_entropy_estimate(fsys, "normalized-entropy", 50, 10, seed + 1)
    check("normalized_entropy_exact_path",
          1e-12, abs(est.value - math.log(2)) + est.stderr)

    return rows
