"""Acceptance suite: one test per criterion, one printed verdict line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
Criteria 7 and 8 also exist at full scale (n = 2^17) behind the `longrun`
marker; enable with LINEWORLD_LONGRUN=1.

Known shortfalls, kept deliberately red rather than loosened:

* criterion 3: the inverse-links speedup law holds within 50% only up to
  about 4 links per node at n = 2^14; at 16 links greedy routing sits a
  small factor above the reachability floor log n / log links, so the
  measured normalized ratio is ~2.3, outside the stated 1.5x window.
* criterion 8, both scales: with the literal five-entry backtrack trail the
  failed fraction measures 0.358 +- 0.003 at n=2^14 (threshold 0.35) and
  0.31-0.33 at n=2^17 (threshold 0.30).  A six-entry trail measures
  0.30 / 0.26 and would pass both, so the shortfall sits inside the
  bookkeeping ambiguity of "keep track of 5 nodes"; the literal reading is
  kept.

The full-scale terminate sweep (criterion 7 longrun) passes: failed
fraction 0.023 / 0.061 / 0.107 / 0.178 / 0.293 / 0.427 / 0.638 for
p = 0.1 .. 0.7 at n = 2^17.
"""

import math

import numpy as np
import pytest

import lineworld as lw
from lineworld.analysis import (
    Interval,
    LowerBoundConfig,
    chain_equivalence_tv,
    karp_upper_bound,
    mean_lower_bound,
    single_link_profile,
    step_interval,
)
from lineworld.harness import (
    ExperimentConfig,
    build_by_joins,
    link_length_histogram,
    power_law_inclusion,
    run_experiment,
)
from lineworld.dynamics import ReplacementPolicy
from lineworld.linkgen import (
    BernoulliOffsets,
    InversePowerLaw,
    harmonic_number,
    ideal_length_distribution,
    sample_offsets,
)
from lineworld.routing import Backtrack, Sidedness, Terminate, base_digits_nonzero

ONE = Sidedness.ONE_SIDED
TWO = Sidedness.TWO_SIDED


def verdict(num: int, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {num:>2} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {num}: {detail}"


def random_pair(rng, count):
    i = int(rng.integers(count))
    j = int(rng.integers(count - 1))
    return (i, j + 1) if j >= i else (i, j)


def mean_hops_ideal(n, ell, routes, seed, sidedness=TWO, graphs=10, p_link=1.0):
    rng = np.random.default_rng([seed])
    total = cnt = 0
    cap = 8 * int(math.log2(n)) ** 2
    for _ in range(graphs):
        g = lw.build(n, InversePowerLaw(ell), rng)
        if p_link < 1.0:
            lw.apply_link_failures(g, p_link, rng)
        for _ in range(routes // graphs):
            s, d = random_pair(rng, n)
            res = lw.route(g, s, d, sidedness, max_hops=cap)
            if res.delivered:
                total += res.hops
                cnt += 1
    assert cnt == graphs * (routes // graphs)
    return total / cnt


def failed_fraction(n, ell, p_fail, strategy, routes, seed, graphs):
    rng = np.random.default_rng([seed])
    fails = attempts = 0
    for _ in range(graphs):
        g = lw.build(n, InversePowerLaw(ell), rng)
        lw.apply_node_failures(g, p_fail, rng)
        live = g.live_sorted()
        for _ in range(routes // graphs):
            i, j = random_pair(rng, len(live))
            res = lw.route(g, live[i], live[j], TWO, strategy, rng=rng,
                           probe=True, symmetric=True)
            fails += not res.delivered
            attempts += 1
    return fails / attempts


def test_criterion_1_no_failure_delivery():
    n, ell, routes = 2 ** 14, 17, 100_000
    g = lw.build(n, InversePowerLaw(ell), np.random.default_rng([101]))
    rng = np.random.default_rng([102])
    fails = 0
    for _ in range(routes):
        s, d = random_pair(rng, n)
        fails += not lw.route(g, s, d).delivered
    verdict(1, fails == 0, f"{routes} routes at n=2^14, links=17: {fails} failed")


def test_criterion_2_single_link_scaling():
    ratios = {}
    ok = True
    for n in (2 ** 8, 2 ** 10, 2 ** 12, 2 ** 14):
        mean = mean_hops_ideal(n, 1, 10_000, seed=200 + n)
        hn2 = harmonic_number(n) ** 2
        ratios[n] = mean / hn2
        ok &= mean <= 2 * hn2
    spread = max(ratios.values()) / min(ratios.values())
    ok &= spread < 2.0
    verdict(2, ok, "mean/H_n^2 by n: "
            + ", ".join(f"2^{n.bit_length() - 1}:{r:.3f}" for n, r in ratios.items())
            + f"; spread {spread:.2f} (<2), all means <= 2*H_n^2")


def test_criterion_3_multi_link_inverse_scaling():
    # measured speedup from 1 to 16 links is ~7x, not 16x within 1.5x:
    # at 16 links the mean sits near the log n / log links floor, so this
    # window is not reachable; kept as stated and red
    n = 2 ** 14
    m1 = mean_hops_ideal(n, 1, 10_000, seed=301)
    m16 = mean_hops_ideal(n, 16, 10_000, seed=302)
    lo, hi = m1 / 16 / 1.5, m1 / 16 * 1.5
    ok = lo <= m16 <= hi
    verdict(3, ok, f"mean(16 links)={m16:.2f} vs window [{lo:.2f}, {hi:.2f}] "
                   f"from mean(1 link)={m1:.2f}")


def test_criterion_4_deterministic_digit_exactness():
    n, b = 2 ** 10, 2
    g = lw.build(n, lw.DeterministicBaseB(b), np.random.default_rng([401]))
    worst = 0
    for s in range(n):
        for d in range(n):
            if s == d:
                continue
            res = lw.route_deterministic(g, s, d, b)
            if not res.delivered or res.hops != base_digits_nonzero(abs(s - d), b):
                verdict(4, False, f"pair {s}->{d}: hops {res.hops}")
            worst = max(worst, res.hops)
    verdict(4, worst <= 10, f"all {n * (n - 1)} pairs match nonzero-digit "
                            f"counts; max hops {worst} <= 10")


def test_criterion_5_link_failure_slowdown():
    n, ell = 2 ** 14, 14
    m_full = mean_hops_ideal(n, ell, 20_000, seed=501, graphs=20)
    m_half = mean_hops_ideal(n, ell, 20_000, seed=502, graphs=20, p_link=0.5)
    ratio = m_half / m_full
    ok = 1.5 <= ratio <= 2.7
    verdict(5, ok, f"mean hops p=0.5 / p=1.0 = {m_half:.2f}/{m_full:.2f} "
                   f"= {ratio:.3f} in [1.5, 2.7]")


def test_criterion_6_binomial_presence_matches_reduced_line():
    n, p = 2 ** 12, 0.5
    rng = np.random.default_rng([601])
    cap = 8 * int(math.log2(n)) ** 2
    sums = {"binomial": [0, 0], "reduced": [0, 0]}
    for _ in range(8):
        gb = lw.build_binomial_presence(n, p, InversePowerLaw(1), rng)
        live = gb.live_sorted()
        for _ in range(1500):
            i, j = random_pair(rng, len(live))
            res = lw.route(gb, live[i], live[j], max_hops=cap)
            if res.delivered:
                sums["binomial"][0] += res.hops
                sums["binomial"][1] += 1
        gi = lw.build(len(live), InversePowerLaw(1), rng)
        for _ in range(1500):
            s, d = random_pair(rng, len(live))
            res = lw.route(gi, s, d, max_hops=cap)
            if res.delivered:
                sums["reduced"][0] += res.hops
                sums["reduced"][1] += 1
    mb = sums["binomial"][0] / sums["binomial"][1]
    mi = sums["reduced"][0] / sums["reduced"][1]
    rel = abs(mb - mi) / mi
    verdict(6, rel <= 0.20, f"binomial-presence mean {mb:.2f} vs reduced-line "
                            f"mean {mi:.2f}: {rel:.1%} <= 20%")


def test_criterion_7_terminate_below_p_desk():
    n, ell = 2 ** 14, 14
    report = []
    ok = True
    for p in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7):
        frac = failed_fraction(n, ell, p, Terminate(), routes=9800,
                               seed=int(700 + 10 * p), graphs=14)
        report.append(f"p={p}: {frac:.3f}")
        ok &= frac < p
    verdict(7, ok, "terminate failed fraction vs p at n=2^14: " + "; ".join(report))


@pytest.mark.longrun
def test_criterion_7_terminate_below_p_full_scale():
    n, ell = 2 ** 17, 17
    report = []
    ok = True
    for p in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7):
        frac = failed_fraction(n, ell, p, Terminate(), routes=10_000,
                               seed=int(750 + 10 * p), graphs=10)
        report.append(f"p={p}: {frac:.3f}")
        ok &= frac < p
    verdict(7, ok, "terminate failed fraction vs p at n=2^17: " + "; ".join(report))


def test_criterion_8_backtracking_desk():
    # measures ~0.358 under the literal 5-node trail; see module docstring
    n, ell, p = 2 ** 14, 14, 0.8
    frac = failed_fraction(n, ell, p, Backtrack(history=5), routes=30_000,
                           seed=801, graphs=30)
    verdict(8, frac < 0.35, f"backtracking at p=0.8, n=2^14: failed "
                            f"fraction {frac:.3f} < 0.35")


@pytest.mark.longrun
def test_criterion_8_backtracking_full_scale():
    # measured ~0.31 under the literal 5-node trail; see module docstring
    n, ell, p = 2 ** 17, 17, 0.8
    frac = failed_fraction(n, ell, p, Backtrack(history=5), routes=20_000,
                           seed=802, graphs=10)
    verdict(8, frac < 0.30, f"backtracking at p=0.8, n=2^17: failed "
                            f"fraction {frac:.3f} < 0.30")


def test_criterion_9_join_heuristic_fidelity():
    n, ell, reps = 2 ** 14, 14, 10
    rng = np.random.default_rng([901])
    hists = []
    for _ in range(reps):
        g = build_by_joins(n, ell, ReplacementPolicy.INVERSE_DISTANCE, rng)
        hists.append(link_length_histogram(g))
    derived = np.mean(hists, axis=0)
    ideal = ideal_length_distribution(n)[:derived.size]
    err = float(np.abs(derived - ideal).max())
    at = int(np.abs(derived - ideal).argmax())
    verdict(9, err <= 0.03, f"max |derived-ideal| over {reps} builds = "
                            f"{err:.4f} at length {at} (<= 0.03)")


def test_criterion_10_chain_equivalence():
    n = 16
    law = BernoulliOffsets({d: 1.0 / abs(d) for d in range(-n, n + 1) if d != 0})
    worst = 0.0
    for side in (ONE, TWO):
        tv = chain_equivalence_tv(n, law, side, t_max=8, samples=100_000,
                                  rng=np.random.default_rng([1001]))
        worst = max(worst, float(tv.max()))
    verdict(10, worst < 0.02, f"max TV point-chain vs interval-chain over "
                              f"t<=8, both sidedness: {worst:.4f} < 0.02")


def test_criterion_11_interval_max_drop():
    n = 64
    law = BernoulliOffsets({d: 1.0 / abs(d) for d in range(-n, n + 1) if d != 0})
    ell = law.expected_size()
    rng = np.random.default_rng([1101])
    targets = (2, 4, 8, 16)
    drops = {a: 0 for a in targets}
    eligible = {a: 0 for a in targets}
    state = Interval(1, n)
    steps = 100_000
    for _ in range(steps):
        offs = sample_offsets(law, rng, truncate_at=n)
        nxt = step_interval(state, offs, TWO, rng)
        for a in targets:
            if state.size >= a:
                eligible[a] += 1
                drops[a] += nxt.size <= state.size / a
        state = Interval(1, n) if nxt.absorbed else nxt
    ok = True
    report = []
    for a in targets:
        frac = drops[a] / max(1, eligible[a])
        bound = 3 * ell / a
        report.append(f"a={a}: {frac:.3f}<={bound:.2f}")
        ok &= frac <= bound
    verdict(11, ok, f"interval shrink probabilities ({steps} steps): " + "; ".join(report))


def test_criterion_12_bound_sandwich():
    n = 2 ** 12
    lower = mean_lower_bound(LowerBoundConfig(
        n=n, sidedness=ONE, inclusion=power_law_inclusion(n, 1)))
    upper = karp_upper_bound(single_link_profile(n - 1, 0))
    rng = np.random.default_rng([1201])
    total = cnt = 0
    cap = 8 * int(math.log2(n)) ** 2
    for _ in range(10):
        g = lw.build(n, InversePowerLaw(1), rng)
        for _ in range(300):
            src = int(rng.integers(1, n))
            res = lw.route(g, src, 0, ONE, max_hops=cap)
            if res.delivered:
                total += res.hops
                cnt += 1
    sim = total / cnt
    ok = lower <= sim <= upper
    verdict(12, ok, f"{lower:.3f} <= simulated {sim:.2f} <= {upper:.2f} "
                    f"(n=2^12, one long link, one-sided)")


def test_criterion_13_reproducible_csv():
    base = dict(experiment="failures", n=2 ** 10, links=10, trials=6, messages=50,
                p_grid=(0.0, 0.4, 0.8), strategies=("terminate", "restart", "backtrack"),
                seed=1301)
    serial = run_experiment(ExperimentConfig(**base))
    threaded = run_experiment(ExperimentConfig(**base, workers=4))
    again = run_experiment(ExperimentConfig(**base, workers=2))
    ok = serial == threaded == again
    cmp_base = dict(experiment="compare", n=2 ** 9, links=6, repetitions=4,
                    messages=40, p_grid=(0.0, 0.5), strategies=("terminate",),
                    seed=1302)
    cmp_serial = run_experiment(ExperimentConfig(**cmp_base))
    cmp_threaded = run_experiment(ExperimentConfig(**cmp_base, workers=4))
    ok &= cmp_serial == cmp_threaded
    verdict(13, ok, "byte-identical CSV for 1, 2, 4 workers (failures) and "
                    "1, 4 workers (compare)")
