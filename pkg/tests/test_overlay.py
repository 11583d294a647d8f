"""Overlay construction, failure injection, and the serialization contract."""

import math

import numpy as np
import pytest

from lineworld.linkgen import DeterministicBaseB, InversePowerLaw
from lineworld.overlay import (
    NO_NEIGHBOR,
    OverlayGraph,
    apply_link_failures,
    apply_node_failures,
    build,
    build_binomial_presence,
)


def test_build_degenerate_pair():
    g = build(2, InversePowerLaw(3), np.random.default_rng(0))
    assert g.right[0] == 1 and g.left[1] == 0
    assert g.left[0] == NO_NEIGHBOR and g.right[1] == NO_NEIGHBOR
    assert set(g.links[0]) == {1} and set(g.links[1]) == {0}


def test_build_rejects_tiny_line():
    with pytest.raises(ValueError):
        build(1, InversePowerLaw(1), np.random.default_rng(0))


def test_build_link_budget_exact():
    # with-replacement draws: every node stores exactly its quota
    n, ell = 2 ** 14, 14
    g = build(n, InversePowerLaw(ell), np.random.default_rng(1))
    assert sum(len(ls) for ls in g.links) == n * ell
    assert all(len(ls) == ell for ls in g.links)


def test_build_deterministic_links():
    g = build(8, DeterministicBaseB(2), np.random.default_rng(0))
    assert set(g.links[0]) == {1, 2, 4}


def test_build_immediate_links():
    g = build(50, InversePowerLaw(2), np.random.default_rng(2))
    for u in range(50):
        assert g.left[u] == (u - 1 if u > 0 else NO_NEIGHBOR)
        assert g.right[u] == (u + 1 if u < 49 else NO_NEIGHBOR)


def test_link_failures_identity_and_wipeout():
    rng = np.random.default_rng(3)
    g = build(200, InversePowerLaw(4), rng)
    before = g.dump_text()
    apply_link_failures(g, 1.0, rng)
    assert g.dump_text() == before
    apply_link_failures(g, 0.0, rng)
    assert all(not ls for ls in g.links)
    # immediate adjacency survives in full
    for u in range(200):
        assert g.left[u] == (u - 1 if u > 0 else NO_NEIGHBOR)
        assert g.right[u] == (u + 1 if u < 199 else NO_NEIGHBOR)


def test_link_failures_survival_rate():
    n, ell, p = 2 ** 12, 12, 0.5
    rng = np.random.default_rng(4)
    g = build(n, InversePowerLaw(ell), rng)
    apply_link_failures(g, p, rng)
    survivors = sum(len(ls) for ls in g.links)
    total = n * ell
    se = math.sqrt(total * p * (1 - p))
    assert abs(survivors - p * total) < 3 * se


def test_link_failures_preserve_immediate_adjacency():
    rng = np.random.default_rng(5)
    g = build(300, InversePowerLaw(3), rng)
    imm_before = [(int(g.left[u]), int(g.right[u])) for u in range(300)]
    apply_link_failures(g, 0.4, rng)
    assert [(int(g.left[u]), int(g.right[u])) for u in range(300)] == imm_before


def test_binomial_presence_full():
    g = build_binomial_presence(64, 1.0, InversePowerLaw(3), np.random.default_rng(6))
    assert g.alive.all()
    assert all(len(ls) == 3 for ls in g.links)
    for u in range(1, 63):
        assert g.left[u] == u - 1 and g.right[u] == u + 1


def test_binomial_presence_count_and_sinks():
    n, p = 2 ** 12, 0.5
    g = build_binomial_presence(n, p, InversePowerLaw(4), np.random.default_rng(7))
    present = int(g.alive.sum())
    se = math.sqrt(n * p * (1 - p))
    assert abs(present - p * n) < 3 * se
    for u in range(n):
        for v in g.links[u]:
            assert g.alive[v]
    # immediate links point at the nearest present neighbor
    live = np.flatnonzero(g.alive)
    for i, u in enumerate(live):
        assert g.left[u] == (live[i - 1] if i > 0 else NO_NEIGHBOR)
        assert g.right[u] == (live[i + 1] if i + 1 < len(live) else NO_NEIGHBOR)


def test_binomial_presence_too_small():
    with pytest.raises(ValueError, match="graph too small"):
        build_binomial_presence(16, 0.0, InversePowerLaw(1), np.random.default_rng(8))


def test_node_failures_identity_and_rate():
    rng = np.random.default_rng(9)
    g = build(2 ** 14, InversePowerLaw(3), rng)
    apply_node_failures(g, 0.0, rng)
    assert g.alive.all()
    links_before = [list(ls) for ls in g.links]
    apply_node_failures(g, 0.3, rng)
    dead = int((~g.alive).sum())
    se = math.sqrt(2 ** 14 * 0.3 * 0.7)
    assert abs(dead - 0.3 * 2 ** 14) < 3 * se
    assert [list(ls) for ls in g.links] == links_before


def test_build_reproducible():
    a = build(512, InversePowerLaw(5), np.random.default_rng(42))
    b = build(512, InversePowerLaw(5), np.random.default_rng(42))
    assert a.dump_text() == b.dump_text()
    c = build(512, InversePowerLaw(5), np.random.default_rng(43))
    assert a.dump_text() != c.dump_text()


def test_dump_format():
    g = build(4, InversePowerLaw(1), np.random.default_rng(0))
    lines = g.dump_text().splitlines()
    assert lines[0] == "lineworld-graph v1"
    assert lines[1] == "n=4"
    assert len(lines) == 6
    pos, alive, imm, longs = lines[2].split("\t")
    assert pos == "0" and alive == "1"


def test_symmetric_neighbors_include_in_links():
    g = OverlayGraph(10)
    g.alive[:] = True
    for u in range(10):
        g.left[u] = u - 1 if u > 0 else NO_NEIGHBOR
        g.right[u] = u + 1 if u < 9 else NO_NEIGHBOR
    g.add_link(2, 9)
    assert 9 in g.neighbors(2)
    assert 2 not in g.neighbors(9)
    assert 2 in g.neighbors(9, symmetric=True)
    # cache invalidation on replacement
    g.replace_link(2, 0, 7)
    assert 2 not in g.neighbors(9, symmetric=True)
    assert 2 in g.neighbors(7, symmetric=True)


def test_ages_track_creation_order():
    g = build(32, InversePowerLaw(5), np.random.default_rng(10))
    for u in range(32):
        assert g.ages[u] == sorted(g.ages[u])
        assert len(set(g.ages[u])) == len(g.ages[u])


def test_build_bernoulli_offsets():
    from lineworld.linkgen import BernoulliOffsets

    n = 256
    law = BernoulliOffsets({d: (1.0 if abs(d) < 3 else 0.25)
                            for d in range(-8, 9) if d != 0})
    g = build(n, law, np.random.default_rng(11))
    for u in range(n):
        for v in g.links[u]:
            assert 0 <= v < n and v != u
            assert abs(u - v) <= 8
        # forced unit offsets always present away from the ends
        if 1 <= u <= n - 2:
            assert {u - 1, u + 1} <= set(g.links[u])
    interior = [len(g.links[u]) for u in range(8, n - 8)]
    # expected size: 4 forced + 12 * 0.25 = 7
    assert abs(float(np.mean(interior)) - 7.0) < 0.5


def test_symmetric_cache_invalidated_by_link_failures():
    rng = np.random.default_rng(12)
    g = build(200, InversePowerLaw(5), rng)
    holder = next(u for u in range(200) if any(abs(u - v) > 50 for v in g.links[u]))
    sink = next(v for v in g.links[holder] if abs(holder - v) > 50)
    assert holder in g.neighbors(sink, symmetric=True)
    apply_link_failures(g, 0.0, rng)
    assert holder not in g.neighbors(sink, symmetric=True)
