"""Long-distance link generation for nodes on a line.

Nodes sit at integer grid positions 0..n-1 and measure distance as
``|u - v|`` (no wraparound).  Every node keeps links to its immediate
neighbors; the schemes here generate the *long-distance* links:

* inverse power-law with exponent 1: a sink at distance d is drawn with
  probability proportional to 1/d (harmonic normalization),
* deterministic base-b: sinks at j*b^i in both directions,
* powers of b: sinks at b^i in both directions,
* Bernoulli offset sets: each offset included independently with its own
  probability (offsets -1 and +1 are always included).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NodeId = int


@dataclass(frozen=True)
class InversePowerLaw:
    """Draw `links` sinks per node, with replacement, ~ 1/distance."""

    links: int

    def __post_init__(self):
        if self.links < 1:
            raise ValueError("links must be >= 1")


@dataclass(frozen=True)
class DeterministicBaseB:
    """Sinks at distances j*b^i, j in [1, b-1], both directions."""

    base: int

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")


@dataclass(frozen=True)
class PowersOfB:
    """Sinks at distances b^0, b^1, ..., b^floor(log_b n), both directions."""

    base: int

    def __post_init__(self):
        if self.base < 2:
            raise ValueError("base must be >= 2")


@dataclass(frozen=True)
class BernoulliOffsets:
    """Independent inclusion of each signed offset delta with probability p[delta].

    Offsets +1 and -1 must be included with probability 1.  For the two-sided
    interval-chain machinery the map should additionally be symmetric
    (p[d] == p[-d]) and unimodal (nonincreasing in |d|); `validate_two_sided`
    checks that.
    """

    inclusion: dict = field(default_factory=dict)

    def __post_init__(self):
        p = dict(self.inclusion)
        for delta, prob in p.items():
            if delta == 0:
                raise ValueError("offset 0 is not a link")
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"inclusion probability for {delta} outside [0,1]")
        if p.get(1) != 1.0 or p.get(-1) != 1.0:
            raise ValueError("offsets +1 and -1 must have inclusion probability 1")
        object.__setattr__(self, "inclusion", p)

    def validate_two_sided(self):
        p = self.inclusion
        deltas = sorted(d for d in p if d > 0)
        for d in deltas:
            if p.get(-d, 0.0) != p[d]:
                raise ValueError("inclusion map must be symmetric for two-sided use")
        for lo, hi in zip(deltas, deltas[1:]):
            if p[hi] > p[lo] + 1e-12:
                raise ValueError("inclusion map must be unimodal for two-sided use")

    def expected_size(self) -> float:
        return float(sum(self.inclusion.values()))


LinkDistribution = InversePowerLaw | DeterministicBaseB | PowersOfB | BernoulliOffsets


def harmonic_numbers(n: int) -> np.ndarray:
    """Prefix sums H[d] = 1 + 1/2 + ... + 1/d, with H[0] = 0."""
    h = np.zeros(n + 1)
    if n >= 1:
        np.cumsum(1.0 / np.arange(1, n + 1), out=h[1:])
    return h


def harmonic_number(n: int) -> float:
    return float(np.sum(1.0 / np.arange(1, n + 1))) if n >= 1 else 0.0


def harmonic_weights(u: NodeId, population) -> dict[NodeId, float]:
    """Probability of each candidate sink v != u, proportional to 1/|u-v|.

    `population` is any iterable of positions containing u and at least one
    other node.  Weights are strictly positive and sum to 1.
    """
    candidates = np.asarray(sorted(set(int(v) for v in population) - {int(u)}), dtype=np.int64)
    if candidates.size == 0:
        raise ValueError("no candidate sinks")
    w = 1.0 / np.abs(candidates - int(u))
    w /= w.sum()
    return {int(v): float(p) for v, p in zip(candidates, w)}


def sample_long_links(u: NodeId, population, links: int, rng: np.random.Generator) -> list[NodeId]:
    """Draw `links` sinks independently with replacement ~ 1/|u-v|.

    Duplicates are returned as drawn; deduplication is the graph layer's
    concern.
    """
    if links < 1:
        raise ValueError("links must be >= 1")
    candidates = np.asarray(sorted(set(int(v) for v in population) - {int(u)}), dtype=np.int64)
    if candidates.size == 0:
        raise ValueError("no candidate sinks")
    w = 1.0 / np.abs(candidates - int(u))
    cum = np.cumsum(w)
    r = rng.random(links) * cum[-1]
    idx = np.searchsorted(cum, r, side="right")
    return [int(v) for v in candidates[idx]]


def sample_line_links(u: NodeId, n: int, links: int, rng: np.random.Generator,
                      harmonic_prefix: np.ndarray | None = None) -> list[NodeId]:
    """Fast path of `sample_long_links` for the full line population 0..n-1.

    Inverse-CDF sampling against a shared harmonic prefix table; O(log n)
    per draw instead of O(n) set-up per node.
    """
    if links < 1:
        raise ValueError("links must be >= 1")
    if n < 2:
        raise ValueError("no candidate sinks")
    h = harmonic_prefix if harmonic_prefix is not None else harmonic_numbers(n)
    left, right = u, n - 1 - u
    total = h[left] + h[right]
    r = rng.random(links) * total
    sinks = np.empty(links, dtype=np.int64)
    on_left = r < h[left]
    d_left = np.searchsorted(h[: left + 1], r[on_left], side="left")
    sinks[on_left] = u - np.maximum(d_left, 1)
    d_right = np.searchsorted(h[: right + 1], (r[~on_left] - h[left]), side="left")
    sinks[~on_left] = u + np.maximum(d_right, 1)
    return [int(v) for v in sinks]


def ceil_log(n: int, b: int) -> int:
    """Smallest k with b**k >= n."""
    k, power = 0, 1
    while power < n:
        power *= b
        k += 1
    return k


def floor_log(n: int, b: int) -> int:
    """Largest k with b**k <= n."""
    k, power = 0, b
    while power <= n:
        power *= b
        k += 1
    return k


def deterministic_links(u: NodeId, n: int, b: int) -> set[NodeId]:
    """Sinks at u +/- j*b^i for j in [1, b-1], i in [0, ceil(log_b n) - 1].

    Out-of-line sinks are clipped away; the distance-1 sink duplicates the
    immediate neighbor and is kept here (the graph layer deduplicates).
    """
    if b < 2:
        raise ValueError("base must be >= 2")
    sinks: set[NodeId] = set()
    for i in range(ceil_log(n, b)):
        step = b ** i
        for j in range(1, b):
            for v in (u - j * step, u + j * step):
                if 0 <= v < n and v != u:
                    sinks.add(v)
    return sinks


def power_links(u: NodeId, n: int, b: int) -> set[NodeId]:
    """Sinks at u +/- b^i for i in [0, floor(log_b n)], clipped to the line."""
    if b < 2:
        raise ValueError("base must be >= 2")
    sinks: set[NodeId] = set()
    for i in range(floor_log(n, b) + 1):
        step = b ** i
        for v in (u - step, u + step):
            if 0 <= v < n and v != u:
                sinks.add(v)
    return sinks


def sample_offsets(dist: BernoulliOffsets, rng: np.random.Generator,
                   truncate_at: int | None = None) -> np.ndarray:
    """Sample one offset set: each delta kept independently w.p. p[delta].

    +1 and -1 are always present.  Returns the offsets sorted ascending.
    Offsets with |delta| > truncate_at are unusable on a line of that
    radius and are dropped before sampling.
    """
    deltas = []
    probs = []
    for d, p in dist.inclusion.items():
        if truncate_at is not None and abs(d) > truncate_at:
            continue
        deltas.append(d)
        probs.append(p)
    deltas = np.asarray(deltas, dtype=np.int64)
    probs = np.asarray(probs)
    keep = rng.random(len(deltas)) < probs
    out = np.sort(deltas[keep])
    return out


def poisson_sample(rate: float, rng: np.random.Generator) -> int:
    """One Poisson(rate) draw; Pr[k] = e^-rate * rate^k / k!."""
    if not rate > 0:
        raise ValueError("rate must be positive")
    return int(rng.poisson(rate))


def ideal_length_distribution(n: int) -> np.ndarray:
    """Exact link-length law of the inverse power-law scheme on a full line.

    Entry d (1 <= d <= n-1) is the probability that one link drawn by a
    uniformly random node has length d, accounting for boundary truncation:
    a node at position u reaches distance d on 1 or 2 sides depending on
    room.  Index 0 is unused (zero).
    """
    h = harmonic_numbers(n - 1)
    # node u draws from weight mass h[u] + h[n-1-u]
    inv_mass = 1.0 / (h[np.arange(n)] + h[n - 1 - np.arange(n)])
    prefix = np.concatenate(([0.0], np.cumsum(inv_mass)))
    out = np.zeros(n)
    d = np.arange(1, n)
    # positions with u >= d reach distance d leftward: u in [d, n-1];
    # positions with u <= n-1-d reach it rightward: u in [0, n-1-d].
    left = prefix[n] - prefix[d]
    right = prefix[n - d]
    out[1:] = (left + right) / (d * n)
    return out
