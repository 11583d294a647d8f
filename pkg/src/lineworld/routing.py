"""Greedy routing over line overlays, with failure recovery.

Two sidedness variants: two-sided greedy hands the message to the link
sink closest to the target (overshoot allowed); one-sided greedy never
crosses the target.  Equidistant two-sided candidates resolve to the
non-overshooting side, then to the lower position, so routes are
deterministic given the graph.

Two choice rules control what happens around dead nodes:

* probe (default for `route`): a node checks liveness before handing off
  and picks the best *live* improving candidate; it is stuck only when no
  live candidate improves on its own distance.
* commit (default for `greedy_step`, matching the strict protocol where
  liveness is only discovered on contact): a node picks the best candidate
  regardless of liveness and the search is stuck if that one choice turns
  out dead -- it never tries its second-best link.

Recovery strategies on a stuck search: terminate, restart at a random
live node, or backtrack through recently visited nodes, excluding the
choice that led into the dead end and taking the next-best link.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .linkgen import NodeId
from .overlay import OverlayGraph


class Sidedness(enum.Enum):
    ONE_SIDED = "one"
    TWO_SIDED = "two"


@dataclass(frozen=True)
class Terminate:
    """Give up on the first stuck node."""


@dataclass(frozen=True)
class RandomRestart:
    """Jump to a uniformly random live node and retry, up to max_restarts."""

    max_restarts: int = 10


@dataclass(frozen=True)
class Backtrack:
    """Return to the most recently visited node (keeping `history` of them),
    exclude the choice that failed there, and take the next-best link."""

    history: int = 5

    def __post_init__(self):
        if self.history < 1:
            raise ValueError("history must be >= 1")


RecoveryStrategy = Terminate | RandomRestart | Backtrack


class Status(enum.Enum):
    DELIVERED = "delivered"
    FAILED = "failed"


@dataclass
class RouteResult:
    status: Status
    hops: int
    backtracks: int = 0
    restarts: int = 0
    capped: bool = False
    path: list[int] | None = None

    @property
    def delivered(self) -> bool:
        return self.status is Status.DELIVERED


STUCK = None


def _best_candidate(adj: list[int], cur: int, dst: int, sidedness: Sidedness,
                    exclude) -> int | None:
    """Best sink by the greedy rule among `adj` (sorted), ignoring liveness.

    Returns None when no candidate strictly improves on cur's distance.
    """
    if sidedness is Sidedness.ONE_SIDED:
        # never cross dst: nearest candidate on cur's side of it
        if cur > dst:
            i = bisect_left(adj, dst)
            while i < len(adj) and adj[i] in exclude:
                i += 1
            if i < len(adj) and dst <= adj[i] < cur:
                return adj[i]
            return None
        i = bisect_left(adj, dst)
        # want largest adj <= dst
        i -= 0 if i < len(adj) and adj[i] == dst else 1
        while i >= 0 and adj[i] in exclude:
            i -= 1
        if i >= 0 and cur < adj[i] <= dst:
            return adj[i]
        return None

    # two-sided: the two sinks bracketing dst are the only argmin candidates
    if exclude:
        best, best_key = None, None
        for v in adj:
            if v in exclude:
                continue
            key = (abs(v - dst), 0 if (v - dst) * (cur - dst) > 0 or v == dst else 1, v)
            if best_key is None or key < best_key:
                best, best_key = v, key
        if best is None or abs(best - dst) >= abs(cur - dst):
            return None
        return best
    i = bisect_left(adj, dst)
    lo = adj[i - 1] if i > 0 else None
    hi = adj[i] if i < len(adj) else None
    if lo is None:
        best = hi
    elif hi is None:
        best = lo
    else:
        d_lo, d_hi = dst - lo, hi - dst
        if d_lo < d_hi:
            best = lo
        elif d_hi < d_lo:
            best = hi
        else:
            # tie: lo overshoots exactly when cur sits above dst
            best = lo if cur < dst else hi
    if best is None or abs(best - dst) >= abs(cur - dst):
        return None
    return best


def greedy_step(g: OverlayGraph, cur: NodeId, dst: NodeId, sidedness: Sidedness,
                exclude=frozenset(), probe: bool = False,
                symmetric: bool = False) -> NodeId | None:
    """One greedy hand-off from cur toward dst; None means stuck.

    With probe=False (the default) the node commits to its single best
    candidate and is stuck if that candidate is dead, with no second-best
    attempt.  With probe=True dead candidates are skipped and the best
    live improving candidate is chosen; stuck means no live candidate is
    strictly closer to dst than cur.  symmetric=True widens the candidate
    set to connections in either direction (in-links usable too).
    """
    if cur == dst:
        raise ValueError("already at destination")
    if not g.alive[cur]:
        raise ValueError("current node is dead")
    adj = g.neighbors(cur, symmetric)
    if not probe:
        best = _best_candidate(adj, cur, dst, sidedness, exclude)
        if best is None or not g.alive[best]:
            return STUCK
        return best
    if exclude:
        live = [v for v in adj if g.alive[v] and v not in exclude]
    else:
        live = [v for v in adj if g.alive[v]]
    return _best_candidate(live, cur, dst, sidedness, frozenset())


def default_max_hops(n: int) -> int:
    return max(8, int(4 * math.log2(n) ** 2))


def route(g: OverlayGraph, src: NodeId, dst: NodeId, sidedness: Sidedness = Sidedness.TWO_SIDED,
          strategy: RecoveryStrategy = Terminate(), max_hops: int | None = None,
          rng: np.random.Generator | None = None, probe: bool = True,
          symmetric: bool = False, record_path: bool = False) -> RouteResult:
    """Route a message greedily from src to dst, recovering per `strategy`.

    Backtrack moves count toward hops (restart jumps do not; hops from the
    new start accumulate); `backtracks` and `restarts` are also tallied
    separately so either accounting can be recovered.  Routes that exceed
    max_hops are Failed with capped=True.  Failure-sweep experiments run
    with symmetric=True (links model connections, usable both ways);
    bound-validation runs keep the directed default.
    """
    if not (g.alive[src] and g.alive[dst]):
        raise ValueError("endpoint dead")
    if max_hops is None:
        max_hops = default_max_hops(g.n)
    if isinstance(strategy, RandomRestart) and rng is None:
        raise ValueError("RandomRestart needs an rng")

    path = [src] if record_path else None
    cur = src
    hops = 0
    backtracks = 0
    restarts = 0
    # trail of (node, chosen sink) pairs, most recent last, for backtracking
    trail: list[tuple[int, int]] = []
    excluded: dict[int, set[int]] = {}

    def result(status, capped=False):
        return RouteResult(status, hops, backtracks, restarts, capped, path)

    while cur != dst:
        nxt = greedy_step(g, cur, dst, sidedness,
                          exclude=excluded.get(cur, frozenset()), probe=probe,
                          symmetric=symmetric)
        if nxt is not None:
            if hops + 1 > max_hops:
                return result(Status.FAILED, capped=True)
            if isinstance(strategy, Backtrack):
                trail.append((cur, nxt))
                if len(trail) > strategy.history:
                    trail.pop(0)
            cur = nxt
            hops += 1
            if record_path:
                path.append(cur)
            continue
        # stuck: recover
        if isinstance(strategy, Terminate):
            return result(Status.FAILED)
        if isinstance(strategy, RandomRestart):
            if restarts >= strategy.max_restarts:
                return result(Status.FAILED)
            live = g.live_sorted()
            cur = live[rng.integers(len(live))]
            restarts += 1
            if record_path:
                path.append(cur)
            continue
        # Backtrack
        if not trail:
            return result(Status.FAILED)
        prev, choice = trail.pop()
        excluded.setdefault(prev, set()).add(choice)
        if hops + 1 > max_hops:
            return result(Status.FAILED, capped=True)
        cur = prev
        hops += 1
        backtracks += 1
        if record_path:
            path.append(cur)
    return result(Status.DELIVERED)


def base_digits_nonzero(distance: int, b: int) -> int:
    """Number of nonzero base-b digits of `distance`."""
    count = 0
    while distance:
        if distance % b:
            count += 1
        distance //= b
    return count


def route_deterministic(g: OverlayGraph, src: NodeId, dst: NodeId, b: int,
                        max_hops: int | None = None,
                        powers_fallback: bool = False,
                        record_path: bool = False) -> RouteResult:
    """Digit routing on deterministic link sets.

    On the base-b scheme, a node at distance d with b^k <= d < b^{k+1}
    jumps the link spanning floor(d / b^k) * b^k, eliminating the most
    significant digit of the distance; hop count equals the number of
    nonzero base-b digits.  With powers_fallback=True (powers-of-b graphs
    under link failures) the node instead takes the largest surviving
    power of b not exceeding d; distance 1 is the immediate link and is
    always available.
    """
    if not (g.alive[src] and g.alive[dst]):
        raise ValueError("endpoint dead")
    if max_hops is None:
        max_hops = default_max_hops(g.n)
    path = [src] if record_path else None
    cur = src
    hops = 0
    while cur != dst:
        if hops + 1 > max_hops:
            return RouteResult(Status.FAILED, hops, capped=True, path=path)
        d = abs(dst - cur)
        sign = 1 if dst > cur else -1
        power = 1
        while power * b <= d:
            power *= b
        if powers_fallback:
            step = power
            while step > 1 and not g.has_long_link(cur, cur + sign * step):
                step //= b
        else:
            step = (d // power) * power
        cur += sign * step
        hops += 1
        if record_path:
            path.append(cur)
    return RouteResult(Status.DELIVERED, hops, path=path)
