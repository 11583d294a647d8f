"""Experiment orchestration: seeded batch runs emitting CSV.

Every trial owns an rng stream derived from (master seed, experiment code,
configuration indices, trial index), and aggregation reduces per-trial
integer accumulators in trial order, so output bytes are identical for any
worker count.  Statistics (hop mean/stddev, backtrack and restart means)
are computed over successful routes only.

CSV schemas (column order fixed):

* failures / compare rows:
  experiment,n,links,base,p,strategy,trials,messages,delivered,failed,
  capped,mean_hops,std_hops,mean_backtracks,mean_restarts,seed
* distribution rows: experiment,n,links,seed,distance,ideal,derived,abs_error
* scaling rows: experiment,n,links,base,dist,trials,messages,mean_hops,
  stderr_hops,max_hops_observed,seed
* chains rows: experiment,n,sidedness,t,tv_distance,samples,seed
* bounds rows: experiment,n,links,sidedness,lower_bound,sim_mean_hops,
  upper_bound,trials,messages,seed
"""

from __future__ import annotations

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import analysis, dynamics, linkgen, overlay, routing
from .linkgen import BernoulliOffsets, DeterministicBaseB, InversePowerLaw, PowersOfB
from .routing import Backtrack, RandomRestart, Sidedness, Terminate

EXP_CODES = {"failures": 1, "distribution": 2, "scaling": 3, "compare": 4,
             "chains": 5, "bounds": 6, "build": 7, "route": 8}

FAILURES_HEADER = ("experiment,n,links,base,p,strategy,trials,messages,delivered,"
                   "failed,capped,mean_hops,std_hops,mean_backtracks,mean_restarts,seed")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int = 2 ** 14
    links: int = 14
    base: int = 2
    dist: str = "power1"  # power1 | detbase | powers | bernoulli
    p_grid: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    strategies: tuple[str, ...] = ("terminate", "restart", "backtrack")
    history: int = 5
    max_restarts: int = 10
    trials: int = 100
    messages: int = 100
    max_hops: int | None = None
    seed: int = 0
    out: str | None = None
    workers: int = 1
    repetitions: int = 10
    n_values: tuple[int, ...] = ()
    link_values: tuple[int, ...] = ()
    samples: int = 10 ** 5
    t_max: int = 8
    sidedness: str = "two"  # one | two
    probe: bool = True
    link_mode: str | None = None  # directed | symmetric; default per experiment
    failure_model: str = "node"  # node | link | binomial
    policy: str = "inverse_distance"  # inverse_distance | oldest

    def symmetric_links(self) -> bool:
        """Failure experiments treat links as connections (usable both
        ways); scaling and bound validation keep the directed model the
        theory analyzes."""
        if self.link_mode is not None:
            return self.link_mode == "symmetric"
        return self.experiment in ("failures", "compare")

    def validate(self) -> None:
        if self.experiment not in EXP_CODES:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(not 0.0 <= p <= 1.0 for p in self.p_grid):
            raise ValueError("p grid entries must lie in [0,1]")
        if self.dist not in ("power1", "detbase", "powers", "bernoulli"):
            raise ValueError(f"unknown distribution {self.dist!r}")
        if self.link_mode not in (None, "directed", "symmetric"):
            raise ValueError(f"unknown link mode {self.link_mode!r}")
        if self.failure_model not in ("node", "link", "binomial"):
            raise ValueError(f"unknown failure model {self.failure_model!r}")
        for s in self.strategies:
            if s not in ("terminate", "restart", "backtrack"):
                raise ValueError(f"unknown strategy {s!r}")


@dataclass
class TrialStats:
    """Exact accumulators for one batch of routed messages."""

    delivered: int = 0
    failed: int = 0
    capped: int = 0
    hop_sum: int = 0
    hop_sq_sum: int = 0
    backtrack_sum: int = 0
    restart_sum: int = 0
    hop_max: int = 0

    def record(self, res: routing.RouteResult) -> None:
        if res.delivered:
            self.delivered += 1
            self.hop_sum += res.hops
            self.hop_sq_sum += res.hops * res.hops
            self.backtrack_sum += res.backtracks
            self.restart_sum += res.restarts
            self.hop_max = max(self.hop_max, res.hops)
        else:
            self.failed += 1
            if res.capped:
                self.capped += 1

    def merge(self, other: "TrialStats") -> None:
        self.delivered += other.delivered
        self.failed += other.failed
        self.capped += other.capped
        self.hop_sum += other.hop_sum
        self.hop_sq_sum += other.hop_sq_sum
        self.backtrack_sum += other.backtrack_sum
        self.restart_sum += other.restart_sum
        self.hop_max = max(self.hop_max, other.hop_max)

    @property
    def attempted(self) -> int:
        return self.delivered + self.failed

    @property
    def mean_hops(self) -> float:
        return self.hop_sum / self.delivered if self.delivered else float("nan")

    @property
    def std_hops(self) -> float:
        if not self.delivered:
            return float("nan")
        m = self.mean_hops
        return math.sqrt(max(0.0, self.hop_sq_sum / self.delivered - m * m))

    @property
    def stderr_hops(self) -> float:
        return self.std_hops / math.sqrt(self.delivered) if self.delivered else float("nan")

    @property
    def failed_fraction(self) -> float:
        return self.failed / self.attempted if self.attempted else float("nan")


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.6f}"


def trial_rng(seed: int, experiment: str, *indices: int) -> np.random.Generator:
    return np.random.default_rng([seed, EXP_CODES[experiment], *indices])


def make_distribution(config: ExperimentConfig, links: int | None = None,
                      base: int | None = None) -> linkgen.LinkDistribution:
    ell = links if links is not None else config.links
    b = base if base is not None else config.base
    if config.dist == "power1":
        return InversePowerLaw(ell)
    if config.dist == "detbase":
        return DeterministicBaseB(b)
    if config.dist == "powers":
        return PowersOfB(b)
    return BernoulliOffsets(power_law_inclusion(config.n, ell).inclusion)


def power_law_inclusion(n: int, links: int) -> BernoulliOffsets:
    """Offset inclusion map of the multi-link inverse power-law scheme:
    each of `links` with-replacement draws picks offset d w.p.
    (1/|d|) / (2 H_{n-1}), so d is included w.p. 1-(1-q_d)**links."""
    h = linkgen.harmonic_number(n - 1)
    inclusion = {1: 1.0, -1: 1.0}
    for d in range(2, n):
        q = (1.0 / d) / (2.0 * h)
        p = 1.0 - (1.0 - q) ** links
        inclusion[d] = p
        inclusion[-d] = p
    return BernoulliOffsets(inclusion)


def make_strategy(name: str, config: ExperimentConfig) -> routing.RecoveryStrategy:
    if name == "terminate":
        return Terminate()
    if name == "restart":
        return RandomRestart(config.max_restarts)
    return Backtrack(config.history)


def _sidedness(config: ExperimentConfig) -> Sidedness:
    return Sidedness.ONE_SIDED if config.sidedness == "one" else Sidedness.TWO_SIDED


def _map_ordered(fn, count: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def route_batch(g: overlay.OverlayGraph, messages: int, strategy: routing.RecoveryStrategy,
                rng: np.random.Generator, config: ExperimentConfig) -> TrialStats:
    """Route `messages` between uniformly chosen distinct live pairs."""
    stats = TrialStats()
    live = g.live_sorted()
    if len(live) < 2:
        return stats
    side = _sidedness(config)
    symmetric = config.symmetric_links()
    for _ in range(messages):
        i = int(rng.integers(len(live)))
        j = int(rng.integers(len(live) - 1))
        if j >= i:
            j += 1
        res = routing.route(g, live[i], live[j], side, strategy,
                            max_hops=config.max_hops, rng=rng, probe=config.probe,
                            symmetric=symmetric)
        stats.record(res)
    return stats


# ---------------------------------------------------------------------------
# experiments


def _failed_graph(config: ExperimentConfig, p: float,
                  rng: np.random.Generator) -> overlay.OverlayGraph | None:
    """Fresh graph under the configured failure model.  For the node model
    p is the failure fraction; for link and binomial-presence models it is
    the survival/presence probability.  None when too few nodes exist."""
    dist = make_distribution(config)
    if config.failure_model == "binomial":
        try:
            return overlay.build_binomial_presence(config.n, p, dist, rng)
        except ValueError:
            return None
    g = overlay.build(config.n, dist, rng)
    if config.failure_model == "link":
        return overlay.apply_link_failures(g, p, rng)
    return overlay.apply_node_failures(g, p, rng)


def run_failures(config: ExperimentConfig) -> list[str]:
    """Failure sweep: fresh graph per trial under the configured failure
    model, routing between live pairs under each recovery strategy."""
    config.validate()
    rows = []
    for pi, p in enumerate(config.p_grid):
        for si, strat_name in enumerate(config.strategies):
            def one_trial(t: int, _p=p, _pi=pi, _si=si, _strat=strat_name) -> TrialStats:
                rng = trial_rng(config.seed, "failures", _pi, _si, t)
                g = _failed_graph(config, _p, rng)
                if g is None:
                    return TrialStats()
                return route_batch(g, config.messages, make_strategy(_strat, config),
                                   rng, config)

            total = TrialStats()
            for st in _map_ordered(one_trial, config.trials, config.workers):
                total.merge(st)
            rows.append(_failures_row(config, "failures", p, strat_name, total))
    return rows


def _failures_row(config: ExperimentConfig, experiment: str, p: float,
                  strategy: str, s: TrialStats) -> str:
    return ",".join([
        experiment, str(config.n), str(config.links), str(config.base),
        _fmt(p), strategy, str(config.trials), str(config.messages),
        str(s.delivered), str(s.failed), str(s.capped),
        _fmt(s.mean_hops), _fmt(s.std_hops),
        _fmt(s.backtrack_sum / s.delivered if s.delivered else float("nan")),
        _fmt(s.restart_sum / s.delivered if s.delivered else float("nan")),
        str(config.seed),
    ])


def build_by_joins(n: int, links: int, policy: dynamics.ReplacementPolicy,
                   rng: np.random.Generator) -> overlay.OverlayGraph:
    """Grow an overlay from empty by joining every position in random order."""
    g = overlay.OverlayGraph(n)
    h = linkgen.harmonic_numbers(n - 1)
    order = rng.permutation(n)
    dynamics.join(g, int(order[0]), links, policy, rng, harmonic_prefix=h)
    for v in order[1:]:
        dynamics.join(g, int(v), links, policy, rng, harmonic_prefix=h)
    return g


def link_length_histogram(g: overlay.OverlayGraph) -> np.ndarray:
    """Normalized distribution of long-link lengths, index = length."""
    counts = np.zeros(g.n)
    total = 0
    for u in range(g.n):
        for v in g.links[u]:
            counts[abs(u - v)] += 1
            total += 1
    return counts / total if total else counts


def run_distribution(config: ExperimentConfig) -> list[str]:
    """Sequential-join construction fidelity: averaged link-length law of
    heuristic builds, against the exact inverse-distance law."""
    config.validate()
    policy = (dynamics.ReplacementPolicy.OLDEST if config.policy == "oldest"
              else dynamics.ReplacementPolicy.INVERSE_DISTANCE)

    def one_rep(r: int) -> np.ndarray:
        rng = trial_rng(config.seed, "distribution", r)
        g = build_by_joins(config.n, config.links, policy, rng)
        return link_length_histogram(g)

    hists = _map_ordered(one_rep, config.repetitions, config.workers)
    derived = np.mean(hists, axis=0)
    ideal = linkgen.ideal_length_distribution(config.n)
    rows = []
    for d in range(1, config.n):
        rows.append(",".join([
            "distribution", str(config.n), str(config.links), str(config.seed),
            str(d), f"{ideal[d]:.12f}", f"{derived[d]:.12f}",
            f"{abs(ideal[d] - derived[d]):.12f}",
        ]))
    return rows


def run_scaling(config: ExperimentConfig) -> list[str]:
    """Hop-count sweeps on ideal failure-free graphs."""
    config.validate()
    n_values = config.n_values or (config.n,)
    link_values = config.link_values or (config.links,)
    rows = []
    for ni, n in enumerate(n_values):
        for li, ell in enumerate(link_values):
            cfg = replace(config, n=n, links=ell)

            def one_trial(t: int, _cfg=cfg, _ni=ni, _li=li) -> TrialStats:
                rng = trial_rng(config.seed, "scaling", _ni, _li, t)
                dist = make_distribution(_cfg)
                g = overlay.build(_cfg.n, dist, rng)
                if _cfg.dist in ("detbase", "powers"):
                    return _deterministic_batch(g, _cfg, rng)
                return route_batch(g, _cfg.messages, Terminate(), rng, _cfg)

            total = TrialStats()
            for st in _map_ordered(one_trial, config.trials, config.workers):
                total.merge(st)
            link_count = _nominal_links(cfg)
            rows.append(",".join([
                "scaling", str(n), str(link_count), str(config.base), config.dist,
                str(config.trials), str(config.messages),
                _fmt(total.mean_hops), _fmt(total.stderr_hops),
                str(total.hop_max), str(config.seed),
            ]))
    return rows


def _nominal_links(config: ExperimentConfig) -> int:
    if config.dist == "detbase":
        return (config.base - 1) * linkgen.ceil_log(config.n, config.base)
    if config.dist == "powers":
        return linkgen.floor_log(config.n, config.base) + 1
    return config.links


def _deterministic_batch(g: overlay.OverlayGraph, config: ExperimentConfig,
                         rng: np.random.Generator) -> TrialStats:
    stats = TrialStats()
    fallback = config.dist == "powers"
    for _ in range(config.messages):
        i = int(rng.integers(g.n))
        j = int(rng.integers(g.n - 1))
        if j >= i:
            j += 1
        res = routing.route_deterministic(g, i, j, config.base,
                                          max_hops=config.max_hops,
                                          powers_fallback=fallback)
        stats.record(res)
    return stats


def run_compare(config: ExperimentConfig) -> list[str]:
    """Ideal-built vs join-built overlays under node failures."""
    config.validate()
    strat_name = config.strategies[0]
    policy = (dynamics.ReplacementPolicy.OLDEST if config.policy == "oldest"
              else dynamics.ReplacementPolicy.INVERSE_DISTANCE)

    def one_rep(r: int) -> tuple[list[TrialStats], list[TrialStats]]:
        rng = trial_rng(config.seed, "compare", r)
        ideal = overlay.build(config.n, InversePowerLaw(config.links), rng)
        grown = build_by_joins(config.n, config.links, policy, rng)
        out_ideal, out_grown = [], []
        for pi, p in enumerate(config.p_grid):
            for g, acc in ((ideal, out_ideal), (grown, out_grown)):
                g.alive[:] = True
                g._live_sorted = None
                p_rng = trial_rng(config.seed, "compare", r, pi, 0 if acc is out_ideal else 1)
                overlay.apply_node_failures(g, p, p_rng)
                acc.append(route_batch(g, config.messages,
                                       make_strategy(strat_name, config), p_rng, config))
        return out_ideal, out_grown

    reps = _map_ordered(one_rep, config.repetitions, config.workers)
    rows = []
    for pi, p in enumerate(config.p_grid):
        for label, pick in (("compare_ideal", 0), ("compare_heuristic", 1)):
            total = TrialStats()
            for rep in reps:
                total.merge(rep[pick][pi])
            cfg = replace(config, trials=config.repetitions)
            rows.append(_failures_row(cfg, label, p, strat_name, total))
    return rows


def run_chains(config: ExperimentConfig) -> list[str]:
    """Chain-equivalence oracle: TV distance between point-chain and
    interval-chain marginals, per step."""
    config.validate()
    inclusion = BernoulliOffsets(
        {d: 1.0 / abs(d) for d in range(-config.n, config.n + 1) if d != 0})
    side = _sidedness(config)
    rng = trial_rng(config.seed, "chains", 0)
    tv = analysis.chain_equivalence_tv(config.n, inclusion, side,
                                       config.t_max, config.samples, rng)
    rows = []
    for t, v in enumerate(tv):
        rows.append(",".join([
            "chains", str(config.n), config.sidedness, str(t), f"{v:.6f}",
            str(config.samples), str(config.seed),
        ]))
    return rows


def run_bounds(config: ExperimentConfig) -> list[str]:
    """Bound sandwich: closed-form lower bound, simulated mean hops to a
    boundary target, and the drift-integral upper bound (single link)."""
    config.validate()
    side = _sidedness(config)
    lower = analysis.mean_lower_bound(analysis.LowerBoundConfig(
        n=config.n, sidedness=side,
        inclusion=power_law_inclusion(config.n, config.links)))
    upper = (analysis.karp_upper_bound(analysis.single_link_profile(config.n - 1, 0))
             if config.links == 1 else float("nan"))

    def one_trial(t: int) -> TrialStats:
        rng = trial_rng(config.seed, "bounds", t)
        g = overlay.build(config.n, InversePowerLaw(config.links), rng)
        stats = TrialStats()
        for _ in range(config.messages):
            src = int(rng.integers(1, config.n))
            stats.record(routing.route(g, src, 0, side, Terminate(),
                                       max_hops=config.max_hops, probe=config.probe))
        return stats

    total = TrialStats()
    for st in _map_ordered(one_trial, config.trials, config.workers):
        total.merge(st)
    return [",".join([
        "bounds", str(config.n), str(config.links), config.sidedness,
        _fmt(lower), _fmt(total.mean_hops), _fmt(upper),
        str(config.trials), str(config.messages), str(config.seed),
    ])]


HEADERS = {
    "failures": FAILURES_HEADER,
    "compare": FAILURES_HEADER,
    "distribution": "experiment,n,links,seed,distance,ideal,derived,abs_error",
    "scaling": ("experiment,n,links,base,dist,trials,messages,mean_hops,"
                "stderr_hops,max_hops_observed,seed"),
    "chains": "experiment,n,sidedness,t,tv_distance,samples,seed",
    "bounds": ("experiment,n,links,sidedness,lower_bound,sim_mean_hops,"
               "upper_bound,trials,messages,seed"),
}

RUNNERS = {
    "failures": run_failures,
    "distribution": run_distribution,
    "scaling": run_scaling,
    "compare": run_compare,
    "chains": run_chains,
    "bounds": run_bounds,
}


def run_experiment(config: ExperimentConfig) -> str:
    """Run one experiment and return its CSV text (header + rows)."""
    rows = RUNNERS[config.experiment](config)
    return "\n".join([HEADERS[config.experiment]] + rows) + "\n"


def emit(csv_text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(csv_text)
    else:
        with open(out, "w") as f:
            f.write(csv_text)
