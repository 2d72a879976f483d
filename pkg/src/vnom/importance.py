"""Partition screening on topic graphs and nomination trials on the survivors.

The pipeline draws uniform red/green vertex partitions, keeps those whose red
side is both denser (delta_rho) and topically distinct (delta_p, an L1 gap
between edge-topic profiles), maps each topic to red or green by the sign of
its profile difference, then repeatedly instantiates edge attributes from the
per-edge topic distributions and runs nomination.  Results aggregate into
(delta_rho, delta_p) bins.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import comb, floor

import numpy as np

from .errors import EmptyProfileError, InputError, UndefinedDensityError
from .graph import (GREEN, OCCLUDED, RED, AttributedGraph, Partition, TopicGraph)
from .metrics import AggregateReport, _mean_se, report_from_mask
from .nomination import fused_order
from .seeding import child_seed, generator

_SCREEN_BLOCK = 4096  # draws per derived seed; fixed so results never depend on scheduling


@dataclass(frozen=True)
class ScreeningThresholds:
    """Acceptance bars for the density gap and the topic-profile gap."""

    tau_rho: float = 0.1
    tau_p: float = 0.2


@dataclass(frozen=True)
class TopicMap:
    """Total map from topic index (0-based) to RED or GREEN."""

    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        if labels.ndim != 1 or labels.size < 2:
            raise InputError("topic map needs one label per topic (>= 2 topics)")
        if not np.isin(labels, (RED, GREEN)).all():
            raise InputError("topic labels must be RED or GREEN")
        object.__setattr__(self, "labels", labels)

    @property
    def k_topics(self) -> int:
        return int(self.labels.size)

    def red_topics(self) -> np.ndarray:
        return np.flatnonzero(self.labels == RED)


@dataclass(frozen=True)
class ScreenedPartition:
    """An accepted partition with its gaps, profiles, and derived topic map."""

    partition: Partition
    topic_map: TopicMap
    delta_rho: float
    delta_p: float
    profile_red: np.ndarray = field(repr=False)
    profile_green: np.ndarray = field(repr=False)
    draw_index: int = 0


@dataclass(frozen=True)
class ScreeningResult:
    accepted: tuple
    attempts: int
    thresholds: ScreeningThresholds

    @property
    def n_accepted(self) -> int:
        return len(self.accepted)

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.attempts if self.attempts else 0.0


@dataclass(frozen=True)
class EstimatedRates:
    """Edge-rate estimates from one attributed graph and partition."""

    p1: float
    p2: float
    s1: float
    s2: float


def _edge_weights(g: TopicGraph, weighted: bool) -> np.ndarray:
    if weighted:
        return g.topic_probs * g.message_count[:, None].astype(np.float64)
    return g.topic_probs.copy()


def topic_profile(g: TopicGraph, vs, *, weighted: bool = True) -> np.ndarray:
    """Empirical topic distribution of the subgraph induced by ``vs``.

    The mean of the per-edge topic distributions, weighted by message count
    (so the profile is the empirical distribution over messages); pass
    ``weighted=False`` to weight every edge equally.
    """
    vs = np.asarray(list(vs) if not isinstance(vs, np.ndarray) else vs, dtype=np.int64)
    mask = np.zeros(g.n, dtype=bool)
    if vs.size and (vs.min() < 0 or vs.max() >= g.n):
        raise InputError("unknown vertex id in subset")
    mask[vs] = True
    sel = mask[g.edge_u] & mask[g.edge_v]
    if not sel.any():
        raise EmptyProfileError("induced subgraph has no edges to profile")
    total = _edge_weights(g, weighted)[sel].sum(axis=0)
    return total / total.sum()


def delta_rho(g: TopicGraph, part: Partition) -> float:
    """Relative-density difference between the red-induced and green-induced
    subgraphs."""
    _check_partition(g, part)
    m = part.num_red
    n_green = g.n - m
    if m < 2 or n_green < 2:
        raise UndefinedDensityError("both partition sides need at least two vertices")
    red_mask = part.red_mask()
    ru, rv = red_mask[g.edge_u], red_mask[g.edge_v]
    red_edges = int(np.count_nonzero(ru & rv))
    green_edges = int(np.count_nonzero(~ru & ~rv))
    return red_edges / comb(m, 2) - green_edges / comb(n_green, 2)


def delta_p(g: TopicGraph, part: Partition, *, weighted: bool = True) -> float:
    """L1 distance between the red-side and green-side topic profiles."""
    _check_partition(g, part)
    pr = topic_profile(g, part.red_ids, weighted=weighted)
    pg = topic_profile(g, part.green_ids(), weighted=weighted)
    return float(np.abs(pr - pg).sum())


def _check_partition(g, part: Partition):
    if part.n != g.n:
        raise InputError(f"partition is over {part.n} vertices, graph has {g.n}")


def topic_map_from_profiles(profile_red, profile_green) -> TopicMap:
    """Topic goes red iff its red-side share strictly exceeds its green-side
    share; ties go green."""
    diff = np.asarray(profile_red) - np.asarray(profile_green)
    return TopicMap(np.where(diff > 0, RED, GREEN))


def screen_partitions(g: TopicGraph, m: int, thresholds: ScreeningThresholds,
                      max_attempts: int, seed, *, weighted: bool = True) -> ScreeningResult:
    """Draw uniform m-subsets as red sets; keep those passing both gaps.

    A draw is accepted iff delta_rho > tau_rho AND delta_p > tau_p (strict).
    A side that induces no edge weight has no observable topic differential:
    its profile is taken as the zero vector and the draw's delta_p as 0, so
    such draws never pass a positive tau_p.  Draw i is a pure function of
    (seed, i): draws are generated in fixed-size blocks with one derived seed
    per block, so the accepted list (ordered by draw index) is reproducible
    under any parallel schedule.  Zero acceptances is a valid outcome, not an
    error.
    """
    if not 2 <= m <= g.n - 2:
        raise InputError(f"m must lie in 2..{g.n - 2}, got {m}")
    if max_attempts < 1:
        raise InputError("max_attempts must be >= 1")
    tw = _edge_weights(g, weighted)
    eu, ev = g.edge_u, g.edge_v
    denom_red = comb(m, 2)
    denom_green = comb(g.n - m, 2)
    base = child_seed(seed)
    accepted = []
    n_blocks = -(-max_attempts // _SCREEN_BLOCK)
    for block in range(n_blocks):
        start = block * _SCREEN_BLOCK
        b = min(_SCREEN_BLOCK, max_attempts - start)
        rng = generator(child_seed(base, block))
        keys = rng.random((_SCREEN_BLOCK, g.n))[:b]
        chosen = np.argpartition(keys, m - 1, axis=1)[:, :m]
        red_mask = np.zeros((b, g.n), dtype=bool)
        red_mask[np.arange(b)[:, None], chosen] = True
        ru = red_mask[:, eu]
        rv = red_mask[:, ev]
        red_in = ru & rv
        green_in = ~ru & ~rv
        d_rho = red_in.sum(axis=1) / denom_red - green_in.sum(axis=1) / denom_green
        for row in np.flatnonzero(d_rho > thresholds.tau_rho):
            wr = tw[red_in[row]].sum(axis=0)
            wg = tw[green_in[row]].sum(axis=0)
            red_total, green_total = wr.sum(), wg.sum()
            pr = wr / red_total if red_total > 0.0 else np.zeros_like(wr)
            pg = wg / green_total if green_total > 0.0 else np.zeros_like(wg)
            if red_total > 0.0 and green_total > 0.0:
                d_p = float(np.abs(pr - pg).sum())
            else:
                d_p = 0.0
            if d_p > thresholds.tau_p:
                part = Partition(g.n, np.sort(chosen[row]))
                accepted.append(ScreenedPartition(
                    partition=part,
                    topic_map=topic_map_from_profiles(pr, pg),
                    delta_rho=float(d_rho[row]),
                    delta_p=d_p,
                    profile_red=pr,
                    profile_green=pg,
                    draw_index=start + int(row),
                ))
    return ScreeningResult(tuple(accepted), max_attempts, thresholds)


def _draw_edge_attrs(g: TopicGraph, topic_map: TopicMap, rng) -> np.ndarray:
    """One topic per edge from its distribution, mapped to RED/GREEN.

    Edges draw in stored (sorted-pair) order, one uniform each.
    """
    cum = np.cumsum(g.topic_probs, axis=1)
    u = rng.random(g.num_edges)
    topics = np.minimum((u[:, None] >= cum).sum(axis=1), g.k_topics - 1)
    return topic_map.labels[topics].astype(np.int64)


def instantiate_edges(g: TopicGraph, topic_map: TopicMap, part: Partition,
                      seed) -> AttributedGraph:
    """Attribute every edge by drawing its topic and mapping it to red/green.

    Topology is unchanged; vertex truth comes from the partition; the
    observed layer is fully occluded (identify vertices downstream).
    """
    if topic_map.k_topics != g.k_topics:
        raise InputError("topic map does not cover the graph's topics")
    _check_partition(g, part)
    attrs = _draw_edge_attrs(g, topic_map, generator(seed))
    observed = np.full(g.n, OCCLUDED, dtype=np.int8)
    # topic-graph edges are stored canonically already
    return AttributedGraph._from_canonical(g.n, g.edge_u, g.edge_v, attrs,
                                           part.truth_labels(), observed, k_edge_attrs=2)


def estimate_rates(g: AttributedGraph, part: Partition) -> EstimatedRates:
    """Proportion of within-side vertex pairs carrying each attribute.

    Red-edge and green-edge rates over the green-internal pairs give the
    background estimates; the same counts over red-internal pairs give the
    block estimates.  Cross-side edges count toward neither.
    """
    _check_partition(g, part)
    m = part.num_red
    n_green = g.n - m
    if m < 2 or n_green < 2:
        raise UndefinedDensityError("both partition sides need at least two vertices")
    red_mask = part.red_mask()
    ru, rv = red_mask[g.edge_u], red_mask[g.edge_v]
    red_in = ru & rv
    green_in = ~ru & ~rv
    attr = g.edge_attr
    return EstimatedRates(
        p1=int(np.count_nonzero(green_in & (attr == RED))) / comb(n_green, 2),
        p2=int(np.count_nonzero(green_in & (attr == GREEN))) / comb(n_green, 2),
        s1=int(np.count_nonzero(red_in & (attr == RED))) / comb(m, 2),
        s2=int(np.count_nonzero(red_in & (attr == GREEN))) / comb(m, 2),
    )


@dataclass(frozen=True)
class PartitionTrial:
    """Per-partition trial summary: metric means over its replicates."""

    index: int
    delta_rho: float
    delta_p: float
    mean_s_at_1: dict
    mean_rr: dict
    mean_ap: dict
    rates: EstimatedRates | None


@dataclass(frozen=True)
class BinReport:
    """Aggregate over every (partition, replicate) report falling in one bin."""

    rho_lo: float
    rho_hi: float
    p_lo: float
    p_hi: float
    n_partitions: int
    n_reports: int
    insufficient: bool
    per_gamma: dict  # gamma -> AggregateReport
    fusion_advantage_mrr: float | None


@dataclass(frozen=True)
class TrialsResult:
    bins: dict  # (rho_bin, p_bin) -> BinReport
    partitions: tuple
    gamma_grid: tuple
    m_prime: int
    replicates_per_partition: int
    bin_width: float
    min_partitions: int


def bin_index(value: float, width: float) -> int:
    """Index of the half-open bin [i*width, (i+1)*width) containing value."""
    return int(floor(round(value / width, 9)))


def _trial_partition(g: TopicGraph, sp: ScreenedPartition, ordinal: int, m_prime: int,
                     gamma_grid, replicates: int, base_seed, collect_rates: bool,
                     cum_topics: np.ndarray):
    """Raw metric values (reps x gammas x 3) and mean rates for one partition.

    Equivalent to instantiate_edges -> identify -> rank -> evaluate on an
    AttributedGraph, unrolled onto the shared edge arrays for speed.
    """
    part = sp.partition
    red_ids = part.red_ids
    n, eu, ev = g.n, g.edge_u, g.edge_v
    red_mask = part.red_mask()
    ru, rv = red_mask[eu], red_mask[ev]
    red_in = ru & rv
    green_in = ~ru & ~rv
    denom_red = comb(part.num_red, 2)
    denom_green = comb(n - part.num_red, 2)
    labels = sp.topic_map.labels
    values = np.empty((replicates, len(gamma_grid), 3))
    rate_sum = np.zeros(4)
    for rep in range(replicates):
        edge_seed, ident_seed, tie_seed = child_seed(base_seed, ordinal, rep).spawn(3)
        u = generator(edge_seed).random(eu.size)
        topics = np.minimum((u[:, None] >= cum_topics).sum(axis=1), g.k_topics - 1)
        attr = labels[topics]
        identified = np.sort(generator(ident_seed).choice(red_ids, size=m_prime,
                                                          replace=False))
        ident_mask = np.zeros(n, dtype=bool)
        ident_mask[identified] = True
        red_edge = attr == RED
        t1_all = (np.bincount(eu[red_edge], minlength=n)
                  + np.bincount(ev[red_edge], minlength=n))
        t0_all = (np.bincount(eu[ident_mask[ev]], minlength=n)
                  + np.bincount(ev[ident_mask[eu]], minlength=n))
        cand = np.flatnonzero(~ident_mask)
        t0, t1 = t0_all[cand], t1_all[cand]
        cand_red = red_mask[cand]
        tiebreak = generator(tie_seed).permutation(cand.size)
        for j, gamma in enumerate(gamma_grid):
            order, _, _ = fused_order(t0, t1, gamma, tiebreak)
            report = report_from_mask(cand_red[order])
            values[rep, j] = (report.s_at_1, report.rr, report.ap)
        if collect_rates:
            green_edge = attr == GREEN
            rate_sum += (np.count_nonzero(green_in & red_edge) / denom_green,
                         np.count_nonzero(green_in & green_edge) / denom_green,
                         np.count_nonzero(red_in & red_edge) / denom_red,
                         np.count_nonzero(red_in & green_edge) / denom_red)
    rates = None
    if collect_rates:
        mean = rate_sum / replicates
        rates = EstimatedRates(*map(float, mean))
    return values, rates


def _trial_block(args):
    g, block, m_prime, gamma_grid, replicates, seed, collect_rates = args
    cum_topics = np.cumsum(g.topic_probs, axis=1)
    return [
        _trial_partition(g, sp, ordinal, m_prime, gamma_grid, replicates, seed,
                         collect_rates, cum_topics)
        for ordinal, sp in block
    ]


def _aggregate_from_values(values: np.ndarray) -> AggregateReport:
    """AggregateReport from raw (reports x 3) metric values."""
    mean_s, se_s = _mean_se(values[:, 0])
    mean_rr, se_rr = _mean_se(values[:, 1])
    mean_ap, se_ap = _mean_se(values[:, 2])
    return AggregateReport(mean_s, mean_rr, mean_ap, se_s, se_rr, se_ap, values.shape[0])


def run_importance_trials(g: TopicGraph, accepted, m_prime: int, gamma_grid,
                          replicates_per_partition: int, seed, *,
                          bin_width: float = 0.1, min_partitions: int = 20,
                          collect_rates: bool = True,
                          n_workers: int = 1) -> TrialsResult:
    """Nomination trials over accepted partitions, aggregated into gap bins.

    For every accepted partition and replicate: instantiate edge attributes,
    identify a uniform m_prime-subset of the red set, occlude the rest, rank
    across the gamma grid, and evaluate.  Reports pool into half-open
    (delta_rho, delta_p) bins of the given width; bins backed by fewer than
    ``min_partitions`` partitions are flagged insufficient.  When the grid
    contains {0, 0.5, 1}, each bin also carries the fusion-advantage surface
    value min(MRR(0), MRR(1)) - MRR(0.5).
    """
    accepted = list(accepted)
    if not accepted:
        raise InputError("no accepted partitions to run trials on")
    grid = tuple(float(x) for x in gamma_grid)
    if not grid:
        raise InputError("gamma_grid must be non-empty")
    if replicates_per_partition < 1:
        raise InputError("replicates_per_partition must be >= 1")
    for sp in accepted:
        if not m_prime < sp.partition.num_red:
            raise InputError(
                f"m_prime={m_prime} must be smaller than the red set ({sp.partition.num_red})")
    if m_prime < 1:
        raise InputError("m_prime must be >= 1")
    base = child_seed(seed)

    work = list(enumerate(accepted))
    if n_workers > 1 and len(work) > 1:
        blocks = [work[i::n_workers] for i in range(n_workers)]
        args = [(g, block, m_prime, grid, replicates_per_partition, base, collect_rates)
                for block in blocks if block]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            block_results = list(pool.map(_trial_block, args))
        by_ordinal = {}
        for block, results in zip([b for b in blocks if b], block_results):
            for (ordinal, _), res in zip(block, results):
                by_ordinal[ordinal] = res
        raw = [by_ordinal[i] for i in range(len(work))]
    else:
        cum_topics = np.cumsum(g.topic_probs, axis=1)
        raw = [_trial_partition(g, sp, ordinal, m_prime, grid,
                                replicates_per_partition, base, collect_rates, cum_topics)
               for ordinal, sp in work]

    partitions = []
    bin_values: dict = {}
    bin_partitions: dict = {}
    for ordinal, (sp, (values, rates)) in enumerate(zip(accepted, raw)):
        partitions.append(PartitionTrial(
            index=sp.draw_index,
            delta_rho=sp.delta_rho,
            delta_p=sp.delta_p,
            mean_s_at_1={gm: float(values[:, j, 0].mean()) for j, gm in enumerate(grid)},
            mean_rr={gm: float(values[:, j, 1].mean()) for j, gm in enumerate(grid)},
            mean_ap={gm: float(values[:, j, 2].mean()) for j, gm in enumerate(grid)},
            rates=rates,
        ))
        key = (bin_index(sp.delta_rho, bin_width), bin_index(sp.delta_p, bin_width))
        bin_values.setdefault(key, []).append(values)
        bin_partitions[key] = bin_partitions.get(key, 0) + 1

    has_triple = all(any(x == want for x in grid) for want in (0.0, 0.5, 1.0))
    bins = {}
    for key in sorted(bin_values):
        stacked = np.concatenate(bin_values[key], axis=0)  # (reports, gammas, 3)
        per_gamma = {gm: _aggregate_from_values(stacked[:, j, :])
                     for j, gm in enumerate(grid)}
        advantage = None
        if has_triple:
            advantage = (min(per_gamma[0.0].mrr, per_gamma[1.0].mrr)
                         - per_gamma[0.5].mrr)
        n_parts = bin_partitions[key]
        bins[key] = BinReport(
            rho_lo=key[0] * bin_width, rho_hi=(key[0] + 1) * bin_width,
            p_lo=key[1] * bin_width, p_hi=(key[1] + 1) * bin_width,
            n_partitions=n_parts,
            n_reports=stacked.shape[0],
            insufficient=n_parts < min_partitions,
            per_gamma=per_gamma,
            fusion_advantage_mrr=advantage,
        )
    return TrialsResult(bins, tuple(partitions), grid, m_prime,
                        replicates_per_partition, bin_width, min_partitions)
