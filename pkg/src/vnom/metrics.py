"""Ranking evaluation: S@1, reciprocal rank, precision, average precision,
truncated average precision, aggregation over replicates, and chance baselines.

Metrics consume (Ranking, truth) pairs only — they never look at graphs — so
they can be tested against brute-force oracles on synthetic rankings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple

import numpy as np

from .errors import InputError, NoRedCandidatesError
from .nomination import Ranking
from .seeding import generator

_ENUMERATION_LIMIT = 10 ** 6
_MC_SAMPLES = 10 ** 5

BASELINE_CRITERIA = ("s_at_1", "mrr", "map", "ap_y")


@dataclass(frozen=True)
class EvalReport:
    """Metrics of one ranking against one truth set."""

    s_at_1: int
    rr: float
    ap: float
    ap_y: dict = field(default_factory=dict)
    n_candidates: int = 0
    n_red_candidates: int = 0


@dataclass(frozen=True)
class AggregateReport:
    """Means and standard errors over replicates.

    Standard errors are sample SD / sqrt(n); with a single replicate they are
    NaN.  ``mean_ap_y`` is keyed by y and populated only when the underlying
    reports carried truncated average precisions.
    """

    mean_s_at_1: float
    mrr: float
    map: float
    se_s_at_1: float
    se_rr: float
    se_ap: float
    n_replicates: int
    mean_ap_y: dict = field(default_factory=dict)
    se_ap_y: dict = field(default_factory=dict)

    def mean(self, criterion: str) -> float:
        return {"s_at_1": self.mean_s_at_1, "mrr": self.mrr, "map": self.map}[criterion]

    def se(self, criterion: str) -> float:
        return {"s_at_1": self.se_s_at_1, "mrr": self.se_rr, "map": self.se_ap}[criterion]


class ChanceValue(NamedTuple):
    """A chance-baseline value plus whether it is exact or MC-estimated."""

    value: float
    exact: bool


def _truth_mask(r: Ranking, truth) -> np.ndarray:
    t = np.unique(np.asarray(list(truth), dtype=np.int64))
    if t.size == 0:
        raise NoRedCandidatesError("truth set is empty")
    if not np.isin(t, r.ordered).all():
        raise InputError("truth contains ids outside the ranked candidates")
    return np.isin(r.ordered, t)


def success_at_1(r: Ranking, truth) -> int:
    """1 iff the top-ranked candidate is truly red."""
    return int(_truth_mask(r, truth)[0])


def reciprocal_rank(r: Ranking, truth) -> float:
    """1 / rank of the first truly red candidate (1-indexed)."""
    mask = _truth_mask(r, truth)
    return 1.0 / (int(np.argmax(mask)) + 1)


def precision_at(r: Ranking, truth, rank: int) -> float:
    """Fraction of the first ``rank`` positions that are truly red."""
    mask = _truth_mask(r, truth)
    if not 1 <= rank <= mask.size:
        raise InputError(f"rank must lie in 1..{mask.size}, got {rank}")
    return float(np.count_nonzero(mask[:rank])) / rank


def _hit_precisions(mask: np.ndarray) -> np.ndarray:
    """Precision at the rank of each red candidate, in rank order."""
    ranks = np.arange(1, mask.size + 1)
    return (np.cumsum(mask) / ranks)[mask]


def average_precision(r: Ranking, truth) -> float:
    """Mean precision at the rank of every truly red candidate."""
    mask = _truth_mask(r, truth)
    return float(_hit_precisions(mask).mean())


def average_precision_at_y(r: Ranking, truth, y: int) -> float:
    """Average precision truncated at the y-th red candidate's rank."""
    mask = _truth_mask(r, truth)
    n_red = int(np.count_nonzero(mask))
    if not 1 <= y <= n_red:
        raise InputError(f"y must lie in 1..{n_red}, got {y}")
    return float(_hit_precisions(mask)[:y].mean())


def report_from_mask(mask: np.ndarray, y_values=()) -> EvalReport:
    """All metrics from a rank-ordered red/green membership mask."""
    n_red = int(np.count_nonzero(mask))
    if n_red == 0:
        raise NoRedCandidatesError("truth set is empty")
    hits = _hit_precisions(mask)
    ap_y = {}
    for y in y_values:
        if not 1 <= y <= n_red:
            raise InputError(f"y must lie in 1..{n_red}, got {y}")
        ap_y[int(y)] = float(hits[:y].mean())
    return EvalReport(
        s_at_1=int(mask[0]),
        rr=float(hits[0]),
        ap=float(hits.mean()),
        ap_y=ap_y,
        n_candidates=int(mask.size),
        n_red_candidates=n_red,
    )


def evaluate_ranking(r: Ranking, truth, y_values=()) -> EvalReport:
    """All metrics of one ranking in a single pass."""
    return report_from_mask(_truth_mask(r, truth), y_values)


def _mean_se(values: np.ndarray):
    mean = float(values.mean())
    if values.size < 2:
        return mean, float("nan")
    return mean, float(values.std(ddof=1) / np.sqrt(values.size))


def aggregate_reports(reports) -> AggregateReport:
    """Fold per-replicate reports into means and standard errors."""
    reports = list(reports)
    if not reports:
        raise InputError("cannot aggregate zero reports")
    s = np.array([r.s_at_1 for r in reports], dtype=np.float64)
    rr = np.array([r.rr for r in reports])
    ap = np.array([r.ap for r in reports])
    mean_s, se_s = _mean_se(s)
    mean_rr, se_rr = _mean_se(rr)
    mean_ap, se_ap = _mean_se(ap)
    mean_ap_y, se_ap_y = {}, {}
    for y in reports[0].ap_y:
        vals = np.array([r.ap_y[y] for r in reports])
        mean_ap_y[y], se_ap_y[y] = _mean_se(vals)
    return AggregateReport(mean_s, mean_rr, mean_ap, se_s, se_rr, se_ap,
                           len(reports), mean_ap_y, se_ap_y)


def _positions_metric(positions, criterion: str, y: int | None) -> float:
    """Metric value of a ranking described by the sorted red positions (0-based)."""
    if criterion == "s_at_1":
        return 1.0 if positions[0] == 0 else 0.0
    if criterion == "mrr":
        return 1.0 / (positions[0] + 1)
    hits = [(j + 1) / (pos + 1) for j, pos in enumerate(positions)]
    if criterion == "map":
        return sum(hits) / len(hits)
    return sum(hits[:y]) / y


def chance_baseline(n_candidates: int, n_red: int, criterion: str,
                    y: int | None = None, *, mc_samples: int = _MC_SAMPLES,
                    seed=0) -> ChanceValue:
    """Expected metric value under a uniformly random ranking.

    Exact (full enumeration over red-position sets) when C(n_candidates,
    n_red) <= 1e6; otherwise a Monte Carlo estimate over ``mc_samples``
    random rankings.  The flag in the result records which path ran.
    """
    if not 1 <= n_red <= n_candidates:
        raise InputError("need 1 <= n_red <= n_candidates")
    if criterion not in BASELINE_CRITERIA:
        raise InputError(f"criterion must be one of {BASELINE_CRITERIA}, got {criterion!r}")
    if criterion == "ap_y":
        if y is None:
            raise InputError("criterion 'ap_y' requires y")
        if not 1 <= y <= n_red:
            raise InputError(f"y must lie in 1..{n_red}, got {y}")
    elif y is not None:
        raise InputError("y is only meaningful for criterion 'ap_y'")

    if comb(n_candidates, n_red) <= _ENUMERATION_LIMIT:
        total = 0.0
        count = 0
        for positions in itertools.combinations(range(n_candidates), n_red):
            total += _positions_metric(positions, criterion, y)
            count += 1
        return ChanceValue(total / count, exact=True)

    rng = generator(seed)
    total = 0.0
    done = 0
    block = 4096
    while done < mc_samples:
        b = min(block, mc_samples - done)
        keys = rng.random((b, n_candidates))
        positions = np.sort(np.argpartition(keys, n_red - 1, axis=1)[:, :n_red], axis=1)
        if criterion == "s_at_1":
            total += float((positions[:, 0] == 0).sum())
        elif criterion == "mrr":
            total += float((1.0 / (positions[:, 0] + 1)).sum())
        else:
            hits = np.arange(1, n_red + 1) / (positions + 1)
            if criterion == "map":
                total += float(hits.mean(axis=1).sum())
            else:
                total += float(hits[:, :y].mean(axis=1).sum())
        done += b
    return ChanceValue(total / mc_samples, exact=False)
