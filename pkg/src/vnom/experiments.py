"""Monte Carlo harness: replicate evaluation, parameter sweeps, gamma surfaces.

Determinism contract: every replicate's seed is derived from the master seed
and the replicate's coordinates (cell m, m_prime, replicate index), never from
execution order, so results are bit-identical across worker counts.  Within a
replicate the same sampled graph and the same tie-break stream are reused
across every gamma (paired comparison).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .graph import RED
from .kidney_egg import KidneyEggParams, Simplex3, sample_kidney_egg
from .metrics import aggregate_reports, report_from_mask
from .nomination import CRITERIA, candidate_statistics, fused_order
from .seeding import as_seed_sequence, child_seed, generator


@dataclass(frozen=True)
class ReplicateResult:
    """Per-gamma evaluation of one sampled graph."""

    reports: dict  # gamma -> EvalReport
    edge_checksum: int


@dataclass(frozen=True)
class SweepSpec:
    """A sweep over m (and derived m_prime) for fixed n, p, s.

    ``m_prime_ratio`` applies round-half-up to ratio*m and clamps into
    [1, m-1]; alternatively give ``m_prime_values`` aligned with ``m_values``.
    Infeasible (n, m, m_prime) combinations are skipped and reported.
    """

    n: int
    p: Simplex3
    s: Simplex3
    m_values: tuple
    gamma_grid: tuple
    replicates: int
    master_seed: int
    m_prime_ratio: float | None = None
    m_prime_values: tuple | None = None
    enforce_s2_eq_p2: bool = False
    y_values: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "p", Simplex3.of(self.p))
        object.__setattr__(self, "s", Simplex3.of(self.s))
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        object.__setattr__(self, "gamma_grid", tuple(float(g) for g in self.gamma_grid))
        if self.m_prime_values is not None:
            object.__setattr__(self, "m_prime_values",
                               tuple(int(v) for v in self.m_prime_values))
        if not self.m_values:
            raise InputError("m_values must be non-empty")
        if not self.gamma_grid:
            raise InputError("gamma_grid must be non-empty")
        if self.replicates < 1:
            raise InputError("replicates must be >= 1")
        has_ratio = self.m_prime_ratio is not None
        has_list = self.m_prime_values is not None
        if has_ratio == has_list:
            raise InputError("give exactly one of m_prime_ratio or m_prime_values")
        if has_ratio and not 0.0 < self.m_prime_ratio < 1.0:
            raise InputError("m_prime_ratio must lie in (0, 1)")
        if has_list and len(self.m_prime_values) != len(self.m_values):
            raise InputError("m_prime_values must align with m_values")
        if self.enforce_s2_eq_p2 and abs(self.s.q2 - self.p.q2) > 1e-12:
            raise InputError("sweep requires s2 == p2 but the vectors differ")

    def cells(self):
        """(m, m_prime, skip_reason) for every requested cell."""
        out = []
        for i, m in enumerate(self.m_values):
            if self.m_prime_ratio is not None:
                mp = int(np.floor(self.m_prime_ratio * m + 0.5))  # round half up
                mp = max(1, min(mp, m - 1))
            else:
                mp = self.m_prime_values[i]
            reason = None
            if not self.n > m:
                reason = f"m={m} must be smaller than n={self.n}"
            elif not m > mp >= 1:
                reason = f"need m > m_prime >= 1, got m={m}, m_prime={mp}"
            out.append((m, mp, reason))
        return out


@dataclass(frozen=True)
class CellResult:
    """Aggregated metrics of one (m, m_prime) cell."""

    m: int
    m_prime: int
    reports: dict  # gamma -> AggregateReport
    gamma_star: dict  # criterion -> gamma
    replicates: int


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    cells: tuple
    skipped: tuple  # (m, m_prime, reason)


@dataclass(frozen=True)
class SurfaceResult:
    """Mean truncated average precision per (y, gamma), plus MRR/MAP rows."""

    gamma_grid: tuple
    y_values: tuple
    ap_y_mean: np.ndarray = field(repr=False)  # (len(y_values), len(gamma_grid))
    ap_y_se: np.ndarray = field(repr=False)
    mrr_mean: np.ndarray = field(repr=False)
    mrr_se: np.ndarray = field(repr=False)
    map_mean: np.ndarray = field(repr=False)
    map_se: np.ndarray = field(repr=False)
    replicates: int = 0


def _replicate_reports(params: KidneyEggParams, gamma_grid, rep_seed, y_values):
    """One sampled graph evaluated at every gamma with a shared tie stream."""
    sample_seed, tie_seed = as_seed_sequence(rep_seed).spawn(2)
    g = sample_kidney_egg(params, sample_seed)
    cand, t0, t1 = candidate_statistics(g)
    tiebreak = generator(tie_seed).permutation(cand.size)
    cand_red = g.truth[cand] == RED  # every candidate is occluded, so red <=> red candidate
    reports = {}
    for gamma in gamma_grid:
        order, _, _ = fused_order(t0, t1, gamma, tiebreak)
        reports[float(gamma)] = report_from_mask(cand_red[order], y_values)
    return reports, g.edge_checksum()


def run_replicate(params: KidneyEggParams, gamma_grid, seed, y_values=()) -> ReplicateResult:
    """Sample one graph and evaluate the whole gamma grid on it."""
    grid = tuple(float(g) for g in gamma_grid)
    if not grid:
        raise InputError("gamma_grid must be non-empty")
    reports, checksum = _replicate_reports(params, grid, child_seed(seed), y_values)
    return ReplicateResult(reports, checksum)


def _gamma_star_from_aggregates(gamma_grid, aggregates) -> dict:
    """Per-criterion argmax over the grid, ties toward the smallest gamma."""
    out = {}
    for criterion in CRITERIA:
        means = [aggregates[g].mean(criterion) for g in gamma_grid]
        best = max(means)
        out[criterion] = min(g for g, v in zip(gamma_grid, means) if v == best)
    return out


def _run_cell(spec: SweepSpec, m: int, m_prime: int) -> CellResult:
    params = KidneyEggParams(spec.n, m, m_prime, spec.p, spec.s)
    per_gamma = {g: [] for g in spec.gamma_grid}
    for rep in range(spec.replicates):
        rep_seed = np.random.SeedSequence(entropy=spec.master_seed,
                                          spawn_key=(m, m_prime, rep))
        reports, _ = _replicate_reports(params, spec.gamma_grid, rep_seed, spec.y_values)
        for g in spec.gamma_grid:
            per_gamma[g].append(reports[g])
    aggregates = {g: aggregate_reports(reps) for g, reps in per_gamma.items()}
    return CellResult(m, m_prime, aggregates,
                      _gamma_star_from_aggregates(spec.gamma_grid, aggregates),
                      spec.replicates)


def run_sweep(spec: SweepSpec, n_workers: int = 1) -> SweepResult:
    """Evaluate every feasible cell of the sweep.

    Cells run in parallel when ``n_workers > 1``; output is keyed by cell and
    independent of scheduling.
    """
    feasible = []
    skipped = []
    for m, mp, reason in spec.cells():
        if reason is None:
            feasible.append((m, mp))
        else:
            skipped.append((m, mp, reason))
    if n_workers > 1 and len(feasible) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            cells = list(pool.map(_run_cell, [spec] * len(feasible),
                                  [m for m, _ in feasible], [mp for _, mp in feasible]))
    else:
        cells = [_run_cell(spec, m, mp) for m, mp in feasible]
    return SweepResult(spec, tuple(cells), tuple(skipped))


def gamma_surface(params: KidneyEggParams, gamma_grid, y_max: int,
                  replicates: int, seed) -> SurfaceResult:
    """Mean truncated average precision for y in 1..y_max across the grid.

    The y=1 row equals the MRR row identically: the precision at the first
    red candidate's rank is its reciprocal rank.
    """
    grid = tuple(float(g) for g in gamma_grid)
    if not grid:
        raise InputError("gamma_grid must be non-empty")
    if replicates < 1:
        raise InputError("replicates must be >= 1")
    n_red_candidates = params.m - params.m_prime
    if not 1 <= y_max <= n_red_candidates:
        raise InputError(
            f"y_max must lie in 1..{n_red_candidates} (red candidates), got {y_max}")
    y_values = tuple(range(1, y_max + 1))
    base = child_seed(seed)
    per_gamma = {g: [] for g in grid}
    for rep in range(replicates):
        reports, _ = _replicate_reports(params, grid, child_seed(base, rep), y_values)
        for g in grid:
            per_gamma[g].append(reports[g])
    aggregates = {g: aggregate_reports(reps) for g, reps in per_gamma.items()}
    ap_y_mean = np.array([[aggregates[g].mean_ap_y[y] for g in grid] for y in y_values])
    ap_y_se = np.array([[aggregates[g].se_ap_y[y] for g in grid] for y in y_values])
    return SurfaceResult(
        gamma_grid=grid,
        y_values=y_values,
        ap_y_mean=ap_y_mean,
        ap_y_se=ap_y_se,
        mrr_mean=np.array([aggregates[g].mrr for g in grid]),
        mrr_se=np.array([aggregates[g].se_rr for g in grid]),
        map_mean=np.array([aggregates[g].map for g in grid]),
        map_se=np.array([aggregates[g].se_ap for g in grid]),
        replicates=replicates,
    )
