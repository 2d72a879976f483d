"""Monte Carlo harness: replicates, sweeps, surfaces, determinism."""

import numpy as np
import pytest

from vnom import (InputError, KidneyEggParams, Simplex3, SweepSpec, evaluate_ranking,
                  gamma_surface, rank_candidates, run_replicate, run_sweep,
                  sample_kidney_egg)
from vnom.seeding import as_seed_sequence, child_seed

PAPER_P = Simplex3(0.6, 0.2, 0.2)
PAPER_S = Simplex3(0.4, 0.4, 0.2)


def small_params(n=30, m=10, mp=4):
    return KidneyEggParams(n, m, mp, PAPER_P, PAPER_S)


class TestRunReplicate:
    def test_single_gamma_matches_direct_pipeline(self):
        # the harness must agree with calling the public ops by hand
        params = small_params()
        seed = 4242
        result = run_replicate(params, [0.5], seed)

        sample_seed, tie_seed = child_seed(as_seed_sequence(seed)).spawn(2)
        g = sample_kidney_egg(params, sample_seed)
        ranking = rank_candidates(g, 0.5, tie_seed)
        direct = evaluate_ranking(ranking, g.red_candidates())
        assert result.reports[0.5] == direct
        assert result.edge_checksum == g.edge_checksum()

    def test_same_seed_same_graph_checksum(self):
        params = small_params()
        a = run_replicate(params, [0.0, 1.0], 7)
        b = run_replicate(params, [0.0, 1.0], 7)
        assert a.edge_checksum == b.edge_checksum
        assert a.reports == b.reports

    def test_no_red_edges_makes_content_a_full_tie(self):
        # p1 = s1 = 0: every content score is zero, so gamma=1 is one big tie
        params = KidneyEggParams(20, 6, 2, (0.6, 0.0, 0.4), (0.4, 0.0, 0.6))
        seed = 11
        sample_seed, tie_seed = child_seed(as_seed_sequence(seed)).spawn(2)
        g = sample_kidney_egg(params, sample_seed)
        ranking = rank_candidates(g, 1.0, tie_seed)
        assert ranking.tie_groups == ((0, len(ranking)),)
        result = run_replicate(params, [0.0, 1.0], seed)
        assert result.reports[1.0] == evaluate_ranking(ranking, g.red_candidates())

    def test_y_values_forwarded(self):
        params = small_params()
        result = run_replicate(params, [0.5], 3, y_values=(1, 2))
        rep = result.reports[0.5]
        assert set(rep.ap_y) == {1, 2}
        assert rep.ap_y[1] == rep.rr


class TestSweepSpec:
    def test_ratio_rule_rounds_half_up_and_clamps(self):
        spec = SweepSpec(n=184, p=PAPER_P, s=PAPER_S, m_values=(2, 4, 6, 40),
                         gamma_grid=(0.5,), replicates=1, master_seed=0,
                         m_prime_ratio=0.25)
        cells = spec.cells()
        # m=2: clamp(round(0.5), 1, 1) = 1
        assert cells[0][:2] == (2, 1) and cells[0][2] is None
        assert cells[1][:2] == (4, 1)
        # m=6: round(1.5) rounds half up to 2
        assert cells[2][:2] == (6, 2)
        assert cells[3][:2] == (40, 10)

    def test_infeasible_cells_reported(self):
        spec = SweepSpec(n=10, p=PAPER_P, s=PAPER_S, m_values=(4, 10, 12),
                         gamma_grid=(0.5,), replicates=1, master_seed=0,
                         m_prime_ratio=0.5)
        result = run_sweep(spec)
        assert [c.m for c in result.cells] == [4]
        assert len(result.skipped) == 2
        assert all(reason for _, _, reason in result.skipped)

    def test_explicit_m_prime_list(self):
        spec = SweepSpec(n=20, p=PAPER_P, s=PAPER_S, m_values=(6, 8),
                         gamma_grid=(0.5,), replicates=1, master_seed=0,
                         m_prime_values=(2, 5))
        assert [(m, mp) for m, mp, _ in spec.cells()] == [(6, 2), (8, 5)]

    def test_rule_exclusivity(self):
        with pytest.raises(InputError):
            SweepSpec(n=20, p=PAPER_P, s=PAPER_S, m_values=(6,), gamma_grid=(0.5,),
                      replicates=1, master_seed=0)
        with pytest.raises(InputError):
            SweepSpec(n=20, p=PAPER_P, s=PAPER_S, m_values=(6,), gamma_grid=(0.5,),
                      replicates=1, master_seed=0, m_prime_ratio=0.5,
                      m_prime_values=(2,))

    def test_s2_eq_p2_enforcement(self):
        with pytest.raises(InputError):
            SweepSpec(n=20, p=PAPER_P, s=Simplex3(0.5, 0.4, 0.1), m_values=(6,),
                      gamma_grid=(0.5,), replicates=1, master_seed=0,
                      m_prime_ratio=0.5, enforce_s2_eq_p2=True)


class TestRunSweep:
    def test_single_cell_matches_replicate_aggregation(self):
        from vnom.metrics import aggregate_reports
        spec = SweepSpec(n=20, p=PAPER_P, s=PAPER_S, m_values=(8,),
                         gamma_grid=(0.0, 1.0), replicates=5, master_seed=99,
                         m_prime_ratio=0.25)
        result = run_sweep(spec)
        cell = result.cells[0]
        reports = []
        for rep in range(5):
            rep_seed = np.random.SeedSequence(entropy=99, spawn_key=(8, 2, rep))
            reports.append(run_replicate(KidneyEggParams(20, 8, 2, PAPER_P, PAPER_S),
                                         (0.0, 1.0), rep_seed).reports[0.0])
        assert cell.reports[0.0] == aggregate_reports(reports)

    def test_deterministic_across_workers(self):
        spec = SweepSpec(n=30, p=PAPER_P, s=PAPER_S, m_values=(6, 10, 14),
                         gamma_grid=(0.0, 0.5, 1.0), replicates=10, master_seed=1,
                         m_prime_ratio=0.5)
        serial = run_sweep(spec, n_workers=1)
        parallel = run_sweep(spec, n_workers=3)
        assert serial == parallel

    def test_gamma_star_ties_go_to_smallest(self):
        spec = SweepSpec(n=20, p=PAPER_P, s=PAPER_S, m_values=(8,),
                         gamma_grid=(0.25, 0.75), replicates=2, master_seed=5,
                         m_prime_ratio=0.25)
        cell = run_sweep(spec).cells[0]
        for criterion, best in cell.gamma_star.items():
            means = [cell.reports[g].mean(criterion) for g in spec.gamma_grid]
            top = max(means)
            assert best == min(g for g, v in zip(spec.gamma_grid, means) if v == top)


class TestGammaSurface:
    def test_y1_row_equals_mrr_row_exactly(self):
        surf = gamma_surface(small_params(), (0.0, 0.5, 1.0), y_max=2,
                             replicates=30, seed=8)
        assert np.array_equal(surf.ap_y_mean[0], surf.mrr_mean)

    def test_shapes(self):
        surf = gamma_surface(small_params(), (0.0, 0.25, 0.5, 0.75, 1.0), y_max=3,
                             replicates=5, seed=8)
        assert surf.ap_y_mean.shape == (3, 5)
        assert surf.map_mean.shape == (5,)

    def test_y_max_bounds(self):
        with pytest.raises(InputError):
            gamma_surface(small_params(m=10, mp=4), (0.5,), y_max=7,
                          replicates=1, seed=0)
