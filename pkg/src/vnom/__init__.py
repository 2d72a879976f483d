"""Vertex nomination on edge-attributed graphs.

Given a communication graph whose edges carry topic attributes and a few
identified vertices of interest, rank the remaining vertices by how likely
they are to also be of interest, fusing graph context (who talks to the
identified set) with content (who talks about the topic of interest).
"""

from .errors import (DegenerateConditioningError, EmptyProfileError, GraphFormatError,
                     InputError, NoRedCandidatesError, UndefinedDensityError, VnomError)
from .graph import (GREEN, OCCLUDED, RED, AttributedGraph, Partition, TopicGraph,
                    VertexLabel, candidate_set, induced_subgraph, relative_density)
from .kidney_egg import (PMF, KidneyEggParams, Simplex3, binomial_pmf,
                         content_given_context_pmf, content_pmf_from_conditionals,
                         content_score_pmf, context_score_pmf, empirical_pmf,
                         empirical_score_pmfs, sample_kidney_egg, tv_distance)
from .nomination import (GAMMA_GRID_DEFAULT, Ranking, candidate_statistics,
                         content_score, context_score, fused_score, gamma_star,
                         rank_candidates)
from .metrics import (AggregateReport, ChanceValue, EvalReport, aggregate_reports,
                      average_precision, average_precision_at_y, chance_baseline,
                      evaluate_ranking, precision_at, reciprocal_rank, success_at_1)
from .experiments import (CellResult, ReplicateResult, SurfaceResult, SweepResult,
                          SweepSpec, gamma_surface, run_replicate, run_sweep)
from .importance import (BinReport, EstimatedRates, PartitionTrial, ScreenedPartition,
                         ScreeningResult, ScreeningThresholds, TopicMap, TrialsResult,
                         delta_p, delta_rho, estimate_rates, instantiate_edges,
                         run_importance_trials, screen_partitions, topic_profile)
from .io import (generate_surrogate, read_attributed_graph, read_topic_graph,
                 write_attributed_graph, write_topic_graph)

__version__ = "0.1.0"
