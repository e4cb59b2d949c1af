"""surescreen: dependence-measure feature screening for high-dimensional and
multi-platform data, with an optimal-transport Wasserstein screen."""

from .data import PredictorArray, ResponseBlock, SimConfig, TrueSet, feature_block, standardize
from .harness import BenchmarkReport, emit_report, five_number, run_benchmark
from .measures import (MeasureKind, MeasureOptions, MethodCompatibilityError,
                       bcor_utility, dc_rosis_utility, dcor_utility, kendall_utility,
                       mrdc_utility, pc_utility, pearson_utility, score_all,
                       sc_utility, sirs_utility, wd_utility)
from .screening import (CriteriaTable, ScoreTable, ScreeningResult, aggregate,
                        cutoff, evaluate, intersect_selections, rank_features, top_k)
from .simgen import StudyInstance, gen_ar1_gaussian, gen_copula_platform, gen_study
from .transport import (ConvergenceError, DiscreteMeasure, TransportPlan,
                        assignment_solve, halton_sequence, multivariate_rank,
                        ot_exact, sinkhorn)

__version__ = "0.1.0"
