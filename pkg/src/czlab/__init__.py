"""Numerical laboratory for maximal, singular and sparse operators on sampled 1-D functions."""

from .dyadic import (DyadicCube, SparseFamily, SparseFamilyError, build_lattice, carleson_constant,
                     chain_family, counting_function, greedy_witnesses, iterated_sparse, lattice_properties,
                     random_family, sparse_avg_operator)
from .experiments import (DecayFit, ExperimentError, ExperimentReport, FitError, fit_decay, run_experiment)
from .grid import (Grid, GridError, Interval, LevelSetCurve, SampledFunction, level_set_curve,
                   level_set_measure, lp_norm, make_sampled, sample_on, weak_lp_quasinorm)
from .maximal import (OrliczGauge, hl_maximal, hl_maximal_bruteforce, iterated_maximal, luxemburg_norm,
                      maximal_power, orlicz_maximal, sharp_maximal, vv_maximal)
from .quadrature import QuadratureError, adaptive_integrate
from .rdf import RdfError, RdfResult, maximal_norm_bound, rubio_de_francia
from .singular import (CommutatorProfile, ConjugationResult, SingularSymbolError, Symbol, commutator_direct,
                       commutator_profile, conjugation_commutator, hilbert_transform)
from .weights import (PowerWeight, RefinementSchedule, WeightError, a1_constant, ap_constant, ap_refinement,
                      conjugated_maximal, llogl_failure_ratio, llogl_failure_ratio_grid, mw_condition_check,
                      weak11_estimator)

__version__ = "0.1.0"
