"""latgauss: discrete Gaussian sampling over lattices, verified at desk
scale against an exact brute-force oracle."""

from .lattices import (Basis, BasisParseError, CosetLabel, CosetMap,
                       GramSchmidt, LatticeError, LatticePoint, Tower,
                       coset_label, dual_basis, format_basis, gram_schmidt,
                       make_tower, parse_basis, random_superlattice,
                       reduce_basis, sublattice_transform)
from .oracle import (GaussParam, OracleLimitError, RhoSum, SmoothingEstimate,
                     coset_weights, cvp_exact, enumerate_ball,
                     exact_dgs_sample, lambda1, rho_sum, smoothing_param)
from .samplers import (PreconditionError, SampleBatch, klein_gpv_batch,
                       klein_gpv_sample, sample_z, start_gauss)
from .resamplers import (ElementStream, ProbVector, ResampleResult,
                         StreamExhausted, bernoulli_from_poisson,
                         estimate_pmax, poisson_thin, ratio_check,
                         sample_poisson, sqrt_coin, sqrt_sample, square_sample)
from .combiners import (CombinerConfig, HonestBatch, combine_halve,
                        general_dgs, general_pipeline, smooth_dgs,
                        sqrt_combine, tower_pipeline)
from .reductions import (CONSTANTS, CovarianceStat, ReductionConstants,
                         approx_cvp, covariance_statistic, decide_gapsvp,
                         exact_provider, make_general_provider,
                         make_smooth_provider, optimal_svp_param, solve_svp)
from .profiles import DESK, PAPER, PROFILES, Profile, RunConfig, get_profile
from .stats import chi_squared_gof

__version__ = "0.1.0"
