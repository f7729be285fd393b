"""blockassoc: simulation and verification of association between blocks
for multivariate stochastic processes.

The package provides deterministic checkers for the known analytic
characterizations (Gaussian vectors and processes, infinitely divisible
laws with finite-activity jump measures), exact oracles on finite discrete
laws, seed-deterministic samplers, Monte Carlo falsification tests with
replayable witnesses, and a reproducible harness for the central limit
theorem under weak association between blocks.
"""

__version__ = "0.1.0"

from .core import (
    BlockPartition,
    CovFunction,
    CovarianceMatrix,
    DiscreteJointDistribution,
    DiscreteLevyMeasure,
    IdTriplet,
    TimeGrid,
    Verdict,
    PASS,
    VIOLATION,
    INCONCLUSIVE,
    ERROR,
    char_function_eval,
    increments_covariance,
    membership_S,
    monotone_trajectory_predicate,
    project_levy_pair,
    validate_partition,
)
from .checkers import (
    RectangleWitness,
    gaussian_block_association,
    id_process_support_check,
    id_sufficient_conditions,
    l_superadditivity_check,
    levy_support_equivalence,
    mixed_derivative_check,
)
from .simulate import (
    MaModel,
    SampleBatch,
    brownian_antithetic_source,
    sample_compound_poisson_id,
    sample_gaussian_increments,
    sample_gaussian_vector,
    sample_hps_pair,
    sample_stationary_ma,
)
from .mctest import (
    McConfig,
    MonotoneFunction,
    SmoothFunction,
    exact_discrete_association,
    exact_discrete_block_association,
    gen_monotone_function,
    hps_formula_verify,
    mc_block_association_test,
    mc_negative_block_association_test,
    mc_weak_block_association_test,
    replay_witness,
)
from .limits import (
    CltReport,
    certify_weak_block_association,
    longrun_covariance,
    run_clt_experiment,
    run_invariance_check,
)
