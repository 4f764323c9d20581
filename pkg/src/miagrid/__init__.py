"""Shadow-model membership-inference auditing on a model grid.

Builds a lattice of toy classifiers over (dataset, hyperparameter) pairs,
attacks each diagonal model with likelihood-ratio tests under three shadow
hyperparameter strategies plus a shadow-free threshold baseline, accounts DP
budgets, and compares training-data against external-data hyperparameter
optimization with paired one-sided tests.
"""

from .accounting import (
    DpSpec,
    account_epsilon,
    calibrate_noise,
    epsilon_delta_curve,
    training_epsilon_curve,
)
from .attacks import (
    AttackParams,
    AttackResult,
    GaussianSummary,
    MiaGrid,
    TrainCounter,
    acc_lira_hypers,
    build_grid,
    estimate_in_out,
    grid_manifest,
    kl_divergence_gaussians,
    kl_lira_select,
    lira_score,
    run_campaign,
    summarize,
    threshold_attack,
)
from .errors import (
    AccountingError,
    CalibrationError,
    ConfigError,
    HpoFailedError,
    InsufficientShadowsError,
    IntegrityError,
    MetricError,
    MiaGridError,
    NumericError,
    TrainingDivergedError,
)
from .hpo import HpoResult, SearchSpace, run_hpo, split_train_val
from .models import (
    Architecture,
    HyperParams,
    Model,
    logit_score,
    predict_confidence,
    train,
    true_class_logit_scores,
)
from .stats import (
    RocCurve,
    TestReport,
    by_adjust,
    clopper_pearson,
    dp_tpr_bound,
    paired_permutation_test,
    paired_t_test,
    reg_inc_beta,
    reg_inc_beta_inv,
    roc_curve,
    tpr_at_fpr,
)
from .store import CellKey, Store
from .synthdata import (
    DataSpec,
    LabeledSet,
    MembershipMask,
    build_grid_datasets,
    sample_external_datasets,
    sample_population,
)

__version__ = "0.1.0"
