"""Hybrid random features for softmax-kernel estimation.

Random-feature estimators of exp(x·y) whose variance concentrates where a
data-dependent mixing coefficient says the inputs actually live, plus the
closed-form error analysis, clustering machinery, and benchmark harness to
validate them.
"""

from .bench import (
    ClusterBenchConfig,
    ClusterBenchRecord,
    DistMetricRecord,
    MseVerifyConfig,
    MseVerifyRecord,
    PointwiseConfig,
    SweepRecord,
    approx_softmax_distribution,
    cluster_benchmark,
    empirical_mse,
    export,
    ks_distance,
    mse_verify,
    pairwise_mean,
    pairwise_sum,
    pointwise_sweep,
    render_records,
    wasserstein1,
)
from .closed_form import (
    FlopsModel,
    endpoint_limit_scale,
    flops_matched_mn,
    flops_model,
    gaussian_rho,
    hybrid_feature_length,
    lambda_moments_angular,
    lambda_moments_gaussian,
    max_rel_error_bound,
    mse_angular_hybrid,
    mse_angular_hybrid_same_length,
    mse_gaussian_hybrid_same_length,
    mse_general_hybrid,
    mse_pos_plus,
    mse_pos_plusplus,
    mse_pos_plusplus_same_length,
    mse_trig,
    mse_trig_same_length,
    rel_err_angular_hybrid,
    rel_err_same_length,
    shared_correction,
    sm_exact,
    sm_exact_same_length,
    theta_between,
    w_scale,
)
from .clustering import (
    ClusterHalf,
    ClusterModel,
    SyntheticClusterConfig,
    SyntheticClusters,
    build_A_complex,
    build_A_real,
    cluster_loss,
    generate_synthetic_clusters,
    kmeans,
    sign_matched_mass,
)
from .errors import DegenerateDistributionError, OutOfDomainError, SingularMatrixError
from .estimators import (
    BaseEstimatorSpec,
    EstimateRecord,
    FlopsCounter,
    HybridSpec,
    LambdaSpec,
    hybrid_feature_dim,
    hybrid_features,
    lambda_hat,
    make_angular_hybrid,
    make_clustered_hybrid,
    make_gaussian_hybrid,
    realize_ensemble,
    sample_estimates,
    sample_lambdas,
    sm_hat_base,
    sm_hat_hybrid,
)
from .features import (
    DiagMatrix,
    GaussianLambdaParams,
    cexp_features,
    cluster_lambda_features,
    gaussian_lambda_features,
    pos_plus_features,
    pos_plusplus_features,
    sign_features,
    trig_features,
)
from .rng import ProjectionEnsemble, Seed, derive_seed, generator, orthonormalize_blocks, sample_ensemble

__version__ = "0.1.0"
