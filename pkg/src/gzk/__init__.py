"""Generalized zonal kernel (GZK) random features.

Gegenbauer machinery in :mod:`gzk.special`, truncated kernels in
:mod:`gzk.kernels`, sphere-sampled feature matrices in :mod:`gzk.features`,
spectral diagnostics in :mod:`gzk.spectral` and downstream learning in
:mod:`gzk.learning`. Points are always stored as columns.
"""

from gzk.errors import (
    ConfigurationError,
    DomainError,
    GzkError,
    IngestionError,
    InvalidKernelError,
    NumericOverflowError,
    SolverError,
    UnsupportedError,
)
from gzk.special import GegenbauerBasis, alpha, eval_explicit, gegenbauer_table, integrate_weighted, quad_rule
from gzk.kernels import (
    GzkModel,
    RadialTable,
    dot_product_model,
    exponential_model,
    gaussian_model,
    gegenbauer_coefficients,
    gram_exact,
    gram_truncated,
    kernel_exact,
    kernel_truncated,
    monomial_mu,
    ntk_function,
    ntk_model,
    polynomial_model,
    radial_table,
    select_truncation,
    zonal_model,
)
from gzk.features import (
    FeatureMatrix,
    build_features,
    feature_block,
    leverage_bound,
    leverage_exact,
    load_features,
    sample_sphere,
    theoretical_m,
    theoretical_m_truncated,
)
from gzk.spectral import (
    SpectralReport,
    achieved_epsilon,
    gram,
    pcp_lambda,
    projection_cost_gap,
    spectral_report,
    statistical_dimension,
    sym_eig,
)
from gzk.learning import (
    Clustering,
    KrrModel,
    approx_error_study,
    exact_krr,
    kernel_kmeans,
    kmeans_objective_exact,
    krr_fit,
    rff_features,
    taylor_truncation,
)
from gzk.datasets import Dataset, ingest_csv, synthetic

__version__ = "0.1.0"
