"""Systemic risk analytics on multi-layer interbank exposure networks.

The package models a dated multiplex of directed liability matrices
(:mod:`multirisk.exposure_model`), runs capital-weighted distress cascades
and layer decompositions over it (:mod:`multirisk.debtrank`), prices the
expected systemic and credit loss of portfolios and of single exposures
(:mod:`multirisk.systemic_loss`), compares layers statistically against a
degree-preserving null model and fits power-law tails
(:mod:`multirisk.network_stats`), and reads/writes the CSV dataset format
plus a synthetic generator (:mod:`multirisk.synth_io`).  ``multirisk.cli``
exposes all of it as a batch command line.

Hot kernels are compiled with numba when available; set
``MULTIRISK_NUMBA=0`` to force the pure-numpy fallbacks or ``=1`` to
require compilation (see :mod:`multirisk._kernels`).
"""
from __future__ import annotations

from ._kernels import HAVE_NUMBA, USING_NUMBA
from .debtrank import (
    DISTRESSED,
    INACTIVE,
    INTERBANK_ONLY,
    UNDISTRESSED,
    WITH_EXTERNAL_ASSETS,
    CascadeState,
    DebtRankResult,
    EconomicValueVector,
    ImpactMatrix,
    ProfileRow,
    RiskProfile,
    average_debtrank,
    cascade_states,
    combined_debtranks,
    debtrank,
    economic_value,
    impact_matrix,
    layer_debtranks,
    normalized_layer_debtrank,
    single_seed_debtranks,
    sr_profile,
)
from .exposure_model import (
    CANONICAL_LAYERS,
    BankRecord,
    LiabilityMatrix,
    MultiLayerSnapshot,
    Violation,
    combine_layers,
    interbank_assets,
    layer_sort_key,
    total_economic_value,
    validate,
)
from .network_stats import (
    FIXED,
    SCAN,
    BandSummary,
    CorrelationTriple,
    EmpiricalCdf,
    LayerPairStats,
    NullModelSample,
    PowerLawFit,
    density,
    exposure_cdf,
    jaccard,
    layer_pair_stats,
    null_model_band,
    null_model_rewire,
    pair_null_bands,
    pearson,
    powerlaw_fit,
)
from .synth_io import (
    DEFAULT_DENSITIES,
    CapitalSeries,
    DataError,
    DatasetBundle,
    GeneratorConfig,
    Lognormal,
    Pareto,
    ProbabilitySeries,
    assemble_snapshots,
    generate_multiplex,
    load_bundle,
    parse_capitals,
    parse_exposures,
    parse_probabilities,
    report_rows,
    write_dataset,
    write_report,
)
from .systemic_loss import (
    CONSTANT_HAZARD,
    DEFAULT_EXACT_CAP,
    DEFAULT_LGD,
    DEFAULT_RECOVERY,
    DIRECT,
    FROM_SPREAD,
    LINEAR,
    DefaultProbabilities,
    ExposureDelta,
    ExposureMarginal,
    LossReport,
    approx_error_report,
    credit_expected_loss,
    expected_systemic_loss_approx,
    expected_systemic_loss_exact,
    loss_report,
    marginal_credit,
    marginal_report,
    marginal_systemic,
    marginal_systemic_clamped,
    spread_to_pd,
)

__version__ = "0.1.0"

__all__ = [
    "HAVE_NUMBA",
    "USING_NUMBA",
    "CANONICAL_LAYERS",
    "BankRecord",
    "LiabilityMatrix",
    "MultiLayerSnapshot",
    "Violation",
    "combine_layers",
    "interbank_assets",
    "layer_sort_key",
    "total_economic_value",
    "validate",
    "INTERBANK_ONLY",
    "WITH_EXTERNAL_ASSETS",
    "UNDISTRESSED",
    "DISTRESSED",
    "INACTIVE",
    "CascadeState",
    "DebtRankResult",
    "EconomicValueVector",
    "ImpactMatrix",
    "ProfileRow",
    "RiskProfile",
    "average_debtrank",
    "cascade_states",
    "combined_debtranks",
    "debtrank",
    "economic_value",
    "impact_matrix",
    "layer_debtranks",
    "normalized_layer_debtrank",
    "single_seed_debtranks",
    "sr_profile",
    "CONSTANT_HAZARD",
    "LINEAR",
    "DIRECT",
    "FROM_SPREAD",
    "DEFAULT_LGD",
    "DEFAULT_RECOVERY",
    "DEFAULT_EXACT_CAP",
    "DefaultProbabilities",
    "ExposureDelta",
    "ExposureMarginal",
    "LossReport",
    "approx_error_report",
    "credit_expected_loss",
    "expected_systemic_loss_approx",
    "expected_systemic_loss_exact",
    "loss_report",
    "marginal_credit",
    "marginal_report",
    "marginal_systemic",
    "marginal_systemic_clamped",
    "spread_to_pd",
    "SCAN",
    "FIXED",
    "BandSummary",
    "CorrelationTriple",
    "EmpiricalCdf",
    "LayerPairStats",
    "NullModelSample",
    "PowerLawFit",
    "density",
    "exposure_cdf",
    "jaccard",
    "layer_pair_stats",
    "null_model_band",
    "null_model_rewire",
    "pair_null_bands",
    "pearson",
    "powerlaw_fit",
    "DEFAULT_DENSITIES",
    "CapitalSeries",
    "DataError",
    "DatasetBundle",
    "GeneratorConfig",
    "Lognormal",
    "Pareto",
    "ProbabilitySeries",
    "assemble_snapshots",
    "generate_multiplex",
    "load_bundle",
    "parse_capitals",
    "parse_exposures",
    "parse_probabilities",
    "report_rows",
    "write_dataset",
    "write_report",
]
