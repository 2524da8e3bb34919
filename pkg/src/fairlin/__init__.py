"""Closed-form demographic-parity post-processing and bias audits for linear regression."""

__version__ = "0.1.0"

from .base_model import (  # noqa: E402
    BaseLinearModel,
    GroupwiseLinearModel,
    fit_groupwise,
    fit_ols,
    predict,
)
from .fair_predictor import (  # noqa: E402
    FairPredictor,
    GroupCoefficients,
    build_fair_predictor,
    fair_predict,
    group_coefficients,
    predict_cs22,
    predict_fs23,
)
from .group_stats import Dataset, GroupStats, ScoreMoments, estimate_group_stats, score_moments  # noqa: E402
from .metrics import FitReport, equality_conditions_check, evaluate, gap_identity_check  # noqa: E402
from .synth import SynthConfig, SynthGroundTruth, generate, population_report  # noqa: E402
from .unfairness import (  # noqa: E402
    FeatureContribution,
    UnfairnessReport,
    feature_decomposition,
    gaussian_barycenter,
    gaussian_w2,
    residual_unfairness_check,
    unfairness_gaussian,
    unfairness_ks,
)
