"""Point-process response models for optogenetic spike prediction.

Build PF/CF/SF history features from binned flash and spike trains, fit the
logit-additive response model, score out-of-sample predictions and run the
leaky integrate-and-fire simulation studies.
"""
__version__ = "0.1.0"

from .kernels import BACKEND
from .pointproc import (PRO_TERMS, Dataset, DesignMatrix, FeatureRow, HistoryMarkers,
                        SfExtremum, Sweep, all_monomials, build_design, history_markers,
                        response_cf, response_pf, response_sf, sf_extrema)
from .glm import (FittedModel, OlsFit, deviance_r2, fit_logistic, format_table,
                  ols_slope, predict_prob, stepwise_aic)
from .lif import LifParams, LifTrace, gen_stimulus, simulate_dataset, simulate_lif
from .evaluate import RocCurve, auc_score, roc_curve, train_test_evaluate
from .studies import (StudyConfig, StudyResult, run_auc_study, run_parameter_sweep,
                      run_significance_study)

__all__ = [
    "BACKEND", "PRO_TERMS", "Dataset", "DesignMatrix", "FeatureRow", "HistoryMarkers",
    "SfExtremum", "Sweep", "all_monomials", "build_design", "history_markers",
    "response_cf", "response_pf", "response_sf", "sf_extrema",
    "FittedModel", "OlsFit", "deviance_r2", "fit_logistic", "format_table", "ols_slope",
    "predict_prob", "stepwise_aic",
    "LifParams", "LifTrace", "gen_stimulus", "simulate_dataset", "simulate_lif",
    "RocCurve", "auc_score", "roc_curve", "train_test_evaluate",
    "StudyConfig", "StudyResult", "run_auc_study", "run_parameter_sweep",
    "run_significance_study",
]
