"""Growing self-organizing networks (GWR, GNG, Gamma-GWR) for skeleton motion."""
from .assessment import (Assessor, FeedbackParams, FeedbackReport, detect_mistakes, evaluate_feedback,
                         feedback, predict_next, rollout)
from .features import Sequence, center_on_hips, concat_trajectory, max_pool, motion_diff
from .gamma import GammaGWR, GammaParams, GlobalContext, gamma_distance, update_global_context
from .gng import GNG, GngParams
from .gwr import GWR, EpochStats, GwrParams, StepOutcome, activity, habituate
from .hierarchy import LayerSpec, Pipeline, PipelineError, PipelineSpec, preset

__all__ = [
    "Assessor", "FeedbackParams", "FeedbackReport", "detect_mistakes", "evaluate_feedback", "feedback",
    "predict_next", "rollout", "Sequence", "center_on_hips", "concat_trajectory", "max_pool", "motion_diff",
    "GammaGWR", "GammaParams", "GlobalContext", "gamma_distance", "update_global_context", "GNG",
    "GngParams", "GWR", "EpochStats", "GwrParams", "StepOutcome", "activity", "habituate", "LayerSpec",
    "Pipeline", "PipelineError", "PipelineSpec", "preset",
]
__version__ = "0.1.0"
