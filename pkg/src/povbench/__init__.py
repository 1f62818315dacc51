"""povbench: benchmark poverty-rate prediction models under controlled
missing-income patterns.

Core flow: synthesize (or load) a survey, corrupt its income column with a
missingness pattern, fit a model on the observed rows, predict the missing
ones, classify against a poverty line, and score the classification with
the full confusion-matrix objective suite.
"""

__version__ = "0.1.0"

from .dataset import (DEFAULT_REGRESSORS, Dataset, GeneratorConfig, Household,
                      label_poor, load_csv, poverty_line, synthesize)
from .evaluation import (ConfusionMatrix, ObjectiveReport, confusion, metrics,
                         paired_ttest, rank_models, weighted_preference)
from .missingness import (MAR_MNAR, MAR_PURE, MNAR_PURE, MissingnessMask,
                          conditional_mask, mcar, split)
from .models import (ALL_CODES, CATEGORICAL, CONTINUOUS, FittedModel,
                     HyperParams, ModelSpec, fit, load_model, predict,
                     predicted_distribution_stats, save_model)
from .pipeline import (AUTO_YOUDEN, Scenario, ScenarioResult,
                       classify_categorical, classify_continuous,
                       error_adjusted_rate, roc_curve, run_scenario,
                       youden_cutpoint)
from .tuning import GridSearchResult, GridSpec, grid_search, half_split
