"""Park factor estimation with a pairwise logistic match-up model."""

__version__ = "0.1.0"

from .conventional import aggregate_home_road, conventional_pf, conventional_probability
from .evaluation import baseline_rate, improvement_report, log_loss
from .ingest import classify_play, parse_event_file, read_canonical_csv, write_canonical_csv
from .pa_model import CanonicalRow, Dataset, EventClass, PlateAppearance, binary_outcome, dataset_summary
from .pairwise import FitConfig, FitReport, ParameterSet, fit, gauge_normalize, predict_probability, proposed_pf

__all__ = [
    "CanonicalRow", "Dataset", "EventClass", "FitConfig", "FitReport", "ParameterSet",
    "PlateAppearance", "aggregate_home_road", "baseline_rate", "binary_outcome",
    "classify_play", "conventional_pf", "conventional_probability", "dataset_summary", "fit",
    "gauge_normalize", "improvement_report", "log_loss", "parse_event_file",
    "predict_probability", "proposed_pf", "read_canonical_csv", "write_canonical_csv",
]
