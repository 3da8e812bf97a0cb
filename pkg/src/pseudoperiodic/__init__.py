"""Supervised anomaly detection in pseudo-periodic time series."""

from .classify import Dataset, compute_metrics, kfold_cv
from .clustering import feature_vectors, kmeans_cluster, select_period_cluster, silhouette_values, sweep_k
from .compress import dp_compress
from .config import PipelineConfig, load_config, parse_config
from .keypoints import correct_series, detect_keypoints, recover_missing
from .pipeline import run_pipeline
from .segment import annotate_period, segment_and_annotate, split_periods, summarize_period
from .series import LabelTrack, SynthConfig, TimeSeries, load_labels, load_series, synth_pts
from .stability import endpoint_stability, monotonicity_index

__version__ = "0.1.0"
