"""Experiment runner, ingestion and reporting."""

from .experiments import ExperimentConfig, RunReport, run_experiment, simulate_decision_rule, synthetic_dataset
from .loader import IngestionError, load_dataset, load_schema
from .report import emit_report, load_report
