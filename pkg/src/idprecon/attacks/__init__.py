"""Attacker algorithms against Group IDP and BDP custodians."""

from .bdp import bdp_enumerate_distinct
from .counting import CountBounds, count_reconstruct, infer_from_verdict
from .hints import hint_leakage_demo
from .probing import (
    ApplicabilityError,
    AttackBudget,
    AttackError,
    DirectDetector,
    InconsistentObservations,
    PartialResult,
    Prober,
    RepeatedDetector,
    VarianceDetector,
    parse_detector,
)
from .reconstruction import ReconstructionReport, column_reconstruct, dataset_reconstruct
from .targeted import (
    attribute_inference,
    binary_attribute_inference,
    confirm_uniqueness,
    membership_inference,
)
