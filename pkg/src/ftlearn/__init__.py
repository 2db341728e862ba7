"""Learn explainable static fault trees from sensor data and failure logs."""

__version__ = "0.1.0"

from .data import (BoolColumn, Dataset, FailureColumn, RecordKey, SensorColumn, Statistic,
                   class_proportions, project)
from .errors import (ConfigError, DataError, DegenerateDataError, FTLearnError,
                     NoStructureError, SchemaError, TreeParseError, TreeValidationError)
from .fault_tree import (Event, EventKind, FaultTree, Gate, annotate_probabilities, depth,
                         from_json, to_dot, to_json, validate)
from .ingestion import (BalancedDataset, SchemaConfig, SensorSpec, balance, deduplicate,
                        filter_corrupt, load_csv, load_schema)
from .learner import LearnerConfig, best_gate_for, learn, learn_all
from .significance import (ContingencyTable, GateCandidate, GateType, contingency, eval_gate,
                           gate_significance, phi)
from .synthetic import GroundTruth, SensorModel, generate, recovery_report
from .threshold import (Side, Threshold, ThresholdedVariable, discretize, entropy,
                        find_optimal_threshold, gain, threshold_all)

__all__ = [
    "__version__",
    "BoolColumn",
    "Dataset",
    "FailureColumn",
    "RecordKey",
    "SensorColumn",
    "Statistic",
    "class_proportions",
    "project",
    "ConfigError",
    "DataError",
    "DegenerateDataError",
    "FTLearnError",
    "NoStructureError",
    "SchemaError",
    "TreeParseError",
    "TreeValidationError",
    "Event",
    "EventKind",
    "FaultTree",
    "Gate",
    "annotate_probabilities",
    "depth",
    "from_json",
    "to_dot",
    "to_json",
    "validate",
    "BalancedDataset",
    "SchemaConfig",
    "SensorSpec",
    "balance",
    "deduplicate",
    "filter_corrupt",
    "load_csv",
    "load_schema",
    "LearnerConfig",
    "best_gate_for",
    "learn",
    "learn_all",
    "ContingencyTable",
    "GateCandidate",
    "GateType",
    "contingency",
    "eval_gate",
    "gate_significance",
    "phi",
    "GroundTruth",
    "SensorModel",
    "generate",
    "recovery_report",
    "Side",
    "Threshold",
    "ThresholdedVariable",
    "discretize",
    "entropy",
    "find_optimal_threshold",
    "gain",
    "threshold_all",
]
