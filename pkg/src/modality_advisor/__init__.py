"""Design-time recommendation of an execution modality (LLM call, assistant or agent) for a task."""

from .task_model import Domain, Modality, TaskDescription, TaskGraph, validate_graph, topological_order
from .scoring import ScoringConfig, SubtaskFeatures, score_subtask
from .recommender import Persona

__all__ = [
    "Domain",
    "Modality",
    "Persona",
    "ScoringConfig",
    "SubtaskFeatures",
    "TaskDescription",
    "TaskGraph",
    "score_subtask",
    "topological_order",
    "validate_graph",
]

__version__ = "0.1.0"
