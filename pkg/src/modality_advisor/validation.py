"""Input coercion helpers shared by the estimator API and the CLI."""

from __future__ import annotations

from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .task_model import Modality, TaskDescription


def check_tasks(X: Any) -> list[TaskDescription]:
    """Coerce X into a list of TaskDescription.

    Accepts a single task, a mapping in corpus-line form, a bare string, or
    an iterable of those. Bare strings get positional ids ``task-0``,
    ``task-1``, ...
    """
    if isinstance(X, (TaskDescription, str, Mapping)):
        X = [X]
    if isinstance(X, np.ndarray):
        X = X.ravel().tolist()
    tasks: list[TaskDescription] = []
    for i, item in enumerate(X):
        if isinstance(item, TaskDescription):
            tasks.append(item)
        elif isinstance(item, Mapping):
            tasks.append(TaskDescription.from_dict(item))
        elif isinstance(item, str):
            tasks.append(TaskDescription(id=f"task-{i}", text=item))
        else:
            raise TypeError(f"cannot interpret {type(item).__name__} at position {i} as a task")
    if not tasks:
        raise ValueError("expected at least one task")
    ids = [t.id for t in tasks]
    if len(set(ids)) != len(ids):
        raise ValueError("task ids must be unique")
    return tasks


def check_modalities(y: Iterable[Any], n_samples: int | None = None) -> list[Modality]:
    labels = [Modality.parse(v) for v in np.asarray(list(y), dtype=object).ravel()]
    if n_samples is not None and len(labels) != n_samples:
        raise ValueError(f"got {len(labels)} labels for {n_samples} tasks")
    return labels


def check_labeled(tasks: Sequence[TaskDescription]) -> list[Modality]:
    missing = [t.id for t in tasks if t.gold_modality is None]
    if missing:
        raise ValueError(f"tasks without gold_modality: {missing}")
    return [t.gold_modality for t in tasks]
