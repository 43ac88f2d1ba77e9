"""Annotation service: task scheduling, label persistence, implied
score computation, and the HTTP API for the three-step labeling flow."""

from .store import (
    AnnotationStore,
    AnnotationTask,
    IncompleteLabels,
    MissingStepTwo,
    NotAssigned,
    PartitionViolation,
    StepThreeLabel,
    StepTwoLabel,
    UnknownAnnotator,
    validate_partition,
)

__all__ = [
    "AnnotationStore",
    "AnnotationTask",
    "IncompleteLabels",
    "MissingStepTwo",
    "NotAssigned",
    "PartitionViolation",
    "StepThreeLabel",
    "StepTwoLabel",
    "UnknownAnnotator",
    "validate_partition",
]
