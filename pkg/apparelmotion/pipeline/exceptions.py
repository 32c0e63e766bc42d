"""Exceptions for the pipeline drivers"""
from apparelmotion.core.exceptions import ApparelMotionException


class EmptySplitException(ApparelMotionException):
    """A corpus split holds no samples for the requested stage."""


class CheckpointStageMismatchException(ApparelMotionException):
    """A checkpoint was written by a different training stage than the one reading it."""


class UnknownVariantException(ApparelMotionException):
    """An inference or ablation variant name is not recognised."""


class NonFiniteOutputException(ApparelMotionException):
    """A transferred animation holds non-finite positions."""
