"""Exceptions for evaluation"""
from apparelmotion.core.exceptions import ApparelMotionException


class AnimationMismatchException(ApparelMotionException):
    """Predicted and ground truth animations do not cover the same frames and vertices."""
