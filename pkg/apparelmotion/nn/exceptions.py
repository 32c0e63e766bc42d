"""Exceptions for the tensor library"""
from apparelmotion.core.exceptions import ApparelMotionException


class ShapeMismatchException(ApparelMotionException):
    """Operand shapes are incompatible."""


class TapeConsumedException(ApparelMotionException):
    """backward was called twice on a tape without reset."""


class UnknownParameterException(ApparelMotionException):
    """A parameter name is missing from a ParameterStore or a checkpoint."""
