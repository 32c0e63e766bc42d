"""Exceptions for artifact reading and writing"""
from apparelmotion.core.exceptions import ApparelMotionException


class InvalidSceneFileException(ApparelMotionException):
    """A scene file could not be parsed."""


class InvalidMotionFileException(ApparelMotionException):
    """A motion file could not be parsed."""


class InvalidAnimationException(ApparelMotionException):
    """An animation (OBJ sequence or npz) could not be read."""


class InvalidCheckpointException(ApparelMotionException):
    """A checkpoint has a missing or unknown header."""


class MissingCheckpointException(ApparelMotionException):
    """A checkpoint required by a stage does not exist."""
