"""Exceptions for the geometry data model"""
from apparelmotion.core.exceptions import ApparelMotionException


class InvalidCharacterException(ApparelMotionException):
    """A RiggedCharacter violates one of its invariants."""


class InvalidMotionException(ApparelMotionException):
    """A MotionClip violates one of its invariants."""


class JointCountMismatchException(ApparelMotionException):
    """Two joint-indexed inputs disagree on the number of joints."""


class NoBodyVerticesException(ApparelMotionException):
    """A body mask selects no vertices."""


class InvalidGeodesicMatrixException(ApparelMotionException):
    """A GeodesicMatrix does not have one row per body vertex and one column per joint."""
