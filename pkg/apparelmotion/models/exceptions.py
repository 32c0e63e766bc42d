"""Exceptions raised by the deformation networks"""
from apparelmotion.core.exceptions import ApparelMotionException


class UntrainedModelException(ApparelMotionException):
    """Inference was requested from parameters that were never trained or loaded."""


class WarmupIncompleteException(ApparelMotionException):
    """The apparel history holds fewer than history_k frames."""


class NonFiniteDisplacementException(ApparelMotionException):
    """The apparel decoder produced a non-finite displacement."""


class MissingVertexOrderException(ApparelMotionException):
    """Tiling needs the permutation table mapping module outputs back to mesh order."""
