"""Exceptions for synthetic data generation"""
from apparelmotion.core.exceptions import ApparelMotionException


class InvalidSynthSpecException(ApparelMotionException):
    """A SynthCharacterSpec holds values the generator can not build from."""


class SpringExplosionException(ApparelMotionException):
    """The mass-spring oracle diverged."""
