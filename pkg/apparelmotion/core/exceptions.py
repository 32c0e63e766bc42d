"""Base Exceptions."""


class ApparelMotionException(Exception):
    """An error occurred."""
