"""Base pydantic apparelmotion model classes"""
import numpy as np
from pydantic import BaseModel


class BaseImmutableModel(BaseModel):
    """Base immutable pydantic apparelmotion model"""

    class Config:
        """Pydantic config"""

        allow_mutation = False
        extra = "forbid"
        arbitrary_types_allowed = True


class BaseMutableModel(BaseModel):
    """Base mutable pydantic apparelmotion model"""

    class Config:
        """Pydantic config"""

        extra = "forbid"
        arbitrary_types_allowed = True


def frozen_array(value: object, dtype: type = np.float64) -> np.ndarray:
    """Copy value into a read-only numpy array of the given dtype. Used by model validators so
    that arrays held by immutable models can not be changed in place."""
    array = np.array(value, dtype=dtype)
    array.flags.writeable = False
    return array
