"""Function for encoding JSON with numpy values and paths."""
from pathlib import Path
from typing import Any

import numpy as np


def json_encoder(obj: Any) -> Any:
    """json encoder function supporting numpy and Path serialization.

    Args:
        obj: object to encode to JSON

    Returns:
        json encoded data

    >>> json_encoder(np.float64(0.5))
    0.5
    >>> json_encoder(np.arange(3))
    [0, 1, 2]
    """
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError("Type {} not serializable".format(type(obj)))
