import dataclasses
import json
import math
from datetime import datetime, date
from enum import Enum
from pathlib import Path

import numpy as np


class CustomEncoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        return super().iterencode(_sanitize(o), _one_shot)

    def default(self, obj):
        return _sanitize(self._encode_object(obj))

    def _encode_object(self, obj):
        # Handle Peewee Model instances
        if hasattr(obj, '__data__'):
            result = {}
            for key, value in obj.__data__.items():
                if isinstance(value, (datetime, date)):
                    result[key] = value.isoformat()
                else:
                    result[key] = value
            return result
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return _finite(float(obj))
        if isinstance(obj, np.ndarray):
            if np.iscomplexobj(obj):
                return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
            return obj.tolist()
        if isinstance(obj, (complex, np.complexfloating)):
            return {"re": float(obj.real), "im": float(obj.imag)}
        if isinstance(obj, Enum):
            return obj.value
        if isinstance(obj, Path):
            return str(obj)
        if isinstance(obj, (datetime, date)):
            return obj.isoformat()
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            if hasattr(obj, 'to_dict'):
                return obj.to_dict()
            return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
        if hasattr(obj, '__dict__'):
            return obj.__dict__
        return json.JSONEncoder.default(self, obj)


def _finite(x: float):
    """JSON has no inf/nan: render them as strings."""
    return x if math.isfinite(x) else str(x)


def _sanitize(obj):
    # floats (np.float64 included) bypass default(), so non-finite values are replaced up front
    if isinstance(obj, float):
        return _finite(obj)
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj
