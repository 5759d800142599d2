import math

import numpy as np


def format_float(value, digits=10):
    if value is None:
        return ''
    value = float(value)
    if math.isnan(value):
        return ''
    return '{:.{}g}'.format(value, digits)


def round_float(value, digits=10):
    if value is None:
        return None
    value = float(value)
    if not math.isfinite(value):
        return None
    return float(format_float(value, digits))


def numpy_to_json(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, 'value') and hasattr(o, 'name'):
        return o.value
    raise TypeError('Object of type {} is not JSON serializable'.format(type(o).__name__))


def rounded(obj, digits=10):
    """Recursively round every float in a JSON-ready structure to `digits` significant digits."""
    if isinstance(obj, dict):
        return {key: rounded(value, digits) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(item, digits) for item in obj]
    if isinstance(obj, (float, np.floating)):
        return round_float(obj, digits)
    return obj
