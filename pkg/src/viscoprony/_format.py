"""Deterministic number formatting shared by the CSV/JSON writers."""

import math

import numpy as np

SIG_DIGITS = 12


def round_sig(x, digits=SIG_DIGITS):
    """Round ``x`` to ``digits`` significant digits; ``-0.0`` becomes ``0.0``."""
    x = float(x)
    if not math.isfinite(x):
        return x
    y = float(f"{x:.{digits}g}")
    return 0.0 if y == 0 else y


def fmt(x, digits=SIG_DIGITS):
    """Shortest string that round-trips the value rounded to ``digits`` digits."""
    if isinstance(x, (bool, str)) or x is None:
        return str(x)
    if isinstance(x, int):
        return str(x)
    return repr(round_sig(x, digits))


def jsonable(obj, digits=SIG_DIGITS):
    """Recursively round floats (and split complex numbers) for JSON output."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, complex):
        return {"re": round_sig(obj.real, digits), "im": round_sig(obj.imag, digits)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist(), digits)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.complexfloating):
        return jsonable(complex(obj), digits)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return round_sig(obj, digits)
