"""Backend selection for the hot simulation loop.

The compiled extension is used when it imports; otherwise the pure-Python
version runs. Set ``TAILCAUSE_PURE_PYTHON=1`` to force the fallback.
Both backends produce bit-identical output.
"""

import os

import numpy as np

from tailcause import _fallback

KIND_ZERO = _fallback.KIND_ZERO
KIND_LINEAR = _fallback.KIND_LINEAR
KIND_SQRT = _fallback.KIND_SQRT
KIND_POWER_THRESHOLD = _fallback.KIND_POWER_THRESHOLD

_compiled = None
if os.environ.get("TAILCAUSE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from tailcause import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def compiled_available():
    return _compiled is not None


def additive_recursion(noise, terms, backend=None):
    """Run an additive autoregression over a noise matrix.

    Parameters
    ----------
    noise : array of shape (T, d)
        Innovations, one column per channel.
    terms : sequence of (target, source, lag, kind, p1, p2)
        Each term adds ``h(out[t - lag, source])`` to ``out[t, target]``.
        Terms are accumulated in the given order after the noise.
    backend : {"compiled", "python", None}
        ``None`` picks the module default.

    Returns
    -------
    ndarray of shape (T, d)
    """
    backend = backend or BACKEND
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    if noise.ndim != 2:
        raise ValueError("noise must be a 2-d array")
    cols = list(zip(*terms)) if terms else [(), (), (), (), (), ()]
    target = np.asarray(cols[0], dtype=np.int_)
    source = np.asarray(cols[1], dtype=np.int_)
    lag = np.asarray(cols[2], dtype=np.int_)
    kind = np.asarray(cols[3], dtype=np.int_)
    p1 = np.asarray(cols[4], dtype=np.float64)
    p2 = np.asarray(cols[5], dtype=np.float64)
    d = noise.shape[1]
    if target.size and (target.min() < 0 or target.max() >= d or source.min() < 0 or source.max() >= d):
        raise ValueError("term channel index out of range")
    if lag.size and lag.min() < 1:
        raise ValueError("term lags must be >= 1")
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled.additive_recursion(noise, target, source, lag, kind, p1, p2)
    if backend == "python":
        return _fallback.additive_recursion(noise, target, source, lag, kind, p1, p2)
    raise ValueError(f"unknown backend {backend!r}")
