"""Pure-Python twin of the compiled recursion in ``_kernels.pyx``."""

import math

import numpy as np

KIND_ZERO = 0
KIND_LINEAR = 1
KIND_SQRT = 2
KIND_POWER_THRESHOLD = 3


def _apply(kind, v, p1, p2):
    if kind == KIND_LINEAR:
        return p1 * v
    if kind == KIND_SQRT:
        return math.sqrt(v) if v > 0.0 else 0.0
    if kind == KIND_POWER_THRESHOLD:
        # math.pow and C pow share libm, keeping both backends bit-identical
        return math.pow(v, p1) if v > p2 else 0.0
    return 0.0


def additive_recursion(noise, target, source, lag, kind, p1, p2):
    """Run ``out[t, c] = noise[t, c] + sum_m h_m(out[t - lag_m, source_m])``.

    Terms whose lag reaches before the start are skipped (zero initial state).
    """
    noise = np.asarray(noise, dtype=np.float64)
    T, d = noise.shape
    terms = [
        (int(target[m]), int(source[m]), int(lag[m]), int(kind[m]), float(p1[m]), float(p2[m]))
        for m in range(len(target))
    ]
    rows = noise.tolist()
    for t in range(T):
        row = rows[t]
        for tgt, src, lg, kd, a, b in terms:
            s = t - lg
            if s < 0:
                continue
            row[tgt] = row[tgt] + _apply(kd, rows[s][src], a, b)
    return np.array(rows, dtype=np.float64).reshape(T, d)
