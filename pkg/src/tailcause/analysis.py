"""Sweeps, minimal delay, extremogram, tail index, preprocessing and graphs."""

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
import csv
import io
import json
import math
from statistics import NormalDist

import numpy as np

from tailcause.estimator import (
    DivisorMode,
    GammaVariant,
    PreparedPair,
    Series,
    as_array,
    default_k,
    kth_largest,
    top_k_indices,
)


# --------------------------------------------------------------------------
# Sweeps

@dataclass
class SweepResult:
    axis: str
    grid: list
    forward: list  # GammaEstimate for x -> y at each grid point
    reverse: list  # GammaEstimate for y -> x

    def rows(self):
        return [
            {"axis": self.axis, "value": g, "gamma_xy": f.value, "gamma_yx": r.value}
            for g, f, r in zip(self.grid, self.forward, self.reverse)
        ]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["axis", "value", "gamma_xy", "gamma_yx"], lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({**row, "gamma_xy": repr(row["gamma_xy"]), "gamma_yx": repr(row["gamma_yx"])})
        return buf.getvalue()


def _check_grid(grid, lo, hi, name):
    grid = [int(g) for g in grid]
    if not grid:
        raise ValueError(f"{name} grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"{name} grid must be strictly increasing")
    if grid[0] < lo or grid[-1] > hi:
        raise ValueError(f"{name} grid must lie within [{lo}, {hi}]")
    return grid


def _pairs(x, y, variant):
    return PreparedPair(x, y, variant), PreparedPair(y, x, variant)


def sweep_p(x, y, p_grid, k=None, variant=GammaVariant.STANDARD, divisor_mode=DivisorMode.PAPER_K):
    fwd, rev = _pairs(x, y, variant)
    n = fwd.n
    k = default_k(n) if k is None else int(k)
    grid = _check_grid(p_grid, 0, n - 1, "p")
    return SweepResult(
        "p",
        grid,
        [fwd.estimate(p, k, divisor_mode) for p in grid],
        [rev.estimate(p, k, divisor_mode) for p in grid],
    )


def sweep_k(x, y, p, k_grid, variant=GammaVariant.STANDARD, divisor_mode=DivisorMode.PAPER_K):
    fwd, rev = _pairs(x, y, variant)
    grid = _check_grid(k_grid, 1, fwd.n, "k")
    return SweepResult(
        "k",
        grid,
        [fwd.estimate(p, k, divisor_mode) for k in grid],
        [rev.estimate(p, k, divisor_mode) for k in grid],
    )


def minimal_delay(x, y, k=None, tau=0.9, p_max=10, variant=GammaVariant.STANDARD,
                  divisor_mode=DivisorMode.PAPER_K):
    """Smallest delay ``s <= p_max`` whose estimate reaches ``tau``, or None."""
    if not 0 < tau < 1:
        raise ValueError(f"tau must be in (0, 1), got {tau}")
    pair = PreparedPair(x, y, variant)
    if not 0 <= p_max < pair.n:
        raise ValueError(f"p_max must be in [0, {pair.n - 1}]")
    k = default_k(pair.n) if k is None else int(k)
    start = 1 if pair.variant is GammaVariant.NO_INSTANTANEOUS else 0
    for s in range(start, p_max + 1):
        if pair.estimate(s, k, divisor_mode).value >= tau:
            return s
    return None


# --------------------------------------------------------------------------
# Extremogram

@dataclass
class Extremogram:
    lags: list
    values: np.ndarray  # NaN where no extreme of x has a partner at that lag
    counts: np.ndarray  # |S_h|

    @property
    def defined(self):
        return self.counts > 0


def cross_extremogram(x, y, h_grid, k=None):
    """Fraction of the top-``k`` times of ``x`` followed ``h`` steps later by ``y`` above its k-th largest."""
    xv, yv = as_array(x), as_array(y)
    n = xv.size
    if yv.size != n:
        raise ValueError(f"length mismatch: {n} vs {yv.size}")
    k = default_k(n) if k is None else int(k)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    lags = [int(h) for h in h_grid]
    if any(h < 0 or h > n - 1 for h in lags):
        raise ValueError(f"lags must lie within [0, {n - 1}]")
    top = top_k_indices(xv, k)
    y_thr = kth_largest(yv, k)
    values = np.full(len(lags), np.nan)
    counts = np.zeros(len(lags), dtype=np.int64)
    for j, h in enumerate(lags):
        sel = top[top <= n - 1 - h]
        counts[j] = sel.size
        if sel.size:
            values[j] = np.count_nonzero(yv[sel + h] > y_thr) / sel.size
    return Extremogram(lags, values, counts)


# --------------------------------------------------------------------------
# Tail index

@dataclass(frozen=True)
class TailIndexEstimate:
    gamma_hat: float
    k_used: int
    ci_low: float
    ci_high: float
    confidence_level: float

    def to_dict(self):
        return {
            "gamma_hat": self.gamma_hat,
            "k_used": self.k_used,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "confidence_level": self.confidence_level,
        }


def hill_estimate(series, k, confidence=0.95):
    """Hill estimate of the extreme value index from the ``k`` upper order statistics.

    The interval is the asymptotic normal one, ``gamma * (1 +- z / sqrt(k))``,
    clamped below at zero. Upper tail only: negate first for a lower tail.
    """
    v = as_array(series)
    n = v.size
    k = int(k)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k >= n:
        raise ValueError(f"k must be below n = {n}")
    if not 0 < confidence < 1:
        raise ValueError("confidence must be in (0, 1)")
    s = np.sort(v)
    upper = s[n - k:]
    base = s[n - k - 1]
    if not base > 0:
        raise ValueError(
            f"the order statistic below the top {k} is {base!r}; "
            "shift or filter the data so the tail is positive"
        )
    gamma = float(np.mean(np.log(upper / base)))
    z = NormalDist().inv_cdf((1 + confidence) / 2)
    half = gamma * z / math.sqrt(k)
    return TailIndexEstimate(gamma, k, max(0.0, gamma - half), gamma + half, confidence)


# --------------------------------------------------------------------------
# Pair decisions and graphs

class Verdict(str, Enum):
    X_TO_Y = "XtoY"
    Y_TO_X = "YtoX"
    NO_EDGE = "NoEdge"
    AMBIGUOUS = "Ambiguous"


@dataclass(frozen=True)
class PairDecision:
    gamma_xy: object
    gamma_yx: object
    verdict: Verdict
    tau_hi: float
    tau_lo: float


def _value(g):
    return g.value if hasattr(g, "value") else float(g)


def decide_pair(gamma_xy, gamma_yx, tau_hi=0.9, tau_lo=0.8):
    """Directional verdict from the two estimates.

    X -> Y needs ``gamma_xy > tau_hi`` and ``gamma_yx < tau_lo`` (and
    symmetrically); both above ``tau_hi`` is ambiguous, anything else is no edge.
    """
    if hasattr(gamma_xy, "config") and hasattr(gamma_yx, "config"):
        if gamma_xy.config != gamma_yx.config:
            raise ValueError("both estimates must share (p, k, variant, divisor, n)")
    a, b = _value(gamma_xy), _value(gamma_yx)
    if a > tau_hi and b < tau_lo:
        verdict = Verdict.X_TO_Y
    elif b > tau_hi and a < tau_lo:
        verdict = Verdict.Y_TO_X
    elif a > tau_hi and b > tau_hi:
        verdict = Verdict.AMBIGUOUS
    else:
        verdict = Verdict.NO_EDGE
    return PairDecision(gamma_xy, gamma_yx, verdict, tau_hi, tau_lo)


@dataclass
class CausalGraph:
    nodes: list
    edges: list = field(default_factory=list)  # (from, to, PairDecision)
    ambiguous: list = field(default_factory=list)  # (a, b, PairDecision)
    decisions: dict = field(default_factory=dict)  # (a, b) -> PairDecision, a < b

    def to_dict(self):
        edges = []
        for src, dst, dec in self.edges:
            fwd, rev = (dec.gamma_xy, dec.gamma_yx) if dec.verdict is Verdict.X_TO_Y else (dec.gamma_yx, dec.gamma_xy)
            edges.append({"from": src, "to": dst, "gamma_fwd": _value(fwd), "gamma_rev": _value(rev)})
        return {"nodes": list(self.nodes), "edges": edges, "ambiguous": [[a, b] for a, b, _ in self.ambiguous]}

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)


def build_graph(series, p, k=None, tau_hi=0.9, tau_lo=0.8, variant=GammaVariant.STANDARD,
                divisor_mode=DivisorMode.PAPER_K):
    """Evaluate every pair of series and keep directional verdicts as edges.

    ``series`` is a mapping name -> values or a sequence of ``Series``.
    Pairs are visited in lexicographic order of names.
    """
    if isinstance(series, dict):
        items = {str(name): as_array(v) for name, v in series.items()}
    else:
        items = {s.name: s.values for s in series}
    if len(items) < 2:
        raise ValueError("need at least two series")
    lengths = {v.size for v in items.values()}
    if len(lengths) != 1:
        raise ValueError(f"series lengths differ: {sorted(lengths)}")
    n = lengths.pop()
    k = default_k(n) if k is None else int(k)
    names = sorted(items)
    graph = CausalGraph(names)
    for a, b in combinations(names, 2):
        fwd = PreparedPair(items[a], items[b], variant).estimate(p, k, divisor_mode)
        rev = PreparedPair(items[b], items[a], variant).estimate(p, k, divisor_mode)
        dec = decide_pair(fwd, rev, tau_hi, tau_lo)
        graph.decisions[(a, b)] = dec
        if dec.verdict is Verdict.X_TO_Y:
            graph.edges.append((a, b, dec))
        elif dec.verdict is Verdict.Y_TO_X:
            graph.edges.append((b, a, dec))
        elif dec.verdict is Verdict.AMBIGUOUS:
            graph.ambiguous.append((a, b, dec))
    graph.edges.sort(key=lambda e: (e[0], e[1]))
    return graph


# --------------------------------------------------------------------------
# Preprocessing

def _parse_step(step):
    if isinstance(step, (tuple, list)):
        name, *args = step
    else:
        name, _, arg = str(step).partition(":")
        args = [arg] if arg else []
    name = name.lower().replace("-", "_")
    if name == "seasonal":
        name = "seasonal_anomaly"
    if name == "detrend":
        name = "linear_detrend"
    if name not in ("negate", "seasonal_anomaly", "difference", "linear_detrend"):
        raise ValueError(f"unknown preprocessing step {step!r}")
    if name == "seasonal_anomaly":
        if len(args) != 1:
            raise ValueError("seasonal_anomaly needs a period")
        return name, int(args[0])
    return name, None


def negate(v):
    return -v


def seasonal_anomaly(v, period):
    """Subtract the per-phase mean, phase = index mod period."""
    if period < 2:
        raise ValueError("period must be at least 2")
    if v.size < period:
        raise ValueError(f"series of length {v.size} is shorter than one period ({period})")
    out = np.empty_like(v)
    for ph in range(period):
        block = v[ph::period]
        # centre on the first value so an exactly periodic series maps to exact zeros
        dev = block - block[0]
        out[ph::period] = dev - np.mean(dev)
    return out


def difference(v):
    if v.size < 3:
        raise ValueError("differencing needs at least 3 values")
    return np.diff(v)


def linear_detrend(v):
    t = np.arange(v.size, dtype=np.float64)
    tc = t - t.mean()
    yc = v - v.mean()
    slope = float(np.dot(tc, yc) / np.dot(tc, tc))
    return yc - slope * tc


def preprocess(series, steps):
    """Apply ``negate``, ``seasonal_anomaly:<period>``, ``difference``, ``linear_detrend`` in order."""
    name = series.name if isinstance(series, Series) else "series"
    v = as_array(series).copy()
    for step in steps:
        op, arg = _parse_step(step)
        if op == "negate":
            v = negate(v)
        elif op == "seasonal_anomaly":
            v = seasonal_anomaly(v, arg)
        elif op == "difference":
            v = difference(v)
        else:
            v = linear_detrend(v)
    return Series(name, v)
