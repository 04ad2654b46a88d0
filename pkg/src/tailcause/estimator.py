"""Rank-based estimator of the causal tail coefficient for time series.

For a pair of equally long series ``x`` and ``y`` the estimate averages,
over the ``k`` largest observations of ``x``, the largest empirical CDF
value of ``y`` seen at the same time step and over the next ``p`` steps.
Values near 1 mean that extremes of ``x`` are reliably followed by
extremes of ``y``.

Time is 0-based internally. The window for a selected time ``i`` is the
observation at ``i`` plus the next ``p`` observations (``i + 1 .. i + p``
when instantaneous effects are excluded), and only ``i <= n - 1 - p`` are
eligible so that the window fits inside the sample.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np


class GammaVariant(str, Enum):
    STANDARD = "standard"
    NO_INSTANTANEOUS = "no0"
    ABSOLUTE = "abs"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {
            "standard": cls.STANDARD,
            "no0": cls.NO_INSTANTANEOUS,
            "noinstantaneous": cls.NO_INSTANTANEOUS,
            "no_instantaneous": cls.NO_INSTANTANEOUS,
            "abs": cls.ABSOLUTE,
            "absolute": cls.ABSOLUTE,
            "absolutevalue": cls.ABSOLUTE,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown variant {value!r}") from None


class DivisorMode(str, Enum):
    PAPER_K = "paperk"
    RENORMALIZE = "renormalize"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        v = str(value).lower().replace("_", "").replace("-", "")
        for m in cls:
            if m.value == v:
                return m
        raise ValueError(f"unknown divisor mode {value!r}")


@dataclass(frozen=True)
class Series:
    """A named, uniformly sampled sequence of finite reals."""

    name: str
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).ravel()
        if v.size < 2:
            raise ValueError(f"series {self.name!r} needs at least 2 values, got {v.size}")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ValueError(f"series {self.name!r} has a non-finite value at index {bad}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_array(data):
    """Values of a ``Series`` or any 1-d array-like, as float64."""
    if isinstance(data, Series):
        return data.values
    a = np.asarray(data, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("empty series")
    if not np.all(np.isfinite(a)):
        raise ValueError("series contains non-finite values")
    return a


@dataclass(frozen=True)
class GammaEstimate:
    value: float
    p: int
    k: int
    variant: GammaVariant
    n: int
    selected_count: int
    divisor_mode: DivisorMode

    @property
    def config(self):
        return (self.p, self.k, self.variant, self.divisor_mode, self.n)

    def to_dict(self):
        return {
            "value": self.value,
            "p": self.p,
            "k": self.k,
            "variant": self.variant.value,
            "n": self.n,
            "selected_count": self.selected_count,
            "divisor_mode": self.divisor_mode.value,
        }


class EcdfView:
    """Empirical CDF ``t -> #{j : v_j <= t} / n`` over a fixed sample."""

    def __init__(self, values):
        v = as_array(values)
        self.n = v.size
        self.sorted_values = np.sort(v, kind="stable")

    def counts(self, t):
        """Number of sample values ``<= t`` (the maximal rank under ties)."""
        return np.searchsorted(self.sorted_values, t, side="right")

    def __call__(self, t):
        c = self.counts(t)
        if np.ndim(c) == 0:
            return int(c) / self.n
        return c / self.n


def empirical_cdf(series):
    return EcdfView(series)


def rank_counts(values):
    """For each observation, how many observations are ``<=`` it."""
    ecdf = EcdfView(values)
    return ecdf.counts(as_array(values)).astype(np.int64)


def kth_largest(series, k):
    v = as_array(series)
    k = int(k)
    if not 1 <= k <= v.size:
        raise ValueError(f"k must be in [1, {v.size}], got {k}")
    return float(np.partition(v, v.size - k)[v.size - k])


def top_k_indices(values, k):
    """Indices of the ``k`` largest values; ties at the threshold go to the earliest."""
    v = as_array(values)
    order = np.argsort(-v, kind="stable")
    return np.sort(order[:k])


def default_k(n):
    """``floor(sqrt(n))``, at least 1."""
    return max(1, math.isqrt(int(n)))


def _window_offsets(p, variant):
    start = 1 if variant is GammaVariant.NO_INSTANTANEOUS else 0
    return np.arange(start, p + 1)


def _validate(n_x, n_y, p, k, variant):
    if n_x != n_y:
        raise ValueError(f"length mismatch: {n_x} vs {n_y}")
    n = n_x
    if int(p) != p or p < 0:
        raise ValueError(f"p must be a non-negative integer, got {p}")
    if p >= n:
        raise ValueError(f"p must be < n = {n}, got {p}")
    if int(k) != k or not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if variant is GammaVariant.NO_INSTANTANEOUS and p == 0:
        raise ValueError("the no-instantaneous variant needs p >= 1")


class PreparedPair:
    """Ranks and extreme-order of a pair, reusable across many (p, k) queries."""

    def __init__(self, x, y, variant=GammaVariant.STANDARD):
        self.variant = GammaVariant.parse(variant)
        xv, yv = as_array(x), as_array(y)
        if xv.size != yv.size:
            raise ValueError(f"length mismatch: {xv.size} vs {yv.size}")
        if self.variant is GammaVariant.ABSOLUTE:
            xv, yv = np.abs(xv), np.abs(yv)
        self.n = xv.size
        self.y_counts = rank_counts(yv)
        # descending by value, earliest index first among ties
        self.x_order = np.argsort(-xv, kind="stable")

    def estimate(self, p, k, divisor_mode=DivisorMode.PAPER_K, variant=None):
        variant = self.variant if variant is None else GammaVariant.parse(variant)
        if (variant is GammaVariant.ABSOLUTE) != (self.variant is GammaVariant.ABSOLUTE):
            raise ValueError("absolute-value variant needs its own prepared pair")
        divisor_mode = DivisorMode.parse(divisor_mode)
        _validate(self.n, self.n, p, k, variant)
        p, k = int(p), int(k)
        top = self.x_order[:k]
        selected = np.sort(top[top <= self.n - 1 - p])
        m = selected.size
        if m:
            window = selected[:, None] + _window_offsets(p, variant)[None, :]
            total = int(self.y_counts[window].max(axis=1).sum())
        else:
            total = 0
        if divisor_mode is DivisorMode.PAPER_K:
            value = total / (self.n * k)
        elif m:
            value = total / (self.n * m)
        else:
            value = math.nan
        return GammaEstimate(
            value=value,
            p=p,
            k=k,
            variant=variant,
            n=self.n,
            selected_count=m,
            divisor_mode=divisor_mode,
        )


def causal_tail_estimate(
    x,
    y,
    p,
    k,
    variant=GammaVariant.STANDARD,
    divisor_mode=DivisorMode.PAPER_K,
):
    """Estimate the causal tail coefficient of ``x`` on ``y`` with extremal delay ``p``.

    Parameters
    ----------
    x, y : Series or array_like
        Equally long samples; ``x`` is the candidate cause.
    p : int
        Extremal delay, ``0 <= p < n``.
    k : int
        Number of upper extremes of ``x`` to condition on, ``1 <= k <= n``.
    variant : GammaVariant or str
        ``standard`` uses the window ``0..p``, ``no0`` uses ``1..p``
        (needs ``p >= 1``), ``abs`` applies ``|.|`` to both series first.
    divisor_mode : DivisorMode or str
        ``paperk`` divides by ``k`` even when some of the top-``k`` times
        are too late for a full window; ``renormalize`` divides by the
        number actually summed (NaN when that number is zero).

    Returns
    -------
    GammaEstimate
        ``selected_count`` reports how many of the ``k`` extremes were used.

    Notes
    -----
    The sum is accumulated over integer rank counts and divided once, so
    the result is the correctly rounded value of the exact rational.
    """
    variant = GammaVariant.parse(variant)
    xv, yv = as_array(x), as_array(y)
    _validate(xv.size, yv.size, p, k, variant)
    return PreparedPair(xv, yv, variant).estimate(p, k, divisor_mode)


def gamma_with_default_k(x, y, p, variant=GammaVariant.STANDARD):
    n = as_array(x).size
    return causal_tail_estimate(x, y, p, default_k(n), variant, DivisorMode.PAPER_K)


def gamma_both(x, y, p, k=None, variant=GammaVariant.STANDARD, divisor_mode=DivisorMode.PAPER_K):
    """Estimates for both directions ``(x -> y, y -> x)`` with shared settings."""
    xv, yv = as_array(x), as_array(y)
    if k is None:
        k = default_k(xv.size)
    return (
        causal_tail_estimate(xv, yv, p, k, variant, divisor_mode),
        causal_tail_estimate(yv, xv, p, k, variant, divisor_mode),
    )
