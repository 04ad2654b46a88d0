"""Causal direction between heavy-tailed time series, read off their extremes."""

__version__ = "0.1.0"

from tailcause.estimator import (  # noqa: E402
    DivisorMode,
    EcdfView,
    GammaEstimate,
    GammaVariant,
    Series,
    causal_tail_estimate,
    default_k,
    empirical_cdf,
    gamma_both,
    gamma_with_default_k,
    kth_largest,
)
from tailcause.analysis import (  # noqa: E402
    build_graph,
    cross_extremogram,
    decide_pair,
    hill_estimate,
    minimal_delay,
    preprocess,
    sweep_k,
    sweep_p,
)
from tailcause.granger import granger_test  # noqa: E402
from tailcause.models import (  # noqa: E402
    NaarSpec,
    VarSpec,
    check_stability,
    preset,
    simulate,
    simulate_naar,
    simulate_var,
)
from tailcause.rng import NoiseSpec  # noqa: E402

__all__ = [
    "DivisorMode",
    "EcdfView",
    "GammaEstimate",
    "GammaVariant",
    "NaarSpec",
    "NoiseSpec",
    "Series",
    "VarSpec",
    "build_graph",
    "causal_tail_estimate",
    "check_stability",
    "cross_extremogram",
    "decide_pair",
    "default_k",
    "empirical_cdf",
    "gamma_both",
    "gamma_with_default_k",
    "granger_test",
    "hill_estimate",
    "kth_largest",
    "minimal_delay",
    "preprocess",
    "preset",
    "simulate",
    "simulate_naar",
    "simulate_var",
    "sweep_k",
    "sweep_p",
]
