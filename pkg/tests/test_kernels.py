import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tailcause import kernels
from tailcause.models import PRESETS, model3, simulate
from tailcause.rng import make_rng

needs_compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled extension not built")


@needs_compiled
@pytest.mark.parametrize("name", sorted(PRESETS))
def test_backends_bit_identical_on_presets(name):
    spec = PRESETS[name]()
    a = simulate(spec, 3000, 17, backend="compiled")
    b = simulate(spec, 3000, 17, backend="python")
    for u, v in zip(a, b):
        assert np.array_equal(u.values, v.values)


@needs_compiled
@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_backends_bit_identical_on_random_terms(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    terms = []
    for _ in range(int(rng.integers(0, 7))):
        kind = int(rng.integers(0, 4))
        p1 = float(rng.uniform(0.05, 0.6))
        p2 = float(rng.uniform(0, 3))
        terms.append((int(rng.integers(d)), int(rng.integers(d)), int(rng.integers(1, 5)), kind, p1, p2))
    noise = make_rng(seed).standard_normal((200, d))
    a = kernels.additive_recursion(noise, terms, backend="compiled")
    b = kernels.additive_recursion(noise, terms, backend="python")
    assert np.array_equal(a, b)


def test_no_terms_returns_noise():
    noise = np.arange(12.0).reshape(6, 2)
    assert np.array_equal(kernels.additive_recursion(noise, []), noise)


@pytest.mark.parametrize("term", [(2, 0, 1, 1, 0.5, 0.0), (0, 0, 0, 1, 0.5, 0.0), (0, -1, 1, 1, 0.5, 0.0)])
def test_invalid_terms(term):
    with pytest.raises(ValueError):
        kernels.additive_recursion(np.zeros((5, 2)), [term])


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.additive_recursion(np.zeros((5, 2)), [], backend="gpu")


def test_env_var_forces_fallback():
    env = dict(os.environ, TAILCAUSE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from tailcause import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_fallback_matches_default_backend_on_confounded_var():
    a = simulate(model3(1.0), 500, 3)
    b = simulate(model3(1.0), 500, 3, backend="python")
    for u, v in zip(a, b):
        assert np.array_equal(u.values, v.values)
