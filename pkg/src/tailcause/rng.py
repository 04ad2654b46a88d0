"""Seedable samplers for the noise laws used by the simulators.

Uniforms come from numpy's counter-based Philox generator; every law is an
explicit transform of those uniforms so the draw sequence for a given seed
is fixed by this module rather than by numpy's distribution internals.

Sub-streams are derived from ``(seed, *stream)`` with ``SeedSequence``
spawn keys, so a Monte Carlo repetition can build its generator from its
own index without touching any shared state.
"""

from dataclasses import dataclass, field
import math

import numpy as np

_MAX_SEED = 2**64 - 1


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= _MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


@dataclass(frozen=True)
class RngState:
    """A master seed plus a stream path identifying an independent sub-stream."""

    seed: int
    stream: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "seed", _check_seed(self.seed))
        object.__setattr__(self, "stream", tuple(int(s) for s in self.stream))

    def spawn(self, *keys):
        return RngState(self.seed, self.stream + tuple(keys))

    def generator(self):
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(ss))


def make_rng(seed, *stream):
    """Generator for ``seed`` restricted to the sub-stream ``stream``."""
    return RngState(seed, stream).generator()


def derive_seed(seed, *keys):
    """Deterministic 64-bit child seed of ``seed`` for the path ``keys``."""
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _uniform(rng, size):
    return rng.random(size)


# Inverse transforms, exposed so the u -> x maps can be checked directly.

def pareto_from_uniform(u, a=1.0, b=1.0):
    return a * np.power(1.0 - np.asarray(u, dtype=np.float64), -1.0 / b)


def cauchy_from_uniform(u):
    return np.tan(np.pi * (np.asarray(u, dtype=np.float64) - 0.5))


def gaussian_from_uniforms(u1, u2):
    """Box-Muller: two uniform arrays to two independent standard normal arrays."""
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)
    r = np.sqrt(-2.0 * np.log1p(-u1))
    theta = 2.0 * np.pi * u2
    return r * np.cos(theta), r * np.sin(theta)


def _finish(x, size):
    if size is None:
        return float(x[0])
    return x


def _n(size):
    if size is None:
        return 1
    return int(np.prod(size))


def sample_pareto(a, b, rng, size=None):
    """Pareto(a, b) with survival ``(a / x) ** b`` for ``x >= a``."""
    if not (a > 0 and b > 0):
        raise ValueError(f"Pareto parameters must be positive, got a={a}, b={b}")
    x = pareto_from_uniform(_uniform(rng, _n(size)), a, b)
    return _finish(x if size is None else x.reshape(size), size)


def sample_cauchy(rng, size=None):
    x = cauchy_from_uniform(_uniform(rng, _n(size)))
    return _finish(x if size is None else x.reshape(size), size)


def _standard_normal(rng, m):
    half = (m + 1) // 2
    u = _uniform(rng, 2 * half)
    z1, z2 = gaussian_from_uniforms(u[:half], u[half:])
    z = np.empty(2 * half)
    z[0::2] = z1
    z[1::2] = z2
    return z[:m]


def sample_gaussian(mean, sd, rng, size=None):
    if not sd > 0:
        raise ValueError(f"sd must be positive, got {sd}")
    x = mean + sd * _standard_normal(rng, _n(size))
    return _finish(x if size is None else x.reshape(size), size)


def sample_student_t(nu, rng, size=None):
    """Student t with integer ``nu``: Z / sqrt(V / nu), V a sum of nu squared normals."""
    if int(nu) != nu or nu < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {nu}")
    nu = int(nu)
    m = _n(size)
    z = _standard_normal(rng, m * (nu + 1)).reshape(m, nu + 1)
    v = np.sum(z[:, 1:] ** 2, axis=1)
    x = z[:, 0] / np.sqrt(v / nu)
    return _finish(x if size is None else x.reshape(size), size)


_DISTRIBUTIONS = ("pareto", "cauchy", "student_t", "gaussian", "constant")


@dataclass(frozen=True)
class NoiseSpec:
    """One noise law plus a multiplier applied to every draw.

    ``params`` holds (a, b) for pareto, (nu,) for student_t, (mean, sd) for
    gaussian, (value,) for constant and nothing for cauchy.
    """

    distribution: str
    params: tuple = ()
    scale_multiplier: float = 1.0

    def __post_init__(self):
        dist = self.distribution.lower().replace("-", "_")
        if dist in ("t", "student"):
            dist = "student_t"
        if dist in ("normal", "gauss"):
            dist = "gaussian"
        if dist not in _DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        object.__setattr__(self, "distribution", dist)
        params = tuple(float(p) for p in self.params)
        defaults = {"pareto": (1.0, 1.0), "cauchy": (), "student_t": None, "gaussian": (0.0, 1.0), "constant": (0.0,)}
        if not params:
            if defaults[dist] is None:
                raise ValueError("student_t needs degrees of freedom")
            params = defaults[dist]
        expected = {"pareto": 2, "cauchy": 0, "student_t": 1, "gaussian": 2, "constant": 1}[dist]
        if len(params) != expected:
            raise ValueError(f"{dist} takes {expected} parameters, got {len(params)}")
        if dist == "pareto" and not (params[0] > 0 and params[1] > 0):
            raise ValueError("Pareto parameters must be positive")
        if dist == "student_t" and (params[0] < 1 or params[0] != int(params[0])):
            raise ValueError("student_t degrees of freedom must be a positive integer")
        if dist == "gaussian" and not params[1] > 0:
            raise ValueError("gaussian sd must be positive")
        if not (self.scale_multiplier > 0 and math.isfinite(self.scale_multiplier)):
            raise ValueError("scale_multiplier must be a positive finite number")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "scale_multiplier", float(self.scale_multiplier))

    @property
    def nonnegative(self):
        return self.distribution == "pareto" or (self.distribution == "constant" and self.params[0] >= 0)

    def sample(self, rng, size):
        dist, p = self.distribution, self.params
        if dist == "pareto":
            x = sample_pareto(p[0], p[1], rng, size)
        elif dist == "cauchy":
            x = sample_cauchy(rng, size)
        elif dist == "student_t":
            x = sample_student_t(int(p[0]), rng, size)
        elif dist == "gaussian":
            x = sample_gaussian(p[0], p[1], rng, size)
        else:
            x = np.full(size, p[0])
        if self.scale_multiplier != 1.0:
            x = self.scale_multiplier * x
        return x

    def to_dict(self):
        d = {"distribution": self.distribution, "params": list(self.params)}
        if self.scale_multiplier != 1.0:
            d["scale_multiplier"] = self.scale_multiplier
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["distribution"], tuple(d.get("params", ())), d.get("scale_multiplier", 1.0))

    @classmethod
    def parse(cls, text):
        """Parse ``name[:p1,p2][*mult]``, e.g. ``pareto:1,1`` or ``pareto:1,1*0.5``."""
        text = text.strip()
        mult = 1.0
        if "*" in text:
            text, m = text.rsplit("*", 1)
            mult = float(m)
        name, _, rest = text.partition(":")
        params = tuple(float(v) for v in rest.split(",") if v.strip()) if rest else ()
        return cls(name, params, mult)

    def __str__(self):
        s = self.distribution
        if self.params:
            s += ":" + ",".join(f"{p:g}" for p in self.params)
        if self.scale_multiplier != 1.0:
            s += f"*{self.scale_multiplier:g}"
        return s


PARETO_STANDARD = NoiseSpec("pareto", (1.0, 1.0))
CAUCHY = NoiseSpec("cauchy")
GAUSSIAN_STANDARD = NoiseSpec("gaussian", (0.0, 1.0))
