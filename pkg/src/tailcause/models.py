"""Generative models: linear VAR(q) and nonlinear additive NAAR(q) simulators.

Both kinds compile to a list of additive terms that the recursion kernel in
:mod:`tailcause.kernels` runs from a zero initial state. A burn-in prefix is
discarded before the requested ``n`` observations are returned.
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from tailcause import kernels
from tailcause.estimator import Series
from tailcause.rng import CAUCHY, PARETO_STANDARD, NoiseSpec, make_rng

DEFAULT_BURN_IN = 1000


class UnstableModelError(ValueError):
    def __init__(self, radius):
        self.radius = radius
        super().__init__(f"VAR is not stable: spectral radius {radius:.6g} >= 1")


# --------------------------------------------------------------------------
# Function descriptors for NAAR terms

_FUNCTION_KINDS = ("zero", "linear", "sqrt", "power_threshold", "half_linear")


@dataclass(frozen=True)
class FunctionDescriptor:
    """A scalar map used in a NAAR equation.

    ``zero``: 0; ``linear``: c*t with c in [0, 1); ``sqrt``: sqrt(max(t, 0));
    ``power_threshold``: t**e if t > T else 0, e in (0, 1), T >= 0;
    ``half_linear``: c*t for any finite c.
    """

    kind: str = "zero"
    params: tuple = ()

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in _FUNCTION_KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}")
        params = tuple(float(v) for v in self.params)
        n_params = {"zero": 0, "linear": 1, "sqrt": 0, "power_threshold": 2, "half_linear": 1}[kind]
        if len(params) != n_params:
            raise ValueError(f"{kind} takes {n_params} parameters, got {len(params)}")
        if kind == "linear" and not 0 <= params[0] < 1:
            raise ValueError(f"linear slope must be in [0, 1), got {params[0]}")
        if kind == "power_threshold" and not (0 < params[0] < 1 and params[1] >= 0):
            raise ValueError("power_threshold needs exponent in (0, 1) and threshold >= 0")
        if kind == "half_linear" and not math.isfinite(params[0]):
            raise ValueError("half_linear slope must be finite")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", params)

    @property
    def is_zero(self):
        return self.kind == "zero" or (self.kind in ("linear", "half_linear") and self.params[0] == 0.0)

    def kernel_code(self):
        if self.kind in ("linear", "half_linear"):
            return kernels.KIND_LINEAR, self.params[0], 0.0
        if self.kind == "sqrt":
            return kernels.KIND_SQRT, 0.0, 0.0
        if self.kind == "power_threshold":
            return kernels.KIND_POWER_THRESHOLD, self.params[0], self.params[1]
        return kernels.KIND_ZERO, 0.0, 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind in ("linear", "half_linear"):
            return self.params[0] * t
        if self.kind == "sqrt":
            return np.sqrt(np.maximum(t, 0.0))
        if self.kind == "power_threshold":
            e, thr = self.params
            return np.where(t > thr, np.power(np.maximum(t, 0.0), e), 0.0)
        return np.zeros_like(t)

    def to_dict(self):
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], tuple(d.get("params", ())))


ZERO = FunctionDescriptor("zero")


# --------------------------------------------------------------------------
# VAR

@dataclass(frozen=True)
class VarSpec:
    """``X_t = sum_i A_i X_{t-i} + eps_t`` with per-channel noise.

    ``coefficients`` has shape (q, d, d); ``coefficients[i-1][r, c]`` is the
    weight of channel ``c`` at lag ``i`` in the equation for channel ``r``.
    """

    coefficients: np.ndarray
    noise: tuple
    burn_in: int = DEFAULT_BURN_IN
    names: tuple = ()

    def __post_init__(self):
        A = np.array(self.coefficients, dtype=np.float64)
        if A.ndim == 2:
            A = A[None]
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise ValueError(f"coefficient matrices must be square, got shape {A.shape}")
        if A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError("need q >= 1 and d >= 1")
        if not np.all(np.isfinite(A)):
            raise ValueError("coefficients must be finite")
        d = A.shape[1]
        noise = tuple(self.noise)
        if len(noise) == 1 and d > 1:
            noise = noise * d
        if len(noise) != d:
            raise ValueError(f"need {d} noise specs, got {len(noise)}")
        noise = tuple(n if isinstance(n, NoiseSpec) else NoiseSpec.parse(str(n)) for n in noise)
        names = tuple(self.names) or _default_names(d)
        if len(names) != d or len(set(names)) != d:
            raise ValueError("names must be unique, one per channel")
        if int(self.burn_in) != self.burn_in or self.burn_in < 0:
            raise ValueError("burn_in must be a non-negative integer")
        A.flags.writeable = False
        object.__setattr__(self, "coefficients", A)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "names", tuple(str(n) for n in names))
        object.__setattr__(self, "burn_in", int(self.burn_in))

    @property
    def dimension(self):
        return self.coefficients.shape[1]

    @property
    def order(self):
        return self.coefficients.shape[0]

    def terms(self):
        out = []
        q, d = self.order, self.dimension
        for lag in range(1, q + 1):
            A = self.coefficients[lag - 1]
            for r in range(d):
                for c in range(d):
                    if A[r, c] != 0.0:
                        out.append((r, c, lag, kernels.KIND_LINEAR, float(A[r, c]), 0.0))
        return out

    def to_dict(self):
        return {
            "type": "var",
            "names": list(self.names),
            "coefficients": self.coefficients.tolist(),
            "noise": [n.to_dict() for n in self.noise],
            "burn_in": self.burn_in,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            coefficients=np.array(d["coefficients"], dtype=np.float64),
            noise=tuple(NoiseSpec.from_dict(n) for n in d["noise"]),
            burn_in=d.get("burn_in", DEFAULT_BURN_IN),
            names=tuple(d.get("names", ())),
        )


def _default_names(d):
    base = ("X", "Y", "Z")
    if d <= 3:
        return base[:d]
    return tuple(f"X{i + 1}" for i in range(d))


def companion_matrix(spec):
    q, d = spec.order, spec.dimension
    C = np.zeros((d * q, d * q))
    C[:d, :] = np.hstack(list(spec.coefficients))
    if q > 1:
        C[d:, :-d] = np.eye(d * (q - 1))
    return C


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    spectral_radius: float


def check_stability(spec):
    """Spectral radius of the companion matrix; stable iff it is below 1."""
    eig = np.linalg.eigvals(companion_matrix(spec))
    radius = float(np.max(np.abs(eig))) if eig.size else 0.0
    # eigvals is accurate to roughly 1e-9 on these sizes; treat |lambda| within it of 1 as a unit root
    stable = radius < 1.0 - 1e-9
    return StabilityReport(stable, radius)


def _simulate_terms(terms, noise_specs, n, burn_in, seed, backend=None):
    T = burn_in + n
    rng = make_rng(seed)
    noise = np.empty((T, len(noise_specs)))
    for c, spec in enumerate(noise_specs):
        noise[:, c] = spec.sample(rng, T)
    out = kernels.additive_recursion(noise, terms, backend=backend)
    return out[burn_in:]


def var_filter(spec, noise, backend=None):
    """Run the VAR recursion on a given (T, d) noise matrix from a zero state."""
    return kernels.additive_recursion(noise, spec.terms(), backend=backend)


UNIT_ROOT_TOL = 1e-9


def simulate_var(spec, n, seed, backend=None, allow_unit_root=False):
    """Simulate ``n`` observations per channel; returns a list of Series.

    Unstable specs are refused. With ``allow_unit_root`` a spectral radius
    within ``UNIT_ROOT_TOL`` of 1 is accepted (the series is then
    non-stationary but does not explode); explosive specs are still refused.
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be at least 2")
    report = check_stability(spec)
    marginal = allow_unit_root and report.spectral_radius <= 1.0 + UNIT_ROOT_TOL
    if not (report.stable or marginal):
        raise UnstableModelError(report.spectral_radius)
    data = _simulate_terms(spec.terms(), spec.noise, n, spec.burn_in, seed, backend)
    return [Series(name, data[:, c]) for c, name in enumerate(spec.names)]


# --------------------------------------------------------------------------
# NAAR

@dataclass(frozen=True)
class Confounder:
    """A hidden AR(1) driver ``Z_t = self_coef * Z_{t-1} + eps_t^Z``.

    It enters the X equation as ``x_coef * Z_{t-x_lag}`` and the Y equation
    as ``y_coef * Z_{t-y_lag}``.
    """

    self_coef: float
    noise: NoiseSpec
    x_coef: float
    x_lag: int
    y_coef: float
    y_lag: int

    def __post_init__(self):
        if not 0 <= self.self_coef < 1:
            raise ValueError("confounder self coefficient must be in [0, 1)")
        if self.x_lag < 1 or self.y_lag < 1:
            raise ValueError("confounder lags must be >= 1")

    def to_dict(self):
        return {
            "self_coef": self.self_coef,
            "noise": self.noise.to_dict(),
            "x_coef": self.x_coef,
            "x_lag": self.x_lag,
            "y_coef": self.y_coef,
            "y_lag": self.y_lag,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            float(d["self_coef"]),
            NoiseSpec.from_dict(d["noise"]),
            float(d["x_coef"]),
            int(d["x_lag"]),
            float(d["y_coef"]),
            int(d["y_lag"]),
        )


@dataclass(frozen=True)
class NaarSpec:
    """``X_t = f1(X_{t-1}) + f2(Y_{t-q}) + eps^X``, ``Y_t = g1(Y_{t-1}) + g2(X_{t-q}) + eps^Y``."""

    f1: FunctionDescriptor
    f2: FunctionDescriptor
    g1: FunctionDescriptor
    g2: FunctionDescriptor
    lag: int
    noise_x: NoiseSpec
    noise_y: NoiseSpec
    burn_in: int = DEFAULT_BURN_IN
    confounder: Confounder = None
    names: tuple = ("X", "Y")

    def __post_init__(self):
        if int(self.lag) != self.lag or self.lag < 1:
            raise ValueError("lag must be a positive integer")
        if int(self.burn_in) != self.burn_in or self.burn_in < 0:
            raise ValueError("burn_in must be a non-negative integer")
        for name in ("f1", "f2", "g1", "g2"):
            if not isinstance(getattr(self, name), FunctionDescriptor):
                raise TypeError(f"{name} must be a FunctionDescriptor")

    @property
    def heavy_tailed_nonnegative(self):
        """Whether noise is non-negative as the heavy-tailed NAAR class requires."""
        ok = self.noise_x.nonnegative and self.noise_y.nonnegative
        if self.confounder is not None:
            ok = ok and self.confounder.noise.nonnegative
        return ok

    def channels(self):
        noise = [self.noise_x, self.noise_y]
        if self.confounder is not None:
            noise.append(self.confounder.noise)
        return noise

    def terms(self):
        X, Y, Z = 0, 1, 2
        out = []
        for tgt, src, lag, fn in (
            (X, X, 1, self.f1),
            (X, Y, self.lag, self.f2),
            (Y, Y, 1, self.g1),
            (Y, X, self.lag, self.g2),
        ):
            if not fn.is_zero:
                kind, a, b = fn.kernel_code()
                out.append((tgt, src, lag, kind, a, b))
        cf = self.confounder
        if cf is not None:
            if cf.self_coef:
                out.append((Z, Z, 1, kernels.KIND_LINEAR, cf.self_coef, 0.0))
            if cf.x_coef:
                out.append((X, Z, cf.x_lag, kernels.KIND_LINEAR, cf.x_coef, 0.0))
            if cf.y_coef:
                out.append((Y, Z, cf.y_lag, kernels.KIND_LINEAR, cf.y_coef, 0.0))
        return out

    def to_dict(self):
        d = {
            "type": "naar",
            "names": list(self.names),
            "f1": self.f1.to_dict(),
            "f2": self.f2.to_dict(),
            "g1": self.g1.to_dict(),
            "g2": self.g2.to_dict(),
            "lag": self.lag,
            "noise_x": self.noise_x.to_dict(),
            "noise_y": self.noise_y.to_dict(),
            "burn_in": self.burn_in,
        }
        if self.confounder is not None:
            d["confounder"] = self.confounder.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        cf = d.get("confounder")
        return cls(
            f1=FunctionDescriptor.from_dict(d["f1"]),
            f2=FunctionDescriptor.from_dict(d["f2"]),
            g1=FunctionDescriptor.from_dict(d["g1"]),
            g2=FunctionDescriptor.from_dict(d["g2"]),
            lag=int(d["lag"]),
            noise_x=NoiseSpec.from_dict(d["noise_x"]),
            noise_y=NoiseSpec.from_dict(d["noise_y"]),
            burn_in=int(d.get("burn_in", DEFAULT_BURN_IN)),
            confounder=Confounder.from_dict(cf) if cf else None,
            names=tuple(d.get("names", ("X", "Y"))),
        )


def simulate_naar(spec, n, seed, backend=None, return_confounder=False):
    """Simulate ``(X, Y)``; with ``return_confounder`` also the hidden Z (or None)."""
    n = int(n)
    if n < 2:
        raise ValueError("n must be at least 2")
    data = _simulate_terms(spec.terms(), spec.channels(), n, spec.burn_in, seed, backend)
    x = Series(spec.names[0], data[:, 0])
    y = Series(spec.names[1], data[:, 1])
    if return_confounder:
        z = Series("Z", data[:, 2]) if spec.confounder is not None else None
        return x, y, z
    return x, y


def simulate(spec, n, seed, backend=None, allow_unit_root=False):
    """Simulate either model kind; always returns the observed channels as a list."""
    if isinstance(spec, VarSpec):
        return simulate_var(spec, n, seed, backend, allow_unit_root)
    return list(simulate_naar(spec, n, seed, backend))


# --------------------------------------------------------------------------
# Causal (moving-average) representation

@dataclass(frozen=True)
class MaCoefficients:
    """Bivariate MA coefficients: X on eps^X (a), X on eps^Y (c), Y on eps^Y (b), Y on eps^X (d)."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    @property
    def horizon(self):
        return self.a.size - 1


def ma_matrices(spec, horizon):
    """``Psi_0 = I``, ``Psi_j = sum_{i=1}^{min(j, q)} A_i Psi_{j-i}``; shape (H+1, d, d)."""
    q, d = spec.order, spec.dimension
    psi = np.zeros((horizon + 1, d, d))
    psi[0] = np.eye(d)
    for j in range(1, horizon + 1):
        acc = np.zeros((d, d))
        for i in range(1, min(j, q) + 1):
            acc += spec.coefficients[i - 1] @ psi[j - i]
        psi[j] = acc
    return psi


def causal_representation(spec, horizon):
    if spec.dimension != 2:
        raise ValueError("causal_representation needs a bivariate VAR")
    report = check_stability(spec)
    if not report.stable:
        raise UnstableModelError(report.spectral_radius)
    psi = ma_matrices(spec, int(horizon))
    return MaCoefficients(
        a=psi[:, 0, 0].copy(),
        b=psi[:, 1, 1].copy(),
        c=psi[:, 0, 1].copy(),
        d=psi[:, 1, 0].copy(),
    )


@dataclass(frozen=True)
class ConditionResult:
    satisfied: bool
    witness_r: int = None


def check_extremal_causal_condition(ma, q, zero_tol=1e-12):
    """Smallest ``r <= q`` with ``a_i != 0 => d_{i+r} != 0`` for all ``i <= H - r``."""
    H = ma.horizon
    if H < 2 * q:
        raise ValueError(f"horizon {H} must be at least 2q = {2 * q}")
    a_nonzero = np.abs(ma.a) > zero_tol
    d_nonzero = np.abs(ma.d) > zero_tol
    for r in range(0, q + 1):
        need = a_nonzero[: H - r + 1]
        have = d_nonzero[r : H + 1]
        if np.all(~need | have):
            return ConditionResult(True, r)
    return ConditionResult(False, None)


# --------------------------------------------------------------------------
# Presets

def _var2(a, burn_in=DEFAULT_BURN_IN, noise=(PARETO_STANDARD,), names=()):
    return VarSpec(np.array(a, dtype=np.float64), tuple(noise), burn_in, names)


def model1(delta=0.5, noise_x=PARETO_STANDARD, noise_y=None):
    """``X_t = .5 X_{t-1} + e``, ``Y_t = .5 Y_{t-1} + delta X_{t-2} + e``."""
    noise_y = noise_x if noise_y is None else noise_y
    A1 = [[0.5, 0.0], [0.0, 0.5]]
    A2 = [[0.0, 0.0], [delta, 0.0]]
    return _var2([A1, A2], noise=(noise_x, noise_y))


def model2():
    """VAR(6): cross effect of X on Y only at lag 6, Cauchy noise."""
    A = np.zeros((6, 2, 2))
    A[0, 0, 0] = 0.5
    A[0, 1, 1] = 0.5
    A[5, 1, 0] = 0.5
    return _var2(A, noise=(CAUCHY, CAUCHY))


def model3(delta_x=0.0, delta_y=0.0, theta_x=1, theta_y=1, theta_z=1):
    """Trivariate VAR(3) with hidden common cause Z (channels X, Y, Z) and Student-t noise."""
    A = np.zeros((3, 3, 3))
    X, Y, Z = 0, 1, 2
    A[0, Z, Z] = 0.5
    A[0, X, X] = 0.5
    A[1, X, Z] = 0.5
    A[2, X, Y] = delta_y
    A[0, Y, Y] = 0.5
    A[0, Y, Z] = 0.5
    A[2, Y, X] = delta_x
    noise = tuple(NoiseSpec("student_t", (t,)) for t in (theta_x, theta_y, theta_z))
    return _var2(A, noise=noise)


def model4():
    """NAAR(3) with a hidden confounder and an effect of X on Y only above 50."""
    return NaarSpec(
        f1=FunctionDescriptor("linear", (0.5,)),
        f2=ZERO,
        g1=FunctionDescriptor("linear", (0.5,)),
        g2=FunctionDescriptor("power_threshold", (0.75, 50.0)),
        lag=3,
        noise_x=PARETO_STANDARD,
        noise_y=PARETO_STANDARD,
        confounder=Confounder(
            self_coef=0.5,
            noise=NoiseSpec("pareto", (1.0, 1.0), 0.5),
            x_coef=0.5,
            x_lag=2,
            y_coef=0.5,
            y_lag=1,
        ),
    )


def motivating():
    """``X_t = .5 X_{t-1} + e``, ``Y_t = .5 Y_{t-1} + sqrt(X_{t-5}) + e``, Pareto(1, 1)."""
    half = FunctionDescriptor("linear", (0.5,))
    return NaarSpec(
        f1=half,
        f2=ZERO,
        g1=half,
        g2=FunctionDescriptor("sqrt"),
        lag=5,
        noise_x=PARETO_STANDARD,
        noise_y=PARETO_STANDARD,
    )


def example1():
    return _var2([[[0.5, 0.0], [0.5, 0.5]]])


def example2():
    """``X_t = .5 X_{t-1} + e``, ``Y_t = X_{t-1} - .5 X_{t-2} + e`` with Cauchy noise."""
    A1 = [[0.5, 0.0], [1.0, 0.0]]
    A2 = [[0.0, 0.0], [-0.5, 0.0]]
    return _var2([A1, A2], noise=(CAUCHY, CAUCHY))


def example3():
    """Trivariate VAR(1) (X, Y, Z); the common cause Z has the heavier tail."""
    X, Y, Z = 0, 1, 2
    A = np.zeros((3, 3))
    A[Z, Z] = 0.5
    A[X, X] = 0.5
    A[X, Z] = 0.5
    A[Y, Y] = 0.5
    A[Y, Z] = 0.5
    A[Y, X] = 0.5
    p22 = NoiseSpec("pareto", (2.0, 2.0))
    return _var2([A], noise=(p22, p22, PARETO_STANDARD))


PRESETS = {
    "motivating": motivating,
    "example1": example1,
    "example2": example2,
    "example3": example3,
    "model1": model1,
    "model2": model2,
    "model3": model3,
    "model4": model4,
}


def preset(name, **params):
    try:
        factory = PRESETS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**params)


# --------------------------------------------------------------------------
# JSON

def spec_to_json(spec, indent=2):
    return json.dumps(spec.to_dict(), indent=indent)


def spec_from_dict(d):
    kind = d.get("type")
    if kind == "var":
        return VarSpec.from_dict(d)
    if kind == "naar":
        return NaarSpec.from_dict(d)
    raise ValueError(f"unknown model type {kind!r}")


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))
