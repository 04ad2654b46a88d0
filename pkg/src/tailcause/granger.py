"""Linear Granger causality F-test, the comparison baseline."""

from dataclasses import dataclass, field
import math

import numpy as np

from tailcause.estimator import as_array

RANK_TOL = 1e-10


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    rss: float


def ols_fit(design, targets, rank_tol=RANK_TOL):
    """Least squares through a QR factorisation.

    Raises RankDeficientError when a diagonal entry of R falls below
    ``rank_tol`` times the largest column norm of the design.
    """
    X = np.asarray(design, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64).ravel()
    if X.ndim == 1:
        X = X[:, None]
    rows, cols = X.shape
    if rows != y.size:
        raise ValueError(f"design has {rows} rows but {y.size} targets")
    if rows < cols:
        raise ValueError(f"need at least as many rows ({rows}) as columns ({cols})")
    Q, R = np.linalg.qr(X, mode="reduced")
    scale = float(np.max(np.linalg.norm(X, axis=0))) if cols else 0.0
    diag = np.abs(np.diag(R))
    if scale == 0.0 or np.any(diag <= rank_tol * scale):
        raise RankDeficientError(
            f"design is rank deficient at relative tolerance {rank_tol:g} "
            f"(min |R_jj| = {diag.min():.3g}, max column norm = {scale:.3g})"
        )
    beta = np.linalg.solve(R, Q.T @ y) if cols > 1 else (Q.T @ y) / R[0, 0]
    resid = y - X @ beta
    return OlsFit(np.atleast_1d(beta), float(resid @ resid))


# --------------------------------------------------------------------------
# F distribution via the regularised incomplete beta function

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 100_000


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a, b, x):
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _check_dof(d1, d2):
    if not (d1 >= 1 and d2 >= 1):
        raise ValueError(f"degrees of freedom must be >= 1, got ({d1}, {d2})")


def f_cdf(x, d1, d2):
    _check_dof(d1, d2)
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return betainc_regularized(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2))


def f_sf(x, d1, d2):
    """Upper tail ``1 - f_cdf`` computed without cancellation."""
    _check_dof(d1, d2)
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return betainc_regularized(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x))


# --------------------------------------------------------------------------
# Test

@dataclass(frozen=True)
class GrangerResult:
    f_statistic: float
    p_value: float
    order: int
    dof: tuple
    reject_at: dict = field(default_factory=dict)
    rss_restricted: float = math.nan
    rss_unrestricted: float = math.nan

    def to_dict(self):
        return {
            "f_statistic": self.f_statistic,
            "p_value": self.p_value,
            "order": self.order,
            "dof": list(self.dof),
            "reject_at": {str(k): v for k, v in self.reject_at.items()},
        }


def _lagged(v, q):
    n = v.size
    return np.column_stack([v[q - j : n - j] for j in range(1, q + 1)])


def granger_test(x, y, q, levels=(0.01, 0.05, 0.10), rank_tol=RANK_TOL):
    """F-test of "x does not Granger-cause y" with ``q`` lags and an intercept.

    The first ``q`` observations only serve as lags, so ``n - q`` rows enter
    both regressions.
    """
    xv, yv = as_array(x), as_array(y)
    n = xv.size
    if yv.size != n:
        raise ValueError(f"length mismatch: {n} vs {yv.size}")
    q = int(q)
    if q < 1:
        raise ValueError("order q must be >= 1")
    if n <= 2 * q + 2:
        raise ValueError(f"sample too short: need n > 2q + 2 = {2 * q + 2}, got {n}")
    n_eff = n - q
    target = yv[q:]
    ones = np.ones((n_eff, 1))
    restricted = np.hstack([ones, _lagged(yv, q)])
    unrestricted = np.hstack([restricted, _lagged(xv, q)])
    rss_r = ols_fit(restricted, target, rank_tol).rss
    rss_u = ols_fit(unrestricted, target, rank_tol).rss
    # nested models: rounding can leave rss_u a hair above rss_r
    rss_u = min(rss_u, rss_r)
    d1, d2 = q, n_eff - 2 * q - 1
    if rss_u == 0.0:
        f_stat = math.inf if rss_r > 0 else 0.0
    else:
        f_stat = ((rss_r - rss_u) / d1) / (rss_u / d2)
    p_value = f_sf(f_stat, d1, d2)
    p_value = min(1.0, max(0.0, p_value))
    return GrangerResult(
        f_statistic=f_stat,
        p_value=p_value,
        order=q,
        dof=(d1, d2),
        reject_at={float(a): p_value < a for a in levels},
        rss_restricted=rss_r,
        rss_unrestricted=rss_u,
    )
