"""Ordinary least squares with exact inference statistics.

Coefficients come from a Householder QR of the column-equilibrated design
matrix, never from the normal equations. The t and F distribution functions
are evaluated through a regularized incomplete beta function written here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ConvergenceError, DegenerateDummy, DomainError, RankDeficient
from .prep import as_observations

RANK_TOLERANCE = 1e-10
BETA_MAX_ITER = 300
BETA_EPS = 1e-14
SIGNIFICANCE_1PCT = 0.01

ALLOWED_REGRESSORS = ("intercept", "cf", "ducf")


# --------------------------------------------------------------------------
# distribution functions
# --------------------------------------------------------------------------


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def betainc(a: float, b: float, x: float, xc: float | None = None) -> float:
    """Regularized incomplete beta ``I_x(a, b)``.

    ``xc`` may carry ``1 - x`` computed without cancellation; callers that
    form ``x`` as a ratio should pass it.
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"betainc requires a, b > 0 (got {a}, {b})")
    if xc is None:
        xc = 1.0 - x
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise DomainError(f"betainc requires 0 <= x <= 1 (got {x})")
    if x == 0.0:
        return 0.0
    if xc == 0.0 or x == 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log(xc) - _log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        cf, it = kernels.betacf(a, b, x, BETA_MAX_ITER, BETA_EPS)
        if it < 0:
            raise ConvergenceError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")
        return math.exp(log_front) * cf / a
    cf, it = kernels.betacf(b, a, xc, BETA_MAX_ITER, BETA_EPS)
    if it < 0:
        raise ConvergenceError(f"incomplete beta did not converge (a={b}, b={a}, x={xc})")
    return 1.0 - math.exp(log_front) * cf / b


def _check_df(*dfs: float) -> None:
    for df in dfs:
        if not (df > 0) or math.isinf(df):
            raise DomainError(f"degrees of freedom must be positive and finite (got {df})")


def t_cdf(x: float, df: float) -> float:
    """Student-t cumulative distribution function."""
    _check_df(df)
    if math.isnan(x):
        raise DomainError("t_cdf of NaN")
    if x == 0.0:
        return 0.5
    if math.isinf(x):
        return 1.0 if x > 0 else 0.0
    x2 = x * x
    tail = 0.5 * betainc(df / 2.0, 0.5, df / (df + x2), x2 / (df + x2))
    return 1.0 - tail if x > 0 else tail


def t_sf2(t: float, df: float) -> float:
    """Two-sided p-value ``P(|T| >= |t|)``, accurate deep into the tail."""
    _check_df(df)
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    t2 = t * t
    return betainc(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2))


def f_cdf(x: float, d1: float, d2: float) -> float:
    """F-distribution cumulative distribution function."""
    _check_df(d1, d2)
    if math.isnan(x) or x < 0:
        raise DomainError(f"f_cdf requires x >= 0 (got {x})")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    num = d1 * x
    return betainc(d1 / 2.0, d2 / 2.0, num / (num + d2), d2 / (num + d2))


def f_sf(x: float, d1: float, d2: float) -> float:
    """Upper tail ``1 - f_cdf``, computed directly to keep tiny p-values."""
    _check_df(d1, d2)
    if math.isnan(x) or x < 0:
        raise DomainError(f"f_sf requires x >= 0 (got {x})")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    num = d1 * x
    return betainc(d2 / 2.0, d1 / 2.0, d2 / (num + d2), num / (num + d2))


# --------------------------------------------------------------------------
# regression
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignSpec:
    """Ordered regressors for an FHP-style fit.

    ``regressors`` lists the slope terms (``cf``, ``ducf``); the intercept is
    controlled by ``include_intercept`` and always comes first when present.
    Listing ``"intercept"`` explicitly is accepted and equivalent.
    """

    regressors: tuple[str, ...] = ("cf",)
    include_intercept: bool = True

    def __post_init__(self):
        regs = tuple(self.regressors)
        if "intercept" in regs:
            object.__setattr__(self, "include_intercept", True)
            regs = tuple(r for r in regs if r != "intercept")
        object.__setattr__(self, "regressors", regs)
        unknown = [r for r in regs if r not in ALLOWED_REGRESSORS]
        if unknown:
            raise ValueError(f"unknown regressors: {unknown}")
        if len(set(regs)) != len(regs):
            raise ValueError("duplicate regressors in design")
        if not regs and not self.include_intercept:
            raise ValueError("design has no columns")

    @property
    def names(self) -> tuple[str, ...]:
        return (("intercept",) if self.include_intercept else ()) + self.regressors


RESTRICTED = DesignSpec(("cf",), True)
UNRESTRICTED = DesignSpec(("cf", "ducf"), True)
ORIGIN = DesignSpec(("cf",), False)


@dataclass(frozen=True)
class RegressionResult:
    names: tuple[str, ...]
    coefficients: tuple[float, ...]
    std_errors: tuple[float, ...]
    t_stats: tuple[float, ...]
    p_values: tuple[float, ...]
    rss: float
    tss: float
    r2: float
    overall_f: float
    overall_f_pvalue: float
    n: int
    k: int
    sig_1pct: tuple[bool, ...]
    centered: bool = True
    cov: tuple[tuple[float, ...], ...] = field(default=(), repr=False)

    @property
    def df_resid(self) -> int:
        return self.n - self.k

    def index(self, name: str) -> int:
        return self.names.index(name)

    def coef(self, name: str) -> float:
        return self.coefficients[self.index(name)]

    def tstat(self, name: str) -> float:
        return self.t_stats[self.index(name)]

    def pvalue(self, name: str) -> float:
        return self.p_values[self.index(name)]


def _triangular_inverse(R: np.ndarray) -> np.ndarray:
    k = R.shape[0]
    Rinv = np.zeros_like(R)
    for j in range(k):
        Rinv[j, j] = 1.0 / R[j, j]
        for i in range(j - 1, -1, -1):
            s = math.fsum(R[i, m] * Rinv[m, j] for m in range(i + 1, j + 1))
            Rinv[i, j] = -s / R[i, i]
    return Rinv


def ols(
    X: np.ndarray,
    y: np.ndarray,
    names: Sequence[str] | None = None,
    has_intercept: bool = True,
) -> RegressionResult:
    """Fit ``y`` on the columns of ``X``.

    ``has_intercept`` states that one column of ``X`` is the constant; it
    switches R^2 between centered and uncentered definitions.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if names is None:
        names = tuple(f"x{i}" for i in range(k))
    names = tuple(names)
    if y.shape != (n,):
        raise ValueError("y must be a vector with one entry per design row")
    if n <= k:
        raise RankDeficient(f"need n > k observations (n={n}, k={k})")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("design matrix and response must be finite")

    colnorm = np.array([math.sqrt(kernels.compensated_dot(X[:, j], X[:, j])) for j in range(k)])
    for j in range(k):
        if colnorm[j] == 0.0:
            raise RankDeficient(f"column {names[j]!r} is identically zero", column=names[j])
    Xs = X / colnorm
    R, qty = kernels.householder(Xs, y)
    pivots = np.abs(np.diag(R))
    largest = pivots.max()
    for j in range(k):
        if pivots[j] <= RANK_TOLERANCE * largest:
            raise RankDeficient(
                f"column {names[j]!r} is collinear with earlier columns "
                f"(pivot {pivots[j]:.3e} vs largest {largest:.3e})",
                column=names[j],
            )

    # back substitution on R b_s = (Q^T y)[:k]
    bs = np.zeros(k)
    for i in range(k - 1, -1, -1):
        s = qty[i] - math.fsum(R[i, m] * bs[m] for m in range(i + 1, k))
        bs[i] = s / R[i, i]
    beta = bs / colnorm

    fitted = np.zeros(n)
    for j in range(k):
        fitted += beta[j] * X[:, j]
    resid = y - fitted
    rss = kernels.compensated_dot(resid, resid)
    if has_intercept:
        ybar = kernels.compensated_sum(y) / n
        dev = y - ybar
        tss = kernels.compensated_dot(dev, dev)
    else:
        tss = kernels.compensated_dot(y, y)
    r2 = 1.0 - rss / tss if tss > 0 else (1.0 if rss == 0 else math.nan)
    if has_intercept and not math.isnan(r2):
        r2 = min(max(r2, 0.0), 1.0)

    df_resid = n - k
    sigma2 = rss / df_resid
    Rinv = _triangular_inverse(R)
    cov_s = Rinv @ Rinv.T
    cov = sigma2 * cov_s / np.outer(colnorm, colnorm)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    t = np.full(k, math.nan)
    p = np.full(k, math.nan)
    for j in range(k):
        if se[j] > 0:
            t[j] = beta[j] / se[j]
            p[j] = t_sf2(t[j], df_resid)

    df_model = k - 1 if has_intercept else k
    if df_model > 0 and not math.isnan(r2):
        if r2 >= 1.0:
            overall_f, overall_p = math.inf, 0.0
        else:
            overall_f = (r2 / df_model) / ((1.0 - r2) / df_resid)
            overall_p = f_sf(overall_f, df_model, df_resid)
    else:
        overall_f, overall_p = math.nan, math.nan

    return RegressionResult(
        names=names,
        coefficients=tuple(float(v) for v in beta),
        std_errors=tuple(float(v) for v in se),
        t_stats=tuple(float(v) for v in t),
        p_values=tuple(float(v) for v in p),
        rss=float(rss),
        tss=float(tss),
        r2=float(r2),
        overall_f=float(overall_f),
        overall_f_pvalue=float(overall_p),
        n=n,
        k=k,
        sig_1pct=tuple(bool(v < SIGNIFICANCE_1PCT) for v in p),
        centered=has_intercept,
        cov=tuple(tuple(float(v) for v in row) for row in cov),
    )


def design_matrix(observations, spec: DesignSpec) -> tuple[np.ndarray, np.ndarray]:
    """Build ``(X, y)`` for ``inv`` on the regressors named in ``spec``."""
    obs = as_observations(observations)
    cols = []
    if spec.include_intercept:
        cols.append(np.ones(len(obs)))
    for name in spec.regressors:
        cols.append(getattr(obs, name))
    return np.column_stack(cols), obs.inv


def ols_fit(observations, spec: DesignSpec = RESTRICTED) -> RegressionResult:
    """Regress scaled investment on the regressors in ``spec``.

    Raises :class:`DegenerateDummy` when ``ducf`` is requested but the sign
    dummy is constant across the sample.
    """
    obs = as_observations(observations)
    if "ducf" in spec.regressors and len(obs) > 0:
        n_pos = int(np.count_nonzero(obs.dummy))
        if n_pos == 0:
            raise DegenerateDummy("all_nonpositive")
        if n_pos == len(obs):
            raise DegenerateDummy("all_positive")
    X, y = design_matrix(obs, spec)
    return ols(X, y, spec.names, has_intercept=spec.include_intercept)
