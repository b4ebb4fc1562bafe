"""Small statistics engine: correlations, OLS, two-sample t-tests, logistic fits.

Student-t tail probabilities come from the regularized incomplete beta
function, evaluated with a modified-Lentz continued fraction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import lapack, solve_triangular
from scipy.optimize import brentq
from scipy.special import betaln
from scipy.stats import rankdata

from .errors import CollinearityError, ConfigError, DegenerateSampleError, UndefinedCorrelationError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 500


def _beta_cf(a: float, b: float, x: float) -> float:
    # continued fraction for I_x(a, b), modified Lentz
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0``, ``0 <= x <= 1``."""
    if a <= 0 or b <= 0:
        raise ConfigError("betainc needs a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise ConfigError(f"betainc needs 0 <= x <= 1, got {x}")
    if x == 0.0 or x == 1.0:
        return x
    log_front = a * math.log(x) + b * math.log1p(-x) - betaln(a, b)
    # the fraction converges fast for x < (a + 1) / (a + b + 2); use symmetry otherwise
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _beta_cf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """``P(|T| >= |t|)`` for Student-t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ConfigError("degrees of freedom must be > 0")
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    return min(1.0, betainc_regularized(0.5 * df, 0.5, df / (df + t * t)))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - tail if t >= 0 else tail


def t_ppf(q: float, df: float) -> float:
    """Quantile of Student-t by root finding on :func:`t_cdf`."""
    if not 0.0 < q < 1.0:
        raise ConfigError("quantile level must be in (0, 1)")
    if q == 0.5:
        return 0.0
    hi = 1.0
    while (t_cdf(hi, df) - q) * (t_cdf(-hi, df) - q) > 0:
        hi *= 2.0
    return brentq(lambda x: t_cdf(x, df) - q, -hi, hi, xtol=1e-13, rtol=1e-15, maxiter=400)


@dataclass(frozen=True)
class Correlation:
    rho: float
    p: float
    n: int

    def __iter__(self):
        return iter((self.rho, self.p))


def _paired(x, y):
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise ConfigError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 3:
        raise ConfigError("correlation needs at least 3 pairs")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ConfigError("correlation inputs must be finite")
    return x, y


def _corr_p(rho: float, n: int) -> float:
    if abs(rho) >= 1.0:
        return 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return t_sf_two_sided(t, n - 2)


def pearson(x, y) -> Correlation:
    """Moment correlation with a two-sided t-approximation p-value."""
    x, y = _paired(x, y)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined: an input has zero variance")
    rho = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    return Correlation(rho, _corr_p(rho, x.size), x.size)


def spearman(x, y) -> Correlation:
    """Pearson correlation of mid-ranks (ties share their average rank)."""
    x, y = _paired(x, y)
    return pearson(rankdata(x, method="average"), rankdata(y, method="average"))


@dataclass(frozen=True)
class RegressionResult:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    r_squared: float
    n: int
    k: int
    names: tuple[str, ...]
    rss: float

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def rows(self):
        for i, name in enumerate(self.names):
            yield dict(term=name, estimate=float(self.coefficients[i]),
                       std_error=float(self.standard_errors[i]), t=float(self.t_values[i]),
                       p=float(self.p_values[i]))


def ols(y, X, names: Sequence[str] | None = None, rank_tol: float = 1e-10) -> RegressionResult:
    """Least squares with classical standard errors.

    ``X`` must already contain the intercept column. The normal equations are
    solved with a pivoted Cholesky factorization of the column-scaled Gram
    matrix.

    Raises
    ------
    CollinearityError
        If ``X`` is rank deficient; the message names a column that is
        (numerically) a combination of the others.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(k))
    if len(names) != k:
        raise ConfigError("names must match the number of columns")
    if y.size != n:
        raise ConfigError(f"y has {y.size} rows, X has {n}")
    if not k < n:
        raise ConfigError(f"need more observations than regressors (n={n}, k={k})")
    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        raise CollinearityError(f"column {names[int(np.argmin(scale))]!r} is identically zero")
    Xs = X / scale
    G = Xs.T @ Xs
    c, piv, rank, info = lapack.dpstrf(G, lower=0, tol=rank_tol)
    piv = piv - 1
    if info != 0 or rank < k:
        raise CollinearityError(
            f"design is rank deficient (rank {rank} < {k}); column {names[piv[rank]]!r} "
            "is collinear with the others"
        )
    R = np.triu(c)
    # G[piv][:, piv] = R^T R
    rhs = (Xs.T @ y)[piv]
    z = solve_triangular(R, rhs, trans="T")
    bp = solve_triangular(R, z)
    Rinv = solve_triangular(R, np.eye(k))
    cov_p = Rinv @ Rinv.T
    beta_s = np.empty(k)
    beta_s[piv] = bp
    cov_s = np.empty((k, k))
    cov_s[np.ix_(piv, piv)] = cov_p
    beta = beta_s / scale
    resid = y - X @ beta
    rss = float(resid @ resid)
    sigma2 = rss / (n - k)
    se = np.sqrt(np.maximum(np.diag(cov_s), 0.0) * sigma2) / scale
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.sign(beta) * np.inf))
    p = np.array([t_sf_two_sided(float(v), n - k) for v in t])
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else (1.0 if rss == 0 else 0.0)
    return RegressionResult(beta, se, t, p, float(min(max(r2, 0.0), 1.0)), n, k, names, rss)


@dataclass(frozen=True)
class TTest:
    t: float
    p: float
    df: float

    def __iter__(self):
        return iter((self.t, self.p, self.df))


def ttest_two_sample(a, b, pooled: bool = True) -> TTest:
    """Two-sided two-sample t-test (pooled variance or Welch-Satterthwaite)."""
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise ConfigError("each sample needs at least 2 observations")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    diff = a.mean() - b.mean()
    if pooled:
        df = float(na + nb - 2)
        sp2 = ((na - 1) * va + (nb - 1) * vb) / df
        if sp2 == 0:
            raise DegenerateSampleError("pooled variance is zero")
        se = math.sqrt(sp2 * (1.0 / na + 1.0 / nb))
    else:
        wa, wb = va / na, vb / nb
        if wa + wb == 0:
            raise DegenerateSampleError("both samples have zero variance")
        se = math.sqrt(wa + wb)
        df = (wa + wb) ** 2 / ((wa * wa / (na - 1) if wa else 0.0) + (wb * wb / (nb - 1) if wb else 0.0))
    t = float(diff / se)
    return TTest(t, t_sf_two_sided(t, df), df)


@dataclass(frozen=True)
class SCurveFit:
    L: float
    k: float
    t0: float
    rss: float
    refined: bool
    grid_rss: float
    iterations: int

    def predict(self, t) -> np.ndarray:
        return logistic(np.asarray(t, dtype=float), self.L, self.k, self.t0)


def logistic(t, L, k, t0):
    return L * 0.5 * (1.0 + np.tanh(0.5 * k * (t - t0)))


def _profile_L(g, y):
    gg = float(g @ g)
    L = float(g @ y) / gg if gg > 0 else 0.0
    r = y - L * g
    return L, float(r @ r)


def fit_scurve(times, cumulative, grid: tuple[int, int] = (60, 80), tol: float = 1e-8,
               max_iter: int = 200) -> SCurveFit:
    """Least-squares logistic ``L / (1 + exp(-k (t - t0)))``.

    A coarse grid over ``(k, t0)`` with ``L`` profiled out linearly supplies
    the start for Gauss-Newton with step halving. Iteration stops when the
    gradient norm of half the residual sum of squares drops below ``tol`` or
    no step can lower the residual. If Gauss-Newton does not converge within
    ``max_iter`` the best grid point is returned with ``refined=False``.
    """
    t = np.asarray(times, dtype=float).reshape(-1)
    y = np.asarray(cumulative, dtype=float).reshape(-1)
    if t.size != y.size:
        raise ConfigError("times and cumulative must have equal length")
    if t.size < 4:
        raise ConfigError("S-curve fit needs at least 4 points")
    order = np.argsort(t, kind="stable")
    t, y = t[order], y[order]
    if np.any(np.diff(y) < 0):
        raise ConfigError("cumulative adoption must be nondecreasing")
    span = float(t[-1] - t[0])
    if span <= 0:
        raise ConfigError("times must not all be equal")
    lo_t0, hi_t0 = t[0] - 0.5 * span, t[-1] + 0.5 * span

    ks = np.geomspace(0.5 / span, 200.0 / span, grid[0])
    t0s = np.linspace(lo_t0, hi_t0, grid[1])
    best = (math.inf, None)
    for k in ks:
        for t0 in t0s:
            g = logistic(t, 1.0, k, t0)
            L, rss = _profile_L(g, y)
            if L > 0 and rss < best[0]:
                best = (rss, (L, k, t0))
    grid_rss, start = best
    if start is None:
        raise ConfigError("no admissible logistic start point (all profiled L <= 0)")

    def residual_jac(theta):
        L, k, t0 = theta
        g = logistic(t, 1.0, k, t0)
        d = g * (1.0 - g)
        r = y - L * g
        J = np.column_stack([g, L * d * (t - t0), -L * d * k])
        return r, J

    theta = np.array(start, dtype=float)
    r, J = residual_jac(theta)
    rss = float(r @ r)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = J.T @ r
        if np.linalg.norm(grad) < tol:
            converged = True
            break
        step, *_ = np.linalg.lstsq(J, r, rcond=None)
        alpha, improved = 1.0, False
        for _ in range(40):
            cand = theta + alpha * step
            if cand[0] > 0 and cand[1] > 0 and lo_t0 <= cand[2] <= hi_t0:
                rc, Jc = residual_jac(cand)
                rss_c = float(rc @ rc)
                if rss_c < rss:
                    improved = True
                    break
            alpha *= 0.5
        if not improved:
            # no representable descent left: stationary to working precision
            converged = np.linalg.norm(grad) <= 1e-6 * max(1.0, math.sqrt(rss), float(np.abs(y).max()))
            break
        theta, r, J, rss = cand, rc, Jc, rss_c
    if not converged or rss > grid_rss:
        L, k, t0 = start
        return SCurveFit(float(L), float(k), float(t0), float(grid_rss), False, float(grid_rss), it)
    L, k, t0 = theta
    return SCurveFit(float(L), float(k), float(t0), float(rss), True, float(grid_rss), it)
