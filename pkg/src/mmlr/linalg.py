"""Dense least-squares fitting and the statistical special functions.

Fitting goes through the normal equations solved by an unpivoted Cholesky
factorization with a pivot-threshold singularity check, never an explicit
inverse.  The F-distribution tail is evaluated with a continued-fraction
regularized incomplete beta (Numerical Recipes style); the normal quantile
uses Acklam's rational approximation polished by Newton steps against an
erfc-based CDF.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import SingularDesign, TooFewRows
from .rng import make_rng

# ---------------------------------------------------------------------------
# Standard normal distribution
# ---------------------------------------------------------------------------


def normal_cdf(x: float) -> float:
    """Standard normal distribution function, absolute error well below 1e-8."""
    return 0.5 * math.erfc(-float(x) / math.sqrt(2.0))


def _normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


# Acklam's rational approximation coefficients for the normal quantile.
_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
             6.680131188771972e+01, -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
             3.754408661907416e+00)
_ACKLAM_LOW = 0.02425


def normal_quantile(q: float) -> float:
    """Inverse of `normal_cdf` for q strictly inside (0, 1)."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile argument must be in (0, 1), got {q}")
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    if q < _ACKLAM_LOW:
        u = math.sqrt(-2.0 * math.log(q))
        x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) / \
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0)
        x = -x
    elif q <= 1.0 - _ACKLAM_LOW:
        u = q - 0.5
        r = u * u
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u / \
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    else:
        u = math.sqrt(-2.0 * math.log(1.0 - q))
        x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) / \
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0)
    # Two Newton polish steps take the ~1e-9 approximation to machine precision.
    for _ in range(2):
        err = normal_cdf(x) - q
        pdf = _normal_pdf(x)
        if pdf > 0.0:
            x -= err / pdf
    return x


# ---------------------------------------------------------------------------
# Regularized incomplete beta and the F-distribution upper tail
# ---------------------------------------------------------------------------

_BETA_EPS = 1e-14
_BETA_FPMIN = 1e-300
_BETA_MAX_ITER = 400


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz evaluation of the incomplete-beta continued fraction."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_FPMIN:
        d = _BETA_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETA_FPMIN:
            d = _BETA_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETA_FPMIN:
            c = _BETA_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction failed for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def f_upper_tail(f_stat: float, d1: int, d2: int) -> float:
    """P(F >= f_stat) for the F distribution with (d1, d2) degrees of freedom."""
    if d1 < 1 or d2 < 1:
        raise ValueError("degrees of freedom must be positive")
    if f_stat <= 0.0:
        return 1.0
    if math.isinf(f_stat):
        return 0.0
    x = d2 / (d2 + d1 * f_stat)
    return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, x)


# ---------------------------------------------------------------------------
# Ordinary least squares via the normal equations
# ---------------------------------------------------------------------------

_PIVOT_REL_TOL = 1e-12


def _cholesky_solve(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve gram @ beta = rhs with an SPD Cholesky factorization.

    Raises SingularDesign when a pivot falls below 1e-12 times the
    mean-diagonal scale of the gram matrix.
    """
    a = np.array(gram, dtype=np.float64)
    b = np.array(rhs, dtype=np.float64)
    dim = a.shape[0]
    scale = float(np.trace(a)) / dim if dim else 0.0
    if scale <= 0.0:
        raise SingularDesign("gram matrix has nonpositive trace")
    lower = np.zeros_like(a)
    for i in range(dim):
        pivot = a[i, i] - lower[i, :i] @ lower[i, :i]
        if pivot <= _PIVOT_REL_TOL * scale:
            raise SingularDesign(
                f"pivot {pivot:.3e} below {_PIVOT_REL_TOL:.0e} * scale {scale:.3e} "
                f"at column {i}"
            )
        lower[i, i] = math.sqrt(pivot)
        for j in range(i + 1, dim):
            lower[j, i] = (a[j, i] - lower[j, :i] @ lower[i, :i]) / lower[i, i]
    # Forward then backward substitution.
    y = np.zeros(dim)
    for i in range(dim):
        y[i] = (b[i] - lower[i, :i] @ y[:i]) / lower[i, i]
    beta = np.zeros(dim)
    for i in range(dim - 1, -1, -1):
        beta[i] = (y[i] - lower[i + 1:, i] @ beta[i + 1:]) / lower[i, i]
    return beta


@dataclass(frozen=True)
class LinearModel:
    """A fitted linear model with its residual statistics.

    fit_bound is 3 * sqrt(sigma_f_sq) by construction: the absolute-residual
    threshold under which a row counts as explained by this model.
    """

    coeffs: np.ndarray
    intercept: float
    sigma_f_sq: float
    p_f: float
    fit_bound: float
    n_fit: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def k(self) -> int:
        return int(self.coeffs.shape[0])

    def predict(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        if x.shape[1] != self.k:
            raise ValueError(f"expected {self.k} features, got {x.shape[1]}")
        return x @ self.coeffs + self.intercept

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "coeffs": [float(c) for c in self.coeffs],
            "sigma_f_sq": self.sigma_f_sq,
            "p_f": self.p_f,
            "fit_bound": self.fit_bound,
            "n_fit": self.n_fit,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_stats(cls, coeffs, intercept: float, sse: float, n: int, p_f: float) -> "LinearModel":
        sigma_sq = max(float(sse), 0.0) / n
        return cls(
            coeffs=np.asarray(coeffs, dtype=np.float64),
            intercept=float(intercept),
            sigma_f_sq=sigma_sq,
            p_f=float(p_f),
            fit_bound=3.0 * math.sqrt(sigma_sq),
            n_fit=int(n),
        )


def ols_fit(ds: Dataset, with_intercept: bool = True) -> LinearModel:
    """Least-squares fit by the normal equations.

    With an intercept the columns are centered before forming the gram
    matrix, which keeps it well conditioned; the intercept is recovered
    from the means afterwards.
    """
    n, k = ds.n, ds.k
    if n < k + 2:
        raise TooFewRows(f"need at least k+2={k + 2} rows, got {n}")
    y = ds.response
    if with_intercept:
        xc = ds.features - ds.col_mean
        yc = y - ds.response_mean
        gram = xc.T @ xc
        beta = _cholesky_solve(gram, xc.T @ yc)
        intercept = float(ds.response_mean - ds.col_mean @ beta)
        residuals = yc - xc @ beta
    else:
        x = ds.features
        beta = _cholesky_solve(x.T @ x, x.T @ y)
        intercept = 0.0
        residuals = y - x @ beta
    sse = float(residuals @ residuals)
    dy = y - ds.response_mean
    p_f = _f_pvalue_from_sums(sst=float(dy @ dy), sse=sse, n=n, k=k)
    return LinearModel.from_stats(beta, intercept, sse, n, p_f=p_f)


def residual_variance(model: LinearModel, ds: Dataset) -> float:
    """Mean squared residual of `model` evaluated on `ds`."""
    if model.k != ds.k:
        raise ValueError(f"model has {model.k} coefficients, dataset has {ds.k} features")
    r = ds.response - model.predict(ds.features)
    return float(r @ r) / ds.n


def _f_pvalue_from_sums(sst: float, sse: float, n: int, k: int) -> float:
    if sst <= 0.0:
        return 1.0
    ssr = sst - sse
    if sse <= 0.0:
        return 0.0
    if ssr <= 0.0:
        return 1.0
    f_stat = (ssr / k) / (sse / (n - k - 1))
    return f_upper_tail(f_stat, k, n - k - 1)


def f_test_pvalue(model: LinearModel, ds: Dataset) -> float:
    """Upper-tail p-value of the overall regression F-test of `model` on `ds`.

    F = (SSR/k) / (SSE/(n-k-1)) with sums of squares taken about the
    response mean.  A constant response (SST = 0) returns 1 by convention:
    it can never certify a linear relationship.  Runs in O(n).
    """
    n, k = ds.n, ds.k
    if n <= k + 1:
        raise TooFewRows(f"F-test needs n > k+1 = {k + 1}, got n={n}")
    if model.k != k:
        raise ValueError("model/dataset dimension mismatch")
    dy = ds.response - ds.response_mean
    sst = float(dy @ dy)
    r = ds.response - model.predict(ds.features)
    sse = float(r @ r)
    return _f_pvalue_from_sums(sst=sst, sse=sse, n=n, k=k)


# ---------------------------------------------------------------------------
# Ambient noise-variance estimation
# ---------------------------------------------------------------------------


def estimate_noise_variance(ds: Dataset, seed: int, neighborhoods: int = 5,
                            size_floor: int | None = None) -> float:
    """Estimate the ambient noise variance from small local fits.

    Takes the median of unbiased OLS residual variances over
    `neighborhoods` neighborhoods, each the max(65, 3k) nearest rows
    (Euclidean in feature space) to a uniformly drawn seed row.  A global
    fit would grossly overestimate the noise whenever different regions
    follow different models; local fits do not.  O(n) per neighborhood.
    """
    n, k = ds.n, ds.k
    h = size_floor if size_floor is not None else max(65, 3 * k)
    h = min(max(h, k + 2), n)
    rng = make_rng(seed, 0)
    # Draw extra candidate seeds so singular neighborhoods can be skipped.
    candidates = rng.integers(0, n, size=neighborhoods + 8)
    variances = []
    for row in candidates:
        if len(variances) >= neighborhoods:
            break
        diff = ds.features - ds.features[int(row)]
        dist = np.einsum("ij,ij->i", diff, diff)
        if h < n:
            nearest = np.argpartition(dist, h - 1)[:h]
        else:
            nearest = np.arange(n)
        sub = Dataset.from_arrays(ds.features[nearest], ds.response[nearest])
        try:
            model = ols_fit(sub)
        except SingularDesign:
            continue
        dof = max(h - k - 1, 1)
        variances.append(model.sigma_f_sq * h / dof)
    if not variances:
        # Pathological geometry everywhere: fall back to the global fit.
        return ols_fit(ds).sigma_f_sq
    return float(np.median(variances))
