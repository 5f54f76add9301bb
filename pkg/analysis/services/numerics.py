"""
DISTRIBUTION KERNELS
====================

Tail probabilities and inverses used by the statistics layer, written from
their series / continued-fraction / quadrature definitions:

    normal      cdf, sf, ppf (rational approximation plus one Newton step)
    chi-square  upper tail via the regularized incomplete gamma function
    Student t   upper tail via the regularized incomplete beta function
    F           cdf, sf, inverse sf (bisection)
    noncentral F cdf as a Poisson-weighted sum of incomplete betas
    studentized range  upper tail by Gauss-Legendre double quadrature

Every tail function returns a DistributionResult carrying the value and an
estimate of the absolute error actually achieved.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np

from analysis.exceptions import NumericalError, StatisticsInputError

logger = logging.getLogger(__name__)

EPS = 1e-15
FPMIN = 1e-300
MAX_ITERATIONS = 100_000
POISSON_TAIL = 1e-12
QUADRATURE_TOLERANCE = 1e-9
ISF_TOLERANCE = 1e-12

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class DistributionResult:
    value: float
    achieved_abs_error_bound: float

    def __float__(self) -> float:
        return self.value


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if value is None or math.isnan(value):
            raise StatisticsInputError(f'{name} must be a number, got {value!r}')


def _require_positive(**values: float) -> None:
    _require_finite(**values)
    for name, value in values.items():
        if value <= 0:
            raise StatisticsInputError(f'{name} must be positive, got {value!r}')


# ============================================================================
# NORMAL
# ============================================================================

def normal_cdf(x: float) -> DistributionResult:
    _require_finite(x=x)
    return DistributionResult(0.5 * math.erfc(-x / _SQRT2), 2 * EPS)


def normal_sf(x: float) -> DistributionResult:
    _require_finite(x=x)
    return DistributionResult(0.5 * math.erfc(x / _SQRT2), 2 * EPS)


def normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x - _LOG_SQRT_2PI)


_PPF_CENTRAL_NUM = (
    3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
    1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
    3.3430575583588128105e4, 2.5090809287301226727e3,
)
_PPF_CENTRAL_DEN = (
    1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
    2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_PPF_MID_NUM = (
    1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
    3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4,
)
_PPF_MID_DEN = (
    1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
    1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_PPF_TAIL_NUM = (
    6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
    2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7,
)
_PPF_TAIL_DEN = (
    1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
    7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coefficients: Tuple[float, ...], x: float) -> float:
    result = 0.0
    for coefficient in reversed(coefficients):
        result = result * x + coefficient
    return result


def normal_ppf(p: float) -> float:
    """Inverse standard normal cdf for 0 < p < 1."""
    _require_finite(p=p)
    if not 0.0 < p < 1.0:
        raise StatisticsInputError(f'p must lie strictly between 0 and 1, got {p!r}')
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        x = q * _poly(_PPF_CENTRAL_NUM, r) / _poly(_PPF_CENTRAL_DEN, r)
    else:
        r = math.sqrt(-math.log(p if q < 0 else 1.0 - p))
        if r <= 5.0:
            r -= 1.6
            x = _poly(_PPF_MID_NUM, r) / _poly(_PPF_MID_DEN, r)
        else:
            r -= 5.0
            x = _poly(_PPF_TAIL_NUM, r) / _poly(_PPF_TAIL_DEN, r)
        if q < 0:
            x = -x
    # one Newton step against the erfc-based cdf, taken from the nearer tail
    density = normal_pdf(x)
    if density > 0:
        residual = normal_cdf(x).value - p if p < 0.5 else (1.0 - p) - normal_sf(x).value
        x -= residual / density
    return x


# ============================================================================
# INCOMPLETE GAMMA / CHI-SQUARE
# ============================================================================

def _gamma_series(a: float, x: float) -> Tuple[float, float]:
    """Lower regularized gamma P(a, x) by its power series; returns (value, error)."""
    ap = a
    term = total = 1.0 / a
    for _ in range(MAX_ITERATIONS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            break
    else:
        raise NumericalError('incomplete gamma series did not converge', abs(term / total))
    prefactor = math.exp(-x + a * math.log(x) - math.lgamma(a))
    value = total * prefactor
    return value, abs(term) * prefactor + 8 * EPS * max(value, EPS)


def _gamma_continued_fraction(a: float, x: float) -> Tuple[float, float]:
    """Upper regularized gamma Q(a, x) by modified Lentz; returns (value, error)."""
    b = x + 1.0 - a
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    delta = 0.0
    for i in range(1, MAX_ITERATIONS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    else:
        raise NumericalError('incomplete gamma continued fraction did not converge', abs(delta - 1.0))
    value = math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    return value, (abs(delta - 1.0) + 8 * EPS) * max(value, EPS)


def regularized_gamma_q(a: float, x: float) -> DistributionResult:
    _require_positive(a=a)
    _require_finite(x=x)
    if x <= 0:
        return DistributionResult(1.0, 0.0)
    if x < a + 1.0:
        lower, error = _gamma_series(a, x)
        return DistributionResult(max(0.0, 1.0 - lower), error + EPS)
    value, error = _gamma_continued_fraction(a, x)
    return DistributionResult(value, error)


def chi2_sf(x: float, df: float) -> DistributionResult:
    """Upper tail of the chi-square distribution."""
    _require_positive(df=df)
    return regularized_gamma_q(df / 2.0, x / 2.0)


def chi2_cdf(x: float, df: float) -> DistributionResult:
    sf = chi2_sf(x, df)
    return DistributionResult(1.0 - sf.value, sf.achieved_abs_error_bound + EPS)


# ============================================================================
# INCOMPLETE BETA / t / F
# ============================================================================

def _beta_continued_fraction(a: float, b: float, x: float) -> Tuple[float, float]:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    delta = 0.0
    for m in range(1, MAX_ITERATIONS):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    else:
        raise NumericalError('incomplete beta continued fraction did not converge', abs(delta - 1.0))
    return h, abs(delta - 1.0)


def regularized_beta(x: float, a: float, b: float, y: float = None) -> DistributionResult:
    """
    I_x(a, b). Pass y = 1 - x when it is known more precisely than 1 - x.

    The continued fraction is evaluated on whichever side of the mean it
    converges fastest; the other side follows from the symmetry
    I_x(a, b) = 1 - I_y(b, a).
    """
    _require_positive(a=a, b=b)
    _require_finite(x=x)
    if y is None:
        y = 1.0 - x
    if x <= 0.0:
        return DistributionResult(0.0, 0.0)
    if y <= 0.0:
        return DistributionResult(1.0, 0.0)
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(y)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        fraction, residual = _beta_continued_fraction(a, b, x)
        value = front * fraction / a
        return DistributionResult(value, (residual + 16 * EPS) * max(value, EPS))
    fraction, residual = _beta_continued_fraction(b, a, y)
    tail = front * fraction / b
    return DistributionResult(1.0 - tail, (residual + 16 * EPS) * max(tail, EPS) + EPS)


def t_sf(t: float, df: float) -> DistributionResult:
    """Upper tail P(T > t) of Student's t."""
    _require_positive(df=df)
    _require_finite(t=t)
    denominator = df + t * t
    two_sided = regularized_beta(df / denominator, df / 2.0, 0.5, y=t * t / denominator)
    half = 0.5 * two_sided.value
    if t >= 0:
        return DistributionResult(half, 0.5 * two_sided.achieved_abs_error_bound)
    return DistributionResult(1.0 - half, 0.5 * two_sided.achieved_abs_error_bound + EPS)


def f_cdf(x: float, df1: float, df2: float) -> DistributionResult:
    _require_positive(df1=df1, df2=df2)
    _require_finite(x=x)
    if x <= 0:
        return DistributionResult(0.0, 0.0)
    if math.isinf(x):
        return DistributionResult(1.0, 0.0)
    scaled = df1 * x
    return regularized_beta(scaled / (scaled + df2), df1 / 2.0, df2 / 2.0, y=df2 / (scaled + df2))


def f_sf(x: float, df1: float, df2: float) -> DistributionResult:
    """Upper tail of the F distribution, computed directly (not as 1 - cdf)."""
    _require_positive(df1=df1, df2=df2)
    _require_finite(x=x)
    if x <= 0:
        return DistributionResult(1.0, 0.0)
    if math.isinf(x):
        return DistributionResult(0.0, 0.0)
    scaled = df1 * x
    return regularized_beta(df2 / (scaled + df2), df2 / 2.0, df1 / 2.0, y=scaled / (scaled + df2))


def _bisect_decreasing(function: Callable[[float], float], target: float, upper_start: float = 1.0,
                       tolerance: float = ISF_TOLERANCE) -> float:
    """Smallest x >= 0 with function(x) <= target, for a function decreasing from 1 to 0."""
    low, high = 0.0, upper_start
    doublings = 0
    while function(high) > target:
        low, high = high, high * 2.0
        doublings += 1
        if doublings > 200:
            raise NumericalError('could not bracket the inverse', function(high) - target)
    for _ in range(400):
        mid = 0.5 * (low + high)
        if function(mid) > target:
            low = mid
        else:
            high = mid
        if high - low <= tolerance * max(1.0, high):
            break
    return 0.5 * (low + high)


def f_isf(alpha: float, df1: float, df2: float) -> float:
    """Critical value x with P(F > x) = alpha."""
    if not 0.0 < alpha < 1.0:
        raise StatisticsInputError(f'alpha must lie strictly between 0 and 1, got {alpha!r}')
    return _bisect_decreasing(lambda x: f_sf(x, df1, df2).value, alpha)


# ============================================================================
# NONCENTRAL F
# ============================================================================

def noncentral_f_cdf(x: float, df1: float, df2: float, noncentrality: float) -> DistributionResult:
    """
    INPUTS:
        x: float - evaluation point
        df1, df2: float - numerator / denominator degrees of freedom
        noncentrality: float - lambda >= 0

    OUTPUTS:
        DistributionResult for P(F' <= x); terms are summed outward from the
        Poisson mode until the unsummed Poisson mass drops below 1e-12.
    """
    _require_positive(df1=df1, df2=df2)
    _require_finite(x=x, noncentrality=noncentrality)
    if noncentrality < 0:
        raise StatisticsInputError(f'noncentrality must be >= 0, got {noncentrality!r}')
    if noncentrality == 0:
        return f_cdf(x, df1, df2)
    if x <= 0:
        return DistributionResult(0.0, 0.0)

    half_lambda = noncentrality / 2.0
    scaled = df1 * x
    beta_x = scaled / (scaled + df2)
    beta_y = df2 / (scaled + df2)

    def term(j: int) -> float:
        return regularized_beta(beta_x, df1 / 2.0 + j, df2 / 2.0, y=beta_y).value

    mode = int(math.floor(half_lambda))
    mode_weight = math.exp(-half_lambda + mode * math.log(half_lambda) - math.lgamma(mode + 1.0))

    mass = mode_weight
    total = mode_weight * term(mode)
    up_j, up_weight = mode, mode_weight
    down_j, down_weight = mode, mode_weight
    iterations = 0
    while 1.0 - mass > POISSON_TAIL:
        iterations += 1
        if iterations > MAX_ITERATIONS:
            raise NumericalError('noncentral F series did not converge', 1.0 - mass)
        up_weight *= half_lambda / (up_j + 1.0)
        up_j += 1
        mass += up_weight
        total += up_weight * term(up_j)
        if down_j > 0:
            down_weight *= down_j / half_lambda
            down_j -= 1
            mass += down_weight
            total += down_weight * term(down_j)
        if up_weight < 1e-300 and down_j == 0:
            break
    remaining = max(0.0, 1.0 - mass)
    return DistributionResult(min(1.0, total), remaining + 64 * EPS)


def noncentral_f_sf(x: float, df1: float, df2: float, noncentrality: float) -> DistributionResult:
    cdf = noncentral_f_cdf(x, df1, df2, noncentrality)
    return DistributionResult(1.0 - cdf.value, cdf.achieved_abs_error_bound + EPS)


# ============================================================================
# STUDENTIZED RANGE
# ============================================================================

_GAUSS_ORDER = 16
_Z_LOWER, _Z_UPPER = -8.5, 8.5
_START_PANELS = 4
_MAX_PANELS = 64
# mass below the log-scale floor is at most 1e-16 / df
_SCALE_LOG_FLOOR = math.log(1e-16)

_erfc = np.vectorize(math.erfc, otypes=[float])


@lru_cache(maxsize=None)
def _gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _panel_nodes(lower: float, upper: float, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = _gauss_legendre(_GAUSS_ORDER)
    edges = np.linspace(lower, upper, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2.0
    centre = (edges[1:] + edges[:-1]) / 2.0
    points = (centre[:, None] + half[:, None] * nodes[None, :]).ravel()
    scaled = (half[:, None] * weights[None, :]).ravel()
    return points, scaled


def _scale_bounds(df: float) -> Tuple[float, float]:
    spread = 1.0 / math.sqrt(2.0 * df)
    return max(0.0, 1.0 - 14.0 * spread), 1.0 + 16.0 * spread + 2.0 / math.sqrt(df)


def _range_sf_quadrature(q: float, k: int, df: float, panels: int) -> float:
    z, z_weights = _panel_nodes(_Z_LOWER, _Z_UPPER, panels)

    # scale integrated over t = log(s); the Jacobian absorbs s**(df - 1)
    log_norm = (df / 2.0) * math.log(df) - math.lgamma(df / 2.0) - (df / 2.0 - 1.0) * math.log(2.0)
    s_lower, s_upper = _scale_bounds(df)
    t_lower = math.log(s_lower) if s_lower > 0 else (_SCALE_LOG_FLOOR - log_norm) / df
    t, s_weights = _panel_nodes(t_lower, math.log(s_upper), panels)
    s = np.exp(t)
    s_density = np.exp(log_norm + df * t - df * s * s / 2.0)

    phi_z = np.exp(-0.5 * z * z - _LOG_SQRT_2PI)
    cdf_z = 0.5 * _erfc(-z / _SQRT2)
    shifted = 0.5 * _erfc((q * s[None, :] - z[:, None]) / _SQRT2)
    inside = np.clip(cdf_z[:, None] - shifted, 0.0, 1.0)
    # 1 - P(range <= w) written so that both powers cancel without loss
    tail = cdf_z[:, None] ** (k - 1) - inside ** (k - 1)
    range_sf = k * np.sum((phi_z * z_weights)[:, None] * tail, axis=0)
    return float(np.sum(s_weights * s_density * range_sf))


def studentized_range_sf(q: float, k: int, df: float, tolerance: float = QUADRATURE_TOLERANCE) -> DistributionResult:
    """
    INPUTS:
        q: float - studentized range statistic
        k: int - number of groups (>= 2)
        df: float - degrees of freedom of the variance estimate (> 0)

    OUTPUTS:
        DistributionResult for P(Q > q). Panels double until two successive
        estimates agree within tolerance; NumericalError otherwise.
    """
    _require_finite(q=q)
    _require_positive(df=df)
    if k < 2:
        raise StatisticsInputError(f'k must be at least 2, got {k!r}')
    if q <= 0:
        return DistributionResult(1.0, 0.0)

    panels = _START_PANELS
    previous = _range_sf_quadrature(q, k, df, panels)
    while panels < _MAX_PANELS:
        panels *= 2
        current = _range_sf_quadrature(q, k, df, panels)
        residual = abs(current - previous)
        if residual <= tolerance:
            return DistributionResult(min(1.0, max(0.0, current)), residual)
        previous = current
    raise NumericalError(f'studentized range quadrature did not converge (q={q}, k={k}, df={df})', residual)


def studentized_range_isf(alpha: float, k: int, df: float) -> float:
    """Critical value q with P(Q > q) = alpha."""
    if not 0.0 < alpha < 1.0:
        raise StatisticsInputError(f'alpha must lie strictly between 0 and 1, got {alpha!r}')
    return _bisect_decreasing(lambda q: studentized_range_sf(q, k, df).value, alpha, upper_start=4.0,
                              tolerance=1e-7)
