"""
STATISTICAL PROCEDURES
======================

Hypothesis tests used to analyse conformity:

    chi2_independence     2x2 verdict-side tables (Yates by default)
    shapiro_wilk          normality of ANOVA residuals
    levene_test           homogeneity of variances (mean or median centre)
    two_way_anova         balanced majority x intelligence factorial
    welch_anova           one-way ANOVA without the equal-variance assumption
    games_howell          pairwise comparisons after Welch
    partial_eta_squared   effect size with conventional bands
    posthoc_power_anova   power from the noncentral F distribution
    posthoc_power_f       the same for any effect and error df of a table

Every p-value comes from analysis.services.numerics.

INPUTS:  contingency tables, samples, labelled observations
OUTPUTS: TestReport, AnovaTable, EffectSize, power
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from analysis.exceptions import DegenerateInputError, ExpectedFrequencyError, StatisticsInputError
from analysis.services.metrics import ContingencyTable2x2
from analysis.services.numerics import (
    chi2_sf,
    f_isf,
    f_sf,
    noncentral_f_cdf,
    normal_ppf,
    normal_sf,
    studentized_range_sf,
)

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.01
MIN_EXPECTED_FREQUENCY = 5.0
YATES_CORRECTION = 0.5

SHAPIRO_MIN_N = 3
SHAPIRO_MAX_N = 5000

EFFECT_BANDS = ((0.14, 'large'), (0.06, 'medium'), (0.01, 'small'))


class Correction(str, Enum):
    YATES = 'yates'
    NONE = 'none'


class LeveneCenter(str, Enum):
    MEAN = 'mean'
    MEDIAN = 'median'


@dataclass(frozen=True)
class TestReport:
    test_name: str
    statistic: float
    df: Tuple[float, ...]
    p_value: float
    alpha: float = DEFAULT_ALPHA
    notes: str = ''
    comparison: Optional[Tuple[str, str]] = None
    mean_difference: Optional[float] = None

    @property
    def reject_null(self) -> bool:
        return self.p_value < self.alpha

    def describe(self) -> str:
        df = ', '.join(f'{value:.4g}' for value in self.df)
        verdict = 'reject H0' if self.reject_null else 'retain H0'
        label = f'{self.comparison[0]} vs {self.comparison[1]}: ' if self.comparison else ''
        return f'{label}{self.test_name}({df}) = {self.statistic:.4f}, p = {_format_p(self.p_value)} ({verdict} at alpha={self.alpha:g})'


def _format_p(p: float) -> str:
    if math.isnan(p):
        return 'nan'
    return '< 0.001' if p < 0.001 else f'{p:.4f}'


@dataclass(frozen=True)
class EffectSize:
    eta_p_squared: float
    band: str


@dataclass(frozen=True)
class AnovaRow:
    source: str
    ss: float
    df: float
    ms: float
    f: float = float('nan')
    p_value: float = float('nan')


@dataclass(frozen=True)
class AnovaTable:
    """
    Sources are keyed 'A', 'B', 'AxB', 'error' and 'total'. A degenerate table
    (zero error variance) keeps its sums of squares but carries NaN F and p.
    """
    rows: Dict[str, AnovaRow]
    a_label: str
    b_label: str
    a_levels: Tuple[str, ...]
    b_levels: Tuple[str, ...]
    cell_means: Dict[Tuple[str, str], float]
    residuals: Tuple[float, ...]
    degenerate: bool = False
    alpha: float = DEFAULT_ALPHA

    def effect_size(self, source: str) -> EffectSize:
        return partial_eta_squared(self.rows[source].ss, self.rows['error'].ss)

    def rejects(self, source: str) -> bool:
        p = self.rows[source].p_value
        return not math.isnan(p) and p < self.alpha

    def render(self) -> str:
        labels = {'A': self.a_label, 'B': self.b_label, 'AxB': f'{self.a_label} x {self.b_label}',
                  'error': 'error', 'total': 'total'}
        lines = [f"{'Source':<42}{'SS':>14}{'df':>8}{'MS':>14}{'F':>12}{'p':>10}"]
        for key in ('A', 'B', 'AxB', 'error', 'total'):
            row = self.rows[key]
            f = '' if math.isnan(row.f) else f'{row.f:.4f}'
            p = '' if math.isnan(row.p_value) else _format_p(row.p_value)
            ms = '' if key == 'total' else f'{row.ms:.4f}'
            lines.append(f'{labels[key]:<42}{row.ss:>14.4f}{row.df:>8g}{ms:>14}{f:>12}{p:>10}')
        if self.degenerate:
            lines.append('degenerate: zero error variance, F undefined')
        return '\n'.join(lines)


# ============================================================================
# CHI-SQUARE INDEPENDENCE
# ============================================================================

def chi2_independence(table: Union[ContingencyTable2x2, Sequence[Sequence[int]]],
                      correction: Correction = Correction.YATES,
                      alpha: float = DEFAULT_ALPHA,
                      force: bool = False) -> TestReport:
    """
    INPUTS:
        table: ContingencyTable2x2 (or a 2x2 nested sequence of counts)
        correction: Correction - yates subtracts min(0.5, |O - E|) from every |O - E|
        alpha: float - significance level
        force: bool - downgrade the expected-frequency check to a warning

    OUTPUTS:
        TestReport with df = (1,)
    """
    if not isinstance(table, ContingencyTable2x2):
        table = ContingencyTable2x2.from_counts(table)
    correction = Correction(correction)

    if 0 in table.row_totals or 0 in table.column_totals:
        raise StatisticsInputError(f'zero margin in contingency table {table.observed}')

    observed = table.as_array()
    expected = np.array(table.expected, dtype=float)
    notes = ''
    if (expected < MIN_EXPECTED_FREQUENCY).any():
        message = f'expected frequency below {MIN_EXPECTED_FREQUENCY:g}: min {expected.min():.3f}'
        if not force:
            raise ExpectedFrequencyError(message)
        logger.warning("Chi-square forced despite %s", message)
        notes = message

    deviation = np.abs(observed - expected)
    if correction is Correction.YATES:
        deviation = deviation - np.minimum(YATES_CORRECTION, deviation)
    statistic = float(np.sum(deviation ** 2 / expected))
    p_value = chi2_sf(statistic, 1).value

    logger.debug("[PROCESSING] chi2 observed=%s expected=%s correction=%s", table.observed,
                 expected.round(3).tolist(), correction.value)
    return TestReport(
        test_name='chi2',
        statistic=statistic,
        df=(1.0,),
        p_value=p_value,
        alpha=alpha,
        notes=notes or f'N = {table.n}, correction = {correction.value}',
        comparison=tuple(table.row_labels),
    )


# ============================================================================
# NORMALITY AND VARIANCE DIAGNOSTICS
# ============================================================================

_SW_AN = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_AN1 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_SW_SMALL_GAMMA = (-2.273, 0.459)
_SW_SMALL_MEAN = (0.5440, -0.39978, 0.025054, -6.714e-4)
_SW_SMALL_SIGMA = (1.3822, -0.77857, 0.062767, -0.0020322)
_SW_LARGE_MEAN = (-1.5861, -0.31082, -0.083751, 0.0038915)
_SW_LARGE_SIGMA = (-0.4803, -0.082676, 0.0030302)


def _polyval(coefficients: Sequence[float], x: float) -> float:
    return sum(c * x ** power for power, c in enumerate(coefficients))


def _shapiro_coefficients(n: int) -> np.ndarray:
    if n == 3:
        return np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    m = np.array([normal_ppf((i - 0.375) / (n + 0.25)) for i in range(1, n + 1)])
    mm = float(np.sum(m ** 2))
    u = 1.0 / math.sqrt(n)
    a = np.empty(n)
    a_n = m[-1] / math.sqrt(mm) + _polyval(_SW_AN, u)
    if n > 5:
        a_n1 = m[-2] / math.sqrt(mm) + _polyval(_SW_AN1, u)
        phi = (mm - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * a_n ** 2 - 2 * a_n1 ** 2)
        a[2:-2] = m[2:-2] / math.sqrt(phi)
        a[-1], a[-2] = a_n, a_n1
        a[0], a[1] = -a_n, -a_n1
    else:
        phi = (mm - 2 * m[-1] ** 2) / (1 - 2 * a_n ** 2)
        a[1:-1] = m[1:-1] / math.sqrt(phi)
        a[-1], a[0] = a_n, -a_n
    return a


def shapiro_wilk(sample: Sequence[float], alpha: float = DEFAULT_ALPHA) -> TestReport:
    """W from the ordered-sample coefficients; p from Royston's normalising transformation."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    if not SHAPIRO_MIN_N <= n <= SHAPIRO_MAX_N:
        raise StatisticsInputError(f'Shapiro-Wilk needs {SHAPIRO_MIN_N}..{SHAPIRO_MAX_N} observations, got {n}')
    centred = x - x.mean()
    ss = float(np.sum(centred ** 2))
    if x[-1] - x[0] <= 1e-12 * max(1.0, abs(x[0])) or ss == 0.0:
        raise DegenerateInputError('Shapiro-Wilk sample is constant')

    a = _shapiro_coefficients(n)
    w = min(1.0, float(np.dot(a, centred)) ** 2 / ss)

    if n == 3:
        p_value = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
    else:
        tail = max(1.0 - w, 1e-300)
        if n <= 11:
            gamma = _polyval(_SW_SMALL_GAMMA, n)
            if math.log(tail) >= gamma:
                z = math.inf
            else:
                mean = _polyval(_SW_SMALL_MEAN, n)
                sigma = math.exp(_polyval(_SW_SMALL_SIGMA, n))
                z = (-math.log(gamma - math.log(tail)) - mean) / sigma
        else:
            log_n = math.log(n)
            mean = _polyval(_SW_LARGE_MEAN, log_n)
            sigma = math.exp(_polyval(_SW_LARGE_SIGMA, log_n))
            z = (math.log(tail) - mean) / sigma
        p_value = normal_sf(z).value
    p_value = min(1.0, max(0.0, p_value))
    return TestReport(test_name='shapiro_wilk', statistic=w, df=(float(n),), p_value=p_value, alpha=alpha,
                      notes=f'n = {n}')


def _one_way_f(groups: Sequence[np.ndarray]) -> Tuple[float, float, float, float, float]:
    """Classic one-way decomposition: (F, df_between, df_within, ss_between, ss_within)."""
    values = np.concatenate(groups)
    grand = values.mean()
    ss_between = float(sum(len(g) * (g.mean() - grand) ** 2 for g in groups))
    ss_within = float(sum(np.sum((g - g.mean()) ** 2) for g in groups))
    df_between = len(groups) - 1
    df_within = len(values) - len(groups)
    if ss_within == 0.0:
        statistic = 0.0 if ss_between == 0.0 else math.inf
    else:
        statistic = (ss_between / df_between) / (ss_within / df_within)
    return statistic, float(df_between), float(df_within), ss_between, ss_within


def _as_groups(groups: Sequence[Sequence[float]], min_size: int = 2) -> List[np.ndarray]:
    arrays = [np.asarray(group, dtype=float) for group in groups]
    if len(arrays) < 2:
        raise StatisticsInputError(f'at least 2 groups are required, got {len(arrays)}')
    for index, group in enumerate(arrays):
        if len(group) < min_size:
            raise StatisticsInputError(f'group {index} has {len(group)} observations, needs at least {min_size}')
    return arrays


def levene_test(groups: Sequence[Sequence[float]], center: LeveneCenter = LeveneCenter.MEAN,
                alpha: float = DEFAULT_ALPHA) -> TestReport:
    """One-way ANOVA on absolute deviations from each group's centre."""
    center = LeveneCenter(center)
    arrays = _as_groups(groups)
    centre_of = np.mean if center is LeveneCenter.MEAN else np.median
    deviations = [np.abs(group - centre_of(group)) for group in arrays]
    statistic, df1, df2, _, _ = _one_way_f(deviations)
    p_value = f_sf(statistic, df1, df2).value if math.isfinite(statistic) else 0.0
    return TestReport(test_name='levene', statistic=statistic, df=(df1, df2), p_value=p_value, alpha=alpha,
                      notes=f'center = {center.value}')


# ============================================================================
# TWO-WAY ANOVA
# ============================================================================

@dataclass(frozen=True)
class Observation:
    y: float
    a_level: str
    b_level: str


def _ordered_levels(values: Sequence[str]) -> Tuple[str, ...]:
    seen: List[str] = []
    for value in values:
        if value not in seen:
            seen.append(value)
    return tuple(seen)


def two_way_anova(observations: Sequence[Observation], a_label: str = 'number of agents',
                  b_label: str = 'agent intelligence', alpha: float = DEFAULT_ALPHA) -> AnovaTable:
    """
    INPUTS:
        observations: Sequence[Observation] - response y with its two factor levels
        a_label, b_label: str - factor names shown in the table

    OUTPUTS:
        AnovaTable for the balanced a x b design
    """
    if not observations:
        raise StatisticsInputError('two-way ANOVA needs observations')
    a_levels = _ordered_levels([str(o.a_level) for o in observations])
    b_levels = _ordered_levels([str(o.b_level) for o in observations])
    cells: Dict[Tuple[str, str], List[float]] = {(a, b): [] for a in a_levels for b in b_levels}
    for observation in observations:
        cells[(str(observation.a_level), str(observation.b_level))].append(float(observation.y))

    empty = [cell for cell, values in cells.items() if not values]
    if empty:
        raise StatisticsInputError(f'empty ANOVA cells: {empty}')
    sizes = {len(values) for values in cells.values()}
    if len(sizes) != 1:
        raise StatisticsInputError(f'unbalanced design: cell sizes {sorted(sizes)}')

    n = sizes.pop()
    a, b = len(a_levels), len(b_levels)
    total_n = a * b * n
    df_error = total_n - a * b
    if df_error <= 0:
        raise StatisticsInputError('zero error degrees of freedom: every cell needs at least 2 observations')

    cube = np.array([[cells[(i, j)] for j in b_levels] for i in a_levels], dtype=float)
    grand = cube.mean()
    cell_means = cube.mean(axis=2)
    a_means = cube.mean(axis=(1, 2))
    b_means = cube.mean(axis=(0, 2))

    ss_a = b * n * float(np.sum((a_means - grand) ** 2))
    ss_b = a * n * float(np.sum((b_means - grand) ** 2))
    interaction = cell_means - a_means[:, None] - b_means[None, :] + grand
    ss_ab = n * float(np.sum(interaction ** 2))
    residuals = cube - cell_means[:, :, None]
    ss_error = float(np.sum(residuals ** 2))
    ss_total = float(np.sum((cube - grand) ** 2))

    df_a, df_b = a - 1, b - 1
    df_ab = df_a * df_b
    scale = max(ss_total, float(np.sum(cube ** 2)), 1.0)
    degenerate = ss_error <= 1e-12 * scale
    ms_error = ss_error / df_error

    def row(source: str, ss: float, df: int) -> AnovaRow:
        ms = ss / df if df else float('nan')
        if degenerate or not df:
            return AnovaRow(source, ss, df, ms)
        f = ms / ms_error
        return AnovaRow(source, ss, df, ms, f, f_sf(f, df, df_error).value)

    rows = {
        'A': row('A', ss_a, df_a),
        'B': row('B', ss_b, df_b),
        'AxB': row('AxB', ss_ab, df_ab),
        'error': AnovaRow('error', ss_error, df_error, ms_error),
        'total': AnovaRow('total', ss_total, total_n - 1, float('nan')),
    }
    if degenerate:
        logger.warning("Two-way ANOVA is degenerate: zero error variance across %d observations", total_n)
    logger.debug("[OUTPUT RESULTS] SS A=%.6g B=%.6g AxB=%.6g error=%.6g total=%.6g", ss_a, ss_b, ss_ab, ss_error, ss_total)

    return AnovaTable(
        rows=rows,
        a_label=a_label,
        b_label=b_label,
        a_levels=a_levels,
        b_levels=b_levels,
        cell_means={(i, j): float(cell_means[x, y]) for x, i in enumerate(a_levels) for y, j in enumerate(b_levels)},
        residuals=tuple(float(value) for value in residuals.ravel()),
        degenerate=degenerate,
        alpha=alpha,
    )


# ============================================================================
# WELCH ANOVA AND GAMES-HOWELL
# ============================================================================

def _moments(groups: Sequence[Sequence[float]]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    arrays = _as_groups(groups)
    sizes = np.array([len(g) for g in arrays], dtype=float)
    means = np.array([g.mean() for g in arrays])
    variances = np.array([g.var(ddof=1) for g in arrays])
    flat = [index for index, variance in enumerate(variances) if variance <= 0.0]
    if flat:
        raise DegenerateInputError(f'zero-variance groups: {flat}')
    return sizes, means, variances


def welch_anova(groups: Sequence[Sequence[float]], alpha: float = DEFAULT_ALPHA) -> TestReport:
    """Welch's F with weights n_j / s_j^2 and fractional denominator df."""
    sizes, means, variances = _moments(groups)
    k = len(sizes)
    weights = sizes / variances
    total_weight = weights.sum()
    weighted_mean = float(np.sum(weights * means) / total_weight)
    between = float(np.sum(weights * (means - weighted_mean) ** 2)) / (k - 1)
    tmp = float(np.sum((1.0 - weights / total_weight) ** 2 / (sizes - 1.0)))
    statistic = between / (1.0 + 2.0 * (k - 2) / (k * k - 1.0) * tmp)
    df2 = (k * k - 1.0) / (3.0 * tmp)
    p_value = f_sf(statistic, k - 1, df2).value
    return TestReport(test_name='welch_anova', statistic=statistic, df=(float(k - 1), df2), p_value=p_value,
                      alpha=alpha, notes=f'k = {k}, N = {int(sizes.sum())}')


def games_howell(groups: Sequence[Sequence[float]], labels: Optional[Sequence[str]] = None,
                 alpha: float = DEFAULT_ALPHA) -> List[TestReport]:
    """Pairwise q = |mean difference| / SE * sqrt(2) against the studentized range with k groups."""
    sizes, means, variances = _moments(groups)
    k = len(sizes)
    labels = list(labels) if labels is not None else [f'group {i + 1}' for i in range(k)]
    if len(labels) != k:
        raise StatisticsInputError(f'{len(labels)} labels for {k} groups')

    reports = []
    for i, j in combinations(range(k), 2):
        vi, vj = variances[i] / sizes[i], variances[j] / sizes[j]
        standard_error = math.sqrt(vi + vj)
        difference = float(means[i] - means[j])
        df = (vi + vj) ** 2 / (vi ** 2 / (sizes[i] - 1) + vj ** 2 / (sizes[j] - 1))
        q = abs(difference) / standard_error * math.sqrt(2.0)
        p_value = studentized_range_sf(q, k, df).value
        reports.append(TestReport(
            test_name='games_howell',
            statistic=q,
            df=(float(df),),
            p_value=p_value,
            alpha=alpha,
            comparison=(labels[i], labels[j]),
            mean_difference=difference,
        ))
    return reports


def one_way_effect_size(groups: Sequence[Sequence[float]]) -> EffectSize:
    """Eta squared from the classic between / within decomposition (basis for Welch-analysed factors)."""
    _, _, _, ss_between, ss_within = _one_way_f(_as_groups(groups))
    return partial_eta_squared(ss_between, ss_within)


# ============================================================================
# EFFECT SIZE AND POWER
# ============================================================================

def partial_eta_squared(ss_effect: float, ss_error: float) -> EffectSize:
    if ss_effect < 0 or ss_error < 0:
        raise StatisticsInputError(f'sums of squares must be non-negative (effect {ss_effect}, error {ss_error})')
    if ss_error == 0:
        raise StatisticsInputError('partial eta squared needs a positive error sum of squares')
    value = ss_effect / (ss_effect + ss_error)
    band = next((name for threshold, name in EFFECT_BANDS if value >= threshold), 'none')
    return EffectSize(eta_p_squared=value, band=band)


def posthoc_power_anova(eta_p_squared: float, k: int, n: int, alpha: float = DEFAULT_ALPHA) -> float:
    """
    INPUTS:
        eta_p_squared: float - observed effect size in [0, 1)
        k: int - number of groups
        n: int - observations per group
        alpha: float - significance level

    OUTPUTS:
        P(F > F_crit | lambda) with lambda = N * eta / (1 - eta), N = k * n
    """
    if k < 2 or n < 2:
        raise StatisticsInputError(f'power needs k >= 2 and n >= 2 (k={k}, n={n})')
    total = k * n
    return posthoc_power_f(eta_p_squared, k - 1, total - k, total, alpha)


def posthoc_power_f(eta_p_squared: float, df1: float, df2: float, total: int,
                    alpha: float = DEFAULT_ALPHA) -> float:
    """
    Power of one F test of a (possibly factorial) ANOVA table.

    INPUTS:
        eta_p_squared: float - observed partial eta squared in [0, 1)
        df1: float - effect degrees of freedom
        df2: float - error degrees of freedom of the table
        total: int - number of observations N
        alpha: float - significance level

    OUTPUTS:
        P(F(df1, df2, lambda) > F_crit) with lambda = N * eta / (1 - eta)
    """
    if not 0.0 <= eta_p_squared < 1.0:
        raise StatisticsInputError(f'eta squared must lie in [0, 1), got {eta_p_squared}')
    if df1 <= 0 or df2 <= 0:
        raise StatisticsInputError(f'power needs positive degrees of freedom (df1={df1}, df2={df2})')
    noncentrality = total * eta_p_squared / (1.0 - eta_p_squared)
    critical = f_isf(alpha, df1, df2)
    power = 1.0 - noncentral_f_cdf(critical, df1, df2, noncentrality).value
    logger.debug("[OUTPUT RESULTS] power=%.6f lambda=%.4f F_crit=%.4f", power, noncentrality, critical)
    return min(1.0, max(0.0, power))

