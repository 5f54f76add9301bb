"""
ANALYSIS REPORTS
================

Turns a transcript store into the conformity tables, hypothesis tests and
figure data:

    analyze                    conformity table, H1/H2 chi-square, factorial
                               ANOVA with diagnostics, Welch + Games-Howell,
                               effect sizes, power, framing comparison,
                               complete-agreement events
    report_topic_distribution  per-topic histogram of per-debate CR (0/3..3/3)
    ratio_sweep_report         majority-side CR by head-count ratio with
                               Wilson confidence intervals
    write_figure_data          the tables above as CSV files
    export_transcripts         one readable text file per debate

Analysis is a pure function of the transcripts: transcripts are sorted by
identity before anything is computed, so the same store always renders the
same report. An analysis that cannot run (empty group, unbalanced cells,
zero variance, low expected counts) is listed with its reason instead of
being dropped.

INPUTS:  List[DebateTranscript], AnalysisSpec
OUTPUTS: ReportBundle, pandas DataFrames, files
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd

from analysis.exceptions import NumericalError, StatisticsInputError, UndefinedMetricError
from analysis.services.metrics import ContingencyTable2x2, build_contingency, summarize
from analysis.services.numerics import normal_ppf
from analysis.services.stats import (
    DEFAULT_ALPHA,
    AnovaTable,
    Correction,
    EffectSize,
    Observation,
    TestReport,
    chi2_independence,
    games_howell,
    levene_test,
    one_way_effect_size,
    posthoc_power_anova,
    posthoc_power_f,
    shapiro_wilk,
    two_way_anova,
    welch_anova,
)
from debates.domain import DebateTranscript, Experiment, Framing, IntelligenceRelation
from debates.services.grids import (
    EXPERIMENT_A_SCENARIOS,
    EXPERIMENT_B_SCENARIOS,
    FACTORIAL_SCENARIOS,
    H1_OPP_MAJORITY,
    H1_PRO_MAJORITY,
    H2_INFERIOR,
    H2_SUPERIOR,
    RATIOS,
)
from debates.services.prompts import render_transcript

logger = logging.getLogger(__name__)


SWEEP_CONFIDENCE = 0.99
BUCKETS = ('0/3', '1/3', '2/3', '3/3')

FIGURE_GROUPS: Dict[str, Tuple[str, ...]] = {
    'pro-majority (a, c)': H1_PRO_MAJORITY,
    'opp-majority (b, d)': H1_OPP_MAJORITY,
    'superior (e)': H2_SUPERIOR,
    'inferior (f)': H2_INFERIOR,
}

_SCENARIO_ORDER = {scenario.id: index for index, scenario in enumerate(EXPERIMENT_A_SCENARIOS + EXPERIMENT_B_SCENARIOS)}
_INTELLIGENCE_ORDER = [IntelligenceRelation.SUPERIOR.value, IntelligenceRelation.EQUIVALENT.value,
                       IntelligenceRelation.INFERIOR.value]


class Grouping(str, Enum):
    BY_SCENARIO = 'by_scenario'
    BY_TOPIC = 'by_topic'
    BY_RATIO = 'by_ratio'
    H1_POOL = 'h1_pool'
    H2_POOL = 'h2_pool'


@dataclass(frozen=True)
class AnalysisSpec:
    grouping: Grouping = Grouping.BY_SCENARIO
    alpha: float = DEFAULT_ALPHA
    correction: Correction = Correction.YATES
    force: bool = False


@dataclass(frozen=True)
class SkippedAnalysis:
    name: str
    reason: str


@dataclass
class ReportBundle:
    spec: AnalysisSpec
    conformity_table: pd.DataFrame
    analysed: int = 0
    excluded: int = 0
    chi_square: Dict[str, TestReport] = field(default_factory=dict)
    contingency: Dict[str, ContingencyTable2x2] = field(default_factory=dict)
    anova: Optional[AnovaTable] = None
    diagnostics: Dict[str, TestReport] = field(default_factory=dict)
    headline: Optional[str] = None
    welch: Dict[str, TestReport] = field(default_factory=dict)
    games_howell: Dict[str, List[TestReport]] = field(default_factory=dict)
    effect_sizes: Dict[str, EffectSize] = field(default_factory=dict)
    power: Dict[str, float] = field(default_factory=dict)
    framing_comparison: Optional[pd.DataFrame] = None
    agreement_events: pd.DataFrame = field(default_factory=pd.DataFrame)
    skipped: List[SkippedAnalysis] = field(default_factory=list)

    def skip(self, name: str, reason: str) -> None:
        logger.warning("Skipping %s: %s", name, reason)
        self.skipped.append(SkippedAnalysis(name, reason))

    def render(self) -> str:
        return _render_bundle(self)


# ============================================================================
# HELPERS
# ============================================================================

def ratio_label(ratio: Fraction) -> str:
    ratio = Fraction(ratio)
    return str(ratio.numerator) if ratio.denominator == 1 else f'{ratio.numerator}/{ratio.denominator}'


def _identity_key(transcript: DebateTranscript) -> tuple:
    config = transcript.config
    return (
        config.experiment.value,
        _SCENARIO_ORDER.get(config.scenario.id, len(_SCENARIO_ORDER)),
        config.scenario.id,
        config.topic.id,
        config.framing.value,
        config.pairing.id,
        config.rep_index,
    )


def _sorted(transcripts: Iterable[DebateTranscript]) -> List[DebateTranscript]:
    return sorted(transcripts, key=_identity_key)


def _framings(transcripts: Sequence[DebateTranscript]) -> List[Framing]:
    present = {t.config.framing for t in transcripts}
    return [framing for framing in Framing if framing in present]


def _primary(transcripts: Sequence[DebateTranscript], experiment: Experiment) -> List[DebateTranscript]:
    """Transcripts of one experiment in its primary framing (original when present)."""
    chosen = [t for t in transcripts if t.config.experiment is experiment]
    framings = _framings(chosen)
    if not framings:
        return []
    return [t for t in chosen if t.config.framing is framings[0]]


def _in_scenarios(transcripts: Sequence[DebateTranscript], scenario_ids: Sequence[str]) -> List[DebateTranscript]:
    return [t for t in transcripts if t.config.scenario.id in scenario_ids]


def _evaluated(transcripts: Sequence[DebateTranscript]) -> List[DebateTranscript]:
    return [t for t in transcripts if t.turns]


def _percent(value: Optional[float]) -> float:
    return float('nan') if value is None else round(100.0 * value, 2)


def _setup_label(transcript: DebateTranscript) -> str:
    scenario = transcript.config.scenario
    return (f'{scenario.proponent_count}{scenario.proponent_size.value[0]}'
            f'/{scenario.opponent_count}{scenario.opponent_size.value[0]}')


def wilson_interval(successes: int, trials: int, confidence: float = SWEEP_CONFIDENCE) -> Tuple[float, float]:
    if trials <= 0:
        return float('nan'), float('nan')
    z = normal_ppf(1.0 - (1.0 - confidence) / 2.0)
    p = successes / trials
    denominator = 1.0 + z * z / trials
    centre = (p + z * z / (2.0 * trials)) / denominator
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denominator
    return max(0.0, centre - half), min(1.0, centre + half)


# ============================================================================
# CONFORMITY TABLE
# ============================================================================

def _group_of(transcript: DebateTranscript, grouping: Grouping) -> Optional[Tuple[tuple, str]]:
    """(sort key, label) of the transcript's group, or None when the grouping leaves it out."""
    scenario = transcript.config.scenario
    if grouping is Grouping.BY_SCENARIO:
        return (_SCENARIO_ORDER.get(scenario.id, len(_SCENARIO_ORDER)), scenario.id), scenario.id
    if grouping is Grouping.BY_TOPIC:
        return (transcript.config.topic.id,), transcript.config.topic.id
    if grouping is Grouping.BY_RATIO:
        ratio = scenario.majority_ratio
        return (-ratio,), ratio_label(ratio)
    pools = ((H1_PRO_MAJORITY, H1_OPP_MAJORITY) if grouping is Grouping.H1_POOL
             else (H2_SUPERIOR, H2_INFERIOR))
    names = list(FIGURE_GROUPS)[:2] if grouping is Grouping.H1_POOL else list(FIGURE_GROUPS)[2:]
    if transcript.config.experiment is not Experiment.A:
        return None
    for index, (ids, name) in enumerate(zip(pools, names)):
        if scenario.id in ids:
            return (index,), name
    return None


def conformity_table(transcripts: Sequence[DebateTranscript], grouping: Grouping = Grouping.BY_SCENARIO) -> pd.DataFrame:
    """
    INPUTS:
        transcripts: Sequence[DebateTranscript]
        grouping: Grouping

    OUTPUTS:
        DataFrame, one row per (framing, group): debates, evaluated turns,
        CR (micro, percent), CR macro, FCR, excluded and early-terminated counts
    """
    grouping = Grouping(grouping)
    groups: Dict[tuple, Tuple[str, str, List[DebateTranscript]]] = {}
    for transcript in _sorted(transcripts):
        found = _group_of(transcript, grouping)
        if found is None:
            continue
        sort_key, label = found
        framing = transcript.config.framing
        key = (list(Framing).index(framing),) + sort_key
        groups.setdefault(key, (label, framing.value, []))[2].append(transcript)

    rows = []
    for key in sorted(groups):
        label, framing, members = groups[key]
        row = {'Group': label, 'Framing': framing}
        if grouping is Grouping.BY_SCENARIO:
            scenario = members[0].config.scenario
            row.update({
                'Setup': _setup_label(members[0]),
                'Majority': ratio_label(scenario.majority_ratio),
                'Intelligence': scenario.intelligence_relation.value,
                'Expected': scenario.expected_conformity.value,
            })
        try:
            summary = summarize(members)
        except UndefinedMetricError as exc:
            logger.warning("Group %s has no evaluated turns: %s", label, exc)
            summary = None
        row.update({
            'Debates': len(members),
            'Turns': summary.total_evaluated_turns if summary else 0,
            'CR (%)': _percent(summary.cr_micro if summary else None),
            'CR macro (%)': _percent(summary.cr_macro if summary else None),
            'FCR (%)': _percent(summary.fcr if summary else None),
            'Excluded': summary.excluded_discussions if summary else len(members),
            'Early terminated': summary.early_terminated_discussions if summary else 0,
        })
        rows.append(row)
    return pd.DataFrame(rows)


# ============================================================================
# ANALYZE
# ============================================================================

def _chi_square(bundle: ReportBundle, name: str, group_a: List[DebateTranscript], group_b: List[DebateTranscript],
                labels: Tuple[str, str]) -> None:
    group_a, group_b = _evaluated(group_a), _evaluated(group_b)
    for members, label in ((group_a, labels[0]), (group_b, labels[1])):
        if not members:
            bundle.skip(name, f'no evaluated transcripts for {label}')
            return
    table = build_contingency(group_a, group_b, labels)
    bundle.contingency[name] = table
    spec = bundle.spec
    try:
        bundle.chi_square[name] = chi2_independence(table, spec.correction, spec.alpha, spec.force)
    except StatisticsInputError as exc:
        bundle.skip(name, str(exc))


def _hypothesis_tests(bundle: ReportBundle, experiment_a: List[DebateTranscript]) -> None:
    if not experiment_a:
        bundle.skip('chi-square tests', 'no Experiment A transcripts')
        return
    _chi_square(bundle, 'H1 pooled (a, c vs b, d)',
                _in_scenarios(experiment_a, H1_PRO_MAJORITY), _in_scenarios(experiment_a, H1_OPP_MAJORITY),
                ('pro-majority', 'opp-majority'))
    _chi_square(bundle, 'H2 pooled (e vs f)',
                _in_scenarios(experiment_a, H2_SUPERIOR), _in_scenarios(experiment_a, H2_INFERIOR),
                ('superior', 'inferior'))
    for pairing in sorted({t.config.pairing.id for t in experiment_a}):
        members = [t for t in experiment_a if t.config.pairing.id == pairing]
        _chi_square(bundle, f'H2 {pairing} (e vs f)',
                    _in_scenarios(members, H2_SUPERIOR), _in_scenarios(members, H2_INFERIOR),
                    ('superior', 'inferior'))


def _factorial_anova(bundle: ReportBundle, experiment_a: List[DebateTranscript]) -> None:
    name = 'two-way ANOVA (g, h, i, j)'
    members = _evaluated(_in_scenarios(experiment_a, FACTORIAL_SCENARIOS))
    if not members:
        bundle.skip(name, 'no evaluated transcripts for scenarios g, h, i, j')
        return
    observations = [
        Observation(
            y=t.conformity_rate,
            a_level=ratio_label(t.config.scenario.majority_ratio),
            b_level=t.config.scenario.intelligence_relation.value,
        )
        for t in members
    ]
    try:
        anova = two_way_anova(observations, alpha=bundle.spec.alpha)
    except StatisticsInputError as exc:
        bundle.skip(name, str(exc))
        return
    bundle.anova = anova

    if anova.degenerate:
        bundle.skip('partial eta squared (two-way)', 'zero error variance')
    else:
        total = len(observations)
        error_df = anova.rows['error'].df
        for source in ('A', 'B', 'AxB'):
            label = {'A': anova.a_label, 'B': anova.b_label, 'AxB': f'{anova.a_label} x {anova.b_label}'}[source]
            effect = anova.effect_size(source)
            bundle.effect_sizes[f'two-way: {label}'] = effect
            try:
                bundle.power[f'two-way: {label}'] = posthoc_power_f(
                    effect.eta_p_squared, anova.rows[source].df, error_df, total, bundle.spec.alpha)
            except (StatisticsInputError, NumericalError) as exc:
                bundle.skip(f'power (two-way: {label})', str(exc))


    try:
        bundle.diagnostics['Shapiro-Wilk (ANOVA residuals)'] = shapiro_wilk(anova.residuals, bundle.spec.alpha)
    except StatisticsInputError as exc:
        bundle.skip('Shapiro-Wilk (ANOVA residuals)', str(exc))
    cells: Dict[Tuple[str, str], List[float]] = {}
    for observation in observations:
        cells.setdefault((observation.a_level, observation.b_level), []).append(observation.y)
    try:
        bundle.diagnostics['Levene (cells)'] = levene_test(
            [cells[key] for key in sorted(cells)], alpha=bundle.spec.alpha)
    except StatisticsInputError as exc:
        bundle.skip('Levene (cells)', str(exc))


def _choose_headline(bundle: ReportBundle) -> None:
    if bundle.anova is None:
        bundle.headline = "Welch's ANOVA (two-way ANOVA unavailable)"
    elif bundle.anova.degenerate:
        bundle.headline = "Welch's ANOVA (two-way ANOVA degenerate)"
    elif len(bundle.diagnostics) < 2:
        bundle.headline = "Welch's ANOVA (diagnostics unavailable)"
    else:
        failed = [name for name, report in bundle.diagnostics.items() if report.reject_null]
        if failed:
            bundle.headline = f"Welch's ANOVA ({', '.join(failed)} rejected at alpha={bundle.spec.alpha:g})"
        else:
            bundle.headline = 'two-way ANOVA (normality and homogeneity retained)'


def _welch_factor(bundle: ReportBundle, factor: str, experiment_a: List[DebateTranscript],
                  level_of: Callable[[DebateTranscript], str], order: Callable[[str], object]) -> None:
    name = f'Welch ANOVA ({factor})'
    levels: Dict[str, List[float]] = {}
    for transcript in _evaluated(experiment_a):
        levels.setdefault(level_of(transcript), []).append(transcript.conformity_rate)
    small = sorted(label for label, values in levels.items() if len(values) < 2)
    if small:
        logger.warning("%s: dropping levels with fewer than 2 debates: %s", name, small)
    labels = sorted((label for label, values in levels.items() if len(values) >= 2), key=order)
    if len(labels) < 2:
        bundle.skip(name, f'needs at least 2 levels with 2+ debates, found {len(labels)}')
        return
    groups = [levels[label] for label in labels]
    try:
        bundle.welch[factor] = welch_anova(groups, bundle.spec.alpha)
    except StatisticsInputError as exc:
        bundle.skip(name, str(exc))
        return
    try:
        bundle.games_howell[factor] = games_howell(groups, labels, bundle.spec.alpha)
    except (StatisticsInputError, NumericalError) as exc:
        bundle.skip(f'Games-Howell ({factor})', str(exc))
    try:
        effect = one_way_effect_size(groups)
    except StatisticsInputError as exc:
        bundle.skip(f'effect size ({factor})', str(exc))
        return
    bundle.effect_sizes[f'Welch: {factor}'] = effect
    total = sum(len(group) for group in groups)
    try:
        bundle.power[f'Welch: {factor}'] = posthoc_power_anova(
            effect.eta_p_squared, len(groups), total // len(groups), bundle.spec.alpha)
    except (StatisticsInputError, NumericalError) as exc:
        bundle.skip(f'power (Welch: {factor})', str(exc))


def framing_comparison(transcripts: Sequence[DebateTranscript]) -> Optional[pd.DataFrame]:
    """Original vs reversed CR per Experiment A scenario; None unless both framings are present."""
    experiment_a = [t for t in transcripts if t.config.experiment is Experiment.A]
    if len(_framings(experiment_a)) < 2:
        return None
    rows = []
    scenario_ids = sorted({t.config.scenario.id for t in experiment_a},
                          key=lambda sid: (_SCENARIO_ORDER.get(sid, len(_SCENARIO_ORDER)), sid))
    for scenario_id in scenario_ids:
        row = {'Scenario': scenario_id}
        for framing in Framing:
            members = [t for t in experiment_a
                       if t.config.scenario.id == scenario_id and t.config.framing is framing]
            try:
                summary = summarize(members) if members else None
            except UndefinedMetricError:
                summary = None
            row[f'{framing.value} debates'] = len(members)
            row[f'{framing.value} CR (%)'] = _percent(summary.cr_micro if summary else None)
        row['Difference (pp)'] = round(row['reversed CR (%)'] - row['original CR (%)'], 2)
        rows.append(row)
    return pd.DataFrame(rows)


def agreement_events(transcripts: Sequence[DebateTranscript]) -> pd.DataFrame:
    rows = []
    for transcript in _sorted(transcripts):
        early = transcript.early_termination
        if early is None:
            continue
        side = transcript.config.side_of(early.conceding_agent_id)
        rows.append({
            'run_id': transcript.run_id,
            'experiment': transcript.config.experiment.value,
            'scenario_id': transcript.config.scenario.id,
            'topic_id': transcript.config.topic.id,
            'turn': early.turn_index,
            'conceding_agent': early.conceding_agent_id,
            'conceding_side': side.value if side else '',
        })
    return pd.DataFrame(rows, columns=['run_id', 'experiment', 'scenario_id', 'topic_id', 'turn',
                                       'conceding_agent', 'conceding_side'])


def analyze(transcripts: Sequence[DebateTranscript], spec: Optional[AnalysisSpec] = None) -> ReportBundle:
    """
    INPUTS:
        transcripts: Sequence[DebateTranscript] - an integrity-checked store
        spec: AnalysisSpec - grouping, alpha, chi-square correction

    OUTPUTS:
        ReportBundle
    """
    spec = spec or AnalysisSpec()
    if not transcripts:
        raise UndefinedMetricError('transcript store is empty')
    transcripts = _sorted(transcripts)
    logger.debug("[INPUT DATA] %d transcripts, spec=%s", len(transcripts), spec)

    analysed = _evaluated(transcripts)
    bundle = ReportBundle(
        spec=spec,
        conformity_table=conformity_table(transcripts, spec.grouping),
        analysed=len(analysed),
        excluded=len(transcripts) - len(analysed),
    )

    experiment_a = _primary(transcripts, Experiment.A)
    _hypothesis_tests(bundle, experiment_a)

    if experiment_a:
        _factorial_anova(bundle, experiment_a)
        _choose_headline(bundle)
        _welch_factor(bundle, 'intelligence', experiment_a,
                      lambda t: t.config.scenario.intelligence_relation.value,
                      lambda label: _INTELLIGENCE_ORDER.index(label))
        _welch_factor(bundle, 'majority', experiment_a,
                      lambda t: ratio_label(t.config.scenario.majority_ratio),
                      lambda label: -Fraction(label))
    else:
        bundle.skip('ANOVA', 'no Experiment A transcripts')

    bundle.framing_comparison = framing_comparison(transcripts)
    bundle.agreement_events = agreement_events(transcripts)
    logger.debug("[OUTPUT RESULTS] %d tests, %d skipped", len(bundle.chi_square) + len(bundle.welch),
                 len(bundle.skipped))
    return bundle


# ============================================================================
# RENDERING
# ============================================================================

def _frame_text(frame: Optional[pd.DataFrame]) -> str:
    if frame is None or frame.empty:
        return '(none)'
    return frame.to_string(index=False, float_format=lambda value: f'{value:.2f}')


def _section(title: str) -> List[str]:
    return ['', title, '-' * len(title)]


def _render_bundle(bundle: ReportBundle) -> str:
    spec = bundle.spec
    lines = [
        'CONFORMITY ANALYSIS',
        '===================',
        f'Transcripts analysed: {bundle.analysed} (excluded with zero evaluated turns: {bundle.excluded})',
        f'alpha = {spec.alpha:g}, chi-square correction = {Correction(spec.correction).value}, '
        f'grouping = {Grouping(spec.grouping).value}',
    ]

    lines += _section('CONFORMITY RATES (CR = proponent-supported turns / evaluated turns)')
    lines.append(_frame_text(bundle.conformity_table))

    lines += _section('CHI-SQUARE TESTS')
    for name, report in bundle.chi_square.items():
        table = bundle.contingency[name]
        lines.append(f'{name}: {report.describe()}')
        lines.append(f'    observed {list(map(list, table.observed))}, N = {table.n}')
    if not bundle.chi_square:
        lines.append('(none)')

    lines += _section('TWO-WAY ANOVA ON PER-DEBATE CR')
    lines.append(bundle.anova.render() if bundle.anova else '(not run)')
    for name, report in bundle.diagnostics.items():
        lines.append(f'{name}: {report.describe()}')
    lines.append(f'Headline test: {bundle.headline or "(none)"}')

    lines += _section("WELCH'S ANOVA AND GAMES-HOWELL")
    for factor, report in bundle.welch.items():
        lines.append(f'{factor}: {report.describe()}')
        for pair in bundle.games_howell.get(factor, []):
            lines.append(f'    {pair.describe()}, mean difference = {pair.mean_difference:.4f}')
    if not bundle.welch:
        lines.append('(none)')

    lines += _section('EFFECT SIZES AND POWER')
    for name, effect in bundle.effect_sizes.items():
        power = bundle.power.get(name)
        power_text = '' if power is None else f', power = {power:.4f}'
        lines.append(f'{name}: partial eta squared = {effect.eta_p_squared:.4f} ({effect.band}){power_text}')
    if any(name.startswith('Welch') for name in bundle.effect_sizes):
        lines.append('Welch factors: eta squared from the classic one-way between / within decomposition.')
    if not bundle.effect_sizes:
        lines.append('(none)')

    if bundle.framing_comparison is not None:
        lines += _section('FRAMING COMPARISON')
        lines.append(_frame_text(bundle.framing_comparison))

    lines += _section('COMPLETE-AGREEMENT EVENTS')
    lines.append(_frame_text(bundle.agreement_events))

    lines += _section('SKIPPED ANALYSES')
    for skipped in bundle.skipped:
        lines.append(f'{skipped.name}: {skipped.reason}')
    if not bundle.skipped:
        lines.append('(none)')
    return '\n'.join(lines) + '\n'


# ============================================================================
# FIGURE DATA
# ============================================================================

def _bucket(rate: float) -> str:
    # nearest third, ties rounding up
    index = min(3, max(0, int(math.floor(rate * 3.0 + 0.5))))
    return BUCKETS[index]


def report_topic_distribution(transcripts: Sequence[DebateTranscript],
                              groups: Optional[Dict[str, Sequence[str]]] = None) -> pd.DataFrame:
    """
    INPUTS:
        transcripts: Sequence[DebateTranscript]
        groups: label -> scenario ids; scenarios outside every group form their own group

    OUTPUTS:
        DataFrame: topic_id, group, framing, debates, 0/3, 1/3, 2/3, 3/3, early_terminated
    """
    groups = FIGURE_GROUPS if groups is None else groups
    membership = {scenario_id: label for label, ids in groups.items() for scenario_id in ids}
    group_order = {label: index for index, label in enumerate(groups)}

    counts: Dict[tuple, Dict[str, object]] = {}
    for transcript in _sorted(_evaluated(transcripts)):
        config = transcript.config
        label = membership.get(config.scenario.id, config.scenario.id)
        key = (config.topic.id, group_order.get(label, len(group_order)),
               _SCENARIO_ORDER.get(label, 0), label, list(Framing).index(config.framing))
        row = counts.setdefault(key, {
            'topic_id': config.topic.id, 'group': label, 'framing': config.framing.value, 'debates': 0,
            **{bucket: 0 for bucket in BUCKETS}, 'early_terminated': 0,
        })
        row['debates'] += 1
        row[_bucket(transcript.conformity_rate)] += 1
        if transcript.early_termination is not None:
            row['early_terminated'] += 1
    columns = ['topic_id', 'group', 'framing', 'debates', *BUCKETS, 'early_terminated']
    return pd.DataFrame([counts[key] for key in sorted(counts)], columns=columns)


def ratio_sweep_report(transcripts: Sequence[DebateTranscript], confidence: float = SWEEP_CONFIDENCE) -> pd.DataFrame:
    """
    INPUTS:
        transcripts: Sequence[DebateTranscript] - Experiment B debates (others are ignored)
        confidence: float - Wilson interval level

    OUTPUTS:
        DataFrame per (model, framing, ratio): majority-side CR pooled over
        both directions, with interval bounds; gap=True marks a missing ratio
    """
    experiment_b = [t for t in _evaluated(transcripts) if t.config.experiment is Experiment.B
                    and t.config.scenario.majority_side is not None]
    ratios = sorted(set(RATIOS) | {t.config.scenario.head_count_ratio for t in experiment_b})
    rows = []
    for model in sorted({t.config.pairing.id for t in experiment_b}):
        for framing in _framings([t for t in experiment_b if t.config.pairing.id == model]):
            for ratio in ratios:
                members = [t for t in experiment_b if t.config.pairing.id == model
                           and t.config.framing is framing and t.config.scenario.head_count_ratio == ratio]
                turns = sum(t.outcome.total_evaluated_turns for t in members)
                majority = sum(
                    1 for t in members for side in t.verdict_sides if side is t.config.scenario.majority_side)
                low, high = wilson_interval(majority, turns, confidence)
                if not turns:
                    logger.warning("Ratio sweep gap: model %s has no debates at ratio %d", model, ratio)
                rows.append({
                    'model': model,
                    'framing': framing.value,
                    'ratio': ratio,
                    'debates': len(members),
                    'turns': turns,
                    'majority_turns': majority,
                    'cr_majority': majority / turns if turns else float('nan'),
                    'ci_low': low,
                    'ci_high': high,
                    'gap': not turns,
                })
    return pd.DataFrame(rows, columns=['model', 'framing', 'ratio', 'debates', 'turns', 'majority_turns',
                                       'cr_majority', 'ci_low', 'ci_high', 'gap'])


def write_figure_data(transcripts: Sequence[DebateTranscript], directory: Union[str, Path]) -> List[Path]:
    """Writes every figure table as CSV; returns the written paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tables = {
        'conformity_by_scenario.csv': conformity_table(transcripts, Grouping.BY_SCENARIO),
        'conformity_by_topic.csv': conformity_table(transcripts, Grouping.BY_TOPIC),
        'topic_distribution.csv': report_topic_distribution(transcripts),
        'agreement_events.csv': agreement_events(transcripts),
    }
    if any(t.config.experiment is Experiment.B for t in transcripts):
        tables['ratio_sweep.csv'] = ratio_sweep_report(transcripts)
    comparison = framing_comparison(transcripts)
    if comparison is not None:
        tables['framing_comparison.csv'] = comparison

    written = []
    for name, frame in tables.items():
        path = directory / name
        frame.to_csv(path, index=False)
        written.append(path)
    logger.info("Wrote %d figure-data files to %s", len(written), directory)
    return written


# ============================================================================
# TRANSCRIPT EXPORT
# ============================================================================

def transcript_text(transcript: DebateTranscript) -> str:
    config = transcript.config
    lines = [
        f'Run {transcript.run_id}',
        f'Experiment {config.experiment.value}, scenario {config.scenario.id} ({_setup_label(transcript)}), '
        f'topic {config.topic.id}, framing {config.framing.value}, pairing {config.pairing.id}, '
        f'rep {config.rep_index}, seed {config.seed}',
        f'Statement: {config.topic_statement}',
        '',
    ]
    for turn in transcript.turns:
        lines.append(render_transcript([(turn.index, utterance) for utterance in turn.utterances]))
        verdict = turn.verdict
        lines.append(f'Verdict: {verdict.selected_agent_id} ({verdict.selected_side.value})')
        if verdict.rationale:
            lines.append(f'Moderator: {verdict.rationale}')
        lines.append('')
    early = transcript.early_termination
    if early is not None:
        lines.append(f'Ended early in turn {early.turn_index}: {early.conceding_agent_id} reached complete agreement')
    outcome = transcript.outcome
    lines.append(f'Proponent supported in {outcome.proponent_supported_turns} of {outcome.total_evaluated_turns} turns')
    return '\n'.join(lines) + '\n'


def export_transcripts(transcripts: Sequence[DebateTranscript], directory: Union[str, Path]) -> List[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for transcript in _sorted(transcripts):
        path = directory / f'{transcript.run_id}.txt'
        path.write_text(transcript_text(transcript), encoding='utf-8')
        written.append(path)
    return written
