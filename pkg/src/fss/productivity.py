"""Per-person productivity scores and aggregate unit scores.

A person's score is the sum, over their assessment-window publications,
of field-normalized citation impact times their fractional contribution,
averaged over active years. The cost-adjusted variant divides by the
normalization factor of the rank they last held in the window. Aggregate
scores are means of cost-adjusted scores expressed relative to each
member's subject-category average over productive members.
"""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from scipy.stats import rankdata

from .classify import Assignment
from .metrics import (
    BaselineTable,
    CostModel,
    DEFAULT_WEIGHTS,
    ContributionWeights,
    EQUAL,
    POSITION_WEIGHTED,
    fractional_contribution,
    normalized_impact,
)
from .model import (
    POSITION_WEIGHTED_DISCIPLINES,
    CorpusConfig,
    FssError,
    Person,
    PersonRegistry,
    PublicationSet,
    SCScheme,
)

SCORE_FIELDS = [
    "person_id",
    "country",
    "institution_id",
    "sc_code",
    "discipline",
    "rank",
    "t",
    "fss_p",
    "fss_pwk",
    "percentile",
    "scaled",
]


class AllZeroCategoryError(FssError):
    """Every member of the subject category scored zero; no mean exists."""


@dataclass(slots=True)
class ScoreRecord:
    person_id: str
    country: str
    institution_id: str
    sc_code: str
    discipline: str
    rank: str
    t: int
    fss_p: float
    fss_pwk: float
    percentile: float = 0.0
    scaled: float = 0.0


@dataclass(frozen=True, slots=True)
class UnitScore:
    unit_id: str
    level: str       # overall | discipline | sc
    level_key: str
    obs: int
    fss_a: float


def contribution_scheme(discipline: str) -> str:
    """Weighting convention for a person assigned to the given discipline."""
    if discipline.casefold() in POSITION_WEIGHTED_DISCIPLINES:
        return POSITION_WEIGHTED
    return EQUAL


def fss_p(
    person: Person,
    pubs: Iterable,
    baselines: BaselineTable,
    window,
    scheme: str = EQUAL,
    weights: ContributionWeights = DEFAULT_WEIGHTS,
) -> float:
    """Yearly average of normalized impact weighted by author share."""
    t = len(person.active_years(window))
    if t == 0:
        raise FssError(f"{person.person_id} has no active years in the window")
    terms = []
    for pub in pubs:
        if pub.year not in window:
            continue
        share = fractional_contribution(
            pub, pub.position_of(person.person_id), scheme, weights
        )
        terms.append(normalized_impact(pub, baselines) * share)
    return math.fsum(terms) / t


def fss_pwk(fss_p_value: float, factor: float) -> float:
    if factor < 1:
        raise FssError(f"cost factor must be >= 1, got {factor}")
    return fss_p_value / factor


def percentile_ranks(scores: dict[str, float]) -> dict[str, float]:
    """0 (worst) to 100 (best); tied scores share their mean rank."""
    n = len(scores)
    if n < 2:
        raise FssError("percentiles need at least two members")
    keys = sorted(scores)
    ranks = rankdata([scores[k] for k in keys], method="average")
    return {k: float(100.0 * (r - 1.0) / (n - 1.0)) for k, r in zip(keys, ranks)}


def mean_positive(scores: Iterable[float]) -> float:
    positives = [s for s in scores if s > 0]
    if not positives:
        raise AllZeroCategoryError("no member scored above zero")
    return math.fsum(positives) / len(positives)


def scaled_scores(scores: dict[str, float]) -> dict[str, float]:
    """Each score over the mean score of productive members."""
    mean = mean_positive(scores.values())
    return {k: v / mean for k, v in scores.items()}


def fss_a(
    members: Iterable[ScoreRecord],
    sc_means: dict[str, float],
    unit_id: str,
    level: str = "overall",
    level_key: str = "",
) -> UnitScore:
    members = list(members)
    if not members:
        raise FssError(f"unit {unit_id!r} has no members")
    terms = []
    for m in members:
        try:
            mean = sc_means[m.sc_code]
        except KeyError:
            raise AllZeroCategoryError(
                f"{m.person_id} belongs to {m.sc_code}, which has no productive mean"
            ) from None
        terms.append(m.fss_pwk / mean)
    return UnitScore(
        unit_id=unit_id,
        level=level,
        level_key=level_key,
        obs=len(members),
        fss_a=math.fsum(terms) / len(members),
    )


@dataclass
class ScoreSet:
    records: list[ScoreRecord]
    sc_means: dict[str, float]                     # mean positive fss_pwk per SC
    diagnostics: dict = field(default_factory=dict)

    def by_sc(self) -> dict[str, list[ScoreRecord]]:
        groups: dict[str, list[ScoreRecord]] = defaultdict(list)
        for rec in self.records:
            groups[rec.sc_code].append(rec)
        return dict(groups)

    def by_person(self) -> dict[str, ScoreRecord]:
        return {rec.person_id: rec for rec in self.records}


def score_cohort(
    registry: PersonRegistry,
    pubs: PublicationSet,
    assignments: dict[str, Assignment],
    baselines: BaselineTable,
    cost_model: CostModel,
    scheme: SCScheme,
    cfg: CorpusConfig,
    weights: ContributionWeights = DEFAULT_WEIGHTS,
) -> ScoreSet:
    """Score every eligible assigned person and scale within categories."""
    window = cfg.assessment_window
    records: list[ScoreRecord] = []
    for pid in sorted(assignments):
        assignment = assignments[pid]
        if not assignment.eligible:
            continue
        person = registry[pid]
        discipline = scheme.discipline(assignment.sc_code)
        contrib = contribution_scheme(discipline)
        rank = person.latest_rank(window)
        p_value = fss_p(
            person, pubs.authored_in(pid, window), baselines, window, contrib, weights
        )
        records.append(
            ScoreRecord(
                person_id=pid,
                country=person.country,
                institution_id=person.institution_id,
                sc_code=assignment.sc_code,
                discipline=discipline,
                rank=rank,
                t=len(person.active_years(window)),
                fss_p=p_value,
                fss_pwk=fss_pwk(p_value, cost_model.factor(rank)),
            )
        )

    by_sc: dict[str, list[ScoreRecord]] = defaultdict(list)
    for rec in records:
        by_sc[rec.sc_code].append(rec)

    sc_means: dict[str, float] = {}
    all_zero: list[str] = []
    for sc_code in sorted(by_sc):
        group = by_sc[sc_code]
        pcts = percentile_ranks({r.person_id: r.fss_pwk for r in group})
        for rec in group:
            rec.percentile = pcts[rec.person_id]
        try:
            mean = mean_positive(r.fss_pwk for r in group)
        except AllZeroCategoryError:
            # Zero stays zero; the category is reported and carries no mean.
            all_zero.append(sc_code)
            for rec in group:
                rec.scaled = 0.0
            continue
        sc_means[sc_code] = mean
        for rec in group:
            rec.scaled = rec.fss_pwk / mean

    diagnostics = {
        "scored": len(records),
        "categories": len(by_sc),
        "all_zero_categories": all_zero,
        "baseline_fallbacks": sum(baselines.fallback_uses.values()),
    }
    return ScoreSet(records=records, sc_means=sc_means, diagnostics=diagnostics)


def write_scores_csv(scores: ScoreSet, path) -> int:
    """Full-precision export; floats round-trip exactly through repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCORE_FIELDS)
        for rec in sorted(scores.records, key=lambda r: r.person_id):
            writer.writerow(
                [
                    rec.person_id,
                    rec.country,
                    rec.institution_id,
                    rec.sc_code,
                    rec.discipline,
                    rec.rank,
                    rec.t,
                    repr(rec.fss_p),
                    repr(rec.fss_pwk),
                    repr(rec.percentile),
                    repr(rec.scaled),
                ]
            )
    return len(scores.records)


def read_scores_csv(path) -> ScoreSet:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SCORE_FIELDS:
            raise FssError(f"{path}: unexpected scores header")
        for rec in reader:
            records.append(
                ScoreRecord(
                    person_id=rec["person_id"],
                    country=rec["country"],
                    institution_id=rec["institution_id"],
                    sc_code=rec["sc_code"],
                    discipline=rec["discipline"],
                    rank=rec["rank"],
                    t=int(rec["t"]),
                    fss_p=float(rec["fss_p"]),
                    fss_pwk=float(rec["fss_pwk"]),
                    percentile=float(rec["percentile"]),
                    scaled=float(rec["scaled"]),
                )
            )
    sc_groups: dict[str, list[float]] = defaultdict(list)
    for rec in records:
        sc_groups[rec.sc_code].append(rec.fss_pwk)
    sc_means = {}
    for sc_code, values in sorted(sc_groups.items()):
        try:
            sc_means[sc_code] = mean_positive(values)
        except AllZeroCategoryError:
            pass
    return ScoreSet(records=records, sc_means=sc_means)
