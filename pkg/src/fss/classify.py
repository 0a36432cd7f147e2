"""Dominant-field classification of researchers.

Each person is assigned the single most recurrent subject category across
their publication portfolio, counted fully (every category of every
publication counts once). Ties are broken by the national fine-grained
field of the person where one exists, otherwise by a seeded random draw
so reruns are reproducible. Categories too thin to compare are filtered
out afterwards.
"""
from __future__ import annotations

import csv
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .model import FssError, Person, PersonRegistry, PublicationSet, YearWindow

TIEBREAK_NONE = "none"
TIEBREAK_SDS = "sds_frequency"
TIEBREAK_RANDOM = "seeded_random"

POLICY_SDS = "sds_frequency"
POLICY_RANDOM = "seeded_random"


class UnclassifiableError(FssError):
    """Person has no publications in the classification window."""


@dataclass(slots=True)
class SCFrequency:
    person_id: str
    counts: dict[str, int]
    total_publications: int


@dataclass(slots=True)
class Assignment:
    person_id: str
    sc_code: str
    tiebreak_used: str = TIEBREAK_NONE
    eligible: bool = True


@dataclass
class ClassificationDiagnostics:
    """Run statistics: tie-break usage, multi-dominant shares, drop reasons."""

    tiebreak_counts_by_country: dict[str, Counter] = field(
        default_factory=lambda: defaultdict(Counter)
    )
    classified_by_country: Counter = field(default_factory=Counter)
    multi_dominant_by_country: Counter = field(default_factory=Counter)
    unclassifiable: list[str] = field(default_factory=list)
    sds_fallbacks: list[str] = field(default_factory=list)
    ineligible_scs: list[str] = field(default_factory=list)

    def multi_dominant_share(self, country: str) -> float:
        n = self.classified_by_country[country]
        return 100.0 * self.multi_dominant_by_country[country] / n if n else 0.0

    def to_dict(self) -> dict:
        return {
            "tiebreak_counts_by_country": {
                c: dict(cnt) for c, cnt in sorted(self.tiebreak_counts_by_country.items())
            },
            "multi_dominant_share_by_country": {
                c: round(self.multi_dominant_share(c), 2)
                for c in sorted(self.classified_by_country)
            },
            "unclassifiable": sorted(self.unclassifiable),
            "sds_fallbacks": sorted(self.sds_fallbacks),
            "ineligible_scs": sorted(self.ineligible_scs),
        }


def sc_counts(person: Person, pubs: PublicationSet, window: YearWindow) -> SCFrequency:
    """Full-counting category frequencies over the person's window portfolio."""
    counts: Counter = Counter()
    total = 0
    for pub in pubs.authored_in(person.person_id, window):
        total += 1
        for sc in pub.subject_categories:
            counts[sc] += 1
    return SCFrequency(person.person_id, dict(counts), total)


def sds_frequency_table(
    registry: PersonRegistry, pubs: PublicationSet, window: YearWindow
) -> dict[str, dict[str, int]]:
    """Category counts per national field code, over distinct publications.

    A publication co-authored by several members of the same national field
    counts once for that field.
    """
    seen: dict[str, set[str]] = defaultdict(set)
    table: dict[str, Counter] = defaultdict(Counter)
    for person in registry.persons.values():
        sds = person.national_field_code
        if not sds:
            continue
        for pub in pubs.authored_in(person.person_id, window):
            if pub.pub_id in seen[sds]:
                continue
            seen[sds].add(pub.pub_id)
            for sc in pub.subject_categories:
                table[sds][sc] += 1
    return {sds: dict(counts) for sds, counts in table.items()}


def _person_rng(seed: int, person_id: str) -> random.Random:
    # str seeding hashes all bytes, stable across runs and platforms
    return random.Random(f"{seed}:{person_id}")


def dominant_sc(
    freq: SCFrequency,
    policy: str,
    sds_table: dict[str, dict[str, int]] | None = None,
    seed: int = 0,
    sds_code: str | None = None,
    diagnostics: ClassificationDiagnostics | None = None,
) -> Assignment:
    """Pick the person's dominant subject category, breaking ties per policy.

    With a unique maximum the tie-break is "none". Otherwise the sds_frequency
    policy prefers the tied category most frequent in the person's national
    field (lexicographic code order if that also ties), falling back to a
    seeded draw when the field is unknown; the seeded_random policy draws
    uniformly from the tied set with a generator keyed by (seed, person_id).
    """
    if not freq.counts:
        raise UnclassifiableError(
            f"{freq.person_id} has no publications in the classification window"
        )
    top = max(freq.counts.values())
    tied = sorted(code for code, n in freq.counts.items() if n == top)
    if len(tied) == 1:
        return Assignment(freq.person_id, tied[0], TIEBREAK_NONE)

    if policy == POLICY_SDS:
        row = (sds_table or {}).get(sds_code) if sds_code else None
        if row is None:
            if diagnostics is not None:
                diagnostics.sds_fallbacks.append(freq.person_id)
            policy = POLICY_RANDOM
        else:
            # frequency ties within the national-field table resolve by code order
            top_freq = max(row.get(code, 0) for code in tied)
            best = min(code for code in tied if row.get(code, 0) == top_freq)
            return Assignment(freq.person_id, best, TIEBREAK_SDS)

    if policy == POLICY_RANDOM:
        rng = _person_rng(seed, freq.person_id)
        return Assignment(freq.person_id, rng.choice(tied), TIEBREAK_RANDOM)

    raise ValueError(f"unknown tie-break policy {policy!r}")


def filter_eligible_scs(
    assignments: list[Assignment],
    countries: dict[str, str],
    min_total: int = 10,
    require_both_countries: bool = True,
) -> tuple[set[str], list[Assignment]]:
    """Keep categories with enough people for a fair comparison.

    A category stays when it holds at least min_total people overall and,
    when required, at least one person from every country in the cohort.
    People in dropped categories are marked ineligible and excluded from
    all scoring and reporting.
    """
    all_countries = {countries[a.person_id] for a in assignments}
    by_sc: dict[str, set[str]] = defaultdict(set)
    totals: Counter = Counter()
    for a in assignments:
        by_sc[a.sc_code].add(countries[a.person_id])
        totals[a.sc_code] += 1

    eligible = {
        sc
        for sc in by_sc
        if totals[sc] >= min_total
        and (not require_both_countries or by_sc[sc] == all_countries)
    }
    for a in assignments:
        a.eligible = a.sc_code in eligible
    return eligible, assignments


def classify_cohort(
    registry: PersonRegistry,
    pubs: PublicationSet,
    cfg,
    seed: int,
    person_ids: list[str] | None = None,
    min_total: int = 10,
    require_both_countries: bool = True,
) -> tuple[dict[str, Assignment], ClassificationDiagnostics]:
    """Classify every person and apply the eligibility filter.

    Persons whose national field code is present use the sds_frequency
    tie-break; the rest use the seeded random draw. Persons with an empty
    classification-window portfolio are dropped as unclassifiable.
    """
    diagnostics = ClassificationDiagnostics()
    ids = list(person_ids) if person_ids is not None else list(registry.persons)

    sds_table = _cohort_sds_table(registry, pubs, cfg)

    assignments: dict[str, Assignment] = {}
    for pid in ids:
        person = registry[pid]
        window = cfg.classification_window(person.country)
        freq = sc_counts(person, pubs, window)
        if not freq.counts:
            diagnostics.unclassifiable.append(pid)
            continue
        policy = POLICY_SDS if person.national_field_code else POLICY_RANDOM
        assignment = dominant_sc(
            freq,
            policy,
            sds_table=sds_table,
            seed=seed,
            sds_code=person.national_field_code,
            diagnostics=diagnostics,
        )
        assignments[pid] = assignment
        diagnostics.classified_by_country[person.country] += 1
        diagnostics.tiebreak_counts_by_country[person.country][assignment.tiebreak_used] += 1
        if assignment.tiebreak_used != TIEBREAK_NONE:
            diagnostics.multi_dominant_by_country[person.country] += 1

    countries = {pid: registry[pid].country for pid in assignments}
    eligible, _ = filter_eligible_scs(
        list(assignments.values()), countries, min_total, require_both_countries
    )
    observed = {a.sc_code for a in assignments.values()}
    diagnostics.ineligible_scs = sorted(observed - eligible)
    return assignments, diagnostics


def _cohort_sds_table(
    registry: PersonRegistry, pubs: PublicationSet, cfg
) -> dict[str, dict[str, int]]:
    """National-field table built per country, each over its own window."""
    with_sds = [p for p in registry.persons.values() if p.national_field_code]
    table: dict[str, dict[str, int]] = {}
    for country in sorted({p.country for p in with_sds}):
        subset = PersonRegistry(
            {p.person_id: p for p in with_sds if p.country == country}
        )
        part = sds_frequency_table(subset, pubs, cfg.classification_window(country))
        for sds, counts in part.items():
            if sds in table:
                merged = Counter(table[sds])
                merged.update(counts)
                table[sds] = dict(merged)
            else:
                table[sds] = counts
    return table


def write_assignments_csv(assignments: dict[str, Assignment], path) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["person_id", "sc_code", "tiebreak_used", "eligible"])
        for pid in sorted(assignments):
            a = assignments[pid]
            writer.writerow([a.person_id, a.sc_code, a.tiebreak_used,
                             "true" if a.eligible else "false"])
    return len(assignments)
