"""Canonical data model for the productivity engine.

Persons, publications, subject categories and the window configuration.
Everything downstream (classification, metrics, scoring, reporting) reads
these structures; once built they are never mutated.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace

ACADEMIC_RANKS = ("Assistant", "Associate", "Full")

# Disciplines whose byline convention signals contribution by author order.
POSITION_WEIGHTED_DISCIPLINES = frozenset(
    {"biology", "biomedical research", "clinical medicine"}
)


class FssError(Exception):
    """Base class for engine errors."""


class ConfigError(FssError):
    """Invalid or inconsistent run configuration."""


class IngestError(FssError):
    """Input file cannot be read or has an invalid structure."""


@dataclass(frozen=True, slots=True)
class YearWindow:
    """Closed calendar-year range [start, end]."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ConfigError(f"bad year window {self.start}..{self.end}")

    def __contains__(self, year: object) -> bool:
        return isinstance(year, int) and self.start <= year <= self.end

    def years(self) -> range:
        return range(self.start, self.end + 1)

    def covers(self, other: "YearWindow") -> bool:
        return self.start <= other.start and self.end >= other.end


@dataclass(frozen=True, slots=True)
class Authorship:
    """One slot in an ordered author list.

    person_id is None for co-authors outside the assessed cohort; keeping
    them as slots preserves the true list length and positions for the
    position-weighted contribution shares. is_last is derived when the
    authorship joins a Publication.
    """

    position: int
    person_id: str | None = None
    is_last: bool = False


@dataclass(frozen=True, slots=True)
class Publication:
    pub_id: str
    year: int
    journal_id: str
    subject_categories: tuple[str, ...]  # sorted, acts as a canonical set
    citations: int
    authors: tuple[Authorship, ...]      # sorted by position, 1-based contiguous
    distinct_affiliation_count: int
    doc_type: str = "article"

    def __post_init__(self) -> None:
        # normalize ordering and the derived last-author flag, so equality
        # and round-trips do not depend on construction order
        byline = sorted(self.authors, key=lambda a: a.position)
        n = len(byline)
        object.__setattr__(
            self,
            "authors",
            tuple(
                a if a.is_last == (a.position == n) else replace(a, is_last=a.position == n)
                for a in byline
            ),
        )
        object.__setattr__(self, "subject_categories", tuple(sorted(self.subject_categories)))

    @property
    def n_authors(self) -> int:
        return len(self.authors)

    @property
    def intramural(self) -> bool:
        return self.distinct_affiliation_count == 1

    def position_of(self, person_id: str) -> int:
        for a in self.authors:
            if a.person_id == person_id:
                return a.position
        raise KeyError(f"{person_id} is not an author of {self.pub_id}")


@dataclass(slots=True)
class Person:
    person_id: str
    full_name: str
    country: str
    institution_id: str
    institution_name: str
    rank_by_year: dict[int, str]
    national_field_code: str | None = None

    def active_years(self, window: YearWindow) -> list[int]:
        return sorted(y for y in self.rank_by_year if y in window)

    def latest_rank(self, window: YearWindow) -> str:
        """Rank held in the most recent active year inside the window."""
        years = self.active_years(window)
        if not years:
            raise FssError(f"{self.person_id} holds no rank in {window.start}-{window.end}")
        return self.rank_by_year[years[-1]]


@dataclass(frozen=True, slots=True)
class SubjectCategory:
    sc_code: str
    sc_name: str
    discipline: str


class SCScheme:
    """Subject-category reference table; each code maps to one discipline."""

    def __init__(self, categories: list[SubjectCategory]):
        self.by_code: dict[str, SubjectCategory] = {}
        for cat in categories:
            prior = self.by_code.get(cat.sc_code)
            if prior is not None and prior != cat:
                raise IngestError(
                    f"subject category {cat.sc_code} mapped twice with different "
                    f"name/discipline"
                )
            self.by_code[cat.sc_code] = cat

    def discipline(self, sc_code: str) -> str:
        try:
            return self.by_code[sc_code].discipline
        except KeyError:
            raise FssError(f"unknown subject category {sc_code!r}") from None

    def name(self, sc_code: str) -> str:
        try:
            return self.by_code[sc_code].sc_name
        except KeyError:
            raise FssError(f"unknown subject category {sc_code!r}") from None

    def __contains__(self, sc_code: str) -> bool:
        return sc_code in self.by_code

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SCScheme) and self.by_code == other.by_code


@dataclass(frozen=True)
class CorpusConfig:
    """Window and cohort rules for one assessment run."""

    assessment_window: YearWindow
    classification_window_by_country: dict[str, YearWindow] = field(default_factory=dict)
    min_service_years: int = 3
    require_one_publication: bool = True

    def __post_init__(self) -> None:
        if self.min_service_years < 1:
            raise ConfigError("min_service_years must be >= 1")
        for country, win in self.classification_window_by_country.items():
            if not win.covers(self.assessment_window):
                raise ConfigError(
                    f"classification window for {country} ({win.start}-{win.end}) "
                    f"does not cover the assessment window"
                )

    def classification_window(self, country: str) -> YearWindow:
        return self.classification_window_by_country.get(country, self.assessment_window)


@dataclass(slots=True)
class Rejection:
    """One reported input row that was not accepted.

    kind is "error" for structural defects (bad rank label, duplicate id,
    unresolvable journal, ...) and "filtered" for routine exclusions such
    as non-article document types.
    """

    row: int
    reason: str
    kind: str = "error"


@dataclass
class PersonRegistry:
    persons: dict[str, Person]
    rows_in: int = field(default=0, compare=False)
    rejections: list[Rejection] = field(default_factory=list, compare=False)

    def __len__(self) -> int:
        return len(self.persons)

    def __getitem__(self, person_id: str) -> Person:
        return self.persons[person_id]

    def __contains__(self, person_id: str) -> bool:
        return person_id in self.persons

    def countries(self) -> set[str]:
        return {p.country for p in self.persons.values()}

    def institution_names(self) -> dict[str, str]:
        return {p.institution_id: p.institution_name for p in self.persons.values()}


@dataclass
class PublicationSet:
    publications: dict[str, Publication]
    rows_in: int = field(default=0, compare=False)
    rejections: list[Rejection] = field(default_factory=list, compare=False)
    _by_person: dict[str, list[Publication]] | None = field(
        default=None, repr=False, compare=False
    )

    def __len__(self) -> int:
        return len(self.publications)

    def __iter__(self):
        return iter(self.publications.values())

    def by_person(self) -> dict[str, list[Publication]]:
        """Index of cohort person_id -> publications they co-authored."""
        if self._by_person is None:
            idx: dict[str, list[Publication]] = defaultdict(list)
            for pub in self.publications.values():
                for a in pub.authors:
                    if a.person_id is not None:
                        idx[a.person_id].append(pub)
            self._by_person = dict(idx)
        return self._by_person

    def authored_in(self, person_id: str, window: YearWindow) -> list[Publication]:
        return [p for p in self.by_person().get(person_id, ()) if p.year in window]
