"""Deterministic synthetic corpus generation.

Builds a registry, publication set, journal map, subject-category scheme
and cost config from a size spec and a seed. The same (spec, seed) pair
always yields the same corpus, byte for byte once written.

Home subject categories are dealt round-robin within each country, so
every category starts with members from every country; publication
streams are biased toward the home category so classification recovers
it most of the time.
"""
from __future__ import annotations

import math
import random
from bisect import bisect
from dataclasses import dataclass, field
from itertools import accumulate
from pathlib import Path

from .metrics import SalaryCell, write_cost_model_toml
from .model import (
    ACADEMIC_RANKS,
    Authorship,
    CorpusConfig,
    FssError,
    Person,
    PersonRegistry,
    Publication,
    PublicationSet,
    SCScheme,
    SubjectCategory,
    YearWindow,
)

DISCIPLINES = (
    "Biology",
    "Biomedical Research",
    "Chemistry",
    "Clinical Medicine",
    "Earth and Space sciences",
    "Economics",
    "Engineering",
    "Mathematics",
    "Physics",
    "Political and social sciences",
    "Psychology",
)

# Published national salary statistics used as the default cost config.
DEFAULT_SALARY_STATS = {
    ("IT", "Assistant"): SalaryCell(10403, 54574.0),
    ("NO", "Assistant"): SalaryCell(473, 55368.0),
    ("IT", "Associate"): SalaryCell(13261, 68514.0),
    ("NO", "Associate"): SalaryCell(1301, 59711.0),
    ("IT", "Full"): SalaryCell(10345, 102393.0),
    ("NO", "Full"): SalaryCell(2553, 74527.0),
}
DEFAULT_CAPITAL_PER_YEAR = 42693.0
DEFAULT_RESEARCH_TIME_SHARE = 0.5


class InfeasibleSpecError(FssError):
    """The requested corpus shape cannot satisfy its own constraints."""


@dataclass(frozen=True)
class SynthSpec:
    persons_per_country: dict[str, int] = field(
        default_factory=lambda: {"IT": 300, "NO": 120}
    )
    n_scs: int = 12
    n_journals: int = 48
    multi_sc_journal_rate: float = 0.25
    institutions_per_country: int = 5
    assessment_window: YearWindow = YearWindow(2011, 2015)
    classification_windows: dict[str, YearWindow] = field(
        default_factory=lambda: {"IT": YearWindow(2006, 2016), "NO": YearWindow(2011, 2017)}
    )
    pubs_per_person_mean: float = 6.0
    review_rate: float = 0.1
    zero_citation_rate: float = 0.15
    citation_mu: float = 1.1
    citation_sigma: float = 1.0
    coauthor_weights: tuple[float, ...] = (0.15, 0.3, 0.25, 0.15, 0.08, 0.04, 0.02, 0.01)
    external_author_rate: float = 0.35
    intramural_rate: float = 0.5
    home_sc_focus: float = 0.8
    rank_weights: tuple[float, float, float] = (0.4, 0.4, 0.2)
    promotion_rate: float = 0.25
    short_service_rate: float = 0.0
    no_publication_rate: float = 0.0
    sds_per_category: int = 2

    def __post_init__(self) -> None:
        if not self.persons_per_country:
            raise InfeasibleSpecError("no countries requested")
        total = sum(self.persons_per_country.values())
        if self.n_scs < 1:
            raise InfeasibleSpecError("need at least one subject category")
        for country, n in self.persons_per_country.items():
            if n < self.n_scs:
                raise InfeasibleSpecError(
                    f"{country} has {n} persons for {self.n_scs} categories; "
                    f"cannot place one per category"
                )
        if total < 10 * self.n_scs:
            raise InfeasibleSpecError(
                f"{total} persons cannot give every one of {self.n_scs} "
                f"categories 10 members"
            )
        if self.n_journals < self.n_scs:
            raise InfeasibleSpecError("need at least one journal per subject category")
        if len(self.coauthor_weights) < 1 or min(self.coauthor_weights) < 0:
            raise InfeasibleSpecError("coauthor_weights must be non-negative")
        if self.pubs_per_person_mean < 1:
            raise InfeasibleSpecError("pubs_per_person_mean must be >= 1")

    def corpus_config(self) -> CorpusConfig:
        return CorpusConfig(
            assessment_window=self.assessment_window,
            classification_window_by_country=dict(self.classification_windows),
        )

    def publication_span(self) -> YearWindow:
        windows = list(self.classification_windows.values()) or [self.assessment_window]
        return YearWindow(min(w.start for w in windows), max(w.end for w in windows))

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        kwargs: dict = {}
        if "persons_per_country" in data:
            kwargs["persons_per_country"] = {
                str(k): int(v) for k, v in data["persons_per_country"].items()
            }
        for key in (
            "n_scs", "n_journals", "institutions_per_country", "sds_per_category",
        ):
            if key in data:
                kwargs[key] = int(data[key])
        for key in (
            "multi_sc_journal_rate", "pubs_per_person_mean", "review_rate",
            "zero_citation_rate", "citation_mu", "citation_sigma",
            "external_author_rate", "intramural_rate", "home_sc_focus",
            "promotion_rate", "short_service_rate", "no_publication_rate",
        ):
            if key in data:
                kwargs[key] = float(data[key])
        if "coauthor_weights" in data:
            kwargs["coauthor_weights"] = tuple(float(w) for w in data["coauthor_weights"])
        if "rank_weights" in data:
            kwargs["rank_weights"] = tuple(float(w) for w in data["rank_weights"])
        if "assessment_window" in data:
            a, b = data["assessment_window"]
            kwargs["assessment_window"] = YearWindow(int(a), int(b))
        if "classification_windows" in data:
            kwargs["classification_windows"] = {
                str(c): YearWindow(int(a), int(b))
                for c, (a, b) in data["classification_windows"].items()
            }
        return cls(**kwargs)


@dataclass
class SyntheticCorpus:
    registry: PersonRegistry
    publications: PublicationSet
    journal_map: dict[str, tuple[str, ...]]
    scheme: SCScheme
    config: CorpusConfig


def _poisson(rng: random.Random, lam: float) -> int:
    # Knuth's product-of-uniforms method; lam stays small here.
    threshold = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return k
        k += 1


def _weighted_index(rng: random.Random, cumulative: list[float]) -> int:
    return bisect(cumulative, rng.random() * cumulative[-1])


def generate_synthetic_corpus(spec: SynthSpec, seed: int) -> SyntheticCorpus:
    rng = random.Random(seed)
    countries = sorted(spec.persons_per_country)

    sc_codes = [f"SC{i:03d}" for i in range(1, spec.n_scs + 1)]
    scheme = SCScheme(
        [
            SubjectCategory(
                sc_code=code,
                sc_name=f"Synthetic field {i:03d}",
                discipline=DISCIPLINES[(i - 1) % len(DISCIPLINES)],
            )
            for i, code in enumerate(sc_codes, start=1)
        ]
    )

    # Journals: the first n_scs carry one category each so every category
    # is reachable; the rest draw a primary category at random and may
    # pick up one or two more.
    journal_map: dict[str, tuple[str, ...]] = {}
    journals_by_sc: dict[str, list[str]] = {code: [] for code in sc_codes}
    for j in range(1, spec.n_journals + 1):
        journal = f"J{j:04d}"
        primary = sc_codes[(j - 1) % spec.n_scs] if j <= spec.n_scs else rng.choice(sc_codes)
        cats = {primary}
        if j > spec.n_scs and rng.random() < spec.multi_sc_journal_rate:
            for _ in range(rng.choice((1, 1, 2))):
                cats.add(rng.choice(sc_codes))
        journal_map[journal] = tuple(sorted(cats))
        for code in cats:
            journals_by_sc[code].append(journal)
    all_journals = sorted(journal_map)

    persons: dict[str, Person] = {}
    home_sc: dict[str, str] = {}
    no_pub: set[str] = set()
    span = spec.publication_span()
    rank_cum = list(accumulate(spec.rank_weights))
    for country in countries:
        for i in range(1, spec.persons_per_country[country] + 1):
            pid = f"{country}{i:06d}"
            home = sc_codes[(i - 1) % spec.n_scs]
            home_sc[pid] = home
            rank = ACADEMIC_RANKS[_weighted_index(rng, rank_cum)]
            short = rng.random() < spec.short_service_rate
            if short:
                first_year = spec.assessment_window.end - 1
            else:
                first_year = rng.randint(span.start, spec.assessment_window.start)
            history = {y: rank for y in range(first_year, span.end + 1)}
            if not short and rng.random() < spec.promotion_rate:
                idx = ACADEMIC_RANKS.index(rank)
                if idx + 1 < len(ACADEMIC_RANKS):
                    promo_year = rng.randint(first_year + 1, span.end)
                    for y in range(promo_year, span.end + 1):
                        history[y] = ACADEMIC_RANKS[idx + 1]
            sds = None
            if country == "IT":
                variant = rng.randint(1, spec.sds_per_category)
                sds = f"{home}/S{variant}"
            persons[pid] = Person(
                person_id=pid,
                full_name=f"Researcher {pid}",
                country=country,
                institution_id=f"{country}-U{1 + (i - 1) % spec.institutions_per_country:02d}",
                institution_name=(
                    f"University of {country} {1 + (i - 1) % spec.institutions_per_country:02d}"
                ),
                rank_by_year=history,
                national_field_code=sds,
            )
            if rng.random() < spec.no_publication_rate:
                no_pub.add(pid)

    # no_pub people never appear on a byline, or the flag would be meaningless
    members_by_country = {
        c: [pid for pid in persons if persons[pid].country == c and pid not in no_pub]
        for c in countries
    }

    publications: dict[str, Publication] = {}
    coauthor_cum = list(accumulate(spec.coauthor_weights))
    pub_no = 0
    lam = spec.pubs_per_person_mean - 1
    rand = rng.random
    for pid in sorted(persons):
        if pid in no_pub:
            continue
        person = persons[pid]
        pool = members_by_country[person.country]
        home = home_sc[pid]
        n_pubs = 1 + _poisson(rng, lam)
        for k in range(n_pubs):
            pub_no += 1
            # the first publication stays inside the assessment window so the
            # person clears the cohort rules unless no_publication_rate says not to
            window = spec.assessment_window if k == 0 else span
            year = rng.randint(window.start, window.end)
            if rand() < spec.home_sc_focus:
                journal = journals_by_sc[home][rng.randrange(len(journals_by_sc[home]))]
            else:
                journal = all_journals[rng.randrange(len(all_journals))]
            n_auth = 1 + _weighted_index(rng, coauthor_cum)
            owner_pos = rng.randint(1, n_auth)
            used = {pid}
            authors = []
            for pos in range(1, n_auth + 1):
                if pos == owner_pos:
                    authors.append(Authorship(pos, pid))
                    continue
                if rand() < spec.external_author_rate:
                    authors.append(Authorship(pos, None))
                    continue
                other = pool[rng.randrange(len(pool))]
                if other in used:
                    authors.append(Authorship(pos, None))
                else:
                    used.add(other)
                    authors.append(Authorship(pos, other))
            if rand() < spec.zero_citation_rate:
                citations = 0
            else:
                citations = 1 + int(rng.lognormvariate(spec.citation_mu, spec.citation_sigma))
            if n_auth == 1 or rand() < spec.intramural_rate:
                aff = 1
            else:
                aff = 2 + (rand() < 0.3)
            doc_type = "review" if rand() < spec.review_rate else "article"
            publications[f"P{pub_no:08d}"] = Publication(
                pub_id=f"P{pub_no:08d}",
                year=year,
                journal_id=journal,
                subject_categories=journal_map[journal],
                citations=citations,
                authors=tuple(authors),
                distinct_affiliation_count=aff,
                doc_type=doc_type,
            )

    return SyntheticCorpus(
        registry=PersonRegistry(persons, rows_in=len(persons)),
        publications=PublicationSet(publications, rows_in=len(publications)),
        journal_map=journal_map,
        scheme=scheme,
        config=spec.corpus_config(),
    )


def _toml_window(w: YearWindow) -> str:
    return f"[{w.start}, {w.end}]"


def write_run_config(spec: SynthSpec, seed: int, out_dir: Path) -> Path:
    """Write a run config pointing at the files write_corpus lays down."""
    lines = [
        "[paths]",
        'persons = "persons.csv"',
        'publications = "publications.jsonl"',
        'journal_map = "journal_sc_map.csv"',
        'sc_map = "sc_discipline_map.csv"',
        'cost_model = "cost_model.toml"',
        "",
        "[cohort]",
        f"assessment_window = {_toml_window(spec.assessment_window)}",
        "min_service_years = 3",
        "require_one_publication = true",
        "",
        "[cohort.classification_window]",
    ]
    for country in sorted(spec.classification_windows):
        lines.append(f"{country} = {_toml_window(spec.classification_windows[country])}")
    lines += [
        "",
        "[run]",
        f"seed = {seed}",
        'format = "csv"',
        "min_total_per_sc = 10",
        "require_both_countries = true",
    ]
    path = out_dir / "config.toml"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_corpus(spec: SynthSpec, seed: int, out_dir) -> tuple[dict[str, Path], dict[str, int]]:
    """Generate and write a complete input set under out_dir."""
    from . import ingest  # local import, avoids a cycle at module load

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = generate_synthetic_corpus(spec, seed)
    paths = {
        "persons": out_dir / "persons.csv",
        "publications": out_dir / "publications.jsonl",
        "journal_map": out_dir / "journal_sc_map.csv",
        "sc_map": out_dir / "sc_discipline_map.csv",
        "cost_model": out_dir / "cost_model.toml",
    }
    counts = {
        "persons": ingest.write_persons_csv(corpus.registry, paths["persons"]),
        "publications": ingest.write_publications_jsonl(
            corpus.publications, paths["publications"]
        ),
        "journal_map": ingest.write_journal_map_csv(corpus.journal_map, paths["journal_map"]),
        "sc_map": ingest.write_sc_scheme_csv(corpus.scheme, paths["sc_map"]),
    }
    write_cost_model_toml(
        paths["cost_model"],
        DEFAULT_SALARY_STATS,
        DEFAULT_CAPITAL_PER_YEAR,
        DEFAULT_RESEARCH_TIME_SHARE,
    )
    paths["config"] = write_run_config(spec, seed, out_dir)
    return paths, counts
