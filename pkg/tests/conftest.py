from __future__ import annotations

from contextlib import contextmanager

import pytest

from fss.model import (
    Authorship,
    CorpusConfig,
    Person,
    PersonRegistry,
    Publication,
    PublicationSet,
    SCScheme,
    SubjectCategory,
    YearWindow,
)
from fss.classify import classify_cohort
from fss.ingest import validate_cohort
from fss.metrics import build_baselines, build_cost_model
from fss.productivity import score_cohort
from fss.synth import (
    DEFAULT_CAPITAL_PER_YEAR,
    DEFAULT_SALARY_STATS,
    SynthSpec,
    generate_synthetic_corpus,
)

# ---------------------------------------------------------------------------
# acceptance bookkeeping: each criterion registers its outcome and the run
# summary prints one line per criterion at the end.

ACCEPTANCE: dict[int, list] = {}


@contextmanager
def _criterion(number: int, label: str):
    ACCEPTANCE[number] = [label, "FAIL"]
    yield
    ACCEPTANCE[number][1] = "PASS"


@pytest.fixture
def acceptance():
    return _criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        label, status = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {label:<60} {status}")


# ---------------------------------------------------------------------------
# shared builders and fixtures


def make_pub(
    pub_id,
    year,
    scs,
    citations,
    authors,
    journal="J1",
    aff=1,
    doc_type="article",
):
    """Positional-friendly Publication builder for terse test setup."""
    byline = tuple(
        Authorship(i + 1, pid) for i, pid in enumerate(authors)
    )
    return Publication(
        pub_id=str(pub_id),
        year=year,
        journal_id=journal,
        subject_categories=tuple(sorted(scs)),
        citations=citations,
        authors=byline,
        distinct_affiliation_count=aff,
        doc_type=doc_type,
    )


def make_person(pid, country="IT", rank="Associate", years=(2011, 2015),
                institution="U1", sds=None):
    history = {y: rank for y in range(years[0], years[1] + 1)}
    return Person(
        person_id=str(pid),
        full_name=f"Person {pid}",
        country=country,
        institution_id=institution,
        institution_name=f"University {institution}",
        rank_by_year=history,
        national_field_code=sds,
    )


PHYSICS_SCHEME = SCScheme(
    [
        SubjectCategory("UK", "Physics, condensed matter", "Physics"),
        SubjectCategory("UF", "Physics, fluids & plasmas", "Physics"),
        SubjectCategory("UR", "Physics, mathematical", "Physics"),
        SubjectCategory("EI", "Chemistry, physical", "Chemistry"),
        SubjectCategory("UH", "Physics, atomic, molecular & chemical", "Physics"),
        SubjectCategory("UI", "Physics, multidisciplinary", "Physics"),
    ]
)


@pytest.fixture
def physics_portfolio():
    """One condensed-matter physicist with eight articles in four journals.

    Full counting over the portfolio gives UK four times, UF and UR twice,
    EI, UH and UI once each, so UK dominates without any tie.
    """
    person = make_person("JD1", years=(2006, 2016), sds="FIS/03")
    pubs = [
        make_pub("243195800122", 2007, ["UK"], 12, ["JD1"], journal="Physical Review B"),
        make_pub("245330200070", 2008, ["UK"], 5, ["JD1"], journal="Physical Review B"),
        make_pub("260574500061", 2012, ["UK"], 9, ["JD1"], journal="Physical Review B"),
        make_pub("251986500011", 2010, ["UK"], 3, ["JD1"], journal="Physical Review B"),
        make_pub("228818200106", 2006, ["UF", "UR"], 7, ["JD1"], journal="Physical Review E"),
        make_pub("242408800041", 2009, ["UF", "UR"], 2, ["JD1"], journal="Physical Review E"),
        make_pub("231971100043", 2011, ["EI", "UH"], 14, ["JD1"], journal="Chemphyschem"),
        make_pub("229700800052", 2013, ["UI"], 6, ["JD1"], journal="Physical Review Letters"),
    ]
    registry = PersonRegistry({person.person_id: person})
    pubset = PublicationSet({p.pub_id: p for p in pubs})
    return registry, pubset, PHYSICS_SCHEME


# (prof_id, country, institution, rank, fss_p, rank_p, fss_pwk, rank_pwk)
BEHAVIORAL_ROWS = [
    ("61513", "IT", "University of Trento", "Full", 6.040, 1, 4.646, 1),
    ("39439", "IT", "University of Padua", "Full", 2.182, 2, 1.678, 2),
    ("39451", "IT", "University of Padua", "Full", 2.089, 3, 1.607, 3),
    ("124554", "NO", "UiT- Arctic university", "Full", 1.698, 4, 1.306, 6),
    ("18829", "IT", "University of Florence", "Assistant", 1.445, 5, 1.445, 4),
    ("209041", "NO", "UiT- Arctic university", "Associate", 1.440, 6, 1.321, 5),
    ("30522", "IT", "University of Milan", "Associate", 1.342, 7, 1.231, 8),
    ("196762", "NO", "Norwegian University of Life Sciences", "Assistant", 1.261, 8, 1.261, 7),
    ("42756", "IT", "University of Parma", "Associate", 1.252, 9, 1.148, 9),
    ("61511", "IT", "University of Trento", "Associate", 1.156, 10, 1.061, 10),
    ("15388", "IT", "University of Bari", "Assistant", 0.874, 11, 0.874, 11),
    ("178405", "NO", "Norwegian University of Life Sciences", "Full", 0.849, 12, 0.653, 15),
    ("15387", "IT", "University of Bari", "Associate", 0.837, 13, 0.768, 13),
    ("16560", "IT", "University of Cagliari", "Associate", 0.833, 14, 0.764, 14),
    ("39888", "IT", "University of Padua", "Assistant", 0.822, 15, 0.822, 12),
    ("39443", "IT", "University of Padua", "Associate", 0.599, 16, 0.550, 16),
    ("130084", "NO", "Norwegian University of Life Sciences", "Associate", 0.471, 17, 0.432, 18),
    ("79667", "IT", "University of Pisa", "Assistant", 0.441, 18, 0.441, 17),
    ("126376", "NO", "University of Bergen", "Full", 0.400, 19, 0.308, 19),
    ("153593", "NO", "University of Bergen", "Associate", 0.202, 20, 0.185, 20),
    ("42839", "IT", "University of Parma", "Full", 0.183, 21, 0.141, 22),
    ("191749", "NO", "Norwegian University of Life Sciences", "Assistant", 0.177, 22, 0.177, 21),
    ("39351", "IT", "University of Padua", "Full", 0.159, 23, 0.123, 24),
    ("54424", "IT", 'University of Rome "Tor Vergata"', "Assistant", 0.126, 24, 0.126, 23),
    ("57870", "IT", "University of Teramo", "Assistant", 0.094, 25, 0.094, 25),
    ("27081", "IT", "University of Milan - Bicocca", "Associate", 0.071, 26, 0.065, 26),
    ("142027", "NO", "Norwegian University of Life Sciences", "Assistant", 0.048, 27, 0.048, 27),
    ("43908", "IT", "University of Parma", "Assistant", 0.028, 28, 0.028, 28),
    ("123852", "NO", "University of Bergen", "Full", 0.027, 29, 0.020, 29),
    ("120211", "NO", "Other HE-institutions", "Full", 0.004, 30, 0.003, 30),
]


@pytest.fixture
def behavioral_rows():
    return BEHAVIORAL_ROWS


@pytest.fixture(scope="session")
def small_corpus():
    """A compact two-country corpus reused by read-only tests."""
    spec = SynthSpec(
        persons_per_country={"IT": 120, "NO": 60},
        n_scs=6,
        n_journals=18,
        pubs_per_person_mean=4.0,
    )
    return generate_synthetic_corpus(spec, seed=101), spec


@pytest.fixture(scope="session")
def oracle_corpus():
    """Large enough for the oracle-equivalence bar: 1k+ persons, 10k+ pubs."""
    spec = SynthSpec(
        persons_per_country={"IT": 720, "NO": 360},
        n_scs=11,
        n_journals=40,
        pubs_per_person_mean=10.0,
        short_service_rate=0.03,
        no_publication_rate=0.02,
    )
    return generate_synthetic_corpus(spec, seed=2025), spec


@pytest.fixture
def default_cohort():
    return CorpusConfig(
        assessment_window=YearWindow(2011, 2015),
        classification_window_by_country={
            "IT": YearWindow(2006, 2016),
            "NO": YearWindow(2011, 2017),
        },
    )


def run_scoring(corpus, spec, seed=11):
    """Cohort rules -> classification -> baselines -> scores, as the CLI does."""
    cfg = spec.corpus_config()
    cohort = validate_cohort(corpus.registry, corpus.publications, cfg)
    assignments, _ = classify_cohort(
        corpus.registry, corpus.publications, cfg, seed=seed,
        person_ids=cohort.eligible,
    )
    baselines = build_baselines(corpus.publications)
    model = build_cost_model(DEFAULT_SALARY_STATS, DEFAULT_CAPITAL_PER_YEAR)
    scores = score_cohort(
        corpus.registry, corpus.publications, assignments, baselines,
        model, corpus.scheme, cfg,
    )
    return scores, assignments


@pytest.fixture(scope="session")
def small_scores(small_corpus):
    corpus, spec = small_corpus
    return run_scoring(corpus, spec)[0]
