import filecmp

import pytest

from fss.classify import classify_cohort
from fss.ingest import validate_cohort
from fss.model import YearWindow
from fss.synth import (
    InfeasibleSpecError,
    SynthSpec,
    generate_synthetic_corpus,
    write_corpus,
)


def small_spec(**overrides):
    base = dict(
        persons_per_country={"IT": 60, "NO": 40},
        n_scs=5,
        n_journals=12,
        pubs_per_person_mean=3.0,
    )
    base.update(overrides)
    return SynthSpec(**base)


def test_same_seed_same_corpus():
    spec = small_spec()
    a = generate_synthetic_corpus(spec, seed=9)
    b = generate_synthetic_corpus(spec, seed=9)
    assert a.registry.persons == b.registry.persons
    assert a.publications.publications == b.publications.publications
    assert a.journal_map == b.journal_map


def test_different_seed_different_corpus():
    spec = small_spec()
    a = generate_synthetic_corpus(spec, seed=9)
    b = generate_synthetic_corpus(spec, seed=10)
    assert a.publications.publications != b.publications.publications


def test_written_corpus_is_byte_stable(tmp_path):
    spec = small_spec()
    d1, d2 = tmp_path / "one", tmp_path / "two"
    d1.mkdir(), d2.mkdir()
    paths1, counts1 = write_corpus(spec, 5, d1)
    paths2, counts2 = write_corpus(spec, 5, d2)
    assert counts1 == counts2
    for name in paths1:
        assert filecmp.cmp(paths1[name], paths2[name], shallow=False), name


def test_person_counts_match_spec():
    corpus = generate_synthetic_corpus(small_spec(), seed=3)
    by_country = {}
    for p in corpus.registry.persons.values():
        by_country[p.country] = by_country.get(p.country, 0) + 1
    assert by_country == {"IT": 60, "NO": 40}


def test_all_journals_resolve_and_cover_scheme():
    corpus = generate_synthetic_corpus(small_spec(), seed=3)
    scheme_codes = set(corpus.scheme.by_code)
    mapped = {sc for scs in corpus.journal_map.values() for sc in scs}
    assert mapped == scheme_codes
    for pub in corpus.publications:
        assert pub.journal_id in corpus.journal_map
        assert pub.subject_categories == corpus.journal_map[pub.journal_id]


def test_publication_years_stay_in_span():
    spec = small_spec()
    span = spec.publication_span()
    corpus = generate_synthetic_corpus(spec, seed=3)
    assert all(pub.year in span for pub in corpus.publications)
    assert all(pub.doc_type in ("article", "review") for pub in corpus.publications)


def test_italians_carry_national_field_codes():
    corpus = generate_synthetic_corpus(small_spec(), seed=3)
    for p in corpus.registry.persons.values():
        if p.country == "IT":
            assert p.national_field_code
        else:
            assert p.national_field_code is None


def test_default_rates_give_clean_cohort():
    spec = small_spec()
    corpus = generate_synthetic_corpus(spec, seed=3)
    report = validate_cohort(corpus.registry, corpus.publications, spec.corpus_config())
    assert not report.excluded
    assert len(report.eligible) == 100


def test_exclusion_rates_produce_both_reasons():
    spec = small_spec(short_service_rate=0.2, no_publication_rate=0.2)
    corpus = generate_synthetic_corpus(spec, seed=3)
    report = validate_cohort(corpus.registry, corpus.publications, spec.corpus_config())
    assert set(report.counts) == {"service < 3 years", "no publications"}
    assert len(report.eligible) + len(report.excluded) == 100


def test_every_category_is_classifiable_from_both_countries():
    spec = small_spec()
    corpus = generate_synthetic_corpus(spec, seed=3)
    assignments, diag = classify_cohort(
        corpus.registry, corpus.publications, spec.corpus_config(), seed=3
    )
    assert not diag.ineligible_scs
    seen = {}
    for pid, a in assignments.items():
        seen.setdefault(a.sc_code, set()).add(corpus.registry[pid].country)
    assert all(countries == {"IT", "NO"} for countries in seen.values())


@pytest.mark.parametrize(
    "overrides",
    [
        {"persons_per_country": {}},
        {"persons_per_country": {"IT": 4, "NO": 60}},   # fewer than n_scs
        {"persons_per_country": {"IT": 20, "NO": 20}},  # under 10 per category
        {"n_journals": 3},
        {"pubs_per_person_mean": 0.5},
        {"coauthor_weights": (0.5, -0.1)},
    ],
)
def test_infeasible_specs_are_refused(overrides):
    with pytest.raises(InfeasibleSpecError):
        small_spec(**overrides)


def test_from_dict_round_trip():
    spec = SynthSpec.from_dict(
        {
            "persons_per_country": {"IT": 80, "NO": 50},
            "n_scs": 6,
            "n_journals": 14,
            "pubs_per_person_mean": 4.5,
            "zero_citation_rate": 1.0,
            "assessment_window": [2011, 2015],
            "classification_windows": {"IT": [2006, 2016], "NO": [2011, 2017]},
        }
    )
    assert spec.persons_per_country == {"IT": 80, "NO": 50}
    assert spec.n_scs == 6
    assert spec.zero_citation_rate == 1.0
    assert spec.classification_windows["NO"] == YearWindow(2011, 2017)


def test_all_zero_citation_corpus():
    spec = small_spec(zero_citation_rate=1.0)
    corpus = generate_synthetic_corpus(spec, seed=3)
    assert all(pub.citations == 0 for pub in corpus.publications)
