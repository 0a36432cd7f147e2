"""Input file parsing and validation.

Documented schemas in, canonical corpus out. Ingestion is lossless or
reported: every input row is either accepted into the corpus or written to
the rejection report with a row number and reason. Structural defects
(duplicate ids, unknown ranks, unresolvable journals) are distinguished
from routine filtering (non-article document types) so callers can fail a
run on the former only.
"""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .model import (
    ACADEMIC_RANKS,
    Authorship,
    CorpusConfig,
    IngestError,
    Person,
    PersonRegistry,
    Publication,
    PublicationSet,
    Rejection,
    SCScheme,
    SubjectCategory,
)

PERSON_FIELDS = [
    "person_id",
    "full_name",
    "country",
    "institution_id",
    "institution_name",
    "rank_by_year",
    "national_field_code",
]

ACCEPTED_DOC_TYPES = ("article", "review")


def _parse_year(text: str) -> int:
    text = text.strip()
    if len(text) != 4 or not text.isdigit():
        raise ValueError(f"malformed year {text!r}")
    return int(text)


def parse_rank_history(text: str) -> dict[int, str]:
    """Parse the "YYYY:RANK;YYYY:RANK" career encoding."""
    history: dict[int, str] = {}
    if not text.strip():
        raise ValueError("empty rank_by_year")
    for chunk in text.strip().split(";"):
        if not chunk:
            continue
        year_part, sep, rank = chunk.partition(":")
        if not sep:
            raise ValueError(f"malformed rank entry {chunk!r}")
        year = _parse_year(year_part)
        rank = rank.strip()
        if rank not in ACADEMIC_RANKS:
            raise ValueError(f"unknown rank label {rank!r}")
        if year in history:
            raise ValueError(f"repeated year {year} in rank_by_year")
        history[year] = rank
    if not history:
        raise ValueError("empty rank_by_year")
    return history


def format_rank_history(history: dict[int, str]) -> str:
    return ";".join(f"{y}:{history[y]}" for y in sorted(history))


def _person_from_record(rec: dict) -> Person:
    pid = str(rec.get("person_id") or "").strip()
    if not pid:
        raise ValueError("missing person_id")
    raw_ranks = rec.get("rank_by_year")
    if isinstance(raw_ranks, dict):
        history = {}
        for y, rank in raw_ranks.items():
            year = _parse_year(str(y))
            if rank not in ACADEMIC_RANKS:
                raise ValueError(f"unknown rank label {rank!r}")
            history[year] = rank
        if not history:
            raise ValueError("empty rank_by_year")
    else:
        history = parse_rank_history(str(raw_ranks or ""))
    sds = str(rec.get("national_field_code") or "").strip() or None
    return Person(
        person_id=pid,
        full_name=str(rec.get("full_name") or "").strip(),
        country=str(rec.get("country") or "").strip(),
        institution_id=str(rec.get("institution_id") or "").strip(),
        institution_name=str(rec.get("institution_name") or "").strip(),
        rank_by_year=history,
        national_field_code=sds,
    )


def load_persons(path, fmt: str = "csv") -> PersonRegistry:
    """Load the researcher registry; malformed rows land in .rejections."""
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"persons file not found: {path}")
    persons: dict[str, Person] = {}
    rejections: list[Rejection] = []
    rows_in = 0

    if fmt == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or set(reader.fieldnames) != set(PERSON_FIELDS):
                raise IngestError(
                    f"{path}: header mismatch, expected {','.join(PERSON_FIELDS)}"
                )
            records = enumerate(reader, start=2)  # row 1 is the header
            for row_no, rec in records:
                rows_in += 1
                _ingest_person(rec, row_no, persons, rejections)
    elif fmt == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for row_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                rows_in += 1
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    rejections.append(Rejection(row_no, f"malformed json: {exc.msg}"))
                    continue
                _ingest_person(rec, row_no, persons, rejections)
    else:
        raise IngestError(f"unknown persons format {fmt!r}")

    return PersonRegistry(persons, rows_in=rows_in, rejections=rejections)


def _ingest_person(rec, row_no, persons, rejections) -> None:
    try:
        person = _person_from_record(rec)
    except ValueError as exc:
        rejections.append(Rejection(row_no, str(exc)))
        return
    if person.person_id in persons:
        rejections.append(Rejection(row_no, f"duplicate person_id {person.person_id}"))
        return
    persons[person.person_id] = person


def load_journal_map(path) -> dict[str, tuple[str, ...]]:
    """journal_id -> subject categories; repeated rows accumulate."""
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"journal map not found: {path}")
    mapping: dict[str, set[str]] = defaultdict(set)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"journal_id", "sc_code"}:
            raise IngestError(f"{path}: header must be journal_id,sc_code")
        for rec in reader:
            journal = (rec["journal_id"] or "").strip()
            sc = (rec["sc_code"] or "").strip()
            if journal and sc:
                mapping[journal].add(sc)
    return {j: tuple(sorted(scs)) for j, scs in mapping.items()}


def load_sc_scheme(path) -> SCScheme:
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"subject-category map not found: {path}")
    cats = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"sc_code", "sc_name", "discipline"}
        if reader.fieldnames is None or set(reader.fieldnames) != expected:
            raise IngestError(f"{path}: header must be sc_code,sc_name,discipline")
        for rec in reader:
            cats.append(
                SubjectCategory(
                    sc_code=rec["sc_code"].strip(),
                    sc_name=rec["sc_name"].strip(),
                    discipline=rec["discipline"].strip(),
                )
            )
    return SCScheme(cats)


def _publication_from_record(rec: dict, journal_map: dict[str, tuple[str, ...]]) -> Publication:
    pub_id = str(rec.get("pub_id") or "").strip()
    if not pub_id:
        raise ValueError("missing pub_id")
    year = rec.get("year")
    if not isinstance(year, int):
        year = _parse_year(str(year))
    elif not 1000 <= year <= 9999:
        raise ValueError(f"malformed year {year!r}")

    citations = rec.get("citations")
    if not isinstance(citations, int) or isinstance(citations, bool):
        raise ValueError(f"citations must be an integer, got {citations!r}")
    if citations < 0:
        raise ValueError(f"negative citations {citations}")

    aff = rec.get("distinct_affiliation_count", 1)
    if not isinstance(aff, int) or aff < 1:
        raise ValueError(f"distinct_affiliation_count must be >= 1, got {aff!r}")

    journal_id = str(rec.get("journal_id") or "").strip()
    explicit = rec.get("sc_codes") or []
    if explicit:
        sc_codes = tuple(sorted({str(c).strip() for c in explicit if str(c).strip()}))
    else:
        sc_codes = journal_map.get(journal_id, ())
    if not sc_codes:
        raise ValueError(f"unresolvable journal {journal_id!r}")

    raw_authors = rec.get("authors") or []
    if not raw_authors:
        raise ValueError("empty author list")
    authors = []
    seen_persons = set()
    for a in raw_authors:
        pos = a.get("position")
        if not isinstance(pos, int) or pos < 1:
            raise ValueError(f"bad author position {pos!r}")
        pid = a.get("person_id")
        pid = str(pid).strip() if pid is not None else None
        if pid is not None:
            if pid in seen_persons:
                raise ValueError(f"duplicate author person_id {pid}")
            seen_persons.add(pid)
        authors.append(Authorship(position=pos, person_id=pid or None))
    authors.sort(key=lambda a: a.position)
    if [a.position for a in authors] != list(range(1, len(authors) + 1)):
        raise ValueError("author positions not contiguous from 1")

    return Publication(
        pub_id=pub_id,
        year=year,
        journal_id=journal_id,
        subject_categories=sc_codes,
        citations=citations,
        authors=tuple(authors),
        distinct_affiliation_count=aff,
        doc_type=str(rec.get("doc_type") or "article").strip().lower(),
    )


def load_publications(path, journal_map: dict[str, tuple[str, ...]]) -> PublicationSet:
    """Load the JSONL publication file, resolving subject categories.

    Explicit sc_codes on a record win; otherwise the journal map decides.
    Document types other than article and review are filtered out with a
    report entry rather than an error.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"publications file not found: {path}")
    publications: dict[str, Publication] = {}
    rejections: list[Rejection] = []
    rows_in = 0
    with open(path, encoding="utf-8") as fh:
        for row_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rows_in += 1
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                rejections.append(Rejection(row_no, f"malformed json: {exc.msg}"))
                continue
            doc_type = str(rec.get("doc_type") or "").strip().lower()
            if doc_type not in ACCEPTED_DOC_TYPES:
                rejections.append(
                    Rejection(row_no, f"excluded document type {doc_type!r}", kind="filtered")
                )
                continue
            try:
                pub = _publication_from_record(rec, journal_map)
            except ValueError as exc:
                rejections.append(Rejection(row_no, str(exc)))
                continue
            if pub.pub_id in publications:
                rejections.append(Rejection(row_no, f"duplicate pub_id {pub.pub_id}"))
                continue
            publications[pub.pub_id] = pub
    return PublicationSet(publications, rows_in=rows_in, rejections=rejections)


@dataclass
class CohortReport:
    """Outcome of the cohort rules: who is assessable and why others are not."""

    eligible: list[str]
    excluded: dict[str, str] = field(default_factory=dict)  # person_id -> reason
    counts: dict[str, int] = field(default_factory=dict)    # reason -> count

    def to_dict(self) -> dict:
        return {
            "eligible_count": len(self.eligible),
            "excluded_count": len(self.excluded),
            "counts_by_reason": dict(sorted(self.counts.items())),
            "excluded": dict(sorted(self.excluded.items())),
        }


def validate_cohort(
    registry: PersonRegistry, pubs: PublicationSet, cfg: CorpusConfig
) -> CohortReport:
    """Apply the minimum-service and at-least-one-publication rules."""
    window = cfg.assessment_window
    eligible: list[str] = []
    excluded: dict[str, str] = {}
    counts: dict[str, int] = defaultdict(int)
    service_reason = f"service < {cfg.min_service_years} years"
    for pid, person in registry.persons.items():
        if len(person.active_years(window)) < cfg.min_service_years:
            excluded[pid] = service_reason
            counts[service_reason] += 1
            continue
        if cfg.require_one_publication and not pubs.authored_in(pid, window):
            excluded[pid] = "no publications"
            counts["no publications"] += 1
            continue
        eligible.append(pid)
    return CohortReport(eligible=eligible, excluded=excluded, counts=dict(counts))


def write_persons_csv(registry: PersonRegistry, path) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PERSON_FIELDS)
        for pid in sorted(registry.persons):
            p = registry.persons[pid]
            writer.writerow(
                [
                    p.person_id,
                    p.full_name,
                    p.country,
                    p.institution_id,
                    p.institution_name,
                    format_rank_history(p.rank_by_year),
                    p.national_field_code or "",
                ]
            )
    return len(registry.persons)


def write_publications_jsonl(pubs: PublicationSet, path) -> int:
    with open(path, "w", encoding="utf-8") as fh:
        for pub_id in sorted(pubs.publications):
            pub = pubs.publications[pub_id]
            rec = {
                "pub_id": pub.pub_id,
                "year": pub.year,
                "journal_id": pub.journal_id,
                "sc_codes": list(pub.subject_categories),
                "doc_type": pub.doc_type,
                "citations": pub.citations,
                "distinct_affiliation_count": pub.distinct_affiliation_count,
                "authors": [
                    {"position": a.position, "person_id": a.person_id} for a in pub.authors
                ],
            }
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
    return len(pubs.publications)


def write_journal_map_csv(journal_map: dict[str, tuple[str, ...]], path) -> int:
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["journal_id", "sc_code"])
        for journal in sorted(journal_map):
            for sc in journal_map[journal]:
                writer.writerow([journal, sc])
                rows += 1
    return rows


def write_sc_scheme_csv(scheme: SCScheme, path) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sc_code", "sc_name", "discipline"])
        for code in sorted(scheme.by_code):
            cat = scheme.by_code[code]
            writer.writerow([cat.sc_code, cat.sc_name, cat.discipline])
    return len(scheme.by_code)


def write_rejections_jsonl(rejections: list[Rejection], path) -> int:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rejections:
            fh.write(json.dumps({"row": r.row, "reason": r.reason}) + "\n")
    return len(rejections)


def structural_errors(rejections: list[Rejection]) -> list[Rejection]:
    return [r for r in rejections if r.kind == "error"]
