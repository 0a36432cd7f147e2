import csv
import hashlib
import json
import math
import shutil

import pytest

from fss import cli
from fss.ingest import (
    write_journal_map_csv,
    write_persons_csv,
    write_publications_jsonl,
    write_sc_scheme_csv,
)
from fss.metrics import write_cost_model_toml
from fss.model import PersonRegistry, PublicationSet
from fss.synth import (
    DEFAULT_CAPITAL_PER_YEAR,
    DEFAULT_RESEARCH_TIME_SHARE,
    DEFAULT_SALARY_STATS,
)

from conftest import PHYSICS_SCHEME, make_person, make_pub

SPEC_TOML = """\
[synth]
n_scs = 5
n_journals = 12
pubs_per_person_mean = 3.0

[synth.persons_per_country]
IT = 60
NO = 40
"""


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One full synth -> ingest -> score -> report run, shared read-only."""
    base = tmp_path_factory.mktemp("cli_run")
    spec_cfg = base / "spec.toml"
    spec_cfg.write_text(SPEC_TOML, encoding="utf-8")
    corpus = base / "corpus"
    assert cli.main(
        ["synth", "--config", str(spec_cfg), "--out", str(corpus), "--seed", "7"]
    ) == cli.EXIT_OK
    cfg = corpus / "config.toml"
    run = base / "run"
    assert cli.main(["ingest", "--config", str(cfg), "--out", str(run)]) == cli.EXIT_OK
    assert cli.main(["score", "--config", str(cfg), "--out", str(run)]) == cli.EXIT_OK
    assert cli.main(["report", "--config", str(cfg), "--out", str(run)]) == cli.EXIT_OK
    return base, corpus, run, cfg


def rerun_pipeline(base, name, seed="7"):
    spec_cfg = base / "spec.toml"
    corpus = base / f"corpus_{name}"
    cli.main(["synth", "--config", str(spec_cfg), "--out", str(corpus), "--seed", seed])
    cfg = corpus / "config.toml"
    run = base / f"run_{name}"
    assert cli.main(["ingest", "--config", str(cfg), "--out", str(run)]) == 0
    assert cli.main(["score", "--config", str(cfg), "--out", str(run)]) == 0
    assert cli.main(["report", "--config", str(cfg), "--out", str(run)]) == 0
    return corpus, run


# --- happy path --------------------------------------------------------------


def test_clean_ingest_reports_zero_rejections(pipeline, tmp_path, capsys):
    _, corpus, _, cfg = pipeline
    rc = cli.main(["ingest", "--config", str(cfg), "--out", str(tmp_path / "o")])
    out = capsys.readouterr().out
    assert rc == cli.EXIT_OK
    assert "/ rejected 0" in out
    assert out.startswith("accepted ")


def test_pipeline_outputs_exist(pipeline):
    _, _, run, _ = pipeline
    assert (run / "canonical" / "persons.csv").is_file()
    assert (run / "canonical" / "rejections_persons.jsonl").is_file()
    assert (run / "scores.csv").is_file()
    assert (run / "assignments.csv").is_file()
    assert (run / "baselines.csv").is_file()
    assert (run / "diagnostics.json").is_file()
    assert (run / "manifest.json").is_file()
    report = run / "report"
    names = {p.name for p in report.iterdir()}
    assert names == {
        "distribution_decile_fss_p.csv",
        "distribution_decile_fss_pwk.csv",
        "top_scientists_fss_p.csv",
        "top_scientists_fss_pwk.csv",
        "country_discipline.csv",
        "sc_gap.csv",
        "sc_win_counts.csv",
        "institution_ranking.csv",
    }


def test_manifest_covers_every_output(pipeline):
    _, _, run, _ = pipeline
    manifest = json.loads((run / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seed"] == 7
    assert manifest["config_digest"] != "none"
    assert set(manifest["stages"]) == {"ingest", "score", "report"}
    for stage in manifest["stages"].values():
        for entry in stage["files"]:
            assert set(entry) == {"name", "rows", "sha256"}
            target = run / entry["name"]
            assert target.is_file(), entry["name"]
            digest = hashlib.sha256(target.read_bytes()).hexdigest()
            assert digest == entry["sha256"], entry["name"]


def test_scoring_is_deterministic_across_full_reruns(pipeline):
    base, corpus, run, _ = pipeline
    corpus2, run2 = rerun_pipeline(base, "again")
    for rel in ("persons.csv", "publications.jsonl", "config.toml"):
        assert (corpus / rel).read_bytes() == (corpus2 / rel).read_bytes()
    for rel in ("scores.csv", "assignments.csv", "baselines.csv", "manifest.json"):
        assert (run / rel).read_bytes() == (run2 / rel).read_bytes(), rel


def test_different_seed_changes_scores(pipeline):
    base, _, run, _ = pipeline
    _, run3 = rerun_pipeline(base, "other_seed", seed="8")
    assert (run / "scores.csv").read_bytes() != (run3 / "scores.csv").read_bytes()


# --- report flag modes ----------------------------------------------------------


def test_histogram_only_mode(pipeline, tmp_path):
    base, _, run, cfg = pipeline
    out = tmp_path / "r"
    shutil.copytree(run, out)
    shutil.rmtree(out / "report")
    rc = cli.main(
        ["report", "--config", str(cfg), "--out", str(out), "--histogram", "decile"]
    )
    assert rc == 0
    names = {p.name for p in (out / "report").iterdir()}
    assert names == {"distribution_decile_fss_p.csv", "distribution_decile_fss_pwk.csv"}
    with open(out / "report" / "distribution_decile_fss_pwk.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["country"] for r in rows} == {"IT", "NO"}
    for row in rows:
        shares = [float(row[f"D{i}"]) for i in range(1, 11)]
        # written shares are rounded, so allow one rounding step per bin
        assert math.fsum(shares) == pytest.approx(100.0, abs=0.5)


def test_gap_only_mode_row_budget(pipeline, tmp_path):
    _, _, run, cfg = pipeline
    out = tmp_path / "r"
    shutil.copytree(run, out)
    shutil.rmtree(out / "report")
    rc = cli.main(
        ["report", "--config", str(cfg), "--out", str(out), "--gap", "--top", "1"]
    )
    assert rc == 0
    names = {p.name for p in (out / "report").iterdir()}
    assert names == {"sc_gap.csv", "sc_win_counts.csv"}
    with open(out / "report" / "sc_gap.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2  # one per direction
    for row in rows:
        assert float(row["delta"]) == pytest.approx(
            float(row["fss_a_IT"]) - float(row["fss_a_NO"]), abs=1.5e-3
        )


def test_institution_ranking_at_sc_level(pipeline, tmp_path):
    _, _, run, cfg = pipeline
    with open(run / "scores.csv", newline="") as fh:
        sc = sorted({r["sc_code"] for r in csv.DictReader(fh)})[0]
    out = tmp_path / "r"
    shutil.copytree(run, out)
    shutil.rmtree(out / "report")
    rc = cli.main(
        ["report", "--config", str(cfg), "--out", str(out),
         "--level", "sc", "--key", sc, "--min-obs", "1"]
    )
    assert rc == 0
    with open(out / "report" / "institution_ranking.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows
    assert [int(r["rank"]) for r in rows] == list(range(1, len(rows) + 1))
    scores = [float(r["fss_a"]) for r in rows]
    assert scores == sorted(scores, reverse=True)


def test_unknown_level_key_is_a_validation_error(pipeline, tmp_path, capsys):
    _, _, run, cfg = pipeline
    out = tmp_path / "r"
    shutil.copytree(run, out)
    rc = cli.main(
        ["report", "--config", str(cfg), "--out", str(out),
         "--level", "sc", "--key", "NO_SUCH_CODE"]
    )
    assert rc == cli.EXIT_VALIDATION
    assert "error:" in capsys.readouterr().err


def test_text_and_json_formats(pipeline, tmp_path):
    _, _, run, cfg = pipeline
    out = tmp_path / "r"
    shutil.copytree(run, out)
    shutil.rmtree(out / "report")
    assert cli.main(
        ["report", "--config", str(cfg), "--out", str(out),
         "--histogram", "quartile", "--format", "json"]
    ) == 0
    payload = json.loads(
        (out / "report" / "distribution_quartile_fss_pwk.json").read_text()
    )
    assert payload["columns"][0] == "country"
    assert cli.main(
        ["report", "--config", str(cfg), "--out", str(out),
         "--histogram", "quartile", "--format", "text"]
    ) == 0
    text = (out / "report" / "distribution_quartile_fss_pwk.txt").read_text()
    assert text.splitlines()[0].startswith("country")


# --- failure modes -----------------------------------------------------------------


def test_duplicate_person_gives_validation_exit(pipeline, tmp_path, capsys):
    _, corpus, _, _ = pipeline
    broken = tmp_path / "corpus"
    shutil.copytree(corpus, broken)
    with open(broken / "persons.csv", encoding="utf-8") as fh:
        dup_row = fh.readlines()[1]
    with open(broken / "persons.csv", "a", encoding="utf-8") as fh:
        fh.write(dup_row)
    rc = cli.main(
        ["ingest", "--config", str(broken / "config.toml"),
         "--out", str(tmp_path / "out")]
    )
    assert rc == cli.EXIT_VALIDATION
    assert "structural errors" in capsys.readouterr().err
    rejections = (
        (tmp_path / "out" / "canonical" / "rejections_persons.jsonl")
        .read_text(encoding="utf-8")
        .splitlines()
    )
    assert len(rejections) == 1
    assert "duplicate person_id" in json.loads(rejections[0])["reason"]


def test_missing_journal_map_is_config_error_before_parsing(pipeline, tmp_path, capsys):
    _, corpus, _, _ = pipeline
    broken = tmp_path / "corpus"
    shutil.copytree(corpus, broken)
    (broken / "journal_sc_map.csv").unlink()
    out = tmp_path / "out"
    rc = cli.main(
        ["ingest", "--config", str(broken / "config.toml"), "--out", str(out)]
    )
    assert rc == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    assert not out.exists()  # nothing parsed, nothing written


def test_no_config_anywhere_is_config_error(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(cli.CONFIG_ENV_VAR, raising=False)
    rc = cli.main(["ingest", "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_CONFIG
    assert cli.CONFIG_ENV_VAR in capsys.readouterr().err


def test_config_can_come_from_environment(pipeline, tmp_path, monkeypatch):
    _, _, _, cfg = pipeline
    monkeypatch.setenv(cli.CONFIG_ENV_VAR, str(cfg))
    rc = cli.main(["ingest", "--out", str(tmp_path / "o")])
    assert rc == cli.EXIT_OK


def test_score_without_canonical_corpus(pipeline, tmp_path, capsys):
    _, _, _, cfg = pipeline
    rc = cli.main(["score", "--config", str(cfg), "--out", str(tmp_path / "empty")])
    assert rc == cli.EXIT_VALIDATION
    assert "run ingest first" in capsys.readouterr().err


def test_unparseable_config(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[run\nseed = ", encoding="utf-8")
    rc = cli.main(["score", "--config", str(bad), "--out", str(tmp_path)])
    assert rc == cli.EXIT_CONFIG


def test_infeasible_synth_spec(tmp_path, capsys):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("[synth]\nn_scs = 0\n", encoding="utf-8")
    rc = cli.main(["synth", "--config", str(cfg), "--out", str(tmp_path / "c")])
    assert rc == cli.EXIT_VALIDATION


def test_help_documents_subcommands_and_flags():
    parser = cli.build_parser()
    text = parser.format_help()
    for word in ("synth", "ingest", "score", "report"):
        assert word in text


# --- the condensed-matter walkthrough ---------------------------------------------


@pytest.fixture
def physics_run(tmp_path, physics_portfolio):
    """The known-portfolio person, plus a colleague so their category has two."""
    registry, pubs, scheme = physics_portfolio
    colleague = make_person("JD2", rank="Full", years=(2006, 2016), sds="FIS/03")
    extra = [
        make_pub("900000000001", 2012, ["UK"], 4, ["JD2"], journal="Physical Review B"),
        make_pub("900000000002", 2014, ["UK"], 0, ["JD2"], journal="Physical Review B"),
    ]
    registry = PersonRegistry({**registry.persons, "JD2": colleague})
    pubs = PublicationSet(
        {**pubs.publications, **{p.pub_id: p for p in extra}}
    )
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    write_persons_csv(registry, corpus / "persons.csv")
    write_publications_jsonl(pubs, corpus / "publications.jsonl")
    journal_map = {
        "Physical Review B": ("UK",),
        "Physical Review E": ("UF", "UR"),
        "Chemphyschem": ("EI", "UH"),
        "Physical Review Letters": ("UI",),
    }
    write_journal_map_csv(journal_map, corpus / "journal_sc_map.csv")
    write_sc_scheme_csv(scheme, corpus / "sc_discipline_map.csv")
    write_cost_model_toml(
        corpus / "cost_model.toml", DEFAULT_SALARY_STATS,
        DEFAULT_CAPITAL_PER_YEAR, DEFAULT_RESEARCH_TIME_SHARE,
    )
    (corpus / "config.toml").write_text(
        "\n".join(
            [
                "[paths]",
                'persons = "persons.csv"',
                'publications = "publications.jsonl"',
                'journal_map = "journal_sc_map.csv"',
                'sc_map = "sc_discipline_map.csv"',
                'cost_model = "cost_model.toml"',
                "",
                "[cohort]",
                "assessment_window = [2011, 2015]",
                "",
                "[cohort.classification_window]",
                "IT = [2006, 2016]",
                "",
                "[run]",
                "seed = 1",
                "min_total_per_sc = 1",
                "require_both_countries = false",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    return corpus


def test_known_portfolio_lands_in_condensed_matter(physics_run, tmp_path):
    out = tmp_path / "out"
    cfg = str(physics_run / "config.toml")
    assert cli.main(["ingest", "--config", cfg, "--out", str(out)]) == 0
    assert cli.main(["score", "--config", cfg, "--out", str(out)]) == 0
    with open(out / "assignments.csv", newline="") as fh:
        rows = {r["person_id"]: r for r in csv.DictReader(fh)}
    assert rows["JD1"]["sc_code"] == "UK"
    assert rows["JD1"]["tiebreak_used"] == "none"
    assert rows["JD1"]["eligible"] == "true"
