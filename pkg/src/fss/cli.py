"""Command-line pipeline: synth, ingest, score, report.

Runs are configuration-driven and reproducible: the same inputs, config
and seed always produce byte-identical output trees. Every stage appends
its outputs to a single manifest.json (seed, config digest, row counts,
content digests) so published tables stay auditable back to their inputs.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:          # Python 3.10
    import tomli as tomllib

from . import analytics, classify, ingest, metrics, productivity, synth
from .model import ConfigError, CorpusConfig, FssError, YearWindow

CONFIG_ENV_VAR = "FSS_CONFIG"
EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2

INPUT_KEYS = ("persons", "publications", "journal_map", "sc_map", "cost_model")


@dataclass
class RunConfig:
    base_dir: Path
    paths: dict[str, Path] = field(default_factory=dict)
    cohort: CorpusConfig | None = None
    seed: int = 0
    out: Path = Path("out")
    format: str = "csv"
    min_total_per_sc: int = 10
    require_both_countries: bool = True
    country_pair: tuple[str, str] = ("IT", "NO")
    synth_spec: synth.SynthSpec = field(default_factory=synth.SynthSpec)
    digest: str = "none"

    def input_path(self, key: str) -> Path:
        try:
            return self.paths[key]
        except KeyError:
            raise ConfigError(f"config has no [paths] entry for {key!r}") from None


def _window(value, label: str) -> YearWindow:
    try:
        start, end = value
        return YearWindow(int(start), int(end))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {label}: {value!r} ({exc})") from None


def load_run_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = path.read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None

    base = path.parent
    cfg = RunConfig(base_dir=base, digest=hashlib.sha256(raw).hexdigest())

    for key, value in data.get("paths", {}).items():
        cfg.paths[key] = (base / str(value)).resolve()

    cohort = data.get("cohort")
    if cohort is not None:
        if "assessment_window" not in cohort:
            raise ConfigError("[cohort] needs an assessment_window")
        windows = {
            str(c): _window(w, f"classification_window.{c}")
            for c, w in cohort.get("classification_window", {}).items()
        }
        try:
            cfg.cohort = CorpusConfig(
                assessment_window=_window(cohort["assessment_window"], "assessment_window"),
                classification_window_by_country=windows,
                min_service_years=int(cohort.get("min_service_years", 3)),
                require_one_publication=bool(cohort.get("require_one_publication", True)),
            )
        except FssError as exc:
            raise ConfigError(str(exc)) from None

    run = data.get("run", {})
    cfg.seed = int(run.get("seed", 0))
    if "out" in run:
        cfg.out = Path(str(run["out"]))
    cfg.format = str(run.get("format", "csv"))
    if cfg.format not in ("csv", "text", "json"):
        raise ConfigError(f"unknown output format {cfg.format!r}")
    cfg.min_total_per_sc = int(run.get("min_total_per_sc", 10))
    cfg.require_both_countries = bool(run.get("require_both_countries", True))
    pair = run.get("country_pair")
    if pair is not None:
        if len(pair) != 2:
            raise ConfigError("country_pair must name exactly two countries")
        cfg.country_pair = (str(pair[0]), str(pair[1]))

    if "synth" in data:
        try:
            cfg.synth_spec = synth.SynthSpec.from_dict(data["synth"])
        except synth.InfeasibleSpecError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad [synth] section: {exc}") from None
    return cfg


# --- manifest -------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _line_count(path: Path) -> int:
    n = 0
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            n += chunk.count(b"\n")
    return n


def _update_manifest(
    out_dir: Path, stage: str, seed: int, config_digest: str,
    counts: dict, files: list[tuple[Path, int]],
) -> None:
    path = out_dir / "manifest.json"
    manifest = {"stages": {}}
    if path.is_file():
        manifest = json.loads(path.read_text(encoding="utf-8"))
        manifest.setdefault("stages", {})
    manifest["seed"] = seed
    manifest["config_digest"] = config_digest
    manifest["stages"][stage] = {
        "seed": seed,
        "counts": {k: counts[k] for k in sorted(counts)},
        "files": [
            {
                "name": str(p.relative_to(out_dir)).replace(os.sep, "/"),
                "rows": rows,
                "sha256": _sha256(p),
            }
            for p, rows in sorted(files, key=lambda item: str(item[0]))
        ],
    }
    path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# --- subcommands ----------------------------------------------------------

def cmd_synth(args, cfg: RunConfig | None) -> int:
    spec = cfg.synth_spec if cfg else synth.SynthSpec()
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    out_dir = Path(args.out) if args.out else Path("synth_corpus")
    paths, counts = synth.write_corpus(spec, seed, out_dir)
    files = [
        (paths[k], counts.get(k, _line_count(paths[k])))
        for k in sorted(paths)
    ]
    _update_manifest(out_dir, "synth", seed, cfg.digest if cfg else "none", counts, files)
    print(f"synthetic corpus: {counts['persons']} persons, "
          f"{counts['publications']} publications -> {out_dir}")
    return EXIT_OK


def _require_inputs(cfg: RunConfig, keys) -> None:
    for key in keys:
        p = cfg.input_path(key)
        if not p.is_file():
            raise ConfigError(f"input file for {key!r} not found: {p}")


def _canonical_dir(out_dir: Path) -> Path:
    return out_dir / "canonical"


def cmd_ingest(args, cfg: RunConfig) -> int:
    _require_inputs(cfg, INPUT_KEYS)
    if cfg.cohort is None:
        raise ConfigError("config has no [cohort] section")
    journal_map = ingest.load_journal_map(cfg.input_path("journal_map"))
    scheme = ingest.load_sc_scheme(cfg.input_path("sc_map"))
    registry = ingest.load_persons(cfg.input_path("persons"))
    pubs = ingest.load_publications(cfg.input_path("publications"), journal_map)
    metrics.load_cost_model(cfg.input_path("cost_model"))  # fail early if broken

    out_dir = Path(args.out) if args.out else cfg.out
    canon = _canonical_dir(out_dir)
    canon.mkdir(parents=True, exist_ok=True)
    files = [
        (canon / "persons.csv", ingest.write_persons_csv(registry, canon / "persons.csv")),
        (canon / "publications.jsonl",
         ingest.write_publications_jsonl(pubs, canon / "publications.jsonl")),
        (canon / "journal_sc_map.csv",
         ingest.write_journal_map_csv(journal_map, canon / "journal_sc_map.csv")),
        (canon / "sc_discipline_map.csv",
         ingest.write_sc_scheme_csv(scheme, canon / "sc_discipline_map.csv")),
        (canon / "rejections_persons.jsonl",
         ingest.write_rejections_jsonl(registry.rejections, canon / "rejections_persons.jsonl")),
        (canon / "rejections_publications.jsonl",
         ingest.write_rejections_jsonl(pubs.rejections, canon / "rejections_publications.jsonl")),
    ]

    accepted = len(registry.persons) + len(pubs.publications)
    rejected = len(registry.rejections) + len(pubs.rejections)
    filtered = sum(
        1 for r in registry.rejections + pubs.rejections if r.kind == "filtered"
    )
    errors = rejected - filtered
    counts = {
        "persons_accepted": len(registry.persons),
        "persons_rejected": len(registry.rejections),
        "publications_accepted": len(pubs.publications),
        "publications_rejected": len(pubs.rejections),
        "rejected_filtered": filtered,
        "rejected_errors": errors,
    }
    seed = args.seed if args.seed is not None else cfg.seed
    _update_manifest(out_dir, "ingest", seed, cfg.digest, counts, files)
    print(f"accepted {accepted} / rejected {rejected}"
          + (f" ({filtered} filtered)" if filtered else ""))
    print(f"canonical corpus -> {canon}")
    if errors:
        print(f"{errors} structural errors; see rejection reports", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_score(args, cfg: RunConfig) -> int:
    if cfg.cohort is None:
        raise ConfigError("config has no [cohort] section")
    out_dir = Path(args.out) if args.out else cfg.out
    canon = _canonical_dir(out_dir)
    if not (canon / "persons.csv").is_file():
        raise FssError(f"no canonical corpus under {canon}; run ingest first")
    registry = ingest.load_persons(canon / "persons.csv")
    journal_map = ingest.load_journal_map(canon / "journal_sc_map.csv")
    pubs = ingest.load_publications(canon / "publications.jsonl", journal_map)
    scheme = ingest.load_sc_scheme(canon / "sc_discipline_map.csv")
    cost_model = metrics.load_cost_model(cfg.input_path("cost_model"))

    seed = args.seed if args.seed is not None else cfg.seed
    cohort = ingest.validate_cohort(registry, pubs, cfg.cohort)
    assignments, cls_diag = classify.classify_cohort(
        registry,
        pubs,
        cfg.cohort,
        seed,
        person_ids=cohort.eligible,
        min_total=cfg.min_total_per_sc,
        require_both_countries=cfg.require_both_countries,
    )
    baselines = metrics.build_baselines(pubs)
    scores = productivity.score_cohort(
        registry, pubs, assignments, baselines, cost_model, scheme, cfg.cohort
    )

    files = [
        (out_dir / "scores.csv",
         productivity.write_scores_csv(scores, out_dir / "scores.csv")),
        (out_dir / "assignments.csv",
         classify.write_assignments_csv(assignments, out_dir / "assignments.csv")),
        (out_dir / "baselines.csv",
         metrics.write_baselines_csv(baselines, out_dir / "baselines.csv")),
    ]
    diagnostics = {
        "cohort": cohort.to_dict(),
        "classification": cls_diag.to_dict(),
        "scoring": scores.diagnostics,
        "cost_model": {
            "w_by_rank": cost_model.w_by_rank,
            "factor_by_rank": cost_model.factor_by_rank,
            "yearly_cost_by_rank": {
                r: cost_model.yearly_cost(r) for r in cost_model.w_by_rank
            },
        },
        "baseline_fallback_cells": {
            f"{year}:{sc}": n
            for (year, sc), n in sorted(baselines.fallback_uses.items())
        },
    }
    diag_path = out_dir / "diagnostics.json"
    diag_path.write_text(
        json.dumps(diagnostics, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    files.append((diag_path, 1))

    counts = {
        "cohort_eligible": len(cohort.eligible),
        "cohort_excluded": len(cohort.excluded),
        "classified": len(assignments),
        "scored": len(scores.records),
        "categories": len({r.sc_code for r in scores.records}),
    }
    _update_manifest(out_dir, "score", seed, cfg.digest, counts, files)
    print(f"scored {counts['scored']} persons in {counts['categories']} categories "
          f"-> {out_dir / 'scores.csv'}")
    return EXIT_OK


def cmd_report(args, cfg: RunConfig) -> int:
    out_dir = Path(args.out) if args.out else cfg.out
    scores_path = out_dir / "scores.csv"
    if not scores_path.is_file():
        raise FssError(f"no scores at {scores_path}; run score first")
    scores = productivity.read_scores_csv(scores_path)

    inst_names: dict[str, str] = {}
    sc_names: dict[str, str] = {}
    canon = _canonical_dir(out_dir)
    if (canon / "persons.csv").is_file():
        inst_names = ingest.load_persons(canon / "persons.csv").institution_names()
    if (canon / "sc_discipline_map.csv").is_file():
        scheme = ingest.load_sc_scheme(canon / "sc_discipline_map.csv")
        sc_names = {c: cat.sc_name for c, cat in scheme.by_code.items()}

    countries = sorted({r.country for r in scores.records})
    pair = cfg.country_pair
    if not set(pair) <= set(countries) and len(countries) == 2:
        pair = (countries[0], countries[1])

    fmt = args.format or cfg.format
    bins = args.histogram or "decile"
    selective = bool(args.histogram or args.gap or args.level)

    tables: list[analytics.Table] = []
    if not selective or args.histogram:
        for basis in analytics.BASES:
            shares = analytics.distribution_histogram(scores, bins, basis)
            t = analytics.histogram_table(shares, bins)
            t.name = f"distribution_{bins}_{basis}"
            tables.append(t)
    if not selective:
        for basis in analytics.BASES:
            tables.append(
                analytics.ts_share_table(analytics.ts_share_rows(scores, basis), basis)
            )
        tables.append(analytics.country_discipline_table(scores))
    if not selective or args.gap:
        rows = analytics.gap_rows(scores, pair, sc_names)
        tables.append(analytics.gap_table(scores, args.top, pair, sc_names))
        disciplines = {r.sc_code: r.discipline for r in scores.records}
        tables.append(analytics.sc_win_counts(rows, disciplines))
    if not selective or args.level:
        level = args.level or "overall"
        min_obs = args.min_obs
        if min_obs is None:
            min_obs = 10 if level == "sc" else 1
        tables.append(
            analytics.institution_ranking(scores, level, args.key, min_obs, inst_names)
        )

    report_dir = out_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for table in tables:
        path = report_dir / f"{table.name}.{table.extension(fmt)}"
        path.write_text(table.render(fmt), encoding="utf-8")
        files.append((path, len(table.rows)))

    seed = args.seed if args.seed is not None else cfg.seed
    counts = {"tables": len(tables), "persons": len(scores.records)}
    _update_manifest(out_dir, "report", seed, cfg.digest, counts, files)
    print(f"wrote {len(tables)} tables -> {report_dir}")
    return EXIT_OK


# --- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        help=f"run config (TOML); defaults to ${CONFIG_ENV_VAR} when set",
    )
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", help="output directory (default from config)")
    common.add_argument(
        "--format", choices=("csv", "text", "json"), help="table output format"
    )

    parser = argparse.ArgumentParser(
        prog="fss",
        description="Research productivity scoring pipeline "
                    "(classification, normalization, cost-adjusted scores, reports).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "synth", parents=[common],
        help="generate a deterministic synthetic corpus",
    )
    sub.add_parser(
        "ingest", parents=[common],
        help="validate inputs and write the canonical corpus",
    )
    sub.add_parser(
        "score", parents=[common],
        help="classify the cohort and compute productivity scores",
    )
    report = sub.add_parser(
        "report", parents=[common],
        help="write comparison tables from computed scores",
    )
    report.add_argument(
        "--histogram", choices=("quartile", "decile"),
        help="write only the distribution tables, with this binning",
    )
    report.add_argument(
        "--gap", action="store_true",
        help="write only the category gap and win-count tables",
    )
    report.add_argument(
        "--top", type=int, default=10,
        help="gap rows per direction (default 10)",
    )
    report.add_argument(
        "--level", choices=("overall", "discipline", "sc"),
        help="write only the institution ranking, at this level",
    )
    report.add_argument("--key", default="", help="level key (discipline name or SC code)")
    report.add_argument(
        "--min-obs", type=int, dest="min_obs",
        help="suppress institutions below this member count",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    try:
        cfg = load_run_config(config_path) if config_path else None
        if args.command == "synth":
            return cmd_synth(args, cfg)
        if cfg is None:
            raise ConfigError(
                f"no config given; pass --config or set ${CONFIG_ENV_VAR}"
            )
        if args.command == "ingest":
            return cmd_ingest(args, cfg)
        if args.command == "score":
            return cmd_score(args, cfg)
        if args.command == "report":
            return cmd_report(args, cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FssError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
