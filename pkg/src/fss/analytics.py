"""Comparative outputs over a completed score set.

Everything here is a pure read-only transform: distribution histograms
on pooled percentiles, top-scientist shares, country and discipline
league tables, category gap tables with win counts, and institution
rankings. Tables render to CSV, aligned text, or JSON.
"""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import FssError
from .productivity import ScoreRecord, ScoreSet, UnitScore, fss_a, percentile_ranks

BASES = ("fss_p", "fss_pwk")
TS_THRESHOLDS = (1, 5, 10)


@dataclass(frozen=True, slots=True)
class TSShareRow:
    scope: str            # discipline name or "Overall"
    country: str
    ts1_share: float
    ts5_share: float
    ts10_share: float


@dataclass(frozen=True, slots=True)
class GapRow:
    sc_code: str
    sc_name: str
    obs_a: int
    fss_a_a: float
    obs_b: int
    fss_a_b: float
    delta: float          # fss_a_a - fss_a_b


def _check_basis(basis: str) -> None:
    if basis not in BASES:
        raise FssError(f"unknown score basis {basis!r}")


def _records(scores: ScoreSet | Sequence[ScoreRecord]) -> list[ScoreRecord]:
    if isinstance(scores, ScoreSet):
        return scores.records
    return list(scores)


def basis_percentiles(
    records: Sequence[ScoreRecord], basis: str = "fss_pwk"
) -> dict[str, float]:
    """Pooled per-category percentile of each person on the chosen basis."""
    _check_basis(basis)
    by_sc: dict[str, dict[str, float]] = defaultdict(dict)
    for rec in records:
        by_sc[rec.sc_code][rec.person_id] = getattr(rec, basis)
    out: dict[str, float] = {}
    for sc_code in sorted(by_sc):
        out.update(percentile_ranks(by_sc[sc_code]))
    return out


def distribution_histogram(
    scores: ScoreSet | Sequence[ScoreRecord],
    bins: str = "decile",
    basis: str = "fss_pwk",
) -> dict[str, list[float]]:
    """Share of each country's members per pooled-percentile bin.

    Bin edges live on the pooled two-country percentile scale, so a
    country with the same score distribution as the pool puts about
    100/n_bins percent in every bin.
    """
    n_bins = {"quartile": 4, "decile": 10}.get(bins)
    if n_bins is None:
        raise FssError(f"unknown binning {bins!r}")
    records = _records(scores)
    if not records:
        raise FssError("no scores to bin")
    pcts = basis_percentiles(records, basis)
    width = 100.0 / n_bins
    counts: dict[str, list[int]] = defaultdict(lambda: [0] * n_bins)
    for rec in records:
        idx = min(n_bins - 1, int(pcts[rec.person_id] / width))
        counts[rec.country][idx] += 1
    shares: dict[str, list[float]] = {}
    for country in sorted(counts):
        total = sum(counts[country])
        shares[country] = [100.0 * c / total for c in counts[country]]
    return shares


def top_scientists(
    sc_records: Sequence[ScoreRecord], x: float, basis: str = "fss_pwk"
) -> set[str]:
    """Members at or above the 100-x pooled percentile; ties all enter."""
    if not 0 < x <= 100:
        raise FssError(f"threshold must be in (0, 100], got {x}")
    values = {rec.person_id: getattr(rec, basis) for rec in sc_records}
    _check_basis(basis)
    if len(values) == 1:
        return set(values)
    pcts = percentile_ranks(values)
    cut = 100.0 - x
    return {pid for pid, pct in pcts.items() if pct >= cut}


def ts_share_rows(
    scores: ScoreSet | Sequence[ScoreRecord], basis: str = "fss_pwk"
) -> list[TSShareRow]:
    """Top-scientist shares per discipline and overall, per country.

    TS sets are taken per subject category and pooled across countries;
    shares divide each country's TS head count by its faculty in the
    grouping.
    """
    records = _records(scores)
    if not records:
        raise FssError("no scores")
    by_sc: dict[str, list[ScoreRecord]] = defaultdict(list)
    for rec in records:
        by_sc[rec.sc_code].append(rec)

    ts_by_threshold: dict[int, set[str]] = {x: set() for x in TS_THRESHOLDS}
    for sc_code in sorted(by_sc):
        for x in TS_THRESHOLDS:
            ts_by_threshold[x] |= top_scientists(by_sc[sc_code], x, basis)

    countries = sorted({rec.country for rec in records})
    disciplines = sorted({rec.discipline for rec in records})
    rows: list[TSShareRow] = []
    for scope in disciplines + ["Overall"]:
        for country in countries:
            members = [
                rec.person_id
                for rec in records
                if rec.country == country
                and (scope == "Overall" or rec.discipline == scope)
            ]
            if not members:
                continue
            faculty = len(members)
            member_set = set(members)
            share = {
                x: 100.0 * len(ts_by_threshold[x] & member_set) / faculty
                for x in TS_THRESHOLDS
            }
            rows.append(TSShareRow(scope, country, share[1], share[5], share[10]))
    return rows


def country_units(
    scores: ScoreSet, level: str = "overall"
) -> list[UnitScore]:
    """Country-level aggregate scores, overall or split by a grouping."""
    records = scores.records
    if level == "overall":
        key = lambda rec: (rec.country, "")
    elif level == "discipline":
        key = lambda rec: (rec.country, rec.discipline)
    elif level == "sc":
        key = lambda rec: (rec.country, rec.sc_code)
    else:
        raise FssError(f"unknown aggregation level {level!r}")
    members: dict[tuple[str, str], list[ScoreRecord]] = defaultdict(list)
    for rec in records:
        members[key(rec)].append(rec)
    units = []
    for country, level_key in sorted(members):
        units.append(
            fss_a(members[(country, level_key)], scores.sc_means, country, level, level_key)
        )
    return units


def country_discipline_table(scores: ScoreSet) -> "Table":
    """Obs and aggregate score per country, by discipline plus overall."""
    by_disc = {
        (u.unit_id, u.level_key): u for u in country_units(scores, "discipline")
    }
    overall = {u.unit_id: u for u in country_units(scores, "overall")}
    countries = sorted(overall)
    disciplines = sorted({k for _, k in by_disc})
    columns = ["discipline"]
    formats = {}
    for c in countries:
        columns += [f"obs_{c}", f"fss_a_{c}"]
        formats[f"fss_a_{c}"] = ".3f"
    rows = []
    for disc in disciplines + ["Overall"]:
        row: list = [disc]
        for c in countries:
            unit = overall.get(c) if disc == "Overall" else by_disc.get((c, disc))
            row += [unit.obs if unit else 0, unit.fss_a if unit else None]
        rows.append(row)
    return Table("country_discipline", columns, rows, formats)


def gap_rows(
    scores: ScoreSet,
    country_pair: tuple[str, str] = ("IT", "NO"),
    sc_names: dict[str, str] | None = None,
) -> list[GapRow]:
    """Per-category country gap, sorted ascending by delta.

    delta < 0 means the second country of the pair is ahead.
    """
    a, b = country_pair
    units = {(u.unit_id, u.level_key): u for u in country_units(scores, "sc")}
    sc_codes = sorted({rec.sc_code for rec in scores.records})
    rows = []
    for sc_code in sc_codes:
        ua, ub = units.get((a, sc_code)), units.get((b, sc_code))
        if ua is None or ub is None:
            continue
        rows.append(
            GapRow(
                sc_code=sc_code,
                sc_name=(sc_names or {}).get(sc_code, sc_code),
                obs_a=ua.obs,
                fss_a_a=ua.fss_a,
                obs_b=ub.obs,
                fss_a_b=ub.fss_a,
                delta=ua.fss_a - ub.fss_a,
            )
        )
    rows.sort(key=lambda r: (r.delta, r.sc_code))
    return rows


def gap_table(
    scores: ScoreSet,
    top_n: int = 10,
    country_pair: tuple[str, str] = ("IT", "NO"),
    sc_names: dict[str, str] | None = None,
) -> "Table":
    """The top_n category gaps in each direction, most extreme first."""
    rows = gap_rows(scores, country_pair, sc_names)
    if len(rows) > 2 * top_n:
        rows = rows[:top_n] + rows[-top_n:]
    a, b = country_pair
    columns = ["sc_code", "sc_name", f"obs_{a}", f"fss_a_{a}",
               f"obs_{b}", f"fss_a_{b}", "delta"]
    formats = {f"fss_a_{a}": ".3f", f"fss_a_{b}": ".3f", "delta": ".3f"}
    return Table(
        "sc_gap",
        columns,
        [[r.sc_code, r.sc_name, r.obs_a, r.fss_a_a, r.obs_b, r.fss_a_b, r.delta]
         for r in rows],
        formats,
    )


def sc_win_counts(
    rows: Iterable[GapRow],
    disciplines: dict[str, str],
) -> "Table":
    """How many categories the second country wins outright, per discipline."""
    total: dict[str, int] = defaultdict(int)
    wins: dict[str, int] = defaultdict(int)
    for row in rows:
        disc = disciplines.get(row.sc_code)
        if disc is None:
            raise FssError(f"no discipline for subject category {row.sc_code}")
        total[disc] += 1
        if row.fss_a_b > row.fss_a_a:
            wins[disc] += 1
    out = []
    for disc in sorted(total):
        out.append([disc, total[disc], wins[disc], 100.0 * wins[disc] / total[disc]])
    n, w = sum(total.values()), sum(wins.values())
    out.append(["Overall", n, w, 100.0 * w / n if n else 0.0])
    return Table(
        "sc_win_counts",
        ["discipline", "categories", "wins", "win_pct"],
        out,
        {"win_pct": ".1f"},
    )


def institution_ranking(
    scores: ScoreSet,
    level: str = "overall",
    level_key: str = "",
    min_obs: int = 1,
    names: dict[str, str] | None = None,
) -> "Table":
    """Institutions in descending aggregate score; small units suppressed."""
    if level == "overall":
        records = scores.records
    elif level == "discipline":
        records = [r for r in scores.records if r.discipline == level_key]
    elif level == "sc":
        records = [r for r in scores.records if r.sc_code == level_key]
    else:
        raise FssError(f"unknown aggregation level {level!r}")
    if not records:
        raise FssError(f"no scores at level {level}={level_key!r}")
    members: dict[str, list[ScoreRecord]] = defaultdict(list)
    for rec in records:
        members[rec.institution_id].append(rec)
    names = names or {}
    units = []
    for inst_id in sorted(members):
        if len(members[inst_id]) < min_obs:
            continue
        unit = fss_a(members[inst_id], scores.sc_means, inst_id, level, level_key)
        units.append((unit, names.get(inst_id, inst_id)))
    units.sort(key=lambda pair: (-pair[0].fss_a, pair[1]))
    rows = [
        [rank, name, u.unit_id, u.obs, u.fss_a]
        for rank, (u, name) in enumerate(units, start=1)
    ]
    return Table(
        "institution_ranking",
        ["rank", "institution", "institution_id", "obs", "fss_a"],
        rows,
        {"fss_a": ".3f"},
    )


def histogram_table(shares: dict[str, list[float]], bins: str) -> "Table":
    n_bins = len(next(iter(shares.values())))
    prefix = "Q" if bins == "quartile" else "D"
    columns = ["country"] + [f"{prefix}{i}" for i in range(1, n_bins + 1)]
    rows = [[country] + shares[country] for country in sorted(shares)]
    return Table(
        "distribution", columns, rows,
        {f"{prefix}{i}": ".1f" for i in range(1, n_bins + 1)},
    )


def ts_share_table(rows: list[TSShareRow], basis: str) -> "Table":
    return Table(
        f"top_scientists_{basis}",
        ["scope", "country", "ts1_share", "ts5_share", "ts10_share"],
        [[r.scope, r.country, r.ts1_share, r.ts5_share, r.ts10_share] for r in rows],
        {c: ".1f" for c in ("ts1_share", "ts5_share", "ts10_share")},
    )


@dataclass
class Table:
    """Column-named rows with per-column display formats."""

    name: str
    columns: list[str]
    rows: list[list]
    formats: dict[str, str] = field(default_factory=dict)

    def _cell(self, column: str, value) -> str:
        if value is None:
            return ""
        fmt = self.formats.get(column)
        if fmt and not isinstance(value, str):
            return format(value, fmt)
        return str(value)

    def formatted_rows(self) -> list[list[str]]:
        return [
            [self._cell(col, v) for col, v in zip(self.columns, row)]
            for row in self.rows
        ]

    def render_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.formatted_rows())
        return buf.getvalue()

    def render_text(self) -> str:
        body = self.formatted_rows()
        widths = [
            max(len(self.columns[i]), *(len(r[i]) for r in body)) if body
            else len(self.columns[i])
            for i in range(len(self.columns))
        ]
        def line(cells, pad):
            return "  ".join(pad(c, w) for c, w in zip(cells, widths)).rstrip()
        header = line(self.columns, str.ljust)
        rule = "  ".join("-" * w for w in widths)
        out = [header, rule]
        for r in body:
            # numbers read better right-aligned; first column stays left
            out.append(
                "  ".join(
                    (c.ljust(w) if i == 0 else c.rjust(w))
                    for i, (c, w) in enumerate(zip(r, widths))
                ).rstrip()
            )
        return "\n".join(out) + "\n"

    def render_json(self) -> str:
        payload = {
            "table": self.name,
            "columns": self.columns,
            "rows": [dict(zip(self.columns, row)) for row in self.rows],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def render(self, fmt: str) -> str:
        try:
            return {"csv": self.render_csv,
                    "text": self.render_text,
                    "json": self.render_json}[fmt]()
        except KeyError:
            raise FssError(f"unknown output format {fmt!r}") from None

    def extension(self, fmt: str) -> str:
        return {"csv": "csv", "text": "txt", "json": "json"}[fmt]
