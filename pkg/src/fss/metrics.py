"""Per-publication impact normalization, authorship shares, and the cost model.

Citation counts are standardized against the mean of cited publications in
the same year and subject category. Author shares either split evenly or
follow the byline-position convention of the life sciences. Labor+capital
costs reduce to one normalization factor per academic rank, anchored so the
cheapest rank equals 1.
"""
from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import lru_cache

from .model import ACADEMIC_RANKS, FssError, Publication, PublicationSet

EQUAL = "equal"
POSITION_WEIGHTED = "position_weighted"


class UndefinedBaselineError(FssError):
    """No citation baseline exists for any subject category of a publication."""


@dataclass(frozen=True, slots=True)
class CitationBaseline:
    year: int
    sc_code: str
    c_bar: float    # mean citations over cited (citations > 0) publications
    n_cited: int


@dataclass
class BaselineTable:
    """Baselines keyed by (year, sc_code), with a pooled per-SC fallback.

    A cell with no cited publication is undefined; lookups then fall back
    to the subject category's pooled mean across all years, and every
    fallback use is counted for the run diagnostics.
    """

    cells: dict[tuple[int, str], CitationBaseline]
    pooled_by_sc: dict[str, float]
    fallback_uses: Counter = field(default_factory=Counter)

    def lookup(self, year: int, sc_code: str) -> float | None:
        cell = self.cells.get((year, sc_code))
        if cell is not None:
            return cell.c_bar
        pooled = self.pooled_by_sc.get(sc_code)
        if pooled is not None:
            self.fallback_uses[(year, sc_code)] += 1
        return pooled


def build_baselines(pubs: PublicationSet) -> BaselineTable:
    """Mean citations of cited publications per (year, subject category).

    Every subject category of a publication contributes that publication's
    citation count to its cell; zero-citation records are left out of the
    means entirely.
    """
    sums: dict[tuple[int, str], int] = defaultdict(int)
    counts: dict[tuple[int, str], int] = defaultdict(int)
    for pub in pubs:
        if pub.citations <= 0:
            continue
        for sc in pub.subject_categories:
            key = (pub.year, sc)
            sums[key] += pub.citations
            counts[key] += 1

    cells = {
        key: CitationBaseline(key[0], key[1], sums[key] / counts[key], counts[key])
        for key in sums
    }

    sc_sums: dict[str, int] = defaultdict(int)
    sc_counts: dict[str, int] = defaultdict(int)
    for (year, sc), total in sums.items():
        sc_sums[sc] += total
        sc_counts[sc] += counts[(year, sc)]
    pooled = {sc: sc_sums[sc] / sc_counts[sc] for sc in sc_sums}

    return BaselineTable(cells=cells, pooled_by_sc=pooled)


def normalized_impact(pub: Publication, baselines: BaselineTable) -> float:
    """Citations standardized by the field-year baseline.

    Multi-category publications divide by the arithmetic mean of the
    per-category baselines. Uncited publications score 0 regardless of
    baseline availability.
    """
    if pub.citations == 0:
        return 0.0
    values = []
    for sc in pub.subject_categories:
        c_bar = baselines.lookup(pub.year, sc)
        if c_bar is not None:
            values.append(c_bar)
    if not values:
        cells = ", ".join(f"({pub.year}, {sc})" for sc in pub.subject_categories)
        raise UndefinedBaselineError(
            f"no citation baseline for any cell of {pub.pub_id}: {cells}"
        )
    return pub.citations / (sum(values) / len(values))


# Byline-position shares: (first, last) for single-affiliation papers,
# (first, second, second-to-last, last) otherwise; the remainder is split
# among the unnamed middle authors. Values are conventions, not constants
# of nature, so they stay adjustable.
@dataclass(frozen=True)
class ContributionWeights:
    intramural_first_last: float = 0.40
    intramural_others: float = 0.20
    extramural_first_last: float = 0.30
    extramural_second: float = 0.15
    extramural_others: float = 0.10


DEFAULT_WEIGHTS = ContributionWeights()


@lru_cache(maxsize=4096)
def position_weights(
    n: int, intramural: bool, weights: ContributionWeights = DEFAULT_WEIGHTS
) -> tuple[float, ...]:
    """Contribution share per byline position for an n-author list.

    Named roles (first/last, plus second/second-to-last on multi-affiliation
    papers) accumulate their role weights; the residual share is split among
    the remaining authors. Short lists where roles overlap or where no
    "other" authors exist are renormalized so the shares sum to 1.
    """
    if n < 1:
        raise ValueError("author count must be >= 1")
    w = [0.0] * n
    if intramural:
        w[0] += weights.intramural_first_last
        w[n - 1] += weights.intramural_first_last
        middle = range(1, n - 1)
        if middle:
            share = weights.intramural_others / len(middle)
            for i in middle:
                w[i] += share
    else:
        w[0] += weights.extramural_first_last
        w[n - 1] += weights.extramural_first_last
        if n >= 2:
            w[1] += weights.extramural_second
            w[n - 2] += weights.extramural_second
        middle = range(2, n - 2)
        if middle:
            share = weights.extramural_others / len(middle)
            for i in middle:
                w[i] += share
    total = sum(w)
    return tuple(x / total for x in w)


def fractional_contribution(
    pub: Publication,
    position: int,
    scheme: str,
    weights: ContributionWeights = DEFAULT_WEIGHTS,
) -> float:
    """Share of a publication credited to the author at the given position."""
    n = pub.n_authors
    if not 1 <= position <= n:
        raise ValueError(f"position {position} out of range 1..{n} for {pub.pub_id}")
    if scheme == EQUAL:
        return 1.0 / n
    if scheme == POSITION_WEIGHTED:
        return position_weights(n, pub.intramural, weights)[position - 1]
    raise ValueError(f"unknown contribution scheme {scheme!r}")


@dataclass(frozen=True, slots=True)
class SalaryCell:
    headcount: int
    mean_salary: float


@dataclass
class CostModel:
    """Rank-level research cost, normalized so the cheapest rank costs 1.

    w_by_rank is the headcount-weighted mean salary across countries;
    yearly research cost per head is w_r * research_time_share + capital,
    and factor_by_rank rescales that so min(cost) == 1 exactly.
    """

    salary_stats: dict[tuple[str, str], SalaryCell]
    capital_per_year: float
    research_time_share: float
    w_by_rank: dict[str, float] = field(init=False)
    factor_by_rank: dict[str, float] = field(init=False)

    def __post_init__(self) -> None:
        if self.capital_per_year < 0:
            raise FssError("capital_per_year must be >= 0")
        if not 0 < self.research_time_share <= 1:
            raise FssError("research_time_share must be in (0, 1]")
        ranks = sorted({rank for _, rank in self.salary_stats})
        if not ranks:
            raise FssError("cost model has no salary rows")
        for (country, rank), cell in self.salary_stats.items():
            if cell.headcount <= 0 or cell.mean_salary <= 0:
                raise FssError(f"non-positive salary statistics for ({country}, {rank})")
        self.w_by_rank = {}
        for rank in ranks:
            cells = [c for (_, r), c in self.salary_stats.items() if r == rank]
            heads = sum(c.headcount for c in cells)
            self.w_by_rank[rank] = sum(c.headcount * c.mean_salary for c in cells) / heads
        costs = {r: self.yearly_cost(r) for r in ranks}
        anchor = min(costs.values())
        self.factor_by_rank = {r: costs[r] / anchor for r in ranks}

    def yearly_cost(self, rank: str) -> float:
        """Absolute labor+capital cost per research year, euro PPP."""
        try:
            w = self.w_by_rank[rank]
        except KeyError:
            raise FssError(f"cost model has no rank {rank!r}") from None
        return w * self.research_time_share + self.capital_per_year

    def factor(self, rank: str) -> float:
        try:
            return self.factor_by_rank[rank]
        except KeyError:
            raise FssError(f"cost model has no rank {rank!r}") from None


def build_cost_model(
    salary_stats: dict[tuple[str, str], SalaryCell],
    capital_per_year: float,
    research_time_share: float = 0.5,
) -> CostModel:
    missing = [r for r in ACADEMIC_RANKS if not any(rank == r for _, rank in salary_stats)]
    if missing:
        raise FssError(f"cost model missing salary rows for ranks: {', '.join(missing)}")
    return CostModel(salary_stats, capital_per_year, research_time_share)


def cost_factor(person, model: CostModel, window) -> float:
    """Normalization factor for the rank the person last held in the window."""
    return model.factor(person.latest_rank(window))


def load_cost_model(path) -> CostModel:
    """Read the key/value cost config (TOML).

    Layout: top-level capital_per_year and research_time_share, then one
    [salary.<country>.<rank>] table per cell with headcount and mean_salary.
    """
    try:
        import tomllib
    except ModuleNotFoundError:  # Python 3.10
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    try:
        capital = float(data["capital_per_year"])
        share = float(data.get("research_time_share", 0.5))
        stats = {}
        for country, ranks in data["salary"].items():
            for rank, cell in ranks.items():
                stats[(country, rank)] = SalaryCell(
                    headcount=int(cell["headcount"]),
                    mean_salary=float(cell["mean_salary"]),
                )
    except KeyError as exc:
        raise FssError(f"cost model config {path} is missing key {exc}") from None
    return build_cost_model(stats, capital, share)


def write_cost_model_toml(path, stats: dict[tuple[str, str], SalaryCell],
                          capital_per_year: float, research_time_share: float = 0.5) -> None:
    lines = [
        f"capital_per_year = {capital_per_year}",
        f"research_time_share = {research_time_share}",
        "",
    ]
    for (country, rank) in sorted(stats):
        cell = stats[(country, rank)]
        lines.append(f"[salary.{country}.{rank}]")
        lines.append(f"headcount = {cell.headcount}")
        lines.append(f"mean_salary = {cell.mean_salary}")
        lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))


def write_baselines_csv(baselines: BaselineTable, path) -> int:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "sc_code", "c_bar", "n_cited"])
        for year, sc_code in sorted(baselines.cells):
            cell = baselines.cells[(year, sc_code)]
            writer.writerow([year, sc_code, repr(cell.c_bar), cell.n_cited])
    return len(baselines.cells)
