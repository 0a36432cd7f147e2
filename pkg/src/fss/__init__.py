"""Research productivity indicators from publication and salary data.

The package classifies researchers into subject categories from their
publication portfolios, normalizes citation impact by year and category,
splits credit across authors, adjusts for labor plus capital cost by
academic rank, and aggregates individual scores into institution and
country league tables.
"""
from .model import (
    ACADEMIC_RANKS,
    Authorship,
    ConfigError,
    CorpusConfig,
    FssError,
    IngestError,
    Person,
    PersonRegistry,
    Publication,
    PublicationSet,
    SCScheme,
    SubjectCategory,
    YearWindow,
)
from .metrics import (
    BaselineTable,
    ContributionWeights,
    CostModel,
    EQUAL,
    POSITION_WEIGHTED,
    build_baselines,
    build_cost_model,
    fractional_contribution,
    load_cost_model,
    normalized_impact,
    position_weights,
)
from .classify import Assignment, classify_cohort, dominant_sc, sc_counts
from .ingest import (
    load_journal_map,
    load_persons,
    load_publications,
    load_sc_scheme,
    validate_cohort,
)
from .productivity import (
    ScoreRecord,
    ScoreSet,
    UnitScore,
    fss_a,
    fss_p,
    fss_pwk,
    percentile_ranks,
    scaled_scores,
    score_cohort,
)
from .synth import SynthSpec, generate_synthetic_corpus, write_corpus

__version__ = "1.0.0"

__all__ = [
    "ACADEMIC_RANKS",
    "Assignment",
    "Authorship",
    "BaselineTable",
    "ConfigError",
    "ContributionWeights",
    "CorpusConfig",
    "CostModel",
    "EQUAL",
    "FssError",
    "IngestError",
    "POSITION_WEIGHTED",
    "Person",
    "PersonRegistry",
    "Publication",
    "PublicationSet",
    "SCScheme",
    "ScoreRecord",
    "ScoreSet",
    "SubjectCategory",
    "SynthSpec",
    "UnitScore",
    "YearWindow",
    "build_baselines",
    "build_cost_model",
    "classify_cohort",
    "dominant_sc",
    "fractional_contribution",
    "fss_a",
    "fss_p",
    "fss_pwk",
    "generate_synthetic_corpus",
    "load_cost_model",
    "load_journal_map",
    "load_persons",
    "load_publications",
    "load_sc_scheme",
    "normalized_impact",
    "percentile_ranks",
    "position_weights",
    "scaled_scores",
    "score_cohort",
    "sc_counts",
    "validate_cohort",
    "write_corpus",
]
