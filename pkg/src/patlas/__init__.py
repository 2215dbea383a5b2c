"""Patent-landscape analytics: linked corpora, indices, survival, gravity."""

from .corpus import (
    LinkedCorpus,
    aggregate_eu,
    country_family_counts,
    family_country_weights,
    link_records,
    load_corpus,
    world_family_count,
)
from .errors import (
    CollinearityWarning,
    ConvergenceError,
    DataError,
    FewClustersWarning,
    PatlasError,
    SchemaError,
    SeparationError,
)
from .gravity import (
    DEFAULT_OFFSET,
    DesignMatrix,
    DyadPanel,
    FitResult,
    build_panel,
    clustered_se,
    marginal_effect,
    ppml_fit,
    pseudo_r2,
    transform_covariates,
)
from .indices import (
    CitationMatrix,
    CountryPatentCounts,
    PortfolioVector,
    SectorConcentration,
    citation_matrix,
    class_shares,
    concentration_ratio,
    foreign_citation_share,
    min_complement_proximity,
    portfolio_vector,
    rca,
    sector_firm_counts,
)
from .selection import (
    SelectionFit,
    first_stage_design,
    heckman_second_stage,
    inverse_mills,
    probit_fit,
)
from .survival import (
    LagRecord,
    SurvivalCurve,
    first_citation_lags,
    group_curves,
    km_estimate,
    uncited_share,
)
from .synth import TruthRecord, gen_corpus, gen_panel

__version__ = "0.1.0"

__all__ = [
    "CitationMatrix",
    "CollinearityWarning",
    "ConvergenceError",
    "CountryPatentCounts",
    "DEFAULT_OFFSET",
    "DataError",
    "DesignMatrix",
    "DyadPanel",
    "FewClustersWarning",
    "FitResult",
    "LagRecord",
    "LinkedCorpus",
    "PatlasError",
    "PortfolioVector",
    "SchemaError",
    "SectorConcentration",
    "SelectionFit",
    "SeparationError",
    "SurvivalCurve",
    "TruthRecord",
    "aggregate_eu",
    "build_panel",
    "citation_matrix",
    "class_shares",
    "clustered_se",
    "concentration_ratio",
    "country_family_counts",
    "family_country_weights",
    "first_citation_lags",
    "first_stage_design",
    "foreign_citation_share",
    "gen_corpus",
    "gen_panel",
    "group_curves",
    "heckman_second_stage",
    "inverse_mills",
    "km_estimate",
    "link_records",
    "load_corpus",
    "marginal_effect",
    "min_complement_proximity",
    "portfolio_vector",
    "ppml_fit",
    "probit_fit",
    "pseudo_r2",
    "rca",
    "sector_firm_counts",
    "transform_covariates",
    "uncited_share",
    "world_family_count",
]
