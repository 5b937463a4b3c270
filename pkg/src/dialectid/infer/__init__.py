from .cohort import (
    COHORT_MAGIC,
    COHORT_VERSION,
    CohortSet,
    build_cohorts,
    load_cohorts,
    save_cohorts,
    unit_normalize,
)
from .scoring import (
    NORM_METHODS,
    System,
    classify,
    cohort_scores,
    combine,
    fuse,
    minmax_normalize,
    normalize_scores,
    znorm_normalize,
)

__all__ = [
    "COHORT_MAGIC",
    "COHORT_VERSION",
    "CohortSet",
    "NORM_METHODS",
    "System",
    "build_cohorts",
    "classify",
    "cohort_scores",
    "combine",
    "fuse",
    "load_cohorts",
    "minmax_normalize",
    "normalize_scores",
    "save_cohorts",
    "unit_normalize",
    "znorm_normalize",
]
