"""Search limits and result status shared by both engines."""
from __future__ import annotations

from dataclasses import dataclass

PROVED = "proved"
EXHAUSTED = "exhausted"  # search space exhausted below the limits
CUTOFF = "cutoff"  # a limit was hit; provability is unknown


@dataclass(frozen=True)
class SearchLimits:
    """Bounds for proof search.

    max_unfoldings: clause unfoldings (backchain / definition steps) allowed
    on a branch; term_size_bound: node-count cap on enumerated instantiation
    terms; fresh_name_budget: new names allowed per name type on a branch.
    """

    max_unfoldings: int = 8
    term_size_bound: int = 4
    fresh_name_budget: int = 2

    def __post_init__(self):
        if min(self.max_unfoldings, self.term_size_bound, self.fresh_name_budget) < 1:
            raise ValueError("all search limits must be positive")
