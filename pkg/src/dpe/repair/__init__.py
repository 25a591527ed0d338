"""Statement-level program repair against reference solutions."""

from __future__ import annotations

from ..edits import ConflictingAnchors, Correction, InvalidAnchor, apply_edits, invert, make_correction
from .discrepancy import SiteIndex, anonymized, generate_discrepancies, tag_corrections
from .search import (
    DEFAULT_BUDGET,
    DEFAULT_K,
    FixSet,
    SearchStats,
    apply_patch,
    diff_size,
    enumerative_fix,
    guided_fix,
    identify_candidates,
    is_correct,
)

__all__ = [
    "Correction", "ConflictingAnchors", "InvalidAnchor", "apply_edits", "invert", "make_correction",
    "SiteIndex", "anonymized", "generate_discrepancies", "tag_corrections",
    "DEFAULT_BUDGET", "DEFAULT_K", "FixSet", "SearchStats", "apply_patch", "diff_size",
    "enumerative_fix", "guided_fix", "identify_candidates", "is_correct",
]
