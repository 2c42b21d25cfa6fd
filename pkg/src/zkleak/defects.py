"""Defect records shared by the state machine, detectors and reporting."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple


class DefectKind(Enum):
    MISSING_RELEASE = "MissingRelease"
    PATH_MISSING_RELEASE = "PathMissingRelease"
    POINTER_OWNERSHIP_LOST = "PointerOwnershipLost"
    MISMATCHED_ALLOC_FREE = "MismatchedAllocFree"
    DOUBLE_FREE = "DoubleFree"
    CTOR_DTOR_MISMATCH = "CtorDtorMismatch"
    NON_VIRTUAL_BASE_DTOR = "NonVirtualBaseDtor"
    SHALLOW_COPY = "ShallowCopy"
    RECURSIVE_CALL_RING = "RecursiveCallRing"
    UNBALANCED_BRACES_WARNING = "UnbalancedBracesWarning"
    AMBIGUOUS_CALL_WARNING = "AmbiguousCallWarning"


WARNING_KINDS = frozenset({
    DefectKind.UNBALANCED_BRACES_WARNING,
    DefectKind.AMBIGUOUS_CALL_WARNING,
})

# (guard text, arm tag) pairs describing the branch decisions on a path.
PathCond = Tuple[str, str]


@dataclass
class Defect:
    kind: DefectKind
    file: str
    line: int
    func: str
    message: str
    path_c: List[PathCond] = field(default_factory=list)
    trace: List[str] = field(default_factory=list)

    def dedup_key(self) -> tuple:
        return (self.kind, self.file, self.line, self.func, tuple(self.path_c))

    def sort_key(self) -> tuple:
        return (self.file, self.line, self.kind.value, self.func, tuple(self.path_c))

    def is_warning(self) -> bool:
        return self.kind in WARNING_KINDS

    def render(self) -> str:
        text = f"{self.file}:{self.line}: {self.kind.value}: {self.message}"
        if self.func:
            text += f" [{self.func}]"
        if self.path_c:
            conds = ", ".join(f"{guard} -> {arm}" for guard, arm in self.path_c)
            text += f" (path: {conds})"
        return text


def dedup_and_sort(defects: List[Defect]) -> List[Defect]:
    """Drop exact duplicates and order by (file, line, kind)."""
    seen = {}
    for defect in defects:
        key = defect.dedup_key()
        if key not in seen:
            seen[key] = defect
    return sorted(seen.values(), key=Defect.sort_key)
