"""Per-allocation ownership state machines.

Each allocation site instance gets one machine tracking which pointer
variables currently own the block.  Legal lifecycle edges:

    Start->Alloced    allocation
    Alloced->Alloced  ownership transfer while live
    Alloced->Freed    compatible release
    Freed->Freed      transfer after release
    Freed->End        benign forget after release
    Alloced->Error    leak, ownership loss, mismatched release
    Freed->Error      double release

A machine whose block was passed to an unknown function is *tainted*:
leak verdicts are suppressed for it (the callee may have kept or freed
the block) but double-free and mismatch still fire.  A machine whose
block escaped through ``return`` similarly never produces a leak here;
responsibility moves to the caller via the summary layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from .defects import DefectKind

from enum import Enum


class MemState(Enum):
    START = "Start"
    ALLOCED = "Alloced"
    FREED = "Freed"
    END = "End"
    ERROR = "Error"


LEGAL_EDGES: FrozenSet[Tuple[str, str]] = frozenset({
    ("Start", "Alloced"),
    ("Alloced", "Alloced"),
    ("Alloced", "Freed"),
    ("Freed", "Freed"),
    ("Freed", "End"),
    ("Alloced", "Error"),
    ("Freed", "Error"),
})

# release label -> allocation labels it may legally pair with
FREE_MATCH: Dict[str, FrozenSet[str]] = {
    "free": frozenset({"malloc", "calloc", "realloc"}),
    "delete": frozenset({"new"}),
    "delete_array": frozenset({"new_array"}),
}


@dataclass
class AllocRecord:
    line: int
    fn: str  # malloc | calloc | realloc | new | new_array
    owner: int  # var id assigned at the allocation


@dataclass
class FreeRecord:
    line: int
    fn: str  # free | delete | delete_array


@dataclass
class MachineError:
    kind: DefectKind
    line: int
    message: str


@dataclass
class Machine:
    id: int
    alloc: AllocRecord
    state: MemState = MemState.START
    owners: Set[int] = field(default_factory=set)
    frees: List[FreeRecord] = field(default_factory=list)
    trace: List[str] = field(default_factory=list)
    escaped: bool = False
    tainted: bool = False
    record: bool = True  # False once the verdict for this block stops mattering
    partial_path: Optional[List[Tuple[str, str]]] = None
    error: Optional[MachineError] = None

    def clone(self) -> "Machine":
        twin = Machine(self.id, self.alloc, self.state, set(self.owners),
                       list(self.frees), list(self.trace), self.escaped,
                       self.tainted, self.record,
                       None if self.partial_path is None else list(self.partial_path),
                       self.error)
        return twin

    def _edge(self, new_state: MemState, note: str = "") -> None:
        label = f"{self.state.value}->{new_state.value}"
        self.trace.append(f"{label} {note}".rstrip())
        self.state = new_state

    def settled(self) -> bool:
        return self.state in (MemState.END, MemState.ERROR)

    def begin(self, note: str = "") -> None:
        self._edge(MemState.ALLOCED, note)
        self.owners.add(self.alloc.owner)

    # -- ownership transfers -------------------------------------------------

    def assign(self, dst: int, src: int, line: int,
               strict: bool = False) -> Optional[MachineError]:
        """Apply ``dst = src`` to the owner set.

        Default mode: a copied owner aliases the block, an overwritten
        owner drops out.  Strict mode applies the add rule and then the
        remove rule against the running set, so the destination of a
        copy is removed right after being added; kept selectable because
        downstream consumers may want that historical behaviour.
        """
        if self.settled() or self.state is MemState.START:
            return None
        pre = set(self.owners)
        if strict:
            if src in pre:
                self.owners.add(dst)
            if dst in self.owners:
                self.owners.discard(dst)
        else:
            if src in pre:
                self.owners.add(dst)
            elif dst in pre:
                self.owners.discard(dst)
        if self.owners != pre:
            self._edge(self.state, f"assign v{dst}=v{src} @{line}")
            return self._after_owner_loss(line, "reassigned")
        return None

    def drop_owner(self, var: int, line: int, cause: str) -> Optional[MachineError]:
        """Remove one owner (null assignment, arithmetic, scope end, reuse)."""
        if self.settled() or var not in self.owners:
            return None
        self.owners.discard(var)
        self._edge(self.state, f"drop v{var} {cause} @{line}")
        return self._after_owner_loss(line, cause)

    def _after_owner_loss(self, line: int, cause: str) -> Optional[MachineError]:
        if self.owners:
            return None
        if self.state is MemState.FREED:
            self._edge(MemState.END, f"forgotten @{line}")
            return None
        if self.state is MemState.ALLOCED:
            if self.escaped or not self.record:
                return None
            err = MachineError(
                DefectKind.POINTER_OWNERSHIP_LOST, line,
                f"last reference to the block from line {self.alloc.line} "
                f"is {cause} before release")
            self._edge(MemState.ERROR, f"lost @{line}")
            self.error = err
            return err
        return None

    def mark_escaped(self, note: str = "returned") -> None:
        if not self.settled():
            self.escaped = True

    def taint(self) -> None:
        if not self.settled():
            self.tainted = True

    # -- release -------------------------------------------------------------

    def release(self, fn: str, line: int) -> Optional[MachineError]:
        if self.settled() or self.state is MemState.START:
            return None
        if self.state is MemState.FREED:
            first = self.frees[0].line if self.frees else self.alloc.line
            err = MachineError(
                DefectKind.DOUBLE_FREE, line,
                f"block from line {self.alloc.line} released again "
                f"(first released at line {first})")
            self._edge(MemState.ERROR, f"{fn} @{line}")
            self.error = err
            return err
        if self.alloc.fn not in FREE_MATCH.get(fn, frozenset()):
            err = MachineError(
                DefectKind.MISMATCHED_ALLOC_FREE, line,
                f"block allocated with {self.alloc.fn} at line "
                f"{self.alloc.line} released with {fn}")
            self._edge(MemState.ERROR, f"{fn} @{line}")
            self.error = err
            return err
        self.frees.append(FreeRecord(line, fn))
        self._edge(MemState.FREED, f"{fn} @{line}")
        return None

    # -- end of tracking -----------------------------------------------------

    def finish(self, line: int) -> Optional[MachineError]:
        """Close out the machine at the end of its owning function."""
        if self.settled() or self.state is MemState.START:
            return None
        if self.state is MemState.FREED:
            self._edge(MemState.END, f"eof @{line}")
            return None
        # Alloced at the end of tracking.
        if self.tainted:
            self._edge(MemState.END, "tainted")
            return None
        if self.escaped or not self.record:
            return None  # stays Alloced; the caller now owns it
        if self.partial_path is not None:
            err = MachineError(
                DefectKind.PATH_MISSING_RELEASE, self.alloc.line,
                f"block from line {self.alloc.line} is released only on "
                f"some paths of its releasing callee")
            self._edge(MemState.ERROR, f"partial @{line}")
            self.error = err
            return err
        err = MachineError(
            DefectKind.MISSING_RELEASE, self.alloc.line,
            f"block allocated at line {self.alloc.line} is never released")
        self._edge(MemState.ERROR, f"leak @{line}")
        self.error = err
        return err

    def replay(self) -> Tuple[str, bool]:
        """Re-run the recorded trace; returns (final state, all edges legal).

        Tainted closure is the one transition outside the legal set and
        is reported as such rather than silently accepted.
        """
        state = "Start"
        legal = True
        for entry in self.trace:
            edge = entry.split(" ", 1)[0]
            src, _, dst = edge.partition("->")
            if src != state:
                legal = False
            if (src, dst) not in LEGAL_EDGES and not entry.endswith("tainted"):
                legal = False
            state = dst
        return state, legal


class MachineSet:
    """All machines of one traversal variant, keyed by machine id."""

    def __init__(self) -> None:
        self.by_id: Dict[int, Machine] = {}

    def clone(self) -> "MachineSet":
        twin = MachineSet()
        twin.by_id = {mid: m.clone() for mid, m in self.by_id.items()}
        return twin

    def add(self, machine: Machine) -> None:
        self.by_id[machine.id] = machine

    def owning(self, var: int) -> List[Machine]:
        return [m for mid, m in sorted(self.by_id.items())
                if var in m.owners and not m.settled()]

    def live(self) -> List[Machine]:
        return [m for mid, m in sorted(self.by_id.items()) if not m.settled()]

    def on_alloc(self, new_id: int, owner: int, fn: str,
                 line: int) -> Tuple[Machine, List[MachineError]]:
        """Create a machine for an allocation assigned to *owner*.

        Any machine previously owned through the same variable loses that
        owner first: a still-live block may turn into an ownership loss,
        a released block quietly expires (pointer reuse).
        """
        errors: List[MachineError] = []
        for old in self.owning(owner):
            if old.state is MemState.FREED:
                old.record = False
            err = old.drop_owner(owner, line, "overwritten by a new allocation")
            if err is not None:
                errors.append(err)
        machine = Machine(new_id, AllocRecord(line, fn, owner))
        machine.begin(f"{fn} @{line}")
        self.add(machine)
        return machine, errors
