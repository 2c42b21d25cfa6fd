"""Path-sensitive walk of a function's structure plan.

Each traversal variant carries its own machine set, its path condition
(branch tags with guard text) and a map of variables known to hold
caller-owned storage (parameters, globals, members).  Branches fork
variants; when a fork would push past the variant budget the current
set is first collapsed pessimistically (a block live on any arm stays
live) and a diagnostic marks the function as partially path-insensitive
from there on.

Loop bodies run twice so second-iteration effects (double release,
pointer reuse) surface, then the back edge is cut.  Code after a
``return`` is still scanned with a fresh variant so defects in
unreachable tails are not silently skipped.

Calls are delegated to an injected handler; without one, every callee
is treated as unknown: pointer arguments become tainted and a call
result overwrites its destination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .defects import DefectKind, PathCond
from .events import (AllocEvent, AssignEvent, CallEvent, FreeEvent,
                     NullAssignEvent, PtrArithEvent, RETURN_SLOT,
                     ReturnVarEvent, node_events)
from .graphs import (BreakStmt, Cfg, ContinueStmt, FuncId, IfStruct,
                     LoopStruct, ReturnStmt, SeqStmt, SwitchStruct)
from .machine import Machine, MachineError, MachineSet, MemState
from .patterns import DefectPattern
from .scopes import ScopeNode, SymbolEntry
from .tokens import Diagnostic

PATH_BUDGET = 64

ORIGIN_PARAM = "param"
ORIGIN_GLOBAL = "global"

ST_ACTIVE = "active"
ST_DETACHED = "detached"
ST_UNKNOWN = "unknown"


@dataclass
class ExternObj:
    """A caller-owned block reachable through one or more variables."""
    key: int
    origin: Tuple[str, int]  # (ORIGIN_PARAM, index) | (ORIGIN_GLOBAL, var id)
    status: str = ST_ACTIVE
    freed: List[Tuple[int, str]] = field(default_factory=list)  # (line, fn)

    def clone(self) -> "ExternObj":
        return ExternObj(self.key, self.origin, self.status, list(self.freed))


@dataclass
class Variant:
    machines: MachineSet
    extern: Dict[int, ExternObj]
    path: List[PathCond]
    order: int = 0
    returned_var: Optional[int] = None
    has_returned: bool = False

    def clone(self, order: int) -> "Variant":
        twins: Dict[int, ExternObj] = {}
        ext: Dict[int, ExternObj] = {}
        for var, obj in self.extern.items():
            if obj.key not in twins:
                twins[obj.key] = obj.clone()
            ext[var] = twins[obj.key]
        return Variant(self.machines.clone(), ext, list(self.path), order,
                       self.returned_var, self.has_returned)


@dataclass
class RecordedError:
    error: MachineError
    path: List[PathCond]
    machine_id: Optional[int] = None
    trace: List[str] = field(default_factory=list)


@dataclass
class ExploreOutcome:
    variants: List[Variant]
    mid_errors: List[RecordedError]
    path_insensitive: bool
    exit_line: int


CallHandler = Callable[["Interp", Variant, CallEvent], None]


def symbol_index(root: ScopeNode) -> Dict[int, SymbolEntry]:
    """Every declared symbol in the file, keyed by var id."""
    out: Dict[int, SymbolEntry] = {}

    def walk(scope: ScopeNode) -> None:
        for entries in scope.symbols.values():
            for entry in entries:
                out[entry.var_id] = entry
        for p in scope.params:
            out[p.var_id] = p
        for child in scope.children:
            walk(child)

    walk(root)
    return out


class Interp:
    def __init__(self, cfg: Cfg, catalog: Sequence[DefectPattern],
                 site_map: Dict[int, FuncId],
                 symbols: Dict[int, SymbolEntry],
                 call_handler: Optional[CallHandler] = None,
                 strict: bool = False,
                 budget: int = PATH_BUDGET) -> None:
        self.cfg = cfg
        self.catalog = catalog
        self.site_map = site_map
        self.symbols = symbols
        self.call_handler = call_handler
        self.strict = strict
        self.budget = budget
        self._machine_ids = count(1)
        self._extern_keys = count(1)
        self._orders = count(1)
        self.mid_errors: Dict[Tuple[DefectKind, int], RecordedError] = {}
        self.path_insensitive = False

    # -- bookkeeping ----------------------------------------------------------

    def new_machine_id(self) -> int:
        return next(self._machine_ids)

    def record(self, err: Optional[MachineError], variant: Variant,
               machine_id: Optional[int] = None,
               trace: Optional[List[str]] = None) -> None:
        if err is None:
            return
        key = (err.kind, err.line)
        if key not in self.mid_errors:
            self.mid_errors[key] = RecordedError(
                err, list(variant.path), machine_id,
                list(trace) if trace else [])

    def _fresh_variant(self, path: List[PathCond]) -> Variant:
        v = Variant(MachineSet(), {}, list(path), next(self._orders))
        self._seed_params(v)
        return v

    def _seed_params(self, variant: Variant) -> None:
        for i, p in enumerate(self.cfg.func_scope.params):
            if p.is_pointer:
                variant.extern[p.var_id] = ExternObj(
                    next(self._extern_keys), (ORIGIN_PARAM, i))

    def _fork(self, variant: Variant, tag: PathCond) -> Variant:
        twin = variant.clone(next(self._orders))
        twin.path.append(tag)
        return twin

    # -- top-level ------------------------------------------------------------

    def run(self) -> ExploreOutcome:
        start = self._fresh_variant([])
        flow, brk, cont, fin = self._run_seq(self.cfg.structure, [start])
        exit_line = self.cfg.node(self.cfg.exit).line
        if self.path_insensitive:
            self.cfg.stream.diagnostics.append(Diagnostic(
                "PathBudgetExceeded",
                f"variant budget ({self.budget}) exceeded in "
                f"{self.cfg.func.func_name}; merged paths pessimistically",
                self.cfg.stream.file, self.cfg.node(self.cfg.entry).line, 1))
        # stray break/continue outside a loop just fall off the end
        variants = fin + flow + brk + cont
        return ExploreOutcome(variants, list(self.mid_errors.values()),
                              self.path_insensitive, exit_line)

    # -- structure walk -------------------------------------------------------

    def _run_seq(self, items: list, variants: List[Variant]):
        flowing = variants
        broken: List[Variant] = []
        continued: List[Variant] = []
        finished: List[Variant] = []
        for idx, item in enumerate(items):
            if not flowing:
                if idx < len(items):
                    flowing = [self._fresh_variant([("", "dead")])]
                else:
                    break
            if len(flowing) > self.budget:
                self.path_insensitive = True
                flowing = [self._merge_all(flowing)]
            flowing, b, c, f = self._run_item(item, flowing)
            broken.extend(b)
            continued.extend(c)
            finished.extend(f)
        return flowing, broken, continued, finished

    def _run_item(self, item, variants: List[Variant]):
        if isinstance(item, SeqStmt):
            for v in variants:
                self._apply_node(v, item.node)
            return variants, [], [], []
        if isinstance(item, ReturnStmt):
            for v in variants:
                self._apply_node(v, item.node)
                v.has_returned = True
            return [], [], [], variants
        if isinstance(item, BreakStmt):
            return [], variants, [], []
        if isinstance(item, ContinueStmt):
            return [], [], variants, []
        if isinstance(item, IfStruct):
            return self._run_if(item, variants)
        if isinstance(item, LoopStruct):
            return self._run_loop(item, variants)
        if isinstance(item, SwitchStruct):
            return self._run_switch(item, variants)
        raise TypeError(f"unknown structure item {item!r}")

    def _split(self, variants: List[Variant], ways: int) -> List[Variant]:
        if len(variants) * ways > self.budget:
            self.path_insensitive = True
            return [self._merge_all(variants)]
        return variants

    def _run_if(self, item: IfStruct, variants: List[Variant]):
        branch = self.cfg.node(item.branch)
        for v in variants:
            self._apply_node(v, item.branch)
        variants = self._split(variants, 2)
        guard = branch.guard_text
        (then_tag, then_items), (else_tag, else_items) = item.arms
        then_in = [self._fork(v, (guard, then_tag)) for v in variants]
        for v in variants:
            v.path.append((guard, else_tag))
        f1, b1, c1, fin1 = self._run_seq(then_items, then_in)
        f2, b2, c2, fin2 = self._run_seq(else_items, variants)
        return f1 + f2, b1 + b2, c1 + c2, fin1 + fin2

    def _run_loop(self, item: LoopStruct, variants: List[Variant]):
        broken: List[Variant] = []
        continued_out: List[Variant] = []
        finished: List[Variant] = []

        if item.style == "dowhile":
            entering = variants
            skipping: List[Variant] = []
        else:
            for v in variants:
                self._apply_node(v, item.head)
            variants = self._split(variants, 2)
            guard = self.cfg.node(item.head).guard_text
            entering = [self._fork(v, (guard, "loop")) for v in variants]
            skipping = variants

        flow = entering
        for _pass in range(2):
            flow, brk, cont, fin = self._run_seq(item.body, flow)
            finished.extend(fin)
            broken.extend(brk)
            flow = flow + cont  # continue rejoins before the trailer
            if item.trailer:
                flow, b2, c2, f2 = self._run_seq(item.trailer, flow)
                broken.extend(b2)
                continued_out.extend(c2)
                finished.extend(f2)
            for v in flow:
                self._apply_node(v, item.head)
            if len(flow) > self.budget:
                self.path_insensitive = True
                flow = [self._merge_all(flow)] if flow else []
        return skipping + flow + broken, [], continued_out, finished

    def _run_switch(self, item: SwitchStruct, variants: List[Variant]):
        branch = self.cfg.node(item.branch)
        for v in variants:
            self._apply_node(v, item.branch)
        ways = len(item.arms) + (0 if item.has_default else 1)
        variants = self._split(variants, max(ways, 1))
        guard = branch.guard_text

        flowing_out: List[Variant] = []
        broken: List[Variant] = []
        continued: List[Variant] = []
        finished: List[Variant] = []
        fall: List[Variant] = []
        for tag, items in item.arms:
            entries = [self._fork(v, (guard, tag)) for v in variants] + fall
            flow, brk, cont, fin = self._run_seq(items, entries)
            fall = flow
            broken.extend(brk)
            continued.extend(cont)
            finished.extend(fin)
        flowing_out.extend(fall)
        flowing_out.extend(broken)  # break leaves the switch, not a loop
        if not item.has_default:
            flowing_out.extend(variants)
        return flowing_out, [], continued, finished

    # -- merging --------------------------------------------------------------

    _STATE_RANK = {MemState.ALLOCED: 3, MemState.FREED: 2,
                   MemState.END: 1, MemState.ERROR: 0, MemState.START: 0}

    def _merge_all(self, variants: List[Variant]) -> Variant:
        base = variants[0]
        for other in variants[1:]:
            self._merge_into(base, other)
        return base

    def _merge_into(self, base: Variant, other: Variant) -> None:
        for mid, m in other.machines.by_id.items():
            mine = base.machines.by_id.get(mid)
            if mine is None:
                base.machines.by_id[mid] = m
                continue
            if self._STATE_RANK[m.state] > self._STATE_RANK[mine.state]:
                keep, drop = m, mine
                base.machines.by_id[mid] = m
            else:
                keep, drop = mine, m
            if keep.state == drop.state:
                keep.owners |= drop.owners
            keep.escaped = keep.escaped or drop.escaped
            keep.tainted = keep.tainted or drop.tainted
            keep.record = keep.record and drop.record
            if keep.partial_path is None:
                keep.partial_path = drop.partial_path
        for var, obj in other.extern.items():
            mine_obj = base.extern.get(var)
            if mine_obj is None:
                base.extern[var] = obj
                continue
            for rec in obj.freed:
                if rec not in mine_obj.freed:
                    mine_obj.freed.append(rec)
            if obj.status == ST_UNKNOWN or mine_obj.status == ST_UNKNOWN:
                mine_obj.status = ST_UNKNOWN

    # -- event application ----------------------------------------------------

    def _apply_node(self, variant: Variant, node_id: int) -> None:
        node = self.cfg.node(node_id)
        for ev in node_events(self.cfg, node, self.catalog, self.site_map):
            if isinstance(ev, AllocEvent):
                self._do_alloc(variant, ev)
            elif isinstance(ev, FreeEvent):
                self._do_free(variant, ev)
            elif isinstance(ev, AssignEvent):
                self._do_assign(variant, ev)
            elif isinstance(ev, NullAssignEvent):
                self._do_null(variant, ev)
            elif isinstance(ev, PtrArithEvent):
                self._do_arith(variant, ev)
            elif isinstance(ev, ReturnVarEvent):
                self._do_return(variant, ev)
            elif isinstance(ev, CallEvent):
                handler = self.call_handler or default_call_effect
                handler(self, variant, ev)

    def _do_alloc(self, variant: Variant, ev: AllocEvent) -> None:
        machine, errors = variant.machines.on_alloc(
            self.new_machine_id(), ev.owner, ev.fn, ev.line)
        for err in errors:
            self.record(err, variant)
        if ev.owner == RETURN_SLOT:
            machine.mark_escaped()
        else:
            variant.extern.pop(ev.owner, None)
            sym = self.symbols.get(ev.owner)
            if sym is not None and (sym.is_member or sym.is_global_or_static):
                machine.mark_escaped("stored beyond the function")

    def _do_free(self, variant: Variant, ev: FreeEvent) -> None:
        owners = variant.machines.owning(ev.var)
        if owners:
            for m in owners:
                self.record(m.release(ev.fn, ev.line), variant, m.id, m.trace)
            return
        obj = self._extern_obj(variant, ev.var)
        if obj is None or obj.status != ST_ACTIVE:
            return
        if obj.freed:
            self.record(MachineError(
                DefectKind.DOUBLE_FREE, ev.line,
                f"{ev.var_name} released again (first released at line "
                f"{obj.freed[0][0]})"), variant)
        obj.freed.append((ev.line, ev.fn))

    def _do_assign(self, variant: Variant, ev: AssignEvent) -> None:
        for m in variant.machines.live():
            self.record(m.assign(ev.dst, ev.src, ev.line, self.strict),
                        variant, m.id, m.trace)
        variant.extern.pop(ev.dst, None)
        if not variant.machines.owning(ev.src):
            src_obj = self._extern_obj(variant, ev.src)
            if src_obj is not None:
                variant.extern[ev.dst] = src_obj

    def _do_null(self, variant: Variant, ev: NullAssignEvent) -> None:
        for m in variant.machines.owning(ev.var):
            self.record(m.drop_owner(ev.var, ev.line, "set to null"),
                        variant, m.id, m.trace)
        variant.extern.pop(ev.var, None)

    def _do_arith(self, variant: Variant, ev: PtrArithEvent) -> None:
        for m in variant.machines.owning(ev.var):
            self.record(m.drop_owner(ev.var, ev.line,
                                     "advanced by pointer arithmetic"),
                        variant, m.id, m.trace)
        obj = self._extern_obj(variant, ev.var)
        if obj is not None:
            obj.status = ST_UNKNOWN

    def _do_return(self, variant: Variant, ev: ReturnVarEvent) -> None:
        for m in variant.machines.owning(ev.var):
            m.mark_escaped()
        variant.returned_var = ev.var

    def _extern_obj(self, variant: Variant, var: int) -> Optional[ExternObj]:
        obj = variant.extern.get(var)
        if obj is not None:
            return obj
        sym = self.symbols.get(var)
        if sym is not None and (sym.is_member or sym.is_global_or_static):
            obj = ExternObj(next(self._extern_keys), (ORIGIN_GLOBAL, var))
            variant.extern[var] = obj
            return obj
        return None

    def repoint(self, variant: Variant, var: int, line: int, cause: str) -> None:
        """The variable now holds an unrelated value (call result etc.)."""
        for m in variant.machines.owning(var):
            self.record(m.drop_owner(var, line, cause), variant, m.id, m.trace)
        variant.extern.pop(var, None)


def default_call_effect(interp: Interp, variant: Variant, ev: CallEvent) -> None:
    """Unknown callee: taint pointer arguments, result overwrites dst."""
    for var_id in ev.args:
        if var_id is None:
            continue
        sym = interp.symbols.get(var_id)
        if sym is not None and not sym.is_pointer:
            continue
        for m in variant.machines.owning(var_id):
            m.taint()
        obj = variant.extern.get(var_id)
        if obj is not None:
            obj.status = ST_UNKNOWN
    if ev.dst is not None and ev.dst != RETURN_SLOT:
        interp.repoint(variant, ev.dst, ev.line, "reassigned from a call result")


def explore(cfg: Cfg, catalog: Sequence[DefectPattern],
            site_map: Dict[int, FuncId],
            symbols: Dict[int, SymbolEntry],
            call_handler: Optional[CallHandler] = None,
            strict: bool = False,
            budget: int = PATH_BUDGET) -> ExploreOutcome:
    return Interp(cfg, catalog, site_map, symbols,
                  call_handler, strict, budget).run()


def finish_variants(outcome: ExploreOutcome) -> List[RecordedError]:
    """Close every machine at function exit and classify leaks.

    A machine leaking in every variant that contains it is an outright
    missing release (empty path condition).  Leaking on only some paths
    downgrades to the path-conditional kind, tagged with the first
    offending variant's path.  Partial releases recorded from callee
    summaries keep the callee's own path condition.
    """
    per_machine: Dict[int, List[Tuple[Variant, Machine, Optional[MachineError]]]] = {}
    for variant in outcome.variants:
        for mid, machine in sorted(variant.machines.by_id.items()):
            if machine.settled():
                err: Optional[MachineError] = None
            else:
                err = machine.finish(outcome.exit_line)
            per_machine.setdefault(mid, []).append((variant, machine, err))

    results: List[RecordedError] = []
    for mid in sorted(per_machine):
        entries = per_machine[mid]
        leaks = [(v, m, e) for v, m, e in entries if e is not None]
        if not leaks:
            continue
        first_v, first_m, first_e = min(leaks, key=lambda t: t[0].order)
        if first_e.kind is DefectKind.PATH_MISSING_RELEASE:
            path = list(first_m.partial_path or [])
            results.append(RecordedError(first_e, path, mid,
                                          list(first_m.trace)))
        elif len(leaks) == len(entries):
            results.append(RecordedError(first_e, [], mid,
                                          list(first_m.trace)))
        else:
            err = MachineError(
                DefectKind.PATH_MISSING_RELEASE, first_e.line,
                f"block allocated at line {first_e.line} is released on "
                f"some paths but not on all")
            results.append(RecordedError(err, list(first_v.path), mid,
                                          list(first_m.trace)))
    return results
