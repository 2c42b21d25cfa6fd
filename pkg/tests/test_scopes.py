"""Scope trees, innermost-outward resolution, and class metadata.

The shadowing fixtures are generated with ground truth recorded at
emission time: every block declares its variables with a type unique to
its nesting depth, so the type of a resolved entry reveals which
declaration won.  A plain chain-walking resolver double-checks the
production one on the same fixtures.
"""

from __future__ import annotations

import random

from hypothesis import given, settings, strategies as st

from zkleak.scopes import (
    ScopeKind,
    build_scope_tree,
    collect_class_info,
    dump_scopes,
    resolve,
)
from zkleak.tokens import tokenize

# ---------------------------------------------------------------------------
# Shadowing fixtures with recorded ground truth
# ---------------------------------------------------------------------------

_LEVEL_TYPES = ["int", "char", "float", "double", "long", "short"]


def make_shadowing_fixture(seed: int):
    """Return ``(source, uses)`` where each use is (name, line, depth|None)."""
    rng = random.Random(seed)
    lines: list = []
    uses: list = []
    stacks = {"x": [], "y": []}

    def emit(text: str) -> int:
        lines.append(text)
        return len(lines)

    def declare_some(depth: int) -> list:
        declared = []
        for name in ("x", "y"):
            if rng.random() < 0.6:
                emit(f"{_LEVEL_TYPES[depth]} {name} ;")
                stacks[name].append(depth)
                declared.append(name)
        return declared

    def use_some() -> None:
        for name in ("x", "y"):
            if rng.random() < 0.7:
                line = emit(f"{name} = 0 ;")
                depth = stacks[name][-1] if stacks[name] else None
                uses.append((name, line, depth))

    def block(depth: int) -> None:
        emit("{")
        declared = declare_some(depth)
        use_some()
        if depth < 4 and rng.random() < 0.8:
            block(depth + 1)
        use_some()
        emit("}")
        for name in declared:
            stacks[name].pop()

    declare_some(0)
    emit("void f ( )")
    block(1)
    return "\n".join(lines) + "\n", uses


def innermost_scope(root, index: int):
    node = root
    while True:
        for child in node.children:
            if child.token_begin <= index < child.token_end:
                node = child
                break
        else:
            return node


def chain_resolve(name: str, scope):
    """Reference lookup: walk parents, newest entry per scope wins."""
    node = scope
    while node is not None:
        entries = node.symbols.get(name)
        if entries:
            return entries[-1]
        node = node.parent
    return None


def _token_at(stream, name: str, line: int):
    hits = [i for i, t in enumerate(stream) if t.text == name and t.line == line]
    assert len(hits) == 1
    return hits[0]


def test_shadowing_fixtures_resolve_to_the_innermost_declaration():
    checked_uses = 0
    for seed in range(30):
        source, uses = make_shadowing_fixture(seed)
        stream = tokenize(source, f"shadow{seed}.c")
        root = build_scope_tree(stream)
        for name, line, depth in uses:
            idx = _token_at(stream, name, line)
            scope = innermost_scope(root, idx)
            entry = resolve(name, scope)
            assert entry is chain_resolve(name, scope)
            if depth is None:
                assert entry is None
                assert stream[idx].var_id == 0
            else:
                assert entry is not None
                assert entry.type_text.split()[0] == _LEVEL_TYPES[depth]
                assert stream[idx].var_id == entry.var_id > 0
            checked_uses += 1
    assert checked_uses > 60


def test_scope_ids_paint_the_innermost_scope():
    for seed in range(30):
        source, _ = make_shadowing_fixture(seed)
        stream = tokenize(source, f"paint{seed}.c")
        root = build_scope_tree(stream)
        for i, tok in enumerate(stream):
            assert tok.scope_id == innermost_scope(root, i).scope_id


# ---------------------------------------------------------------------------
# Tree shape
# ---------------------------------------------------------------------------

_NESTING = """\
int g ;
void f ( int a ) {
  if ( a ) {
    int b ;
  }
}
"""


def test_nesting_example():
    stream = tokenize(_NESTING, "nest.c")
    root = build_scope_tree(stream)
    assert root.kind is ScopeKind.GLOBAL
    (f,) = root.children
    assert f.kind is ScopeKind.FUNCTION and f.name == "f"
    (cond,) = f.children
    assert cond.kind is ScopeKind.IF

    assert resolve("g", cond).is_global_or_static
    a = resolve("a", cond)
    assert a is not None and not a.is_pointer
    assert resolve("b", cond) is not None
    assert resolve("b", f) is None, "block-local must not leak outward"


def test_dump_scopes_layout():
    stream = tokenize(_NESTING, "nest.c")
    root = build_scope_tree(stream)
    assert dump_scopes(root, stream) == (
        "eGlobal - [1..6]\n"
        "  eFunction f [2..6]\n"
        "    eIf - [3..5]"
    )


def test_statement_scopes_by_keyword():
    source = """\
    void f ( int n ) {
      for ( int i = 0 ; i < n ; i ++ ) { }
      while ( n ) { n -- ; }
      do { n ++ ; } while ( n < 0 ) ;
      switch ( n ) { default : break ; }
      if ( n ) { } else { }
      { int inner ; }
    }
    """
    root = build_scope_tree(tokenize(source, "kinds.c"))
    (f,) = root.children
    kinds = [c.kind for c in f.children]
    assert kinds == [
        ScopeKind.FOR,
        ScopeKind.WHILE,
        ScopeKind.DO_WHILE,
        ScopeKind.SWITCH,
        ScopeKind.IF,
        ScopeKind.ELSE,
        ScopeKind.BLOCK,
    ]


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------

def test_pointerness_is_per_declarator():
    stream = tokenize("void f ( ) { int * a , b ; char * * p ; }", "ptr.c")
    root = build_scope_tree(stream)
    (f,) = root.children
    assert resolve("a", f).is_pointer
    assert not resolve("b", f).is_pointer
    assert resolve("p", f).is_pointer


def test_pointer_typedef_carries_through():
    source = "typedef char * str_t ;\nvoid f ( ) { str_t s ; int t ; }\n"
    stream = tokenize(source, "td.c")
    root = build_scope_tree(stream)
    assert "str_t" in root.pointer_typedefs
    (f,) = root.children
    assert resolve("s", f).is_pointer
    assert not resolve("t", f).is_pointer


def test_parameters_resolve_with_pointerness():
    stream = tokenize("void f ( char * buf , int n ) { buf = 0 ; }", "par.c")
    root = build_scope_tree(stream)
    (f,) = root.children
    assert [p.name for p in f.params] == ["buf", "n"]
    assert resolve("buf", f).is_pointer
    assert not resolve("n", f).is_pointer


def test_globals_and_statics_are_flagged():
    source = "char * g ;\nvoid f ( ) { static int hits ; int local ; }\n"
    root = build_scope_tree(tokenize(source, "st.c"))
    (f,) = root.children
    assert resolve("g", f).is_global_or_static
    assert resolve("hits", f).is_global_or_static
    assert not resolve("local", f).is_global_or_static


# ---------------------------------------------------------------------------
# Class metadata
# ---------------------------------------------------------------------------

_CLASSES = """\
class Plain {
public:
  Plain();
  ~Plain() {}
  char *buf;
  int n;
};

class Owner {
public:
  Owner() { buf = new char[8]; }
  Owner(const Owner &other) { buf = new char[8]; }
  Owner &operator=(const Owner &other) { return *this; }
  ~Owner() { delete [] buf; }
  char *buf;
};

class Declared {
public:
  Declared(const Declared &other);
  Declared &operator=(const Declared &other);
  char *p;
};

class VirtualBase {
public:
  virtual ~VirtualBase() {}
};

class Derived : public VirtualBase, private Plain {
public:
  int x;
};

struct TwoCtors {
  TwoCtors() {}
  TwoCtors(int n) {}
  ~TwoCtors();
};
"""


def _class_infos():
    stream = tokenize(_CLASSES, "classes.cc")
    root = build_scope_tree(stream)
    return {info.name: info for info in collect_class_info(root, stream)}


def _is_real_body(span) -> bool:
    return span is not None and 0 <= span[0] < span[1]


def test_class_member_lists():
    infos = _class_infos()
    assert [m.name for m in infos["Plain"].members] == ["buf", "n"]
    assert [m.name for m in infos["Plain"].pointer_members] == ["buf"]
    assert [m.name for m in infos["Derived"].members] == ["x"]
    assert infos["Derived"].pointer_members == []


def test_special_member_manifest():
    infos = _class_infos()

    plain = infos["Plain"]
    assert _is_real_body(plain.dtor) and plain.has_dtor_decl
    assert not plain.dtor_is_virtual
    assert plain.copy_ctor is None and plain.assign_op is None

    owner = infos["Owner"]
    assert len(owner.ctors) == 2
    assert _is_real_body(owner.copy_ctor)
    assert _is_real_body(owner.assign_op)
    assert _is_real_body(owner.dtor)

    declared = infos["Declared"]
    assert declared.copy_ctor is not None and not _is_real_body(declared.copy_ctor)
    assert declared.assign_op is not None and not _is_real_body(declared.assign_op)
    assert declared.ctors == [] and declared.dtor is None

    assert infos["VirtualBase"].dtor_is_virtual

    two = infos["TwoCtors"]
    assert len(two.ctors) == 2
    assert two.has_dtor_decl and two.dtor is None


def test_base_classes_in_order():
    infos = _class_infos()
    assert infos["Derived"].bases == ["VirtualBase", "Plain"]
    assert infos["Plain"].bases == []


def test_out_of_line_member_sees_fields():
    source = """\
    class K {
    public:
      char *p;
      void m();
    };
    void K::m() { p = 0; }
    """
    stream = tokenize(source, "k.cc")
    root = build_scope_tree(stream)
    m = next(s for s in root.function_scopes
             if s.name == "m" and s.owner_class == "K")
    entry = resolve("p", m)
    assert entry is not None and entry.is_member


# ---------------------------------------------------------------------------
# Robustness on arbitrary token soup
# ---------------------------------------------------------------------------

_SOUP = [
    "a", "b", "int", "char", "class", "if", "while", "for", "return",
    "0", "1", "=", ";", ",", "*", "(", ")", "{", "}", "[", "]", ":",
    "void", "new", "delete", "~", "#",
]


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=60, deadline=None)
def test_scope_tree_survives_token_soup(seed):
    rng = random.Random(seed)
    source = " ".join(rng.choice(_SOUP) for _ in range(rng.randint(0, 120)))
    stream = tokenize(source, "soup.c")
    root = build_scope_tree(stream)
    assert root.kind is ScopeKind.GLOBAL

    def check(node, lo: int, hi: int) -> None:
        assert 0 <= lo <= node.token_begin <= node.token_end <= hi
        inner_lo = node.token_begin
        for child in node.children:
            check(child, inner_lo, node.token_end)
            inner_lo = child.token_end

    for child in root.children:
        check(child, 0, len(stream))
    assert stream.scoped
