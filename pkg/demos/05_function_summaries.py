"""Interprocedural analysis through two-line function summaries.

Instead of inlining callees, each defined function is reduced to a
handful of (owner, action, path) entries: which parameter or return
slot gains a fresh block, which parameter gets released, and on which
guard arms.  Call sites then apply the callee summary to the caller's
machines.
"""

from zkleak import build_fcg, build_scope_tree, dump_summaries, tokenize
from zkleak.patterns import catalog_patterns
from zkleak.summaries import update_all

SOURCE = """\
char * make_buf ( int n ) {
    char * p ;
    p = malloc ( n ) ;
    return p ;
}

void drop_buf ( char * p ) {
    free ( p ) ;
}

void maybe_drop ( char * p , int keep ) {
    if ( keep ) {
        return ;
    }
    free ( p ) ;
}

void balanced ( int n ) {
    char * b ;
    b = make_buf ( n ) ;
    drop_buf ( b ) ;
}

void leaky ( int n , int keep ) {
    char * b ;
    b = make_buf ( n ) ;
    maybe_drop ( b , keep ) ;
}
"""

stream = tokenize(SOURCE, "demo.c")
root = build_scope_tree(stream)
fcg = build_fcg([(root, stream)])
result = update_all([(root, stream)], fcg, catalog_patterns(None))

# Leaves are summarized first, then callers, so make_buf's "the return
# value is a fresh malloc block" is known by the time balanced() and
# leaky() are walked.
print("summaries (function | owner | action | guard path):")
print(dump_summaries(result))
print()

print("claims:")
for d in result.defects:
    print(" ", d.render())
print()
print("balanced() is clean: the summary of drop_buf() released the")
print("block.  leaky() is claimed only on the keep-arm, with the guard")
print("condition attached to the claim.")
