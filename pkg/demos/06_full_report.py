# End-to-end: analyze annotated sources, score the claims, and emit
# the same text/JSON the command line prints.
#
# Equivalent shell usage:
#   zkleak src/dir --format json --metrics inline
#   zkleak file.c --dump-summaries
#   zkleak file.c --patterns extra.txt

import json

from zkleak import run

LEAKY = """\
void a ( int n ) {
    char * p ;
    p = malloc ( n ) ;  // EXPECT-LEAK: MissingRelease
}
"""

CLEAN = """\
void b ( int n ) {
    char * p ;
    p = malloc ( n ) ;
    free ( p ) ;
}
"""

# This loop always frees p at runtime (the countdown reaches zero), but
# guard feasibility is out of scope, so the not-taken arm survives and
# gets claimed.  The EXPECT-FP annotation tells the scorer the claim is
# known to be wrong: it lands in the false-claim count instead of the
# catch count.
NOISY = """\
void c ( int n ) {
    char * p ;
    p = malloc ( n ) ;  // EXPECT-FP: PathMissingRelease
    int done = 0 ;
    while ( ! done ) {
        if ( n <= 0 ) {
            free ( p ) ;
            break ;
        }
        n -- ;
    }
}
"""

report = run([("leaky.c", LEAKY), ("clean.c", CLEAN), ("noisy.c", NOISY)],
             inline_annotations=True)

print(report.render_text())
print()

print("metrics:", report.metrics.to_json())
print()

blob = report.to_json()
print("json keys:", sorted(blob))
print("first defect record:")
print(json.dumps(blob["defects"][0], indent=2))
