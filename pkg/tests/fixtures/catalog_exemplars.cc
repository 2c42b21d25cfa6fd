// One line per builtin catalog entry, so coverage tests can demand that
// every shipped pattern matches at least once somewhere in the fixtures.
// The bodies are deliberately defective; this file is about matching,
// not about clean verdicts, and is kept out of the scored corpus.

char *exercise_allocs(int n, char *old) {
    char *a = malloc(n);            // alloc.malloc
    char *b = calloc(n, 1);         // alloc.calloc
    char *c = realloc(old, n);      // alloc.realloc
    int *d = new int;               // alloc.new
    int *e = new int[n];            // alloc.new_array
    free(a);                        // free.free
    delete d;                       // free.delete
    delete [] e;                    // free.delete_array
    b = c;                          // transfer.assign
    return b;                       // transfer.return
}

void exercise_transfers(int n) {
    char *p = malloc(n);
    char *q = p;
    p++;                            // transfer.incr_post
    q--;                            // transfer.decr_post
    ++p;                            // transfer.incr_pre
    --q;                            // transfer.decr_pre
    p = NULL;                       // transfer.null_assign
}
