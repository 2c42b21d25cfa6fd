void scan_ok(int n) {
    char *base = malloc(n);
    char *cur = base;
    cur++;
    free(base);
}
