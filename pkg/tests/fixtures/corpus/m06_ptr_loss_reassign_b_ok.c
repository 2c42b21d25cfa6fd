void refill_ok(int n) {
    char *slot = malloc(n);
    free(slot);
    slot = malloc(n + 1);
    free(slot);
}
