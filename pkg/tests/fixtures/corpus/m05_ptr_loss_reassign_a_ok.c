void swap_target_ok(char *other) {
    char *p = malloc(16);
    free(p);
    p = other;
}
