void rewind_all_ok(int n) {
    int *mark = malloc(n);
    int *walk = mark;
    --walk;
    free(mark);
}
