// A second allocation lands in the variable while the first is live.
void refill(int n) {
    char *slot = malloc(n);
    slot = malloc(n + 1);  // EXPECT-LEAK: PointerOwnershipLost
    free(slot);
}
