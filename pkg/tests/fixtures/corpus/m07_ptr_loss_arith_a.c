// Walking the only pointer forward abandons the base address.
void scan(int n) {
    char *cur = malloc(n);
    cur++;  // EXPECT-LEAK: PointerOwnershipLost
}
