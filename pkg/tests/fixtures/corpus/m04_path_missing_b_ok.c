void parse_header_ok(int size) {
    char *hdr = malloc(64);
    if (size < 64) {
        free(hdr);
        return;
    }
    free(hdr);
}
