void wrap_node_ok(int v) {
    int *node = new int;
    delete node;
}
