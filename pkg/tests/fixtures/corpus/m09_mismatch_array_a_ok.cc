void resize_table_ok(int n) {
    int *table = new int[n];
    delete [] table;
}
