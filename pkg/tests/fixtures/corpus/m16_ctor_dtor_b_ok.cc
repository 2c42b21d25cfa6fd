class JournalOk {
public:
    JournalOk(int n) {
        lines = new char[n];
    }
    ~JournalOk() {
        delete [] lines;
    }
    JournalOk(const JournalOk &other);
    JournalOk &operator=(const JournalOk &other);
private:
    char *lines;
};
