class PacketOk {
public:
    PacketOk(int n) {
        body = new char[n];
    }
    ~PacketOk() {
        delete [] body;
    }
    PacketOk(const PacketOk &other);
    PacketOk &operator=(const PacketOk &other);
private:
    char *body;
};
