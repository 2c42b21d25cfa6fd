class RecordOk {
public:
    virtual ~RecordOk();
    int id;
};

class TaggedRecordOk : public RecordOk {
public:
    int tag;
};
