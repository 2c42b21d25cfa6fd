class ShapeOk {
public:
    virtual ~ShapeOk() {
        tag = 0;
    }
    int tag;
};

class WidgetOk : public ShapeOk {
public:
    int weight;
};
