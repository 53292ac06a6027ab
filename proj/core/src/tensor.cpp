#include "eo2sar/tensor.hpp"

#include <sstream>

#include "eo2sar/errors.hpp"

namespace eo2sar {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d < 1) {
            throw ConfigError("tensor shape " + shape_str(shape) +
                              " has a non-positive extent");
        }
        n *= d;
    }
    return n;
}

}  // namespace eo2sar
