#include "asmqa/error.hpp"

namespace asmqa {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::data: return "data";
        case ErrorKind::io: return "io";
        case ErrorKind::protocol: return "protocol";
        case ErrorKind::precondition: return "precondition";
    }
    return "unknown";
}

}  // namespace asmqa
