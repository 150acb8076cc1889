#include "trajnet/errors.hpp"

namespace trajnet {

ParseError::ParseError(const std::string& file, long line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

}  // namespace trajnet
