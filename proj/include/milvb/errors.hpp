#pragma once

#include <stdexcept>
#include <string>

namespace milvb {

// Raised when arguments, configuration, or preconditions are invalid.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when input data (files, datasets, labels) is malformed or
// inconsistent. The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace milvb
