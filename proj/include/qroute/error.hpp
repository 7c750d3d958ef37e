#pragma once

#include <stdexcept>
#include <string>

namespace qroute {

// Bad arguments or configuration supplied by the caller. The CLI maps this to exit code 2.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data (dataset, embedding file, model file).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace qroute
