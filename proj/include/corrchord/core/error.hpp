#pragma once

#include <stdexcept>
#include <string>

namespace corrchord {

/// Malformed or inconsistent input data (files, specs, headers).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An index, level, filter bound or count outside its valid range.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// A dependence measure that is undefined for its input (e.g. constant series).
class DegenerateError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Argument outside a function's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Refinement requested below single-voxel resolution.
class FinestLevelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace corrchord
