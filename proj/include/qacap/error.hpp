#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qacap {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file. `location` is a byte offset for JSON documents and a
// 1-based line number for JSONL files.
class ParseError : public Error {
public:
    enum class Unit { Byte, Line };

    ParseError(const std::string& what, Unit unit, std::size_t location)
        : Error(what), unit_(unit), location_(location) {}

    Unit unit() const noexcept { return unit_; }
    std::size_t location() const noexcept { return location_; }

private:
    Unit unit_;
    std::size_t location_;
};

// Well-formed input that violates a data invariant (duplicate id, length
// mismatch, unknown reference).
class DataError : public Error {
public:
    using Error::Error;
};

// Argument outside its documented range.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Operation would produce an empty or otherwise degenerate image.
class GeometryError : public Error {
public:
    using Error::Error;
};

// Matrix shapes disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace qacap
