#pragma once

#include <stdexcept>
#include <string>

namespace physem {

enum class ErrorKind {
    InvalidInput,  // malformed arguments, dimension mismatches, undecodable images
    Validation,    // ontology documents that violate their invariants
    InvalidTeach,  // teaching a label that names a composite concept
    NotFound,
    Conflict,      // another writer holds the ontology; retry later
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace physem
