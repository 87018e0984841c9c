#pragma once

#include <stdexcept>
#include <string>

namespace gradsort {

// Failure categories. The CLI and C API map these onto exit/status codes.
enum class ErrorKind {
  usage,      // bad parameters or arguments
  dimension,  // shape mismatch between operands
  data,       // malformed or degenerate input data
  numeric,    // overflow, NaN, division guard
  unsupported
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::data: return "data";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::unsupported: return "unsupported";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace gradsort
