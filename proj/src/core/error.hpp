#pragma once

#include <stdexcept>
#include <string>

namespace wmlab {

enum class ErrorKind {
  Parameter,    // value outside a documented domain
  Shape,        // dimension mismatch
  Format,       // malformed file contents
  Capacity,     // dimension overflow / capacity mismatch
  Key,          // invalid watermark key material
  Calibration,  // empty or insufficient null population
  Degenerate,   // zero-norm vectors and similar
  Validation,   // schema / config violations
  Io,           // unreadable or unwritable files
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace wmlab
