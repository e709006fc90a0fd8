#pragma once

#include <stdexcept>
#include <string>

namespace rasc {

// Failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kInvalidArgument,
  kShape,
  kNumeric,
  kIo,
  kUnsupportedFormat,
  kModelLoad,
  kBitstream,
  kDecode,
  kTraining,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

const char* to_string(ErrorKind kind);

}  // namespace rasc
