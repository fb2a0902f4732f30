#pragma once

#include <stdexcept>
#include <string>

namespace agrame {

enum class ErrorKind {
  InvalidArgument,
  InvalidSpan,
  DimMismatch,
  MarkerMismatch,
  Io,
  Format,
  Corrupt,
  Data,
  Diverged,
};

// Every failure raised by the library carries a kind so the C boundary can
// translate it into a status code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace agrame
