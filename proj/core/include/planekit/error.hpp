#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace planekit {

enum class ErrorKind {
  kConfiguration,
  kDegenerateSample,
  kDomain,
  kDecode,
  kFormat,
  kGeneration,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a category so front ends can
// map it to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace planekit
