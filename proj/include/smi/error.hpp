#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smi {

enum class ErrorKind {
  config,
  format,
  data,
  shape,
  index,
  lookup,
  capacity,
  argument,
  consistency,
  provider,
  numerical,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind; the CLI maps kinds to
// process exit codes (see exit_code).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }
  // what() without the kind prefix
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

// 2 for configuration problems, 4 for numerical failures, 3 for everything
// that is wrong with the input data.
int exit_code(ErrorKind kind);

}  // namespace smi
