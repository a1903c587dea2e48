#pragma once

#include <stdexcept>
#include <string>

namespace partfuse {

/// Base of every error raised by the toolkit. `code()` is a short stable
/// kebab-case tag ("bad-magic", "unknown-parent", ...) usable in tests and logs.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// File missing, unreadable or unwritable. The CLI maps this to exit code 2.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed content or violated domain invariant. The CLI maps this to exit code 3.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace partfuse
