#pragma once

#include <stdexcept>
#include <string>

namespace dagnet {

/// Domain error raised by library operations (bad input, violated precondition).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse error in a dagnet-v1 document; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace dagnet
