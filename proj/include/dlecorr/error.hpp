#pragma once

#include <stdexcept>
#include <string>

namespace dlecorr {

// Every library failure is one of these; `kind()` is a stable machine tag
// (the CLI maps tags to exit codes), `what()` is the human message.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

struct SignatureError : Error {
  using Error::Error;
};
struct ParseError : Error {
  ParseError(const std::string& msg, size_t pos)
      : Error("SyntaxError", msg + " (at position " + std::to_string(pos) + ")"), position(pos) {}
  size_t position;
};
struct SortError : Error {
  explicit SortError(const std::string& msg) : Error("SortError", msg) {}
};
struct RuleError : Error {
  using Error::Error;
};
struct ClassifyError : Error {
  using Error::Error;
};
struct KrachtError : Error {
  using Error::Error;  // kind = "NotKracht(<reason>)"
};
struct OracleError : Error {
  using Error::Error;
};

}  // namespace dlecorr
