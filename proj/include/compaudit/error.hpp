#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace compaudit {

// All library errors carry a short class name (e.g. "NonBinaryValue") that the
// CLI prints on stderr. Ingestion failures map to exit code 2, violated
// preconditions to exit code 3.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& message)
      : std::runtime_error(message), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] inline void throw_ingest(std::string name, const std::string& message) {
  throw IngestError(std::move(name), message);
}

[[noreturn]] inline void throw_precondition(std::string name, const std::string& message) {
  throw PreconditionError(std::move(name), message);
}

}  // namespace compaudit
