#pragma once

#include <stdexcept>
#include <string>

namespace halrm {

// Input failed a type invariant or a command was given bad arguments.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stored or fixture data is missing, malformed or inconsistent.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transport-level failure talking to an OSINT source.
class NetworkError : public std::runtime_error {
 public:
  explicit NetworkError(const std::string& what, int status = 0)
      : std::runtime_error(what), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace halrm
