#pragma once

#include <stdexcept>
#include <string>

namespace nvdesign {

// The three error families map one-to-one onto the CLI exit codes
// (config = 2, I/O = 3, numeric/domain = 4).

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised by shard readers. `record_index` is the first record that could
/// not be decoded, or -1 when the failure is in the header.
class FormatError : public IoError {
 public:
  FormatError(const std::string& what, long long record_index = -1)
      : IoError(what), record_index_(record_index) {}
  long long record_index() const noexcept { return record_index_; }

 private:
  long long record_index_;
};

}  // namespace nvdesign
