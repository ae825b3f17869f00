#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dsn {

// Caller broke a documented precondition. Programming error, not user input.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad user-supplied configuration (config file, CLI flag, dimension mismatch).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem-level failure (open/read/write/rename).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally invalid on-disk data. Carries the byte offset of the defect.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace dsn
