#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace namedis {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `offset` is the byte offset into the file.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Input parses but violates a data contract (duplicate ids, bad labels...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A numerical stage failed (divergence, non-finite update).
class StageError : public Error {
 public:
  using Error::Error;
};

}  // namespace namedis
