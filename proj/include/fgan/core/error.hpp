#pragma once

#include <stdexcept>
#include <string>

namespace fgan {

/// Base of every domain error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define FGAN_DEFINE_ERROR(Name)                                          \
  class Name : public ::fgan::Error {                                    \
   public:                                                               \
    explicit Name(const std::string& what) : ::fgan::Error(#Name, what) {} \
  }

FGAN_DEFINE_ERROR(ShapeMismatch);
FGAN_DEFINE_ERROR(EmptyBatch);
FGAN_DEFINE_ERROR(CheckpointMismatch);
FGAN_DEFINE_ERROR(IoError);
FGAN_DEFINE_ERROR(ConfigError);

}  // namespace fgan
