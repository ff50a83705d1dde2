#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace wsiroi {

// Bad input data or arguments. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Slide or annotation dimensions disagree with the manifest.
class DimensionMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Model graph input/output shapes disagree with the model manifest.
class ShapeMismatchError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Filesystem failure. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& what, std::filesystem::path path)
      : std::runtime_error(what + ": " + path.string()), path_(std::move(path)) {}

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

// File exists but cannot be decoded (truncated, corrupt, unsupported).
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace wsiroi
