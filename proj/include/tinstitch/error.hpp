#pragma once

#include <stdexcept>
#include <string>

namespace tinstitch {

// Root of every error thrown by the engine.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Tensor dimensions do not fit the operation (empty output, out-of-bounds window, ...).
class ShapeError : public Error
{
public:
  using Error::Error;
};

// Inconsistent configuration: channel mismatch, K <= S, forbidden norm variant, ...
class ConfigError : public Error
{
public:
  using Error::Error;
};

// Plain per-input normalization (in/iw) in a graph run patch by patch.
class PatchNormError : public ConfigError
{
public:
  using ConfigError::ConfigError;
};

// Statistics bank used in the wrong mode or missing an entry.
class StateError : public Error
{
public:
  using Error::Error;
};

enum class LoadErrorKind
{
  Io,
  BadMagic,
  Truncated,
  DuplicateName,
  BadDtype,
  MissingWeight,
  BadFormat,
};

class LoadError : public Error
{
public:
  LoadError(LoadErrorKind kind, const std::string& what)
    : Error(what), kind_(kind) {}

  LoadErrorKind kind() const noexcept { return kind_; }

private:
  LoadErrorKind kind_;
};

} // namespace tinstitch
