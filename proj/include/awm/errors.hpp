#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace awm {

enum class ErrorKind {
  Domain,
  Quadrature,
  Resolution,
  InsufficientData,
  Numerical,
  CompressionLimit,
  Spectral,
  DataResolution,
  NonConvergence,
  Assembly,
  Stagnation,
  Lookup,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Base of every error raised by the library. The kind is stable and is what
/// the command line tool prints in its machine-readable failure line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& m) : Error(ErrorKind::Domain, m) {}
};

class QuadratureError : public Error {
 public:
  explicit QuadratureError(const std::string& m)
      : Error(ErrorKind::Quadrature, m) {}
};

class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& m, double tail_bound)
      : Error(ErrorKind::Resolution, m), tail_bound_(tail_bound) {}
  double tail_bound() const noexcept { return tail_bound_; }

 private:
  double tail_bound_;
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& m)
      : Error(ErrorKind::InsufficientData, m) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& m)
      : Error(ErrorKind::Numerical, m) {}
};

class CompressionLimitError : public Error {
 public:
  CompressionLimitError(const std::string& m, double achievable)
      : Error(ErrorKind::CompressionLimit, m), achievable_(achievable) {}
  /// Smallest certified accuracy the compression profile can deliver.
  double achievable() const noexcept { return achievable_; }

 private:
  double achievable_;
};

class SpectralError : public Error {
 public:
  explicit SpectralError(const std::string& m)
      : Error(ErrorKind::Spectral, m) {}
};

class DataResolutionError : public Error {
 public:
  explicit DataResolutionError(const std::string& m)
      : Error(ErrorKind::DataResolution, m) {}
};

class AssemblyError : public Error {
 public:
  explicit AssemblyError(const std::string& m)
      : Error(ErrorKind::Assembly, m) {}
};

class StagnationError : public Error {
 public:
  explicit StagnationError(const std::string& m)
      : Error(ErrorKind::Stagnation, m) {}
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& m) : Error(ErrorKind::Lookup, m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};

}  // namespace awm
