#pragma once

#include <stdexcept>
#include <string>

namespace bell_lab {

/// Input outside the validity domain of a model or operation.
class DomainError : public std::invalid_argument {
public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// A ratio or fit whose denominator/design collapses for the given data.
class DegenerateInputError : public DomainError {
public:
  explicit DegenerateInputError(const std::string& what) : DomainError(what) {}
};

/// Singles rate times coincidence window reached 1; the accidental model no longer applies.
class SaturationError : public DomainError {
public:
  explicit SaturationError(const std::string& what) : DomainError(what) {}
};

/// The maximal CH value never turns positive on (0, 1].
class NoThresholdError : public DomainError {
public:
  explicit NoThresholdError(const std::string& what) : DomainError(what) {}
};

}  // namespace bell_lab
