#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pal {

// Invalid configuration. The message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched vector or matrix dimensions between inputs.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A feature dimension with zero spread cannot be moment-matched.
class DegenerateDimensionError : public std::runtime_error {
 public:
  DegenerateDimensionError(const std::string& msg, int dimension)
      : std::runtime_error(msg), dimension_(dimension) {}
  int dimension() const { return dimension_; }

 private:
  int dimension_;
};

// A caller broke an API precondition (e.g. a lambda=1 sample without weights).
class ContractViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Clustering classified every sample as noise, even after radius relaxation.
class EmptyClusteringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Derives an independent stream seed from a master seed and a salt
// (splitmix64 finalizer over the xor).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Shortest round-trip decimal form, locale independent.
std::string format_double(double v);
double parse_double(const std::string& s);

// FNV-1a 64-bit, used to fingerprint emitted files.
std::uint64_t fnv1a64(const std::string& data, std::uint64_t basis = 0xcbf29ce484222325ull);

}  // namespace pal
