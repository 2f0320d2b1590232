#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmdp {

/// Bad input: malformed instance, policy, or configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an exact enumeration would exceed its node budget. CLI exit code 3.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, double required, double budget)
      : std::runtime_error(what + " (required " + std::to_string(required) + ", budget " +
                           std::to_string(budget) + ")"),
        required_(required),
        budget_(budget) {}
  double required() const { return required_; }
  double budget() const { return budget_; }

 private:
  double required_;
  double budget_;
};

/// Structural failure of a model (rank deficiency, mismatched spaces).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Seeded generator with hand-rolled distributions, so sample paths do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  /// Independent stream derived from a base seed and a stream id.
  static Rng stream(std::uint64_t seed, std::uint64_t id) {
    return Rng(splitmix64(seed ^ splitmix64(id + 0x9e3779b97f4a7c15ULL)));
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t bits() { return engine_(); }
  /// Uniform integer in [0, n).
  int below(int n);
  /// Draw an index from an unnormalized non-negative weight vector.
  int categorical(std::span<const double> weights);
  int sign() { return (engine_() >> 63) ? 1 : -1; }

 private:
  std::mt19937_64 engine_;
};

double log_sum_exp(std::span<const double> xs);

}  // namespace lmdp
