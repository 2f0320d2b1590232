#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lmdp {

/// Which part of the history a blind policy may look at.
enum class HistoryAccess {
  kFull,        ///< (s1, a1, o1, ..., s_t)
  kStatesOnly,  ///< (s1, ..., s_t)
};

const char* to_string(HistoryAccess access);
HistoryAccess parse_access(const std::string& name);

/// History prefixes are flat token lists s1, a1, o1, s2, ..., s_t (3t-2 tokens).
inline int prefix_length(int t) { return 3 * (t - 1) + 1; }

/**
 * Decision table from ι-blind history prefixes to action distributions.
 *
 * Prefixes missing from the table fall back to a default distribution
 * (a point mass on action 0 unless changed). Planners only record the
 * prefixes that have positive probability under the model they planned on.
 */
class BlindPolicy {
 public:
  BlindPolicy() = default;
  explicit BlindPolicy(int num_actions, HistoryAccess access = HistoryAccess::kFull);

  static BlindPolicy uniform(int num_actions, HistoryAccess access = HistoryAccess::kFull);
  static BlindPolicy constant(int num_actions, int action,
                              HistoryAccess access = HistoryAccess::kFull);

  void set_action(std::span<const int> history, int action);
  void set_distribution(std::span<const int> history, std::vector<double> probs);
  void set_fallback(std::vector<double> probs);

  /// Action distribution at a history prefix.
  std::span<const double> at(std::span<const int> history) const;
  double prob(std::span<const int> history, int action) const { return at(history)[action]; }

  int num_actions() const { return num_actions_; }
  HistoryAccess access() const { return access_; }
  bool deterministic() const;
  std::size_t size() const { return table_.size(); }
  const std::map<std::vector<int>, std::vector<double>>& table() const { return table_; }
  const std::vector<double>& fallback() const { return fallback_; }

  /// Canonical text form; hashed for run logs.
  std::string canonical() const;
  std::uint64_t hash() const;

  /// Restrict a history to what this policy is allowed to see.
  std::vector<int> key(std::span<const int> history) const;

 private:
  void check(const std::vector<double>& probs) const;

  int num_actions_ = 0;
  HistoryAccess access_ = HistoryAccess::kFull;
  std::map<std::vector<int>, std::vector<double>> table_;
  std::vector<double> fallback_;
};

/// One blind policy per side-information symbol, or a single shared one.
class InformedPolicy {
 public:
  InformedPolicy() = default;
  explicit InformedPolicy(std::vector<BlindPolicy> per_symbol);
  static InformedPolicy ignoring_side_info(BlindPolicy policy);

  const BlindPolicy& for_symbol(int iota) const {
    return blind_ ? per_symbol_.front() : per_symbol_.at(iota);
  }
  bool blind() const { return blind_; }
  int num_symbols() const { return blind_ ? 0 : static_cast<int>(per_symbol_.size()); }
  int num_actions() const { return per_symbol_.empty() ? 0 : per_symbol_.front().num_actions(); }
  const std::vector<BlindPolicy>& policies() const { return per_symbol_; }
  std::uint64_t hash() const;

 private:
  std::vector<BlindPolicy> per_symbol_;
  bool blind_ = false;
};

}  // namespace lmdp
