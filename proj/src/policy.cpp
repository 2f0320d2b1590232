#include "lmdp/policy.hpp"

#include <cmath>
#include <cstdio>

#include "lmdp/common.hpp"

namespace lmdp {

const char* to_string(HistoryAccess access) {
  return access == HistoryAccess::kFull ? "full" : "states-only";
}

HistoryAccess parse_access(const std::string& name) {
  if (name == "full") return HistoryAccess::kFull;
  if (name == "states-only" || name == "states") return HistoryAccess::kStatesOnly;
  throw ConfigError("unknown history access '" + name + "' (expected full|states-only)");
}

BlindPolicy::BlindPolicy(int num_actions, HistoryAccess access)
    : num_actions_(num_actions), access_(access) {
  if (num_actions <= 0) throw ConfigError("policy needs at least one action");
  fallback_.assign(num_actions, 0.0);
  fallback_[0] = 1.0;
}

BlindPolicy BlindPolicy::uniform(int num_actions, HistoryAccess access) {
  BlindPolicy p(num_actions, access);
  p.fallback_.assign(num_actions, 1.0 / num_actions);
  return p;
}

BlindPolicy BlindPolicy::constant(int num_actions, int action, HistoryAccess access) {
  BlindPolicy p(num_actions, access);
  if (action < 0 || action >= num_actions) throw ConfigError("constant policy: bad action");
  p.fallback_.assign(num_actions, 0.0);
  p.fallback_[action] = 1.0;
  return p;
}

void BlindPolicy::check(const std::vector<double>& probs) const {
  if (static_cast<int>(probs.size()) != num_actions_)
    throw ConfigError("policy distribution has wrong length");
  double total = 0.0;
  for (double x : probs) {
    if (!(x >= 0.0)) throw ConfigError("policy distribution has a negative entry");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("policy distribution does not sum to 1");
}

std::vector<int> BlindPolicy::key(std::span<const int> history) const {
  if (access_ == HistoryAccess::kFull) return {history.begin(), history.end()};
  std::vector<int> k;
  k.reserve(history.size() / 3 + 1);
  for (std::size_t i = 0; i < history.size(); i += 3) k.push_back(history[i]);
  return k;
}

void BlindPolicy::set_action(std::span<const int> history, int action) {
  if (action < 0 || action >= num_actions_) throw ConfigError("set_action: bad action index");
  std::vector<double> probs(num_actions_, 0.0);
  probs[action] = 1.0;
  table_[key(history)] = std::move(probs);
}

void BlindPolicy::set_distribution(std::span<const int> history, std::vector<double> probs) {
  check(probs);
  table_[key(history)] = std::move(probs);
}

void BlindPolicy::set_fallback(std::vector<double> probs) {
  check(probs);
  fallback_ = std::move(probs);
}

std::span<const double> BlindPolicy::at(std::span<const int> history) const {
  if (table_.empty()) return fallback_;
  auto it = table_.find(key(history));
  if (it == table_.end()) return fallback_;
  return it->second;
}

bool BlindPolicy::deterministic() const {
  auto point = [](const std::vector<double>& p) {
    for (double x : p)
      if (x != 0.0 && x != 1.0) return false;
    return true;
  };
  if (!point(fallback_)) return false;
  for (const auto& [k, p] : table_)
    if (!point(p)) return false;
  return true;
}

std::string BlindPolicy::canonical() const {
  std::string out = std::string(to_string(access_)) + ";" + std::to_string(num_actions_) + ";";
  char buf[32];
  auto put = [&](const std::vector<double>& p) {
    for (double x : p) {
      std::snprintf(buf, sizeof(buf), "%.17g,", x);
      out += buf;
    }
  };
  put(fallback_);
  for (const auto& [k, p] : table_) {
    out += '|';
    for (int v : k) out += std::to_string(v) + ".";
    out += ':';
    put(p);
  }
  return out;
}

std::uint64_t BlindPolicy::hash() const { return fnv1a(canonical()); }

InformedPolicy::InformedPolicy(std::vector<BlindPolicy> per_symbol)
    : per_symbol_(std::move(per_symbol)) {
  if (per_symbol_.empty()) throw ConfigError("informed policy needs at least one symbol");
  for (const auto& p : per_symbol_)
    if (p.num_actions() != per_symbol_.front().num_actions())
      throw ConfigError("informed policy: per-symbol action counts differ");
}

InformedPolicy InformedPolicy::ignoring_side_info(BlindPolicy policy) {
  InformedPolicy out;
  out.per_symbol_.push_back(std::move(policy));
  out.blind_ = true;
  return out;
}

std::uint64_t InformedPolicy::hash() const {
  std::string s = blind_ ? "blind" : "informed";
  for (const auto& p : per_symbol_) s += "#" + hex64(p.hash());
  return fnv1a(s);
}

}  // namespace lmdp
