#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lmdp/env.hpp"
#include "lmdp/hardgen.hpp"
#include "lmdp/learning.hpp"
#include "lmdp/policy.hpp"

namespace lmdp {

using Json = nlohmann::json;

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

Json model_to_json(const LmdpPsi& model);
LmdpPsi model_from_json(const Json& j);
Json class_to_json(const ModelClass& cls);
ModelClass class_from_json(const Json& j);

Json policy_to_json(const BlindPolicy& policy);
Json policy_to_json(const InformedPolicy& policy);

Json certificate_to_json(const HardInstanceSpec& spec, const EmissionAssignment& asg);
Json spec_to_json(const HardInstanceSpec& spec);
HardInstanceSpec spec_from_json(const Json& j);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);
void write_text(const std::string& path, const std::string& text);

LmdpPsi load_model(const std::string& path);
ModelClass load_class(const std::string& path);

/// (episode, iota, m, t, s, a, o, r)
void write_trajectories_csv(std::ostream& os, const LmdpPsi& model,
                            const std::vector<TrajectoryRecord>& episodes);
/// (episode, phase, model_index, policy_hash, V_tilde_or_value, inst_regret, cum_regret,
///  survivors_count, theta_star_survives)
void write_runlog_csv(std::ostream& os, const RunLog& log);
/// (episode, phase, realized_reward)
void write_rewards_csv(std::ostream& os, const RunLog& log);

}  // namespace lmdp
