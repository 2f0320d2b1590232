#include "lmdp/io.hpp"

#include <charconv>
#include <functional>
#include <fstream>
#include <ostream>
#include <sstream>

namespace lmdp {

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

int get_int(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("instance JSON is missing '") + key + "'");
  return j.at(key).get<int>();
}

template <class F>
void expect_shape(const Json& arr, std::initializer_list<int> shape, const char* what, F&& leaf) {
  std::vector<int> idx;
  std::function<void(const Json&, std::size_t)> rec = [&](const Json& a, std::size_t level) {
    const int n = *(shape.begin() + level);
    if (!a.is_array() || static_cast<int>(a.size()) != n)
      throw ConfigError(std::string("array '") + what + "' has the wrong shape");
    for (int i = 0; i < n; ++i) {
      idx.push_back(i);
      if (level + 1 == shape.size())
        leaf(idx, a[i].get<double>());
      else
        rec(a[i], level + 1);
      idx.pop_back();
    }
  };
  rec(arr, 0);
}

}  // namespace

Json model_to_json(const LmdpPsi& th) {
  const Dims& d = th.dims();
  Json j;
  j["name"] = th.name;
  j["M"] = d.contexts;
  j["S"] = d.states;
  j["A"] = d.actions;
  j["O"] = d.observations;
  j["I"] = d.symbols;
  j["H"] = d.horizon;
  j["mixing"] = std::vector<double>(th.mixing().begin(), th.mixing().end());
  j["reward"] = std::vector<double>(th.rewards().begin(), th.rewards().end());
  Json init = Json::array(), trans = Json::array(), obs = Json::array();
  for (int m = 0; m < d.contexts; ++m) {
    auto r = th.initial_row(m);
    init.push_back(std::vector<double>(r.begin(), r.end()));
    Json tm = Json::array(), om = Json::array();
    for (int s = 0; s < d.states; ++s) {
      Json ts = Json::array(), os = Json::array();
      for (int a = 0; a < d.actions; ++a) {
        auto tr = th.transition_row(m, s, a);
        auto orow = th.observation_row(m, s, a);
        ts.push_back(std::vector<double>(tr.begin(), tr.end()));
        os.push_back(std::vector<double>(orow.begin(), orow.end()));
      }
      tm.push_back(std::move(ts));
      om.push_back(std::move(os));
    }
    trans.push_back(std::move(tm));
    obs.push_back(std::move(om));
  }
  j["initial"] = std::move(init);
  j["transitions"] = std::move(trans);
  j["obs_kernel"] = std::move(obs);
  Json em = Json::array();
  for (int i = 0; i < d.symbols; ++i) {
    std::vector<double> row(d.contexts);
    for (int m = 0; m < d.contexts; ++m) row[m] = th.emission(i, m);
    em.push_back(std::move(row));
  }
  j["emission"] = std::move(em);
  return j;
}

LmdpPsi model_from_json(const Json& j) {
  try {
    Dims d{get_int(j, "M"), get_int(j, "S"), get_int(j, "A"),
           get_int(j, "O"), get_int(j, "I"), get_int(j, "H")};
    LmdpPsi th(d);
    th.name = j.value("name", "");
    expect_shape(j.at("mixing"), {d.contexts}, "mixing",
                 [&](const std::vector<int>& i, double v) { th.mixing(i[0]) = v; });
    expect_shape(j.at("reward"), {d.observations}, "reward",
                 [&](const std::vector<int>& i, double v) { th.reward(i[0]) = v; });
    expect_shape(j.at("initial"), {d.contexts, d.states}, "initial",
                 [&](const std::vector<int>& i, double v) { th.initial(i[0], i[1]) = v; });
    expect_shape(j.at("transitions"), {d.contexts, d.states, d.actions, d.states}, "transitions",
                 [&](const std::vector<int>& i, double v) {
                   th.transition(i[0], i[1], i[2], i[3]) = v;
                 });
    expect_shape(j.at("obs_kernel"), {d.contexts, d.states, d.actions, d.observations},
                 "obs_kernel", [&](const std::vector<int>& i, double v) {
                   th.observation(i[0], i[1], i[2], i[3]) = v;
                 });
    expect_shape(j.at("emission"), {d.symbols, d.contexts}, "emission",
                 [&](const std::vector<int>& i, double v) { th.emission(i[0], i[1]) = v; });
    return th;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed instance JSON: ") + e.what());
  }
}

Json class_to_json(const ModelClass& cls) {
  Json j;
  j["models"] = Json::array();
  for (const auto& m : cls.models) j["models"].push_back(model_to_json(m));
  if (cls.truth_index) j["truth_index"] = *cls.truth_index;
  return j;
}

ModelClass class_from_json(const Json& j) {
  ModelClass cls;
  if (!j.contains("models") || !j.at("models").is_array())
    throw ConfigError("class JSON needs a 'models' array");
  for (const auto& m : j.at("models")) cls.models.push_back(model_from_json(m));
  if (j.contains("truth_index")) cls.truth_index = j.at("truth_index").get<int>();
  cls.check();
  return cls;
}

Json policy_to_json(const BlindPolicy& p) {
  Json j;
  j["access"] = to_string(p.access());
  j["actions"] = p.num_actions();
  j["fallback"] = p.fallback();
  Json nodes = Json::array();
  for (const auto& [key, probs] : p.table()) {
    Json n;
    n["prefix"] = key;
    int best = -1;
    for (int a = 0; a < p.num_actions(); ++a)
      if (probs[a] == 1.0) best = a;
    if (best >= 0)
      n["action"] = best;
    else
      n["probs"] = probs;
    nodes.push_back(std::move(n));
  }
  j["nodes"] = std::move(nodes);
  j["hash"] = hex64(p.hash());
  return j;
}

Json policy_to_json(const InformedPolicy& p) {
  Json j;
  j["blind"] = p.blind();
  j["per_symbol"] = Json::array();
  for (const auto& bp : p.policies()) j["per_symbol"].push_back(policy_to_json(bp));
  j["hash"] = hex64(p.hash());
  return j;
}

Json spec_to_json(const HardInstanceSpec& s) {
  return Json{{"M", s.contexts},
              {"explore_actions", s.explore_actions},
              {"control_actions", s.control_actions},
              {"alpha", s.alpha},
              {"epsilon", s.epsilon},
              {"alphabet", s.alphabet},
              {"optimal_controls", s.optimal_controls},
              {"optimal_explore", s.optimal_explore}};
}

HardInstanceSpec spec_from_json(const Json& j) {
  HardInstanceSpec s;
  s.contexts = j.value("M", s.contexts);
  s.explore_actions = j.value("explore_actions", s.explore_actions);
  s.control_actions = j.value("control_actions", s.control_actions);
  s.alpha = j.value("alpha", s.alpha);
  s.epsilon = j.value("epsilon", s.epsilon);
  s.alphabet = j.value("alphabet", s.alphabet);
  s.optimal_controls = j.value("optimal_controls", std::vector<int>{});
  s.optimal_explore = j.value("optimal_explore", 0);
  s.validate();
  return s;
}

Json certificate_to_json(const HardInstanceSpec& spec, const EmissionAssignment& asg) {
  Json j;
  j["spec"] = spec_to_json(spec);
  j["alpha_eff"] = asg.cert.value;
  j["alpha_eff_lower"] = asg.cert.lower;
  j["certified"] = asg.cert.certified;
  j["threshold"] = spec.alpha_threshold();
  j["lower_bound_regime"] = spec.in_lower_bound_regime();
  j["patterns"] = asg.cert.patterns;
  j["argmin_mask"] = asg.cert.argmin_mask;
  j["witness"] = asg.cert.witness;
  j["draws"] = asg.draws;
  j["signs"] = asg.signs;
  return j;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(1) + "\n"); }

LmdpPsi load_model(const std::string& path) { return model_from_json(read_json(path)); }
ModelClass load_class(const std::string& path) { return class_from_json(read_json(path)); }

void write_trajectories_csv(std::ostream& os, const LmdpPsi& model,
                            const std::vector<TrajectoryRecord>& episodes) {
  os << "episode,iota,m,t,s,a,o,r\n";
  for (std::size_t k = 0; k < episodes.size(); ++k) {
    const auto& e = episodes[k];
    for (std::size_t t = 0; t < e.steps.size(); ++t) {
      const auto& st = e.steps[t];
      os << k + 1 << ',' << e.iota << ',' << e.context << ',' << t + 1 << ',' << st.state << ','
         << st.action << ',' << st.obs << ',' << format_double(model.reward(st.obs)) << '\n';
    }
  }
}

void write_runlog_csv(std::ostream& os, const RunLog& log) {
  os << "episode,phase,model_index,policy_hash,V_tilde_or_value,inst_regret,cum_regret,"
        "survivors_count,theta_star_survives\n";
  for (const auto& r : log.rows) {
    os << r.episode << ',' << r.phase << ',' << r.model_index << ',' << hex64(r.policy_hash) << ','
       << format_double(r.value) << ',' << format_double(r.inst_regret) << ','
       << format_double(r.cum_regret) << ',' << r.survivors << ',';
    if (r.truth_survives < 0)
      os << "na";
    else
      os << r.truth_survives;
    os << '\n';
  }
}

void write_rewards_csv(std::ostream& os, const RunLog& log) {
  os << "episode,phase,realized_reward\n";
  for (const auto& r : log.rows)
    os << r.episode << ',' << r.phase << ',' << format_double(r.realized_reward) << '\n';
}

}  // namespace lmdp
