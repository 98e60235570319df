#include "decap/manifest.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "decap/errors.hpp"

namespace decap {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::vector<std::string>& manifest_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"iteration",     "global_steps", "mean_reward",
                                  "mean_ep_return", "mean_ep_length", "episodes",
                                  "faults",        "decay_factor", "action_std",
                                  "policy_loss",   "value_loss",   "entropy",
                                  "approx_kl",     "clip_fraction", "grad_norm",
                                  "aborted"};
    for (const std::string& n : RewardBreakdown::names()) c.push_back("rew_" + n);
    c.insert(c.end(), {"eval_reward", "eval_phi_v", "eval_vel_rmse", "eval_joint_rmse",
                       "eval_ep_length"});
    return c;
  }();
  return cols;
}

namespace {

void put_opt(json& j, const char* key, double v) {
  if (std::isnan(v))
    j[key] = nullptr;
  else
    j[key] = v;
}

double get_opt(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::numeric_limits<double>::quiet_NaN();
  return it->get<double>();
}

}  // namespace

json row_to_json(const IterationRow& row) {
  json j;
  j["iteration"] = row.iteration;
  j["global_steps"] = row.global_steps;
  j["mean_reward"] = row.mean_reward;
  j["mean_ep_return"] = row.mean_ep_return;
  j["mean_ep_length"] = row.mean_ep_length;
  j["episodes"] = row.episodes;
  j["faults"] = row.faults;
  j["decay_factor"] = row.decay_factor;
  j["action_std"] = row.action_std;
  j["policy_loss"] = row.update.policy_loss;
  j["value_loss"] = row.update.value_loss;
  j["entropy"] = row.update.entropy;
  j["approx_kl"] = row.update.approx_kl;
  j["clip_fraction"] = row.update.clip_fraction;
  j["grad_norm"] = row.update.grad_norm;
  j["aborted"] = row.update.aborted;
  const auto& names = RewardBreakdown::names();
  const auto vals = row.term_means.values();
  for (std::size_t i = 0; i < names.size(); ++i) j["rew_" + names[i]] = vals[i];
  put_opt(j, "eval_reward", row.eval_reward);
  put_opt(j, "eval_phi_v", row.eval_phi_v);
  put_opt(j, "eval_vel_rmse", row.eval_vel_rmse);
  put_opt(j, "eval_joint_rmse", row.eval_joint_rmse);
  put_opt(j, "eval_ep_length", row.eval_ep_length);
  return j;
}

IterationRow row_from_json(const json& j) {
  IterationRow row;
  row.iteration = j.at("iteration").get<int>();
  row.global_steps = j.at("global_steps").get<std::int64_t>();
  row.mean_reward = j.at("mean_reward").get<double>();
  row.mean_ep_return = j.at("mean_ep_return").get<double>();
  row.mean_ep_length = j.at("mean_ep_length").get<double>();
  row.episodes = j.at("episodes").get<int>();
  row.faults = j.at("faults").get<int>();
  row.decay_factor = j.at("decay_factor").get<double>();
  row.action_std = j.at("action_std").get<double>();
  row.update.policy_loss = j.at("policy_loss").get<double>();
  row.update.value_loss = j.at("value_loss").get<double>();
  row.update.entropy = j.at("entropy").get<double>();
  row.update.approx_kl = j.at("approx_kl").get<double>();
  row.update.clip_fraction = j.at("clip_fraction").get<double>();
  row.update.grad_norm = j.at("grad_norm").get<double>();
  row.update.aborted = j.at("aborted").get<bool>();
  const auto& names = RewardBreakdown::names();
  std::vector<double> vals(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) vals[i] = j.at("rew_" + names[i]).get<double>();
  RewardBreakdown& t = row.term_means;
  t.lin_vel = vals[0];
  t.ang_vel = vals[1];
  t.collisions = vals[2];
  t.action_rate = vals[3];
  t.orientation = vals[4];
  t.ang_vel_penalty = vals[5];
  t.lin_vel_penalty = vals[6];
  t.joint_torques = vals[7];
  t.joint_motion = vals[8];
  t.feet_slip = vals[9];
  t.im_joint_angles = vals[10];
  t.im_ee_position = vals[11];
  t.im_foot_height = vals[12];
  t.im_base_height = vals[13];
  row.eval_reward = get_opt(j, "eval_reward");
  row.eval_phi_v = get_opt(j, "eval_phi_v");
  row.eval_vel_rmse = get_opt(j, "eval_vel_rmse");
  row.eval_joint_rmse = get_opt(j, "eval_joint_rmse");
  row.eval_ep_length = get_opt(j, "eval_ep_length");
  return row;
}

std::string csv_header() {
  std::string out;
  const auto& cols = manifest_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i > 0) out += ',';
    out += cols[i];
  }
  return out;
}

std::string row_to_csv(const IterationRow& row) {
  std::ostringstream out;
  auto opt = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  out << row.iteration << ',' << row.global_steps << ',' << format_double(row.mean_reward) << ','
      << format_double(row.mean_ep_return) << ',' << format_double(row.mean_ep_length) << ','
      << row.episodes << ',' << row.faults << ',' << format_double(row.decay_factor) << ','
      << format_double(row.action_std) << ',' << format_double(row.update.policy_loss) << ','
      << format_double(row.update.value_loss) << ',' << format_double(row.update.entropy) << ','
      << format_double(row.update.approx_kl) << ',' << format_double(row.update.clip_fraction)
      << ',' << format_double(row.update.grad_norm) << ',' << (row.update.aborted ? 1 : 0);
  for (double v : row.term_means.values()) out << ',' << format_double(v);
  out << ',' << opt(row.eval_reward) << ',' << opt(row.eval_phi_v) << ','
      << opt(row.eval_vel_rmse) << ',' << opt(row.eval_joint_rmse) << ','
      << opt(row.eval_ep_length);
  return out.str();
}

ManifestWriter::ManifestWriter(const std::string& dir, const RunConfig& cfg) : dir_(dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw RuntimeFailure("manifest: cannot create run dir '" + dir_ + "': " + ec.message());

  std::ofstream cfg_out(dir_ + "/config.json");
  if (!cfg_out) throw RuntimeFailure("manifest: cannot write '" + dir_ + "/config.json'");
  cfg_out << config_snapshot(cfg);

  jsonl_.open(dir_ + "/manifest.jsonl");
  csv_.open(dir_ + "/manifest.csv");
  if (!jsonl_ || !csv_) throw RuntimeFailure("manifest: cannot open manifest files in '" + dir_ + "'");
  csv_ << csv_header() << '\n';
  csv_.flush();
}

void ManifestWriter::append(const IterationRow& row) {
  jsonl_ << row_to_json(row).dump() << '\n';
  csv_ << row_to_csv(row) << '\n';
  jsonl_.flush();
  csv_.flush();
}

void ManifestWriter::finish(const std::string& checkpoint_rel, double wall_seconds) {
  json info;
  info["checkpoint"] = checkpoint_rel;
  info["wall_seconds"] = wall_seconds;
  std::ofstream out(dir_ + "/run_info.json");
  if (out) out << info.dump(2) << '\n';
  jsonl_.close();
  csv_.close();
}

RunManifest read_manifest(const std::string& dir) {
  RunManifest m;
  {
    std::ifstream cfg_in(dir + "/config.json");
    if (!cfg_in) throw RuntimeFailure("manifest: missing '" + dir + "/config.json'");
    try {
      cfg_in >> m.config;
    } catch (const json::exception& e) {
      throw RuntimeFailure("manifest: bad config.json in '" + dir + "': " + e.what());
    }
  }
  std::ifstream in(dir + "/manifest.jsonl");
  if (!in) throw RuntimeFailure("manifest: missing '" + dir + "/manifest.jsonl'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw RuntimeFailure("manifest: '" + dir + "/manifest.jsonl' line " +
                           std::to_string(line_no) + ": malformed JSON");
    try {
      m.rows.push_back(row_from_json(j));
    } catch (const json::exception& e) {
      throw RuntimeFailure("manifest: '" + dir + "/manifest.jsonl' line " +
                           std::to_string(line_no) + ": " + e.what());
    }
  }
  {
    std::ifstream info_in(dir + "/run_info.json");
    if (info_in) {
      json info = json::parse(info_in, nullptr, false);
      if (!info.is_discarded() && info.contains("checkpoint"))
        m.checkpoint_path = info["checkpoint"].get<std::string>();
    }
  }
  return m;
}

}  // namespace decap
