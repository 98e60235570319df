#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "decap/checkpoint.hpp"
#include "decap/errors.hpp"
#include "decap/manifest.hpp"
#include "decap/robot_model.hpp"
#include "decap/run_config.hpp"

using namespace decap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("/tmp") / ("decap_fmt_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

PolicyParameters tiny_policy(std::uint64_t seed) {
  Rng rng(seed);
  return make_policy(5, 2, {4}, -0.25, Eigen::VectorXd::LinSpaced(5, 0.0, 1.0),
                     Eigen::VectorXd::Constant(5, 2.0), rng);
}

bool same_params(const PolicyParameters& a, const PolicyParameters& b) {
  if (a.actor.n_layers() != b.actor.n_layers()) return false;
  for (int l = 0; l < a.actor.n_layers(); ++l) {
    if (a.actor.W[l] != b.actor.W[l] || a.actor.b[l] != b.actor.b[l]) return false;
  }
  for (int l = 0; l < a.critic.n_layers(); ++l) {
    if (a.critic.W[l] != b.critic.W[l] || a.critic.b[l] != b.critic.b[l]) return false;
  }
  return a.log_std == b.log_std && a.obs_shift == b.obs_shift && a.obs_scale == b.obs_scale;
}

}  // namespace

TEST_CASE("robot models survive a save/load round trip") {
  const RobotModel m = load_model("models/hopper.model");
  TempDir dir("model_rt");
  save_model(m, dir.file("copy.model"));
  const RobotModel back = load_model(dir.file("copy.model"));

  CHECK(back.name == m.name);
  CHECK(back.base_mass == m.base_mass);
  CHECK(back.h_nom == m.h_nom);
  REQUIRE(back.links.size() == m.links.size());
  for (std::size_t i = 0; i < m.links.size(); ++i) {
    CHECK(back.links[i].name == m.links[i].name);
    CHECK(back.links[i].mass == m.links[i].mass);
    CHECK(back.links[i].length == m.links[i].length);
    CHECK(back.links[i].inertia == m.links[i].inertia);
    CHECK(back.links[i].parent == m.links[i].parent);
    CHECK(back.links[i].attach == m.links[i].attach);
  }
  CHECK((back.torque_limits - m.torque_limits).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.q_nom - m.q_nom).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.feet == m.feet);
  // serialization itself is byte-stable
  CHECK(model_to_json_text(back) == model_to_json_text(m));
}

TEST_CASE("model validation names the offending field") {
  RobotModel m = load_model("models/hopper.model");

  SUBCASE("negative mass") {
    m.links[1].mass = -0.1;
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("mass"), ConfigError);
  }
  SUBCASE("bad parent index") {
    m.links[2].parent = 5;
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("parent"), ConfigError);
  }
  SUBCASE("joint limits crossed") {
    m.joint_lower[0] = m.joint_upper[0] + 1.0;
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("joint_limits"), ConfigError);
  }
  SUBCASE("foot index out of range") {
    m.feet[0] = 99;
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("feet"), ConfigError);
  }
  SUBCASE("nominal pose outside the limits") {
    m.q_nom[0] = m.joint_upper[0] + 0.5;
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("nominal_pose"), ConfigError);
  }
  SUBCASE("dimension mismatch") {
    m.torque_limits = Eigen::VectorXd::Ones(1);
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("torque_limits"), ConfigError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_model("/tmp/decap_fmt_missing.model"), ConfigError);
  }
  SUBCASE("unparseable json names the origin") {
    CHECK_THROWS_WITH_AS(model_from_json_text("{oops", "broken.model"),
                         doctest::Contains("broken.model"), ConfigError);
  }
}

TEST_CASE("run configs round trip through json") {
  RunConfig cfg;
  cfg.run_name = "demo";
  cfg.seed = 42;
  cfg.n_envs = 8;
  cfg.hidden = {32, 16};
  cfg.action.mode = ActionMode::decap;
  cfg.action.decay.gamma = 0.97;
  cfg.rewards.imitation_scale = 5.0;
  cfg.env.commands.v_lo = 0.2;
  cfg.dataset_path = "data.imit";
  cfg.eval_commands = {0.5};

  const RunConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.run_name == "demo");
  CHECK(back.seed == 42);
  CHECK(back.n_envs == 8);
  CHECK(back.hidden == std::vector<int>{32, 16});
  CHECK(back.action.mode == ActionMode::decap);
  CHECK(back.action.decay.gamma == 0.97);
  CHECK(back.rewards.imitation_scale == 5.0);
  CHECK(back.env.commands.v_lo == 0.2);
  CHECK(back.dataset_path == "data.imit");
  CHECK(back.eval_commands == std::vector<double>{0.5});
  // canonical snapshot is byte-stable
  CHECK(config_snapshot(back) == config_snapshot(cfg));
}

TEST_CASE("unknown config keys are rejected by name") {
  nlohmann::json j = config_to_json(RunConfig{});
  j["ppo"]["learning_rate_typo"] = 1e-3;
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("learning_rate_typo"),
                       ConfigError);
}

TEST_CASE("dotted overrides reach nested keys and reject unknown paths") {
  nlohmann::json j = config_to_json(RunConfig{});

  SUBCASE("nested numeric override") {
    apply_override(j, "ppo.lr=0.001");
    CHECK(config_from_json(j).ppo.adam.lr == 0.001);
  }
  SUBCASE("enum override as a string") {
    apply_override(j, "action.mode=torque");
    CHECK(config_from_json(j).action.mode == ActionMode::torque);
  }
  SUBCASE("array override") {
    apply_override(j, "train.hidden=[16,8]");
    CHECK(config_from_json(j).hidden == std::vector<int>{16, 8});
  }
  SUBCASE("command range as a two-element array") {
    apply_override(j, "env.v_cmd=[0.2,0.8]");
    const RunConfig cfg = config_from_json(j);
    CHECK(cfg.env.commands.v_lo == 0.2);
    CHECK(cfg.env.commands.v_hi == 0.8);
  }
  SUBCASE("unknown path is named") {
    CHECK_THROWS_WITH_AS(apply_override(j, "ppo.nope=1"), doctest::Contains("ppo.nope"),
                         ConfigError);
  }
  SUBCASE("missing equals sign") {
    CHECK_THROWS_AS(apply_override(j, "ppo.lr"), ConfigError);
  }
  SUBCASE("a non-numeric value for a numeric key fails on conversion") {
    apply_override(j, "train.n_envs=banana");  // stored as a string for now
    CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("train.n_envs"), ConfigError);
  }
}

TEST_CASE("checkpoints round trip bit-exactly and carry a stable content id") {
  Checkpoint ck;
  ck.robot_name = "hopper";
  ck.mode = "torque";
  ck.iterations = 17;
  ck.policy = tiny_policy(5);

  TempDir dir("ckpt");
  const std::string id = save_checkpoint(ck, dir.file("p.ckpt"));
  CHECK(id.size() == 16);  // fixed-width hex
  const Checkpoint back = load_checkpoint(dir.file("p.ckpt"));

  CHECK(back.robot_name == "hopper");
  CHECK(back.mode == "torque");
  CHECK(back.iterations == 17);
  CHECK(back.id == id);
  CHECK(same_params(back.policy, ck.policy));

  SUBCASE("the id is a pure function of the content") {
    const std::string id2 = save_checkpoint(ck, dir.file("q.ckpt"));
    CHECK(id2 == id);
    Checkpoint other = ck;
    other.policy.log_std[0] += 1e-9;
    CHECK(save_checkpoint(other, dir.file("r.ckpt")) != id);
  }
  SUBCASE("truncated checkpoint files are rejected") {
    std::ifstream in(dir.file("p.ckpt"));
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    std::ofstream out(dir.file("cut.ckpt"));
    out << text.substr(0, text.size() / 2);
    out.close();
    CHECK_THROWS_AS(load_checkpoint(dir.file("cut.ckpt")), RuntimeFailure);
  }
  SUBCASE("missing checkpoint files are a config error") {
    CHECK_THROWS_AS(load_checkpoint(dir.file("absent.ckpt")), ConfigError);
  }
}

TEST_CASE("manifests round trip and keep the reward identity") {
  RunConfig cfg;
  cfg.run_name = "mani";
  cfg.iterations = 3;

  TempDir dir("manifest");
  const std::string run_dir = dir.file("run");

  std::vector<IterationRow> rows;
  Rng rng(9);
  for (int i = 1; i <= 3; ++i) {
    IterationRow row;
    row.iteration = i;
    row.global_steps = 160 * i;
    row.term_means.lin_vel = rng.uniform(0.0, 1.0);
    row.term_means.joint_torques = -rng.uniform(0.0, 0.1);
    row.term_means.im_joint_angles = rng.uniform(0.0, 0.5);
    row.mean_reward = row.term_means.total();
    row.mean_ep_return = rng.uniform(0.0, 100.0);
    row.mean_ep_length = 500.0;
    row.episodes = 2 * i;
    row.decay_factor = std::pow(0.99, i);
    row.action_std = 0.9;
    row.update.policy_loss = -0.01 * i;
    row.update.grad_norm = 0.5;
    if (i == 2) {
      row.eval_reward = 1.25;
      row.eval_phi_v = 0.8;
      row.eval_vel_rmse = 0.2;
      row.eval_joint_rmse = 0.1;
      row.eval_ep_length = 900.0;
    }
    rows.push_back(row);
  }

  {
    ManifestWriter writer(run_dir, cfg);
    for (const auto& row : rows) writer.append(row);
    writer.finish("policy.ckpt", 12.5);
  }

  CHECK(fs::exists(run_dir + "/manifest.jsonl"));
  CHECK(fs::exists(run_dir + "/manifest.csv"));
  CHECK(fs::exists(run_dir + "/config.json"));
  CHECK(fs::exists(run_dir + "/run_info.json"));

  const RunManifest m = read_manifest(run_dir);
  CHECK(m.checkpoint_path == "policy.ckpt");
  REQUIRE(m.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const IterationRow& a = rows[i];
    const IterationRow& b = m.rows[i];
    CHECK(b.iteration == a.iteration);
    CHECK(b.global_steps == a.global_steps);
    CHECK(b.mean_reward == a.mean_reward);
    CHECK(b.term_means.lin_vel == a.term_means.lin_vel);
    CHECK(b.term_means.joint_torques == a.term_means.joint_torques);
    CHECK(b.decay_factor == a.decay_factor);
    CHECK(b.update.policy_loss == a.update.policy_loss);
    // reward identity survives the round trip
    CHECK(b.mean_reward == doctest::Approx(b.term_means.total()).epsilon(1e-9));
  }
  CHECK(std::isnan(m.rows[0].eval_reward));
  CHECK(m.rows[1].eval_reward == 1.25);
  CHECK(m.rows[1].eval_joint_rmse == 0.1);
  CHECK(std::isnan(m.rows[2].eval_reward));

  // the stored config is the canonical snapshot of what the writer got
  CHECK(m.config.at("run_name").get<std::string>() == "mani");

  SUBCASE("the csv header matches the column list") {
    std::ifstream csv(run_dir + "/manifest.csv");
    std::string header;
    REQUIRE(std::getline(csv, header));
    std::stringstream want;
    const auto& cols = manifest_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) want << ',';
      want << cols[i];
    }
    CHECK(header == want.str());
    // one line per row plus the header
    int lines = 1;
    std::string tmp;
    while (std::getline(csv, tmp)) ++lines;
    CHECK(lines == 4);
  }

  SUBCASE("identical runs produce identical manifest bytes") {
    const std::string run2 = dir.file("run2");
    {
      ManifestWriter writer(run2, cfg);
      for (const auto& row : rows) writer.append(row);
      writer.finish("policy.ckpt", 99.0);  // wall-clock differs on purpose
    }
    auto slurp = [](const std::string& p) {
      std::ifstream in(p);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    CHECK(slurp(run_dir + "/manifest.jsonl") == slurp(run2 + "/manifest.jsonl"));
    CHECK(slurp(run_dir + "/manifest.csv") == slurp(run2 + "/manifest.csv"));
    CHECK(slurp(run_dir + "/config.json") == slurp(run2 + "/config.json"));
    // run_info carries the wall clock, so it is allowed to differ
    CHECK(slurp(run_dir + "/run_info.json") != slurp(run2 + "/run_info.json"));
  }

  SUBCASE("reading a directory without a manifest fails cleanly") {
    CHECK_THROWS_AS(read_manifest(dir.file("nowhere")), RuntimeFailure);
  }
}

TEST_CASE("doubles print at 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  const double v = 0.1 + 0.2;
  CHECK(std::stod(format_double(v)) == v);
}
