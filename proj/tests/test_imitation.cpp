#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "decap/errors.hpp"
#include "decap/imitation.hpp"
#include "decap/ppo.hpp"
#include "decap/robot_model.hpp"
#include "decap/run_config.hpp"

using namespace decap;

namespace {

ImitationDataset toy_dataset() {
  ImitationDataset ds;
  ds.robot_name = "toy";
  ds.dt = 0.005;
  ds.kp = 20.0;
  ds.kd = 0.5;
  ds.checkpoint_id = "abc123";
  for (int ti = 0; ti < 2; ++ti) {
    ImitationTrajectory tr;
    tr.cmd = {0.4 + 0.2 * ti, 0.0};
    for (int s = 0; s < 4; ++s) {
      ImitationFrame f;
      f.q = Eigen::Vector2d(0.1 * ti + 0.01 * s, -0.2 * ti);
      f.ee_xz = Eigen::VectorXd::Zero(2);
      f.ee_xz << 0.05 * s, -0.4;
      f.foot_z = Eigen::VectorXd::Constant(1, 0.02 * s);
      f.base_height = 0.5 + 0.001 * s;
      f.v_cmd = tr.cmd.v_cmd;
      f.w_cmd = tr.cmd.w_cmd;
      f.step_index = s;
      tr.frames.push_back(f);
    }
    ds.trajectories.push_back(tr);
  }
  return ds;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/decap_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("lookup picks the nearest command and breaks ties toward the lower index") {
  const ImitationDataset ds = toy_dataset();  // commands 0.4 and 0.6

  CHECK(&lookup(ds, {0.41, 0.0}, 0) == &ds.trajectories[0].frames[0]);
  CHECK(&lookup(ds, {0.75, 0.0}, 0) == &ds.trajectories[1].frames[0]);
  // 0.5 is equidistant from both: strict < keeps the first trajectory
  CHECK(&lookup(ds, {0.5, 0.0}, 0) == &ds.trajectories[0].frames[0]);
}

TEST_CASE("lookup wraps the frame index modulo the trajectory length") {
  const ImitationDataset ds = toy_dataset();
  CHECK(&lookup(ds, {0.4, 0.0}, 0) == &ds.trajectories[0].frames[0]);
  CHECK(&lookup(ds, {0.4, 0.0}, 3) == &ds.trajectories[0].frames[3]);
  CHECK(&lookup(ds, {0.4, 0.0}, 4) == &ds.trajectories[0].frames[0]);
  CHECK(&lookup(ds, {0.4, 0.0}, 11) == &ds.trajectories[0].frames[3]);
  CHECK_THROWS_AS(lookup(ds, {0.4, 0.0}, -1), std::invalid_argument);
  CHECK_THROWS_AS(lookup(ImitationDataset{}, {0.4, 0.0}, 0), std::invalid_argument);
}

TEST_CASE("datasets survive a save/load round trip exactly") {
  const ImitationDataset ds = toy_dataset();
  TempFile f("roundtrip.imit");
  save_dataset(ds, f.path);
  const ImitationDataset back = load_dataset(f.path);

  CHECK(back.robot_name == ds.robot_name);
  CHECK(back.dt == ds.dt);
  CHECK(back.kp == ds.kp);
  CHECK(back.kd == ds.kd);
  CHECK(back.checkpoint_id == ds.checkpoint_id);
  REQUIRE(back.trajectories.size() == ds.trajectories.size());
  for (std::size_t ti = 0; ti < ds.trajectories.size(); ++ti) {
    const auto& a = ds.trajectories[ti];
    const auto& b = back.trajectories[ti];
    CHECK(b.cmd.v_cmd == a.cmd.v_cmd);
    CHECK(b.cmd.w_cmd == a.cmd.w_cmd);
    REQUIRE(b.frames.size() == a.frames.size());
    for (std::size_t s = 0; s < a.frames.size(); ++s) {
      // %.17g round-trips doubles bit-exactly
      CHECK((b.frames[s].q - a.frames[s].q).cwiseAbs().maxCoeff() == 0.0);
      CHECK((b.frames[s].ee_xz - a.frames[s].ee_xz).cwiseAbs().maxCoeff() == 0.0);
      CHECK((b.frames[s].foot_z - a.frames[s].foot_z).cwiseAbs().maxCoeff() == 0.0);
      CHECK(b.frames[s].base_height == a.frames[s].base_height);
      CHECK(b.frames[s].step_index == a.frames[s].step_index);
    }
  }
}

TEST_CASE("truncated and malformed dataset files fail with the line number") {
  const ImitationDataset ds = toy_dataset();
  TempFile f("broken.imit");
  save_dataset(ds, f.path);

  std::ifstream in(f.path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  in.close();
  REQUIRE(lines.size() == 9);  // header + 8 frames

  SUBCASE("missing frames at the end") {
    std::ofstream out(f.path);
    for (std::size_t i = 0; i + 2 < lines.size(); ++i) out << lines[i] << '\n';
    out.close();
    CHECK_THROWS_WITH_AS(load_dataset(f.path),
                         doctest::Contains("truncated after line 7"), RuntimeFailure);
  }
  SUBCASE("a frame with a missing column") {
    lines[3] = lines[3].substr(0, lines[3].rfind(' '));
    std::ofstream out(f.path);
    for (const auto& l : lines) out << l << '\n';
    out.close();
    CHECK_THROWS_WITH_AS(load_dataset(f.path), doctest::Contains("line 4"), RuntimeFailure);
  }
  SUBCASE("a frame with garbage in a numeric column") {
    lines[5] += " banana";
    std::ofstream out(f.path);
    for (const auto& l : lines) out << l << '\n';
    out.close();
    CHECK_THROWS_WITH_AS(load_dataset(f.path), doctest::Contains("line 6"), RuntimeFailure);
  }
  SUBCASE("a missing file names the path") {
    CHECK_THROWS_WITH_AS(load_dataset("/tmp/decap_test_nope.imit"),
                         doctest::Contains("decap_test_nope"), ConfigError);
  }
}

TEST_CASE("rmse overloads match hand-computed values") {
  SUBCASE("scalar series") {
    CHECK(rmse(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}) == 0.0);
    // errors 3 and 4 -> sqrt((9+16)/2)
    CHECK(rmse(std::vector<double>{3.0, 0.0}, std::vector<double>{0.0, 4.0}) ==
          doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
    CHECK_THROWS_AS(rmse(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
  }
  SUBCASE("vector series pool every joint sample") {
    std::vector<Eigen::VectorXd> a{Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(3.0, 4.0)};
    std::vector<Eigen::VectorXd> b{Eigen::Vector2d(0.0, 2.0), Eigen::Vector2d(3.0, 2.0)};
    // squared errors: 1, 0, 0, 4 over 4 samples
    CHECK(rmse(a, b) == doctest::Approx(std::sqrt(5.0 / 4.0)).epsilon(1e-12));
    std::vector<Eigen::VectorXd> c{Eigen::Vector2d(1.0, 2.0), Eigen::Vector3d(1.0, 2.0, 3.0)};
    CHECK_THROWS_AS(rmse(a, c), std::invalid_argument);
  }
}

TEST_CASE("recording harvests the post-settle window for every command") {
  const RobotModel model = load_model("models/hopper.model");
  RunConfig cfg;
  cfg.record_steps = 40;
  cfg.record_settle = 15;
  cfg.action.mode = ActionMode::position;

  Rng rng(31);
  const int obs = Observation::size(model.n_joints());
  const PolicyParameters policy =
      make_policy(obs, model.n_joints(), {16}, std::log(0.5), Eigen::VectorXd::Zero(obs),
                  Eigen::VectorXd::Ones(obs), rng);

  const std::vector<Command> commands = {{0.4, 0.0}, {0.9, 0.0}};
  const ImitationDataset ds = record_imitation(policy, model, cfg, commands, "ck42");

  CHECK(ds.robot_name == model.name);
  CHECK(ds.dt == cfg.env.dt);
  CHECK(ds.kp == cfg.action.gains.kp);
  CHECK(ds.kd == cfg.action.gains.kd);
  CHECK(ds.checkpoint_id == "ck42");
  REQUIRE(ds.trajectories.size() == 2);
  for (std::size_t ti = 0; ti < 2; ++ti) {
    const auto& tr = ds.trajectories[ti];
    CHECK(tr.cmd.v_cmd == commands[ti].v_cmd);
    REQUIRE(tr.frames.size() == 25);  // record_steps - record_settle
    for (int s = 0; s < 25; ++s) {
      CHECK(tr.frames[static_cast<std::size_t>(s)].step_index == s);
      CHECK(tr.frames[static_cast<std::size_t>(s)].q.size() == model.n_joints());
      CHECK(tr.frames[static_cast<std::size_t>(s)].foot_z.size() == model.n_feet());
      CHECK(tr.frames[static_cast<std::size_t>(s)].ee_xz.size() == 2 * model.n_feet());
      CHECK(tr.frames[static_cast<std::size_t>(s)].v_cmd == commands[ti].v_cmd);
    }
  }

  SUBCASE("recording is deterministic") {
    const ImitationDataset again = record_imitation(policy, model, cfg, commands, "ck42");
    for (std::size_t ti = 0; ti < 2; ++ti)
      for (std::size_t s = 0; s < 25; ++s)
        CHECK((again.trajectories[ti].frames[s].q - ds.trajectories[ti].frames[s].q)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
  }

  SUBCASE("settle must leave room for frames") {
    cfg.record_settle = cfg.record_steps;
    CHECK_THROWS_AS(record_imitation(policy, model, cfg, commands, "x"), ConfigError);
  }
  SUBCASE("policies sized for another robot are rejected") {
    Rng rng2(32);
    const PolicyParameters wrong =
        make_policy(7, 1, {8}, 0.0, Eigen::VectorXd::Zero(7), Eigen::VectorXd::Ones(7), rng2);
    CHECK_THROWS_AS(record_imitation(wrong, model, cfg, commands, "x"), ConfigError);
  }
}
