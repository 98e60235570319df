#include "decap/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "decap/checkpoint.hpp"
#include "decap/errors.hpp"
#include "decap/export.hpp"
#include "decap/pipeline.hpp"
#include "decap/run_config.hpp"

namespace decap {

namespace {

using nlohmann::json;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string model_path;
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--config", c.config_path, "run config JSON");
  sub->add_option("--set", c.overrides, "dotted-key override, e.g. --set ppo.lr=1e-4")
      ->take_all();
  sub->add_option("--seed", c.seed, "RNG seed (overrides config)");
  sub->add_option("--model", c.model_path, "robot model file (overrides config)");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config: '" + path + "' is not valid JSON");
  return j;
}

RunConfig effective_config(const CommonOpts& c) {
  json j = c.config_path.empty() ? config_to_json(RunConfig{}) : read_json_file(c.config_path);
  for (const std::string& o : c.overrides) apply_override(j, o);
  RunConfig cfg = config_from_json(j);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.model_path.empty()) cfg.model_path = c.model_path;
  return cfg;
}

std::string out_root() {
  const char* env = std::getenv("DECAP_LAB_DIR");
  return env && *env ? env : "runs";
}

void make_parent_dirs(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

// Every config-consuming command records the effective config before doing
// work; training runs get theirs from ManifestWriter instead.
void write_config_sidecar(const std::string& path, const RunConfig& cfg) {
  make_parent_dirs(path);
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
  out << config_snapshot(cfg);
}

std::vector<double> parse_double_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string item = s.substr(start, comma == std::string::npos ? comma : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(flag + ": bad value '" + item + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::string> parse_string_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    out.push_back(s.substr(start, comma == std::string::npos ? comma : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s, const std::string& flag) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : parse_string_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(flag + ": bad value '" + item + "'");
    }
  }
  return out;
}

void print_train_summary(const TrainResult& res) {
  std::printf("run dir:      %s\n", res.run_dir.c_str());
  std::printf("checkpoint:   %s (id %s)\n", (res.run_dir + "/policy.ckpt").c_str(),
              res.checkpoint.id.c_str());
  if (!res.rows.empty())
    std::printf("final reward: %s per step\n", format_double(res.rows.back().mean_reward).c_str());
  if (!std::isnan(res.final_rmse))
    std::printf("final rmse:   %s rad (mean of last probes)\n",
                format_double(res.final_rmse).c_str());
}

int run_cli_inner(int argc, const char* const* argv) {
  CLI::App app{"planar legged locomotion lab: torque policies from decaying action priors"};
  app.require_subcommand(1);

  // ---- train-position ------------------------------------------------
  auto* train_pos = app.add_subcommand(
      "train-position", "stage 1: train a position-space policy with shaping rewards");
  CommonOpts tp_common;
  std::string tp_out;
  add_common(train_pos, tp_common);
  train_pos->add_option("--out", tp_out, "run output dir");
  train_pos->callback([&] {
    RunConfig cfg = effective_config(tp_common);
    cfg.out_dir = !tp_out.empty() ? tp_out : out_root() + "/" + cfg.run_name;
    const TrainResult res = train_position(cfg);
    print_train_summary(res);
  });

  // ---- record-imitation ----------------------------------------------
  auto* record = app.add_subcommand(
      "record-imitation", "roll out a frozen position policy and store tracked states");
  CommonOpts rec_common;
  std::string rec_ckpt, rec_out;
  add_common(record, rec_common);
  record->add_option("--checkpoint", rec_ckpt, "stage-1 position checkpoint")->required();
  record->add_option("--out", rec_out, "dataset output path (.imit)");
  record->callback([&] {
    RunConfig cfg = effective_config(rec_common);
    const std::string out = !rec_out.empty() ? rec_out : out_root() + "/imitation.imit";
    const Checkpoint ck = load_checkpoint(rec_ckpt);
    if (ck.mode != "position")
      throw ConfigError("record-imitation: checkpoint '" + rec_ckpt +
                        "' is a " + ck.mode + "-mode policy, need position");
    const RobotModel model = load_model(cfg.model_path);
    if (ck.robot_name != model.name)
      throw ConfigError("record-imitation: checkpoint robot '" + ck.robot_name +
                        "' does not match model '" + model.name + "'");
    write_config_sidecar(out + ".config.json", cfg);
    std::vector<Command> cmds;
    for (double v : cfg.record_commands) cmds.push_back(Command{v, 0.0});
    const ImitationDataset ds = record_imitation(ck.policy, model, cfg, cmds, ck.id);
    make_parent_dirs(out);
    save_dataset(ds, out);
    std::size_t frames = 0;
    for (const auto& tr : ds.trajectories) frames += tr.frames.size();
    std::printf("dataset:      %s\n", out.c_str());
    std::printf("trajectories: %zu (%zu frames)\n", ds.trajectories.size(), frames);
  });

  // ---- train-torque ---------------------------------------------------
  auto* train_tq = app.add_subcommand(
      "train-torque", "stage 2: train a torque-space policy (torque, decap or assisted)");
  CommonOpts tt_common;
  std::string tt_out, tt_mode, tt_imit, tt_pos_ckpt;
  add_common(train_tq, tt_common);
  train_tq->add_option("--out", tt_out, "run output dir");
  train_tq->add_option("--mode", tt_mode, "torque | decap | assisted");
  train_tq->add_option("--imitation", tt_imit, "imitation dataset (.imit)");
  train_tq->add_option("--position-checkpoint", tt_pos_ckpt,
                       "stage-1 checkpoint (assisted mode, provenance check)");
  train_tq->callback([&] {
    RunConfig cfg = effective_config(tt_common);
    if (cfg.action.mode == ActionMode::position && tt_mode.empty()) tt_mode = "torque";
    if (!tt_mode.empty()) cfg.action.mode = action_mode_from_string(tt_mode);
    if (!tt_imit.empty()) cfg.dataset_path = tt_imit;
    if (!tt_pos_ckpt.empty()) cfg.position_checkpoint = tt_pos_ckpt;
    cfg.out_dir = !tt_out.empty()
                      ? tt_out
                      : out_root() + "/" + cfg.run_name + "_" + to_string(cfg.action.mode);
    const TrainResult res = train_torque(cfg);
    print_train_summary(res);
  });

  // ---- evaluate ---------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate", "deterministic rollout metrics for a checkpoint");
  CommonOpts ev_common;
  std::string ev_ckpt, ev_imit, ev_pos_ckpt, ev_out;
  int ev_episodes = -1;
  add_common(eval, ev_common);
  eval->add_option("--checkpoint", ev_ckpt, "policy checkpoint to evaluate")->required();
  eval->add_option("--imitation", ev_imit, "reference dataset for joint RMSE");
  eval->add_option("--position-checkpoint", ev_pos_ckpt, "assist policy (assisted checkpoints)");
  eval->add_option("--episodes", ev_episodes, "episodes per command");
  eval->add_option("--out", ev_out, "metrics JSON output path");
  eval->callback([&] {
    RunConfig cfg = effective_config(ev_common);
    const Checkpoint ck = load_checkpoint(ev_ckpt);
    cfg.action.mode = action_mode_from_string(ck.mode);  // env must match the policy
    if (ev_episodes >= 0) cfg.eval_episodes = ev_episodes;
    if (!ev_imit.empty()) cfg.dataset_path = ev_imit;
    if (!ev_pos_ckpt.empty()) cfg.position_checkpoint = ev_pos_ckpt;
    const RobotModel model = load_model(cfg.model_path);
    std::optional<ImitationDataset> ref;
    if (!cfg.dataset_path.empty()) ref = load_dataset(cfg.dataset_path);
    std::optional<Checkpoint> assist;
    if (cfg.action.mode == ActionMode::assisted) {
      if (cfg.position_checkpoint.empty())
        throw ConfigError("evaluate: assisted checkpoint needs --position-checkpoint");
      assist = load_checkpoint(cfg.position_checkpoint);
    }
    const std::string out = !ev_out.empty() ? ev_out : out_root() + "/eval.json";
    write_config_sidecar(out + ".config.json", cfg);
    const EvalMetrics m = evaluate_policy(ck.policy, model, cfg, ref ? &*ref : nullptr,
                                          assist ? &assist->policy : nullptr);
    const std::string body = eval_to_json(m).dump(2) + "\n";
    std::ofstream of(out);
    if (!of) throw RuntimeFailure("evaluate: cannot write '" + out + "'");
    of << body;
    std::fputs(body.c_str(), stdout);
  });

  // ---- sweep ------------------------------------------------------------
  auto* sweep = app.add_subcommand(
      "sweep", "imitation-scale x mode x seed grid of stage-2 runs");
  CommonOpts sw_common;
  std::string sw_out, sw_imit, sw_pos_ckpt;
  std::string sw_scales = "0.5,1,5,10", sw_modes = "imitation,decap", sw_seeds = "1,2,3";
  int sw_jobs = 1;
  add_common(sweep, sw_common);
  sweep->add_option("--out", sw_out, "sweep output dir");
  sweep->add_option("--imitation", sw_imit, "imitation dataset (.imit)");
  sweep->add_option("--position-checkpoint", sw_pos_ckpt, "stage-1 checkpoint (provenance)");
  sweep->add_option("--scales", sw_scales, "comma-separated imitation scales");
  sweep->add_option("--modes", sw_modes, "comma-separated modes (imitation,decap)");
  sweep->add_option("--seeds", sw_seeds, "comma-separated seeds");
  sweep->add_option("--jobs", sw_jobs, "max parallel cells");
  sweep->callback([&] {
    RunConfig base = effective_config(sw_common);
    if (!sw_imit.empty()) base.dataset_path = sw_imit;
    if (!sw_pos_ckpt.empty()) base.position_checkpoint = sw_pos_ckpt;
    const std::string out = !sw_out.empty() ? sw_out : out_root() + "/sweep";
    if (sw_jobs < 1) throw ConfigError("sweep: --jobs must be >= 1");
    if (sw_jobs > 1)
      std::fprintf(stderr, "note: --jobs %d requested; cells run sequentially\n", sw_jobs);
    std::filesystem::create_directories(out);
    write_config_sidecar(out + "/sweep_config.json", base);
    const SweepTable table =
        run_sweep(base, parse_double_list(sw_scales, "--scales"), parse_string_list(sw_modes),
                  parse_seed_list(sw_seeds, "--seeds"), out);
    int ok = 0;
    for (const SweepCell& c : table.cells) ok += c.status == "ok";
    std::printf("sweep table:  %s/sweep.csv (%zu cells, %d ok)\n", out.c_str(),
                table.cells.size(), ok);
  });

  // ---- export -------------------------------------------------------------
  auto* exp = app.add_subcommand("export", "render a stored run artifact as CSV");
  std::string ex_run, ex_what, ex_out;
  exp->add_option("--run", ex_run, "training run dir (sweep dir for rmse-table)")->required();
  exp->add_option("--what", ex_what,
                  "learning-curve | reward-breakdown | gait-trace | rmse-table")
      ->required();
  exp->add_option("--out", ex_out, "CSV output path");
  exp->callback([&] {
    const std::string out = !ex_out.empty() ? ex_out : ex_run + "/" + ex_what + ".csv";
    make_parent_dirs(out);
    export_view(ex_run, ex_what, out);
    std::printf("wrote %s\n", out.c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  try {
    return run_cli_inner(argc, argv);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const RuntimeFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace decap
