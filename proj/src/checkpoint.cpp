#include "decap/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "decap/errors.hpp"

namespace decap {

namespace {

void put17(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

void put_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  out << "param " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      put17(out, m(r, c));
    }
    out << '\n';
  }
}

void put_vector(std::ostream& out, const std::string& name, const Eigen::VectorXd& v) {
  put_matrix(out, name, v);
}

struct Reader {
  std::istringstream in;
  std::string where;
  int line_no = 0;

  std::string next_line() {
    std::string line;
    if (!std::getline(in, line))
      throw RuntimeFailure("checkpoint: " + where + ": truncated after line " +
                           std::to_string(line_no));
    ++line_no;
    return line;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw RuntimeFailure("checkpoint: " + where + " line " + std::to_string(line_no) + ": " +
                         what);
  }

  Eigen::MatrixXd read_param(const std::string& expect_name) {
    std::istringstream hs(next_line());
    std::string tag, name;
    Eigen::Index rows = 0, cols = 0;
    hs >> tag >> name >> rows >> cols;
    if (!hs || tag != "param") fail("expected 'param " + expect_name + "'");
    if (name != expect_name) fail("expected parameter '" + expect_name + "', got '" + name + "'");
    if (rows <= 0 || cols <= 0) fail("bad shape for '" + name + "'");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      std::istringstream ls(next_line());
      for (Eigen::Index c = 0; c < cols; ++c)
        if (!(ls >> m(r, c))) fail("short row in '" + name + "'");
      std::string extra;
      if (ls >> extra) fail("trailing tokens in '" + name + "'");
    }
    return m;
  }
};

void put_net(std::ostream& out, const std::string& prefix, const Mlp& net) {
  for (int l = 0; l < net.n_layers(); ++l) {
    put_matrix(out, prefix + ".W" + std::to_string(l), net.W[static_cast<std::size_t>(l)]);
    put_vector(out, prefix + ".b" + std::to_string(l), net.b[static_cast<std::size_t>(l)]);
  }
}

Mlp read_net(Reader& rd, const std::string& prefix, int n_layers) {
  Mlp net;
  for (int l = 0; l < n_layers; ++l) {
    net.W.push_back(rd.read_param(prefix + ".W" + std::to_string(l)));
    net.b.push_back(rd.read_param(prefix + ".b" + std::to_string(l)).col(0));
  }
  return net;
}

}  // namespace

std::string checkpoint_to_text(const Checkpoint& ck) {
  std::ostringstream out;
  out << "decap-policy " << ck.format_version << '\n';
  out << "robot " << (ck.robot_name.empty() ? "-" : ck.robot_name) << '\n';
  out << "mode " << (ck.mode.empty() ? "-" : ck.mode) << '\n';
  out << "iterations " << ck.iterations << '\n';
  out << "layers " << ck.policy.actor.n_layers() << '\n';
  put_net(out, "actor", ck.policy.actor);
  put_net(out, "critic", ck.policy.critic);
  put_vector(out, "log_std", ck.policy.log_std);
  put_vector(out, "obs_shift", ck.policy.obs_shift);
  put_vector(out, "obs_scale", ck.policy.obs_scale);
  return out.str();
}

Checkpoint checkpoint_from_text(const std::string& text, const std::string& where) {
  Reader rd;
  rd.in.str(text);
  rd.where = where;

  Checkpoint ck;
  {
    std::istringstream hs(rd.next_line());
    std::string magic;
    hs >> magic >> ck.format_version;
    if (!hs || magic != "decap-policy") rd.fail("bad magic");
    if (ck.format_version != 1)
      rd.fail("unsupported format version " + std::to_string(ck.format_version));
  }
  auto read_kv = [&](const char* key) {
    std::istringstream hs(rd.next_line());
    std::string k, v;
    hs >> k >> v;
    if (!hs || k != key) rd.fail(std::string("expected '") + key + "'");
    return v == "-" ? std::string() : v;
  };
  auto read_int = [&](const char* key) {
    const std::string v = read_kv(key);
    try {
      return std::stoi(v);
    } catch (const std::exception&) {
      rd.fail(std::string("bad integer for '") + key + "'");
    }
  };
  ck.robot_name = read_kv("robot");
  ck.mode = read_kv("mode");
  ck.iterations = read_int("iterations");
  const int n_layers = read_int("layers");
  if (n_layers <= 0 || n_layers > 16) rd.fail("bad layer count");

  ck.policy.actor = read_net(rd, "actor", n_layers);
  ck.policy.critic = read_net(rd, "critic", n_layers);
  ck.policy.log_std = rd.read_param("log_std").col(0);
  ck.policy.obs_shift = rd.read_param("obs_shift").col(0);
  ck.policy.obs_scale = rd.read_param("obs_scale").col(0);

  if (ck.policy.critic.input_size() != ck.policy.actor.input_size() ||
      ck.policy.critic.output_size() != 1 ||
      ck.policy.log_std.size() != ck.policy.actor.output_size() ||
      ck.policy.obs_shift.size() != ck.policy.actor.input_size() ||
      ck.policy.obs_scale.size() != ck.policy.actor.input_size())
    rd.fail("inconsistent parameter shapes");
  ck.id = content_id(text);
  return ck;
}

std::string content_id(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const std::string text = checkpoint_to_text(ck);
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("checkpoint: cannot write '" + path + "'");
  out << text;
  if (!out) throw RuntimeFailure("checkpoint: write failed for '" + path + "'");
  return content_id(text);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("checkpoint: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_text(buf.str(), path);
}

}  // namespace decap
