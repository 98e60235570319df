#include "decap/robot_model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "decap/errors.hpp"
#include <nlohmann/json.hpp>

namespace decap {

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError("model: missing field " + ctx + key);
  if (!j.at(key).is_number()) throw ConfigError("model: field " + ctx + key + " must be a number");
  return j.at(key).get<double>();
}

std::string require_string(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError("model: missing field " + ctx + key);
  if (!j.at(key).is_string()) throw ConfigError("model: field " + ctx + key + " must be a string");
  return j.at(key).get<std::string>();
}

Eigen::VectorXd require_vector(const json& j, const std::string& key, int n, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError("model: missing field " + ctx + key);
  const json& a = j.at(key);
  if (!a.is_array()) throw ConfigError("model: field " + ctx + key + " must be an array");
  if (static_cast<int>(a.size()) != n) {
    throw ConfigError("model: field " + ctx + key + " must have length " + std::to_string(n));
  }
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = a.at(i).get<double>();
  return v;
}

}  // namespace

void RobotModel::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("model validation: " + field + " " + why);
  };
  const int n = n_joints();
  if (name.empty()) fail("name", "must be non-empty");
  if (n < 1) fail("links", "must contain at least one link");
  if (n > 8) fail("links", "supports at most 8 links");
  if (gravity < 0.0) fail("gravity", "must be >= 0");
  if (base_mass <= 0.0) fail("base.mass", "must be > 0");
  if (base_inertia <= 0.0) fail("base.inertia", "must be > 0");
  if (base_half_length <= 0.0) fail("base.half_length", "must be > 0");
  for (int i = 0; i < n; ++i) {
    const std::string ctx = "links[" + std::to_string(i) + "].";
    const LinkSpec& l = links[i];
    if (l.mass <= 0.0) fail(ctx + "mass", "must be > 0");
    if (l.length <= 0.0) fail(ctx + "length", "must be > 0");
    if (l.inertia < 0.0) fail(ctx + "inertia", "must be >= 0");
    if (l.damping < 0.0) fail(ctx + "damping", "must be >= 0");
    if (l.com_ratio < 0.0 || l.com_ratio > 1.0) fail(ctx + "com_ratio", "must be in [0, 1]");
    if (l.parent < -1 || l.parent >= i) fail(ctx + "parent", "must be -1 or an earlier link index");
  }
  auto check_len = [&](const Eigen::VectorXd& v, const std::string& field) {
    if (static_cast<int>(v.size()) != n) fail(field, "length must equal the number of links");
  };
  check_len(torque_limits, "torque_limits");
  check_len(joint_lower, "joint_limits.lower");
  check_len(joint_upper, "joint_limits.upper");
  check_len(q_nom, "nominal_pose");
  for (int i = 0; i < n; ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    if (torque_limits[i] <= 0.0) fail("torque_limits" + idx, "must be > 0");
    if (joint_lower[i] > joint_upper[i]) fail("joint_limits" + idx, "lower must be <= upper");
    if (q_nom[i] < joint_lower[i] || q_nom[i] > joint_upper[i]) {
      fail("nominal_pose" + idx, "must lie within joint_limits");
    }
  }
  if (contact.k_n <= 0.0) fail("contact.k_n", "must be > 0");
  if (contact.c_n < 0.0) fail("contact.c_n", "must be >= 0");
  if (contact.k_t < 0.0) fail("contact.k_t", "must be >= 0");
  if (contact.mu < 0.0) fail("contact.mu", "must be >= 0");
  if (feet.empty()) fail("feet", "must name at least one link");
  for (std::size_t i = 0; i < feet.size(); ++i) {
    if (feet[i] < 0 || feet[i] >= n) {
      fail("feet[" + std::to_string(i) + "]", "must be a valid link index");
    }
  }
  if (h_nom <= 0.0) fail("h_nom", "must be > 0");
}

RobotModel model_from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("model: " + origin + " is not valid JSON: " + e.what());
  }
  RobotModel m;
  if (!j.contains("format_version")) throw ConfigError("model: missing field format_version");
  m.format_version = j.at("format_version").get<int>();
  if (m.format_version != 1) {
    throw ConfigError("model: unsupported format_version " + std::to_string(m.format_version));
  }
  m.name = require_string(j, "name", "");
  m.gravity = require_number(j, "gravity", "");

  if (!j.contains("base") || !j.at("base").is_object()) {
    throw ConfigError("model: missing field base");
  }
  const json& base = j.at("base");
  m.base_mass = require_number(base, "mass", "base.");
  m.base_inertia = require_number(base, "inertia", "base.");
  m.base_half_length = require_number(base, "half_length", "base.");
  m.base_fixed = base.value("fixed", false);

  if (!j.contains("links") || !j.at("links").is_array() || j.at("links").empty()) {
    throw ConfigError("model: missing field links");
  }
  const json& links = j.at("links");
  const int n = static_cast<int>(links.size());
  m.links.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::string ctx = "links[" + std::to_string(i) + "].";
    const json& l = links.at(i);
    LinkSpec& spec = m.links[i];
    spec.name = require_string(l, "name", ctx);
    spec.mass = require_number(l, "mass", ctx);
    spec.length = require_number(l, "length", ctx);
    spec.inertia = require_number(l, "inertia", ctx);
    spec.damping = require_number(l, "damping", ctx);
    spec.com_ratio = l.value("com_ratio", 0.5);
    if (!l.contains("parent")) throw ConfigError("model: missing field " + ctx + "parent");
    spec.parent = l.at("parent").get<int>();
    const Eigen::VectorXd attach = require_vector(l, "attach", 2, ctx);
    spec.attach = Eigen::Vector2d(attach[0], attach[1]);
  }

  m.torque_limits = require_vector(j, "torque_limits", n, "");
  if (!j.contains("joint_limits") || !j.at("joint_limits").is_object()) {
    throw ConfigError("model: missing field joint_limits");
  }
  m.joint_lower = require_vector(j.at("joint_limits"), "lower", n, "joint_limits.");
  m.joint_upper = require_vector(j.at("joint_limits"), "upper", n, "joint_limits.");
  m.q_nom = require_vector(j, "nominal_pose", n, "");

  if (!j.contains("contact") || !j.at("contact").is_object()) {
    throw ConfigError("model: missing field contact");
  }
  const json& c = j.at("contact");
  m.contact.k_n = require_number(c, "k_n", "contact.");
  m.contact.c_n = require_number(c, "c_n", "contact.");
  m.contact.k_t = require_number(c, "k_t", "contact.");
  m.contact.mu = require_number(c, "mu", "contact.");

  if (!j.contains("feet") || !j.at("feet").is_array()) {
    throw ConfigError("model: missing field feet");
  }
  for (const auto& f : j.at("feet")) m.feet.push_back(f.get<int>());
  m.h_nom = require_number(j, "h_nom", "");

  m.validate();
  return m;
}

std::string model_to_json_text(const RobotModel& m) {
  json j;
  j["format_version"] = m.format_version;
  j["name"] = m.name;
  j["gravity"] = m.gravity;
  j["base"] = {{"mass", m.base_mass},
               {"inertia", m.base_inertia},
               {"half_length", m.base_half_length},
               {"fixed", m.base_fixed}};
  json links = json::array();
  for (const LinkSpec& l : m.links) {
    links.push_back({{"name", l.name},
                     {"mass", l.mass},
                     {"length", l.length},
                     {"inertia", l.inertia},
                     {"damping", l.damping},
                     {"com_ratio", l.com_ratio},
                     {"parent", l.parent},
                     {"attach", {l.attach[0], l.attach[1]}}});
  }
  j["links"] = links;
  auto to_array = [](const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
  };
  j["torque_limits"] = to_array(m.torque_limits);
  j["joint_limits"] = {{"lower", to_array(m.joint_lower)}, {"upper", to_array(m.joint_upper)}};
  j["nominal_pose"] = to_array(m.q_nom);
  j["contact"] = {{"k_n", m.contact.k_n},
                  {"c_n", m.contact.c_n},
                  {"k_t", m.contact.k_t},
                  {"mu", m.contact.mu}};
  j["feet"] = m.feet;
  j["h_nom"] = m.h_nom;
  return j.dump(2) + "\n";
}

RobotModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("model: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json_text(buf.str(), path);
}

void save_model(const RobotModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("model: cannot write " + path);
  out << model_to_json_text(model);
}

}  // namespace decap
